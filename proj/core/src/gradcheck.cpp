#include "tsgatr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tsgatr {

GradCheckResult grad_check(const DifferentiableFn& f, const ParameterStore& point, const GradCheckOptions& options) {
  ParameterStore grad = point.zeros_like();
  const double f0 = f(point, &grad);
  if (!std::isfinite(f0)) throw Error("grad_check: function value is not finite");

  const std::size_t total = point.scalar_count();
  std::vector<std::size_t> coords(total);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (options.max_coordinates != 0 && total > std::max<std::size_t>(options.max_coordinates, 200)) {
    std::mt19937_64 rng(derive_seed(options.seed, "grad_check"));
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::max<std::size_t>(options.max_coordinates, 200));
    std::sort(coords.begin(), coords.end());
  }

  const auto analytic = grad.to_flat();
  GradCheckResult result;
  ParameterStore probe = point;
  const double h = options.step;
  for (std::size_t i : coords) {
    const double x0 = point.flat(i);
    probe.set_flat(i, x0 + h);
    const double fp = f(probe, nullptr);
    probe.set_flat(i, x0 - h);
    const double fm = f(probe, nullptr);
    probe.set_flat(i, x0);
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw Error("grad_check: function value is not finite");

    const double right = (fp - f0) / h;
    const double left = (f0 - fm) / h;
    if (std::abs(right - left) > options.kink_tolerance * std::max({1.0, std::abs(right), std::abs(left)})) {
      ++result.skipped_kinks;
      continue;
    }
    const double numeric = (fp - fm) / (2.0 * h);
    probe.set_flat(i, x0 + 0.5 * h);
    const double fph = f(probe, nullptr);
    probe.set_flat(i, x0 - 0.5 * h);
    const double fmh = f(probe, nullptr);
    probe.set_flat(i, x0);
    const double refined = (fph - fmh) / h;
    const double noise = 1e-9 * std::max(1.0, std::abs(f0));
    if (std::abs(refined - numeric) > options.refinement_tolerance * (std::abs(refined) + std::abs(numeric)) + noise) {
      ++result.skipped_kinks;
      continue;
    }
    const double a = analytic[i];
    const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    ++result.checked;
    if (err >= result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_coordinate = i;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace tsgatr
