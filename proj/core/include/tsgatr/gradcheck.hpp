#pragma once

#include <cstdint>
#include <functional>

#include "tsgatr/params.hpp"

namespace tsgatr {

/// Evaluates a scalar function of the parameters. When `grad` is non-null
/// it must also be filled with the analytic gradient (same layout).
using DifferentiableFn = std::function<double(const ParameterStore& point, ParameterStore* grad)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// Check at most this many coordinates (a seeded random subset, never
  /// fewer than 200). 0 checks every coordinate.
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
  /// A coordinate is treated as sitting on a kink (relu at 0, a max or DTW
  /// path tie) when the two one-sided slopes disagree by more than this
  /// relative amount; such coordinates are skipped and counted.
  double kink_tolerance = 1e-2;
  /// A coordinate is also treated as a kink when the central differences at
  /// `step` and `step / 2` disagree by more than this relative amount. Both
  /// estimate the same derivative on smooth functions, so this never hides a
  /// wrong analytic gradient.
  double refinement_tolerance = 1e-6;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  std::size_t worst_coordinate = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares the analytic gradient to central differences. Relative error
/// per coordinate is |a - n| / max(1e-8, |a| + |n|).
GradCheckResult grad_check(const DifferentiableFn& f, const ParameterStore& point,
                           const GradCheckOptions& options = {});

}  // namespace tsgatr
