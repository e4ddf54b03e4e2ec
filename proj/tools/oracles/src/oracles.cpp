#include "tsgatr/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <tuple>
#include <utility>

namespace tsgatr::oracle {

namespace {

double cell(const Matrix& x, const Matrix& y, Index i, Index j) {
  double s = 0.0;
  for (Index c = 0; c < x.cols(); ++c) {
    const double d = x(i, c) - y(j, c);
    s += d * d;
  }
  return s;
}

void walk(const Matrix& x, const Matrix& y, Index i, Index j, double prefix, double& best) {
  const double here = prefix + cell(x, y, i, j);
  if (i == x.rows() - 1 && j == y.rows() - 1) {
    best = std::min(best, here);
    return;
  }
  if (i + 1 < x.rows()) walk(x, y, i + 1, j, here, best);
  if (j + 1 < y.rows()) walk(x, y, i, j + 1, here, best);
  if (i + 1 < x.rows() && j + 1 < y.rows()) walk(x, y, i + 1, j + 1, here, best);
}

}  // namespace

double dtw_enumerate(const Matrix& x, const Matrix& y) {
  if (x.rows() < 1 || y.rows() < 1 || x.cols() != y.cols()) throw Error("dtw_enumerate: bad shapes");
  double best = std::numeric_limits<double>::infinity();
  walk(x, y, 0, 0, 0.0, best);
  return best;
}

long long count_monotone_paths(Index l1, Index l2) {
  std::vector<std::vector<long long>> n(static_cast<std::size_t>(l1), std::vector<long long>(static_cast<std::size_t>(l2), 0));
  for (Index i = 0; i < l1; ++i)
    for (Index j = 0; j < l2; ++j) {
      auto& v = n[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (i == 0 && j == 0) {
        v = 1;
        continue;
      }
      if (i > 0) v += n[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
      if (j > 0) v += n[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)];
      if (i > 0 && j > 0) v += n[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
    }
  return n.back().back();
}

Matrix kstep_structure(std::span<const int> flags, int k) {
  const auto n = static_cast<Index>(flags.size());
  std::vector<int> stroke(flags.size(), -1);
  int current = -1;
  bool open = false;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == 1) {
      ++current;
      open = true;
    }
    if (!open) throw Error("kstep_structure: point outside a stroke");
    stroke[i] = current;
    if (flags[i] == 2) open = false;
  }
  Matrix s = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (stroke[static_cast<std::size_t>(i)] == stroke[static_cast<std::size_t>(j)] && std::abs(i - j) <= k)
        s(i, j) = 1.0;
  return s;
}

Matrix knn_structure(const Matrix& coords, int k, bool symmetric) {
  const Index n = coords.rows();
  Matrix s = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Index>> cand;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = coords(i, 0) - coords(j, 0);
      const double dy = coords(i, 1) - coords(j, 1);
      cand.emplace_back(dx * dx + dy * dy, j);
    }
    std::sort(cand.begin(), cand.end());
    s(i, i) = 1.0;
    for (std::size_t r = 0; r < cand.size() && r < static_cast<std::size_t>(k); ++r) s(i, cand[r].second) = 1.0;
  }
  if (symmetric)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (s(i, j) == 1.0) s(j, i) = 1.0;
  return s;
}

EerPoint eer_sweep(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  std::vector<double> all = genuine;
  all.insert(all.end(), impostor.begin(), impostor.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> thresholds = all;
  for (std::size_t k = 1; k < all.size(); ++k) thresholds.push_back(0.5 * (all[k - 1] + all[k]));

  // Rates compared as exact fractions over ng * ni: (|FAR - FRR|, FAR + FRR, t).
  const long long ng = static_cast<long long>(genuine.size()), ni = static_cast<long long>(impostor.size());
  std::tuple<long long, long long, double> best{std::numeric_limits<long long>::max(), 0, 0.0};
  EerPoint point;
  for (double t : thresholds) {
    long long rejected = 0, accepted = 0;
    for (double g : genuine) rejected += g > t ? 1 : 0;
    for (double f : impostor) accepted += f <= t ? 1 : 0;
    const auto key = std::make_tuple(std::llabs(accepted * ng - rejected * ni), accepted * ng + rejected * ni, t);
    if (key < best) {
      best = key;
      const double far = static_cast<double>(accepted) / static_cast<double>(ni);
      const double frr = static_cast<double>(rejected) / static_cast<double>(ng);
      point = {0.5 * (far + frr), t};
    }
  }
  return point;
}

}  // namespace tsgatr::oracle
