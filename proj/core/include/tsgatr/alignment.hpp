#pragma once

#include <utility>
#include <vector>

#include "tsgatr/common.hpp"
#include "tsgatr/tape.hpp"

namespace tsgatr {

struct AlignmentResult {
  /// Sum of squared Euclidean distances along the optimal warping path.
  double cost = 0.0;
  /// 0-based (t, s) pairs from (0, 0) to (L1 - 1, L2 - 1).
  std::vector<std::pair<Index, Index>> path;
  /// cost / (L1 + L2)
  double normalized = 0.0;
};

/// L1 x L2 matrix of squared Euclidean distances between rows.
Matrix pairwise_sq_distances(const Matrix& x, const Matrix& y);

/// Exact DTW with moves (1,0), (0,1), (1,1). The backtrace prefers the
/// diagonal, then a step in X, then a step in Y when predecessors tie.
AlignmentResult dtw_distance(const Matrix& x, const Matrix& y);

struct AlignmentGradient {
  Matrix dx;
  Matrix dy;
};

/// Subgradient of the (unnormalized) DTW cost along the backtraced path.
AlignmentGradient dtw_grad(const Matrix& x, const Matrix& y);

/// Soft-DTW cost: the DTW recursion with min replaced by the soft minimum
/// -gamma * log(sum(exp(-a / gamma))). Can undershoot 0.
double soft_dtw(const Matrix& x, const Matrix& y, double gamma);
AlignmentGradient soft_dtw_grad(const Matrix& x, const Matrix& y, double gamma);

enum class DistanceKind { kHard, kSoft };

struct DistanceOptions {
  DistanceKind kind = DistanceKind::kHard;
  double soft_gamma = 1.0;
};

/// Length-normalized alignment distance, cost / (L1 + L2).
double alignment_distance(const Matrix& x, const Matrix& y, const DistanceOptions& options = {});

/// Differentiable 1x1 node holding alignment_distance(x, y).
ad::Var alignment_distance(ad::Var x, ad::Var y, const DistanceOptions& options = {});

}  // namespace tsgatr
