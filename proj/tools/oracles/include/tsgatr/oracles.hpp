#pragma once

#include <span>
#include <vector>

#include "tsgatr/common.hpp"

/// Slow, independent reference implementations used to cross-check the core
/// library. They favour obviousness over speed and share no code with it.
namespace tsgatr::oracle {

/// Minimum cost over every monotone alignment path, enumerated recursively
/// from (0, 0). Cell cost is the squared Euclidean distance.
double dtw_enumerate(const Matrix& x, const Matrix& y);

/// Number of monotone paths from (0, 0) to (L1-1, L2-1).
long long count_monotone_paths(Index l1, Index l2);

/// k-step structure from first principles: a stroke id per point, then
/// same-stroke and |i - j| <= k.
Matrix kstep_structure(std::span<const int> flags, int k);

/// k-NN structure by fully sorting (distance, index) pairs for every row.
Matrix knn_structure(const Matrix& coords, int k, bool symmetric);

struct EerPoint {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Exhaustive sweep over every distinct score and every midpoint between
/// consecutive distinct scores, counting rates directly.
EerPoint eer_sweep(const std::vector<double>& genuine, const std::vector<double>& impostor);

}  // namespace tsgatr::oracle
