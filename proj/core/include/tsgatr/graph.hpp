#pragma once

#include <span>

#include "tsgatr/common.hpp"

namespace tsgatr {

enum class GraphKind { kStep, kNearest };

/// Structural prior over the L signature points plus the edge weights that
/// the attention layers refine. `weights` starts as a copy of `structure`
/// and stays zero wherever structure is zero.
struct Adjacency {
  Matrix structure;
  Matrix weights;
  GraphKind kind = GraphKind::kStep;

  Index nodes() const { return structure.rows(); }
};

/// Connects i and j when they lie in the same stroke and |i - j| <= k.
/// Self-loops are part of the definition.
Adjacency build_kstep(std::span<const int> flags, int k);

/// Directed k-nearest-neighbour graph over (x, y): row i links to the k
/// points closest to i (lower index wins ties) plus a self-loop. With
/// `symmetric` the structure is or-ed with its transpose.
Adjacency build_knn(const Matrix& coords, int k, bool symmetric = false);

}  // namespace tsgatr
