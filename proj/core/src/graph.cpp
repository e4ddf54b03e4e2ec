#include "tsgatr/graph.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "tsgatr/signal.hpp"

namespace tsgatr {

Adjacency build_kstep(std::span<const int> flags, int k) {
  if (k < 1) throw Error("k-step graph needs k >= 1");
  const auto spans = stroke_spans(flags);
  const auto n = static_cast<Index>(flags.size());
  Adjacency adj;
  adj.kind = GraphKind::kStep;
  adj.structure = Matrix::Zero(n, n);
  for (const auto& s : spans) {
    for (auto i = s.begin; i < s.end; ++i) {
      auto lo = i >= s.begin + static_cast<std::size_t>(k) ? i - static_cast<std::size_t>(k) : s.begin;
      auto hi = std::min(s.end, i + static_cast<std::size_t>(k) + 1);
      for (auto j = lo; j < hi; ++j) adj.structure(static_cast<Index>(i), static_cast<Index>(j)) = 1.0;
    }
  }
  adj.weights = adj.structure;
  return adj;
}

Adjacency build_knn(const Matrix& coords, int k, bool symmetric) {
  if (k < 1) throw Error("k-NN graph needs k >= 1");
  if (coords.cols() != 2) throw Error("k-NN graph expects L x 2 coordinates");
  const Index n = coords.rows();
  Adjacency adj;
  adj.kind = GraphKind::kNearest;
  adj.structure = Matrix::Zero(n, n);
  const Index keep = std::min<Index>(k, n - 1);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double ddx = coords(i, 0) - coords(j, 0);
      const double ddy = coords(i, 1) - coords(j, 1);
      dist[static_cast<std::size_t>(j)] = ddx * ddx + ddy * ddy;
    }
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + keep, order.end(), [&](Index a, Index b) {
      const double da = dist[static_cast<std::size_t>(a)], db = dist[static_cast<std::size_t>(b)];
      return da < db || (da == db && a < b);
    });
    adj.structure(i, i) = 1.0;
    for (Index r = 0; r < keep; ++r) adj.structure(i, order[static_cast<std::size_t>(r)]) = 1.0;
  }
  if (symmetric) adj.structure = adj.structure.cwiseMax(adj.structure.transpose()).eval();
  adj.weights = adj.structure;
  return adj;
}

}  // namespace tsgatr
