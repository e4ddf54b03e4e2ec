#include <random>

#include <gtest/gtest.h>

#include "tsgatr/oracles.hpp"
#include "test_support.hpp"
#include "tsgatr/graph.hpp"

namespace tsgatr {
namespace {

std::vector<int> neighbours(const Adjacency& a, Index i) {
  std::vector<int> out;
  for (Index j = 0; j < a.nodes(); ++j)
    if (a.structure(i, j) != 0.0) out.push_back(static_cast<int>(j));
  return out;
}

TEST(KStep, SingleStrokeExample) {
  std::vector<int> flags = {1, 0, 0, 0, 2};
  auto a = build_kstep(flags, 2);
  EXPECT_EQ(neighbours(a, 0), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(neighbours(a, 2), (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(a.weights, a.structure);
  EXPECT_EQ(a.kind, GraphKind::kStep);
}

TEST(KStep, StrokesIsolated) {
  std::vector<int> flags = {1, 2, 1, 2};
  for (int k : {1, 2, 5}) {
    auto a = build_kstep(flags, k);
    for (Index i : {0, 1})
      for (Index j : {2, 3}) {
        EXPECT_EQ(a.structure(i, j), 0.0);
        EXPECT_EQ(a.structure(j, i), 0.0);
      }
  }
}

TEST(KStep, RejectsBadK) {
  std::vector<int> flags = {1, 2};
  EXPECT_THROW(build_kstep(flags, 0), Error);
}

TEST(Knn, CollinearTieBreak) {
  Matrix c(3, 2);
  c << 0, 0, 1, 0, 2, 0;
  auto a = build_knn(c, 1);
  EXPECT_EQ(neighbours(a, 0), (std::vector<int>{0, 1}));
  EXPECT_EQ(neighbours(a, 1), (std::vector<int>{0, 1}));
  EXPECT_EQ(neighbours(a, 2), (std::vector<int>{1, 2}));
  EXPECT_EQ(a.kind, GraphKind::kNearest);
}

TEST(Knn, SaturatesToComplete) {
  std::mt19937_64 rng(1);
  Matrix c = testing::random_matrix(rng, 6, 2);
  auto a = build_knn(c, 5);
  EXPECT_EQ(a.structure, Matrix::Ones(6, 6));
  EXPECT_EQ(build_knn(c, 50).structure, Matrix::Ones(6, 6));
}

TEST(Knn, SymmetricOption) {
  std::mt19937_64 rng(4);
  Matrix c = testing::random_matrix(rng, 9, 2);
  auto a = build_knn(c, 2, true);
  EXPECT_EQ(a.structure, a.structure.transpose());
  EXPECT_EQ(a.structure, oracle::knn_structure(c, 2, true));
}

TEST(GraphProperties, MatchBruteForce) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    auto raw = testing::random_signature(rng, 1 + trial % 3, 4);
    if (raw.size() > 10) raw = testing::make_signature({{{0, 0}, {1, 2}, {3, 3}}, {{1, 0}, {2, 2}}});
    const auto flags = raw.flags();
    Matrix coords(static_cast<Index>(raw.size()), 2);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      // Coarse grid so that distance ties are common.
      coords(static_cast<Index>(i), 0) = std::floor(raw.points[i].x / 100.0);
      coords(static_cast<Index>(i), 1) = std::floor(raw.points[i].y / 100.0);
    }
    const int k = 1 + trial % 4;
    auto step = build_kstep(flags, k);
    ASSERT_EQ(step.structure, oracle::kstep_structure(flags, k)) << trial;
    ASSERT_EQ(step.structure, step.structure.transpose());
    auto knn = build_knn(coords, k);
    ASSERT_EQ(knn.structure, oracle::knn_structure(coords, k, false)) << trial;
    const Index l = knn.nodes();
    for (Index i = 0; i < l; ++i) {
      ASSERT_EQ(knn.structure(i, i), 1.0);
      ASSERT_EQ(knn.structure.row(i).sum() - 1.0, static_cast<double>(std::min<Index>(k, l - 1)));
    }
  }
}

TEST(GraphProperties, KnnSimilarityInvariant) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix c = (testing::random_matrix(rng, 10, 2) * 8.0).array().floor();
    Matrix moved = (c * 4.0).array() + 3.0;
    ASSERT_EQ(build_knn(c, 3).structure, build_knn(moved, 3).structure);
  }
}

}  // namespace
}  // namespace tsgatr
