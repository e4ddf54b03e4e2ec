#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsgatr/alignment.hpp"
#include "tsgatr/oracles.hpp"
#include "tsgatr/tape.hpp"

namespace tsgatr {
namespace {

using testing::random_matrix;

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

TEST(Dtw, IdenticalSequences) {
  std::mt19937_64 rng(1);
  Matrix x = random_matrix(rng, 5, 3);
  auto r = dtw_distance(x, x);
  EXPECT_EQ(r.cost, 0.0);
  ASSERT_EQ(r.path.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.path[i], (std::pair<Index, Index>(i, i)));
  auto g = dtw_grad(x, x);
  EXPECT_EQ(g.dx, Matrix::Zero(5, 3));
  EXPECT_EQ(g.dy, Matrix::Zero(5, 3));
}

TEST(Dtw, SingleCell) {
  Matrix x(1, 2), y(1, 2);
  x << 1, 2;
  y << 4, -2;
  auto r = dtw_distance(x, y);
  EXPECT_EQ(r.cost, 25.0);
  EXPECT_EQ(r.normalized, 12.5);
  EXPECT_EQ(dtw_grad(x, y).dx, 2 * (x - y));
  EXPECT_EQ(dtw_grad(x, y).dy, 2 * (y - x));
}

TEST(Dtw, WorkedScalarExample) {
  auto r = dtw_distance(col({0, 1, 2}), col({0, 2}));
  EXPECT_EQ(r.cost, 1.0);
  EXPECT_EQ(r.cost, oracle::dtw_enumerate(col({0, 1, 2}), col({0, 2})));
  EXPECT_DOUBLE_EQ(r.normalized, 0.2);
}

TEST(Dtw, Errors) {
  EXPECT_THROW(dtw_distance(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), Error);
  EXPECT_THROW(dtw_distance(Matrix::Zero(0, 2), Matrix::Zero(2, 2)), Error);
}

TEST(DtwProperties, MatchesEnumerationAndPathContract) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 1 + trial % 3;
    Matrix x = random_matrix(rng, 1 + trial % 6, d), y = random_matrix(rng, 1 + (trial / 6) % 6, d);
    auto r = dtw_distance(x, y);
    ASSERT_NEAR(r.cost, oracle::dtw_enumerate(x, y), 1e-9);
    ASSERT_GE(r.cost, 0.0);
    ASSERT_EQ(r.path.front(), (std::pair<Index, Index>(0, 0)));
    ASSERT_EQ(r.path.back(), (std::pair<Index, Index>(x.rows() - 1, y.rows() - 1)));
    double along = 0.0;
    for (std::size_t k = 0; k < r.path.size(); ++k) {
      along += (x.row(r.path[k].first) - y.row(r.path[k].second)).squaredNorm();
      if (k > 0) {
        const Index dt = r.path[k].first - r.path[k - 1].first, ds = r.path[k].second - r.path[k - 1].second;
        ASSERT_TRUE((dt == 1 || dt == 0) && (ds == 1 || ds == 0) && dt + ds > 0);
      }
    }
    ASSERT_NEAR(along, r.cost, 1e-12);
    ASSERT_NEAR(dtw_distance(y, x).cost, r.cost, 1e-12);
  }
}

TEST(DtwProperties, ZeroCostOnlyForMatchingPoints) {
  Matrix x = col({1, 1, 2, 3}), y = col({1, 2, 2, 3, 3});
  EXPECT_EQ(dtw_distance(x, y).cost, 0.0);
  EXPECT_GT(dtw_distance(x, col({1, 2, 4})).cost, 0.0);
}

TEST(SoftDtw, ConvergesToHardDtw) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x = random_matrix(rng, 1 + trial % 5, 2), y = random_matrix(rng, 1 + (trial / 5) % 5, 2);
    EXPECT_NEAR(soft_dtw(x, y, 1e-6), dtw_distance(x, y).cost, 1e-3);
  }
}

TEST(SoftDtw, UndershootsOnIdenticalAndRejectsGamma) {
  std::mt19937_64 rng(4);
  Matrix x = random_matrix(rng, 4, 2);
  EXPECT_LE(soft_dtw(x, x, 1.0), 0.0);
  EXPECT_THROW(soft_dtw(x, x, 0.0), Error);
  EXPECT_THROW(soft_dtw_grad(x, x, -1.0), Error);
}

TEST(AlignmentVar, HardMatchesNormalizedPathGradient) {
  std::mt19937_64 rng(5);
  Matrix xv = random_matrix(rng, 4, 3), yv = random_matrix(rng, 6, 3);
  ad::Tape t;
  auto x = t.variable(xv), y = t.variable(yv);
  auto d = alignment_distance(x, y);
  EXPECT_EQ(d.scalar(), dtw_distance(xv, yv).normalized);
  t.backward(d);
  auto g = dtw_grad(xv, yv);
  EXPECT_TRUE(t.gradient(x).isApprox(g.dx / 10.0, 1e-14));
  EXPECT_TRUE(t.gradient(y).isApprox(g.dy / 10.0, 1e-14));
}

TEST(AlignmentVar, SoftOption) {
  std::mt19937_64 rng(6);
  Matrix xv = random_matrix(rng, 3, 2), yv = random_matrix(rng, 5, 2);
  DistanceOptions opt{DistanceKind::kSoft, 0.5};
  ad::Tape t;
  auto x = t.variable(xv), y = t.variable(yv);
  auto d = alignment_distance(x, y, opt);
  EXPECT_DOUBLE_EQ(d.scalar(), soft_dtw(xv, yv, 0.5) / 8.0);
  EXPECT_DOUBLE_EQ(alignment_distance(xv, yv, opt), d.scalar());
  t.backward(d);
  EXPECT_TRUE(t.gradient(x).isApprox(soft_dtw_grad(xv, yv, 0.5).dx / 8.0, 1e-12));
}

}  // namespace
}  // namespace tsgatr
