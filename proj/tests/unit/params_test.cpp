#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsgatr/model.hpp"
#include "tsgatr/params.hpp"

namespace tsgatr {
namespace {

TEST(ParameterStore, FlatIndexing) {
  ParameterStore p;
  p.add("a", Matrix::Zero(2, 3));
  p.add("b", Matrix::Zero(1, 2));
  EXPECT_EQ(p.scalar_count(), 8u);
  p.set_flat(4, 7.0);
  EXPECT_EQ(p.get("a")(1, 1), 7.0);
  p.set_flat(7, -1.0);
  EXPECT_EQ(p.get("b")(0, 1), -1.0);
  EXPECT_EQ(p.owner(5), "a");
  EXPECT_EQ(p.owner(6), "b");
  EXPECT_THROW(p.add("a", Matrix::Zero(1, 1)), Error);
  EXPECT_THROW(p.get("missing"), Error);
}

TEST(ParameterStore, FlatRoundTripBitExact) {
  auto p = init_parameters(NetworkConfig{.input_dim = 16, .d = 5, .n_blocks = 2}, 3);
  auto flat = p.to_flat();
  auto q = p.zeros_like();
  q.assign_flat(flat);
  EXPECT_EQ(q, p);
  EXPECT_TRUE(q.same_layout(p));
}

TEST(ParameterStore, Arithmetic) {
  ParameterStore p;
  p.add("w", Matrix::Constant(2, 2, 1.5));
  auto q = p;
  q += p;
  EXPECT_EQ(q.get("w")(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(q.squared_norm(), 36.0);
  q.scale(0.5);
  EXPECT_EQ(q, p);
  EXPECT_TRUE(p.all_finite());
  q.set_flat(0, std::numeric_limits<double>::infinity());
  EXPECT_FALSE(q.all_finite());
}

TEST(ParameterJson, RoundTripBitExact) {
  std::mt19937_64 rng(1);
  ParameterStore p;
  p.add("x", testing::random_matrix(rng, 3, 4, 1e3));
  p.add("y", Matrix::Constant(1, 1, 0.1 + 0.2));
  p.add("z", Matrix::Constant(1, 2, 5e-324));
  auto back = parameters_from_json(parameters_to_json(p));
  EXPECT_EQ(back, p);
  EXPECT_EQ(parameters_from_json(parameters_to_json(p, 2)), p);
}

TEST(ParameterJson, RejectsMalformed) {
  EXPECT_THROW(parameters_from_json("{"), Error);
  EXPECT_THROW(parameters_from_json(R"({"format":"other"})"), Error);
}

TEST(InitParameters, ShapesAndGlorotBounds) {
  NetworkConfig cfg{.input_dim = 16, .d = 6, .n_blocks = 2};
  auto p = init_parameters(cfg, 9);
  EXPECT_EQ(p.get("input.weight").rows(), 16);
  EXPECT_EQ(p.get("input.weight").cols(), 6);
  EXPECT_EQ(p.get("block1.ffn.weight").rows(), 12);
  EXPECT_EQ(p.get("block0.gate.weight").rows(), 12);
  EXPECT_EQ(p.get("block0.gal_step.query").rows(), 6);
  EXPECT_EQ(p.get("tail.gru.u_update").cols(), 6);
  const double a = std::sqrt(6.0 / (16 + 6));
  EXPECT_LE(p.get("input.weight").cwiseAbs().maxCoeff(), a);
  EXPECT_EQ(p.get("input.bias"), Matrix::Zero(1, 6));
  EXPECT_EQ(init_parameters(cfg, 9), p);
  EXPECT_FALSE(init_parameters(cfg, 10) == p);
}

TEST(InitParameters, VariantsOmitUnusedBranches) {
  auto gru = init_parameters(NetworkConfig{.d = 4, .variant = Variant::kGruOnly}, 1);
  EXPECT_FALSE(gru.contains("block0.gal_step.query"));
  EXPECT_TRUE(gru.contains("block0.gru.w_update"));
  auto dg = init_parameters(NetworkConfig{.d = 4, .variant = Variant::kDgatrOnly}, 1);
  EXPECT_TRUE(dg.contains("block0.gal_knn.key"));
  EXPECT_FALSE(dg.contains("block0.gru.w_update"));
}

}  // namespace
}  // namespace tsgatr
