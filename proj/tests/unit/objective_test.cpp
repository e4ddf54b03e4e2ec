#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsgatr/objective.hpp"
#include "tsgatr/tape.hpp"

namespace tsgatr {
namespace {

TEST(MarginLoss, Examples) {
  EXPECT_EQ(relative_margin_loss(1, 3, 2), 0.0);
  EXPECT_EQ(relative_margin_loss(3, 1, 1), 3.0);
  EXPECT_EQ(relative_margin_loss(2, 2, 0.5), 0.5);
}

TEST(ThresholdLoss, Examples) {
  EXPECT_EQ(pairwise_threshold_loss(3, +1, 5, 1), 0.0);
  EXPECT_EQ(pairwise_threshold_loss(6, +1, 5, 1), 2.0);
  EXPECT_EQ(pairwise_threshold_loss(3, -1, 5, 1), 3.0);
  EXPECT_THROW(pairwise_threshold_loss(3, 0, 5, 1), Error);
}

TEST(LossHyper, Validation) {
  LossHyper h;
  EXPECT_EQ(h.gamma1, 1.0);
  EXPECT_EQ(h.gamma2, 1.5);
  EXPECT_EQ(h.xi, 0.1);
  h.gamma1 = 0;
  EXPECT_THROW(h.validate(), UsageError);
  h = {};
  h.alpha = h.beta = 0;
  EXPECT_THROW(h.validate(), UsageError);
  h = {};
  h.xi = -1;
  EXPECT_THROW(h.validate(), UsageError);
}

struct Pools {
  std::vector<Matrix> a, g, s, r;
};

TripletEmbeddings bind(ad::Tape& t, const Pools& p) {
  TripletEmbeddings e;
  for (const auto& m : p.a) e.anchors.push_back(t.variable(m));
  for (const auto& m : p.g) e.positives.push_back(t.variable(m));
  for (const auto& m : p.s) e.skilled.push_back(t.variable(m));
  for (const auto& m : p.r) e.random.push_back(t.variable(m));
  return e;
}

Pools random_pools(std::mt19937_64& rng, int na, int ng, int ns, int nr) {
  Pools p;
  auto fill = [&](std::vector<Matrix>& v, int n) {
    for (int i = 0; i < n; ++i) v.push_back(testing::random_matrix(rng, 2 + i % 3, 3));
  };
  fill(p.a, na);
  fill(p.g, ng);
  fill(p.s, ns);
  fill(p.r, nr);
  return p;
}

TEST(AuthorLoss, IdenticalEmbeddings) {
  Matrix e = Matrix::Ones(3, 2);
  Pools p{{e, e}, {e, e}, {e, e}, {e}};
  ad::Tape t;
  LossHyper h;
  auto terms = author_loss(bind(t, p), h);
  const double margin = 2 * 2 * 3 * h.gamma1;
  const double thr = 2 * 2 * std::max(0.0, h.xi - h.gamma2) + 2 * 3 * (h.xi + h.gamma2);
  EXPECT_DOUBLE_EQ(terms.margin.scalar(), margin);
  EXPECT_DOUBLE_EQ(terms.threshold.scalar(), thr);
  EXPECT_DOUBLE_EQ(terms.total.scalar(), margin + thr);
}

TEST(AuthorLoss, AlphaZeroIsBetaTimesThreshold) {
  std::mt19937_64 rng(1);
  auto p = random_pools(rng, 2, 2, 2, 2);
  LossHyper h;
  h.alpha = 0;
  h.beta = 2.5;
  ad::Tape t;
  auto terms = author_loss(bind(t, p), h);
  EXPECT_DOUBLE_EQ(terms.total.scalar(), 2.5 * terms.threshold.scalar());
}

TEST(AuthorLoss, HandCombinedSingleTriplet) {
  std::mt19937_64 rng(2);
  auto p = random_pools(rng, 1, 1, 1, 0);
  LossHyper h{.gamma1 = 0.7, .gamma2 = 0.9, .xi = 0.2, .alpha = 1.3, .beta = 0.6};
  ad::Tape t;
  auto terms = author_loss(bind(t, p), h);
  const double dag = dtw_distance(p.a[0], p.g[0]).normalized;
  const double daf = dtw_distance(p.a[0], p.s[0]).normalized;
  const double expect = 1.3 * std::max(0.0, dag - daf + 0.7) +
                        0.6 * (std::max(0.0, 0.2 - (0.9 - dag)) + std::max(0.0, 0.2 + (0.9 - daf)));
  EXPECT_NEAR(terms.total.scalar(), expect, 1e-14);
}

TEST(AuthorLoss, MeanReductionAndRandomWeight) {
  std::mt19937_64 rng(3);
  auto p = random_pools(rng, 2, 2, 1, 1);
  LossHyper sum;
  LossHyper mean = sum;
  mean.mean_reduction = true;
  ad::Tape t;
  auto e = bind(t, p);
  auto a = author_loss(e, sum), b = author_loss(e, mean);
  EXPECT_NEAR(b.margin.scalar(), a.margin.scalar() / 8.0, 1e-14);
  EXPECT_NEAR(b.threshold.scalar(), a.threshold.scalar() / 8.0, 1e-14);

  LossHyper zero = sum;
  zero.random_weight = 0;
  auto no_random = p;
  no_random.r.clear();
  ad::Tape t2;
  EXPECT_NEAR(author_loss(bind(t2, p), zero).total.scalar(), author_loss(bind(t2, no_random), sum).total.scalar(),
              1e-13);
}

TEST(AuthorLoss, EmptyPoolThrows) {
  std::mt19937_64 rng(4);
  auto p = random_pools(rng, 1, 1, 0, 0);
  ad::Tape t;
  EXPECT_THROW(author_loss(bind(t, p), {}), Error);
}

TEST(AuthorLossProperties, PermutationInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_pools(rng, 2, 3, 2, 2);
    auto q = p;
    std::shuffle(q.a.begin(), q.a.end(), rng);
    std::shuffle(q.g.begin(), q.g.end(), rng);
    std::shuffle(q.s.begin(), q.s.end(), rng);
    std::shuffle(q.r.begin(), q.r.end(), rng);
    ad::Tape t;
    EXPECT_NEAR(author_loss(bind(t, p), {}).total.scalar(), author_loss(bind(t, q), {}).total.scalar(), 1e-12);
  }
}

TEST(AuthorLossProperties, NonNegativeAndShiftInvariantMargin) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const double dag = u(rng), daf = u(rng), c = u(rng), g1 = 0.1 + u(rng);
    ASSERT_GE(relative_margin_loss(dag, daf, g1), 0.0);
    ASSERT_GE(pairwise_threshold_loss(dag, trial % 2 ? 1 : -1, u(rng), u(rng)), 0.0);
    ASSERT_NEAR(relative_margin_loss(dag + c, daf + c, g1), relative_margin_loss(dag, daf, g1), 1e-12);
  }
}

Dataset toy_dataset(int users, int genuine, int skilled) {
  Dataset ds;
  std::mt19937_64 rng(7);
  for (int u = 0; u < users; ++u) {
    UserRecord rec;
    rec.user_id = "u" + std::to_string(u);
    for (int i = 0; i < genuine + skilled; ++i) {
      SignatureRecord s;
      s.user_id = rec.user_id;
      s.sig_id = rec.user_id + "_" + std::to_string(i);
      s.label = i < genuine ? SignatureLabel::kGenuine : SignatureLabel::kSkilledForgery;
      s.signature = testing::random_signature(rng, 1, 5);
      (i < genuine ? rec.genuine : rec.skilled).push_back(ds.signatures.size());
      ds.signatures.push_back(std::move(s));
    }
    ds.users.push_back(rec);
  }
  return ds;
}

TEST(SampleTriplets, DeterministicAndDisjoint) {
  auto ds = toy_dataset(3, 6, 4);
  TripletCounts c;
  auto a = sample_triplets(ds, 1, c, 42);
  auto b = sample_triplets(ds, 1, c, 42);
  EXPECT_EQ(a.all(), b.all());
  EXPECT_EQ(a.anchors.size(), 2u);
  EXPECT_EQ(a.random.size(), 2u);
  for (auto r : a.random) EXPECT_NE(ds.signatures[r].user_id, "u1");
  for (auto r : a.random) EXPECT_EQ(ds.signatures[r].label, SignatureLabel::kGenuine);
  for (auto s : a.skilled) EXPECT_EQ(ds.signatures[s].label, SignatureLabel::kSkilledForgery);
}

TEST(SampleTriplets, NoRandomNegatives) {
  auto ds = toy_dataset(2, 5, 3);
  TripletCounts c;
  c.random = 0;
  auto b = sample_triplets(ds, 0, c, 1);
  EXPECT_TRUE(b.random.empty());
  EXPECT_EQ(b.skilled.size(), 2u);
}

TEST(SampleTriplets, AnchorNeverPositive) {
  auto ds = toy_dataset(3, 5, 2);
  TripletCounts c{.anchors = 2, .positives = 3, .skilled = 2, .random = 1};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto b = sample_triplets(ds, seed % 3, c, seed);
    std::set<std::size_t> anchors(b.anchors.begin(), b.anchors.end());
    ASSERT_EQ(anchors.size(), b.anchors.size());
    for (auto g : b.positives) ASSERT_FALSE(anchors.count(g)) << seed;
  }
}

TEST(SampleTriplets, InsufficientPools) {
  auto ds = toy_dataset(2, 3, 0);
  TripletCounts c;
  EXPECT_THROW(sample_triplets(ds, 0, c, 1), Error);
  c.positives = 1;
  c.skilled = 0;
  EXPECT_NO_THROW(sample_triplets(ds, 0, c, 1));
  c.skilled = 1;
  EXPECT_THROW(sample_triplets(ds, 0, c, 1), Error);
  EXPECT_THROW(sample_triplets(toy_dataset(1, 4, 2), 0, TripletCounts{}, 1), Error);
}

}  // namespace
}  // namespace tsgatr
