#include "tsgatr/objective.hpp"

#include <algorithm>
#include <random>

namespace tsgatr {

void LossHyper::validate() const {
  if (!(gamma1 > 0.0)) throw UsageError("gamma1 must be > 0");
  if (xi < 0.0) throw UsageError("xi must be >= 0");
  if (alpha < 0.0 || beta < 0.0 || !(alpha + beta > 0.0)) throw UsageError("alpha, beta must be >= 0 with alpha + beta > 0");
  if (random_weight < 0.0) throw UsageError("random_weight must be >= 0");
}

double relative_margin_loss(double d_ag, double d_af, double gamma1) {
  return std::max(0.0, d_ag - d_af + gamma1);
}

double pairwise_threshold_loss(double d, int label, double gamma2, double xi) {
  if (label != 1 && label != -1) throw Error("threshold loss label must be +1 or -1");
  return std::max(0.0, xi - label * (gamma2 - d));
}

ad::Var relative_margin_loss(ad::Var d_ag, ad::Var d_af, double gamma1) {
  return ad::relu(ad::affine(ad::sub(d_ag, d_af), 1.0, gamma1));
}

ad::Var pairwise_threshold_loss(ad::Var d, int label, double gamma2, double xi) {
  if (label != 1 && label != -1) throw Error("threshold loss label must be +1 or -1");
  const double l = label;
  return ad::relu(ad::affine(d, l, xi - l * gamma2));
}

std::vector<std::size_t> TripletBatch::all() const {
  std::vector<std::size_t> out;
  for (const auto* pool : {&anchors, &positives, &skilled, &random}) out.insert(out.end(), pool->begin(), pool->end());
  return out;
}

TripletBatch sample_triplets(const Dataset& dataset, std::size_t user, const TripletCounts& counts,
                             std::uint64_t seed) {
  if (user >= dataset.users.size()) throw Error("sample_triplets: user index out of range");
  if (counts.anchors < 1 || counts.positives < 1 || counts.skilled < 0 || counts.random < 0 ||
      counts.skilled + counts.random < 1)
    throw UsageError("sample_triplets: need >= 1 anchor, >= 1 positive and >= 1 negative");
  const auto& u = dataset.users[user];
  const auto n_genuine = static_cast<std::size_t>(counts.anchors + counts.positives);
  if (u.genuine.size() < std::max<std::size_t>(2, n_genuine))
    throw Error("user " + u.user_id + " has " + std::to_string(u.genuine.size()) + " genuine signatures, needs " +
                std::to_string(n_genuine));
  if (counts.skilled > 0 && u.skilled.empty()) throw Error("user " + u.user_id + " has no skilled forgeries");

  std::mt19937_64 rng(seed);
  TripletBatch batch;
  batch.user = user;

  auto genuine = u.genuine;
  std::shuffle(genuine.begin(), genuine.end(), rng);
  batch.anchors.assign(genuine.begin(), genuine.begin() + counts.anchors);
  batch.positives.assign(genuine.begin() + counts.anchors, genuine.begin() + static_cast<std::ptrdiff_t>(n_genuine));

  // Without replacement while the pool lasts, then with replacement.
  auto draw = [&rng](std::vector<std::size_t> pool, int n) {
    std::vector<std::size_t> out;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (int i = 0; i < n; ++i) {
      if (static_cast<std::size_t>(i) < pool.size()) {
        out.push_back(pool[static_cast<std::size_t>(i)]);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        out.push_back(pool[pick(rng)]);
      }
    }
    return out;
  };
  if (counts.skilled > 0) batch.skilled = draw(u.skilled, counts.skilled);
  if (counts.random > 0) {
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < dataset.users.size(); ++k) {
      const auto& other = dataset.users[k];
      if (k == user || other.split != u.split) continue;
      others.insert(others.end(), other.genuine.begin(), other.genuine.end());
    }
    if (others.empty()) throw Error("no other users available for random forgeries of " + u.user_id);
    batch.random = draw(std::move(others), counts.random);
  }
  return batch;
}

LossTerms author_loss(const TripletEmbeddings& emb, const LossHyper& hyper,
                      const DistanceOptions& distance) {
  hyper.validate();
  if (emb.anchors.empty() || emb.positives.empty() || (emb.skilled.empty() && emb.random.empty()))
    throw Error("author_loss: empty anchor, positive or negative pool");

  struct Forged {
    ad::Var embedding;
    double weight;
  };
  std::vector<Forged> forged;
  for (auto v : emb.skilled) forged.push_back({v, 1.0});
  for (auto v : emb.random) forged.push_back({v, hyper.random_weight});

  auto accumulate = [](ad::Var acc, ad::Var term) { return acc.valid() ? ad::add(acc, term) : term; };
  ad::Var margin, threshold;
  double margin_terms = 0, threshold_terms = 0;
  for (auto a : emb.anchors) {
    std::vector<ad::Var> d_forged;
    for (const auto& f : forged) d_forged.push_back(alignment_distance(a, f.embedding, distance));
    for (auto g : emb.positives) {
      ad::Var d_ag = alignment_distance(a, g, distance);
      for (std::size_t k = 0; k < forged.size(); ++k) {
        ad::Var term = relative_margin_loss(d_ag, d_forged[k], hyper.gamma1);
        if (forged[k].weight != 1.0) term = ad::scale(term, forged[k].weight);
        margin = accumulate(margin, term);
        ++margin_terms;
      }
      threshold = accumulate(threshold, pairwise_threshold_loss(d_ag, +1, hyper.gamma2, hyper.xi));
      ++threshold_terms;
    }
    for (std::size_t k = 0; k < forged.size(); ++k) {
      ad::Var term = pairwise_threshold_loss(d_forged[k], -1, hyper.gamma2, hyper.xi);
      if (forged[k].weight != 1.0) term = ad::scale(term, forged[k].weight);
      threshold = accumulate(threshold, term);
      ++threshold_terms;
    }
  }
  if (hyper.mean_reduction) {
    margin = ad::scale(margin, 1.0 / margin_terms);
    threshold = ad::scale(threshold, 1.0 / threshold_terms);
  }
  ad::Var total = ad::add(ad::scale(margin, hyper.alpha), ad::scale(threshold, hyper.beta));
  return {total, margin, threshold};
}

}  // namespace tsgatr
