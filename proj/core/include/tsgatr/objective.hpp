#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsgatr/alignment.hpp"
#include "tsgatr/dataset.hpp"
#include "tsgatr/tape.hpp"

namespace tsgatr {

struct LossHyper {
  double gamma1 = 1.0;  ///< relative margin
  double gamma2 = 1.5;  ///< shared distance threshold
  double xi = 0.1;      ///< threshold relaxation
  double alpha = 1.0;   ///< weight of the margin terms
  double beta = 1.0;    ///< weight of the threshold terms
  /// Extra factor on every term that involves a random forgery.
  double random_weight = 1.0;
  /// Average each sum over its number of terms instead of adding raw terms.
  bool mean_reduction = false;

  void validate() const;
};

/// relu(d_ag - d_af + gamma1)
double relative_margin_loss(double d_ag, double d_af, double gamma1);

/// relu(xi - label * (gamma2 - d)), label = +1 genuine, -1 forged.
double pairwise_threshold_loss(double d, int label, double gamma2, double xi);

ad::Var relative_margin_loss(ad::Var d_ag, ad::Var d_af, double gamma1);
ad::Var pairwise_threshold_loss(ad::Var d, int label, double gamma2, double xi);

struct TripletCounts {
  int anchors = 2;
  int positives = 2;
  int skilled = 2;
  int random = 2;
};

/// Indices into Dataset::signatures for one author's loss evaluation.
struct TripletBatch {
  std::size_t user = 0;
  std::vector<std::size_t> anchors;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> skilled;
  std::vector<std::size_t> random;

  /// anchors, positives, skilled, random concatenated.
  std::vector<std::size_t> all() const;
};

/// Seeded draw for `user` (index into Dataset::users). Genuine samples are
/// drawn without replacement, so anchors and positives never overlap.
/// Random negatives come from the genuine signatures of the other users of
/// the same split.
TripletBatch sample_triplets(const Dataset& dataset, std::size_t user, const TripletCounts& counts,
                             std::uint64_t seed);

/// Embeddings for the samples of one TripletBatch, role by role.
struct TripletEmbeddings {
  std::vector<ad::Var> anchors;
  std::vector<ad::Var> positives;
  std::vector<ad::Var> skilled;
  std::vector<ad::Var> random;
};

struct LossTerms {
  ad::Var total;
  ad::Var margin;     ///< unweighted margin sum (or mean)
  ad::Var threshold;  ///< unweighted threshold sum (or mean)
};

/// alpha * sum_{a,g,f} L_m + beta * (sum_{a,g} L_th + sum_{a,f} L_th), with
/// skilled and random forgeries sharing the forged pool.
LossTerms author_loss(const TripletEmbeddings& emb, const LossHyper& hyper,
                      const DistanceOptions& distance = {});

}  // namespace tsgatr
