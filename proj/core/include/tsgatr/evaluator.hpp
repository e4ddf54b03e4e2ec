#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsgatr/config.hpp"
#include "tsgatr/dataset.hpp"

namespace tsgatr {

struct EerResult {
  double eer = 0.0;  ///< fraction in [0, 1]
  double threshold = 0.0;
};

/// Lower scores are more genuine. A probe is accepted when score <= t, so
/// FRR(t) is the fraction of genuine scores above t and FAR(t) the fraction
/// of impostor scores at or below t. Candidates are the distinct scores and
/// the midpoints between neighbours; the chosen one minimizes |FAR - FRR|,
/// then (FAR + FRR) / 2, then t. With `interpolate` the EER is read off the
/// linear interpolation of FAR and FRR at their exact crossing.
EerResult compute_eer(const std::vector<double>& genuine, const std::vector<double>& impostor,
                      bool interpolate = false);

enum class TemplateSelection { kFirstN, kRandom };

/// first_n keeps capture order; random is a seeded subset without
/// replacement, returned in capture order.
std::vector<std::size_t> select_templates(const std::vector<std::size_t>& genuine, TemplateSelection selection,
                                          int n, std::uint64_t seed);

double aggregate_distances(const std::vector<double>& distances, Aggregation aggregation);

/// Aggregated length-normalized DTW distance from the probe to each template.
double verification_score(const std::vector<Matrix>& templates, const Matrix& probe,
                          Aggregation aggregation = Aggregation::kMean);

enum class ForgeryType { kSkilled, kRandom };
enum class TemplateStrategy { kFirstN, kRandomMinOverRuns };

struct ProtocolCell {
  int templates = 1;
  ForgeryType forgery = ForgeryType::kSkilled;
  TemplateStrategy strategy = TemplateStrategy::kFirstN;

  /// e.g. "1vs1/skilled/first_n".
  std::string name() const;
  bool operator==(const ProtocolCell&) const = default;
};

/// "all" expands to every combination of {1vs1, 4vs1} x {skilled, random} x
/// {first_n, random_min}. Otherwise a comma list whose items are full cell
/// names or partial ones ("4vs1", "4vs1/random") expanding to every match.
std::vector<ProtocolCell> parse_protocols(const std::string& text);

struct ProbeScore {
  std::string sig_id;
  bool genuine = true;
  double score = 0.0;
};

struct UserCellResult {
  std::string user_id;
  std::vector<std::string> templates;
  std::vector<ProbeScore> probes;
  EerResult eer;
};

struct RunResult {
  std::uint64_t seed = 0;
  EerResult global;
  double local_eer = 0.0;  ///< mean of per-user EERs, fraction
  std::vector<UserCellResult> users;
};

struct CellReport {
  ProtocolCell cell;
  double eer_global = 0.0;  ///< percent
  double eer_local = 0.0;   ///< percent
  double threshold_global = 0.0;
  std::size_t best_run_global = 0;
  std::size_t best_run_local = 0;
  std::vector<RunResult> runs;
  std::vector<std::string> skipped_users;
};

struct EvalReport {
  std::string scorer;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t manifest_hash = 0;
  std::vector<CellReport> cells;

  const CellReport& cell(const std::string& name) const;
};

/// Per-signature sequences compared by DTW, indexed like Dataset::signatures.
/// Entries for signatures outside the evaluated split may be empty.
using SequenceTable = std::vector<Matrix>;

struct ProtocolOptions {
  Aggregation aggregation = Aggregation::kMean;
  bool interpolate = false;
  int runs = 20;
  int workers = 1;
};

/// Evaluates every cell over the test users of `dataset`. Random impostors
/// for a user are other test users' genuine signatures, as many as the
/// user's genuine probes. random_min_over_runs reports the minimum EER over
/// `runs` template draws, each seeded from `seed` and the run index.
EvalReport run_protocol(const Dataset& dataset, const SequenceTable& sequences,
                        const std::vector<ProtocolCell>& cells, const ProtocolOptions& options, std::uint64_t seed);

/// Embeds the test users' signatures with a trained model.
SequenceTable embed_test_split(const Dataset& dataset, const ParameterStore& params, const RunConfig& config,
                               int workers = 1);

/// Prepared input features of the test users' signatures, for the
/// untrained feature-DTW reference scorer.
SequenceTable feature_test_split(const Dataset& dataset, const FeatureOptions& features, int workers = 1);

std::string report_to_json(const EvalReport& report);
/// `cell,run,user,probe_id,label,score` rows for every scored probe.
std::string report_scores_csv(const EvalReport& report);
/// One `cell  EER_g/EER_l` line per cell, EERs in percent with two decimals.
std::string report_summary(const EvalReport& report);

std::string to_string(ForgeryType type);
std::string to_string(TemplateStrategy strategy);

}  // namespace tsgatr
