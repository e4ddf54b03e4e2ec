#include "tsgatr/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tsgatr/alignment.hpp"
#include "tsgatr/parallel.hpp"
#include "tsgatr/pipeline.hpp"

namespace tsgatr {

namespace {

using nlohmann::json;

// Accepted impostors and rejected genuine probes at one threshold. Counts
// keep tie-breaking exact: gaps that are equal as fractions may differ by an
// ulp once divided.
struct Counts {
  std::int64_t impostor_accepted = 0;
  std::int64_t genuine_rejected = 0;
};

Counts counts_at(const std::vector<double>& genuine_sorted, const std::vector<double>& impostor_sorted, double t) {
  const auto genuine_accepted = std::upper_bound(genuine_sorted.begin(), genuine_sorted.end(), t) - genuine_sorted.begin();
  Counts c;
  c.genuine_rejected = static_cast<std::int64_t>(genuine_sorted.size()) - genuine_accepted;
  c.impostor_accepted = std::upper_bound(impostor_sorted.begin(), impostor_sorted.end(), t) - impostor_sorted.begin();
  return c;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
  return buf;
}

}  // namespace

EerResult compute_eer(const std::vector<double>& genuine, const std::vector<double>& impostor, bool interpolate) {
  if (genuine.empty() || impostor.empty()) throw Error("compute_eer: empty genuine or impostor score list");
  for (const auto* list : {&genuine, &impostor})
    for (double s : *list)
      if (!std::isfinite(s)) throw Error("compute_eer: non-finite score");

  auto g = genuine;
  auto imp = impostor;
  std::sort(g.begin(), g.end());
  std::sort(imp.begin(), imp.end());

  std::vector<double> values = g;
  values.insert(values.end(), imp.begin(), imp.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> candidates;
  candidates.reserve(2 * values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) candidates.push_back(0.5 * (values[k - 1] + values[k]));
    candidates.push_back(values[k]);
  }

  const auto ng = static_cast<std::int64_t>(g.size()), ni = static_cast<std::int64_t>(imp.size());
  // FAR - FRR and FAR + FRR scaled by ng * ni.
  auto gap_of = [&](const Counts& c) { return c.impostor_accepted * ng - c.genuine_rejected * ni; };
  auto sum_of = [&](const Counts& c) { return c.impostor_accepted * ng + c.genuine_rejected * ni; };
  auto far_of = [&](const Counts& c) { return static_cast<double>(c.impostor_accepted) / static_cast<double>(ni); };
  auto frr_of = [&](const Counts& c) { return static_cast<double>(c.genuine_rejected) / static_cast<double>(ng); };

  std::vector<Counts> counts(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) counts[k] = counts_at(g, imp, candidates[k]);

  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const auto gap = std::abs(gap_of(counts[k])), best_gap = std::abs(gap_of(counts[best]));
    // Candidates ascend, so strict comparisons keep the lower threshold.
    if (gap < best_gap || (gap == best_gap && sum_of(counts[k]) < sum_of(counts[best]))) best = k;
  }
  const EerResult chosen{0.5 * (far_of(counts[best]) + frr_of(counts[best])), candidates[best]};
  if (!interpolate) return chosen;

  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto d = gap_of(counts[k]);
    if (d < 0) continue;
    if (d == 0) return {far_of(counts[k]), candidates[k]};
    if (k == 0) return chosen;
    const double d_prev = static_cast<double>(gap_of(counts[k - 1]));
    const double lambda = -d_prev / (static_cast<double>(d) - d_prev);
    const double far = far_of(counts[k - 1]) + lambda * (far_of(counts[k]) - far_of(counts[k - 1]));
    const double frr = frr_of(counts[k - 1]) + lambda * (frr_of(counts[k]) - frr_of(counts[k - 1]));
    return {0.5 * (far + frr), candidates[k - 1] + lambda * (candidates[k] - candidates[k - 1])};
  }
  return chosen;
}

std::vector<std::size_t> select_templates(const std::vector<std::size_t>& genuine, TemplateSelection selection,
                                          int n, std::uint64_t seed) {
  if (n < 1) throw UsageError("select_templates: n must be >= 1");
  if (static_cast<std::size_t>(n) > genuine.size())
    throw Error("select_templates: " + std::to_string(n) + " templates requested from a pool of " +
                std::to_string(genuine.size()));
  if (selection == TemplateSelection::kFirstN) return {genuine.begin(), genuine.begin() + n};
  std::vector<std::size_t> order(genuine.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(n));
  std::sort(order.begin(), order.end());
  std::vector<std::size_t> out;
  for (auto k : order) out.push_back(genuine[k]);
  return out;
}

double aggregate_distances(const std::vector<double>& distances, Aggregation aggregation) {
  if (distances.empty()) throw Error("verification score needs at least one template");
  if (aggregation == Aggregation::kMin) return *std::min_element(distances.begin(), distances.end());
  double sum = 0.0;
  for (double d : distances) sum += d;
  return sum / static_cast<double>(distances.size());
}

double verification_score(const std::vector<Matrix>& templates, const Matrix& probe, Aggregation aggregation) {
  if (templates.empty()) throw Error("verification score needs at least one template");
  std::vector<double> distances;
  distances.reserve(templates.size());
  for (const auto& t : templates) distances.push_back(alignment_distance(t, probe));
  return aggregate_distances(distances, aggregation);
}

std::string to_string(ForgeryType type) { return type == ForgeryType::kSkilled ? "skilled" : "random"; }

std::string to_string(TemplateStrategy strategy) {
  return strategy == TemplateStrategy::kFirstN ? "first_n" : "random_min";
}

std::string ProtocolCell::name() const {
  return std::to_string(templates) + "vs1/" + to_string(forgery) + "/" + to_string(strategy);
}

std::vector<ProtocolCell> parse_protocols(const std::string& text) {
  std::vector<ProtocolCell> every;
  for (int n : {1, 4})
    for (auto f : {ForgeryType::kSkilled, ForgeryType::kRandom})
      for (auto s : {TemplateStrategy::kFirstN, TemplateStrategy::kRandomMinOverRuns}) every.push_back({n, f, s});
  if (text == "all") return every;

  std::vector<ProtocolCell> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw UsageError("empty protocol item in '" + text + "'");
    bool matched = false;
    for (const auto& cell : every) {
      const auto name = cell.name();
      if (name == item || name.rfind(item + "/", 0) == 0) {
        matched = true;
        if (std::find(out.begin(), out.end(), cell) == out.end()) out.push_back(cell);
      }
    }
    if (!matched) throw UsageError("unknown protocol '" + item + "'");
  }
  if (out.empty()) throw UsageError("no protocol cells selected");
  return out;
}

const CellReport& EvalReport::cell(const std::string& name) const {
  for (const auto& c : cells)
    if (c.cell.name() == name) return c;
  throw Error("report has no cell " + name);
}

EvalReport run_protocol(const Dataset& dataset, const SequenceTable& sequences,
                        const std::vector<ProtocolCell>& cells, const ProtocolOptions& options, std::uint64_t seed) {
  if (sequences.size() != dataset.signatures.size()) throw Error("run_protocol: sequence table does not match dataset");
  if (options.runs < 1) throw UsageError("run_protocol: runs must be >= 1");
  const auto test_users = dataset.users_in(Split::kTest);
  if (test_users.empty()) throw Error("dataset has no test users");

  // Random impostor pool of each test user, in a seeded order that does not
  // depend on the cell or run.
  std::vector<std::vector<std::size_t>> random_pool(test_users.size());
  for (std::size_t u = 0; u < test_users.size(); ++u) {
    auto& pool = random_pool[u];
    for (std::size_t v = 0; v < test_users.size(); ++v) {
      if (v == u) continue;
      const auto& other = dataset.users[test_users[v]].genuine;
      pool.insert(pool.end(), other.begin(), other.end());
    }
    std::mt19937_64 rng(derive_seed(seed, "random-impostors", u));
    std::shuffle(pool.begin(), pool.end(), rng);
  }

  struct Trial {
    std::size_t user = 0;  // position within test_users
    std::vector<std::size_t> templates;
    std::vector<std::size_t> genuine;
    std::vector<std::size_t> impostor;
  };
  struct Plan {
    std::vector<std::uint64_t> run_seeds;
    std::vector<std::vector<Trial>> runs;
    std::vector<std::string> skipped;
  };

  std::vector<Plan> plans(cells.size());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    auto& plan = plans[c];
    std::vector<std::size_t> eligible;
    for (std::size_t u = 0; u < test_users.size(); ++u) {
      const auto& user = dataset.users[test_users[u]];
      const bool enough_genuine = user.genuine.size() > static_cast<std::size_t>(cell.templates);
      const bool has_impostors =
          cell.forgery == ForgeryType::kSkilled ? !user.skilled.empty() : !random_pool[u].empty();
      if (enough_genuine && has_impostors) eligible.push_back(u);
      else plan.skipped.push_back(user.user_id);
    }
    const int runs = cell.strategy == TemplateStrategy::kFirstN ? 1 : options.runs;
    for (int r = 0; r < runs; ++r) {
      const auto run_seed = cell.strategy == TemplateStrategy::kFirstN
                                ? seed
                                : derive_seed(seed, "templates", static_cast<std::uint64_t>(r));
      plan.run_seeds.push_back(run_seed);
      std::vector<Trial> trials;
      for (auto u : eligible) {
        const auto& user = dataset.users[test_users[u]];
        Trial trial;
        trial.user = u;
        trial.templates = select_templates(
            user.genuine,
            cell.strategy == TemplateStrategy::kFirstN ? TemplateSelection::kFirstN : TemplateSelection::kRandom,
            cell.templates, derive_seed(run_seed, "user", u));
        for (auto g : user.genuine)
          if (std::find(trial.templates.begin(), trial.templates.end(), g) == trial.templates.end())
            trial.genuine.push_back(g);
        if (cell.forgery == ForgeryType::kSkilled) {
          trial.impostor = user.skilled;
        } else {
          const auto n = std::min(trial.genuine.size(), random_pool[u].size());
          trial.impostor.assign(random_pool[u].begin(), random_pool[u].begin() + static_cast<std::ptrdiff_t>(n));
        }
        for (auto t : trial.templates)
          for (const auto* probes : {&trial.genuine, &trial.impostor})
            for (auto p : *probes) pairs.emplace_back(std::min(t, p), std::max(t, p));
        trials.push_back(std::move(trial));
      }
      plan.runs.push_back(std::move(trials));
    }
  }

  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<double> distances(pairs.size());
  parallel_for(pairs.size(), options.workers, [&](std::size_t k) {
    const auto& a = sequences[pairs[k].first];
    const auto& b = sequences[pairs[k].second];
    if (a.rows() == 0 || b.rows() == 0) throw Error("run_protocol: missing sequence for a scored signature");
    distances[k] = alignment_distance(a, b);
  });
  auto distance = [&](std::size_t a, std::size_t b) {
    const std::pair<std::size_t, std::size_t> key(std::min(a, b), std::max(a, b));
    const auto it = std::lower_bound(pairs.begin(), pairs.end(), key);
    return distances[static_cast<std::size_t>(it - pairs.begin())];
  };

  EvalReport report;
  report.seed = seed;
  report.manifest_hash = dataset.manifest_hash;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& plan = plans[c];
    CellReport cell_report;
    cell_report.cell = cells[c];
    cell_report.skipped_users = plan.skipped;
    for (std::size_t r = 0; r < plan.runs.size(); ++r) {
      RunResult run;
      run.seed = plan.run_seeds[r];
      std::vector<double> pooled_genuine, pooled_impostor;
      double local_sum = 0.0;
      for (const auto& trial : plan.runs[r]) {
        UserCellResult user;
        user.user_id = dataset.users[test_users[trial.user]].user_id;
        for (auto t : trial.templates) user.templates.push_back(dataset.signatures[t].sig_id);
        std::vector<double> genuine_scores, impostor_scores;
        auto score = [&](std::size_t probe) {
          std::vector<double> d;
          for (auto t : trial.templates) d.push_back(distance(t, probe));
          return aggregate_distances(d, options.aggregation);
        };
        for (auto p : trial.genuine) {
          genuine_scores.push_back(score(p));
          user.probes.push_back({dataset.signatures[p].sig_id, true, genuine_scores.back()});
        }
        for (auto p : trial.impostor) {
          impostor_scores.push_back(score(p));
          user.probes.push_back({dataset.signatures[p].sig_id, false, impostor_scores.back()});
        }
        user.eer = compute_eer(genuine_scores, impostor_scores, options.interpolate);
        local_sum += user.eer.eer;
        pooled_genuine.insert(pooled_genuine.end(), genuine_scores.begin(), genuine_scores.end());
        pooled_impostor.insert(pooled_impostor.end(), impostor_scores.begin(), impostor_scores.end());
        run.users.push_back(std::move(user));
      }
      if (run.users.empty()) throw Error("protocol " + cells[c].name() + ": every test user was skipped");
      run.global = compute_eer(pooled_genuine, pooled_impostor, options.interpolate);
      run.local_eer = local_sum / static_cast<double>(run.users.size());
      cell_report.runs.push_back(std::move(run));
    }
    for (std::size_t r = 1; r < cell_report.runs.size(); ++r) {
      if (cell_report.runs[r].global.eer < cell_report.runs[cell_report.best_run_global].global.eer)
        cell_report.best_run_global = r;
      if (cell_report.runs[r].local_eer < cell_report.runs[cell_report.best_run_local].local_eer)
        cell_report.best_run_local = r;
    }
    const auto& best_global = cell_report.runs[cell_report.best_run_global];
    cell_report.eer_global = 100.0 * best_global.global.eer;
    cell_report.threshold_global = best_global.global.threshold;
    cell_report.eer_local = 100.0 * cell_report.runs[cell_report.best_run_local].local_eer;
    report.cells.push_back(std::move(cell_report));
  }
  return report;
}

SequenceTable embed_test_split(const Dataset& dataset, const ParameterStore& params, const RunConfig& config,
                               int workers) {
  std::vector<std::size_t> indices;
  for (auto u : dataset.users_in(Split::kTest))
    for (const auto* pool : {&dataset.users[u].genuine, &dataset.users[u].skilled})
      indices.insert(indices.end(), pool->begin(), pool->end());
  SequenceTable out(dataset.signatures.size());
  parallel_for(indices.size(), workers, [&](std::size_t k) {
    const auto i = indices[k];
    const auto prepared = prepare_signature(dataset.signatures[i].signature, config);
    out[i] = embed(params, config.network, prepared.features, prepared.graphs);
  });
  return out;
}

SequenceTable feature_test_split(const Dataset& dataset, const FeatureOptions& features, int workers) {
  std::vector<std::size_t> indices;
  for (auto u : dataset.users_in(Split::kTest))
    for (const auto* pool : {&dataset.users[u].genuine, &dataset.users[u].skilled})
      indices.insert(indices.end(), pool->begin(), pool->end());
  SequenceTable out(dataset.signatures.size());
  parallel_for(indices.size(), workers, [&](std::size_t k) {
    const auto i = indices[k];
    out[i] = prepare_features(dataset.signatures[i].signature, features).values;
  });
  return out;
}

std::string report_to_json(const EvalReport& report) {
  json doc;
  doc["format"] = "tsgatr-eval-report";
  doc["version"] = 1;
  doc["scorer"] = report.scorer;
  doc["seed"] = report.seed;
  doc["config_hash"] = hex64(report.config_hash);
  doc["manifest_hash"] = hex64(report.manifest_hash);
  json cells = json::array();
  for (const auto& c : report.cells) {
    json jc;
    jc["cell"] = c.cell.name();
    jc["templates"] = c.cell.templates;
    jc["forgery"] = to_string(c.cell.forgery);
    jc["strategy"] = to_string(c.cell.strategy);
    jc["eer_global_percent"] = c.eer_global;
    jc["eer_local_percent"] = c.eer_local;
    jc["threshold_global"] = c.threshold_global;
    jc["best_run_global"] = c.best_run_global;
    jc["best_run_local"] = c.best_run_local;
    jc["skipped_users"] = c.skipped_users;
    json runs = json::array();
    for (const auto& r : c.runs) {
      json jr;
      jr["seed"] = r.seed;
      jr["eer_global"] = r.global.eer;
      jr["threshold_global"] = r.global.threshold;
      jr["eer_local"] = r.local_eer;
      json users = json::array();
      for (const auto& u : r.users) {
        json ju;
        ju["user"] = u.user_id;
        ju["templates"] = u.templates;
        ju["eer"] = u.eer.eer;
        ju["threshold"] = u.eer.threshold;
        json genuine = json::array(), impostor = json::array();
        for (const auto& p : u.probes) (p.genuine ? genuine : impostor).push_back(p.score);
        ju["genuine_scores"] = std::move(genuine);
        ju["impostor_scores"] = std::move(impostor);
        users.push_back(std::move(ju));
      }
      jr["users"] = std::move(users);
      runs.push_back(std::move(jr));
    }
    jc["runs"] = std::move(runs);
    cells.push_back(std::move(jc));
  }
  doc["cells"] = std::move(cells);
  return doc.dump(1) + "\n";
}

std::string report_scores_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "cell,run,user,probe_id,label,score\n";
  for (const auto& c : report.cells)
    for (std::size_t r = 0; r < c.runs.size(); ++r)
      for (const auto& u : c.runs[r].users)
        for (const auto& p : u.probes) {
          char buf[40];
          std::snprintf(buf, sizeof(buf), "%.17g", p.score);
          out << c.cell.name() << ',' << r << ',' << u.user_id << ',' << p.sig_id << ','
              << (p.genuine ? "genuine" : "impostor") << ',' << buf << '\n';
        }
  return out.str();
}

std::string report_summary(const EvalReport& report) {
  std::string out;
  for (const auto& c : report.cells) {
    std::string name = c.cell.name();
    name.resize(std::max<std::size_t>(name.size(), 24), ' ');
    out += name + " " + percent(c.eer_global / 100.0) + "/" + percent(c.eer_local / 100.0) + "\n";
  }
  return out;
}

}  // namespace tsgatr
