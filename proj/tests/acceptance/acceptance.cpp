// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
//   tsgatr_acceptance --work DIR [--only 1,2,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "test_support.hpp"
#include "tsgatr/dataset.hpp"
#include "tsgatr/evaluator.hpp"
#include "tsgatr/gradsuite.hpp"
#include "tsgatr/model.hpp"
#include "tsgatr/pipeline.hpp"
#include "tsgatr/selftest.hpp"

namespace fs = std::filesystem;
using namespace tsgatr;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Runs the tsgatr CLI in process; throws on a nonzero exit.
std::string tsgatr_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) {
    std::string line = "tsgatr";
    for (const auto& a : args) line += " " + a;
    throw Error(line + " exited " + std::to_string(code) + ": " + err.str());
  }
  return out.str();
}

const json& find_cell(const json& report, const std::string& name) {
  for (const auto& c : report.at("cells"))
    if (c.at("cell") == name) return c;
  throw Error("report has no cell " + name);
}

double cell_eer(const fs::path& report, const std::string& name) {
  return find_cell(json::parse(slurp(report)), name).at("eer_global_percent").get<double>();
}

// --- 1-4: oracle suites ------------------------------------------------------

Verdict dtw_oracle() {
  Verdict v;
  Stopwatch t;
  auto s = oracle::dtw_suite(1, 100, 1e-9);
  const double secs = t.seconds();
  v.require(s.passed, s.detail);
  v.require(s.cases == 100, "expected 100 pairs");
  v.require(secs < 5.0, fmt("runtime %.2f s >= 5 s", secs));
  if (v.pass) v.detail = s.detail + fmt(", %.2f s", secs);
  return v;
}

Verdict gradient_suite() {
  Verdict v;
  Stopwatch t;
  auto cases = suite::run_gradient_suite(1, 20);
  const double secs = t.seconds();
  const std::set<std::string> required = {"gal",          "dgatr_block",    "gru",
                                          "gated_fusion", "layer_norm",     "pooling_tail",
                                          "margin_loss",  "threshold_loss", "network_author_loss",
                                          "dtw_grad"};
  std::set<std::string> seen;
  double worst = 0.0;
  for (const auto& c : cases) {
    seen.insert(c.name);
    worst = std::max(worst, c.max_relative_error);
    v.require(c.max_relative_error <= 1e-4, c.name + fmt(" max_rel_err %.3e > 1e-4", c.max_relative_error));
    v.require(c.configurations >= 20, c.name + " ran fewer than 20 configurations");
    v.require(c.checked > 0, c.name + " checked no coordinates");
  }
  for (const auto& name : required) v.require(seen.count(name) == 1, "missing case " + name);
  v.require(secs < 120.0, fmt("runtime %.1f s >= 120 s", secs));
  if (v.pass) v.detail = std::to_string(cases.size()) + " components x 20 configs, worst " + fmt("%.2e, %.1f s", worst, secs);
  return v;
}

Verdict graph_oracle() {
  Verdict v;
  Stopwatch t;
  auto s = oracle::graph_suite(1);
  const double secs = t.seconds();
  v.require(s.passed, s.detail);
  v.require(secs < 5.0, fmt("runtime %.2f s >= 5 s", secs));
  if (v.pass) v.detail = s.detail + fmt(", %.2f s", secs);
  return v;
}

Verdict eer_oracle() {
  Verdict v;
  auto s = oracle::eer_suite(1, 200);
  v.require(s.passed, s.detail);
  v.require(s.cases == 200 + 3, "expected 200 score sets plus 3 worked examples");
  const double a = compute_eer({0.1, 0.2}, {0.8, 0.9}).eer;
  const double b = compute_eer({0.3, 0.1, 0.7}, {0.7, 0.3, 0.1}).eer;
  const double c = compute_eer({0.1, 0.4, 0.5}, {0.3, 0.6}).eer;
  v.require(a == 0.0, fmt("separable example gave %.6f", a));
  v.require(b == 0.5, fmt("identical example gave %.6f", b));
  v.require(std::fabs(c - 5.0 / 12.0) <= 1e-12, fmt("interleaved example gave %.6f", c));
  if (v.pass) v.detail = s.detail + fmt("; examples %.0f, %.1f, %.4f", a, b, c);
  return v;
}

// --- 5: invariances ------------------------------------------------------------

NetworkConfig small_network(Variant variant) {
  NetworkConfig n;
  n.d = 8;
  n.k_nn = 3;
  n.variant = variant;
  return n;
}

Verdict invariances() {
  Verdict v;
  std::mt19937_64 rng(derive_seed(1, "acceptance-invariance"));
  RunConfig full;
  full.network = small_network(Variant::kFull);
  const auto full_params = init_parameters(full.network, 2);
  RunConfig gru;
  gru.network = small_network(Variant::kGruOnly);
  const auto gru_params = init_parameters(gru.network, 3);

  int moved = 0, permuted = 0, masked_blocks = 0;
  for (int trial = 0; trial < 30; ++trial) {
    // Integer coordinates keep the affine maps exact in float64.
    auto raw = testing::random_signature(rng, 1 + trial % 3, 12);
    for (auto& p : raw.points) p.x = std::round(p.x), p.y = std::round(p.y);
    const Matrix base = embed_signature(full_params, full, raw);
    for (auto [scale, dx, dy] : {std::tuple{2.0, 17.0, -40.0}, std::tuple{0.5, -300.0, 8.0}, std::tuple{3.0, 1024.0, 5.0}}) {
      auto other = raw;
      for (auto& p : other.points) p.x = scale * p.x + dx, p.y = scale * p.y + dy;
      if (!(embed_signature(full_params, full, other) == base)) {
        v.require(false, "scale/translation changed an embedding at trial " + std::to_string(trial));
        return v;
      }
      ++moved;
    }

    const auto norm = normalize_signature(raw);
    const Matrix coords = norm.coordinates();
    std::vector<Index> perm(static_cast<std::size_t>(coords.rows()));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix shuffled(coords.rows(), 2);
    for (Index i = 0; i < coords.rows(); ++i) shuffled.row(i) = coords.row(perm[static_cast<std::size_t>(i)]);
    const Matrix features = prepare_features(raw).values;
    const auto graphs = build_graphs(norm.flags(), coords, full.network);
    if (!(embed(gru_params, gru.network, features, graphs) ==
          embed(gru_params, gru.network, features, build_graphs(norm.flags(), shuffled, full.network)))) {
      v.require(false, "gru_only embedding changed under coordinate permutation at trial " + std::to_string(trial));
      return v;
    }
    ++permuted;

    auto deep = full.network;
    deep.n_blocks = 3;
    const auto deep_params = init_parameters(deep, 4 + static_cast<std::uint64_t>(trial));
    ad::Tape tape;
    BoundParameters bound(tape, deep_params, false);
    ForwardTrace trace;
    network_forward(bound, features, graphs, deep, &trace);
    for (std::size_t b = 0; b < trace.step_weights.size(); ++b) {
      const Matrix& step = graphs.step.structure;
      const Matrix& knn = graphs.knn.structure;
      const bool ok = (step.array() != 0.0 || trace.step_weights[b].array() == 0.0).all() &&
                      (knn.array() != 0.0 || trace.knn_weights[b].array() == 0.0).all();
      if (!ok) {
        v.require(false, "nonzero attention outside structure at block " + std::to_string(b));
        return v;
      }
      ++masked_blocks;
    }
  }
  v.detail = std::to_string(moved) + " transformed, " + std::to_string(permuted) + " permuted, " +
             std::to_string(masked_blocks) + " block masks exact";
  return v;
}

// --- 6: determinism --------------------------------------------------------------

struct PipelineRun {
  fs::path checkpoint, trace, report, scores;
};

PipelineRun pipeline(const fs::path& dir, const std::string& data, const std::string& workers) {
  tsgatr_cli({"train", "--data", data, "--out", (dir / "train").string(), "--seed", "5", "--workers", workers, "--set",
              "model.d=8", "--set", "model.k_nn=8", "--set", "train.epochs=2"});
  const auto ckpt = (dir / "train" / "checkpoint.json").string();
  tsgatr_cli({"eval", "--data", data, "--out", (dir / "eval").string(), "--ckpt", ckpt, "--seed", "5", "--workers",
              workers});
  return {ckpt, dir / "train" / "loss_trace.csv", dir / "eval" / "report.json", dir / "eval" / "scores.csv"};
}

Verdict determinism(const fs::path& work) {
  Verdict v;
  const fs::path root = work / "determinism";
  fs::remove_all(root);
  std::string data[2];
  for (int i = 0; i < 2; ++i) {
    data[i] = (root / ("data" + std::to_string(i))).string();
    tsgatr_cli({"gen", "--out", data[i], "--seed", "7", "--train-users", "4", "--test-users", "3", "--samples", "6"});
  }
  v.require(slurp(fs::path(data[0]) / "manifest.json") == slurp(fs::path(data[1]) / "manifest.json"),
            "gen manifests differ");
  const auto a = pipeline(root / "w1a", data[0], "1");
  const auto b = pipeline(root / "w1b", data[1], "1");
  const auto c = pipeline(root / "w4", data[0], "4");
  v.require(slurp(a.checkpoint) == slurp(b.checkpoint), "checkpoints differ at --workers 1");
  v.require(slurp(a.trace) == slurp(b.trace), "loss traces differ at --workers 1");
  v.require(slurp(a.report) == slurp(b.report), "reports differ at --workers 1");
  v.require(slurp(a.scores) == slurp(b.scores), "scores differ at --workers 1");
  v.require(slurp(a.report) == slurp(c.report), "reports differ between --workers 1 and 4");
  v.require(slurp(a.checkpoint) == slurp(c.checkpoint), "checkpoints differ between --workers 1 and 4");
  if (v.pass) v.detail = "checkpoint, trace, report and scores byte-identical; --workers 4 report identical";
  return v;
}

// --- 7-9: desk-scale learning and protocol ---------------------------------------

struct SeedResult {
  double full_skilled = 0, full_random = 0, gru_skilled = 0, base_skilled = 0, base_random = 0;
};

struct LearningRun {
  std::vector<SeedResult> seeds;
  double learning_seconds = 0;  ///< full models and reference scorer
  double ablation_seconds = 0;  ///< gru_only models
  fs::path seed1_data, seed1_checkpoint;
};

constexpr const char* kSkilled = "1vs1/skilled/first_n";
constexpr const char* kRandom = "1vs1/random/first_n";

LearningRun learning(const fs::path& work) {
  LearningRun out;
  const fs::path root = work / "learning";
  fs::remove_all(root);
  const std::vector<std::string> model = {"--set", "model.d=32", "--set", "model.blocks=2", "--set", "train.epochs=15"};
  const std::string protocol = std::string(kSkilled) + "," + kRandom;
  for (int seed = 1; seed <= 3; ++seed) {
    const auto s = std::to_string(seed);
    const fs::path dir = root / ("seed" + s);
    const auto data = (dir / "data").string();
    SeedResult r;

    Stopwatch learn;
    tsgatr_cli({"gen", "--out", data, "--seed", s, "--train-users", "12", "--test-users", "8", "--samples", "12"});
    auto train = std::vector<std::string>{"train", "--data", data, "--out", (dir / "full").string(), "--seed", s};
    train.insert(train.end(), model.begin(), model.end());
    tsgatr_cli(train);
    const auto ckpt = (dir / "full" / "checkpoint.json").string();
    tsgatr_cli({"eval", "--data", data, "--out", (dir / "full_eval").string(), "--ckpt", ckpt, "--seed", s,
                "--protocol", protocol});
    tsgatr_cli({"eval", "--data", data, "--out", (dir / "base_eval").string(), "--baseline", "--seed", s,
                "--protocol", protocol});
    out.learning_seconds += learn.seconds();

    Stopwatch ablate;
    train[4] = (dir / "gru").string();
    train.insert(train.end(), {"--variant", "gru_only"});
    tsgatr_cli(train);
    tsgatr_cli({"eval", "--data", data, "--out", (dir / "gru_eval").string(), "--ckpt",
                (dir / "gru" / "checkpoint.json").string(), "--seed", s, "--protocol", kSkilled});
    out.ablation_seconds += ablate.seconds();

    r.full_skilled = cell_eer(dir / "full_eval" / "report.json", kSkilled);
    r.full_random = cell_eer(dir / "full_eval" / "report.json", kRandom);
    r.base_skilled = cell_eer(dir / "base_eval" / "report.json", kSkilled);
    r.base_random = cell_eer(dir / "base_eval" / "report.json", kRandom);
    r.gru_skilled = cell_eer(dir / "gru_eval" / "report.json", kSkilled);
    std::printf("  seed %d  full %.2f/%.2f  gru_only %.2f  reference %.2f/%.2f  (skilled/random EER_g %%)\n", seed,
                r.full_skilled, r.full_random, r.gru_skilled, r.base_skilled, r.base_random);
    std::fflush(stdout);
    out.seeds.push_back(r);
    if (seed == 1) {
      out.seed1_data = data;
      out.seed1_checkpoint = ckpt;
    }
  }
  return out;
}

double mean_of(const LearningRun& run, double SeedResult::*field) {
  double s = 0;
  for (const auto& r : run.seeds) s += r.*field;
  return s / static_cast<double>(run.seeds.size());
}

Verdict desk_learning(const LearningRun& run) {
  Verdict v;
  const double skilled = mean_of(run, &SeedResult::full_skilled);
  const double random = mean_of(run, &SeedResult::full_random);
  const double base = mean_of(run, &SeedResult::base_skilled);
  v.require(skilled <= 20.0, fmt("mean skilled EER %.2f%% > 20%%", skilled));
  v.require(random <= 10.0, fmt("mean random EER %.2f%% > 10%%", random));
  v.require(random <= skilled, fmt("mean random EER %.2f%% > skilled %.2f%%", random, skilled));
  v.require(skilled < base, fmt("mean skilled EER %.2f%% not below reference %.2f%%", skilled, base));
  v.require(run.learning_seconds <= 600.0, fmt("runtime %.0f s > 600 s", run.learning_seconds));
  if (v.pass)
    v.detail = fmt("mean skilled %.2f%%, random %.2f%%, reference skilled %.2f%%; %.0f s", skilled, random, base,
                   run.learning_seconds);
  return v;
}

Verdict ablation(const LearningRun& run) {
  Verdict v;
  const double full = mean_of(run, &SeedResult::full_skilled);
  const double gru = mean_of(run, &SeedResult::gru_skilled);
  v.require(full <= gru + 2.0, fmt("full %.2f%% > gru_only %.2f%% + 2", full, gru));
  if (v.pass) v.detail = fmt("mean skilled EER full %.2f%% vs gru_only %.2f%%; %.0f s", full, gru, run.ablation_seconds);
  return v;
}

Verdict protocol_fidelity(const fs::path& work, const fs::path& data, const fs::path& ckpt) {
  Verdict v;
  const fs::path out = work / "protocol";
  fs::remove_all(out);
  tsgatr_cli({"eval", "--data", data.string(), "--out", out.string(), "--ckpt", ckpt.string(), "--seed", "1",
              "--protocol", "4vs1/skilled/first_n,4vs1/skilled/random_min"});
  const auto report = json::parse(slurp(out / "report.json"));
  const auto dataset = read_manifest(data);

  std::map<std::string, std::vector<std::string>> first_four;
  for (const auto& u : dataset.users) {
    if (u.split != Split::kTest) continue;
    for (std::size_t k = 0; k < 4 && k < u.genuine.size(); ++k)
      first_four[u.user_id].push_back(dataset.signatures[u.genuine[k]].sig_id);
  }
  const auto& first = find_cell(report, "4vs1/skilled/first_n");
  v.require(first.at("runs").size() == 1, "first_n should have one run");
  std::size_t users = 0;
  for (const auto& u : first.at("runs").at(0).at("users")) {
    ++users;
    const auto templates = u.at("templates").get<std::vector<std::string>>();
    v.require(templates == first_four.at(u.at("user").get<std::string>()),
              "user " + u.at("user").get<std::string>() + " templates are not the first 4 genuine");
  }
  v.require(users == first_four.size(), "first_n cell did not score every test user");

  const auto& rmin = find_cell(report, "4vs1/skilled/random_min");
  const auto& runs = rmin.at("runs");
  v.require(runs.size() == 20, "random_min has " + std::to_string(runs.size()) + " runs, expected 20");
  std::set<std::uint64_t> seeds;
  double best = 1.0;
  for (const auto& r : runs) {
    seeds.insert(r.at("seed").get<std::uint64_t>());
    best = std::min(best, r.at("eer_global").get<double>());
    for (const auto& u : r.at("users")) v.require(u.at("templates").size() == 4, "random_min run without 4 templates");
  }
  v.require(seeds.size() == runs.size(), "random_min draws share seeds");
  const double reported = rmin.at("eer_global_percent").get<double>();
  v.require(reported == 100.0 * best, fmt("random_min reports %.4f%%, min over runs is %.4f%%", reported, 100 * best));
  if (v.pass)
    v.detail = std::to_string(users) + " users with first 4 templates; random_min = min over " +
               std::to_string(runs.size()) + " seeded draws";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "tsgatr_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: tsgatr_acceptance [--work DIR] [--only 1,2,...]\n";
      return 2;
    }
  }
  fs::create_directories(work);
  auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  bool all = true;
  auto report = [&](int n, const std::string& title, const std::function<Verdict()>& check) {
    if (!wanted(n)) return;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    all = all && v.pass;
    std::printf("%s criterion %d: %s (%s)\n", v.pass ? "PASS" : "FAIL", n, title.c_str(), v.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "DTW oracle equivalence", dtw_oracle);
  report(2, "gradient suite", gradient_suite);
  report(3, "graph construction", graph_oracle);
  report(4, "EER oracle", eer_oracle);
  report(5, "pipeline invariances", invariances);
  report(6, "determinism", [&] { return determinism(work); });

  if (wanted(7) || wanted(8) || wanted(9)) {
    std::optional<LearningRun> run;
    std::string failure;
    try {
      run = learning(work);
    } catch (const std::exception& e) {
      failure = std::string("exception: ") + e.what();
    }
    auto from_run = [&](const std::function<Verdict(const LearningRun&)>& f) {
      return [&, f] { return run ? f(*run) : Verdict{false, failure}; };
    };
    report(7, "desk-scale learning", from_run(desk_learning));
    report(8, "ablation direction", from_run(ablation));
    report(9, "protocol fidelity", from_run([&](const LearningRun& r) {
             return protocol_fidelity(work, r.seed1_data, r.seed1_checkpoint);
           }));
  }
  return all ? 0 : 1;
}
