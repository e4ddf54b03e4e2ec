#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "tsgatr/config.hpp"
#include "tsgatr/datagen.hpp"
#include "tsgatr/dataset.hpp"
#include "tsgatr/evaluator.hpp"
#include "tsgatr/gradsuite.hpp"
#include "tsgatr/pipeline.hpp"
#include "tsgatr/selftest.hpp"
#include "tsgatr/trainer.hpp"

namespace tsgatr::cli {

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

/// Applies `key=value` overrides on top of a base config.
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + item + "'");
    set_config_value(config, item.substr(0, eq), item.substr(eq + 1));
  }
}

struct GenArgs {
  std::string out;
  std::uint64_t seed = 1;
  int train_users = 4;
  int test_users = 4;
  int samples = 10;
};

struct TrainArgs {
  std::string data, out, config, ckpt, variant;
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct EvalArgs {
  std::string data, out, config, ckpt, protocol;
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  int workers = 1;
  bool baseline = false;
};

struct VerifyArgs {
  std::string ckpt, probe;
  std::vector<std::string> templates;
  double threshold = 0.0;
};

struct CheckArgs {
  std::uint64_t seed = 1;
  int configurations = 20;
  double tolerance = 1e-4;
};

int do_gen(const GenArgs& a, std::ostream& out) {
  GenerateOptions options;
  options.seed = a.seed;
  options.train_users = a.train_users;
  options.test_users = a.test_users;
  options.samples_per_user = a.samples;
  const auto manifest = generate_dataset(a.out, options);
  std::size_t files = 0;
  for (const auto& u : manifest.users) files += u.signatures.size();
  const auto hash = fnv1a64(manifest_to_json(manifest));
  out << "generated " << manifest.users.size() << " users, " << files << " signatures in " << a.out << "\n"
      << "seed " << a.seed << " manifest " << hex64(hash) << "\n";
  return kExitOk;
}

int do_train(const TrainArgs& a, std::ostream& out) {
  const auto dataset = read_manifest(a.data);
  ensure_dir(a.out);
  const fs::path trace_path = fs::path(a.out) / "loss_trace.csv";
  const fs::path ckpt_path = fs::path(a.out) / "checkpoint.json";

  std::optional<Trainer> trainer;
  std::string kept_trace;
  if (!a.ckpt.empty()) {
    if (!a.config.empty() || !a.variant.empty() || !a.overrides.empty())
      throw UsageError("--ckpt resumes with the checkpoint's config; --config, --variant and --set are not allowed");
    auto ck = load_checkpoint(a.ckpt);
    // Keep the trace rows that precede the resume point.
    std::ifstream in(trace_path);
    std::string line;
    if (in && std::getline(in, line)) {
      while (std::getline(in, line)) {
        const auto step = std::stoll(line.substr(0, line.find(',')));
        if (step < ck.step) kept_trace += line + "\n";
      }
    }
    trainer.emplace(dataset, std::move(ck), a.workers);
  } else {
    RunConfig config = a.config.empty() ? RunConfig{} : read_config(a.config);
    if (!a.variant.empty()) config.network.variant = parse_variant(a.variant);
    apply_overrides(config, a.overrides);
    config.validate();
    trainer.emplace(dataset, config, a.seed, a.workers);
  }
  const auto& ck = trainer->checkpoint();
  out << "config " << hex64(config_hash(ck.config)) << " seed " << ck.seed << " steps " << trainer->total_steps()
      << "\n";

  std::ofstream trace(trace_path, std::ios::binary | std::ios::trunc);
  if (!trace) throw Error("cannot write " + trace_path.string());
  trace << loss_trace_header() << "\n" << kept_trace;
  double last = 0.0;
  bool saved = false;
  trainer->run(
      [&](const LossTraceRow& row) {
        trace << format_trace_row(row) << "\n";
        trace.flush();
        last = row.loss;
      },
      [&](const Checkpoint& c) {
        save_checkpoint(ckpt_path, c);
        saved = true;
      });
  if (!saved) save_checkpoint(ckpt_path, trainer->checkpoint());
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", last);
  out << "final loss " << buf << "\nwrote " << ckpt_path.string() << " and " << trace_path.string() << "\n";
  return kExitOk;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
  if (a.ckpt.empty() && !a.baseline) throw UsageError("eval needs --ckpt or --baseline");
  const auto dataset = read_manifest(a.data);
  RunConfig config;
  std::optional<Checkpoint> ck;
  if (!a.ckpt.empty()) {
    ck = load_checkpoint(a.ckpt);
    config = ck->config;
  }
  if (!a.config.empty()) {
    // Only evaluation keys are taken from --config; the model is fixed by
    // the checkpoint.
    const auto extra = read_config(a.config);
    config.eval = extra.eval;
    if (!ck) config = extra;
  }
  apply_overrides(config, a.overrides);
  if (!a.protocol.empty()) config.eval.protocol = a.protocol;
  config.validate();
  const auto cells = parse_protocols(config.eval.protocol);

  SequenceTable sequences = a.baseline ? feature_test_split(dataset, config.features, a.workers)
                                       : embed_test_split(dataset, ck->params, config, a.workers);
  ProtocolOptions options;
  options.aggregation = config.eval.aggregation;
  options.interpolate = config.eval.interpolate;
  options.runs = config.eval.runs;
  options.workers = a.workers;
  auto report = run_protocol(dataset, sequences, cells, options, a.seed);
  report.scorer = a.baseline ? "feature_dtw" : "model";
  report.config_hash = config_hash(config);

  ensure_dir(a.out);
  write_text(fs::path(a.out) / "report.json", report_to_json(report));
  write_text(fs::path(a.out) / "scores.csv", report_scores_csv(report));
  out << "config " << hex64(report.config_hash) << " seed " << a.seed << " scorer " << report.scorer << "\n"
      << "cell                     EER_g/EER_l (%)\n"
      << report_summary(report);
  for (const auto& c : report.cells)
    if (!c.skipped_users.empty())
      out << c.cell.name() << ": skipped " << c.skipped_users.size() << " users with too few signatures\n";
  return kExitOk;
}

int do_verify(const VerifyArgs& a, std::ostream& out) {
  const auto ck = load_checkpoint(a.ckpt);
  std::vector<Matrix> templates;
  for (const auto& t : a.templates) templates.push_back(embed_signature(ck.params, ck.config, read_signature_csv(t)));
  const Matrix probe = embed_signature(ck.params, ck.config, read_signature_csv(a.probe));
  const double score = verification_score(templates, probe, ck.config.eval.aggregation);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "score %.9g threshold %.9g", score, a.threshold);
  out << (score <= a.threshold ? "accept " : "reject ") << buf << "\n";
  return kExitOk;
}

int do_gradcheck(const CheckArgs& a, std::ostream& out) {
  bool ok = true;
  for (const auto& r : suite::run_gradient_suite(a.seed, a.configurations)) {
    const bool pass = r.max_relative_error <= a.tolerance;
    ok = ok && pass;
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%-20s %s max_rel_err %.3e (%.3e vs %.3e)  configs %d  coords %zu  kinks skipped %zu",
                  r.name.c_str(), pass ? "ok  " : "FAIL", r.max_relative_error, r.worst_analytic, r.worst_numeric,
                  r.configurations, r.checked, r.skipped_kinks);
    out << buf << "\n";
  }
  return ok ? kExitOk : kExitDomainError;
}

int do_selftest(std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  for (const auto& s : {oracle::dtw_suite(seed), oracle::graph_suite(seed), oracle::eer_suite(seed)}) {
    ok = ok && s.passed;
    out << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
  }
  return ok ? kExitOk : kExitDomainError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"tsgatr: online signature verification with dual-graph attention and recurrent fusion", "tsgatr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tsgatr 0.1.0");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic signature corpus");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--train-users", gen.train_users, "Training users")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--test-users", gen.test_users, "Test users")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--samples", gen.samples, "Genuine signatures and skilled forgeries per user")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint and loss trace");
  train_cmd->add_option("--data", train.data, "Manifest file or dataset directory")->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--config", train.config, "Run config file (key = value)");
  train_cmd->add_option("--ckpt", train.ckpt, "Resume from this checkpoint");
  train_cmd->add_option("--variant", train.variant, "full, gru_only or dgatr_only");
  train_cmd->add_option("--set", train.overrides, "Config override key=value (repeatable)");
  train_cmd->add_option("--seed", train.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--workers", train.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate the protocol matrix and write report.json and scores.csv");
  eval_cmd->add_option("--data", eval.data, "Manifest file or dataset directory")->required();
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--ckpt", eval.ckpt, "Trained checkpoint");
  eval_cmd->add_flag("--baseline", eval.baseline, "Score with DTW on the input features instead of a model");
  eval_cmd->add_option("--config", eval.config, "Config file supplying eval.* keys");
  eval_cmd->add_option("--set", eval.overrides, "Config override key=value (repeatable)");
  eval_cmd->add_option("--protocol", eval.protocol, "Protocol cells, e.g. all, 1vs1, 4vs1/skilled/first_n");
  eval_cmd->add_option("--seed", eval.seed, "Random seed")->capture_default_str();
  eval_cmd->add_option("--workers", eval.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Accept or reject one probe against a template set");
  verify_cmd->add_option("--ckpt", verify.ckpt, "Trained checkpoint")->required();
  verify_cmd->add_option("--templates", verify.templates, "Template signature CSV files")->required();
  verify_cmd->add_option("--probe", verify.probe, "Probe signature CSV file")->required();
  verify_cmd->add_option("--threshold", verify.threshold, "Accept when score <= threshold")->required();

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable component");
  check_cmd->add_option("--seed", check.seed, "Random seed")->capture_default_str();
  check_cmd->add_option("--configs", check.configurations, "Random instances per component")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  check_cmd->add_option("--tolerance", check.tolerance, "Maximum relative error")->capture_default_str();

  std::uint64_t selftest_seed = 1;
  auto* selftest_cmd = app.add_subcommand("selftest", "Run the DTW, graph and EER oracle suites");
  selftest_cmd->add_option("--seed", selftest_seed, "Random seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsageError;
  }

  try {
    if (gen_cmd->parsed()) return do_gen(gen, out);
    if (train_cmd->parsed()) return do_train(train, out);
    if (eval_cmd->parsed()) return do_eval(eval, out);
    if (verify_cmd->parsed()) return do_verify(verify, out);
    if (check_cmd->parsed()) return do_gradcheck(check, out);
    if (selftest_cmd->parsed()) return do_selftest(selftest_seed, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsageError;
}

}  // namespace tsgatr::cli
