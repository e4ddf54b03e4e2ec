#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsgatr/alignment.hpp"
#include "tsgatr/model.hpp"
#include "tsgatr/objective.hpp"
#include "tsgatr/signal.hpp"

namespace tsgatr {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global-norm clip applied before the update; <= 0 disables clipping.
  double clip_norm = 5.0;
};

struct TrainOptions {
  int epochs = 15;
  /// 0 means one step per training author.
  int steps_per_epoch = 0;
  /// Write a checkpoint every this many steps; 0 writes only the final one.
  int checkpoint_every = 0;
  AdamOptions adam;
};

enum class Aggregation { kMean, kMin };

struct EvalOptions {
  Aggregation aggregation = Aggregation::kMean;
  /// Linear interpolation at the exact FAR/FRR crossing instead of the
  /// candidate-threshold sweep.
  bool interpolate = false;
  /// Draws for the random template strategy.
  int runs = 20;
  /// Comma-separated cell selection, see parse_protocols().
  std::string protocol = "all";
};

/// Everything a run depends on besides the seed and the data.
struct RunConfig {
  NetworkConfig network;
  FeatureOptions features;
  LossHyper loss;
  DistanceOptions distance;
  TripletCounts batch;
  TrainOptions train;
  EvalOptions eval;

  void validate() const;
};

/// One `key = value` per line; `#` starts a comment. Unknown keys, repeated
/// keys and malformed values are usage errors naming `source:line`. Keys
/// not present keep their defaults.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig read_config(const std::filesystem::path& path);

/// Applies a single `key = value` assignment.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Canonical text listing every key in a fixed order; parse_config of the
/// result reproduces `config`.
std::string to_config_text(const RunConfig& config);

/// All recognized keys, in canonical order.
std::vector<std::string> config_keys();

std::uint64_t config_hash(const RunConfig& config);

std::string to_string(Aggregation aggregation);

}  // namespace tsgatr
