#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tsgatr/config.hpp"
#include "tsgatr/dataset.hpp"
#include "tsgatr/params.hpp"
#include "tsgatr/pipeline.hpp"

namespace tsgatr {

struct OptimizerState {
  ParameterStore first_moment;
  ParameterStore second_moment;
  std::int64_t step = 0;
};

OptimizerState make_optimizer_state(const ParameterStore& params);

struct StepStats {
  double grad_norm = 0.0;     ///< global norm before clipping
  double applied_norm = 0.0;  ///< global norm of the gradient fed to Adam
};

/// Clips `grads` to the configured global norm and applies one bias-corrected
/// Adam update. Non-finite gradients throw Error and leave params and state
/// untouched.
StepStats optimizer_step(ParameterStore& params, ParameterStore grads, OptimizerState& state,
                         const AdamOptions& options);

struct LossTraceRow {
  std::int64_t step = 0;
  int epoch = 0;
  std::string author;
  double loss = 0.0;
  double margin = 0.0;
  double threshold = 0.0;
};

std::string loss_trace_header();
std::string format_trace_row(const LossTraceRow& row);

struct Checkpoint {
  RunConfig config;
  std::uint64_t seed = 0;
  std::uint64_t manifest_hash = 0;
  std::int64_t step = 0;  ///< optimization steps already taken
  ParameterStore params;
  OptimizerState optimizer;
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text, const std::string& source = "<checkpoint>");
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Gradient of a loss over a set of embeddings, per embedding.
struct EmbeddingLoss {
  double total = 0.0;
  double margin = 0.0;
  double threshold = 0.0;
  std::vector<Matrix> grads;  ///< dL/dH for each embedding, in batch order
};

/// author_loss on a fresh tape whose leaves are the given embeddings (order
/// anchors, positives, skilled, random as in TripletBatch::all()).
EmbeddingLoss embedding_loss(const std::vector<Matrix>& embeddings, const TripletBatch& batch,
                             const RunConfig& config);

struct BatchGradient {
  EmbeddingLoss loss;
  ParameterStore grads;
};

/// Loss and parameter gradient of one triplet batch. Each signature's
/// forward/backward runs on its own tape (in parallel with `workers` > 1);
/// the per-signature gradients are summed in batch order.
BatchGradient batch_gradient(const ParameterStore& params, const std::vector<PreparedSignature>& prepared,
                             const TripletBatch& batch, const RunConfig& config, int workers = 1);

/// One optimization step per training author per epoch, authors visited in a
/// seeded shuffled order. All randomness derives from the seed and the
/// global step, so a resumed run continues the exact trajectory.
class Trainer {
 public:
  Trainer(const Dataset& dataset, const RunConfig& config, std::uint64_t seed, int workers = 1);
  /// Continues from `checkpoint`; its config and seed take precedence.
  Trainer(const Dataset& dataset, Checkpoint checkpoint, int workers = 1);

  std::int64_t steps_per_epoch() const { return steps_per_epoch_; }
  std::int64_t total_steps() const { return steps_per_epoch_ * checkpoint_.config.train.epochs; }
  std::int64_t current_step() const { return checkpoint_.step; }
  bool done() const { return current_step() >= total_steps(); }

  /// Training-author index (into Dataset::users) used by global step `step`.
  std::size_t author_for_step(std::int64_t step) const;

  /// Takes one step. Throws Error naming seed and step on a non-finite loss
  /// or gradient.
  LossTraceRow step();

  /// Runs to completion. `on_checkpoint` fires every
  /// train.checkpoint_every steps and after the final step.
  void run(const std::function<void(const LossTraceRow&)>& on_step = {},
           const std::function<void(const Checkpoint&)>& on_checkpoint = {});

  const Checkpoint& checkpoint() const { return checkpoint_; }
  const ParameterStore& params() const { return checkpoint_.params; }

 private:
  void prepare();

  const Dataset& dataset_;
  Checkpoint checkpoint_;
  int workers_;
  std::vector<std::size_t> authors_;
  std::int64_t steps_per_epoch_ = 0;
  std::vector<PreparedSignature> prepared_;
};

}  // namespace tsgatr
