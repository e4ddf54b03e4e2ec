#include "tsgatr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "tsgatr/objective.hpp"
#include "tsgatr/parallel.hpp"

namespace tsgatr {

namespace {

using nlohmann::json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

OptimizerState make_optimizer_state(const ParameterStore& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

StepStats optimizer_step(ParameterStore& params, ParameterStore grads, OptimizerState& state,
                         const AdamOptions& options) {
  if (!grads.same_layout(params) || !state.first_moment.same_layout(params) ||
      !state.second_moment.same_layout(params))
    throw Error("optimizer_step: gradient or moment layout does not match parameters");
  if (!grads.all_finite()) throw Error("optimizer_step: non-finite gradient");
  StepStats stats;
  stats.grad_norm = std::sqrt(grads.squared_norm());
  if (options.clip_norm > 0.0 && stats.grad_norm > options.clip_norm) grads.scale(options.clip_norm / stats.grad_norm);
  stats.applied_norm = std::sqrt(grads.squared_norm());

  const auto t = static_cast<double>(state.step + 1);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t k = 0; k < params.count(); ++k) {
    auto p = params.entries()[k].value.array();
    const auto g = grads.entries()[k].value.array();
    auto m = state.first_moment.entries()[k].value.array();
    auto v = state.second_moment.entries()[k].value.array();
    m = options.beta1 * m + (1.0 - options.beta1) * g;
    v = options.beta2 * v + (1.0 - options.beta2) * g.square();
    p -= options.lr * (m / correction1) / ((v / correction2).sqrt() + options.eps);
  }
  ++state.step;
  return stats;
}

std::string loss_trace_header() { return "step,epoch,author,loss,margin_term,threshold_term"; }

std::string format_trace_row(const LossTraceRow& row) {
  return std::to_string(row.step) + "," + std::to_string(row.epoch) + "," + row.author + "," + format_real(row.loss) +
         "," + format_real(row.margin) + "," + format_real(row.threshold);
}

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  json doc;
  doc["format"] = "tsgatr-checkpoint";
  doc["version"] = 1;
  doc["config"] = to_config_text(checkpoint.config);
  doc["seed"] = checkpoint.seed;
  doc["manifest_hash"] = hex64(checkpoint.manifest_hash);
  doc["step"] = checkpoint.step;
  doc["params"] = detail::params_json(checkpoint.params);
  doc["optimizer"] = {{"step", checkpoint.optimizer.step},
                      {"first_moment", detail::params_json(checkpoint.optimizer.first_moment)},
                      {"second_moment", detail::params_json(checkpoint.optimizer.second_moment)}};
  return doc.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(source + ": malformed JSON: " + e.what());
  }
  try {
    if (doc.at("format") != "tsgatr-checkpoint") throw Error(source + ": not a tsgatr checkpoint");
    if (doc.at("version") != 1) throw Error(source + ": unsupported checkpoint version");
    Checkpoint ck;
    ck.config = parse_config(doc.at("config").get<std::string>(), source + " (embedded config)");
    ck.seed = doc.at("seed").get<std::uint64_t>();
    ck.manifest_hash = std::stoull(doc.at("manifest_hash").get<std::string>(), nullptr, 16);
    ck.step = doc.at("step").get<std::int64_t>();
    ck.params = detail::params_from_json(doc.at("params"));
    const auto& opt = doc.at("optimizer");
    ck.optimizer.step = opt.at("step").get<std::int64_t>();
    ck.optimizer.first_moment = detail::params_from_json(opt.at("first_moment"));
    ck.optimizer.second_moment = detail::params_from_json(opt.at("second_moment"));
    if (!ck.optimizer.first_moment.same_layout(ck.params) || !ck.optimizer.second_moment.same_layout(ck.params))
      throw Error(source + ": optimizer moments do not match parameters");
    const auto expected = init_parameters(ck.config.network, 0);
    if (!expected.same_layout(ck.params)) throw Error(source + ": parameters do not match the embedded model config");
    return ck;
  } catch (const json::exception& e) {
    throw Error(source + ": invalid checkpoint: " + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(checkpoint);
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str(), path.string());
}

EmbeddingLoss embedding_loss(const std::vector<Matrix>& embeddings, const TripletBatch& batch,
                             const RunConfig& config) {
  const auto sizes = std::vector<std::size_t>{batch.anchors.size(), batch.positives.size(), batch.skilled.size(),
                                              batch.random.size()};
  if (embeddings.size() != std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}))
    throw Error("embedding_loss: embedding count does not match batch");
  ad::Tape tape;
  std::vector<ad::Var> leaves;
  for (const auto& h : embeddings) leaves.push_back(tape.variable(h));
  TripletEmbeddings emb;
  std::size_t k = 0;
  for (auto* role : {&emb.anchors, &emb.positives, &emb.skilled, &emb.random}) {
    const auto n = sizes[static_cast<std::size_t>(role - &emb.anchors)];
    for (std::size_t i = 0; i < n; ++i) role->push_back(leaves[k++]);
  }
  const auto terms = author_loss(emb, config.loss, config.distance);
  tape.backward(terms.total);
  EmbeddingLoss out;
  out.total = terms.total.scalar();
  out.margin = terms.margin.scalar();
  out.threshold = terms.threshold.scalar();
  for (auto v : leaves) out.grads.push_back(tape.gradient(v));
  return out;
}

BatchGradient batch_gradient(const ParameterStore& params, const std::vector<PreparedSignature>& prepared,
                             const TripletBatch& batch, const RunConfig& config, int workers) {
  const auto slots = batch.all();
  // A signature drawn twice is embedded once; its slot gradients are summed.
  std::vector<std::size_t> unique;
  std::vector<std::size_t> slot_to_unique;
  for (auto s : slots) {
    auto it = std::find(unique.begin(), unique.end(), s);
    if (it == unique.end()) {
      slot_to_unique.push_back(unique.size());
      unique.push_back(s);
    } else {
      slot_to_unique.push_back(static_cast<std::size_t>(it - unique.begin()));
    }
  }

  struct Pass {
    std::unique_ptr<ad::Tape> tape;
    std::unique_ptr<BoundParameters> bound;
    ad::Var output;
  };
  std::vector<Pass> passes(unique.size());
  parallel_for(unique.size(), workers, [&](std::size_t k) {
    const auto& input = prepared.at(unique[k]);
    if (input.features.rows() == 0) throw Error("batch_gradient: signature was not prepared");
    auto& pass = passes[k];
    pass.tape = std::make_unique<ad::Tape>();
    pass.bound = std::make_unique<BoundParameters>(*pass.tape, params);
    pass.output = network_forward(*pass.bound, input.features, input.graphs, config.network);
  });

  std::vector<Matrix> embeddings;
  for (auto u : slot_to_unique) embeddings.push_back(passes[u].output.value());
  BatchGradient out;
  out.loss = embedding_loss(embeddings, batch, config);

  std::vector<Matrix> seeds(unique.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    auto& seed = seeds[slot_to_unique[s]];
    if (seed.size() == 0) seed = out.loss.grads[s];
    else seed += out.loss.grads[s];
  }
  std::vector<ParameterStore> grads(unique.size());
  parallel_for(unique.size(), workers, [&](std::size_t k) {
    passes[k].tape->backward(passes[k].output, seeds[k]);
    grads[k] = passes[k].bound->gradients();
    passes[k].bound.reset();
    passes[k].tape.reset();
  });
  out.grads = params.zeros_like();
  for (const auto& g : grads) out.grads += g;
  return out;
}

Trainer::Trainer(const Dataset& dataset, const RunConfig& config, std::uint64_t seed, int workers)
    : dataset_(dataset), workers_(workers) {
  config.validate();
  checkpoint_.config = config;
  checkpoint_.seed = seed;
  checkpoint_.manifest_hash = dataset.manifest_hash;
  checkpoint_.params = init_parameters(config.network, seed);
  checkpoint_.optimizer = make_optimizer_state(checkpoint_.params);
  prepare();
}

Trainer::Trainer(const Dataset& dataset, Checkpoint checkpoint, int workers)
    : dataset_(dataset), checkpoint_(std::move(checkpoint)), workers_(workers) {
  if (checkpoint_.manifest_hash != dataset.manifest_hash)
    throw Error("checkpoint was trained on a different dataset (manifest hash " + hex64(checkpoint_.manifest_hash) +
                ", dataset " + hex64(dataset.manifest_hash) + ")");
  prepare();
}

void Trainer::prepare() {
  if (workers_ < 1) throw UsageError("workers must be >= 1");
  authors_ = dataset_.users_in(Split::kTrain);
  if (authors_.empty()) throw Error("dataset has no training authors");
  const auto& train = checkpoint_.config.train;
  steps_per_epoch_ = train.steps_per_epoch > 0 ? train.steps_per_epoch : static_cast<std::int64_t>(authors_.size());
  std::vector<std::size_t> indices;
  for (auto u : authors_)
    for (const auto* pool : {&dataset_.users[u].genuine, &dataset_.users[u].skilled})
      indices.insert(indices.end(), pool->begin(), pool->end());
  prepared_ = prepare_signatures(dataset_, indices, checkpoint_.config, workers_);
}

std::size_t Trainer::author_for_step(std::int64_t step) const {
  const auto epoch = static_cast<std::uint64_t>(step / steps_per_epoch_);
  const auto position = static_cast<std::size_t>(step % steps_per_epoch_);
  auto order = authors_;
  std::mt19937_64 rng(derive_seed(checkpoint_.seed, "epoch", epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order[position % order.size()];
}

LossTraceRow Trainer::step() {
  if (done()) throw Error("training already finished");
  const auto s = checkpoint_.step;
  const auto author = author_for_step(s);
  const auto& config = checkpoint_.config;
  const auto batch = sample_triplets(dataset_, author, config.batch,
                                     derive_seed(checkpoint_.seed, "step", static_cast<std::uint64_t>(s)));
  auto result = batch_gradient(checkpoint_.params, prepared_, batch, config, workers_);
  const std::string where = " at step " + std::to_string(s) + " (seed " + std::to_string(checkpoint_.seed) + ")";
  if (!std::isfinite(result.loss.total)) throw Error("non-finite loss" + where);
  if (!result.grads.all_finite()) throw Error("non-finite gradient" + where);
  optimizer_step(checkpoint_.params, std::move(result.grads), checkpoint_.optimizer, config.train.adam);
  ++checkpoint_.step;

  LossTraceRow row;
  row.step = s;
  row.epoch = static_cast<int>(s / steps_per_epoch_);
  row.author = dataset_.users[author].user_id;
  row.loss = result.loss.total;
  row.margin = result.loss.margin;
  row.threshold = result.loss.threshold;
  return row;
}

void Trainer::run(const std::function<void(const LossTraceRow&)>& on_step,
                  const std::function<void(const Checkpoint&)>& on_checkpoint) {
  const int every = checkpoint_.config.train.checkpoint_every;
  while (!done()) {
    const auto row = step();
    if (on_step) on_step(row);
    if (on_checkpoint && (done() || (every > 0 && checkpoint_.step % every == 0))) on_checkpoint(checkpoint_);
  }
}

}  // namespace tsgatr
