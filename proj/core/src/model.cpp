#include "tsgatr/model.hpp"

#include <cmath>
#include <random>

namespace tsgatr {

std::string to_string(PoolKind kind) {
  switch (kind) {
    case PoolKind::kMax: return "max";
    case PoolKind::kAverage: return "avg";
    case PoolKind::kNone: return "none";
  }
  return "?";
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kFull: return "full";
    case Variant::kGruOnly: return "gru_only";
    case Variant::kDgatrOnly: return "dgatr_only";
  }
  return "?";
}

PoolKind parse_pool_kind(std::string_view text) {
  if (text == "max") return PoolKind::kMax;
  if (text == "avg") return PoolKind::kAverage;
  if (text == "none") return PoolKind::kNone;
  throw UsageError("unknown pooling kind '" + std::string(text) + "' (expected max, avg or none)");
}

Variant parse_variant(std::string_view text) {
  if (text == "full") return Variant::kFull;
  if (text == "gru_only") return Variant::kGruOnly;
  if (text == "dgatr_only") return Variant::kDgatrOnly;
  throw UsageError("unknown variant '" + std::string(text) + "' (expected full, gru_only or dgatr_only)");
}

void NetworkConfig::validate() const {
  if (input_dim < 1) throw UsageError("input_dim must be >= 1");
  if (d < 1) throw UsageError("d must be >= 1");
  if (n_blocks < 1) throw UsageError("n_blocks must be >= 1");
  if (k_step < 1) throw UsageError("k_step must be >= 1");
  if (k_nn < 1) throw UsageError("k_nn must be >= 1");
}

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(derive_seed(seed, "init")) {}

  Matrix glorot(Index rows, Index cols) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-a, a);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng_);
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

void add_gru(ParameterStore& store, Initializer& init, const std::string& prefix, Index din, Index d) {
  for (const char* gate : {"update", "reset", "candidate"}) {
    store.add(prefix + ".w_" + gate, init.glorot(din, d));
    store.add(prefix + ".u_" + gate, init.glorot(d, d));
    store.add(prefix + ".b_" + gate, Matrix::Zero(1, d));
  }
}

std::string block_prefix(int b) { return "block" + std::to_string(b); }

}  // namespace

ParameterStore init_parameters(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  const Index d = config.d;
  Initializer init(seed);
  ParameterStore store;
  store.add("input.weight", init.glorot(config.input_dim, d));
  store.add("input.bias", Matrix::Zero(1, d));
  for (int b = 0; b < config.n_blocks; ++b) {
    const auto pre = block_prefix(b);
    if (config.uses_graphs()) {
      for (const char* g : {".gal_step", ".gal_knn"}) {
        store.add(pre + g + ".query", init.glorot(d, d));
        store.add(pre + g + ".key", init.glorot(d, d));
        store.add(pre + g + ".value", init.glorot(d, d));
      }
      store.add(pre + ".ffn.weight", init.glorot(2 * d, d));
      store.add(pre + ".ffn.bias", Matrix::Zero(1, d));
      store.add(pre + ".norm.gain", Matrix::Ones(1, d));
      store.add(pre + ".norm.bias", Matrix::Zero(1, d));
    }
    if (config.uses_gru_branch()) add_gru(store, init, pre + ".gru", d, d);
    if (config.variant == Variant::kFull) {
      store.add(pre + ".gate.weight", init.glorot(2 * d, d));
      store.add(pre + ".gate.bias", Matrix::Zero(1, d));
    }
  }
  if (config.tail_gru) add_gru(store, init, "tail.gru", d, d);
  return store;
}

GraphPair build_graphs(std::span<const int> flags, const Matrix& coords, const NetworkConfig& config) {
  if (coords.rows() != static_cast<Index>(flags.size()))
    throw Error("build_graphs: flags and coordinates differ in length");
  return {build_kstep(flags, config.k_step), build_knn(coords, config.k_nn, config.knn_symmetric)};
}

GalResult gal_forward(ad::Var nodes, const Matrix& structure, ad::Var weights, const GalVars& params) {
  if (structure.rows() != nodes.rows() || weights.rows() != nodes.rows() || weights.cols() != nodes.rows())
    throw Error("gal_forward: adjacency does not match node count");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(nodes.cols()));
  ad::Var q = ad::matmul(nodes, params.query);
  ad::Var k = ad::matmul(nodes, params.key);
  ad::Var v = ad::matmul(nodes, params.value);
  ad::Var scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt_d);
  ad::Var attn = ad::masked_softmax(ad::mul(scores, weights), structure);
  return {ad::matmul(attn, v), attn};
}

DgatrResult dgatr_forward(ad::Var nodes, const GraphPair& graphs, ad::Var step_weights, ad::Var knn_weights,
                          const DgatrVars& params) {
  if (graphs.step.nodes() != graphs.knn.nodes()) throw Error("dgatr_forward: graphs differ in size");
  auto step = gal_forward(nodes, graphs.step.structure, step_weights, params.step);
  auto knn = gal_forward(nodes, graphs.knn.structure, knn_weights, params.knn);
  ad::Var fused = ad::concat_cols(knn.nodes, step.nodes);
  ad::Var hidden = ad::relu(ad::add_row(ad::matmul(fused, params.ffn_weight), params.ffn_bias));
  return {ad::layer_norm(hidden, params.norm_gain, params.norm_bias), step.weights, knn.weights};
}

ad::Var gru_forward(ad::Var sequence, const ad::GruWeights& params, ad::Var h0) {
  if (!h0.valid()) h0 = sequence.tape()->constant(Matrix::Zero(1, params.u_update.rows()));
  return ad::gru_sequence(sequence, params, h0);
}

ad::Var gated_fuse(ad::Var spatial, ad::Var temporal, ad::Var previous, const GateVars& params) {
  if (spatial.rows() != temporal.rows() || spatial.cols() != temporal.cols() || previous.rows() != spatial.rows() ||
      previous.cols() != spatial.cols())
    throw Error("gated_fuse: branch shapes differ");
  ad::Var gate =
      ad::sigmoid(ad::add_row(ad::matmul(ad::concat_cols(spatial, temporal), params.weight), params.bias));
  ad::Var mixed = ad::add(ad::mul(gate, spatial), ad::mul(ad::affine(gate, -1.0, 1.0), temporal));
  return ad::add(mixed, previous);
}

GalVars gal_vars(const BoundParameters& p, const std::string& prefix) {
  return {p[prefix + ".query"], p[prefix + ".key"], p[prefix + ".value"]};
}

DgatrVars dgatr_vars(const BoundParameters& p, const std::string& prefix) {
  return {gal_vars(p, prefix + ".gal_step"), gal_vars(p, prefix + ".gal_knn"), p[prefix + ".ffn.weight"],
          p[prefix + ".ffn.bias"],           p[prefix + ".norm.gain"],          p[prefix + ".norm.bias"]};
}

ad::GruWeights gru_vars(const BoundParameters& p, const std::string& prefix) {
  return {p[prefix + ".w_update"],    p[prefix + ".u_update"],    p[prefix + ".b_update"],
          p[prefix + ".w_reset"],     p[prefix + ".u_reset"],     p[prefix + ".b_reset"],
          p[prefix + ".w_candidate"], p[prefix + ".u_candidate"], p[prefix + ".b_candidate"]};
}

GateVars gate_vars(const BoundParameters& p, const std::string& prefix) {
  return {p[prefix + ".weight"], p[prefix + ".bias"]};
}

ad::Var network_forward(const BoundParameters& params, const Matrix& features, const GraphPair& graphs,
                        const NetworkConfig& config, ForwardTrace* trace) {
  config.validate();
  if (features.cols() != config.input_dim)
    throw Error("network_forward: expected " + std::to_string(config.input_dim) + " input channels, got " +
                std::to_string(features.cols()));
  if (features.rows() < 1) throw Error("network_forward: empty input");
  if (config.uses_graphs() && (graphs.step.nodes() != features.rows() || graphs.knn.nodes() != features.rows()))
    throw Error("network_forward: graphs do not match the input length");

  auto& tape = params.tape();
  ad::Var x = tape.constant(features);
  ad::Var hidden = ad::add_row(ad::matmul(x, params["input.weight"]), params["input.bias"]);

  ad::Var step_w, knn_w;
  if (config.uses_graphs()) {
    step_w = tape.constant(graphs.step.weights);
    knn_w = tape.constant(graphs.knn.weights);
  }
  for (int b = 0; b < config.n_blocks; ++b) {
    const auto pre = block_prefix(b);
    ad::Var spatial, temporal;
    if (config.uses_graphs()) {
      if (config.reset_edge_weights && b > 0) {
        step_w = tape.constant(graphs.step.structure);
        knn_w = tape.constant(graphs.knn.structure);
      }
      auto out = dgatr_forward(hidden, graphs, step_w, knn_w, dgatr_vars(params, pre));
      spatial = out.nodes;
      step_w = out.step_weights;
      knn_w = out.knn_weights;
      if (trace) {
        trace->step_weights.push_back(step_w.value());
        trace->knn_weights.push_back(knn_w.value());
      }
    }
    if (config.uses_gru_branch()) temporal = gru_forward(hidden, gru_vars(params, pre + ".gru"));

    switch (config.variant) {
      case Variant::kFull: hidden = gated_fuse(spatial, temporal, hidden, gate_vars(params, pre + ".gate")); break;
      case Variant::kGruOnly: hidden = ad::add(temporal, hidden); break;
      case Variant::kDgatrOnly: hidden = ad::add(spatial, hidden); break;
    }
    if (trace) trace->block_outputs.push_back(hidden.value());
  }

  switch (config.tail_pool) {
    case PoolKind::kMax: hidden = ad::max_pool_stride2(hidden); break;
    case PoolKind::kAverage: hidden = ad::avg_pool_stride2(hidden); break;
    case PoolKind::kNone: break;
  }
  if (config.tail_gru) hidden = gru_forward(hidden, gru_vars(params, "tail.gru"));
  return hidden;
}

Matrix embed(const ParameterStore& params, const NetworkConfig& config, const Matrix& features,
             const GraphPair& graphs) {
  ad::Tape tape;
  BoundParameters bound(tape, params, /*trainable=*/false);
  return network_forward(bound, features, graphs, config).value();
}

}  // namespace tsgatr
