#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsgatr/graph.hpp"
#include "tsgatr/params.hpp"
#include "tsgatr/tape.hpp"

namespace tsgatr {

enum class PoolKind { kMax, kAverage, kNone };

/// Architecture ablations: the full dual-branch network, or one branch only.
enum class Variant { kFull, kGruOnly, kDgatrOnly };

std::string to_string(PoolKind kind);
std::string to_string(Variant variant);
PoolKind parse_pool_kind(std::string_view text);
Variant parse_variant(std::string_view text);

struct NetworkConfig {
  int input_dim = 16;
  int d = 64;
  int n_blocks = 2;
  int k_step = 2;
  int k_nn = 35;
  bool knn_symmetric = false;
  PoolKind tail_pool = PoolKind::kMax;
  bool tail_gru = true;
  Variant variant = Variant::kFull;
  /// Start every block from the structural weights instead of the previous
  /// block's attention.
  bool reset_edge_weights = false;

  bool uses_graphs() const { return variant != Variant::kGruOnly; }
  bool uses_gru_branch() const { return variant != Variant::kDgatrOnly; }
  void validate() const;
};

/// Glorot-uniform matrices, zero biases, unit layer-norm gains.
ParameterStore init_parameters(const NetworkConfig& config, std::uint64_t seed);

struct GraphPair {
  Adjacency step;
  Adjacency knn;
};

GraphPair build_graphs(std::span<const int> flags, const Matrix& coords, const NetworkConfig& config);

// --- building blocks -------------------------------------------------------

struct GalVars {
  ad::Var query, key, value;
};

struct GalResult {
  ad::Var nodes;
  ad::Var weights;
};

/// Structure-constrained attention over one graph. `weights` are the edge
/// weights from the previous layer (the structure itself for the first).
GalResult gal_forward(ad::Var nodes, const Matrix& structure, ad::Var weights, const GalVars& params);

struct DgatrVars {
  GalVars step;
  GalVars knn;
  ad::Var ffn_weight, ffn_bias;
  ad::Var norm_gain, norm_bias;
};

struct DgatrResult {
  ad::Var nodes;
  ad::Var step_weights;
  ad::Var knn_weights;
};

/// Both GALs, concatenation [knn || step], linear + relu, layer norm.
DgatrResult dgatr_forward(ad::Var nodes, const GraphPair& graphs, ad::Var step_weights, ad::Var knn_weights,
                          const DgatrVars& params);

/// All hidden states of a GRU; `h0` defaults to zeros.
ad::Var gru_forward(ad::Var sequence, const ad::GruWeights& params, ad::Var h0 = {});

struct GateVars {
  ad::Var weight, bias;
};

/// Z = sigmoid([spatial || temporal] W + b); Z*spatial + (1-Z)*temporal + previous.
ad::Var gated_fuse(ad::Var spatial, ad::Var temporal, ad::Var previous, const GateVars& params);

GalVars gal_vars(const BoundParameters& p, const std::string& prefix);
DgatrVars dgatr_vars(const BoundParameters& p, const std::string& prefix);
ad::GruWeights gru_vars(const BoundParameters& p, const std::string& prefix);
GateVars gate_vars(const BoundParameters& p, const std::string& prefix);

// --- whole network ---------------------------------------------------------

/// Per-block intermediate values, recorded on request.
struct ForwardTrace {
  std::vector<Matrix> step_weights;
  std::vector<Matrix> knn_weights;
  std::vector<Matrix> block_outputs;
};

/// Input projection, n_blocks of (DGATR || GRU -> gated fusion + residual),
/// then the pooling/GRU tail. Returns the L' x d embedding sequence.
ad::Var network_forward(const BoundParameters& params, const Matrix& features, const GraphPair& graphs,
                        const NetworkConfig& config, ForwardTrace* trace = nullptr);

/// Gradient-free evaluation on a private tape.
Matrix embed(const ParameterStore& params, const NetworkConfig& config, const Matrix& features,
             const GraphPair& graphs);

}  // namespace tsgatr
