#pragma once

#include <cstddef>
#include <vector>

#include "tsgatr/config.hpp"
#include "tsgatr/dataset.hpp"
#include "tsgatr/model.hpp"
#include "tsgatr/signal.hpp"

namespace tsgatr {

/// Network inputs for one signature.
struct PreparedSignature {
  Matrix features;
  GraphPair graphs;  ///< left empty for variants that do not use graphs
};

PreparedSignature prepare_signature(const RawSignature& raw, const RunConfig& config);

/// Prepares dataset.signatures[i] for every i in `indices`; other slots stay
/// empty.
std::vector<PreparedSignature> prepare_signatures(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                                  const RunConfig& config, int workers = 1);

Matrix embed_signature(const ParameterStore& params, const RunConfig& config, const RawSignature& raw);

}  // namespace tsgatr
