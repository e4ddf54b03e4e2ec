#include "tsgatr/pipeline.hpp"

#include "tsgatr/parallel.hpp"

namespace tsgatr {

PreparedSignature prepare_signature(const RawSignature& raw, const RunConfig& config) {
  PreparedSignature out;
  out.features = prepare_features(raw, config.features).values;
  if (config.network.uses_graphs()) {
    const auto normalized = normalize_signature(raw);
    out.graphs = build_graphs(normalized.flags(), normalized.coordinates(), config.network);
  }
  return out;
}

std::vector<PreparedSignature> prepare_signatures(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                                  const RunConfig& config, int workers) {
  std::vector<PreparedSignature> out(dataset.signatures.size());
  parallel_for(indices.size(), workers, [&](std::size_t k) {
    const auto i = indices[k];
    try {
      out[i] = prepare_signature(dataset.signatures.at(i).signature, config);
    } catch (const Error& e) {
      throw Error("signature " + dataset.signatures.at(i).sig_id + ": " + e.what());
    }
  });
  return out;
}

Matrix embed_signature(const ParameterStore& params, const RunConfig& config, const RawSignature& raw) {
  const auto prepared = prepare_signature(raw, config);
  return embed(params, config.network, prepared.features, prepared.graphs);
}

}  // namespace tsgatr
