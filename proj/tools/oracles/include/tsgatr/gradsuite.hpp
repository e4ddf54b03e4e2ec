#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tsgatr::suite {

struct CaseResult {
  std::string name;
  int configurations = 0;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  double worst_analytic = 0.0;  ///< at the worst coordinate
  double worst_numeric = 0.0;
};

/// Finite-difference checks of every differentiable component on
/// `configurations` seeded random instances each: gal, dgatr_block, gru,
/// gated_fusion, layer_norm, pooling_tail, margin_loss, threshold_loss,
/// network_author_loss, dtw_grad and soft_dtw_grad.
std::vector<CaseResult> run_gradient_suite(std::uint64_t seed, int configurations = 20);

}  // namespace tsgatr::suite
