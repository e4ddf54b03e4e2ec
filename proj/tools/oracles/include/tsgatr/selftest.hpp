#pragma once

#include <cstdint>
#include <string>

namespace tsgatr::oracle {

struct SuiteOutcome {
  std::string name;
  bool passed = false;
  int cases = 0;
  std::string detail;  ///< first discrepancy, or a summary when passing
};

/// dtw_distance against exhaustive path enumeration, L1, L2 <= 6, d <= 3.
SuiteOutcome dtw_suite(std::uint64_t seed, int pairs = 100, double tolerance = 1e-9);

/// Both graph builders against brute force for L <= 10, plus the
/// cross-stroke and out-degree rules.
SuiteOutcome graph_suite(std::uint64_t seed, int inputs = 200);

/// compute_eer against the exhaustive sweep on random score sets of size
/// <= 30 (values drawn from a coarse grid so ties occur).
SuiteOutcome eer_suite(std::uint64_t seed, int sets = 200);

}  // namespace tsgatr::oracle
