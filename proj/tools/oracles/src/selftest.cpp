#include "tsgatr/selftest.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "tsgatr/alignment.hpp"
#include "tsgatr/evaluator.hpp"
#include "tsgatr/graph.hpp"
#include "tsgatr/oracles.hpp"
#include "tsgatr/signal.hpp"

namespace tsgatr::oracle {

namespace {

Matrix random_matrix(std::mt19937_64& rng, Index r, Index c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

int draw(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::vector<int> random_flags(std::mt19937_64& rng, int length) {
  std::vector<int> flags;
  int remaining = length;
  while (remaining > 0) {
    const int len = remaining <= 3 ? remaining : draw(rng, 2, remaining - 2);
    flags.push_back(kStrokeStart);
    for (int i = 1; i < len - 1; ++i) flags.push_back(kStrokeContinue);
    flags.push_back(kStrokeEnd);
    remaining -= len;
  }
  return flags;
}

}  // namespace

SuiteOutcome dtw_suite(std::uint64_t seed, int pairs, double tolerance) {
  SuiteOutcome out{"dtw_oracle", true, 0, ""};
  std::mt19937_64 rng(derive_seed(seed, "dtw-suite"));
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const int d = draw(rng, 1, 3);
    const Matrix x = random_matrix(rng, draw(rng, 1, 6), d);
    const Matrix y = random_matrix(rng, draw(rng, 1, 6), d);
    const double dp = dtw_distance(x, y).cost;
    const double brute = dtw_enumerate(x, y);
    worst = std::max(worst, std::abs(dp - brute));
    ++out.cases;
    if (std::abs(dp - brute) > tolerance && out.passed) {
      out.passed = false;
      std::ostringstream ss;
      ss.precision(17);
      ss << "pair " << k << ": dp " << dp << " vs enumeration " << brute;
      out.detail = ss.str();
    }
  }
  if (out.passed) {
    std::ostringstream ss;
    ss << out.cases << " pairs, max |diff| " << worst;
    out.detail = ss.str();
  }
  return out;
}

SuiteOutcome graph_suite(std::uint64_t seed, int inputs) {
  SuiteOutcome out{"graph_oracle", true, 0, ""};
  std::mt19937_64 rng(derive_seed(seed, "graph-suite"));
  auto fail = [&](const std::string& what) {
    if (out.passed) out.detail = what;
    out.passed = false;
  };
  for (int n = 0; n < inputs; ++n) {
    const int L = draw(rng, 2, 10);
    const int k = draw(rng, 1, 12);
    const auto flags = random_flags(rng, L);
    // Coordinates on a coarse grid so equal distances occur.
    Matrix coords(L, 2);
    for (Index i = 0; i < coords.size(); ++i) coords.data()[i] = draw(rng, 0, 4) * 0.25;
    const bool symmetric = draw(rng, 0, 1) == 1;
    ++out.cases;
    const auto step = build_kstep(flags, k);
    if (step.structure != kstep_structure(flags, k)) fail("k-step mismatch at input " + std::to_string(n));
    const auto spans = stroke_spans(flags);
    for (const auto& a : spans)
      for (const auto& b : spans) {
        if (a.begin == b.begin) continue;
        for (auto i = a.begin; i < a.end; ++i)
          for (auto j = b.begin; j < b.end; ++j)
            if (step.structure(static_cast<Index>(i), static_cast<Index>(j)) != 0.0)
              fail("cross-stroke edge at input " + std::to_string(n));
      }
    const auto knn = build_knn(coords, k, symmetric);
    if (knn.structure != knn_structure(coords, k, symmetric)) fail("k-NN mismatch at input " + std::to_string(n));
    if (!symmetric) {
      const auto directed = knn.structure;
      for (Index i = 0; i < L; ++i) {
        const double degree = directed.row(i).sum() - directed(i, i);
        if (degree != std::min(k, L - 1)) fail("k-NN out-degree at input " + std::to_string(n));
      }
    }
    if (step.weights != step.structure || knn.weights != knn.structure) fail("initial weights differ from structure");
  }
  if (out.passed) out.detail = std::to_string(out.cases) + " inputs";
  return out;
}

SuiteOutcome eer_suite(std::uint64_t seed, int sets) {
  SuiteOutcome out{"eer_oracle", true, 0, ""};
  std::mt19937_64 rng(derive_seed(seed, "eer-suite"));
  for (int n = 0; n < sets; ++n) {
    const int ng = draw(rng, 1, 30), ni = draw(rng, 1, 30);
    const int grid = draw(rng, 3, 50);
    std::vector<double> g, imp;
    for (int i = 0; i < ng; ++i) g.push_back(draw(rng, 0, grid) / static_cast<double>(grid));
    for (int i = 0; i < ni; ++i) imp.push_back(draw(rng, 0, grid) / static_cast<double>(grid) + 0.2);
    const auto fast = compute_eer(g, imp);
    const auto slow = eer_sweep(g, imp);
    ++out.cases;
    if ((fast.eer != slow.eer || fast.threshold != slow.threshold) && out.passed) {
      out.passed = false;
      std::ostringstream ss;
      ss.precision(17);
      ss << "set " << n << ": eer " << fast.eer << " @ " << fast.threshold << " vs sweep " << slow.eer << " @ "
         << slow.threshold;
      out.detail = ss.str();
    }
  }
  const struct {
    std::vector<double> g, i;
    double expected;
  } worked[] = {{{0.1, 0.2}, {0.8, 0.9}, 0.0}, {{0.3, 0.5, 0.7}, {0.7, 0.3, 0.5}, 0.5},
                {{0.1, 0.4, 0.5}, {0.3, 0.6}, 5.0 / 12.0}};
  for (const auto& w : worked) {
    ++out.cases;
    const double e = compute_eer(w.g, w.i).eer;
    if (std::abs(e - w.expected) > 1e-12 && out.passed) {
      out.passed = false;
      out.detail = "worked example expected " + std::to_string(w.expected) + ", got " + std::to_string(e);
    }
  }
  if (out.passed) out.detail = std::to_string(out.cases) + " score sets";
  return out;
}

}  // namespace tsgatr::oracle
