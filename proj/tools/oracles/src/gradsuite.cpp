#include "tsgatr/gradsuite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "tsgatr/alignment.hpp"
#include "tsgatr/gradcheck.hpp"
#include "tsgatr/graph.hpp"
#include "tsgatr/model.hpp"
#include "tsgatr/objective.hpp"
#include "tsgatr/signal.hpp"

namespace tsgatr::suite {

namespace {

using Build = std::function<ad::Var(const BoundParameters&)>;

DifferentiableFn tape_fn(Build build) {
  return [build = std::move(build)](const ParameterStore& point, ParameterStore* grad) {
    ad::Tape tape;
    BoundParameters bound(tape, point, grad != nullptr);
    const ad::Var out = build(bound);
    if (grad) {
      tape.backward(out);
      *grad = bound.gradients();
    }
    return out.scalar();
  };
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  Matrix matrix(Index r, Index c, double scale = 1.0) {
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(-scale, scale);
    return m;
  }

 private:
  std::mt19937_64 gen_;
};

/// Random projection so that every output entry influences the scalar.
ad::Var project(ad::Var out, const Matrix& weights) {
  return ad::sum(ad::mul(out, out.tape()->constant(weights)));
}

/// Strokes of length >= 2 covering L points.
std::vector<int> random_flags(Rng& rng, int length) {
  std::vector<int> flags;
  int remaining = length;
  while (remaining > 0) {
    const int len = remaining <= 3 ? remaining : rng.integer(2, remaining - 2);
    flags.push_back(kStrokeStart);
    for (int i = 1; i < len - 1; ++i) flags.push_back(kStrokeContinue);
    flags.push_back(kStrokeEnd);
    remaining -= len;
  }
  return flags;
}

void randomize(ParameterStore& store, Rng& rng, double scale) {
  for (auto& e : store.entries())
    for (Index i = 0; i < e.value.size(); ++i) e.value.data()[i] += rng.uniform(-scale, scale);
}

ParameterStore subset(const ParameterStore& store, const std::string& prefix) {
  ParameterStore out;
  for (const auto& e : store.entries())
    if (e.name.rfind(prefix, 0) == 0) out.add(e.name, e.value);
  return out;
}

NetworkConfig small_config(Rng& rng) {
  NetworkConfig c;
  c.input_dim = rng.integer(2, 4);
  c.d = rng.integer(2, 4);
  c.n_blocks = 2;
  c.k_step = rng.integer(1, 2);
  c.k_nn = rng.integer(1, 3);
  return c;
}

void check(CaseResult& acc, const DifferentiableFn& f, const ParameterStore& point, std::uint64_t seed) {
  GradCheckOptions options;
  options.seed = seed;
  const auto r = grad_check(f, point, options);
  if (r.max_relative_error >= acc.max_relative_error) {
    acc.max_relative_error = r.max_relative_error;
    acc.worst_analytic = r.worst_analytic;
    acc.worst_numeric = r.worst_numeric;
  }
  acc.checked += r.checked;
  acc.skipped_kinks += r.skipped_kinks;
  ++acc.configurations;
}

}  // namespace

std::vector<CaseResult> run_gradient_suite(std::uint64_t seed, int configurations) {
  std::vector<CaseResult> results;
  auto run_case = [&](const std::string& name, const std::function<void(CaseResult&, Rng&, std::uint64_t)>& body) {
    CaseResult acc;
    acc.name = name;
    for (int c = 0; c < configurations; ++c) {
      const auto s = derive_seed(seed, name, static_cast<std::uint64_t>(c));
      Rng rng(s);
      body(acc, rng, s);
    }
    results.push_back(acc);
  };

  run_case("gal", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    const int L = rng.integer(3, 7), d = rng.integer(2, 4);
    const auto structure = build_kstep(random_flags(rng, L), rng.integer(1, 2)).structure;
    ParameterStore p;
    p.add("nodes", rng.matrix(L, d));
    p.add("query", rng.matrix(d, d));
    p.add("key", rng.matrix(d, d));
    p.add("value", rng.matrix(d, d));
    Matrix w = rng.matrix(L, L);
    p.add("weights", w.array().abs().matrix().cwiseProduct(structure) + structure);
    const Matrix r_nodes = rng.matrix(L, d), r_weights = rng.matrix(L, L);
    check(acc, tape_fn([=](const BoundParameters& b) {
            auto out = gal_forward(b["nodes"], structure, b["weights"], {b["query"], b["key"], b["value"]});
            return ad::add(project(out.nodes, r_nodes), project(out.weights, r_weights));
          }),
          p, s);
  });

  run_case("dgatr_block", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    auto config = small_config(rng);
    const int L = rng.integer(3, 7);
    const auto flags = random_flags(rng, L);
    const auto graphs = build_graphs(flags, rng.matrix(L, 2), config);
    auto p = subset(init_parameters(config, s), "block0.");
    ParameterStore q;
    for (const auto& e : p.entries())
      if (e.name.find(".gru.") == std::string::npos && e.name.find(".gate.") == std::string::npos) q.add(e.name, e.value);
    randomize(q, rng, 0.3);
    q.add("nodes", rng.matrix(L, config.d));
    const Matrix r = rng.matrix(L, config.d);
    check(acc, tape_fn([=](const BoundParameters& b) {
            auto& tape = b.tape();
            auto out = dgatr_forward(b["nodes"], graphs, tape.constant(graphs.step.weights),
                                     tape.constant(graphs.knn.weights), dgatr_vars(b, "block0"));
            return project(out.nodes, r);
          }),
          q, s);
  });

  run_case("gru", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    auto config = small_config(rng);
    const int L = rng.integer(2, 6);
    auto p = subset(init_parameters(config, s), "block0.gru.");
    randomize(p, rng, 0.3);
    p.add("sequence", rng.matrix(L, config.d));
    p.add("h0", rng.matrix(1, config.d, 0.5));
    const Matrix r = rng.matrix(L, config.d);
    check(acc, tape_fn([=](const BoundParameters& b) {
            return project(gru_forward(b["sequence"], gru_vars(b, "block0.gru"), b["h0"]), r);
          }),
          p, s);
  });

  run_case("gated_fusion", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    const int L = rng.integer(2, 6), d = rng.integer(2, 5);
    ParameterStore p;
    p.add("spatial", rng.matrix(L, d));
    p.add("temporal", rng.matrix(L, d));
    p.add("previous", rng.matrix(L, d));
    p.add("gate.weight", rng.matrix(2 * d, d));
    p.add("gate.bias", rng.matrix(1, d));
    const Matrix r = rng.matrix(L, d);
    check(acc, tape_fn([=](const BoundParameters& b) {
            return project(gated_fuse(b["spatial"], b["temporal"], b["previous"], gate_vars(b, "gate")), r);
          }),
          p, s);
  });

  run_case("layer_norm", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    const int L = rng.integer(1, 6), d = rng.integer(2, 6);
    ParameterStore p;
    p.add("x", rng.matrix(L, d, 2.0));
    p.add("gain", rng.matrix(1, d));
    p.add("bias", rng.matrix(1, d));
    const Matrix r = rng.matrix(L, d);
    check(acc, tape_fn([=](const BoundParameters& b) { return project(ad::layer_norm(b["x"], b["gain"], b["bias"]), r); }),
          p, s);
  });

  run_case("pooling_tail", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    auto config = small_config(rng);
    const int L = rng.integer(2, 7);
    const bool average = rng.integer(0, 1) == 1;
    auto p = subset(init_parameters(config, s), "tail.gru.");
    randomize(p, rng, 0.3);
    p.add("x", rng.matrix(L, config.d));
    const Matrix r = rng.matrix((L + 1) / 2, config.d);
    check(acc, tape_fn([=](const BoundParameters& b) {
            auto pooled = average ? ad::avg_pool_stride2(b["x"]) : ad::max_pool_stride2(b["x"]);
            return project(gru_forward(pooled, gru_vars(b, "tail.gru")), r);
          }),
          p, s);
  });

  run_case("margin_loss", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    const double gamma1 = rng.uniform(0.1, 2.0);
    double d_ag, d_af;
    do {
      d_ag = rng.uniform(0.0, 3.0);
      d_af = rng.uniform(0.0, 3.0);
    } while (std::abs(d_ag - d_af + gamma1) < 1e-3);
    ParameterStore p;
    p.add("d_ag", Matrix::Constant(1, 1, d_ag));
    p.add("d_af", Matrix::Constant(1, 1, d_af));
    check(acc, tape_fn([=](const BoundParameters& b) { return relative_margin_loss(b["d_ag"], b["d_af"], gamma1); }), p,
          s);
  });

  run_case("threshold_loss", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    const double gamma2 = rng.uniform(0.5, 3.0), xi = rng.uniform(0.0, 1.0);
    const int label = rng.integer(0, 1) == 1 ? 1 : -1;
    double d;
    do {
      d = rng.uniform(0.0, 4.0);
    } while (std::abs(xi - label * (gamma2 - d)) < 1e-3);
    ParameterStore p;
    p.add("d", Matrix::Constant(1, 1, d));
    check(acc, tape_fn([=](const BoundParameters& b) { return pairwise_threshold_loss(b["d"], label, gamma2, xi); }), p,
          s);
  });

  run_case("network_author_loss", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    NetworkConfig config;
    config.input_dim = 3;
    config.d = 4;
    config.n_blocks = 2;
    config.k_step = 2;
    config.k_nn = 3;
    const int n_samples = 5;  // anchor, positive, skilled, random, second skilled
    struct Sample {
      Matrix features;
      GraphPair graphs;
    };
    std::vector<Sample> samples;
    for (int k = 0; k < n_samples; ++k) {
      const int L = 6;
      const auto flags = random_flags(rng, L);
      samples.push_back({rng.matrix(L, config.input_dim), build_graphs(flags, rng.matrix(L, 2), config)});
    }
    auto p = init_parameters(config, s);
    randomize(p, rng, 0.2);
    LossHyper hyper;
    hyper.gamma2 = rng.uniform(0.0, 0.5);
    check(acc, tape_fn([=](const BoundParameters& b) {
            std::vector<ad::Var> h;
            for (const auto& smp : samples) h.push_back(network_forward(b, smp.features, smp.graphs, config));
            TripletEmbeddings emb{{h[0]}, {h[1]}, {h[2], h[4]}, {h[3]}};
            return author_loss(emb, hyper).total;
          }),
          p, s);
  });

  run_case("dtw_grad", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    const int l1 = rng.integer(1, 5), l2 = rng.integer(1, 5), d = rng.integer(1, 3);
    ParameterStore p;
    p.add("x", rng.matrix(l1, d));
    p.add("y", rng.matrix(l2, d));
    check(acc,
          [](const ParameterStore& point, ParameterStore* grad) {
            const auto& x = point.get("x");
            const auto& y = point.get("y");
            if (grad) {
              const auto g = dtw_grad(x, y);
              *grad = point.zeros_like();
              grad->get("x") = g.dx;
              grad->get("y") = g.dy;
            }
            return dtw_distance(x, y).cost;
          },
          p, s);
  });

  run_case("soft_dtw_grad", [](CaseResult& acc, Rng& rng, std::uint64_t s) {
    const int l1 = rng.integer(1, 5), l2 = rng.integer(1, 5), d = rng.integer(1, 3);
    ParameterStore p;
    p.add("x", rng.matrix(l1, d));
    p.add("y", rng.matrix(l2, d));
    check(acc,
          [](const ParameterStore& point, ParameterStore* grad) {
            const auto& x = point.get("x");
            const auto& y = point.get("y");
            if (grad) {
              const auto g = soft_dtw_grad(x, y, 1.0);
              *grad = point.zeros_like();
              grad->get("x") = g.dx;
              grad->get("y") = g.dy;
            }
            return soft_dtw(x, y, 1.0);
          },
          p, s);
  });

  return results;
}

}  // namespace tsgatr::suite
