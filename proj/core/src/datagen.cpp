#include "tsgatr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace tsgatr {

namespace {

constexpr double kPi = std::numbers::pi;

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double jitter(double fraction) { return 1.0 + uniform(-fraction, fraction); }

 private:
  std::mt19937_64 rng_;
};

PressureEnvelope make_pressure(Draw& d) {
  PressureEnvelope p;
  p.base = d.uniform(0.15, 0.45);
  p.peak = d.uniform(0.25, 0.55);
  p.shape = d.uniform(0.5, 2.5);
  p.ripple = d.uniform(0.02, 0.12);
  p.ripple_freq = d.uniform(1.0, 3.5);
  return p;
}

// Normalized arc-parameter reached at normalized time tau for speed
// 1 + depth sin(2 pi f tau + phase).
double progress(double tau, const PaceProfile& pace) {
  const double w = 2.0 * kPi * pace.rhythm_freq;
  auto integral = [&](double x) { return x + pace.rhythm_depth / w * (std::cos(pace.rhythm_phase) - std::cos(w * x + pace.rhythm_phase)); };
  return integral(tau) / integral(1.0);
}

struct RenderStyle {
  double amp_jitter = 0.0;
  double phase_jitter = 0.0;
  double duration_scale = 1.0;
  double position_noise = 0.0;  ///< in normalized trajectory units
};

RawSignature render(const SyntheticUserSpec& spec, const PaceProfile& pace, const PressureEnvelope& pressure,
                    Draw& d, const RenderStyle& style) {
  RawSignature sig;
  long tick = 0;
  for (std::size_t m = 0; m < spec.strokes.size(); ++m) {
    const auto& base = spec.strokes[m];
    StrokeShape s = base;
    s.amp_x *= d.jitter(style.amp_jitter);
    s.amp_y *= d.jitter(style.amp_jitter);
    s.phase_x += d.uniform(-style.phase_jitter, style.phase_jitter);
    s.phase_y += d.uniform(-style.phase_jitter, style.phase_jitter);
    const double seconds = pace.total_duration * s.duration_share * style.duration_scale;
    const int intervals = std::max(1, static_cast<int>(std::lround(seconds * kSampleRateHz)));
    for (int k = 0; k <= intervals; ++k) {
      const double tau = static_cast<double>(k) / intervals;
      const double u = progress(tau, pace);
      const double arc = s.span * u;
      const double x = s.offset_x + s.amp_x * std::sin(s.freq_x * arc + s.phase_x) +
                       style.position_noise * d.uniform(-1.0, 1.0);
      const double y = s.offset_y + s.amp_y * std::sin(s.freq_y * arc + s.phase_y) +
                       style.position_noise * d.uniform(-1.0, 1.0);
      double p = pressure.base + pressure.peak * std::pow(std::sin(kPi * u), pressure.shape) +
                 pressure.ripple * std::sin(2.0 * kPi * pressure.ripple_freq * u);
      p = std::clamp(p, 0.0, 1.0);
      SamplePoint pt;
      // Integer device units, as reported by typical digitizers.
      pt.x = std::round(5000.0 + 1000.0 * x);
      pt.y = std::round(4000.0 + 1000.0 * y);
      pt.p = std::round(1023.0 * p);
      pt.t = static_cast<double>(tick) / kSampleRateHz;
      pt.f = k == 0 ? kStrokeStart : (k == intervals ? kStrokeEnd : kStrokeContinue);
      sig.points.push_back(pt);
      ++tick;
    }
    tick += std::lround(pace.gap * kSampleRateHz);
  }
  return sig;
}

}  // namespace

SyntheticUserSpec make_user_spec(std::uint64_t seed, int samples) {
  Draw d(derive_seed(seed, "user-spec"));
  SyntheticUserSpec spec;
  spec.seed = seed;
  spec.samples = samples;
  const int n_strokes = d.integer(2, 3);
  double share_total = 0.0;
  for (int m = 0; m < n_strokes; ++m) {
    StrokeShape s;
    s.freq_x = d.uniform(0.8, 2.6);
    s.freq_y = d.uniform(0.8, 2.6);
    s.phase_x = d.uniform(0.0, 2.0 * kPi);
    s.phase_y = d.uniform(0.0, 2.0 * kPi);
    s.amp_x = d.uniform(0.5, 1.2);
    s.amp_y = d.uniform(0.5, 1.2);
    s.offset_x = 2.2 * m + d.uniform(-0.3, 0.3);
    s.offset_y = d.uniform(-0.4, 0.4);
    s.span = d.uniform(2.0, 5.0);
    s.duration_share = d.uniform(0.7, 1.3);
    share_total += s.duration_share;
    spec.strokes.push_back(s);
  }
  for (auto& s : spec.strokes) s.duration_share /= share_total;
  spec.pressure = make_pressure(d);
  spec.pace.total_duration = d.uniform(1.2, 1.5);
  spec.pace.rhythm_depth = d.uniform(0.35, 0.7);
  spec.pace.rhythm_freq = d.uniform(1.0, 2.5);
  spec.pace.rhythm_phase = d.uniform(0.0, 2.0 * kPi);
  spec.pace.gap = d.uniform(0.08, 0.2);
  return spec;
}

GeneratedUser generate_user(const SyntheticUserSpec& spec) {
  GeneratedUser out;
  for (int k = 0; k < spec.samples; ++k) {
    Draw d(derive_seed(spec.seed, "genuine", static_cast<std::uint64_t>(k)));
    PaceProfile pace = spec.pace;
    pace.rhythm_phase += d.uniform(-0.1, 0.1);
    pace.rhythm_depth *= d.jitter(0.05);
    PressureEnvelope pressure = spec.pressure;
    pressure.base *= d.jitter(0.05);
    pressure.peak *= d.jitter(0.05);
    RenderStyle style{0.05, 0.05, d.uniform(0.9, 1.1), 0.004};
    out.genuine.push_back(render(spec, pace, pressure, d, style));
  }
  for (int k = 0; k < spec.samples; ++k) {
    // A handful of forgers per user, each with a consistent style.
    const auto forger = static_cast<std::uint64_t>(k % 4);
    Draw style_draw(derive_seed(spec.seed, "forger", forger));
    Draw d(derive_seed(spec.seed, "skilled", static_cast<std::uint64_t>(k)));
    PaceProfile pace = spec.pace;
    pace.total_duration *= style_draw.uniform(1.3, 1.7) * d.jitter(0.05);
    pace.rhythm_depth *= 0.2;
    pace.rhythm_phase = style_draw.uniform(0.0, 2.0 * kPi);
    PressureEnvelope pressure = make_pressure(style_draw);
    RenderStyle style{0.06, 0.06, 1.0, 0.006};
    out.skilled.push_back(render(spec, pace, pressure, d, style));
  }
  return out;
}

Matrix base_trajectory(const SyntheticUserSpec& spec, int points_per_stroke) {
  Matrix out(static_cast<Index>(spec.strokes.size()) * points_per_stroke, 2);
  Index row = 0;
  for (const auto& s : spec.strokes) {
    for (int k = 0; k < points_per_stroke; ++k) {
      const double arc = s.span * k / (points_per_stroke - 1.0);
      out(row, 0) = s.offset_x + s.amp_x * std::sin(s.freq_x * arc + s.phase_x);
      out(row, 1) = s.offset_y + s.amp_y * std::sin(s.freq_y * arc + s.phase_y);
      ++row;
    }
  }
  return out;
}

DatasetManifest generate_dataset(const std::filesystem::path& root, const GenerateOptions& options) {
  if (options.train_users < 1 || options.test_users < 1 || options.samples_per_user < 1)
    throw UsageError("generate_dataset: user and sample counts must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error("cannot create dataset directory " + root.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.seed = options.seed;
  const int total = options.train_users + options.test_users;
  for (int u = 0; u < total; ++u) {
    char name[16];
    std::snprintf(name, sizeof(name), "u%03d", u);
    ManifestUser user;
    user.user_id = name;
    user.split = u < options.train_users ? Split::kTrain : Split::kTest;
    const auto spec = make_user_spec(derive_seed(options.seed, "user", static_cast<std::uint64_t>(u)),
                                     options.samples_per_user);
    const auto sigs = generate_user(spec);
    auto emit = [&](const RawSignature& sig, SignatureLabel label, int k) {
      char id[32];
      std::snprintf(id, sizeof(id), "%s_%c%02d", name, label == SignatureLabel::kGenuine ? 'g' : 'f', k);
      ManifestEntry e;
      e.sig_id = id;
      e.user_id = user.user_id;
      e.session = 1 + k % 2;
      e.label = label;
      if (label == SignatureLabel::kSkilledForgery) e.forger_id = user.user_id + "_forger" + std::to_string(k % 4);
      const fs::path rel = fs::path(user.user_id) / ("s" + std::to_string(e.session)) / (e.sig_id + ".csv");
      e.path = rel.generic_string();
      fs::create_directories((root / rel).parent_path(), ec);
      if (ec) throw Error("cannot create directory " + (root / rel).parent_path().string() + ": " + ec.message());
      write_signature_csv(root / rel, sig);
      user.signatures.push_back(std::move(e));
    };
    for (int k = 0; k < options.samples_per_user; ++k) emit(sigs.genuine[static_cast<std::size_t>(k)], SignatureLabel::kGenuine, k);
    for (int k = 0; k < options.samples_per_user; ++k) emit(sigs.skilled[static_cast<std::size_t>(k)], SignatureLabel::kSkilledForgery, k);
    manifest.users.push_back(std::move(user));
  }
  write_manifest(root / "manifest.json", manifest);
  return manifest;
}

}  // namespace tsgatr
