#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tsgatr/dataset.hpp"
#include "tsgatr/signal.hpp"

namespace tsgatr {

/// One Lissajous stroke: X = ox + ax sin(fx s + px), Y = oy + ay sin(fy s + py)
/// for s in [0, span].
struct StrokeShape {
  double freq_x = 1.0, freq_y = 1.0;
  double phase_x = 0.0, phase_y = 0.0;
  double amp_x = 1.0, amp_y = 1.0;
  double offset_x = 0.0, offset_y = 0.0;
  double span = 3.0;
  double duration_share = 1.0;  ///< fraction of the total writing time
};

/// p(u) = base + peak * sin(pi u)^shape + ripple * sin(2 pi ripple_freq u).
struct PressureEnvelope {
  double base = 0.3, peak = 0.5, shape = 1.0, ripple = 0.05, ripple_freq = 2.0;
};

/// Writing speed along a stroke is proportional to
/// 1 + depth * sin(2 pi freq tau + phase), tau the normalized stroke time.
struct PaceProfile {
  double total_duration = 1.3;  ///< seconds of pen-down time
  double rhythm_depth = 0.5;
  double rhythm_freq = 1.5;
  double rhythm_phase = 0.0;
  double gap = 0.12;  ///< pen-up time between strokes
};

struct SyntheticUserSpec {
  std::uint64_t seed = 0;
  int samples = 20;  ///< genuine signatures and skilled forgeries each
  std::vector<StrokeShape> strokes;
  PressureEnvelope pressure;
  PaceProfile pace;
};

inline constexpr double kSampleRateHz = 100.0;

/// Deterministic user description drawn from `seed`.
SyntheticUserSpec make_user_spec(std::uint64_t seed, int samples = 20);

struct GeneratedUser {
  std::vector<RawSignature> genuine;
  std::vector<RawSignature> skilled;
};

/// Genuine samples jitter the base trajectory (amplitude/phase within 5%,
/// timing within 10%). Skilled forgeries trace the same geometry at a slower,
/// flatter pace with a pressure envelope from a different seed.
GeneratedUser generate_user(const SyntheticUserSpec& spec);

/// The noise-free base trajectory, L x 2, sampled at `points` parameter
/// values per stroke.
Matrix base_trajectory(const SyntheticUserSpec& spec, int points_per_stroke = 32);

struct GenerateOptions {
  std::uint64_t seed = 1;
  int train_users = 4;
  int test_users = 4;
  int samples_per_user = 10;
};

/// Writes `<root>/<user>/<session>/<sig>.csv` plus `<root>/manifest.json`.
DatasetManifest generate_dataset(const std::filesystem::path& root, const GenerateOptions& options);

}  // namespace tsgatr
