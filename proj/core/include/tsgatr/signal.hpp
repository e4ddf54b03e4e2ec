#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tsgatr/common.hpp"

namespace tsgatr {

/// Pen-state flag carried by every sample point.
enum StrokeFlag : int {
  kStrokeContinue = 0,
  kStrokeStart = 1,
  kStrokeEnd = 2,
};

struct SamplePoint {
  double x = 0.0;  ///< raw device units (normalized: [-1, 1])
  double y = 0.0;
  double p = 0.0;  ///< pressure (normalized: [0, 1])
  double t = 0.0;  ///< seconds since the first point
  int f = kStrokeContinue;
};

/// A captured online signature, S = [C, p, t, F] in capture order.
struct RawSignature {
  std::vector<SamplePoint> points;

  std::size_t size() const { return points.size(); }
  std::vector<int> flags() const;
};

/// Same layout as RawSignature with x, y in [-1, 1] and p in [0, 1].
struct NormalizedSignature {
  std::vector<SamplePoint> points;

  std::size_t size() const { return points.size(); }
  std::vector<int> flags() const;
  /// L x 2 matrix of (x, y).
  Matrix coordinates() const;
};

/// Half-open index range [begin, end) of one stroke.
struct StrokeSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// Splits a flag sequence into strokes. Throws Error if the sequence does not
/// follow the 1 0* 2 grammar, which also rules out single-point strokes.
std::vector<StrokeSpan> stroke_spans(std::span<const int> flags);

/// Checks length, stroke grammar, finiteness and timestamp monotonicity.
void validate_signature(const RawSignature& raw);

NormalizedSignature normalize_signature(const RawSignature& raw);

struct FeatureSequence {
  Matrix values;
  std::vector<std::string> channel_names;

  Index length() const { return values.rows(); }
  Index width() const { return values.cols(); }
};

enum class RhoVariant {
  kLiteral,     ///< log((v + eps) / (|theta| + eps))
  kCurvature,   ///< log((v + eps) / (|theta_dot| + eps))
};

enum class FeatureLayout {
  kFull16,        ///< x, y, p, dt followed by the 12 time functions
  kTimeFunctions  ///< the 12 time functions only
};

struct FeatureOptions {
  RhoVariant rho = RhoVariant::kLiteral;
  FeatureLayout layout = FeatureLayout::kFull16;

  int width() const { return layout == FeatureLayout::kFull16 ? 16 : 12; }
};

/// Names of the 12 time functions in output column order.
const std::vector<std::string>& time_function_names();

/// Per-point p, dx, dy, v, theta, cos, sin, dv, dtheta, rho, a_c, a_n.
/// Derivatives are taken per stroke against timestamps (central differences
/// inside, one-sided at the two stroke ends). Not centralized.
FeatureSequence extract_time_functions(const NormalizedSignature& sig,
                                       RhoVariant rho = RhoVariant::kLiteral);

/// Subtracts each channel's mean over the signature.
FeatureSequence centralize(FeatureSequence fs);

/// Prepends normalized x, y, p and the per-point time increment (0 at stroke
/// starts) to centralized time functions.
FeatureSequence assemble_input(const NormalizedSignature& sig, const FeatureSequence& centralized,
                               FeatureLayout layout = FeatureLayout::kFull16);

/// normalize -> extract -> centralize -> assemble.
FeatureSequence prepare_features(const RawSignature& raw, const FeatureOptions& options = {});

/// CSV with header `t,x,y,p,s`. `source` names the input in diagnostics.
RawSignature parse_signature_csv(std::istream& in, const std::string& source);
RawSignature read_signature_csv(const std::filesystem::path& path);
void write_signature_csv(std::ostream& out, const RawSignature& sig);
void write_signature_csv(const std::filesystem::path& path, const RawSignature& sig);

}  // namespace tsgatr
