#include "tsgatr/signal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace tsgatr {

namespace {

std::vector<int> flags_of(const std::vector<SamplePoint>& points) {
  std::vector<int> out(points.size());
  std::transform(points.begin(), points.end(), out.begin(), [](const SamplePoint& pt) { return pt.f; });
  return out;
}

// Derivative of values[i] against timestamps inside one stroke.
double stroke_derivative(std::span<const double> values, std::span<const double> times,
                         const StrokeSpan& s, std::size_t i) {
  std::size_t lo = i == s.begin ? i : i - 1;
  std::size_t hi = i + 1 == s.end ? i : i + 1;
  return (values[hi] - values[lo]) / (times[hi] - times[lo]);
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  while (a > pi) a -= 2.0 * pi;
  while (a <= -pi) a += 2.0 * pi;
  return a;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void append_double(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::vector<int> RawSignature::flags() const { return flags_of(points); }
std::vector<int> NormalizedSignature::flags() const { return flags_of(points); }

Matrix NormalizedSignature::coordinates() const {
  Matrix c(static_cast<Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    c(static_cast<Index>(i), 0) = points[i].x;
    c(static_cast<Index>(i), 1) = points[i].y;
  }
  return c;
}

std::vector<StrokeSpan> stroke_spans(std::span<const int> flags) {
  std::vector<StrokeSpan> spans;
  bool open = false;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    int f = flags[i];
    if (f == kStrokeStart) {
      if (open) throw Error("stroke grammar: point " + std::to_string(i) + " opens a stroke before the previous one closed");
      open = true;
      begin = i;
    } else if (f == kStrokeEnd) {
      if (!open) throw Error("stroke grammar: point " + std::to_string(i) + " closes a stroke that was never opened");
      spans.push_back({begin, i + 1});
      open = false;
    } else if (f == kStrokeContinue) {
      if (!open) throw Error("stroke grammar: point " + std::to_string(i) + " lies outside any stroke");
    } else {
      throw Error("stroke grammar: point " + std::to_string(i) + " has invalid stroke state " + std::to_string(f));
    }
  }
  if (open) throw Error("stroke grammar: last stroke is never closed");
  if (spans.empty()) throw Error("stroke grammar: signature has no strokes");
  return spans;
}

void validate_signature(const RawSignature& raw) {
  if (raw.points.size() < 2) throw Error("signature must have at least 2 points, got " + std::to_string(raw.points.size()));
  stroke_spans(raw.flags());
  if (raw.points.front().t != 0.0) throw Error("first timestamp must be 0");
  for (std::size_t i = 0; i < raw.points.size(); ++i) {
    const auto& pt = raw.points[i];
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.p) || !std::isfinite(pt.t))
      throw Error("non-finite value at point " + std::to_string(i));
    if (i > 0 && pt.t < raw.points[i - 1].t) throw Error("timestamps decrease at point " + std::to_string(i));
  }
}

NormalizedSignature normalize_signature(const RawSignature& raw) {
  validate_signature(raw);
  const auto& pts = raw.points;
  auto [xmin_it, xmax_it] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.x < b.x; });
  auto [ymin_it, ymax_it] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.y < b.y; });
  auto [pmin_it, pmax_it] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.p < b.p; });
  const double xmin = xmin_it->x, ymin = ymin_it->y, pmin = pmin_it->p;
  const double rx = xmax_it->x - xmin;
  const double ry = ymax_it->y - ymin;
  const double rp = pmax_it->p - pmin;
  const double scale = std::max(rx, ry);

  // (2 (x - min) - range) / scale centres the bounding box at the origin.
  // Every step is exact for exactly scaled/shifted inputs, so the result is
  // bit-identical under those transforms.
  NormalizedSignature out;
  out.points.reserve(pts.size());
  for (const auto& pt : pts) {
    SamplePoint q = pt;
    q.x = scale > 0.0 ? (2.0 * (pt.x - xmin) - rx) / scale : 0.0;
    q.y = scale > 0.0 ? (2.0 * (pt.y - ymin) - ry) / scale : 0.0;
    q.p = rp > 0.0 ? (pt.p - pmin) / rp : 0.0;
    out.points.push_back(q);
  }
  return out;
}

const std::vector<std::string>& time_function_names() {
  static const std::vector<std::string> names = {"p",       "dx",     "dy",  "v",   "theta", "cos_theta",
                                                 "sin_theta", "dv",   "dtheta", "rho", "a_c",   "a_n"};
  return names;
}

FeatureSequence extract_time_functions(const NormalizedSignature& sig, RhoVariant rho_variant) {
  if (sig.size() < 2) throw Error("signature must have at least 2 points");
  const auto spans = stroke_spans(sig.flags());
  const std::size_t n = sig.size();

  std::vector<double> x(n), y(n), t(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = sig.points[i].x;
    y[i] = sig.points[i].y;
    t[i] = sig.points[i].t;
  }
  for (const auto& s : spans) {
    for (std::size_t i = s.begin + 1; i < s.end; ++i) {
      if (!(t[i] > t[i - 1]))
        throw Error("repeated timestamp inside a stroke at point " + std::to_string(i));
    }
  }

  std::vector<double> dx(n), dy(n), v(n), theta(n), unwrapped(n), dv(n), dtheta(n);
  for (const auto& s : spans) {
    double carry = 0.0;
    for (std::size_t i = s.begin; i < s.end; ++i) {
      dx[i] = stroke_derivative(x, t, s, i);
      dy[i] = stroke_derivative(y, t, s, i);
      v[i] = std::sqrt(dx[i] * dx[i] + dy[i] * dy[i]);
      if (dx[i] != 0.0 || dy[i] != 0.0) carry = std::atan2(dy[i], dx[i]);
      theta[i] = carry;
      unwrapped[i] = i == s.begin ? theta[i] : unwrapped[i - 1] + wrap_angle(theta[i] - theta[i - 1]);
    }
    for (std::size_t i = s.begin; i < s.end; ++i) {
      dv[i] = stroke_derivative(v, t, s, i);
      dtheta[i] = stroke_derivative(unwrapped, t, s, i);
    }
  }

  FeatureSequence fs;
  fs.channel_names = time_function_names();
  fs.values.resize(static_cast<Index>(n), 12);
  const double eps = kFeatureEpsilon;
  for (std::size_t i = 0; i < n; ++i) {
    const double ac = v[i] * std::abs(dtheta[i]);
    const double denom = rho_variant == RhoVariant::kLiteral ? std::abs(theta[i]) : std::abs(dtheta[i]);
    auto row = fs.values.row(static_cast<Index>(i));
    row(0) = sig.points[i].p;
    row(1) = dx[i];
    row(2) = dy[i];
    row(3) = v[i];
    row(4) = theta[i];
    row(5) = std::cos(theta[i]);
    row(6) = std::sin(theta[i]);
    row(7) = dv[i];
    row(8) = dtheta[i];
    row(9) = std::log((v[i] + eps) / (denom + eps));
    row(10) = ac;
    row(11) = std::sqrt(dv[i] * dv[i] + ac * ac);
  }
  if (!fs.values.allFinite()) throw Error("time functions produced a non-finite value");
  return fs;
}

FeatureSequence centralize(FeatureSequence fs) {
  if (fs.values.rows() == 0) return fs;
  Eigen::RowVectorXd mean = fs.values.colwise().mean();
  fs.values.rowwise() -= mean;
  return fs;
}

FeatureSequence assemble_input(const NormalizedSignature& sig, const FeatureSequence& centralized,
                               FeatureLayout layout) {
  const auto n = static_cast<Index>(sig.size());
  if (centralized.values.rows() != n)
    throw Error("assemble_input: signature has " + std::to_string(n) + " points but features have " +
                std::to_string(centralized.values.rows()) + " rows");
  if (centralized.values.cols() != 12) throw Error("assemble_input: expected 12 time-function channels");
  if (layout == FeatureLayout::kTimeFunctions) return centralized;

  FeatureSequence out;
  out.values.resize(n, 16);
  out.channel_names = {"x", "y", "p_level", "dt"};
  out.channel_names.insert(out.channel_names.end(), centralized.channel_names.begin(),
                           centralized.channel_names.end());
  const auto flags = sig.flags();
  for (Index i = 0; i < n; ++i) {
    const auto& pt = sig.points[static_cast<std::size_t>(i)];
    out.values(i, 0) = pt.x;
    out.values(i, 1) = pt.y;
    out.values(i, 2) = pt.p;
    out.values(i, 3) = flags[static_cast<std::size_t>(i)] == kStrokeStart ? 0.0 : pt.t - sig.points[static_cast<std::size_t>(i - 1)].t;
  }
  out.values.rightCols(12) = centralized.values;
  return out;
}

FeatureSequence prepare_features(const RawSignature& raw, const FeatureOptions& options) {
  auto norm = normalize_signature(raw);
  return assemble_input(norm, centralize(extract_time_functions(norm, options.rho)), options.layout);
}

RawSignature parse_signature_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(source + ": empty file");
  ++line_no;
  if (trim(line) != "t,x,y,p,s") throw Error(source + ":1: expected header 't,x,y,p,s'");

  RawSignature sig;
  while (std::getline(in, line)) {
    ++line_no;
    std::string row = trim(line);
    if (row.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    double vals[4];
    int state = 0;
    std::size_t pos = 0;
    for (int field = 0; field < 5; ++field) {
      std::size_t comma = row.find(',', pos);
      if ((field < 4) == (comma == std::string::npos)) throw Error(where + ": expected 5 comma-separated fields");
      std::string cell = trim(std::string_view(row).substr(pos, field < 4 ? comma - pos : std::string::npos));
      const char* b = cell.data();
      const char* e = b + cell.size();
      std::from_chars_result res{};
      if (field < 4) {
        res = std::from_chars(b, e, vals[field]);
      } else {
        res = std::from_chars(b, e, state);
      }
      if (cell.empty() || res.ec != std::errc() || res.ptr != e)
        throw Error(where + ": cannot parse field " + std::to_string(field + 1) + " '" + cell + "'");
      pos = comma + 1;
    }
    if (state < 0 || state > 2)
      throw Error(where + ": stroke state must be 0, 1 or 2, got " + std::to_string(state));
    sig.points.push_back({vals[1], vals[2], vals[3], vals[0], state});
  }
  try {
    validate_signature(sig);
  } catch (const Error& e) {
    throw Error(source + ": " + e.what());
  }
  return sig;
}

RawSignature read_signature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open signature file " + path.string());
  return parse_signature_csv(in, path.string());
}

void write_signature_csv(std::ostream& out, const RawSignature& sig) {
  std::string text = "t,x,y,p,s\n";
  for (const auto& pt : sig.points) {
    append_double(text, pt.t);
    text += ',';
    append_double(text, pt.x);
    text += ',';
    append_double(text, pt.y);
    text += ',';
    append_double(text, pt.p);
    text += ',';
    text += std::to_string(pt.f);
    text += '\n';
  }
  out << text;
}

void write_signature_csv(const std::filesystem::path& path, const RawSignature& sig) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write signature file " + path.string());
  write_signature_csv(out, sig);
  if (!out) throw Error("failed writing signature file " + path.string());
}

}  // namespace tsgatr
