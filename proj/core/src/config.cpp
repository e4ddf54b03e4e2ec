#include "tsgatr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace tsgatr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw UsageError(key + ": expected a number, got '" + text + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw UsageError(key + ": expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw UsageError(key + ": expected true or false, got '" + text + "'");
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class Member>
Field real_field(std::string key, Member member) {
  return {key, [member](const RunConfig& c) { return format_double(member(c)); },
          [member, key](RunConfig& c, const std::string& v) { member(c) = parse_double(key, v); }};
}

template <class Member>
Field int_field(std::string key, Member member) {
  return {key, [member](const RunConfig& c) { return std::to_string(member(c)); },
          [member, key](RunConfig& c, const std::string& v) { member(c) = parse_int(key, v); }};
}

template <class Member>
Field bool_field(std::string key, Member member) {
  return {key, [member](const RunConfig& c) { return std::string(member(c) ? "true" : "false"); },
          [member, key](RunConfig& c, const std::string& v) { member(c) = parse_bool(key, v); }};
}

RhoVariant parse_rho(const std::string& v) {
  if (v == "literal") return RhoVariant::kLiteral;
  if (v == "curvature") return RhoVariant::kCurvature;
  throw UsageError("features.rho: expected literal or curvature, got '" + v + "'");
}

FeatureLayout parse_layout(const std::string& v) {
  if (v == "full16") return FeatureLayout::kFull16;
  if (v == "time_functions") return FeatureLayout::kTimeFunctions;
  throw UsageError("features.layout: expected full16 or time_functions, got '" + v + "'");
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    // Features.
    t.push_back({"features.rho",
                 [](const RunConfig& c) { return std::string(c.features.rho == RhoVariant::kLiteral ? "literal" : "curvature"); },
                 [](RunConfig& c, const std::string& v) { c.features.rho = parse_rho(v); }});
    t.push_back({"features.layout",
                 [](const RunConfig& c) {
                   return std::string(c.features.layout == FeatureLayout::kFull16 ? "full16" : "time_functions");
                 },
                 [](RunConfig& c, const std::string& v) {
                   c.features.layout = parse_layout(v);
                   c.network.input_dim = c.features.width();
                 }});
    // Network.
    t.push_back(int_field("model.d", [](auto& c) -> auto& { return c.network.d; }));
    t.push_back(int_field("model.blocks", [](auto& c) -> auto& { return c.network.n_blocks; }));
    t.push_back(int_field("model.k_step", [](auto& c) -> auto& { return c.network.k_step; }));
    t.push_back(int_field("model.k_nn", [](auto& c) -> auto& { return c.network.k_nn; }));
    t.push_back(bool_field("model.knn_symmetric", [](auto& c) -> auto& { return c.network.knn_symmetric; }));
    t.push_back({"model.pool", [](const RunConfig& c) { return to_string(c.network.tail_pool); },
                 [](RunConfig& c, const std::string& v) { c.network.tail_pool = parse_pool_kind(v); }});
    t.push_back(bool_field("model.tail_gru", [](auto& c) -> auto& { return c.network.tail_gru; }));
    t.push_back({"model.variant", [](const RunConfig& c) { return to_string(c.network.variant); },
                 [](RunConfig& c, const std::string& v) { c.network.variant = parse_variant(v); }});
    t.push_back(bool_field("model.reset_edge_weights", [](auto& c) -> auto& { return c.network.reset_edge_weights; }));
    // Loss.
    t.push_back(real_field("loss.gamma1", [](auto& c) -> auto& { return c.loss.gamma1; }));
    t.push_back(real_field("loss.gamma2", [](auto& c) -> auto& { return c.loss.gamma2; }));
    t.push_back(real_field("loss.xi", [](auto& c) -> auto& { return c.loss.xi; }));
    t.push_back(real_field("loss.alpha", [](auto& c) -> auto& { return c.loss.alpha; }));
    t.push_back(real_field("loss.beta", [](auto& c) -> auto& { return c.loss.beta; }));
    t.push_back(real_field("loss.random_weight", [](auto& c) -> auto& { return c.loss.random_weight; }));
    t.push_back(bool_field("loss.mean_reduction", [](auto& c) -> auto& { return c.loss.mean_reduction; }));
    // Distance.
    t.push_back({"distance.kind",
                 [](const RunConfig& c) { return std::string(c.distance.kind == DistanceKind::kHard ? "hard" : "soft"); },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "hard") c.distance.kind = DistanceKind::kHard;
                   else if (v == "soft") c.distance.kind = DistanceKind::kSoft;
                   else throw UsageError("distance.kind: expected hard or soft, got '" + v + "'");
                 }});
    t.push_back(real_field("distance.soft_gamma", [](auto& c) -> auto& { return c.distance.soft_gamma; }));
    // Batch composition.
    t.push_back(int_field("batch.anchors", [](auto& c) -> auto& { return c.batch.anchors; }));
    t.push_back(int_field("batch.positives", [](auto& c) -> auto& { return c.batch.positives; }));
    t.push_back(int_field("batch.skilled", [](auto& c) -> auto& { return c.batch.skilled; }));
    t.push_back(int_field("batch.random", [](auto& c) -> auto& { return c.batch.random; }));
    // Training.
    t.push_back(int_field("train.epochs", [](auto& c) -> auto& { return c.train.epochs; }));
    t.push_back(int_field("train.steps_per_epoch", [](auto& c) -> auto& { return c.train.steps_per_epoch; }));
    t.push_back(int_field("train.checkpoint_every", [](auto& c) -> auto& { return c.train.checkpoint_every; }));
    t.push_back(real_field("train.lr", [](auto& c) -> auto& { return c.train.adam.lr; }));
    t.push_back(real_field("train.beta1", [](auto& c) -> auto& { return c.train.adam.beta1; }));
    t.push_back(real_field("train.beta2", [](auto& c) -> auto& { return c.train.adam.beta2; }));
    t.push_back(real_field("train.eps", [](auto& c) -> auto& { return c.train.adam.eps; }));
    t.push_back(real_field("train.clip_norm", [](auto& c) -> auto& { return c.train.adam.clip_norm; }));
    // Evaluation.
    t.push_back({"eval.aggregation", [](const RunConfig& c) { return to_string(c.eval.aggregation); },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "mean") c.eval.aggregation = Aggregation::kMean;
                   else if (v == "min") c.eval.aggregation = Aggregation::kMin;
                   else throw UsageError("eval.aggregation: expected mean or min, got '" + v + "'");
                 }});
    t.push_back(bool_field("eval.interpolate", [](auto& c) -> auto& { return c.eval.interpolate; }));
    t.push_back(int_field("eval.runs", [](auto& c) -> auto& { return c.eval.runs; }));
    t.push_back({"eval.protocol", [](const RunConfig& c) { return c.eval.protocol; },
                 [](RunConfig& c, const std::string& v) { c.eval.protocol = v; }});
    return t;
  }();
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw UsageError("unknown config key '" + key + "'");
}

}  // namespace

std::string to_string(Aggregation aggregation) { return aggregation == Aggregation::kMean ? "mean" : "min"; }

void RunConfig::validate() const {
  network.validate();
  if (network.input_dim != features.width())
    throw UsageError("model input width " + std::to_string(network.input_dim) + " does not match feature layout width " +
                     std::to_string(features.width()));
  loss.validate();
  if (distance.kind == DistanceKind::kSoft && !(distance.soft_gamma > 0.0))
    throw UsageError("distance.soft_gamma must be > 0");
  if (batch.anchors < 1 || batch.positives < 1 || batch.skilled < 0 || batch.random < 0 ||
      batch.skilled + batch.random < 1)
    throw UsageError("batch needs >= 1 anchor, >= 1 positive and >= 1 negative");
  if (train.epochs < 1) throw UsageError("train.epochs must be >= 1");
  if (train.steps_per_epoch < 0) throw UsageError("train.steps_per_epoch must be >= 0");
  if (train.checkpoint_every < 0) throw UsageError("train.checkpoint_every must be >= 0");
  if (!(train.adam.lr > 0.0)) throw UsageError("train.lr must be > 0");
  if (!(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0) || !(train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0))
    throw UsageError("train.beta1 and train.beta2 must lie in [0, 1)");
  if (!(train.adam.eps > 0.0)) throw UsageError("train.eps must be > 0");
  if (eval.runs < 1) throw UsageError("eval.runs must be >= 1");
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, value);
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw UsageError(where + ": expected 'key = value'");
    if (!seen.insert(key).second) throw UsageError(where + ": repeated key '" + key + "'");
    try {
      set_config_value(config, key, value);
    } catch (const UsageError& e) {
      throw UsageError(where + ": " + e.what());
    }
  }
  try {
    config.validate();
  } catch (const UsageError& e) {
    throw UsageError(source + ": " + e.what());
  }
  return config;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::uint64_t config_hash(const RunConfig& config) { return fnv1a64(to_config_text(config)); }

}  // namespace tsgatr
