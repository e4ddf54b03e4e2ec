#include "tsgatr/params.hpp"

#include <cmath>
#include <utility>

#include <nlohmann/json.hpp>

#include "json_util.hpp"

namespace tsgatr {

void ParameterStore::add(std::string name, Matrix value) {
  if (index_.count(name)) throw Error("duplicate parameter '" + name + "'");
  index_[name] = entries_.size();
  entries_.push_back({std::move(name), std::move(value)});
}

bool ParameterStore::contains(const std::string& name) const { return index_.count(name) != 0; }

const Matrix& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

Matrix& ParameterStore::get(const std::string& name) {
  return const_cast<Matrix&>(std::as_const(*this).get(name));
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

std::pair<std::size_t, Index> ParameterStore::locate(std::size_t i) const {
  std::size_t rest = i;
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto sz = static_cast<std::size_t>(entries_[k].value.size());
    if (rest < sz) return {k, static_cast<Index>(rest)};
    rest -= sz;
  }
  throw Error("flat parameter index " + std::to_string(i) + " out of range");
}

double ParameterStore::flat(std::size_t i) const {
  auto [k, off] = locate(i);
  return entries_[k].value.data()[off];
}

void ParameterStore::set_flat(std::size_t i, double value) {
  auto [k, off] = locate(i);
  entries_[k].value.data()[off] = value;
}

const std::string& ParameterStore::owner(std::size_t i) const { return entries_[locate(i).first].name; }

std::vector<double> ParameterStore::to_flat() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& e : entries_) out.insert(out.end(), e.value.data(), e.value.data() + e.value.size());
  return out;
}

void ParameterStore::assign_flat(const std::vector<double>& values) {
  if (values.size() != scalar_count()) throw Error("flat vector length does not match parameter store");
  std::size_t pos = 0;
  for (auto& e : entries_) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), e.value.size(), e.value.data());
    pos += static_cast<std::size_t>(e.value.size());
  }
}

ParameterStore ParameterStore::zeros_like() const {
  ParameterStore out;
  for (const auto& e : entries_) out.add(e.name, Matrix::Zero(e.value.rows(), e.value.cols()));
  return out;
}

bool ParameterStore::same_layout(const ParameterStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& a = entries_[k];
    const auto& b = other.entries_[k];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) return false;
  }
  return true;
}

ParameterStore& ParameterStore::operator+=(const ParameterStore& other) {
  if (!same_layout(other)) throw Error("parameter stores have different layouts");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k].value += other.entries_[k].value;
  return *this;
}

double ParameterStore::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value.squaredNorm();
  return s;
}

void ParameterStore::scale(double factor) {
  for (auto& e : entries_) e.value *= factor;
}

bool ParameterStore::all_finite() const {
  for (const auto& e : entries_)
    if (!e.value.allFinite()) return false;
  return true;
}

bool ParameterStore::operator==(const ParameterStore& other) const {
  if (!same_layout(other)) return false;
  for (std::size_t k = 0; k < entries_.size(); ++k)
    if (entries_[k].value != other.entries_[k].value) return false;
  return true;
}

BoundParameters::BoundParameters(ad::Tape& tape, const ParameterStore& store, bool trainable)
    : tape_(&tape), store_(&store) {
  for (const auto& e : store.entries())
    vars_.emplace(e.name, trainable ? tape.variable(e.value) : tape.constant(e.value));
}

ad::Var BoundParameters::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw Error("parameter '" + name + "' is not bound");
  return it->second;
}

ParameterStore BoundParameters::gradients() const {
  ParameterStore out;
  for (const auto& e : store_->entries()) out.add(e.name, tape_->gradient(vars_.at(e.name)));
  return out;
}

std::string parameters_to_json(const ParameterStore& store, int indent) {
  return detail::params_json(store).dump(indent);
}

ParameterStore parameters_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed parameter JSON: ") + e.what());
  }
  return detail::params_from_json(doc);
}

namespace detail {

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json j;
  j["shape"] = {m.rows(), m.cols()};
  j["values"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  try {
    const auto shape = j.at("shape").get<std::vector<Index>>();
    const auto values = j.at("values").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 ||
        static_cast<std::size_t>(shape[0] * shape[1]) != values.size())
      throw Error(what + ": shape does not match value count");
    Matrix m(shape[0], shape[1]);
    std::copy(values.begin(), values.end(), m.data());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(what + ": " + e.what());
  }
}

nlohmann::json params_json(const ParameterStore& store) {
  nlohmann::json doc;
  doc["format"] = "tsgatr-parameters";
  doc["version"] = 1;
  // Keep insertion order explicit; JSON objects are unordered.
  nlohmann::json items = nlohmann::json::array();
  for (const auto& e : store.entries()) {
    auto m = matrix_json(e.value);
    m["name"] = e.name;
    items.push_back(std::move(m));
  }
  doc["params"] = std::move(items);
  return doc;
}

ParameterStore params_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "tsgatr-parameters") throw Error("not a parameter document");
    if (doc.at("version") != 1) throw Error("unsupported parameter document version");
    ParameterStore store;
    for (const auto& item : doc.at("params")) {
      const auto name = item.at("name").get<std::string>();
      store.add(name, matrix_from_json(item, "parameter '" + name + "'"));
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed parameter document: ") + e.what());
  }
}

}  // namespace detail

}  // namespace tsgatr
