#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tsgatr/common.hpp"
#include "tsgatr/tape.hpp"

namespace tsgatr {

/// Named trainable matrices in insertion order. The flat index runs over
/// parameters in that order and row-major inside each matrix.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
  };

  void add(std::string name, Matrix value);
  bool contains(const std::string& name) const;
  const Matrix& get(const std::string& name) const;
  Matrix& get(const std::string& name);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  std::size_t count() const { return entries_.size(); }
  std::size_t scalar_count() const;

  double flat(std::size_t i) const;
  void set_flat(std::size_t i, double value);
  /// Name of the parameter holding flat coordinate i.
  const std::string& owner(std::size_t i) const;

  std::vector<double> to_flat() const;
  void assign_flat(const std::vector<double>& values);

  /// Same names and shapes, all zeros.
  ParameterStore zeros_like() const;
  bool same_layout(const ParameterStore& other) const;

  ParameterStore& operator+=(const ParameterStore& other);
  double squared_norm() const;
  void scale(double factor);
  bool all_finite() const;

  bool operator==(const ParameterStore& other) const;

 private:
  std::pair<std::size_t, Index> locate(std::size_t i) const;

  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Parameters registered as variables on one tape.
class BoundParameters {
 public:
  /// With `trainable` false the parameters are recorded as constants and
  /// nothing is kept for a backward pass.
  BoundParameters(ad::Tape& tape, const ParameterStore& store, bool trainable = true);

  ad::Tape& tape() const { return *tape_; }
  ad::Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }

  /// Gradients accumulated on the tape, laid out like the source store.
  ParameterStore gradients() const;

 private:
  ad::Tape* tape_;
  const ParameterStore* store_;
  std::map<std::string, ad::Var> vars_;
};

/// JSON document {"format", "version", "params": {name: {"shape", "values"}}}.
/// Values are written in shortest round-trip form so reading back is
/// bit-exact.
std::string parameters_to_json(const ParameterStore& store, int indent = -1);
ParameterStore parameters_from_json(const std::string& text);

}  // namespace tsgatr
