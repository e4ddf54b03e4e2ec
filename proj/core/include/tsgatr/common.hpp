#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace tsgatr {

// Row-major so that one row is one time step / graph node and flat
// serialization order matches the in-memory layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Domain error: malformed input data, inconsistent shapes, failed
/// validation. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command line or configuration. The CLI maps it to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kFeatureEpsilon = 1e-8;

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent child seed for a named purpose. All randomness in
/// the engine flows through this so that every draw is reproducible from
/// the single top-level seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

/// 64-bit FNV-1a, used for config and manifest fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

std::string hex64(std::uint64_t value);

}  // namespace tsgatr
