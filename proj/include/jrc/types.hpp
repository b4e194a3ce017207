// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace jrc {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 3.0e8; // m/s, the value used throughout the link models

enum class ErrorCode {
  InvalidArgument,
  Singularity,
  RangeAmbiguity,
  NonIdentifiable,
  DecodingImpossible,
  UndefinedPsl,
  Domain,
  Config,
  Io,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
  case ErrorCode::InvalidArgument: return "invalid-argument";
  case ErrorCode::Singularity: return "singularity";
  case ErrorCode::RangeAmbiguity: return "range-ambiguity";
  case ErrorCode::NonIdentifiable: return "non-identifiable";
  case ErrorCode::DecodingImpossible: return "decoding-impossible";
  case ErrorCode::UndefinedPsl: return "undefined-psl";
  case ErrorCode::Domain: return "domain";
  case ErrorCode::Config: return "config";
  case ErrorCode::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

// Dense rank-3 tensor, row-major with the last index fastest.
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(std::size_t d0, std::size_t d1, std::size_t d2)
      : dims_{d0, d1, d2}, data_(d0 * d1 * d2, cd{0.0, 0.0}) {}

  std::size_t dim(std::size_t i) const { return dims_[i]; }
  std::size_t size() const { return data_.size(); }

  cd& operator()(std::size_t i0, std::size_t i1, std::size_t i2) {
    return data_[(i0 * dims_[1] + i1) * dims_[2] + i2];
  }
  const cd& operator()(std::size_t i0, std::size_t i1, std::size_t i2) const {
    return data_[(i0 * dims_[1] + i1) * dims_[2] + i2];
  }

  std::vector<cd>& data() { return data_; }
  const std::vector<cd>& data() const { return data_; }

  double energy() const {
    double e = 0.0;
    for (const auto& v : data_) e += std::norm(v);
    return e;
  }

private:
  std::size_t dims_[3] = {0, 0, 0};
  std::vector<cd> data_;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer; derives independent stream seeds from (master, counters)
// so results never depend on the order in which work items run.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(master) ^ a) ^ b);
}

// Circularly-symmetric complex Gaussian with unit variance.
inline cd unit_complex_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double re = n(rng);
  const double im = n(rng);
  return cd{re, im} * std::sqrt(0.5);
}

inline std::vector<std::uint8_t> random_bits(std::size_t n, Rng& rng) {
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return bits;
}

} // namespace jrc
