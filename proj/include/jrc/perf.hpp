// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "jrc/fft.hpp"
#include "jrc/ofdma.hpp"
#include "jrc/pmcw.hpp"
#include "jrc/types.hpp"

namespace jrc {

// ---------------------------------------------------------------------------
// Ambiguity function

struct AfSurface {
  std::vector<double> delays;   // s, ascending
  std::vector<double> dopplers; // Hz, ascending
  std::vector<cd> value;        // chi, indexed [delay * n_doppler + doppler], energy-normalized

  std::size_t n_delay() const { return delays.size(); }
  std::size_t n_doppler() const { return dopplers.size(); }
  cd at(std::size_t i, std::size_t j) const { return value[i * dopplers.size() + j]; }
  double magnitude(std::size_t i, std::size_t j) const { return std::abs(at(i, j)); }

  std::size_t zero_delay_index() const { return nearest(delays, 0.0); }
  std::size_t zero_doppler_index() const { return nearest(dopplers, 0.0); }

  /// |chi(tau, 0)| over the delay grid.
  std::vector<double> delay_cut() const {
    std::vector<double> c(n_delay());
    const auto j = zero_doppler_index();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = magnitude(i, j);
    return c;
  }

  /// |chi(0, nu)| over the Doppler grid.
  std::vector<double> doppler_cut() const {
    std::vector<double> c(n_doppler());
    const auto i = zero_delay_index();
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = magnitude(i, j);
    return c;
  }

private:
  static std::size_t nearest(const std::vector<double>& g, double v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
      if (std::abs(g[i] - v) < std::abs(g[best] - v)) best = i;
    return best;
  }
};

inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  require(n >= 1, ErrorCode::InvalidArgument, "grid needs at least one point");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

/// Discrete narrowband ambiguity
///   chi(k, nu) = sum_n x[n] conj(x[n-k]) e^{j 2 pi nu n T_s} / sum_n |x[n]|^2
/// for integer lags k in [-max_lag, max_lag]. Doppler rows are computed
/// independently and may be spread over `workers` threads.
inline AfSurface ambiguity_function(std::span<const cd> x, double sample_period, std::size_t max_lag,
                                    std::span<const double> doppler_hz, std::size_t workers = 1) {
  require(!x.empty(), ErrorCode::InvalidArgument, "ambiguity function of an empty waveform");
  require(sample_period > 0.0, ErrorCode::InvalidArgument, "sample period must be positive");
  require(!doppler_hz.empty(), ErrorCode::InvalidArgument, "empty Doppler grid");
  double energy = 0.0;
  for (const auto& v : x) energy += std::norm(v);
  require(energy > 0.0, ErrorCode::InvalidArgument, "waveform energy must be positive");

  const std::size_t n = x.size();
  max_lag = std::min(max_lag, n - 1);
  std::size_t nfft = 1;
  while (nfft < n + max_lag + 1) nfft <<= 1;

  std::vector<cd> xf(nfft, cd{0.0, 0.0});
  std::copy(x.begin(), x.end(), xf.begin());
  fft::forward(xf);

  AfSurface s;
  s.delays.resize(2 * max_lag + 1);
  for (std::size_t i = 0; i < s.delays.size(); ++i)
    s.delays[i] = (static_cast<double>(i) - static_cast<double>(max_lag)) * sample_period;
  s.dopplers.assign(doppler_hz.begin(), doppler_hz.end());
  const std::size_t nd = s.dopplers.size(), nl = s.delays.size();
  s.value.assign(nl * nd, cd{0.0, 0.0});

  const double scale = 1.0 / (static_cast<double>(nfft) * energy);
  auto row = [&](std::size_t j) {
    std::vector<cd> z(nfft, cd{0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k)
      z[k] = x[k] * std::polar(1.0, kTwoPi * s.dopplers[j] * static_cast<double>(k) * sample_period);
    fft::forward(z);
    for (std::size_t k = 0; k < nfft; ++k) z[k] *= std::conj(xf[k]);
    fft::inverse(z);
    for (std::size_t i = 0; i < nl; ++i) {
      const auto lag = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(max_lag);
      const std::size_t src = lag >= 0 ? static_cast<std::size_t>(lag) : nfft - static_cast<std::size_t>(-lag);
      s.value[i * nd + j] = z[src] * scale;
    }
  };

  workers = std::clamp<std::size_t>(workers, 1, nd);
  if (workers == 1) {
    for (std::size_t j = 0; j < nd; ++j) row(j);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t j = w; j < nd; j += workers) row(j);
      });
  }
  return s;
}

/// Peak sidelobe ratio in dB of a magnitude cut. The mainlobe extends from the
/// unique global peak while samples strictly decrease; the largest local
/// maximum outside it (edges included) sets the ratio. Returns -infinity when
/// nothing lies outside the mainlobe or every sidelobe is zero.
inline double peak_sidelobe_ratio(std::span<const double> cut) {
  require(!cut.empty(), ErrorCode::InvalidArgument, "empty cut");
  const auto it = std::max_element(cut.begin(), cut.end());
  const double peak = *it;
  const auto p = static_cast<std::size_t>(it - cut.begin());
  require(peak > 0.0, ErrorCode::UndefinedPsl, "cut has no positive peak");
  const auto count = std::count(cut.begin(), cut.end(), peak);
  require(count == 1, ErrorCode::UndefinedPsl,
          count == static_cast<std::ptrdiff_t>(cut.size()) ? "cut is flat" : "cut has no unique global peak");
  std::size_t lo = p, hi = p;
  while (lo > 0 && cut[lo - 1] < cut[lo]) --lo;
  while (hi + 1 < cut.size() && cut[hi + 1] < cut[hi]) ++hi;
  double side = -1.0;
  for (std::size_t i = 0; i < cut.size(); ++i) {
    if (i >= lo && i <= hi) continue;
    const bool left = i == 0 || cut[i] >= cut[i - 1];
    const bool right = i + 1 == cut.size() || cut[i] >= cut[i + 1];
    if (left && right) side = std::max(side, cut[i]);
  }
  if (side <= 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(side / peak);
}

inline double peak_sidelobe_ratio(const std::vector<double>& cut) { return peak_sidelobe_ratio(std::span<const double>(cut)); }

// ---------------------------------------------------------------------------
// Estimation and detection metrics

inline double rmse(std::span<const double> estimates, std::span<const double> truths) {
  require(!estimates.empty(), ErrorCode::InvalidArgument, "RMSE of an empty set");
  require(estimates.size() == truths.size(), ErrorCode::InvalidArgument, "RMSE inputs differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i] - truths[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(estimates.size()));
}

inline double rmse(const std::vector<double>& e, const std::vector<double>& t) {
  return rmse(std::span<const double>(e), std::span<const double>(t));
}

inline double ber(std::span<const std::uint8_t> bits, std::span<const std::uint8_t> decoded) {
  require(!bits.empty(), ErrorCode::InvalidArgument, "BER of an empty bit stream");
  require(bits.size() == decoded.size(), ErrorCode::InvalidArgument, "BER inputs differ in length");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) errors += (bits[i] & 1u) != (decoded[i] & 1u);
  return static_cast<double>(errors) / static_cast<double>(bits.size());
}

inline double ber(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  return ber(std::span<const std::uint8_t>(a), std::span<const std::uint8_t>(b));
}

// ---------------------------------------------------------------------------
// Rate / distortion trade-off

namespace detail {

inline bool is_diagonal(const Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

inline void check_square(const Eigen::MatrixXd& m) {
  require(m.rows() > 0 && m.rows() == m.cols(), ErrorCode::InvalidArgument, "matrix must be square and non-empty");
}

} // namespace detail

inline double dmse_eff(double mmse, double delta) {
  require(delta > 0.0 && delta <= 1.0, ErrorCode::InvalidArgument, "delta must lie in (0, 1]");
  require(mmse > 0.0, ErrorCode::Domain, "MMSE must be positive");
  return std::pow(mmse, delta);
}

/// Matrix power MMSE^delta of a symmetric positive-definite matrix.
inline Eigen::MatrixXd dmse_eff(const Eigen::MatrixXd& mmse, double delta) {
  require(delta > 0.0 && delta <= 1.0, ErrorCode::InvalidArgument, "delta must lie in (0, 1]");
  detail::check_square(mmse);
  if (detail::is_diagonal(mmse)) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(mmse.rows(), mmse.cols());
    for (Eigen::Index i = 0; i < mmse.rows(); ++i) out(i, i) = dmse_eff(mmse(i, i), delta);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mmse);
  require(es.info() == Eigen::Success, ErrorCode::Domain, "eigen-decomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    require(lam(i) > 0.0, ErrorCode::Domain, "MMSE matrix must be positive definite");
    lam(i) = std::pow(lam(i), delta);
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

/// Tr log2 M for a symmetric positive-definite matrix.
inline double trace_log2(const Eigen::MatrixXd& m) {
  detail::check_square(m);
  double acc = 0.0;
  if (detail::is_diagonal(m)) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      require(m(i, i) > 0.0, ErrorCode::Domain, "matrix must be positive definite");
      acc += std::log2(m(i, i));
    }
    return acc;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, ErrorCode::Domain, "eigen-decomposition failed");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    require(es.eigenvalues()(i) > 0.0, ErrorCode::Domain, "matrix must be positive definite");
    acc += std::log2(es.eigenvalues()(i));
  }
  return acc;
}

/// (1/N) Tr log2 M + r; zero when M is the MMSE matrix of a rate-r code of length N.
inline double check_rate_identity(const Eigen::MatrixXd& m, double rate, std::size_t n) {
  require(n >= 1, ErrorCode::InvalidArgument, "code length must be >= 1");
  return trace_log2(m) / static_cast<double>(n) + rate;
}

inline double check_rate_identity(double mmse, double rate, std::size_t n) {
  require(mmse > 0.0, ErrorCode::Domain, "MMSE must be positive");
  require(n >= 1, ErrorCode::InvalidArgument, "code length must be >= 1");
  return std::log2(mmse) / static_cast<double>(n) + rate;
}

/// Isotropic MMSE matrix 2^{-r} I_N consistent with spectral efficiency r.
inline Eigen::MatrixXd mmse_from_rate(double rate, std::size_t n) {
  require(n >= 1, ErrorCode::InvalidArgument, "code length must be >= 1");
  const auto nn = static_cast<Eigen::Index>(n);
  return Eigen::MatrixXd::Identity(nn, nn) * std::exp2(-rate);
}

struct TradeoffSpec {
  double rate = 0.0;          // bits/s/Hz
  double delta = 1.0;         // effective fraction of time carrying data
  std::size_t code_length = 1;
  Eigen::MatrixXd mmse;       // N x N; empty means 2^{-r} I_N
  Eigen::MatrixXd crlb;       // Q' x Q' radar bound (or proxy)
  std::size_t targets = 1;    // Q
  double weight = 0.5;        // w
  double bandwidth = 0.0;     // Hz, informational
};

inline double communications_term(const TradeoffSpec& s) {
  const Eigen::MatrixXd mmse = s.mmse.size() == 0 ? mmse_from_rate(s.rate, s.code_length) : s.mmse;
  require(static_cast<std::size_t>(mmse.rows()) == s.code_length, ErrorCode::InvalidArgument,
          "MMSE dimension must equal the code length");
  return trace_log2(dmse_eff(mmse, s.delta)) / static_cast<double>(s.code_length);
}

inline double radar_term(const TradeoffSpec& s) {
  require(s.targets >= 1, ErrorCode::InvalidArgument, "radar term needs at least one detected target");
  return trace_log2(s.crlb) / static_cast<double>(s.targets);
}

/// w (1/N) Tr log2 DMSE_eff + (1 - w) (1/Q) Tr log2 CRLB.
inline double jrc_objective(const TradeoffSpec& s) {
  require(s.weight >= 0.0 && s.weight <= 1.0, ErrorCode::InvalidArgument, "weight must lie in [0, 1]");
  require(s.weight == 1.0 || s.targets >= 1, ErrorCode::InvalidArgument,
          "radar term is active but no target is detected");
  const double c = s.weight > 0.0 ? communications_term(s) : 0.0;
  const double r = s.weight < 1.0 ? radar_term(s) : 0.0;
  return s.weight * c + (1.0 - s.weight) * r;
}

/// Inverse Fisher information of (delay, Doppler, angle) for one on-grid
/// target in the OFDMA receive model with unit-modulus symbols, known
/// amplitude and white noise. A bound proxy, not an exact CRLB of the
/// full estimation problem.
inline Eigen::Matrix3d crlb_proxy(const OfdmaConfig& cfg, double angle, double amplitude_power, double noise_variance) {
  require(noise_variance > 0.0, ErrorCode::InvalidArgument, "noise variance must be positive");
  require(amplitude_power > 0.0, ErrorCode::InvalidArgument, "amplitude power must be positive");
  Eigen::Matrix3d fim = Eigen::Matrix3d::Zero();
  const double tsym = cfg.symbol_duration();
  const double dpsi = kPi * std::cos(angle);
  // Parameters are measured in resolution cells while inverting.
  const Eigen::Vector3d scale(1.0 / cfg.bandwidth(), 1.0 / (static_cast<double>(cfg.symbols) * tsym), 1.0);
  for (std::size_t n = 0; n < cfg.subcarriers; ++n)
    for (std::size_t m = 0; m < cfg.symbols; ++m)
      for (std::size_t p = 0; p < cfg.geometry.n_rx; ++p) {
        const Eigen::Vector3d g(-kTwoPi * static_cast<double>(n) * cfg.spacing_hz * scale(0),
                                kTwoPi * static_cast<double>(m) * tsym * scale(1), dpsi * static_cast<double>(p));
        fim += g * g.transpose();
      }
  fim *= 2.0 * amplitude_power / noise_variance;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(fim);
  require(lu.isInvertible(), ErrorCode::Singularity, "Fisher information is singular");
  return scale.asDiagonal() * lu.inverse() * scale.asDiagonal();
}

/// Inverse Fisher information of (Doppler, angle) for one target in the PMCW
/// receive model with unit-modulus chips and symbols, known amplitude and
/// delay. The delay is excluded because the model keeps it on the chip grid.
inline Eigen::Matrix2d pmcw_crlb_proxy(const PmcwConfig& cfg, double angle, double amplitude_power,
                                       double noise_variance) {
  require(noise_variance > 0.0, ErrorCode::InvalidArgument, "noise variance must be positive");
  require(amplitude_power > 0.0, ErrorCode::InvalidArgument, "amplitude power must be positive");
  Eigen::Matrix2d fim = Eigen::Matrix2d::Zero();
  const double dpsi = -kTwoPi * cfg.geometry.spacing_over_lambda * std::cos(angle);
  const Eigen::Vector2d scale(1.0 / (static_cast<double>(cfg.frames) * cfg.block_duration()), 1.0);
  for (std::size_t m = 0; m < cfg.frames; ++m)
    for (std::size_t l = 0; l < cfg.code_length; ++l) {
      const double t = static_cast<double>(m) * cfg.block_duration() +
                       (cfg.intra_block_doppler ? static_cast<double>(l) * cfg.chip_duration : 0.0);
      for (std::size_t p = 0; p < cfg.geometry.n_rx; ++p) {
        const Eigen::Vector2d g(-kTwoPi * t * scale(0), dpsi * static_cast<double>(p));
        fim += g * g.transpose();
      }
    }
  fim *= 2.0 * amplitude_power / noise_variance;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(fim);
  require(lu.isInvertible(), ErrorCode::Singularity, "Fisher information is singular");
  return scale.asDiagonal() * lu.inverse() * scale.asDiagonal();
}

} // namespace jrc
