// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "jrc/types.hpp"

namespace jrc {

inline double wavelength_from_carrier(double carrier_hz) {
  require(carrier_hz > 0.0, ErrorCode::InvalidArgument, "carrier frequency must be positive");
  return kSpeedOfLight / carrier_hz;
}

inline double wavenumber(double wavelength) { return kTwoPi / wavelength; }

struct LinkBudget {
  double carrier_hz = 60e9;
  double tx_gain = 1.0;
  double rx_gain = 1.0;
  double range_m = 1.0;
  double pathloss_exponent = 2.0;

  double wavelength() const { return wavelength_from_carrier(carrier_hz); }
};

/// Free-space communications gain G_TX G_RX lambda^2 / ((4 pi)^2 rho^gamma).
inline double comm_large_scale_gain(double tx_gain, double rx_gain, double wavelength, double range_m,
                                    double pathloss_exponent) {
  require(range_m > 0.0, ErrorCode::Singularity, "link range must be positive");
  require(pathloss_exponent > 0.0, ErrorCode::InvalidArgument, "path-loss exponent must be positive");
  const double four_pi = 4.0 * kPi;
  return tx_gain * rx_gain * wavelength * wavelength /
         (four_pi * four_pi * std::pow(range_m, pathloss_exponent));
}

inline double comm_large_scale_gain(const LinkBudget& b) {
  return comm_large_scale_gain(b.tx_gain, b.rx_gain, b.wavelength(), b.range_m, b.pathloss_exponent);
}

/// Radar scatterer gain lambda^2 sigma / (64 pi^3 rho^4).
inline double radar_large_scale_gain(double wavelength, double rcs, double range_m) {
  require(range_m > 0.0, ErrorCode::Singularity, "target range must be positive");
  require(rcs >= 0.0, ErrorCode::InvalidArgument, "RCS must be non-negative");
  const double r2 = range_m * range_m;
  return wavelength * wavelength * rcs / (64.0 * kPi * kPi * kPi * r2 * r2);
}

inline double doppler_from_velocity(double velocity, double wavelength) {
  require(wavelength > 0.0, ErrorCode::InvalidArgument, "wavelength must be positive");
  return 2.0 * velocity / wavelength;
}

struct CommTap {
  cd gain{1.0, 0.0};
  double delay = 0.0;
  double doppler = 0.0;
};

/// h_c(t, f) = G_c sum_l alpha_l e^{-j 2 pi tau_l f} e^{+j 2 pi nu_l t}.
inline cd channel_response(std::span<const CommTap> taps, double large_scale_gain, double t, double f) {
  cd h{0.0, 0.0};
  for (const auto& tap : taps)
    h += tap.gain * std::polar(1.0, -kTwoPi * tap.delay * f) * std::polar(1.0, kTwoPi * tap.doppler * t);
  return large_scale_gain * h;
}

// ---------------------------------------------------------------------------
// Target fluctuation

enum class FadingKind { Swerling0, Swerling1_2, Swerling3_4, Rician };

struct FadingModel {
  FadingKind kind = FadingKind::Swerling0;
  double rician_k = 10.0; // linear power ratio LOS/scattered; 10 dB by default

  static FadingModel swerling0() { return {FadingKind::Swerling0, 10.0}; }
  static FadingModel rician_db(double k_db) { return {FadingKind::Rician, std::pow(10.0, k_db / 10.0)}; }
};

/// One small-scale gain draw with E|beta|^2 = mean_power.
inline cd draw_small_scale(const FadingModel& model, double mean_power, Rng& rng) {
  require(mean_power > 0.0, ErrorCode::InvalidArgument, "mean power must be positive");
  switch (model.kind) {
  case FadingKind::Swerling0:
    return {std::sqrt(mean_power), 0.0};
  case FadingKind::Swerling1_2:
    return std::sqrt(mean_power) * unit_complex_normal(rng);
  case FadingKind::Swerling3_4: {
    // Power is chi-square with 4 degrees of freedom, scaled to the mean.
    std::normal_distribution<double> n(0.0, 1.0);
    double chi2 = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double x = n(rng);
      chi2 += x * x;
    }
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    const double phase = u(rng);
    return std::polar(std::sqrt(mean_power * chi2 / 4.0), phase);
  }
  case FadingKind::Rician: {
    const double k = model.rician_k;
    require(k >= 0.0, ErrorCode::InvalidArgument, "Rician K-factor must be non-negative");
    if (std::isinf(k)) return {std::sqrt(mean_power), 0.0};
    const double los = std::sqrt(mean_power * k / (k + 1.0));
    const double diffuse = std::sqrt(mean_power / (k + 1.0));
    return cd{los, 0.0} + diffuse * unit_complex_normal(rng);
  }
  }
  return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// Scatterers and scenes

struct Scatterer {
  double delay = 0.0;           // total bi-static flight time tau_q, s
  double doppler = 0.0;         // bi-static Doppler f_Dq, Hz
  double velocity = 0.0;        // informational radial velocity, m/s
  double arrival_angle = 0.0;   // psi_q, rad
  double departure_angle = 0.0; // beta, rad
  double rcs = 1.0;             // sigma, m^2
  cd gain{1.0, 0.0};            // composite amplitude d_q before fluctuation
  FadingModel fading{};

  double bistatic_range() const { return kSpeedOfLight * delay; }
  // Range on the mono-static scale (half the total path); the resolution on
  // this scale is c / (2 W).
  double range() const { return 0.5 * kSpeedOfLight * delay; }
};

struct Scene {
  std::vector<Scatterer> scatterers;
  double noise_variance = 0.0;
  std::size_t n_cpi = 1;
  std::uint64_t seed = 1;

  void validate() const {
    require(noise_variance >= 0.0, ErrorCode::InvalidArgument, "noise variance must be non-negative");
    for (const auto& s : scatterers) {
      require(s.delay >= 0.0, ErrorCode::InvalidArgument, "scatterer delay must be non-negative");
      require(s.rcs >= 0.0, ErrorCode::InvalidArgument, "scatterer RCS must be non-negative");
      require(std::abs(s.arrival_angle) <= kPi / 2 + 1e-12, ErrorCode::InvalidArgument,
              "arrival angle must lie in [-pi/2, pi/2]");
      require(std::isfinite(s.doppler) && std::isfinite(s.delay), ErrorCode::InvalidArgument,
              "scatterer parameters must be finite");
    }
  }
};

/// Block-fading gain of scatterer q in CPI `cpi`: identical on every call with
/// the same scene seed.
inline cd fading_gain(const Scene& scene, std::size_t q, std::uint64_t cpi) {
  Rng rng(derive_seed(scene.seed, 0xFADEu + cpi, q));
  return draw_small_scale(scene.scatterers.at(q).fading, 1.0, rng);
}

/// Realized d_q for every scatterer in the given CPI.
inline std::vector<cd> realize_gains(const Scene& scene, std::uint64_t cpi) {
  std::vector<cd> d(scene.scatterers.size());
  for (std::size_t q = 0; q < d.size(); ++q) d[q] = scene.scatterers[q].gain * fading_gain(scene, q, cpi);
  return d;
}

/// h_r(t, f) = sum_q d_q e^{-j 2 pi tau_q f} e^{-j 2 pi f_Dq t} for one CPI.
inline cd channel_response(const Scene& scene, double t, double f, std::uint64_t cpi = 0) {
  const auto d = realize_gains(scene, cpi);
  cd h{0.0, 0.0};
  for (std::size_t q = 0; q < d.size(); ++q) {
    const auto& s = scene.scatterers[q];
    h += d[q] * std::polar(1.0, -kTwoPi * s.delay * f) * std::polar(1.0, -kTwoPi * s.doppler * t);
  }
  return h;
}

/// Static bi-static phase eta_q = -2 pi (f_c (tau1 + tau2) + f_D1 tau2).
inline double static_phase(double carrier_hz, double tau1, double tau2, double doppler1) {
  return -kTwoPi * (carrier_hz * (tau1 + tau2) + doppler1 * tau2);
}

/// d_q = N_t * h1 * h2 * beta * e^{j eta} * g_beam. The transmit beam gain is a
/// separate factor so steering mismatch can be modelled explicitly.
inline cd bistatic_composite_gain(std::size_t n_tx, double leg1_amplitude, double leg2_amplitude, cd fading,
                                  double eta, cd tx_beam_gain = {1.0, 0.0}) {
  return static_cast<double>(n_tx) * leg1_amplitude * leg2_amplitude * fading * std::polar(1.0, eta) *
         tx_beam_gain;
}

/// Adds CN(0, variance) noise to every sample. Unit draws are scaled after
/// sampling so equal seeds give proportional realizations at any variance.
inline void add_noise(std::vector<cd>& samples, double variance, Rng& rng) {
  if (variance <= 0.0) return;
  const double sigma = std::sqrt(variance);
  for (auto& s : samples) s += sigma * unit_complex_normal(rng);
}

} // namespace jrc
