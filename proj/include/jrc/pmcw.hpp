// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "jrc/channel.hpp"
#include "jrc/sigcore.hpp"
#include "jrc/types.hpp"

namespace jrc {

enum class DelayPolicy { Reject, Round };

struct PmcwConfig {
  std::size_t code_length = 64;     // L chips per block
  std::size_t frames = 16;          // M blocks per CPI
  double chip_duration = 0.25e-9;   // t_c
  double carrier_hz = 79e9;
  double mu_percent = 50.0;         // share of radar-only frames
  ArrayGeometry geometry{1, 4, 0.5};
  bool intra_block_doppler = true;  // false zeroes the fast-time Doppler term
  DelayPolicy delay_policy = DelayPolicy::Reject;
  int dpsk_order = 4;

  double block_duration() const { return chip_duration * static_cast<double>(code_length); }
  double wavelength() const { return wavelength_from_carrier(carrier_hz); }

  void validate() const {
    require(code_length >= 1, ErrorCode::InvalidArgument, "code length must be >= 1");
    require(frames >= 1, ErrorCode::InvalidArgument, "frames per CPI must be >= 1");
    require(chip_duration > 0.0, ErrorCode::InvalidArgument, "chip duration must be positive");
    require(mu_percent >= 0.0 && mu_percent <= 100.0, ErrorCode::InvalidArgument, "mu must lie in [0, 100]");
    geometry.validate();
    bits_per_symbol(dpsk_order);
  }
};

enum class FrameKind : std::uint8_t { Radar, RadarComm };

struct FrameSchedule {
  std::vector<FrameKind> kinds;
  std::size_t radar_frames = 0;
  bool non_identifiable = false; // no radar-only frame: Doppler and symbols are coupled
};

/// First round(mu M / 100) frames are radar-only, the rest carry data.
inline FrameSchedule pmcw_schedule(const PmcwConfig& cfg) {
  require(cfg.mu_percent >= 0.0 && cfg.mu_percent <= 100.0, ErrorCode::InvalidArgument, "mu must lie in [0, 100]");
  FrameSchedule s;
  const auto m = cfg.frames;
  s.radar_frames = static_cast<std::size_t>(std::lround(cfg.mu_percent * static_cast<double>(m) / 100.0));
  if (s.radar_frames > m) s.radar_frames = m;
  s.kinds.assign(m, FrameKind::RadarComm);
  for (std::size_t i = 0; i < s.radar_frames; ++i) s.kinds[i] = FrameKind::Radar;
  s.non_identifiable = s.radar_frames == 0;
  return s;
}

/// Number of payload bits one CPI carries. The DPSK reference is the last
/// radar-only frame (or frame 0 when there is none).
inline std::size_t pmcw_payload_bits(const PmcwConfig& cfg) {
  const auto sched = pmcw_schedule(cfg);
  const std::size_t ref = std::max<std::size_t>(sched.radar_frames, 1);
  return (cfg.frames - std::min(ref, cfg.frames)) * static_cast<std::size_t>(bits_per_symbol(cfg.dpsk_order));
}

/// Slow-time symbols a_m: known phase-0 symbols on radar-only frames,
/// differentially encoded payload afterwards.
inline DpskStream pmcw_frame_symbols(const PmcwConfig& cfg, std::span<const std::uint8_t> payload) {
  require(payload.size() == pmcw_payload_bits(cfg), ErrorCode::InvalidArgument, "payload size does not match the frame schedule");
  const auto sched = pmcw_schedule(cfg);
  const std::size_t b = static_cast<std::size_t>(bits_per_symbol(cfg.dpsk_order));
  const std::size_t pilot_increments = std::max<std::size_t>(sched.radar_frames, 1) - 1;
  std::vector<std::uint8_t> all(pilot_increments * b, 0);
  all.insert(all.end(), payload.begin(), payload.end());
  auto stream = dpsk_encode(all, cfg.dpsk_order);
  stream.bits.assign(payload.begin(), payload.end());
  return stream;
}

struct ChipDelay {
  std::size_t shift = 0;
  double residual = 0.0; // quantization residual in seconds (Round policy)
};

inline ChipDelay chip_shift(double delay, const PmcwConfig& cfg) {
  const double x = delay / cfg.chip_duration;
  const double k = std::round(x);
  ChipDelay out;
  if (std::abs(x - k) > 1e-6) {
    require(cfg.delay_policy == DelayPolicy::Round, ErrorCode::InvalidArgument,
            "delay is not an integer number of chips");
  }
  out.residual = (x - k) * cfg.chip_duration;
  require(k >= 0.0, ErrorCode::InvalidArgument, "negative delay");
  require(k < static_cast<double>(cfg.code_length), ErrorCode::RangeAmbiguity,
          "delay exceeds one code block");
  out.shift = static_cast<std::size_t>(k);
  return out;
}

/// Per-antenna baseband transmit samples at chip rate, N_t x (M L):
/// x_i[mL + l] = a_m e^{j zeta_l} e^{j (i-1) k d sin(beta)}.
inline CMatrix pmcw_transmit(const PmcwConfig& cfg, const CodeSequence& code, std::span<const cd> symbols,
                             double beam_angle) {
  require(code.length() == cfg.code_length, ErrorCode::InvalidArgument, "code length does not match config");
  require(symbols.size() == cfg.frames, ErrorCode::InvalidArgument, "symbol count does not match frames");
  const auto chips = code.chips();
  const auto w = steering_vector(cfg.geometry, beam_angle, cfg.geometry.n_tx, SteeringSign::Transmit);
  const auto L = cfg.code_length;
  CMatrix x(static_cast<Eigen::Index>(cfg.geometry.n_tx), static_cast<Eigen::Index>(cfg.frames * L));
  for (std::size_t i = 0; i < cfg.geometry.n_tx; ++i)
    for (std::size_t m = 0; m < cfg.frames; ++m)
      for (std::size_t l = 0; l < L; ++l)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m * L + l)) = symbols[m] * chips[l] * w[i];
  return x;
}

/// Receive data cube indexed (frame m, chip l, antenna p).
struct PmcwCube {
  Tensor3 data;
  FrameSchedule schedule;
  std::vector<double> quantization_residuals;

  std::size_t frames() const { return data.dim(0); }
  std::size_t chips() const { return data.dim(1); }
  std::size_t antennas() const { return data.dim(2); }

  /// Y_p as an M x L matrix.
  CMatrix antenna(std::size_t p) const {
    CMatrix y(static_cast<Eigen::Index>(frames()), static_cast<Eigen::Index>(chips()));
    for (std::size_t m = 0; m < frames(); ++m)
      for (std::size_t l = 0; l < chips(); ++l)
        y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) = data(m, l, p);
    return y;
  }
};

/// Noise-free contribution of one scatterer to Y_p (before the c_q^{p-1} d_q factor):
/// Diag(a) [ (b^T (.) (P_k s)^T) (x) e ], with e_m = e^{-j 2 pi f_D m L t_c} and
/// b_l = e^{-j 2 pi f_D l t_c}. For a 1 x L row and M x 1 column the Kronecker
/// product is the outer product e * row.
inline CMatrix pmcw_scatterer_block(const PmcwConfig& cfg, const std::vector<cd>& chips, std::span<const cd> symbols,
                                    std::size_t shift, double doppler) {
  const auto L = static_cast<Eigen::Index>(cfg.code_length);
  const auto M = static_cast<Eigen::Index>(cfg.frames);
  const auto shifted = cyclic_shift(chips, shift);
  Eigen::RowVectorXcd row(L);
  for (Eigen::Index l = 0; l < L; ++l) {
    const cd b = cfg.intra_block_doppler
                     ? std::polar(1.0, -kTwoPi * doppler * static_cast<double>(l) * cfg.chip_duration)
                     : cd{1.0, 0.0};
    row(l) = b * shifted[static_cast<std::size_t>(l)];
  }
  CVector e(M);
  for (Eigen::Index m = 0; m < M; ++m)
    e(m) = std::polar(1.0, -kTwoPi * doppler * static_cast<double>(m) * cfg.block_duration());
  CVector a(M);
  for (Eigen::Index m = 0; m < M; ++m) a(m) = symbols[static_cast<std::size_t>(m)];
  return a.asDiagonal() * (e * row);
}

/// Receive cube from the slow/fast-time matrix model plus CN(0, sigma^2) noise.
inline PmcwCube pmcw_receive_cube(const Scene& scene, const PmcwConfig& cfg, const CodeSequence& code,
                                  std::span<const cd> symbols, Rng& rng, std::uint64_t cpi = 0) {
  cfg.validate();
  scene.validate();
  require(code.length() == cfg.code_length, ErrorCode::InvalidArgument, "code length does not match config");
  require(symbols.size() == cfg.frames, ErrorCode::InvalidArgument, "symbol count does not match frames");
  const auto M = cfg.frames, L = cfg.code_length, Nr = cfg.geometry.n_rx;
  PmcwCube cube;
  cube.data = Tensor3(M, L, Nr);
  cube.schedule = pmcw_schedule(cfg);
  const auto chips = code.chips();
  const auto gains = realize_gains(scene, cpi);
  for (std::size_t q = 0; q < scene.scatterers.size(); ++q) {
    const auto& s = scene.scatterers[q];
    const auto delay = chip_shift(s.delay, cfg);
    cube.quantization_residuals.push_back(delay.residual);
    const CMatrix block = pmcw_scatterer_block(cfg, chips, symbols, delay.shift, s.doppler);
    const auto c = steering_vector(cfg.geometry, s.arrival_angle, Nr, SteeringSign::Receive);
    for (std::size_t p = 0; p < Nr; ++p) {
      const cd w = c[p] * gains[q];
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t l = 0; l < L; ++l)
          cube.data(m, l, p) += w * block(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l));
    }
  }
  add_noise(cube.data.data(), scene.noise_variance, rng);
  return cube;
}

/// Oversampled single-antenna waveform with rectangular chips, for AF analysis.
inline std::vector<cd> pmcw_af_waveform(const CodeSequence& code, std::span<const cd> symbols,
                                        std::size_t oversample) {
  require(oversample >= 1, ErrorCode::InvalidArgument, "oversample must be >= 1");
  const auto chips = code.chips();
  std::vector<cd> out;
  out.reserve(symbols.size() * chips.size() * oversample);
  for (const cd a : symbols)
    for (const cd c : chips)
      for (std::size_t o = 0; o < oversample; ++o) out.push_back(a * c);
  return out;
}

} // namespace jrc
