// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "jrc/channel.hpp"
#include "jrc/fft.hpp"
#include "jrc/sigcore.hpp"
#include "jrc/types.hpp"

namespace jrc {

struct OfdmaConfig {
  std::size_t subcarriers = 64;  // N_c, also the IFFT length
  std::size_t symbols = 8;       // N_s per CPI
  double spacing_hz = 62.5e6;    // delta f
  std::size_t cp_length = 16;    // samples
  double carrier_hz = 79e9;
  double mu_percent = 50.0;      // share of radar pilot subcarriers
  ArrayGeometry geometry{1, 4, 0.5};
  int dpsk_order = 4;
  std::uint64_t pilot_seed = 7;

  double symbol_duration() const { return 1.0 / spacing_hz; }
  double bandwidth() const { return static_cast<double>(subcarriers) * spacing_hz; }
  double sample_period() const { return 1.0 / bandwidth(); }
  double wavelength() const { return wavelength_from_carrier(carrier_hz); }

  void validate() const {
    require(subcarriers >= 1 && symbols >= 1, ErrorCode::InvalidArgument, "OFDMA dimensions must be >= 1");
    require(spacing_hz > 0.0, ErrorCode::InvalidArgument, "subcarrier spacing must be positive");
    require(mu_percent >= 0.0 && mu_percent <= 100.0, ErrorCode::InvalidArgument, "mu must lie in [0, 100]");
    geometry.validate();
    require(geometry.spacing_over_lambda == 0.5, ErrorCode::InvalidArgument,
            "OFDMA receive array spacing is fixed at lambda/2");
    bits_per_symbol(dpsk_order);
  }
};

struct PilotMask {
  std::vector<bool> radar; // true: known radar symbols on this subcarrier
  std::size_t count = 0;

  std::vector<std::size_t> radar_rows() const {
    std::vector<std::size_t> r;
    for (std::size_t n = 0; n < radar.size(); ++n)
      if (radar[n]) r.push_back(n);
    return r;
  }
  std::vector<std::size_t> comm_rows() const {
    std::vector<std::size_t> r;
    for (std::size_t n = 0; n < radar.size(); ++n)
      if (!radar[n]) r.push_back(n);
    return r;
  }
};

/// round(mu N_c / 100) radar subcarriers spread evenly: row floor(i N_c / K).
inline PilotMask ofdma_pilot_mask(const OfdmaConfig& cfg) {
  require(cfg.mu_percent >= 0.0 && cfg.mu_percent <= 100.0, ErrorCode::InvalidArgument, "mu must lie in [0, 100]");
  const auto nc = cfg.subcarriers;
  auto k = static_cast<std::size_t>(std::lround(cfg.mu_percent * static_cast<double>(nc) / 100.0));
  if (k > nc) k = nc;
  PilotMask mask;
  mask.radar.assign(nc, false);
  for (std::size_t i = 0; i < k; ++i) mask.radar[i * nc / k] = true;
  mask.count = k;
  return mask;
}

struct SymbolGrid {
  CMatrix symbols; // A, N_c x N_s
  PilotMask mask;
  std::vector<std::uint8_t> payload;
  int order = 4;
};

inline std::size_t ofdma_payload_bits(const OfdmaConfig& cfg) {
  const auto mask = ofdma_pilot_mask(cfg);
  return (cfg.subcarriers - mask.count) * (cfg.symbols - 1) * static_cast<std::size_t>(bits_per_symbol(cfg.dpsk_order));
}

/// Known pilot symbol on (n, m): a QPSK point fixed by the pilot seed.
inline cd ofdma_pilot_symbol(const OfdmaConfig& cfg, std::size_t n, std::size_t m) {
  const auto h = derive_seed(cfg.pilot_seed, n, m);
  return dpsk_point(static_cast<int>(h & 3u), 4);
}

/// Pilots on radar rows; each communications row carries a DPSK stream over
/// slow time with its phase-0 reference at m = 0.
inline SymbolGrid make_symbol_grid(const OfdmaConfig& cfg, std::span<const std::uint8_t> payload) {
  cfg.validate();
  require(payload.size() == ofdma_payload_bits(cfg), ErrorCode::InvalidArgument, "payload size does not match the pilot mask");
  SymbolGrid g;
  g.mask = ofdma_pilot_mask(cfg);
  g.order = cfg.dpsk_order;
  g.payload.assign(payload.begin(), payload.end());
  g.symbols = CMatrix(static_cast<Eigen::Index>(cfg.subcarriers), static_cast<Eigen::Index>(cfg.symbols));
  const std::size_t per_row = (cfg.symbols - 1) * static_cast<std::size_t>(bits_per_symbol(cfg.dpsk_order));
  std::size_t offset = 0;
  for (std::size_t n = 0; n < cfg.subcarriers; ++n) {
    if (g.mask.radar[n]) {
      for (std::size_t m = 0; m < cfg.symbols; ++m)
        g.symbols(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = ofdma_pilot_symbol(cfg, n, m);
      continue;
    }
    const auto row = dpsk_encode(payload.subspan(offset, per_row), cfg.dpsk_order);
    offset += per_row;
    for (std::size_t m = 0; m < cfg.symbols; ++m)
      g.symbols(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = row.symbols[m];
  }
  return g;
}

/// Per-antenna transmit samples, N_t x N_s (cp + N_c): each symbol is the
/// unnormalized IFFT of its grid column, with the cyclic prefix prepended.
inline CMatrix ofdma_transmit(const OfdmaConfig& cfg, const CMatrix& grid, double beam_angle) {
  require(grid.rows() == static_cast<Eigen::Index>(cfg.subcarriers) &&
              grid.cols() == static_cast<Eigen::Index>(cfg.symbols),
          ErrorCode::InvalidArgument, "symbol grid does not match config");
  const auto nc = cfg.subcarriers, cp = cfg.cp_length, len = cp + nc;
  const auto w = steering_vector(cfg.geometry, beam_angle, cfg.geometry.n_tx, SteeringSign::Transmit);
  CMatrix x(static_cast<Eigen::Index>(cfg.geometry.n_tx), static_cast<Eigen::Index>(cfg.symbols * len));
  std::vector<cd> buf(nc);
  for (std::size_t m = 0; m < cfg.symbols; ++m) {
    for (std::size_t n = 0; n < nc; ++n) buf[n] = grid(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    fft::inverse(buf);
    for (std::size_t i = 0; i < cfg.geometry.n_tx; ++i) {
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t src = t < cp ? nc - cp + t : t - cp;
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m * len + t)) = buf[src % nc] * w[i];
      }
    }
  }
  return x;
}

/// Subcarrier-domain receive cube indexed (subcarrier n, symbol m, antenna p).
struct OfdmaCube {
  Tensor3 data;
  bool isi_warning = false; // some target delay exceeds the cyclic prefix

  std::size_t subcarriers() const { return data.dim(0); }
  std::size_t symbols() const { return data.dim(1); }
  std::size_t antennas() const { return data.dim(2); }
};

struct PointTarget {
  double delay = 0.0;
  double doppler = 0.0;
  double angle = 0.0;
  cd gain{1.0, 0.0};
};

inline std::vector<PointTarget> realized_targets(const Scene& scene, std::uint64_t cpi) {
  const auto d = realize_gains(scene, cpi);
  std::vector<PointTarget> out;
  for (std::size_t q = 0; q < d.size(); ++q) {
    const auto& s = scene.scatterers[q];
    out.push_back({s.delay, s.doppler, s.arrival_angle, d[q]});
  }
  return out;
}

/// Y[n, m, p] = sum_q d_q A[n, m] e^{-j 2 pi n df tau_q} e^{j 2 pi m T f_Dq} e^{j pi sin(psi_q) p} + noise.
inline OfdmaCube ofdma_receive_cube(const Scene& scene, const OfdmaConfig& cfg, const CMatrix& grid, Rng& rng,
                                    std::uint64_t cpi = 0) {
  cfg.validate();
  scene.validate();
  require(grid.rows() == static_cast<Eigen::Index>(cfg.subcarriers) &&
              grid.cols() == static_cast<Eigen::Index>(cfg.symbols),
          ErrorCode::InvalidArgument, "symbol grid does not match config");
  const auto nc = cfg.subcarriers, ns = cfg.symbols, nr = cfg.geometry.n_rx;
  OfdmaCube cube;
  cube.data = Tensor3(nc, ns, nr);
  const double tsym = cfg.symbol_duration();
  for (const auto& t : realized_targets(scene, cpi)) {
    if (t.delay / cfg.sample_period() > static_cast<double>(cfg.cp_length) + 1e-9) cube.isi_warning = true;
    std::vector<cd> rng_phase(nc), dop_phase(ns), ang_phase(nr);
    for (std::size_t n = 0; n < nc; ++n)
      rng_phase[n] = std::polar(1.0, -kTwoPi * static_cast<double>(n) * cfg.spacing_hz * t.delay);
    for (std::size_t m = 0; m < ns; ++m)
      dop_phase[m] = std::polar(1.0, kTwoPi * static_cast<double>(m) * tsym * t.doppler);
    for (std::size_t p = 0; p < nr; ++p)
      ang_phase[p] = std::polar(1.0, kPi * std::sin(t.angle) * static_cast<double>(p));
    for (std::size_t n = 0; n < nc; ++n)
      for (std::size_t m = 0; m < ns; ++m) {
        const cd v = t.gain * grid(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) * rng_phase[n] * dop_phase[m];
        for (std::size_t p = 0; p < nr; ++p) cube.data(n, m, p) += v * ang_phase[p];
      }
  }
  add_noise(cube.data.data(), scene.noise_variance, rng);
  return cube;
}

enum class SliceDomain { Subcarrier, Time };

/// N_c x N_r slice at symbol m. The time-domain view applies the N_c-point
/// IFFT matrix F to every column.
inline CMatrix slow_time_slice(const OfdmaCube& cube, std::size_t m, SliceDomain domain = SliceDomain::Subcarrier) {
  require(m < cube.symbols(), ErrorCode::InvalidArgument, "symbol index out of range");
  const auto nc = cube.subcarriers(), nr = cube.antennas();
  CMatrix y(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nr));
  std::vector<cd> col(nc);
  for (std::size_t p = 0; p < nr; ++p) {
    for (std::size_t n = 0; n < nc; ++n) col[n] = cube.data(n, m, p);
    if (domain == SliceDomain::Time) fft::inverse(col);
    for (std::size_t n = 0; n < nc; ++n) y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p)) = col[n];
  }
  return y;
}

/// N_s x N_r slice at subcarrier n.
inline CMatrix subcarrier_slice(const OfdmaCube& cube, std::size_t n) {
  require(n < cube.subcarriers(), ErrorCode::InvalidArgument, "subcarrier index out of range");
  CMatrix z(static_cast<Eigen::Index>(cube.symbols()), static_cast<Eigen::Index>(cube.antennas()));
  for (std::size_t m = 0; m < cube.symbols(); ++m)
    for (std::size_t p = 0; p < cube.antennas(); ++p)
      z(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p)) = cube.data(n, m, p);
  return z;
}

namespace detail {

inline CMatrix angle_matrix(std::span<const PointTarget> targets, std::size_t nr) {
  CMatrix c(static_cast<Eigen::Index>(targets.size()), static_cast<Eigen::Index>(nr));
  for (std::size_t q = 0; q < targets.size(); ++q)
    for (std::size_t p = 0; p < nr; ++p)
      c(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) =
          std::polar(1.0, kPi * std::sin(targets[q].angle) * static_cast<double>(p));
  return c;
}

inline CVector gain_vector(std::span<const PointTarget> targets) {
  CVector d(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t q = 0; q < targets.size(); ++q) d(static_cast<Eigen::Index>(q)) = targets[q].gain;
  return d;
}

} // namespace detail

/// IFFT matrix F = [e^{j 2 pi n l / N}], rows l, columns n.
inline CMatrix ifft_matrix(std::size_t n) {
  CMatrix f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k < n; ++k)
      f(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) =
          std::polar(1.0, kTwoPi * static_cast<double>((k * l) % n) / static_cast<double>(n));
  return f;
}

/// Factored slow-time slice Diag(a_m) Xi(-df tau) Diag(d) C, left-multiplied by F
/// for the time-domain view.
inline CMatrix factored_slow_time_slice(const OfdmaConfig& cfg, const CMatrix& grid,
                                        std::span<const PointTarget> targets, std::size_t m,
                                        SliceDomain domain = SliceDomain::Subcarrier) {
  const auto nc = cfg.subcarriers, nr = cfg.geometry.n_rx, q = targets.size();
  CMatrix xi(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(q));
  for (std::size_t n = 0; n < nc; ++n)
    for (std::size_t j = 0; j < q; ++j)
      xi(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) =
          std::polar(1.0, -kTwoPi * static_cast<double>(n) * cfg.spacing_hz * targets[j].delay);
  const CVector a = grid.col(static_cast<Eigen::Index>(m));
  CMatrix y = a.asDiagonal() * xi * detail::gain_vector(targets).asDiagonal() * detail::angle_matrix(targets, nr);
  if (domain == SliceDomain::Time) y = ifft_matrix(nc) * y;
  return y;
}

/// Factored subcarrier slice Diag(a_n) Xi(f_D T) Diag(d) C.
inline CMatrix factored_subcarrier_slice(const OfdmaConfig& cfg, const CMatrix& grid,
                                         std::span<const PointTarget> targets, std::size_t n) {
  const auto ns = cfg.symbols, nr = cfg.geometry.n_rx, q = targets.size();
  CMatrix xi(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(q));
  for (std::size_t m = 0; m < ns; ++m)
    for (std::size_t j = 0; j < q; ++j)
      xi(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) =
          std::polar(1.0, kTwoPi * static_cast<double>(m) * cfg.symbol_duration() * targets[j].doppler);
  const CVector a = grid.row(static_cast<Eigen::Index>(n)).transpose();
  return a.asDiagonal() * xi * detail::gain_vector(targets).asDiagonal() * detail::angle_matrix(targets, nr);
}

/// Oversampled single-antenna waveform (all symbols, optional CP) for AF
/// analysis; sample period is 1 / (N_c df oversample).
inline std::vector<cd> ofdma_af_waveform(const CMatrix& grid, std::size_t cp_length, std::size_t oversample) {
  require(oversample >= 1, ErrorCode::InvalidArgument, "oversample must be >= 1");
  const auto nc = static_cast<std::size_t>(grid.rows());
  const auto n = nc * oversample, cp = cp_length * oversample;
  std::vector<cd> out;
  std::vector<cd> buf(n);
  for (Eigen::Index m = 0; m < grid.cols(); ++m) {
    std::fill(buf.begin(), buf.end(), cd{0.0, 0.0});
    for (std::size_t k = 0; k < nc; ++k) buf[k] = grid(static_cast<Eigen::Index>(k), m);
    fft::inverse(buf);
    for (std::size_t t = 0; t < cp; ++t) out.push_back(buf[n - cp + t]);
    out.insert(out.end(), buf.begin(), buf.end());
  }
  return out;
}

} // namespace jrc
