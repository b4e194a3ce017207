// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "jrc/fft.hpp"
#include "jrc/ofdma.hpp"
#include "jrc/pmcw.hpp"
#include "jrc/sigcore.hpp"
#include "jrc/types.hpp"

namespace jrc {

struct EstimatorConfig {
  std::size_t range_pad = 4;     // OFDMA range IFFT zero padding; PMCW range stays on the chip grid
  std::size_t doppler_pad = 4;
  std::size_t angle_pad = 4;
  double threshold_db = -13.0;   // relative to the strongest cell
  std::size_t max_targets = 4;
  double min_magnitude = 0.0;    // absolute floor on the map magnitude
  std::size_t refine_factor = 4; // extra zero padding used by residual_refine

  void validate() const {
    require(range_pad >= 1 && doppler_pad >= 1 && angle_pad >= 1 && refine_factor >= 1,
            ErrorCode::InvalidArgument, "zero-padding factors must be >= 1");
    require(threshold_db < 0.0, ErrorCode::InvalidArgument, "detection threshold must be below 0 dB");
    require(max_targets >= 1, ErrorCode::InvalidArgument, "max_targets must be >= 1");
  }
};

struct TargetEstimate {
  double delay = 0.0;   // s
  double range = 0.0;   // m, mono-static scale c tau / 2
  double doppler = 0.0; // Hz
  double angle = 0.0;   // rad
  cd amplitude{0.0, 0.0};
  // Fractional positions in native (unpadded) bins of the processed data.
  double range_bin = 0.0;
  double doppler_bin = 0.0;
  double angle_bin = 0.0;
  double magnitude = 0.0;
};

/// Magnitude map indexed (range, Doppler, angle); every axis is circular.
struct Spectrum3 {
  std::array<std::size_t, 3> dims{0, 0, 0};
  std::vector<double> mag;

  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return mag[(i * dims[1] + j) * dims[2] + k]; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return mag[(i * dims[1] + j) * dims[2] + k]; }
  std::size_t flat(const std::array<std::size_t, 3>& idx) const { return (idx[0] * dims[1] + idx[1]) * dims[2] + idx[2]; }
};

struct GridPeak {
  std::array<std::size_t, 3> index{0, 0, 0};
  std::array<double, 3> offset{0.0, 0.0, 0.0}; // quadratic-interpolated fractional offsets
  double magnitude = 0.0;
};

namespace detail {

inline std::size_t wrap_index(std::ptrdiff_t i, std::size_t n) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((i % nn) + nn) % nn);
}

// Signed bin in [-n/2, n/2).
inline double signed_bin(double b, std::size_t n) {
  const double nn = static_cast<double>(n);
  double w = std::fmod(b, nn);
  if (w < 0) w += nn;
  if (w >= nn / 2.0) w -= nn;
  return w;
}

inline double quadratic_offset(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

inline std::array<double, 3> interpolate(const Spectrum3& s, const std::array<std::size_t, 3>& idx) {
  std::array<double, 3> off{0.0, 0.0, 0.0};
  for (std::size_t d = 0; d < 3; ++d) {
    if (s.dims[d] < 3) continue;
    auto lo = idx, hi = idx;
    lo[d] = wrap_index(static_cast<std::ptrdiff_t>(idx[d]) - 1, s.dims[d]);
    hi[d] = wrap_index(static_cast<std::ptrdiff_t>(idx[d]) + 1, s.dims[d]);
    off[d] = quadratic_offset(s.mag[s.flat(lo)], s.mag[s.flat(idx)], s.mag[s.flat(hi)]);
  }
  return off;
}

// Local maximum over the 26-neighbourhood; equal neighbours with a lower flat
// index win, so plateaus resolve to their lowest index.
inline bool is_local_max(const Spectrum3& s, const std::array<std::size_t, 3>& idx) {
  const std::size_t self = s.flat(idx);
  const double v = s.mag[self];
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        const std::array<std::size_t, 3> nb{wrap_index(static_cast<std::ptrdiff_t>(idx[0]) + di, s.dims[0]),
                                            wrap_index(static_cast<std::ptrdiff_t>(idx[1]) + dj, s.dims[1]),
                                            wrap_index(static_cast<std::ptrdiff_t>(idx[2]) + dk, s.dims[2])};
        const std::size_t f = s.flat(nb);
        if (f == self) continue;
        const double w = s.mag[f];
        if (w > v || (w == v && f < self)) return false;
      }
  return true;
}

} // namespace detail

/// Largest local maxima above the relative threshold, strongest first (ties:
/// lowest flat index). Only range indices below `range_limit` are searched.
inline std::vector<GridPeak> detect_peaks(const Spectrum3& s, double threshold_db, std::size_t max_targets,
                                          double min_magnitude = 0.0,
                                          std::size_t range_limit = std::numeric_limits<std::size_t>::max()) {
  std::vector<GridPeak> out;
  const std::size_t r_end = std::min(range_limit, s.dims[0]);
  double top = 0.0;
  for (std::size_t i = 0; i < r_end; ++i)
    for (std::size_t j = 0; j < s.dims[1]; ++j)
      for (std::size_t k = 0; k < s.dims[2]; ++k) top = std::max(top, s(i, j, k));
  if (!(top > 0.0) || top < min_magnitude) return out;
  const double floor_mag = std::max(top * std::pow(10.0, threshold_db / 20.0), min_magnitude);
  for (std::size_t i = 0; i < r_end; ++i)
    for (std::size_t j = 0; j < s.dims[1]; ++j)
      for (std::size_t k = 0; k < s.dims[2]; ++k) {
        const double v = s(i, j, k);
        if (v < floor_mag || v <= 0.0) continue;
        const std::array<std::size_t, 3> idx{i, j, k};
        if (!detail::is_local_max(s, idx)) continue;
        out.push_back({idx, detail::interpolate(s, idx), v});
      }
  std::stable_sort(out.begin(), out.end(), [](const GridPeak& a, const GridPeak& b) { return a.magnitude > b.magnitude; });
  if (out.size() > max_targets) out.resize(max_targets);
  return out;
}

/// One axis of a local matched-filter search. Fourier axes evaluate the
/// kernel e^{sign j 2 pi i phi} at phi = center + k step for |k| <= half;
/// an index axis (sign 0) selects integer indices center + k, wrapped.
struct ZoomAxis {
  int sign = 1;
  double center = 0.0;
  double step = 0.0;
  std::size_t half = 0;
};

struct ZoomPeak {
  std::array<double, 3> value{0.0, 0.0, 0.0}; // phi (Fourier axes) or index (index axes)
  double magnitude = 0.0;
};

/// Separable evaluation of |sum_{i,j,p} z(i,j,p) k0(i) k1(j) k2(p)| on the
/// local candidate grid, strongest candidate with quadratic interpolation on
/// interior points.
inline ZoomPeak zoom_peak(const Tensor3& z, const std::array<ZoomAxis, 3>& axes) {
  std::array<std::vector<double>, 3> cand;
  std::array<CMatrix, 3> kern;
  for (std::size_t d = 0; d < 3; ++d) {
    const auto& a = axes[d];
    const auto n = z.dim(d);
    for (std::ptrdiff_t k = -static_cast<std::ptrdiff_t>(a.half); k <= static_cast<std::ptrdiff_t>(a.half); ++k)
      cand[d].push_back(a.sign == 0 ? static_cast<double>(detail::wrap_index(static_cast<std::ptrdiff_t>(std::lround(a.center)) + k, n))
                                    : a.center + static_cast<double>(k) * a.step);
    kern[d] = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cand[d].size()));
    for (std::size_t c = 0; c < cand[d].size(); ++c) {
      if (a.sign == 0) {
        kern[d](static_cast<Eigen::Index>(cand[d][c]), static_cast<Eigen::Index>(c)) = 1.0;
        continue;
      }
      for (std::size_t i = 0; i < n; ++i)
        kern[d](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
            std::polar(1.0, static_cast<double>(a.sign) * kTwoPi * static_cast<double>(i) * cand[d][c]);
    }
  }
  const auto d0 = z.dim(0), d1 = z.dim(1), d2 = z.dim(2);
  const auto n0 = cand[0].size(), n1 = cand[1].size(), n2 = cand[2].size();
  // Contract the antenna axis, then slow time, then the range axis.
  std::vector<cd> a(d0 * d1 * n2, cd{0.0, 0.0});
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = 0; j < d1; ++j)
      for (std::size_t p = 0; p < d2; ++p) {
        const cd v = z(i, j, p);
        if (v == cd{0.0, 0.0}) continue;
        for (std::size_t c = 0; c < n2; ++c) a[(i * d1 + j) * n2 + c] += v * kern[2](static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c));
      }
  std::vector<cd> b(d0 * n1 * n2, cd{0.0, 0.0});
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = 0; j < d1; ++j)
      for (std::size_t bb = 0; bb < n1; ++bb) {
        const cd k1 = kern[1](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(bb));
        for (std::size_t c = 0; c < n2; ++c) b[(i * n1 + bb) * n2 + c] += a[(i * d1 + j) * n2 + c] * k1;
      }
  Spectrum3 s;
  s.dims = {n0, n1, n2};
  s.mag.assign(n0 * n1 * n2, 0.0);
  std::vector<cd> acc(n1 * n2);
  for (std::size_t aa = 0; aa < n0; ++aa) {
    std::fill(acc.begin(), acc.end(), cd{0.0, 0.0});
    for (std::size_t i = 0; i < d0; ++i) {
      const cd k0 = kern[0](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(aa));
      if (k0 == cd{0.0, 0.0}) continue;
      for (std::size_t t = 0; t < n1 * n2; ++t) acc[t] += b[i * n1 * n2 + t] * k0;
    }
    for (std::size_t t = 0; t < n1 * n2; ++t) s.mag[aa * n1 * n2 + t] = std::abs(acc[t]);
  }
  std::size_t best = 0;
  for (std::size_t f = 1; f < s.mag.size(); ++f)
    if (s.mag[f] > s.mag[best]) best = f;
  const std::array<std::size_t, 3> idx{best / (n1 * n2), (best / n2) % n1, best % n2};
  ZoomPeak out;
  out.magnitude = s.mag[best];
  for (std::size_t d = 0; d < 3; ++d) {
    out.value[d] = cand[d][idx[d]];
    if (axes[d].sign == 0 || idx[d] == 0 || idx[d] + 1 >= cand[d].size()) continue;
    auto lo = idx, hi = idx;
    --lo[d];
    ++hi[d];
    out.value[d] += axes[d].step * detail::quadratic_offset(s.mag[s.flat(lo)], s.mag[best], s.mag[s.flat(hi)]);
  }
  return out;
}

/// Least-squares complex amplitudes for fixed model columns.
inline std::vector<cd> least_squares_amplitudes(const std::vector<std::vector<cd>>& columns, std::span<const cd> y) {
  if (columns.empty()) return {};
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto q = static_cast<Eigen::Index>(columns.size());
  CMatrix a(n, q);
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  const CVector yy = Eigen::Map<const CVector>(y.data(), n);
  const CVector d = a.completeOrthogonalDecomposition().solve(yy);
  return std::vector<cd>(d.data(), d.data() + q);
}

namespace detail {

// Drops estimates whose fitted amplitude is more than |threshold_db| below the
// strongest one. Returns true when anything was removed.
inline bool prune_weak(std::vector<TargetEstimate>& targets, double threshold_db) {
  double peak = 0.0;
  for (const auto& t : targets) peak = std::max(peak, std::abs(t.amplitude));
  const double floor = peak * std::pow(10.0, threshold_db / 20.0);
  const auto before = targets.size();
  std::erase_if(targets, [&](const TargetEstimate& t) { return std::abs(t.amplitude) < floor; });
  return targets.size() != before;
}

} // namespace detail

// ---------------------------------------------------------------------------
// PMCW-JRC receive processing

namespace detail {

inline void check_contiguous(std::span<const std::size_t> frames) {
  require(!frames.empty(), ErrorCode::NonIdentifiable, "no frames with known symbols to process");
  for (std::size_t i = 1; i < frames.size(); ++i)
    require(frames[i] == frames[0] + i, ErrorCode::InvalidArgument, "processed frames must be contiguous");
}

inline std::vector<std::size_t> iota_frames(std::size_t first, std::size_t count) {
  std::vector<std::size_t> f(count);
  for (std::size_t i = 0; i < count; ++i) f[i] = first + i;
  return f;
}

inline double angle_from_spatial_frequency(double cycles_per_element, double spacing_over_lambda) {
  const double u = std::clamp(cycles_per_element / spacing_over_lambda, -1.0, 1.0);
  return std::asin(u);
}

} // namespace detail

/// Per-frame circular code correlation with the known symbol divided out,
/// indexed (chip shift k, frame, antenna).
inline Tensor3 pmcw_strip_correlate(const PmcwCube& cube, const CodeSequence& code, std::span<const cd> symbols,
                                    std::span<const std::size_t> frames) {
  detail::check_contiguous(frames);
  const auto L = cube.chips(), nr = cube.antennas(), nf = frames.size();
  require(code.length() == L, ErrorCode::InvalidArgument, "code length does not match the cube");
  const auto chips = code.chips();
  Tensor3 corr(L, nf, nr);
  std::vector<cd> y(L);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto m = frames[f];
    const cd strip = std::conj(symbols[m]) / std::max(std::norm(symbols[m]), 1e-300);
    for (std::size_t p = 0; p < nr; ++p) {
      for (std::size_t l = 0; l < L; ++l) y[l] = cube.data(m, l, p);
      const auto r = fft::circular_xcorr(y, chips);
      for (std::size_t k = 0; k < L; ++k) corr(k, f, p) = r[k] * strip;
    }
  }
  return corr;
}

/// Range (chip shift) x Doppler x angle magnitude map from the given frames:
/// code correlation over fast time, padded IFFT over slow time and antennas.
inline Spectrum3 pmcw_map(const PmcwCube& cube, [[maybe_unused]] const PmcwConfig& cfg, const CodeSequence& code,
                          std::span<const cd> symbols, std::span<const std::size_t> frames, std::size_t doppler_pad,
                          std::size_t angle_pad) {
  const auto corr = pmcw_strip_correlate(cube, code, symbols, frames);
  const auto L = corr.dim(0), nf = corr.dim(1), nr = corr.dim(2);
  const auto nd = nf * doppler_pad, na = nr * angle_pad;
  Spectrum3 s;
  s.dims = {L, nd, na};
  s.mag.assign(L * nd * na, 0.0);
  std::vector<cd> slow(nf), dop(L * nd * nr), ang(na);
  for (std::size_t k = 0; k < L; ++k)
    for (std::size_t p = 0; p < nr; ++p) {
      for (std::size_t f = 0; f < nf; ++f) slow[f] = corr(k, f, p);
      const auto spec = fft::padded(slow, nd, true);
      for (std::size_t j = 0; j < nd; ++j) dop[(k * nd + j) * nr + p] = spec[j];
    }
  for (std::size_t k = 0; k < L; ++k)
    for (std::size_t j = 0; j < nd; ++j) {
      std::fill(ang.begin(), ang.end(), cd{0.0, 0.0});
      for (std::size_t p = 0; p < nr; ++p) ang[p] = dop[(k * nd + j) * nr + p];
      fft::inverse(ang);
      for (std::size_t a = 0; a < na; ++a) s(k, j, a) = std::abs(ang[a]);
    }
  return s;
}

/// Noise-free PMCW response of one estimated target over `frames`, flattened
/// in (frame, chip, antenna) order, excluding the amplitude.
inline std::vector<cd> pmcw_model_column(const PmcwConfig& cfg, const CodeSequence& code, std::span<const cd> symbols,
                                         std::span<const std::size_t> frames, const TargetEstimate& t,
                                         bool include_symbols = true) {
  const auto L = cfg.code_length, nr = cfg.geometry.n_rx;
  const auto chips = code.chips();
  const auto k = static_cast<std::size_t>(std::lround(t.delay / cfg.chip_duration)) % L;
  const auto shifted = cyclic_shift(chips, k);
  const double u = std::sin(t.angle);
  std::vector<cd> col;
  col.reserve(frames.size() * L * nr);
  for (const auto m : frames) {
    const cd a = include_symbols ? symbols[m] : cd{1.0, 0.0};
    const cd slow = std::polar(1.0, -kTwoPi * t.doppler * static_cast<double>(m) * cfg.block_duration());
    for (std::size_t l = 0; l < L; ++l) {
      const cd fast = cfg.intra_block_doppler
                          ? std::polar(1.0, -kTwoPi * t.doppler * static_cast<double>(l) * cfg.chip_duration)
                          : cd{1.0, 0.0};
      for (std::size_t p = 0; p < nr; ++p) {
        const cd c = std::polar(1.0, -kTwoPi * cfg.geometry.spacing_over_lambda * u * static_cast<double>(p));
        col.push_back(a * slow * fast * c * shifted[l]);
      }
    }
  }
  return col;
}

inline std::vector<cd> pmcw_observation(const PmcwCube& cube, std::span<const std::size_t> frames) {
  std::vector<cd> y;
  y.reserve(frames.size() * cube.chips() * cube.antennas());
  for (const auto m : frames)
    for (std::size_t l = 0; l < cube.chips(); ++l)
      for (std::size_t p = 0; p < cube.antennas(); ++p) y.push_back(cube.data(m, l, p));
  return y;
}

namespace detail {

inline TargetEstimate pmcw_estimate_from_peak(const GridPeak& pk, const Spectrum3& s, const PmcwConfig& cfg,
                                              std::size_t n_frames, std::size_t doppler_pad, std::size_t angle_pad) {
  TargetEstimate t;
  const double nd = static_cast<double>(s.dims[1]), na = static_cast<double>(s.dims[2]);
  t.range_bin = static_cast<double>(pk.index[0]);
  t.delay = t.range_bin * cfg.chip_duration;
  t.range = 0.5 * kSpeedOfLight * t.delay;
  const double dbin = signed_bin(static_cast<double>(pk.index[1]) + pk.offset[1], s.dims[1]);
  t.doppler = dbin / (nd * cfg.block_duration());
  t.doppler_bin = dbin / static_cast<double>(doppler_pad);
  const double abin = signed_bin(static_cast<double>(pk.index[2]) + pk.offset[2], s.dims[2]);
  t.angle = angle_from_spatial_frequency(abin / na, cfg.geometry.spacing_over_lambda);
  t.angle_bin = abin / static_cast<double>(angle_pad);
  t.magnitude = pk.magnitude;
  (void)n_frames;
  return t;
}

inline void pmcw_fit_amplitudes(const PmcwCube& cube, const PmcwConfig& cfg, const CodeSequence& code,
                                std::span<const cd> symbols, std::span<const std::size_t> frames,
                                std::vector<TargetEstimate>& targets, double threshold_db) {
  const auto y = pmcw_observation(cube, frames);
  do {
    std::vector<std::vector<cd>> cols;
    for (const auto& t : targets) cols.push_back(pmcw_model_column(cfg, code, symbols, frames, t));
    const auto d = least_squares_amplitudes(cols, y);
    for (std::size_t q = 0; q < targets.size(); ++q) targets[q].amplitude = d[q];
  } while (prune_weak(targets, threshold_db));
}

} // namespace detail

struct RangeDopplerMap {
  Spectrum3 map;
  std::vector<TargetEstimate> targets;
};

/// Coarse range/Doppler/angle estimates from the radar-only frames.
inline RangeDopplerMap pmcw_range_doppler(const PmcwCube& cube, const PmcwConfig& cfg, const CodeSequence& code,
                                          std::span<const cd> symbols, const EstimatorConfig& est) {
  est.validate();
  const auto sched = pmcw_schedule(cfg);
  require(sched.radar_frames > 0, ErrorCode::NonIdentifiable,
          "no radar-only frames (mu = 0): Doppler and symbols are coupled");
  require(symbols.size() == cfg.frames, ErrorCode::InvalidArgument, "symbol count does not match frames");
  const auto frames = detail::iota_frames(0, sched.radar_frames);
  RangeDopplerMap out;
  out.map = pmcw_map(cube, cfg, code, symbols, frames, est.doppler_pad, est.angle_pad);
  for (const auto& pk : detect_peaks(out.map, est.threshold_db, est.max_targets, est.min_magnitude))
    out.targets.push_back(detail::pmcw_estimate_from_peak(pk, out.map, cfg, frames.size(), est.doppler_pad, est.angle_pad));
  detail::pmcw_fit_amplitudes(cube, cfg, code, symbols, frames, out.targets, est.threshold_db);
  return out;
}

/// Estimates from every frame when all symbols are known (perfect recovery).
inline RangeDopplerMap pmcw_full_knowledge(const PmcwCube& cube, const PmcwConfig& cfg, const CodeSequence& code,
                                           std::span<const cd> symbols, const EstimatorConfig& est) {
  est.validate();
  require(symbols.size() == cfg.frames, ErrorCode::InvalidArgument, "symbol count does not match frames");
  const auto frames = detail::iota_frames(0, cfg.frames);
  RangeDopplerMap out;
  out.map = pmcw_map(cube, cfg, code, symbols, frames, est.doppler_pad, est.angle_pad);
  for (const auto& pk : detect_peaks(out.map, est.threshold_db, est.max_targets, est.min_magnitude))
    out.targets.push_back(detail::pmcw_estimate_from_peak(pk, out.map, cfg, frames.size(), est.doppler_pad, est.angle_pad));
  detail::pmcw_fit_amplitudes(cube, cfg, code, symbols, frames, out.targets, est.threshold_db);
  return out;
}

struct PmcwDecodeResult {
  std::vector<std::uint8_t> bits;
  std::vector<cd> soft;  // per-frame symbol estimates from the reference frame on
  DpskStream symbols;    // known radar frames plus per-frame hard decisions
};

/// Reconstructs the channel from the estimates, projects every frame from the
/// DPSK reference onwards onto it, and differentially decodes the payload.
inline PmcwDecodeResult pmcw_decode_symbols(const PmcwCube& cube, const PmcwConfig& cfg, const CodeSequence& code,
                                            const std::vector<TargetEstimate>& targets) {
  require(!targets.empty(), ErrorCode::DecodingImpossible, "no targets detected and no line-of-sight path");
  const auto sched = pmcw_schedule(cfg);
  const std::size_t ref = std::max<std::size_t>(sched.radar_frames, 1) - 1;
  PmcwDecodeResult out;
  const std::vector<cd> ones(cfg.frames, cd{1.0, 0.0});
  for (std::size_t m = ref; m < cfg.frames; ++m) {
    const std::size_t frame[1] = {m};
    std::vector<cd> h(cube.chips() * cube.antennas(), cd{0.0, 0.0});
    for (const auto& t : targets) {
      const auto col = pmcw_model_column(cfg, code, ones, frame, t, false);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += t.amplitude * col[i];
    }
    const auto y = pmcw_observation(cube, frame);
    cd num{0.0, 0.0};
    double den = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      num += std::conj(h[i]) * y[i];
      den += std::norm(h[i]);
    }
    require(den > 0.0, ErrorCode::DecodingImpossible, "reconstructed channel has zero energy");
    out.soft.push_back(num / den);
  }
  out.bits = dpsk_decode(out.soft, cfg.dpsk_order);
  out.symbols = pmcw_frame_symbols(cfg, out.bits);
  for (std::size_t m = ref + 1; m < cfg.frames; ++m) out.symbols.symbols[m] = dpsk_slice(out.soft[m - ref], cfg.dpsk_order);
  return out;
}

/// Re-estimates targets over all frames with the decoded symbols treated as
/// known. Each coarse estimate seeds a local search spanning one coarse bin
/// with steps `refine_factor` times finer than the coarse grid; the chip
/// shift may move by one.
inline std::vector<TargetEstimate> pmcw_residual_refine(const PmcwCube& cube, const PmcwConfig& cfg,
                                                        const CodeSequence& code, std::span<const cd> symbols,
                                                        const std::vector<TargetEstimate>& coarse,
                                                        const EstimatorConfig& est) {
  est.validate();
  require(symbols.size() == cfg.frames, ErrorCode::InvalidArgument, "symbol count does not match frames");
  const auto frames = detail::iota_frames(0, cfg.frames);
  const auto z = pmcw_strip_correlate(cube, code, symbols, frames);
  const double m = static_cast<double>(cfg.frames), nr = static_cast<double>(cfg.geometry.n_rx);
  const double k = static_cast<double>(std::max<std::size_t>(pmcw_schedule(cfg).radar_frames, 1));
  const double dfine = static_cast<double>(est.doppler_pad * est.refine_factor);
  const double afine = static_cast<double>(est.angle_pad * est.refine_factor);
  const double sp = cfg.geometry.spacing_over_lambda;
  std::vector<TargetEstimate> out;
  for (const auto& c : coarse) {
    const std::array<ZoomAxis, 3> axes{
        ZoomAxis{0, c.range_bin, 1.0, 1},
        ZoomAxis{1, c.doppler * cfg.block_duration(), 1.0 / (m * dfine), static_cast<std::size_t>(std::ceil(m * dfine / k))},
        ZoomAxis{1, sp * std::sin(c.angle), 1.0 / (nr * afine), static_cast<std::size_t>(afine)}};
    const auto pk = zoom_peak(z, axes);
    TargetEstimate t;
    t.range_bin = pk.value[0];
    t.delay = t.range_bin * cfg.chip_duration;
    t.range = 0.5 * kSpeedOfLight * t.delay;
    const double fd = detail::signed_bin(pk.value[1], 1);
    t.doppler = fd / cfg.block_duration();
    t.doppler_bin = fd * m;
    const double phi = detail::signed_bin(pk.value[2], 1);
    t.angle = detail::angle_from_spatial_frequency(phi, sp);
    t.angle_bin = phi * nr;
    t.magnitude = pk.magnitude;
    out.push_back(t);
  }
  detail::pmcw_fit_amplitudes(cube, cfg, code, symbols, frames, out, est.threshold_db);
  return out;
}

// ---------------------------------------------------------------------------
// OFDMA-JRC receive processing

/// Receive cube with the known symbols divided out on `rows`; other rows are zero.
inline Tensor3 ofdma_strip(const OfdmaCube& cube, const CMatrix& symbols, std::span<const std::size_t> rows) {
  const auto ns = cube.symbols(), nr = cube.antennas();
  Tensor3 z(cube.subcarriers(), ns, nr);
  for (const auto n : rows)
    for (std::size_t m = 0; m < ns; ++m) {
      const cd a = symbols(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      const cd inv = std::conj(a) / std::max(std::norm(a), 1e-300);
      for (std::size_t p = 0; p < nr; ++p) z(n, m, p) = cube.data(n, m, p) * inv;
    }
  return z;
}

/// Range x Doppler x angle magnitude map from the given subcarrier rows:
/// padded IFFT over subcarriers, padded FFT over symbols and over antennas.
inline Spectrum3 ofdma_map(const OfdmaCube& cube, const CMatrix& symbols, std::span<const std::size_t> rows,
                           std::size_t range_pad, std::size_t doppler_pad, std::size_t angle_pad) {
  const auto z = ofdma_strip(cube, symbols, rows);
  const auto nc = z.dim(0), ns = z.dim(1), nr = z.dim(2);
  const auto nrng = nc * range_pad, nd = ns * doppler_pad, na = nr * angle_pad;
  std::vector<cd> rp(nrng * ns * nr); // [(i * ns + m) * nr + p]
  std::vector<cd> col(nrng);
  for (std::size_t m = 0; m < ns; ++m)
    for (std::size_t p = 0; p < nr; ++p) {
      std::fill(col.begin(), col.end(), cd{0.0, 0.0});
      for (std::size_t n = 0; n < nc; ++n) col[n] = z(n, m, p);
      fft::inverse(col);
      for (std::size_t i = 0; i < nrng; ++i) rp[(i * ns + m) * nr + p] = col[i];
    }
  std::vector<cd> rd(nrng * nd * nr);
  std::vector<cd> slow(ns);
  for (std::size_t i = 0; i < nrng; ++i)
    for (std::size_t p = 0; p < nr; ++p) {
      for (std::size_t m = 0; m < ns; ++m) slow[m] = rp[(i * ns + m) * nr + p];
      const auto spec = fft::padded(slow, nd, false);
      for (std::size_t j = 0; j < nd; ++j) rd[(i * nd + j) * nr + p] = spec[j];
    }
  Spectrum3 s;
  s.dims = {nrng, nd, na};
  s.mag.assign(nrng * nd * na, 0.0);
  std::vector<cd> ang(na);
  for (std::size_t i = 0; i < nrng; ++i)
    for (std::size_t j = 0; j < nd; ++j) {
      std::fill(ang.begin(), ang.end(), cd{0.0, 0.0});
      for (std::size_t p = 0; p < nr; ++p) ang[p] = rd[(i * nd + j) * nr + p];
      fft::forward(ang);
      for (std::size_t a = 0; a < na; ++a) s(i, j, a) = std::abs(ang[a]);
    }
  return s;
}

/// Largest unaliased delay (in native range bins) for a row set: rows spaced
/// uniformly by g over the band alias every N_c / g bins.
inline std::size_t ofdma_unambiguous_bins(std::span<const std::size_t> rows, std::size_t nc) {
  if (rows.size() < 2) return nc;
  const std::size_t g = rows[1] - rows[0];
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i] - rows[i - 1] != g) return nc;
  if (g * rows.size() != nc) return nc;
  return nc / g;
}

inline std::vector<cd> ofdma_model_column(const OfdmaConfig& cfg, const CMatrix& symbols,
                                          std::span<const std::size_t> rows, const TargetEstimate& t,
                                          bool include_symbols = true) {
  const auto ns = cfg.symbols, nr = cfg.geometry.n_rx;
  const double u = std::sin(t.angle);
  std::vector<cd> col;
  col.reserve(rows.size() * ns * nr);
  for (const auto n : rows) {
    const cd r = std::polar(1.0, -kTwoPi * static_cast<double>(n) * cfg.spacing_hz * t.delay);
    for (std::size_t m = 0; m < ns; ++m) {
      const cd a = include_symbols ? symbols(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) : cd{1.0, 0.0};
      const cd d = std::polar(1.0, kTwoPi * static_cast<double>(m) * cfg.symbol_duration() * t.doppler);
      for (std::size_t p = 0; p < nr; ++p) col.push_back(a * r * d * std::polar(1.0, kPi * u * static_cast<double>(p)));
    }
  }
  return col;
}

inline std::vector<cd> ofdma_observation(const OfdmaCube& cube, std::span<const std::size_t> rows) {
  std::vector<cd> y;
  y.reserve(rows.size() * cube.symbols() * cube.antennas());
  for (const auto n : rows)
    for (std::size_t m = 0; m < cube.symbols(); ++m)
      for (std::size_t p = 0; p < cube.antennas(); ++p) y.push_back(cube.data(n, m, p));
  return y;
}

namespace detail {

inline TargetEstimate ofdma_estimate_from_peak(const GridPeak& pk, const Spectrum3& s, const OfdmaConfig& cfg,
                                               std::size_t range_pad, std::size_t doppler_pad, std::size_t angle_pad) {
  TargetEstimate t;
  const double nrng = static_cast<double>(s.dims[0]), nd = static_cast<double>(s.dims[1]),
               na = static_cast<double>(s.dims[2]);
  const double rbin = static_cast<double>(pk.index[0]) + pk.offset[0];
  t.delay = rbin / (nrng * cfg.spacing_hz);
  t.range = 0.5 * kSpeedOfLight * t.delay;
  t.range_bin = rbin / static_cast<double>(range_pad);
  const double dbin = signed_bin(static_cast<double>(pk.index[1]) + pk.offset[1], s.dims[1]);
  t.doppler = dbin / (nd * cfg.symbol_duration());
  t.doppler_bin = dbin / static_cast<double>(doppler_pad);
  const double abin = signed_bin(static_cast<double>(pk.index[2]) + pk.offset[2], s.dims[2]);
  t.angle = angle_from_spatial_frequency(abin / na, 0.5);
  t.angle_bin = abin / static_cast<double>(angle_pad);
  t.magnitude = pk.magnitude;
  return t;
}

inline void ofdma_fit_amplitudes(const OfdmaCube& cube, const OfdmaConfig& cfg, const CMatrix& symbols,
                                 std::span<const std::size_t> rows, std::vector<TargetEstimate>& targets,
                                 double threshold_db) {
  const auto y = ofdma_observation(cube, rows);
  do {
    std::vector<std::vector<cd>> cols;
    for (const auto& t : targets) cols.push_back(ofdma_model_column(cfg, symbols, rows, t));
    const auto d = least_squares_amplitudes(cols, y);
    for (std::size_t q = 0; q < targets.size(); ++q) targets[q].amplitude = d[q];
  } while (prune_weak(targets, threshold_db));
}

} // namespace detail

/// Coarse estimates from the radar pilot subcarriers.
inline RangeDopplerMap ofdma_range_doppler_angle(const OfdmaCube& cube, const OfdmaConfig& cfg, const SymbolGrid& grid,
                                                 const EstimatorConfig& est) {
  est.validate();
  require(grid.mask.count > 0, ErrorCode::NonIdentifiable,
          "no radar pilot subcarriers (mu = 0): range and symbols are coupled");
  const auto rows = grid.mask.radar_rows();
  RangeDopplerMap out;
  out.map = ofdma_map(cube, grid.symbols, rows, est.range_pad, est.doppler_pad, est.angle_pad);
  const auto limit = ofdma_unambiguous_bins(rows, cfg.subcarriers) * est.range_pad;
  for (const auto& pk : detect_peaks(out.map, est.threshold_db, est.max_targets, est.min_magnitude, limit))
    out.targets.push_back(detail::ofdma_estimate_from_peak(pk, out.map, cfg, est.range_pad, est.doppler_pad, est.angle_pad));
  detail::ofdma_fit_amplitudes(cube, cfg, grid.symbols, rows, out.targets, est.threshold_db);
  return out;
}

/// Estimates from every subcarrier when all symbols are known.
inline RangeDopplerMap ofdma_full_knowledge(const OfdmaCube& cube, const OfdmaConfig& cfg, const CMatrix& symbols,
                                            const EstimatorConfig& est) {
  est.validate();
  std::vector<std::size_t> rows(cfg.subcarriers);
  for (std::size_t n = 0; n < rows.size(); ++n) rows[n] = n;
  RangeDopplerMap out;
  out.map = ofdma_map(cube, symbols, rows, est.range_pad, est.doppler_pad, est.angle_pad);
  for (const auto& pk : detect_peaks(out.map, est.threshold_db, est.max_targets, est.min_magnitude))
    out.targets.push_back(detail::ofdma_estimate_from_peak(pk, out.map, cfg, est.range_pad, est.doppler_pad, est.angle_pad));
  detail::ofdma_fit_amplitudes(cube, cfg, symbols, rows, out.targets, est.threshold_db);
  return out;
}

struct OfdmaDecodeResult {
  std::vector<std::uint8_t> bits;
  CMatrix soft;     // symbol estimates on communications rows (zero on pilot rows)
  SymbolGrid grid;  // decoded payload; symbols hold per-entry hard decisions
};

/// Per-entry projection onto the reconstructed channel, then differential
/// decoding along slow time on every communications subcarrier.
inline OfdmaDecodeResult ofdma_decode_symbols(const OfdmaCube& cube, const OfdmaConfig& cfg, const SymbolGrid& grid,
                                              const std::vector<TargetEstimate>& targets) {
  require(!targets.empty(), ErrorCode::DecodingImpossible, "no targets detected and no line-of-sight path");
  const auto nc = cfg.subcarriers, ns = cfg.symbols, nr = cfg.geometry.n_rx;
  OfdmaDecodeResult out;
  out.soft = CMatrix::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(ns));
  std::vector<cd> h(nr);
  for (const auto n : grid.mask.comm_rows()) {
    std::vector<cd> row(ns);
    for (std::size_t m = 0; m < ns; ++m) {
      std::fill(h.begin(), h.end(), cd{0.0, 0.0});
      for (const auto& t : targets) {
        const cd base = t.amplitude * std::polar(1.0, -kTwoPi * static_cast<double>(n) * cfg.spacing_hz * t.delay) *
                        std::polar(1.0, kTwoPi * static_cast<double>(m) * cfg.symbol_duration() * t.doppler);
        const double u = std::sin(t.angle);
        for (std::size_t p = 0; p < nr; ++p) h[p] += base * std::polar(1.0, kPi * u * static_cast<double>(p));
      }
      cd num{0.0, 0.0};
      double den = 0.0;
      for (std::size_t p = 0; p < nr; ++p) {
        num += std::conj(h[p]) * cube.data(n, m, p);
        den += std::norm(h[p]);
      }
      require(den > 0.0, ErrorCode::DecodingImpossible, "reconstructed channel has zero energy");
      row[m] = num / den;
      out.soft(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = row[m];
    }
    const auto bits = dpsk_decode(row, cfg.dpsk_order);
    out.bits.insert(out.bits.end(), bits.begin(), bits.end());
  }
  out.grid = make_symbol_grid(cfg, out.bits);
  for (const auto n : grid.mask.comm_rows())
    for (std::size_t m = 1; m < ns; ++m) {
      const auto i = static_cast<Eigen::Index>(n), j = static_cast<Eigen::Index>(m);
      out.grid.symbols(i, j) = dpsk_slice(out.soft(i, j), cfg.dpsk_order);
    }
  return out;
}

/// Re-estimates targets with every subcarrier (decoded symbols treated as
/// known): a local search spanning one native bin around each coarse
/// estimate with steps `refine_factor` times finer than the coarse grid.
inline std::vector<TargetEstimate> ofdma_residual_refine(const OfdmaCube& cube, const OfdmaConfig& cfg,
                                                         const CMatrix& symbols,
                                                         const std::vector<TargetEstimate>& coarse,
                                                         const EstimatorConfig& est) {
  est.validate();
  std::vector<std::size_t> rows(cfg.subcarriers);
  for (std::size_t n = 0; n < rows.size(); ++n) rows[n] = n;
  const auto z = ofdma_strip(cube, symbols, rows);
  const double nc = static_cast<double>(cfg.subcarriers), ns = static_cast<double>(cfg.symbols),
               nr = static_cast<double>(cfg.geometry.n_rx);
  const auto rf = est.range_pad * est.refine_factor, df = est.doppler_pad * est.refine_factor,
             af = est.angle_pad * est.refine_factor;
  const double tsym = cfg.symbol_duration();
  std::vector<TargetEstimate> out;
  for (const auto& c : coarse) {
    const std::array<ZoomAxis, 3> axes{ZoomAxis{1, c.delay * cfg.spacing_hz, 1.0 / (nc * static_cast<double>(rf)), rf},
                                       ZoomAxis{-1, c.doppler * tsym, 1.0 / (ns * static_cast<double>(df)), df},
                                       ZoomAxis{-1, 0.5 * std::sin(c.angle), 1.0 / (nr * static_cast<double>(af)), af}};
    const auto pk = zoom_peak(z, axes);
    TargetEstimate t;
    t.delay = pk.value[0] / cfg.spacing_hz;
    t.range = 0.5 * kSpeedOfLight * t.delay;
    t.range_bin = pk.value[0] * nc;
    const double fd = detail::signed_bin(pk.value[1], 1);
    t.doppler = fd / tsym;
    t.doppler_bin = fd * ns;
    const double phi = detail::signed_bin(pk.value[2], 1);
    t.angle = detail::angle_from_spatial_frequency(phi, 0.5);
    t.angle_bin = phi * nr;
    t.magnitude = pk.magnitude;
    out.push_back(t);
  }
  detail::ofdma_fit_amplitudes(cube, cfg, symbols, rows, out, est.threshold_db);
  return out;
}

// ---------------------------------------------------------------------------
// Golay-preamble ranging

/// Preamble [Ga, 0 x guard, Gb, 0 x guard]; each half is one correlation
/// segment of N + guard samples.
inline std::vector<cd> golay_cef(const GolayPair& g, std::size_t guard) {
  std::vector<cd> out;
  out.reserve(2 * (g.length() + guard));
  for (int v : g.a) out.emplace_back(static_cast<double>(v), 0.0);
  out.resize(g.length() + guard, cd{0.0, 0.0});
  for (int v : g.b) out.emplace_back(static_cast<double>(v), 0.0);
  out.resize(2 * (g.length() + guard), cd{0.0, 0.0});
  return out;
}

/// Linear convolution of a preamble with a sparse tap channel, truncated to
/// `length` samples.
inline std::vector<cd> apply_taps(std::span<const cd> x, std::span<const std::size_t> delays, std::span<const cd> gains,
                                  std::size_t length) {
  std::vector<cd> y(length, cd{0.0, 0.0});
  for (std::size_t q = 0; q < delays.size(); ++q)
    for (std::size_t n = 0; n < x.size(); ++n)
      if (n + delays[q] < length) y[n + delays[q]] += gains[q] * x[n];
  return y;
}

struct DelayProfile {
  std::vector<cd> profile;         // lag 0..guard, 2N times the channel taps when noiseless
  std::vector<std::size_t> peaks;  // lags of local maxima above threshold, ascending
};

inline DelayProfile golay_range_estimate(std::span<const cd> received, const GolayPair& g, std::size_t guard,
                                         double threshold_db = -13.0) {
  const auto n = g.length();
  require(received.size() >= 2 * (n + guard), ErrorCode::InvalidArgument, "received preamble is too short");
  DelayProfile out;
  out.profile.assign(guard + 1, cd{0.0, 0.0});
  const std::size_t second = n + guard;
  for (std::size_t k = 0; k <= guard; ++k) {
    cd acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      acc += received[i + k] * static_cast<double>(g.a[i]);
      if (second + i + k < received.size()) acc += received[second + i + k] * static_cast<double>(g.b[i]);
    }
    out.profile[k] = acc;
  }
  double top = 0.0;
  for (const auto& v : out.profile) top = std::max(top, std::abs(v));
  if (!(top > 0.0)) return out;
  const double floor_mag = top * std::pow(10.0, threshold_db / 20.0);
  for (std::size_t k = 0; k < out.profile.size(); ++k) {
    const double v = std::abs(out.profile[k]);
    if (v < floor_mag) continue;
    const bool left = k == 0 || v > std::abs(out.profile[k - 1]);
    const bool right = k + 1 == out.profile.size() || v >= std::abs(out.profile[k + 1]);
    if (left && right) out.peaks.push_back(k);
  }
  return out;
}

} // namespace jrc
