// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "jrc/alloc.hpp"
#include "jrc/config.hpp"
#include "jrc/estim.hpp"
#include "jrc/io.hpp"
#include "jrc/perf.hpp"

namespace jrc {

enum Stage : std::size_t { kCoarse = 0, kRefined = 1, kFull = 2, kStages = 3 };
inline constexpr std::array<const char*, kStages> kStageNames{"coarse", "refined", "full"};

struct EstimateRow {
  std::size_t stage = 0;
  std::size_t target = 0;
  TargetEstimate estimate;
};

struct TrialResult {
  bool ok = false;
  std::string error;
  std::array<std::array<double, 3>, kStages> sq_err{}; // [stage][range m, Doppler Hz, angle rad]
  std::array<std::size_t, kStages> matched{};
  std::array<std::size_t, kStages> missed{};
  std::size_t bit_errors = 0;
  std::size_t bits = 0;
  std::vector<EstimateRow> estimates;
};

struct PointSummary {
  double mu = 0.0;
  double snr_db = 0.0;
  std::array<std::array<double, 3>, kStages> rmse{}; // NaN when nothing matched
  std::array<std::size_t, kStages> matched{};
  std::array<std::size_t, kStages> missed{};
  std::size_t bit_errors = 0;
  std::size_t bits = 0;
  std::size_t failed_trials = 0;
  std::vector<std::string> failures;

  double ber() const { return bits ? static_cast<double>(bit_errors) / static_cast<double>(bits) : std::nan(""); }
};

struct RunReport {
  std::vector<PointSummary> points;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  double wall_clock_s = 0.0;
  double failure_rate = 0.0;
};

/// Thin deterministic pool: item i is processed by exactly one worker and the
/// result lands in slot i, so the output never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

inline CodeSequence make_pmcw_code(const ScenarioConfig& c) {
  const auto& p = c.pmcw;
  if (c.pmcw_code == "random") {
    Rng rng(derive_seed(c.code_seed, 0xC0DEu));
    return random_binary_code(p.code_length, rng, p.chip_duration);
  }
  if (c.pmcw_code == "mls") {
    for (int deg = 2; deg <= 16; ++deg)
      if (p.code_length == (std::size_t{1} << deg) - 1) return mls_code(deg, p.chip_duration);
    throw Error(ErrorCode::Config, "pmcw.code: mls needs code_length = 2^n - 1");
  }
  return default_code(p.code_length, p.chip_duration, c.code_seed);
}

inline double noise_variance_for(double snr_db, double reference_power) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return reference_power * std::pow(10.0, -snr_db / 10.0);
}

namespace detail {

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng));
}

// On-grid angle: spatial frequency j / (N_r s) with |u| < 1.
inline double random_grid_angle(Rng& rng, std::size_t nr, double spacing) {
  std::vector<double> us;
  for (long j = -static_cast<long>(nr); j <= static_cast<long>(nr); ++j) {
    const double u = static_cast<double>(j) / (static_cast<double>(nr) * spacing);
    if (std::abs(u) < 1.0 - 1e-12) us.push_back(u);
  }
  return std::asin(us[uniform_index(rng, us.size())]);
}

inline std::vector<std::size_t> distinct_indices(Rng& rng, std::size_t count, std::size_t n) {
  require(count <= n, ErrorCode::InvalidArgument, "more random targets than grid cells");
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + uniform_index(rng, n - i)]);
  all.resize(count);
  return all;
}

inline Scatterer unit_target(Rng& rng, double delay, double doppler, double angle) {
  Scatterer s;
  s.delay = delay;
  s.doppler = doppler;
  s.arrival_angle = angle;
  s.gain = std::polar(1.0, uniform(rng, -kPi, kPi));
  return s;
}

inline std::vector<Scatterer> random_pmcw_targets(const PmcwConfig& p, std::size_t count, Rng& rng) {
  const auto k = std::max<std::size_t>(pmcw_schedule(p).radar_frames, 1);
  std::vector<Scatterer> out;
  for (const auto d : distinct_indices(rng, count, p.code_length)) {
    const auto j = k > 1 ? static_cast<double>(uniform_index(rng, k - 1)) - static_cast<double>((k - 1) / 2) : 0.0;
    out.push_back(unit_target(rng, static_cast<double>(d) * p.chip_duration,
                              j / (static_cast<double>(k) * p.block_duration()),
                              random_grid_angle(rng, p.geometry.n_rx, p.geometry.spacing_over_lambda)));
  }
  return out;
}

inline std::vector<Scatterer> random_ofdma_targets(const OfdmaConfig& o, std::size_t count, Rng& rng) {
  const auto rows = ofdma_pilot_mask(o).radar_rows();
  const auto bins = std::max<std::size_t>(std::min(ofdma_unambiguous_bins(rows, o.subcarriers), o.cp_length), 1);
  std::vector<Scatterer> out;
  for (const auto d : distinct_indices(rng, count, bins)) {
    const auto j = static_cast<double>(uniform_index(rng, o.symbols - 1)) - static_cast<double>((o.symbols - 1) / 2);
    out.push_back(unit_target(rng, static_cast<double>(d) / o.bandwidth(), j / (static_cast<double>(o.symbols) * o.symbol_duration()),
                              random_grid_angle(rng, o.geometry.n_rx, 0.5)));
  }
  return out;
}

inline std::vector<Scatterer> random_golay_targets(const GolayConfig& g, std::size_t count, Rng& rng) {
  std::vector<Scatterer> out;
  for (const auto d : distinct_indices(rng, count, g.guard + 1))
    out.push_back(unit_target(rng, static_cast<double>(d) / g.sample_rate_hz, 0.0, 0.0));
  return out;
}

inline double wrap_to_span(double x, double span) {
  if (!(span > 0.0)) return x;
  return x - span * std::floor(x / span + 0.5);
}

// Greedy assignment of estimates to truths by normalized (delay, Doppler,
// sin angle) distance; unmatched truths are misses. Doppler errors are taken
// modulo the unambiguous Doppler span.
inline void score(TrialResult& r, std::size_t stage, const std::vector<Scatterer>& truths,
                  const std::vector<TargetEstimate>& est, double delay_res, double doppler_res,
                  double doppler_span = 0.0, double sine_res = 0.0) {
  std::vector<bool> used(est.size(), false);
  for (std::size_t q = 0; q < truths.size(); ++q) {
    std::size_t best = est.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < est.size(); ++e) {
      if (used[e]) continue;
      const double a = (est[e].delay - truths[q].delay) / delay_res;
      const double b = doppler_res > 0 ? wrap_to_span(est[e].doppler - truths[q].doppler, doppler_span) / doppler_res : 0.0;
      const double c = sine_res > 0 ? (std::sin(est[e].angle) - std::sin(truths[q].arrival_angle)) / sine_res : 0.0;
      const double d = a * a + b * b + c * c;
      if (d < best_d) {
        best_d = d;
        best = e;
      }
    }
    if (best == est.size()) {
      ++r.missed[stage];
      continue;
    }
    used[best] = true;
    const double dr = est[best].range - truths[q].range();
    const double dd = wrap_to_span(est[best].doppler - truths[q].doppler, doppler_span);
    const double da = est[best].angle - truths[q].arrival_angle;
    r.sq_err[stage][0] += dr * dr;
    r.sq_err[stage][1] += dd * dd;
    r.sq_err[stage][2] += da * da;
    ++r.matched[stage];
  }
  for (std::size_t e = 0; e < est.size(); ++e) r.estimates.push_back({stage, e, est[e]});
}

inline void count_bits(TrialResult& r, const std::vector<std::uint8_t>& truth, const std::vector<std::uint8_t>& got) {
  r.bits += truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) r.bit_errors += i >= got.size() || (truth[i] & 1u) != (got[i] & 1u);
}

inline double reference_power(const std::vector<Scatterer>& targets) {
  double p = 0.0;
  for (const auto& t : targets) p = std::max(p, std::norm(t.gain));
  return p > 0.0 ? p : 1.0;
}

struct TrialInputs {
  std::vector<Scatterer> targets;
  std::uint64_t trial_seed = 0;
};

inline void pmcw_trial(const ScenarioConfig& c, const CodeSequence& code, double mu, double snr_db,
                       const TrialInputs& in, TrialResult& r) {
  PmcwConfig p = c.pmcw;
  p.mu_percent = mu;
  Scene scene;
  scene.scatterers = in.targets;
  scene.noise_variance = noise_variance_for(snr_db, reference_power(in.targets));
  scene.seed = derive_seed(in.trial_seed, 4);
  Rng payload_rng(derive_seed(in.trial_seed, 1));
  const auto bits = random_bits(pmcw_payload_bits(p), payload_rng);
  const auto stream = pmcw_frame_symbols(p, bits);
  Rng noise_rng(derive_seed(in.trial_seed, 2));
  const auto cube = pmcw_receive_cube(scene, p, code, stream.symbols, noise_rng);
  const double dres = p.chip_duration;
  const double fres = 1.0 / (static_cast<double>(p.frames) * p.block_duration());
  const double span = 1.0 / p.block_duration();
  const double ures = 1.0 / (static_cast<double>(p.geometry.n_rx) * p.geometry.spacing_over_lambda);

  const auto full = pmcw_full_knowledge(cube, p, code, stream.symbols, c.estimator);
  score(r, kFull, in.targets, full.targets, dres, fres, span, ures);
  const auto coarse = pmcw_range_doppler(cube, p, code, stream.symbols, c.estimator);
  score(r, kCoarse, in.targets, coarse.targets, dres, fres, span, ures);
  const auto dec = pmcw_decode_symbols(cube, p, code, coarse.targets);
  count_bits(r, bits, dec.bits);
  const auto refined = pmcw_residual_refine(cube, p, code, dec.symbols.symbols, coarse.targets, c.estimator);
  score(r, kRefined, in.targets, refined, dres, fres, span, ures);
}

inline void ofdma_trial(const ScenarioConfig& c, double mu, double snr_db, const TrialInputs& in, TrialResult& r) {
  OfdmaConfig o = c.ofdma;
  o.mu_percent = mu;
  Scene scene;
  scene.scatterers = in.targets;
  scene.noise_variance = noise_variance_for(snr_db, reference_power(in.targets));
  scene.seed = derive_seed(in.trial_seed, 4);
  Rng payload_rng(derive_seed(in.trial_seed, 1));
  const auto bits = random_bits(ofdma_payload_bits(o), payload_rng);
  const auto grid = make_symbol_grid(o, bits);
  Rng noise_rng(derive_seed(in.trial_seed, 2));
  const auto cube = ofdma_receive_cube(scene, o, grid.symbols, noise_rng);
  const double dres = 1.0 / o.bandwidth();
  const double fres = 1.0 / (static_cast<double>(o.symbols) * o.symbol_duration());
  const double span = 1.0 / o.symbol_duration();
  const double ures = 2.0 / static_cast<double>(o.geometry.n_rx);

  const auto full = ofdma_full_knowledge(cube, o, grid.symbols, c.estimator);
  score(r, kFull, in.targets, full.targets, dres, fres, span, ures);
  const auto coarse = ofdma_range_doppler_angle(cube, o, grid, c.estimator);
  score(r, kCoarse, in.targets, coarse.targets, dres, fres, span, ures);
  CMatrix decoded = grid.symbols;
  if (!grid.payload.empty()) {
    const auto dec = ofdma_decode_symbols(cube, o, grid, coarse.targets);
    count_bits(r, bits, dec.bits);
    decoded = dec.grid.symbols;
  }
  const auto refined = ofdma_residual_refine(cube, o, decoded, coarse.targets, c.estimator);
  score(r, kRefined, in.targets, refined, dres, fres, span, ures);
}

inline void golay_trial(const ScenarioConfig& c, double snr_db, const TrialInputs& in, TrialResult& r) {
  const auto& gc = c.golay;
  const auto pair = golay_pair(gc.log2_length);
  const auto cef = golay_cef(pair, gc.guard);
  Scene scene;
  scene.scatterers = in.targets;
  scene.seed = derive_seed(in.trial_seed, 4);
  const auto gains = realize_gains(scene, 0);
  std::vector<std::size_t> delays;
  for (const auto& t : in.targets) {
    const double k = std::round(t.delay * gc.sample_rate_hz);
    require(k >= 0.0 && k <= static_cast<double>(gc.guard), ErrorCode::RangeAmbiguity,
            "path delay exceeds the preamble guard");
    delays.push_back(static_cast<std::size_t>(k));
  }
  auto rx = apply_taps(cef, delays, gains, cef.size());
  Rng noise_rng(derive_seed(in.trial_seed, 2));
  add_noise(rx, noise_variance_for(snr_db, reference_power(in.targets)), noise_rng);
  const auto prof = golay_range_estimate(rx, pair, gc.guard, c.estimator.threshold_db);
  std::vector<std::size_t> order(prof.peaks);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(prof.profile[a]) > std::abs(prof.profile[b]); });
  if (order.size() > c.estimator.max_targets) order.resize(c.estimator.max_targets);
  std::vector<TargetEstimate> est;
  for (const auto k : order) {
    TargetEstimate t;
    t.range_bin = static_cast<double>(k);
    t.delay = static_cast<double>(k) / gc.sample_rate_hz;
    t.range = 0.5 * kSpeedOfLight * t.delay;
    t.amplitude = prof.profile[k] / (2.0 * static_cast<double>(pair.length()));
    t.magnitude = std::abs(prof.profile[k]);
    est.push_back(t);
  }
  score(r, kCoarse, in.targets, est, 1.0 / gc.sample_rate_hz, 0.0);
}

inline std::string fmt_or_nan(double v) { return std::isfinite(v) ? io::format_double(v) : std::string("nan"); }

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

} // namespace detail

inline std::vector<double> mu_points(const ScenarioConfig& c) {
  if (!c.sweep.mu_percent.empty()) return c.sweep.mu_percent;
  return {c.waveform == Waveform::Ofdma ? c.ofdma.mu_percent : c.pmcw.mu_percent};
}

/// Runs every (mu, SNR) sweep point for every trial. Trial t draws targets,
/// payload and noise from seeds derived from (seed, t), so sweep points share
/// realizations and the worker count never changes the result.
inline RunReport run_trials(const ScenarioConfig& c, std::size_t workers,
                            std::vector<std::vector<TrialResult>>* per_point = nullptr) {
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto mus = mu_points(c);
  const auto& snrs = c.sweep.snr_db;
  const std::size_t npoints = mus.size() * snrs.size();
  std::vector<std::vector<TrialResult>> results(npoints, std::vector<TrialResult>(c.trials));
  const CodeSequence code = c.waveform == Waveform::Pmcw ? make_pmcw_code(c) : CodeSequence{};

  parallel_for(c.trials, workers, [&](std::size_t t) {
    detail::TrialInputs base;
    base.trial_seed = derive_seed(c.seed, 0x7121A1u, t);
    for (std::size_t mi = 0; mi < mus.size(); ++mi) {
      detail::TrialInputs in = base;
      std::string setup_error;
      try {
        Rng target_rng(derive_seed(base.trial_seed, 3));
        in.targets = c.scene.scatterers;
        if (c.scene.random_targets > 0) {
          PmcwConfig p = c.pmcw;
          p.mu_percent = mus[mi];
          OfdmaConfig o = c.ofdma;
          o.mu_percent = mus[mi];
          const auto extra = c.waveform == Waveform::Pmcw    ? detail::random_pmcw_targets(p, c.scene.random_targets, target_rng)
                             : c.waveform == Waveform::Ofdma ? detail::random_ofdma_targets(o, c.scene.random_targets, target_rng)
                                                             : detail::random_golay_targets(c.golay, c.scene.random_targets, target_rng);
          in.targets.insert(in.targets.end(), extra.begin(), extra.end());
        }
      } catch (const std::exception& e) {
        setup_error = e.what();
      }
      for (std::size_t si = 0; si < snrs.size(); ++si) {
        auto& r = results[mi * snrs.size() + si][t];
        if (!setup_error.empty()) {
          r.error = setup_error;
          continue;
        }
        try {
          switch (c.waveform) {
          case Waveform::Pmcw: detail::pmcw_trial(c, code, mus[mi], snrs[si], in, r); break;
          case Waveform::Ofdma: detail::ofdma_trial(c, mus[mi], snrs[si], in, r); break;
          case Waveform::Golay: detail::golay_trial(c, snrs[si], in, r); break;
          }
          r.ok = true;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      }
    }
  });

  RunReport rep;
  rep.config_hash = config_hash(c);
  rep.seed = c.seed;
  rep.trials = c.trials;
  std::size_t failed = 0;
  for (std::size_t mi = 0; mi < mus.size(); ++mi)
    for (std::size_t si = 0; si < snrs.size(); ++si) {
      PointSummary s;
      s.mu = mus[mi];
      s.snr_db = snrs[si];
      std::array<std::array<double, 3>, kStages> acc{};
      for (const auto& r : results[mi * snrs.size() + si]) {
        if (!r.ok) {
          ++s.failed_trials;
          s.failures.push_back(r.error);
        }
        for (std::size_t st = 0; st < kStages; ++st) {
          for (std::size_t k = 0; k < 3; ++k) acc[st][k] += r.sq_err[st][k];
          s.matched[st] += r.matched[st];
          s.missed[st] += r.missed[st];
        }
        s.bit_errors += r.bit_errors;
        s.bits += r.bits;
      }
      for (std::size_t st = 0; st < kStages; ++st)
        for (std::size_t k = 0; k < 3; ++k)
          s.rmse[st][k] = s.matched[st] ? std::sqrt(acc[st][k] / static_cast<double>(s.matched[st])) : std::nan("");
      failed += s.failed_trials;
      rep.points.push_back(std::move(s));
    }
  rep.failure_rate = npoints ? static_cast<double>(failed) / static_cast<double>(npoints * c.trials) : 0.0;
  rep.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (per_point) *per_point = std::move(results);
  return rep;
}

// ---------------------------------------------------------------------------
// Ambiguity-function export

struct AfWaveform {
  std::vector<cd> samples;
  double sample_period = 1.0;
};

inline AfWaveform af_waveform(const ScenarioConfig& c) {
  AfWaveform w;
  const auto os = c.af.oversample;
  Rng rng(derive_seed(c.effective_payload_seed(), 0xAFu));
  switch (c.waveform) {
  case Waveform::Pmcw: {
    const auto code = make_pmcw_code(c);
    const auto bits = random_bits(pmcw_payload_bits(c.pmcw), rng);
    w.samples = pmcw_af_waveform(code, pmcw_frame_symbols(c.pmcw, bits).symbols, os);
    w.sample_period = c.pmcw.chip_duration / static_cast<double>(os);
    break;
  }
  case Waveform::Ofdma: {
    const auto bits = random_bits(ofdma_payload_bits(c.ofdma), rng);
    const auto grid = make_symbol_grid(c.ofdma, bits);
    w.samples = ofdma_af_waveform(grid.symbols, c.ofdma.cp_length, os);
    w.sample_period = c.ofdma.sample_period() / static_cast<double>(os);
    break;
  }
  case Waveform::Golay: {
    const auto cef = golay_cef(golay_pair(c.golay.log2_length), c.golay.guard);
    for (const auto& v : cef)
      for (std::size_t o = 0; o < os; ++o) w.samples.push_back(v);
    w.sample_period = 1.0 / (c.golay.sample_rate_hz * static_cast<double>(os));
    break;
  }
  }
  return w;
}

inline AfSurface compute_af(const ScenarioConfig& c, std::size_t workers = 1) {
  const auto w = af_waveform(c);
  const double duration = static_cast<double>(w.samples.size()) * w.sample_period;
  const double span = c.af.doppler_span_hz > 0.0 ? c.af.doppler_span_hz : 4.0 / duration;
  const auto grid = linear_grid(-span, span, c.af.doppler_points);
  return ambiguity_function(w.samples, w.sample_period, c.af.max_lag, grid, workers);
}

inline void write_af(const AfSurface& s, const std::filesystem::path& dir) {
  {
    io::CsvWriter w(dir / "af_surface.csv", {"delay_s", "doppler_hz", "magnitude", "re", "im"});
    for (std::size_t i = 0; i < s.n_delay(); ++i)
      for (std::size_t j = 0; j < s.n_doppler(); ++j) {
        const cd v = s.at(i, j);
        w.row({io::cell(s.delays[i]), io::cell(s.dopplers[j]), io::cell(std::abs(v)), io::cell(v.real()), io::cell(v.imag())});
      }
  }
  Tensor3 t(s.n_delay(), s.n_doppler(), 1);
  for (std::size_t i = 0; i < s.n_delay(); ++i)
    for (std::size_t j = 0; j < s.n_doppler(); ++j) t(i, j, 0) = s.at(i, j);
  io::write_tensor_binary(dir / "af_surface.bin", t);
  {
    io::CsvWriter w(dir / "af_cut_delay.csv", {"delay_s", "magnitude"});
    const auto cut = s.delay_cut();
    for (std::size_t i = 0; i < cut.size(); ++i) w.row({io::cell(s.delays[i]), io::cell(cut[i])});
  }
  {
    io::CsvWriter w(dir / "af_cut_doppler.csv", {"doppler_hz", "magnitude"});
    const auto cut = s.doppler_cut();
    for (std::size_t j = 0; j < cut.size(); ++j) w.row({io::cell(s.dopplers[j]), io::cell(cut[j])});
  }
}

inline AfSurface export_af(const ScenarioConfig& c, const std::filesystem::path& dir, std::size_t workers = 1) {
  const auto s = compute_af(c, workers);
  write_af(s, dir);
  return s;
}

// ---------------------------------------------------------------------------
// Scenario run

inline void write_run_outputs(const ScenarioConfig& c, const RunReport& rep,
                              const std::vector<std::vector<TrialResult>>& per_point, const std::filesystem::path& dir) {
  using detail::fmt_or_nan;
  {
    io::CsvWriter w(dir / "rmse_vs_snr.csv", {"mu_percent", "snr_db", "stage", "rmse_range_m", "rmse_doppler_hz",
                                             "rmse_angle_rad", "matched", "missed", "failed_trials"});
    for (const auto& p : rep.points)
      for (std::size_t st = 0; st < kStages; ++st) {
        if (c.waveform == Waveform::Golay && st != kCoarse) continue;
        w.row({io::cell(p.mu), io::cell(p.snr_db), kStageNames[st], fmt_or_nan(p.rmse[st][0]), fmt_or_nan(p.rmse[st][1]),
               fmt_or_nan(p.rmse[st][2]), io::cell(p.matched[st]), io::cell(p.missed[st]), io::cell(p.failed_trials)});
      }
  }
  {
    io::CsvWriter w(dir / "ber_vs_snr.csv", {"mu_percent", "snr_db", "ber", "bit_errors", "bits", "failed_trials"});
    for (const auto& p : rep.points)
      w.row({io::cell(p.mu), io::cell(p.snr_db), fmt_or_nan(p.ber()), io::cell(p.bit_errors), io::cell(p.bits),
             io::cell(p.failed_trials)});
  }
  {
    io::CsvWriter w(dir / "estimates.csv", {"mu_percent", "snr_db", "trial", "stage", "target", "delay_s", "range_m",
                                           "doppler_hz", "angle_rad", "amp_re", "amp_im"});
    for (std::size_t pi = 0; pi < rep.points.size(); ++pi)
      for (std::size_t t = 0; t < per_point[pi].size(); ++t)
        for (const auto& e : per_point[pi][t].estimates)
          w.row({io::cell(rep.points[pi].mu), io::cell(rep.points[pi].snr_db), io::cell(t), kStageNames[e.stage],
                 io::cell(e.target), io::cell(e.estimate.delay), io::cell(e.estimate.range), io::cell(e.estimate.doppler),
                 io::cell(e.estimate.angle), io::cell(e.estimate.amplitude.real()), io::cell(e.estimate.amplitude.imag())});
  }
  if (c.waveform != Waveform::Golay) {
    io::CsvWriter w(dir / "tradeoff.csv", {"mu_percent", "snr_db", "weight", "objective_log2", "comm_term_log2",
                                          "radar_term_log2", "rate_bps_per_hz", "delta"});
    for (const auto& p : rep.points) {
      const int b = bits_per_symbol(c.waveform == Waveform::Pmcw ? c.pmcw.dpsk_order : c.ofdma.dpsk_order);
      const double ber = p.ber();
      const double rate = std::isfinite(ber) ? static_cast<double>(b) * (1.0 - detail::binary_entropy(ber)) : std::nan("");
      double delta = 0.0, radar = std::nan("");
      const double var = noise_variance_for(p.snr_db, 1.0);
      if (c.waveform == Waveform::Pmcw) {
        PmcwConfig pc = c.pmcw;
        pc.mu_percent = p.mu;
        delta = 1.0 - static_cast<double>(pmcw_schedule(pc).radar_frames) / static_cast<double>(pc.frames);
        if (var > 0.0) radar = trace_log2(pmcw_crlb_proxy(pc, 0.0, 1.0, var));
      } else {
        OfdmaConfig oc = c.ofdma;
        oc.mu_percent = p.mu;
        delta = 1.0 - static_cast<double>(ofdma_pilot_mask(oc).count) / static_cast<double>(oc.subcarriers);
        if (var > 0.0) radar = trace_log2(crlb_proxy(oc, 0.0, 1.0, var));
      }
      const double comm = delta > 0.0 && std::isfinite(rate) ? -delta * rate : std::nan("");
      for (const double wgt : c.sweep.weight) {
        double obj = std::nan("");
        if (std::isfinite(comm) && std::isfinite(radar)) {
          TradeoffSpec spec;
          spec.rate = rate;
          spec.delta = delta;
          spec.code_length = 1;
          spec.targets = 1;
          spec.crlb = Eigen::MatrixXd::Constant(1, 1, std::exp2(radar));
          spec.weight = wgt;
          obj = jrc_objective(spec);
        }
        w.row({io::cell(p.mu), io::cell(p.snr_db), io::cell(wgt), fmt_or_nan(obj), fmt_or_nan(comm),
               fmt_or_nan(radar),
               fmt_or_nan(rate), io::cell(delta)});
      }
    }
  }
}

inline nlohmann::json report_json(const RunReport& rep) {
  nlohmann::json j;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(rep.config_hash));
  j["config_hash"] = std::string(hash);
  j["seed"] = rep.seed;
  j["trials"] = rep.trials;
  j["wall_clock_s"] = rep.wall_clock_s;
  j["failure_rate"] = rep.failure_rate;
  auto pts = nlohmann::json::array();
  for (const auto& p : rep.points) {
    nlohmann::json e;
    e["mu_percent"] = p.mu;
    e["snr_db"] = detail::number_or_inf(p.snr_db);
    for (std::size_t st = 0; st < kStages; ++st) {
      nlohmann::json r;
      r["range_m"] = detail::fmt_or_nan(p.rmse[st][0]);
      r["doppler_hz"] = detail::fmt_or_nan(p.rmse[st][1]);
      r["angle_rad"] = detail::fmt_or_nan(p.rmse[st][2]);
      e["rmse"][kStageNames[st]] = r;
    }
    e["ber"] = detail::fmt_or_nan(p.ber());
    e["failed_trials"] = p.failed_trials;
    if (!p.failures.empty()) e["first_failure"] = p.failures.front();
    pts.push_back(e);
  }
  j["points"] = pts;
  return j;
}

inline RunReport run_scenario(const ScenarioConfig& c, const std::filesystem::path& dir, std::size_t workers = 1) {
  std::vector<std::vector<TrialResult>> per_point;
  auto rep = run_trials(c, workers, &per_point);
  write_run_outputs(c, rep, per_point, dir);
  export_af(c, dir, workers);
  auto f = io::open_out(dir / "report.json");
  f << report_json(rep).dump(2) << "\n";
  return rep;
}

// ---------------------------------------------------------------------------
// Allocation export

enum class AllocMethod { Waterfill, NeymanPearson };

/// Problem CSV: optional "# P_T=<W>" and "# alpha=<a>" lines, a header naming
/// g_k, h_k, n_k, t_k (k optional), then one row per subcarrier.
inline AllocationProblem read_problem_csv(const std::filesystem::path& path) {
  const auto text = io::read_text(path);
  AllocationProblem prob;
  prob.total_power = std::nan("");
  std::vector<std::string> header;
  std::size_t line_no = 0;
  for (const auto& raw : io::split(text, '\n')) {
    ++line_no;
    const auto line = io::trim(raw);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = io::trim(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const auto key = io::trim(std::string_view(body).substr(0, eq));
      const auto val = std::string_view(body).substr(eq + 1);
      if (key == "P_T") prob.total_power = io::parse_double(val, where);
      else if (key == "alpha") prob.alpha = io::parse_double(val, where);
      continue;
    }
    const auto cells = io::split(line, ',');
    if (header.empty()) {
      for (const auto& h : cells) header.push_back(io::trim(h));
      continue;
    }
    require(cells.size() == header.size(), ErrorCode::Config, where + ": expected " + std::to_string(header.size()) + " cells");
    double g = std::nan(""), h = 1.0, n = std::nan(""), t = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& name = header[i];
      if (name == "k") continue;
      const double v = io::parse_double(cells[i], where);
      if (name == "g" || name == "g_k") g = v;
      else if (name == "h" || name == "h_k") h = v;
      else if (name == "n" || name == "n_k") n = v;
      else if (name == "t" || name == "t_k") t = v;
      else throw Error(ErrorCode::Config, where + ": unknown column '" + name + "'");
    }
    require(std::isfinite(g) && std::isfinite(n), ErrorCode::Config, where + ": g_k and n_k are required");
    prob.radar_gain.push_back(g);
    prob.comm_gain.push_back(h);
    prob.noise.push_back(n);
    prob.rate_floor.push_back(t);
  }
  return prob;
}

inline AllocationResult solve_allocation(const AllocationProblem& prob, AllocMethod method) {
  prob.validate();
  if (method == AllocMethod::NeymanPearson) return np_allocate(prob);
  std::vector<double> levels(prob.size());
  for (std::size_t k = 0; k < levels.size(); ++k) levels[k] = prob.noise[k] / prob.radar_gain[k];
  auto r = waterfill(levels, prob.total_power);
  r.rates.resize(prob.size());
  for (std::size_t k = 0; k < prob.size(); ++k) {
    r.rates[k] = std::log2(1.0 + r.power[k] * prob.comm_gain[k] / prob.noise[k]);
    r.radar_snr += r.power[k] * prob.radar_gain[k] / prob.noise[k];
  }
  r.detection_probability = detection_probability(r.radar_snr, prob.alpha);
  return r;
}

inline AllocationResult export_alloc(const AllocationProblem& prob, AllocMethod method, const std::filesystem::path& dir) {
  const auto r = solve_allocation(prob, method);
  {
    io::CsvWriter w(dir / "alloc.csv", {"k", "g_k", "h_k", "n_k", "t_k_bps_per_hz", "P_k_W", "rate_bps_per_hz"});
    for (std::size_t k = 0; k < prob.size(); ++k)
      w.row({io::cell(k), io::cell(prob.radar_gain[k]), io::cell(prob.comm_gain[k]), io::cell(prob.noise[k]),
             io::cell(prob.rate_floor[k]), io::cell(r.power[k]), io::cell(r.rates[k])});
  }
  io::CsvWriter w(dir / "alloc_summary.csv", {"quantity", "value"});
  double kkt = 0.0;
  for (const double v : r.kkt_residuals) kkt = std::max(kkt, v);
  w.row({"method", method == AllocMethod::Waterfill ? "waterfill" : "np"});
  w.row({"total_power_W", io::cell(prob.total_power)});
  w.row({"alpha", io::cell(prob.alpha)});
  w.row({"water_level_W", io::cell(r.water_level)});
  w.row({"radar_snr", io::cell(r.radar_snr)});
  w.row({"p_D", io::cell(r.detection_probability)});
  w.row({"feasible", r.feasible ? "1" : "0"});
  w.row({"deficit_W", io::cell(r.deficit)});
  w.row({"max_kkt_residual", io::cell(kkt)});
  return r;
}

} // namespace jrc
