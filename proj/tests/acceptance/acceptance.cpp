// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "jrc/jrc.hpp"
#include "scenes.hpp"

using namespace jrc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) {
    if (pass) detail += (detail.empty() ? "" : "; ") + s;
  }
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------------------

Outcome golay_identity() {
  Outcome o;
  const auto t0 = Clock::now();
  for (int k = 1; k <= 16; ++k) {
    const auto g = golay_pair(k);
    const auto sum = golay_autocorr_sum(g);
    const long long n = 1LL << k;
    bool exact = sum.size() == static_cast<std::size_t>(2 * n - 1);
    for (std::size_t i = 0; exact && i < sum.size(); ++i) exact = sum[i] == (i == static_cast<std::size_t>(n - 1) ? 2 * n : 0);
    o.require(exact, "identity broken at N=" + std::to_string(n));
  }

  const auto pair = golay_pair(8);
  const std::size_t guard = 256;
  const auto cef = golay_cef(pair, guard);
  const std::vector<std::size_t> delays{0, 20, 100};
  const std::vector<cd> gains{{1.0, 0.0}, {0.5, -0.25}, {-0.375, 0.125}};
  const auto prof = golay_range_estimate(apply_taps(cef, delays, gains, cef.size()), pair, guard);
  bool exact = prof.peaks == delays;
  for (std::size_t lag = 0; lag < prof.profile.size(); ++lag) {
    cd want{0.0, 0.0};
    for (std::size_t q = 0; q < delays.size(); ++q)
      if (delays[q] == lag) want = 512.0 * gains[q];
    exact = exact && prof.profile[lag] == want;
  }
  o.require(exact, "3-path CEF profile is not exact");
  const double t = seconds_since(t0);
  o.require(t < 5.0, "runtime " + num(t) + " s");
  o.note("N=2..65536 exact, 3-path peaks 512*g at lags {0,20,100}, " + num(t) + " s");
  return o;
}

// ---------------------------------------------------------------------------

std::size_t resolved_targets(double separation_samples) {
  OfdmaConfig c;
  c.subcarriers = 64;
  c.spacing_hz = 62.5e6; // 4 GHz occupied bandwidth
  c.symbols = 8;
  c.cp_length = 16;
  c.mu_percent = 100;
  c.geometry = {1, 1, 0.5};
  const auto grid = make_symbol_grid(c, {});
  Scene scene;
  Scatterer a, b;
  a.delay = 6.0 * c.sample_period();
  b.delay = a.delay + separation_samples * c.sample_period();
  b.gain = {0.0, 1.0};
  scene.scatterers = {a, b};
  Rng rng(1);
  const auto cube = ofdma_receive_cube(scene, c, grid.symbols, rng);
  return ofdma_range_doppler_angle(cube, c, grid, EstimatorConfig{}).targets.size();
}

Outcome range_resolution() {
  Outcome o;
  const auto t0 = Clock::now();
  const double w = 4e9;
  const double cell = kSpeedOfLight / (2.0 * w);
  o.require(std::abs(cell - 0.0375) < 1e-4, "resolution cell " + num(cell) + " m");
  const auto at_cell = resolved_targets(1.0);
  const auto below = resolved_targets(0.8);
  o.require(at_cell == 2, "spacing 3.75 cm gave " + std::to_string(at_cell) + " peaks");
  o.require(below == 1, "spacing 3.0 cm gave " + std::to_string(below) + " peaks");
  const double t = seconds_since(t0);
  o.require(t < 10.0, "runtime " + num(t) + " s");
  o.note("cell " + num(cell * 100) + " cm: 2 peaks at 1.0 cell, 1 peak at 0.8 cell");
  return o;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(20240601);
  double pm = 0.0, of = 0.0;
  for (int i = 0; i < 100; ++i) pm = std::max(pm, testing_support::pmcw_oracle_error(testing_support::random_pmcw_case(rng)));
  for (int i = 0; i < 100; ++i) of = std::max(of, testing_support::ofdma_oracle_error(testing_support::random_ofdma_case(rng)));
  o.require(pm <= 1e-10, "pmcw max error " + num(pm));
  o.require(of <= 1e-10, "ofdma max error " + num(of));
  const double t = seconds_since(t0);
  o.require(t < 60.0, "runtime " + num(t) + " s");
  o.note("max |err| pmcw " + num(pm) + ", ofdma " + num(of));
  return o;
}

// ---------------------------------------------------------------------------

Scatterer make_target(double delay, double doppler, double angle) {
  Scatterer s;
  s.delay = delay;
  s.doppler = doppler;
  s.arrival_angle = angle;
  s.gain = std::polar(1.0, 0.7);
  return s;
}

void check_bins(Outcome& o, const std::string& tag, const TargetEstimate& e, const Scatterer& t, double delay_unit,
                double doppler_unit, double sine_unit) {
  const double rb = (e.delay - t.delay) / delay_unit;
  const double db = (e.doppler - t.doppler) / doppler_unit;
  const double ab = (std::sin(e.angle) - std::sin(t.arrival_angle)) / sine_unit;
  o.require(std::abs(rb) < 1e-6 && std::abs(db) < 1e-6 && std::abs(ab) < 1e-6,
            tag + " bin errors (" + num(rb) + ", " + num(db) + ", " + num(ab) + ")");
}

Outcome noiseless_end_to_end() {
  Outcome o;
  const auto t0 = Clock::now();
  {
    PmcwConfig c;
    c.code_length = 64;
    c.frames = 16;
    c.mu_percent = 50;
    c.geometry = {1, 4, 0.5};
    const auto code = default_code(c.code_length, c.chip_duration, 5);
    Rng payload(3);
    const auto bits = random_bits(pmcw_payload_bits(c), payload);
    const auto stream = pmcw_frame_symbols(c, bits);
    const double k = static_cast<double>(pmcw_schedule(c).radar_frames);
    const auto truth = make_target(9 * c.chip_duration, 2.0 / (k * c.block_duration()), std::asin(0.5));
    Scene scene;
    scene.scatterers = {truth};
    Rng noise(1);
    const auto cube = pmcw_receive_cube(scene, c, code, stream.symbols, noise);
    const auto coarse = pmcw_range_doppler(cube, c, code, stream.symbols, EstimatorConfig{});
    o.require(coarse.targets.size() == 1, "pmcw detected " + std::to_string(coarse.targets.size()) + " targets");
    if (coarse.targets.size() == 1) {
      check_bins(o, "pmcw", coarse.targets[0], truth, c.chip_duration, 1.0 / (k * c.block_duration()), 1.0 / (4 * 0.5));
      const auto dec = pmcw_decode_symbols(cube, c, code, coarse.targets);
      o.require(ber(bits, dec.bits) == 0.0, "pmcw BER " + num(ber(bits, dec.bits)));
    }
  }
  {
    OfdmaConfig c;
    c.mu_percent = 50;
    c.geometry = {1, 4, 0.5};
    Rng payload(4);
    const auto bits = random_bits(ofdma_payload_bits(c), payload);
    const auto grid = make_symbol_grid(c, bits);
    const double ns = static_cast<double>(c.symbols);
    const auto truth = make_target(5 * c.sample_period(), -3.0 / (ns * c.symbol_duration()), std::asin(-0.5));
    Scene scene;
    scene.scatterers = {truth};
    Rng noise(2);
    const auto cube = ofdma_receive_cube(scene, c, grid.symbols, noise);
    const auto coarse = ofdma_range_doppler_angle(cube, c, grid, EstimatorConfig{});
    o.require(coarse.targets.size() == 1, "ofdma detected " + std::to_string(coarse.targets.size()) + " targets");
    if (coarse.targets.size() == 1) {
      check_bins(o, "ofdma", coarse.targets[0], truth, c.sample_period(), 1.0 / (ns * c.symbol_duration()), 2.0 / 4);
      const auto dec = ofdma_decode_symbols(cube, c, grid, coarse.targets);
      o.require(ber(bits, dec.bits) == 0.0, "ofdma BER " + num(ber(bits, dec.bits)));
    }
  }
  for (const Waveform w : {Waveform::Pmcw, Waveform::Ofdma}) {
    ScenarioConfig c;
    c.waveform = w;
    c.pmcw.mu_percent = c.ofdma.mu_percent = 50;
    c.scene.random_targets = 1;
    c.sweep.snr_db = {std::numeric_limits<double>::infinity()};
    c.trials = 4;
    c.seed = 77;
    const auto rep = run_trials(c, 1);
    const auto& p = rep.points.front();
    o.require(p.failed_trials == 0, std::string(to_string(w)) + " run had failures");
    o.require(p.missed[0] == 0 && p.rmse[0][0] < 1e-12 && p.rmse[0][1] < 1e-6 && p.rmse[0][2] < 1e-12,
              std::string(to_string(w)) + " run coarse RMSE (" + num(p.rmse[0][0]) + ", " + num(p.rmse[0][1]) + ", " +
                  num(p.rmse[0][2]) + "), missed " + std::to_string(p.missed[0]));
    o.require(p.bit_errors == 0 && p.bits > 0, std::string(to_string(w)) + " run BER not zero");
  }
  const double t = seconds_since(t0);
  o.require(t < 10.0, "runtime " + num(t) + " s");
  o.note("bin errors 0 and BER 0 for both waveforms, " + num(t) + " s");
  return o;
}

// ---------------------------------------------------------------------------

struct TrendSetup {
  ScenarioConfig cfg;
  std::size_t metric; // 0 range, 1 Doppler
  std::string label;
};

void check_trends(Outcome& o, const TrendSetup& s, std::string& table) {
  const auto rep = run_trials(s.cfg, std::max(1u, std::thread::hardware_concurrency()));
  const auto& snrs = s.cfg.sweep.snr_db;
  const std::size_t n = snrs.size();
  auto point = [&](double mu, std::size_t i) -> const PointSummary& {
    for (const auto& p : rep.points)
      if (p.mu == mu && p.snr_db == snrs[i]) return p;
    throw Error(ErrorCode::InvalidArgument, "missing sweep point");
  };
  const std::size_t m = s.metric;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& half = point(50, i);
    const auto& all = point(100, i);
    o.require(half.failed_trials == 0 && all.failed_trials == 0, s.label + " failed trials at " + num(snrs[i]) + " dB");
    const double coarse = half.rmse[0][m], refined = half.rmse[1][m], full = half.rmse[2][m], pilot100 = all.rmse[0][m];
    table += " " + s.label + "@" + num(snrs[i]) + "dB[c=" + num(coarse) + " r=" + num(refined) + " f=" + num(full) +
             " mu100=" + num(pilot100) + " ber=" + num(half.ber()) + "]";
    o.require(full <= coarse, s.label + " (b) full > pilot-only at " + num(snrs[i]) + " dB");
    o.require(pilot100 <= coarse, s.label + " (b) mu=100 > mu=50 at " + num(snrs[i]) + " dB");
    if (half.ber() < 0.1) o.require(refined < coarse, s.label + " (c) refined >= coarse at " + num(snrs[i]) + " dB");
    if (i > 0) {
      const auto& prev = point(50, i - 1);
      const auto& prev_all = point(100, i - 1);
      for (std::size_t st = 0; st < kStages; ++st)
        o.require(half.rmse[st][m] <= prev.rmse[st][m],
                  s.label + " (a) " + kStageNames[st] + " RMSE rises at " + num(snrs[i]) + " dB");
      o.require(all.rmse[0][m] <= prev_all.rmse[0][m], s.label + " (a) mu=100 RMSE rises at " + num(snrs[i]) + " dB");
    }
  }
}

Outcome snr_trends() {
  Outcome o;
  const auto t0 = Clock::now();
  std::string table;

  TrendSetup of;
  of.cfg.waveform = Waveform::Ofdma;
  of.cfg.ofdma.geometry = {1, 4, 0.5};
  of.label = "ofdma-range";
  of.metric = 0;
  TrendSetup pm;
  pm.cfg.waveform = Waveform::Pmcw;
  pm.cfg.pmcw.code_length = 64;
  pm.cfg.pmcw.frames = 16;
  pm.cfg.pmcw.geometry = {1, 4, 0.5};
  pm.label = "pmcw-doppler";
  pm.metric = 1;
  for (auto* s : {&of, &pm}) {
    s->cfg.scene.random_targets = 1;
    s->cfg.sweep.snr_db = {0, 5, 10, 15, 20};
    s->cfg.sweep.mu_percent = {50, 100};
    s->cfg.trials = 500;
    s->cfg.seed = 4242;
    check_trends(o, *s, table);
  }
  const double t = seconds_since(t0);
  o.require(t < 600.0, "runtime " + num(t) + " s");
  std::printf("  criterion 5 table:%s\n", table.c_str());
  o.note("orderings hold at every point, " + num(t) + " s");
  return o;
}

// ---------------------------------------------------------------------------

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double delay_cut_psl(std::span<const cd> x, double ts) {
  const double zero[] = {0.0};
  return peak_sidelobe_ratio(ambiguity_function(x, ts, x.size() - 1, zero).delay_cut());
}

Outcome af_sidelobes() {
  Outcome o;
  const auto t0 = Clock::now();
  // One 255-chip MLS block against one 255-subcarrier OFDM symbol carrying payload.
  ScenarioConfig p;
  p.waveform = Waveform::Pmcw;
  p.pmcw.code_length = 255;
  p.pmcw.frames = 1;
  p.pmcw.mu_percent = 0;
  p.pmcw_code = "mls";
  const auto os = p.af.oversample;
  OfdmaConfig f;
  f.subcarriers = 255;
  f.symbols = 2;
  f.cp_length = 0;
  f.mu_percent = 50;
  f.spacing_hz = 1.0 / (255 * p.pmcw.chip_duration);
  o.require(std::abs(f.sample_period() - p.pmcw.chip_duration) < 1e-24, "bandwidths differ");

  std::vector<double> pp, fp;
  for (std::uint64_t d = 0; d < 100; ++d) {
    p.payload_seed = 1000 + d;
    const auto pw = af_waveform(p);
    pp.push_back(delay_cut_psl(pw.samples, pw.sample_period));
    Rng rng(derive_seed(1000 + d, 0xAFu));
    const auto grid = make_symbol_grid(f, random_bits(ofdma_payload_bits(f), rng));
    const CMatrix data_symbol = grid.symbols.col(1);
    fp.push_back(delay_cut_psl(ofdma_af_waveform(data_symbol, 0, os), f.sample_period() / static_cast<double>(os)));
  }
  const double mp = median(pp), mf = median(fp);
  o.require(mp < mf, "median PSL pmcw " + num(mp) + " dB not below ofdma " + num(mf) + " dB");

  Rng rng(9);
  std::vector<cd> x(300);
  for (auto& v : x) v = unit_complex_normal(rng) * 2.5;
  const auto surf = ambiguity_function(x, 1e-9, 64, linear_grid(-2e6, 2e6, 11));
  const double origin = surf.magnitude(surf.zero_delay_index(), surf.zero_doppler_index());
  o.require(std::abs(origin - 1.0) <= 1e-12, "AF origin " + num(origin));

  const int b13[] = {1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1};
  std::vector<cd> bx;
  for (int v : b13) bx.emplace_back(v, 0.0);
  const double zero[] = {0.0};
  const double barker = peak_sidelobe_ratio(ambiguity_function(bx, 1.0, 12, zero).delay_cut());
  o.require(std::abs(barker + 22.3) <= 0.1, "Barker-13 PSL " + num(barker));
  const double t = seconds_since(t0);
  o.require(t < 120.0, "runtime " + num(t) + " s");
  o.note("median PSL pmcw " + num(mp) + " dB vs ofdma " + num(mf) + " dB, Barker " + num(barker) + " dB");
  return o;
}

// ---------------------------------------------------------------------------

Outcome dmse_identity() {
  Outcome o;
  Rng rng(77);
  std::uniform_real_distribution<double> ur(0.0, 8.0), ud(0.05, 1.0), un(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double r = ur(rng), delta = ud(rng);
    const std::size_t n = 1 + rng() % 16;
    // Random orthogonal basis with eigen-rates averaging to r.
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = un(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    Eigen::VectorXd rates(n);
    for (std::size_t k = 0; k < n; ++k) rates(k) = un(rng);
    rates.array() += r - rates.mean();
    Eigen::VectorXd ev(n);
    for (std::size_t k = 0; k < n; ++k) ev(k) = std::exp2(-rates(k));
    const Eigen::MatrixXd mmse = q * ev.asDiagonal() * q.transpose();
    worst = std::max(worst, std::abs(check_rate_identity(dmse_eff(mmse, delta), delta * r, n)));
  }
  o.require(worst <= 1e-12, "identity residual " + num(worst));

  double affine = 0.0;
  std::uniform_real_distribution<double> uw(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    TradeoffSpec s;
    s.rate = ur(rng);
    s.delta = ud(rng);
    s.code_length = 1 + rng() % 8;
    s.targets = 1 + rng() % 4;
    Eigen::MatrixXd b(3, 3);
    for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = un(rng);
    s.crlb = 1e-4 * (b * b.transpose() + Eigen::MatrixXd::Identity(3, 3));
    s.weight = 0.0;
    const double j0 = jrc_objective(s);
    s.weight = 1.0;
    const double j1 = jrc_objective(s);
    s.weight = uw(rng);
    affine = std::max(affine, std::abs(jrc_objective(s) - ((1.0 - s.weight) * j0 + s.weight * j1)));
  }
  o.require(affine <= 1e-12, "objective affinity residual " + num(affine));
  o.note("max identity residual " + num(worst) + ", affinity residual " + num(affine));
  return o;
}

// ---------------------------------------------------------------------------

Outcome allocation() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(31337);
  std::uniform_real_distribution<double> lvl(1e-3, 10.0), tot(1e-2, 50.0), u(0.0, 1.0);
  double kkt = 0.0, budget = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> levels(1 + rng() % 128);
    for (auto& l : levels) l = lvl(rng);
    const double total = tot(rng);
    const auto r = waterfill(levels, total);
    double sum = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
      kkt = std::max(kkt, r.kkt_residuals[k]);
      o.require(r.power[k] >= 0.0, "negative power");
      sum += r.power[k];
    }
    budget = std::max(budget, std::abs(sum - total) / total);
  }
  o.require(kkt <= 1e-9, "KKT residual " + num(kkt));
  o.require(budget <= 1e-12, "budget mismatch " + num(budget));

  const auto two = waterfill(std::vector<double>{1.0, 3.0}, 4.0);
  o.require(two.power == std::vector<double>{3.0, 1.0}, "[1,3], P_T=4 gave [" + num(two.power[0]) + "," + num(two.power[1]) + "]");

  double boundary_err = 0.0;
  bool monotone = true;
  for (int i = 0; i < 200; ++i) {
    AllocationProblem p;
    const std::size_t k = 1 + rng() % 16;
    double closed = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p.radar_gain.push_back(0.1 + 2.0 * u(rng));
      p.comm_gain.push_back(0.1 + 2.0 * u(rng));
      p.noise.push_back(0.05 + u(rng));
      p.rate_floor.push_back(u(rng) < 0.3 ? 0.0 : 2.0 * u(rng));
      closed += (std::exp2(p.rate_floor[j]) - 1.0) * p.noise[j] / p.comm_gain[j];
    }
    const double b = feasibility_boundary(p);
    boundary_err = std::max(boundary_err, std::abs(b - closed) / std::max(closed, 1e-300));
    p.alpha = 0.01;
    p.total_power = b * 1.0000001 + 1e-12;
    o.require(np_allocate(p).feasible, "budget at the boundary is infeasible");
    if (b > 0.0) {
      p.total_power = 0.99 * b;
      o.require(!np_allocate(p).feasible, "budget below the boundary is feasible");
    }
    double prev = 0.0;
    for (double scale : {1.01, 1.5, 2.0, 4.0, 10.0}) {
      p.total_power = std::max(b, 1e-3) * scale;
      const double pd = np_allocate(p).detection_probability;
      monotone = monotone && pd >= prev;
      prev = pd;
    }
    prev = 0.0;
    for (double a : {1e-4, 1e-3, 1e-2, 0.1, 0.3}) {
      p.alpha = a;
      const double pd = np_allocate(p).detection_probability;
      monotone = monotone && pd >= prev;
      prev = pd;
    }
  }
  o.require(boundary_err <= 1e-12, "feasibility boundary error " + num(boundary_err));
  o.require(monotone, "p_D not monotone");
  const double t = seconds_since(t0);
  o.require(t < 30.0, "runtime " + num(t) + " s");
  o.note("max KKT " + num(kkt) + ", budget rel err " + num(budget) + ", " + num(t) + " s");
  return o;
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome determinism() {
  Outcome o;
  const auto root = fs::temp_directory_path() / "jrc_acceptance_determinism";
  fs::remove_all(root);
  const fs::path scen = JRC_ACCEPT_SCENARIO_DIR;
  std::size_t files = 0;
  for (const auto& name : {"pmcw_single_target.json", "ofdma_single_target.json", "golay_three_path.json"}) {
    auto cfg = load_config(scen / name);
    cfg.trials = std::min<std::size_t>(cfg.trials, 8);
    const auto a = root / name / "a", b = root / name / "b", c = root / name / "c";
    run_scenario(cfg, a, 1);
    run_scenario(cfg, b, 1);
    run_scenario(cfg, c, 8);
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      const auto fname = e.path().filename();
      const auto ref = slurp(e.path());
      o.require(ref == slurp(b / fname), std::string(name) + "/" + fname.string() + " differs between repeats");
      o.require(ref == slurp(c / fname), std::string(name) + "/" + fname.string() + " differs between 1 and 8 workers");
      ++files;
    }
  }
  fs::remove_all(root);
  o.require(files >= 15, "only " + std::to_string(files) + " CSV files compared");
  o.note(std::to_string(files) + " CSV files byte-identical across 3 runs each");
  return o;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"golay identity and CEF ranging", golay_identity},
      {"range resolution at 4 GHz", range_resolution},
      {"oracle equivalence", oracle_equivalence},
      {"noiseless end-to-end", noiseless_end_to_end},
      {"RMSE trends over SNR", snr_trends},
      {"AF sidelobes and calibration", af_sidelobes},
      {"DMSE identity and objective affinity", dmse_identity},
      {"power allocation", allocation},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::printf("CRITERION %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
