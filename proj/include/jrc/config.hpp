// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "jrc/channel.hpp"
#include "jrc/estim.hpp"
#include "jrc/io.hpp"
#include "jrc/ofdma.hpp"
#include "jrc/pmcw.hpp"

namespace jrc {

inline constexpr int kConfigVersion = 1;

enum class Waveform { Pmcw, Ofdma, Golay };

inline const char* to_string(Waveform w) {
  switch (w) {
  case Waveform::Pmcw: return "pmcw";
  case Waveform::Ofdma: return "ofdma";
  case Waveform::Golay: return "golay";
  }
  return "?";
}

struct GolayConfig {
  int log2_length = 8;           // N = 2^log2_length
  std::size_t guard = 256;       // zero samples after each half; bounds the delay spread
  double sample_rate_hz = 1.76e9;
};

struct AfConfig {
  std::size_t oversample = 4;
  std::size_t max_lag = 512;        // samples
  std::size_t doppler_points = 65;
  double doppler_span_hz = 0.0;     // half-width; 0 selects 4 / waveform duration
};

struct SweepConfig {
  std::vector<double> snr_db{10.0};   // +inf means noiseless
  std::vector<double> mu_percent;     // empty: use the waveform's mu
  std::vector<double> weight{0.5};
};

struct SceneConfig {
  std::vector<Scatterer> scatterers;
  std::size_t random_targets = 0;     // on-grid targets redrawn every trial
};

struct ScenarioConfig {
  int version = kConfigVersion;
  Waveform waveform = Waveform::Pmcw;
  PmcwConfig pmcw{};
  std::string pmcw_code = "default";  // default | mls | random
  std::uint64_t code_seed = 1;
  OfdmaConfig ofdma{};
  GolayConfig golay{};
  SceneConfig scene{};
  EstimatorConfig estimator{};
  SweepConfig sweep{};
  AfConfig af{};
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> payload_seed;
  std::string output_dir = "out";

  std::uint64_t effective_payload_seed() const { return payload_seed.value_or(seed); }
};

namespace detail {

using nlohmann::json;

inline json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

inline const char* fading_name(FadingKind k) {
  switch (k) {
  case FadingKind::Swerling0: return "swerling0";
  case FadingKind::Swerling1_2: return "swerling1_2";
  case FadingKind::Swerling3_4: return "swerling3_4";
  case FadingKind::Rician: return "rician";
  }
  return "?";
}

// Reads one JSON object field by field and records every problem instead of
// stopping at the first.
class Reader {
public:
  Reader(const json& obj, std::string path, std::vector<std::string>& issues)
      : obj_(obj), path_(std::move(path)), issues_(issues) {
    if (!obj_.is_object()) issue(path_, "must be an object");
  }

  bool has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void issue(const std::string& where, const std::string& msg) { issues_.push_back(where + ": " + msg); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return issue(where(key), "must be a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return issue(where(key), "must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) out = static_cast<T>(v.get<std::uint64_t>());
        else if (v.get<std::int64_t>() < 0) return issue(where(key), "must be non-negative");
        else out = static_cast<T>(v.get<std::int64_t>());
      } else {
        out = static_cast<T>(v.get<std::int64_t>());
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      out = to_double(v, where(key));
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return issue(where(key), "must be a string");
      out = v.get<std::string>();
    }
  }

  double to_double(const json& v, const std::string& w) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    issue(w, "must be a number");
    return 0.0;
  }

  void get_doubles(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_array()) return issue(where(key), "must be an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(to_double(v[i], where(key) + "[" + std::to_string(i) + "]"));
  }

  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [k, _] : obj_.items())
      if (!seen_.count(k)) issue(where(k), "unknown field");
  }

  const std::string& path() const { return path_; }

private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& issues_;
  std::set<std::string> seen_;
};

inline void check(bool ok, std::vector<std::string>& issues, const std::string& where, const std::string& msg) {
  if (!ok) issues.push_back(where + ": " + msg);
}

inline void read_geometry(Reader& r, ArrayGeometry& g) {
  r.get("n_tx", g.n_tx);
  r.get("n_rx", g.n_rx);
  r.get("spacing_over_lambda", g.spacing_over_lambda);
}

inline void read_pmcw(const json& j, ScenarioConfig& c, std::vector<std::string>& issues) {
  Reader r(j, "pmcw", issues);
  auto& p = c.pmcw;
  r.get("code_length", p.code_length);
  r.get("frames", p.frames);
  r.get("chip_duration_s", p.chip_duration);
  r.get("carrier_hz", p.carrier_hz);
  r.get("mu_percent", p.mu_percent);
  read_geometry(r, p.geometry);
  r.get("intra_block_doppler", p.intra_block_doppler);
  std::string policy = p.delay_policy == DelayPolicy::Round ? "round" : "reject";
  r.get("delay_policy", policy);
  if (policy == "round") p.delay_policy = DelayPolicy::Round;
  else if (policy == "reject") p.delay_policy = DelayPolicy::Reject;
  else r.issue("pmcw.delay_policy", "must be \"reject\" or \"round\", got \"" + policy + "\"");
  r.get("dpsk_order", p.dpsk_order);
  r.get("code", c.pmcw_code);
  r.get("code_seed", c.code_seed);
  r.finish();
}

inline void read_ofdma(const json& j, OfdmaConfig& o, std::vector<std::string>& issues) {
  Reader r(j, "ofdma", issues);
  r.get("subcarriers", o.subcarriers);
  r.get("symbols", o.symbols);
  r.get("spacing_hz", o.spacing_hz);
  r.get("cp_length", o.cp_length);
  r.get("carrier_hz", o.carrier_hz);
  r.get("mu_percent", o.mu_percent);
  read_geometry(r, o.geometry);
  r.get("dpsk_order", o.dpsk_order);
  r.get("pilot_seed", o.pilot_seed);
  r.finish();
}

inline void read_scatterer(const json& j, const std::string& path, Scatterer& s, std::vector<std::string>& issues) {
  Reader r(j, path, issues);
  r.get("delay_s", s.delay);
  r.get("doppler_hz", s.doppler);
  r.get("velocity_mps", s.velocity);
  r.get("arrival_angle_rad", s.arrival_angle);
  r.get("departure_angle_rad", s.departure_angle);
  r.get("rcs_m2", s.rcs);
  if (r.has("gain")) {
    const auto& g = r.raw("gain");
    if (g.is_array() && g.size() == 2 && g[0].is_number() && g[1].is_number())
      s.gain = {g[0].get<double>(), g[1].get<double>()};
    else
      r.issue(path + ".gain", "must be [re, im]");
  }
  std::string fading = fading_name(s.fading.kind);
  r.get("fading", fading);
  if (fading == "swerling0") s.fading.kind = FadingKind::Swerling0;
  else if (fading == "swerling1_2") s.fading.kind = FadingKind::Swerling1_2;
  else if (fading == "swerling3_4") s.fading.kind = FadingKind::Swerling3_4;
  else if (fading == "rician") s.fading.kind = FadingKind::Rician;
  else r.issue(path + ".fading", "must be one of swerling0, swerling1_2, swerling3_4, rician");
  double k_db = 10.0 * std::log10(s.fading.rician_k);
  r.get("rician_k_db", k_db);
  s.fading.rician_k = std::pow(10.0, k_db / 10.0);
  r.finish();
}

inline void validate_into(const ScenarioConfig& c, std::vector<std::string>& issues) {
  check(c.version == kConfigVersion, issues, "version", "unsupported version " + std::to_string(c.version));
  check(c.trials >= 1, issues, "trials", "must be >= 1");
  check(!c.output_dir.empty(), issues, "output_dir", "must not be empty");
  const auto& p = c.pmcw;
  check(p.code_length >= 1, issues, "pmcw.code_length", "must be >= 1");
  check(p.frames >= 1, issues, "pmcw.frames", "must be >= 1");
  check(p.chip_duration > 0.0, issues, "pmcw.chip_duration_s", "must be > 0");
  check(p.carrier_hz > 0.0, issues, "pmcw.carrier_hz", "must be > 0");
  check(p.mu_percent >= 0.0 && p.mu_percent <= 100.0, issues, "pmcw.mu_percent", "must lie in [0, 100]");
  check(p.geometry.n_tx >= 1 && p.geometry.n_rx >= 1, issues, "pmcw.n_tx/n_rx", "must be >= 1");
  check(p.geometry.spacing_over_lambda > 0.0, issues, "pmcw.spacing_over_lambda", "must be > 0");
  check(p.dpsk_order == 2 || p.dpsk_order == 4, issues, "pmcw.dpsk_order", "must be 2 or 4");
  check(c.pmcw_code == "default" || c.pmcw_code == "mls" || c.pmcw_code == "random", issues, "pmcw.code",
        "must be default, mls or random");
  const auto& o = c.ofdma;
  check(o.subcarriers >= 1, issues, "ofdma.subcarriers", "must be >= 1");
  check(o.symbols >= 2, issues, "ofdma.symbols", "must be >= 2");
  check(o.spacing_hz > 0.0, issues, "ofdma.spacing_hz", "must be > 0");
  check(o.carrier_hz > 0.0, issues, "ofdma.carrier_hz", "must be > 0");
  check(o.mu_percent >= 0.0 && o.mu_percent <= 100.0, issues, "ofdma.mu_percent", "must lie in [0, 100]");
  check(o.geometry.n_tx >= 1 && o.geometry.n_rx >= 1, issues, "ofdma.n_tx/n_rx", "must be >= 1");
  check(o.geometry.spacing_over_lambda == 0.5, issues, "ofdma.spacing_over_lambda", "must be 0.5");
  check(o.dpsk_order == 2 || o.dpsk_order == 4, issues, "ofdma.dpsk_order", "must be 2 or 4");
  check(c.golay.log2_length >= 1 && c.golay.log2_length <= 16, issues, "golay.log2_length", "must lie in [1, 16]");
  check(c.golay.sample_rate_hz > 0.0, issues, "golay.sample_rate_hz", "must be > 0");
  const auto& e = c.estimator;
  check(e.range_pad >= 1, issues, "estimator.range_pad", "must be >= 1");
  check(e.doppler_pad >= 1, issues, "estimator.doppler_pad", "must be >= 1");
  check(e.angle_pad >= 1, issues, "estimator.angle_pad", "must be >= 1");
  check(e.refine_factor >= 1, issues, "estimator.refine_factor", "must be >= 1");
  check(e.threshold_db < 0.0, issues, "estimator.threshold_db", "must be < 0");
  check(e.max_targets >= 1, issues, "estimator.max_targets", "must be >= 1");
  check(!c.sweep.snr_db.empty(), issues, "sweep.snr_db", "must not be empty");
  for (std::size_t i = 0; i < c.sweep.mu_percent.size(); ++i)
    check(c.sweep.mu_percent[i] >= 0.0 && c.sweep.mu_percent[i] <= 100.0, issues,
          "sweep.mu_percent[" + std::to_string(i) + "]", "must lie in [0, 100]");
  for (std::size_t i = 0; i < c.sweep.weight.size(); ++i)
    check(c.sweep.weight[i] >= 0.0 && c.sweep.weight[i] <= 1.0, issues, "sweep.weight[" + std::to_string(i) + "]",
          "must lie in [0, 1]");
  check(c.af.oversample >= 1, issues, "af.oversample", "must be >= 1");
  check(c.af.doppler_points >= 1, issues, "af.doppler_points", "must be >= 1");
  check(c.af.doppler_span_hz >= 0.0, issues, "af.doppler_span_hz", "must be >= 0");
  check(!c.scene.scatterers.empty() || c.scene.random_targets > 0, issues, "scene",
        "needs scatterers or random_targets > 0");
  for (std::size_t q = 0; q < c.scene.scatterers.size(); ++q) {
    const auto& s = c.scene.scatterers[q];
    const auto w = "scene.scatterers[" + std::to_string(q) + "]";
    check(s.delay >= 0.0, issues, w + ".delay_s", "must be >= 0");
    check(std::abs(s.arrival_angle) <= kPi / 2, issues, w + ".arrival_angle_rad", "must lie in [-pi/2, pi/2]");
    check(s.rcs >= 0.0, issues, w + ".rcs_m2", "must be >= 0");
    check(std::abs(s.gain) > 0.0, issues, w + ".gain", "must be non-zero");
  }
}

} // namespace detail

/// Every invariant violation, one "field: problem" line each.
inline std::vector<std::string> validation_issues(const ScenarioConfig& c) {
  std::vector<std::string> issues;
  detail::validate_into(c, issues);
  return issues;
}

inline std::string join_issues(const std::vector<std::string>& issues) {
  std::string msg = "invalid configuration:";
  for (const auto& i : issues) msg += "\n  " + i;
  return msg;
}

inline void validate(const ScenarioConfig& c) {
  const auto issues = validation_issues(c);
  require(issues.empty(), ErrorCode::Config, join_issues(issues));
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using detail::Reader;
  std::vector<std::string> issues;
  ScenarioConfig c;
  Reader r(j, "", issues);
  if (!r.has("version")) issues.emplace_back("version: required field is missing");
  r.get("version", c.version);
  std::string wf = "pmcw";
  if (!r.has("waveform")) issues.emplace_back("waveform: required field is missing");
  r.get("waveform", wf);
  if (wf == "pmcw") c.waveform = Waveform::Pmcw;
  else if (wf == "ofdma") c.waveform = Waveform::Ofdma;
  else if (wf == "golay") c.waveform = Waveform::Golay;
  else issues.push_back("waveform: must be pmcw, ofdma or golay, got \"" + wf + "\"");
  if (r.has("pmcw")) detail::read_pmcw(r.raw("pmcw"), c, issues);
  if (r.has("ofdma")) detail::read_ofdma(r.raw("ofdma"), c.ofdma, issues);
  if (r.has("golay")) {
    Reader g(r.raw("golay"), "golay", issues);
    g.get("log2_length", c.golay.log2_length);
    g.get("guard", c.golay.guard);
    g.get("sample_rate_hz", c.golay.sample_rate_hz);
    g.finish();
  }
  if (r.has("scene")) {
    Reader s(r.raw("scene"), "scene", issues);
    if (s.has("scatterers")) {
      const auto& arr = s.raw("scatterers");
      if (!arr.is_array()) {
        issues.emplace_back("scene.scatterers: must be an array");
      } else {
        for (std::size_t q = 0; q < arr.size(); ++q) {
          Scatterer sc;
          detail::read_scatterer(arr[q], "scene.scatterers[" + std::to_string(q) + "]", sc, issues);
          c.scene.scatterers.push_back(sc);
        }
      }
    }
    s.get("random_targets", c.scene.random_targets);
    s.finish();
  }
  if (r.has("estimator")) {
    Reader e(r.raw("estimator"), "estimator", issues);
    e.get("range_pad", c.estimator.range_pad);
    e.get("doppler_pad", c.estimator.doppler_pad);
    e.get("angle_pad", c.estimator.angle_pad);
    e.get("threshold_db", c.estimator.threshold_db);
    e.get("max_targets", c.estimator.max_targets);
    e.get("min_magnitude", c.estimator.min_magnitude);
    e.get("refine_factor", c.estimator.refine_factor);
    e.finish();
  }
  if (r.has("sweep")) {
    Reader s(r.raw("sweep"), "sweep", issues);
    s.get_doubles("snr_db", c.sweep.snr_db);
    s.get_doubles("mu_percent", c.sweep.mu_percent);
    s.get_doubles("weight", c.sweep.weight);
    s.finish();
  }
  if (r.has("af")) {
    Reader a(r.raw("af"), "af", issues);
    a.get("oversample", c.af.oversample);
    a.get("max_lag", c.af.max_lag);
    a.get("doppler_points", c.af.doppler_points);
    a.get("doppler_span_hz", c.af.doppler_span_hz);
    a.finish();
  }
  r.get("trials", c.trials);
  r.get("seed", c.seed);
  if (r.has("payload_seed")) {
    std::uint64_t ps = 0;
    r.get("payload_seed", ps);
    c.payload_seed = ps;
  }
  r.get("output_dir", c.output_dir);
  r.finish();
  detail::validate_into(c, issues);
  require(issues.empty(), ErrorCode::Config, join_issues(issues));
  return c;
}

/// Canonical form: every field present, defaults filled in.
inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  const auto geometry = [](json& j, const ArrayGeometry& g) {
    j["n_tx"] = g.n_tx;
    j["n_rx"] = g.n_rx;
    j["spacing_over_lambda"] = g.spacing_over_lambda;
  };
  json j;
  j["version"] = c.version;
  j["waveform"] = to_string(c.waveform);
  json p;
  p["code_length"] = c.pmcw.code_length;
  p["frames"] = c.pmcw.frames;
  p["chip_duration_s"] = c.pmcw.chip_duration;
  p["carrier_hz"] = c.pmcw.carrier_hz;
  p["mu_percent"] = c.pmcw.mu_percent;
  geometry(p, c.pmcw.geometry);
  p["intra_block_doppler"] = c.pmcw.intra_block_doppler;
  p["delay_policy"] = c.pmcw.delay_policy == DelayPolicy::Round ? "round" : "reject";
  p["dpsk_order"] = c.pmcw.dpsk_order;
  p["code"] = c.pmcw_code;
  p["code_seed"] = c.code_seed;
  j["pmcw"] = p;
  json o;
  o["subcarriers"] = c.ofdma.subcarriers;
  o["symbols"] = c.ofdma.symbols;
  o["spacing_hz"] = c.ofdma.spacing_hz;
  o["cp_length"] = c.ofdma.cp_length;
  o["carrier_hz"] = c.ofdma.carrier_hz;
  o["mu_percent"] = c.ofdma.mu_percent;
  geometry(o, c.ofdma.geometry);
  o["dpsk_order"] = c.ofdma.dpsk_order;
  o["pilot_seed"] = c.ofdma.pilot_seed;
  j["ofdma"] = o;
  j["golay"] = {{"log2_length", c.golay.log2_length}, {"guard", c.golay.guard}, {"sample_rate_hz", c.golay.sample_rate_hz}};
  json sc = json::array();
  for (const auto& s : c.scene.scatterers) {
    sc.push_back({{"delay_s", s.delay},
                  {"doppler_hz", s.doppler},
                  {"velocity_mps", s.velocity},
                  {"arrival_angle_rad", s.arrival_angle},
                  {"departure_angle_rad", s.departure_angle},
                  {"rcs_m2", s.rcs},
                  {"gain", {s.gain.real(), s.gain.imag()}},
                  {"fading", detail::fading_name(s.fading.kind)},
                  {"rician_k_db", 10.0 * std::log10(s.fading.rician_k)}});
  }
  j["scene"] = {{"scatterers", sc}, {"random_targets", c.scene.random_targets}};
  j["estimator"] = {{"range_pad", c.estimator.range_pad},         {"doppler_pad", c.estimator.doppler_pad},
                    {"angle_pad", c.estimator.angle_pad},         {"threshold_db", c.estimator.threshold_db},
                    {"max_targets", c.estimator.max_targets},     {"min_magnitude", c.estimator.min_magnitude},
                    {"refine_factor", c.estimator.refine_factor}};
  json snr = json::array();
  for (double v : c.sweep.snr_db) snr.push_back(detail::number_or_inf(v));
  j["sweep"] = {{"snr_db", snr}, {"mu_percent", c.sweep.mu_percent}, {"weight", c.sweep.weight}};
  j["af"] = {{"oversample", c.af.oversample},
             {"max_lag", c.af.max_lag},
             {"doppler_points", c.af.doppler_points},
             {"doppler_span_hz", c.af.doppler_span_hz}};
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  if (c.payload_seed) j["payload_seed"] = *c.payload_seed;
  j["output_dir"] = c.output_dir;
  return j;
}

inline std::string canonical_json(const ScenarioConfig& c) { return config_to_json(c).dump(2) + "\n"; }

/// FNV-1a over the canonical text.
inline std::uint64_t config_hash(const ScenarioConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : canonical_json(c)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::Config,
                source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " + e.what());
  }
  return config_from_json(j);
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_text(path), path.string());
}

inline void save_config(const std::filesystem::path& path, const ScenarioConfig& c) {
  auto f = io::open_out(path);
  f << canonical_json(c);
  require(f.good(), ErrorCode::Io, "write failed on " + path.string());
}

} // namespace jrc
