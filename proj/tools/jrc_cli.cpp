// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "jrc/jrc.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::string out_dir;
};

std::filesystem::path resolve_out_dir(const Overrides& o, const std::string& from_config) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("JRC_OUT_DIR"); env && *env) return env;
  return from_config;
}

jrc::ScenarioConfig load_with_overrides(const std::string& path, const Overrides& o) {
  auto cfg = jrc::load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  jrc::validate(cfg);
  return cfg;
}

void add_common(CLI::App* cmd, Overrides& o, bool with_trials) {
  cmd->add_option("--seed", o.seed, "Master seed (overrides the config)");
  if (with_trials) cmd->add_option("--trials", o.trials, "Monte-Carlo trials per sweep point")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", o.out_dir, "Output directory (overrides JRC_OUT_DIR and the config)");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint radar-communications waveform simulator"};
  app.require_subcommand(1);

  Overrides run_o, af_o, alloc_o;
  std::string run_cfg, af_cfg, validate_cfg, problem_path, method = "waterfill";
  std::optional<double> total_power, alpha;

  auto* run = app.add_subcommand("run", "Monte-Carlo sweep: rmse/ber/tradeoff CSVs, AF files and report.json");
  run->add_option("config", run_cfg, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  add_common(run, run_o, true);

  auto* af = app.add_subcommand("af", "Ambiguity-function surface and zero-delay/zero-Doppler cuts");
  af->add_option("config", af_cfg, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  add_common(af, af_o, false);

  auto* alloc = app.add_subcommand("alloc", "Subcarrier power allocation from a problem CSV");
  alloc->add_option("problem", problem_path, "Problem CSV")->required()->check(CLI::ExistingFile);
  alloc->add_option("--method", method, "waterfill or np")->check(CLI::IsMember({"waterfill", "np"}));
  alloc->add_option("--total-power", total_power, "Budget P_T in W (overrides the file)");
  alloc->add_option("--alpha", alpha, "False-alarm cap (overrides the file)");
  alloc->add_option("--out-dir", alloc_o.out_dir, "Output directory (overrides JRC_OUT_DIR)");

  auto* val = app.add_subcommand("validate", "Check a config and print its canonical form with defaults");
  val->add_option("config", validate_cfg, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = load_with_overrides(run_cfg, run_o);
      const auto dir = resolve_out_dir(run_o, cfg.output_dir);
      const auto rep = jrc::run_scenario(cfg, dir, run_o.workers);
      std::cout << "wrote " << dir.string() << " (" << rep.points.size() << " sweep points, failure rate "
                << jrc::io::format_double(rep.failure_rate) << ")\n";
      for (const auto& p : rep.points)
        if (!p.failures.empty())
          std::cerr << "mu=" << p.mu << " snr=" << p.snr_db << ": " << p.failed_trials
                    << " failed trials, first: " << p.failures.front() << "\n";
    } else if (*af) {
      const auto cfg = load_with_overrides(af_cfg, af_o);
      const auto dir = resolve_out_dir(af_o, cfg.output_dir);
      const auto s = jrc::export_af(cfg, dir, af_o.workers);
      std::cout << "wrote " << dir.string() << " (origin " << jrc::io::format_double(s.magnitude(s.zero_delay_index(), s.zero_doppler_index()))
                << ")\n";
    } else if (*alloc) {
      auto prob = jrc::read_problem_csv(problem_path);
      if (total_power) prob.total_power = *total_power;
      if (alpha) prob.alpha = *alpha;
      const auto dir = resolve_out_dir(alloc_o, "out");
      const auto r = jrc::export_alloc(prob, method == "np" ? jrc::AllocMethod::NeymanPearson : jrc::AllocMethod::Waterfill, dir);
      std::cout << "wrote " << (dir / "alloc.csv").string() << (r.feasible ? "" : " (infeasible)") << "\n";
      if (!r.feasible) std::cerr << "rate floors exceed the budget by " << jrc::io::format_double(r.deficit) << " W\n";
    } else if (*val) {
      const auto cfg = jrc::load_config(validate_cfg);
      std::cout << jrc::canonical_json(cfg);
    }
  } catch (const jrc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == jrc::ErrorCode::Config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
