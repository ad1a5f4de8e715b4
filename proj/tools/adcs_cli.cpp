// adcs: command-line driver for the attitude control simulations.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "adcs/config.hpp"
#include "adcs/errors.hpp"
#include "adcs/io.hpp"
#include "adcs/roles.hpp"
#include "adcs/sim.hpp"

namespace fs = std::filesystem;
using namespace adcs;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kBadConfig = 3,
  kMissingArtifact = 4,
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verbose = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config, "configuration file")->required();
  cmd->add_option("--seed", c.seed, "override the configured seed");
  cmd->add_option("--out", c.out, "output path");
  cmd->add_flag("-v,--verbose", c.verbose, "debug logging");
  cmd->add_flag("-q,--quiet", c.quiet, "warnings and errors only");
}

AppConfig load(const Common& c) {
  AppConfig cfg = load_app_config(c.config);
  if (c.seed) cfg.sim.seed = *c.seed;
  return cfg;
}

// Every output gets the effective configuration next to it.
void echo_config(const AppConfig& cfg, const std::string& out) {
  const fs::path p(out);
  const std::string echo = fs::is_directory(p) ? (p / "config.ini").string() : out + ".config.ini";
  to_ini(cfg).save(echo);
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

PidGains load_teacher_gains(const AppConfig& cfg) {
  PidGains g = load_gains(cfg.artifacts.gains).gains;
  g.mc_max = cfg.mc_max;
  return g;
}

std::shared_ptr<const RoleBundle> bundle(const AppConfig& cfg, Role role) {
  return std::make_shared<const RoleBundle>(load_bundle(cfg.artifacts.bundle(role)));
}

Bundles load_bundles_for(const AppConfig& cfg, ControllerKind controller, EstimatorKind estimator) {
  Bundles b;
  if (controller == ControllerKind::anfis) b.controller = bundle(cfg, Role::controller);
  if (controller == ControllerKind::integrated) b.integrated = bundle(cfg, Role::integrated);
  if (estimator == EstimatorKind::anfis && controller != ControllerKind::integrated)
    b.estimator = bundle(cfg, Role::estimator);
  return b;
}

std::string settle_text(const std::optional<double>& t) { return t ? fmt::format("{:.2f} s", *t) : "not settled"; }

// --- subcommands ------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string controller, estimator, modulator;
  std::optional<bool> noise;
};

int cmd_simulate(const SimulateArgs& a) {
  AppConfig cfg = load(a.common);
  if (!a.controller.empty()) cfg.sim.controller = controller_kind_from_string(a.controller);
  if (!a.estimator.empty()) cfg.sim.estimator = estimator_kind_from_string(a.estimator);
  if (!a.modulator.empty()) cfg.sim.modulator = modulator_kind_from_string(a.modulator);
  if (a.noise) cfg.sim.noise_enabled = *a.noise;
  if (cfg.sim.controller == ControllerKind::pid) cfg.sim.gains = load_teacher_gains(cfg);
  const Bundles bundles = load_bundles_for(cfg, cfg.sim.controller, cfg.sim.estimator);

  const RunRecord record = run_closed_loop(cfg.sim, bundles);
  const std::string out = a.common.out.empty() ? "run.csv" : a.common.out;
  ensure_parent(out);
  write_run_record_csv(record, out);
  echo_config(cfg, out);

  const Metrics m = compute_metrics(record);
  const char* axes[] = {"phi", "theta", "psi"};
  std::printf("wrote %zu samples to %s\n", record.steps.size(), out.c_str());
  for (int i = 0; i < 3; ++i)
    std::printf("%-6s fuel %.6f N*m*s  settling %s  final error %.6f deg\n", axes[i], m.fuel.per_axis[i],
                settle_text(m.settling[i]).c_str(), m.final_error_deg[i]);
  std::printf("total fuel %.6f N*m*s  cost J %.6f\n", m.fuel.total, m.cost);
  return kOk;
}

struct TuneArgs {
  Common common;
  std::optional<int> budget;
};

int cmd_tune(const TuneArgs& a) {
  AppConfig cfg = load(a.common);
  if (a.budget) cfg.tuning_budget = *a.budget;
  const PidGains initial = default_initial_gains(cfg.sim.inertia_nominal, cfg.mc_max);
  std::optional<GainBounds> bounds;
  if (cfg.gain_bound_factor > 0.0)
    bounds = tuning_bounds(initial, cfg.gain_bound_factor, cfg.integral_bound_fraction);
  const TuningResult r = tune_pid(cfg.sim, initial, cfg.tuning_budget, cfg.sim.seed, bounds);
  const std::string out = a.common.out.empty() ? cfg.artifacts.gains : a.common.out;
  ensure_parent(out);
  save_gains({r.tuning.gains, r.tuning.search.best_f, r.tuning.search.evaluations, cfg.sim.seed}, out);
  echo_config(cfg, out);
  std::printf("J: %.6f -> %.6f after %d evaluations (%d restarts); gains written to %s\n", r.initial_cost,
              r.tuning.search.best_f, r.tuning.search.evaluations, r.tuning.search.restarts, out.c_str());
  return kOk;
}

struct RoleArgs {
  Common common;
  std::string role = "all";
  std::string data;
};

std::vector<Role> roles_of(const std::string& name) {
  if (name == "all") return {Role::controller, Role::estimator, Role::integrated};
  return {role_from_string(name)};
}

int cmd_gen_data(const RoleArgs& a) {
  AppConfig cfg = load(a.common);
  const std::vector<Role> roles = roles_of(a.role);
  const std::string dir = a.common.out.empty() ? cfg.artifacts.data_dir : a.common.out;
  fs::create_directories(dir);
  const PidGains teacher = load_teacher_gains(cfg);
  const DataGenConfig data = cfg.data_config();
  std::vector<SimConfig> scenarios;
  for (Role role : roles) {
    Dataset d;
    if (role == Role::controller) {
      d = generate_controller_data(teacher, data, derive_seed(cfg.sim.seed, 1));
    } else {
      if (scenarios.empty()) scenarios = make_scenarios(data, teacher, derive_seed(cfg.sim.seed, 2));
      d = role == Role::estimator ? generate_estimator_data(scenarios) : generate_integrated_data(scenarios);
    }
    const std::string path = (fs::path(dir) / (to_string(role) + ".csv")).string();
    d.save_csv(path);
    std::printf("%s: %lld samples from %d runs -> %s\n", to_string(role).c_str(), static_cast<long long>(d.size()),
                d.run_count(), path.c_str());
  }
  echo_config(cfg, dir);
  return kOk;
}

int cmd_train(const RoleArgs& a) {
  AppConfig cfg = load(a.common);
  const std::vector<Role> roles = roles_of(a.role);
  if (roles.size() > 1 && !a.data.empty()) throw ConfigError("--data needs a single --role");
  for (Role role : roles) {
    const std::string data_path = a.data.empty() ? cfg.artifacts.dataset(role) : a.data;
    if (!fs::exists(data_path)) throw MissingArtifactError("dataset not found", data_path);
    const Dataset data = Dataset::load_csv(data_path, role);
    std::string out = cfg.artifacts.bundle(role);
    if (!a.common.out.empty())
      out = roles.size() > 1 ? (fs::path(a.common.out) / to_string(role)).string() : a.common.out;
    RoleTrainOptions options = cfg.train(role);
    options.train.seed = derive_seed(cfg.sim.seed, 3 + static_cast<std::uint64_t>(role));
    RoleBundle b = train_role(data, options, cfg.mc_max);
    save_bundle(b, out);
    echo_config(cfg, out);
    std::printf("%s bundle -> %s\n", to_string(role).c_str(), out.c_str());
  }
  return kOk;
}

int cmd_evaluate(const Common& a) {
  AppConfig cfg = load(a);
  const PidGains gains = load_teacher_gains(cfg);
  const Bundles bundles = load_bundles_for(cfg, ControllerKind::anfis, EstimatorKind::truth);
  const auto rows = evaluate_controllers(cfg.sim, cfg.inertia_uncertain, gains, bundles);
  const std::string out = a.out.empty() ? "evaluation.csv" : a.out;
  ensure_parent(out);
  write_evaluation_csv(rows, out);
  echo_config(cfg, out);
  std::fputs(format_evaluation_table(rows).c_str(), stdout);
  return kOk;
}

struct MonteCarloArgs {
  Common common;
  std::optional<int> runs;
  std::optional<int> workers;
};

int cmd_monte_carlo(const MonteCarloArgs& a) {
  AppConfig cfg = load(a.common);
  if (a.runs) cfg.monte_carlo.runs = *a.runs;
  MonteCarloConfig mc = cfg.monte_carlo_config();
  mc.workers = a.workers ? *a.workers : (mc.workers > 0 ? mc.workers : default_worker_count());
  if (mc.base.controller == ControllerKind::pid) mc.base.gains = load_teacher_gains(cfg);
  const Bundles bundles = load_bundles_for(cfg, mc.base.controller, mc.base.estimator);
  const MonteCarloReport report = monte_carlo(mc, bundles);
  const std::string out = a.common.out.empty() ? "monte_carlo.csv" : a.common.out;
  ensure_parent(out);
  write_monte_carlo_csv(report, out);
  echo_config(cfg, out);
  const Vec3& mean = report.running_mean.back();
  const Vec3& s3 = report.running_sigma3.back();
  std::printf("%d runs, %d failed; max |final error| %.6f deg\n", mc.runs, report.failed, report.max_abs_error_deg);
  std::printf("mean (phi, theta, psi) = (%.6f, %.6f, %.6f) deg, 3 sigma = (%.6f, %.6f, %.6f) deg\n", mean[0],
              mean[1], mean[2], s3[0], s3[1], s3[2]);
  return kOk;
}

const std::vector<std::string> kSubcommands{"simulate", "tune-pid", "gen-data", "train", "evaluate", "monte-carlo"};

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("adcs");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");

  if (argc > 1 && argv[1][0] != '-' &&
      std::find(kSubcommands.begin(), kSubcommands.end(), argv[1]) == kSubcommands.end()) {
    std::fprintf(stderr, "adcs: unknown subcommand '%s' (expected one of: simulate, tune-pid, gen-data, train, "
                 "evaluate, monte-carlo)\n", argv[1]);
    return kUsage;
  }

  CLI::App app{"Satellite attitude control simulation with PID and ANFIS controllers"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run one closed loop and write the run record CSV");
  add_common(simulate, sim.common);
  simulate->add_option("--controller", sim.controller, "pid | anfis | integrated");
  simulate->add_option("--estimator", sim.estimator, "truth | measured | anfis");
  simulate->add_option("--modulator", sim.modulator, "none | pwpf");
  simulate->add_flag("--noise,!--no-noise", sim.noise, "enable or disable sensor noise");

  TuneArgs tune;
  auto* tune_cmd = app.add_subcommand("tune-pid", "optimize PID gains and write a gains file");
  add_common(tune_cmd, tune.common);
  tune_cmd->add_option("--budget", tune.budget, "objective evaluations");

  RoleArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate training datasets");
  add_common(gen_cmd, gen.common);
  gen_cmd->add_option("--role", gen.role, "controller | estimator | integrated | all");

  RoleArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train ANFIS role bundles");
  add_common(train_cmd, tr.common);
  train_cmd->add_option("--role", tr.role, "controller | estimator | integrated | all");
  train_cmd->add_option("--data", tr.data, "dataset CSV (single role)");

  Common eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "compare PID and ANFIS controllers");
  add_common(eval_cmd, eval);

  MonteCarloArgs mc;
  auto* mc_cmd = app.add_subcommand("monte-carlo", "run the randomized campaign");
  add_common(mc_cmd, mc.common);
  mc_cmd->add_option("--runs", mc.runs, "number of runs");
  mc_cmd->add_option("--workers", mc.workers, "worker threads (default: ADCS_WORKERS or hardware threads)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  for (const Common* c : {&sim.common, &tune.common, &gen.common, &tr.common, &eval, &mc.common}) {
    if (c->config.empty()) continue;
    if (c->verbose) spdlog::set_level(spdlog::level::debug);
    if (c->quiet) spdlog::set_level(spdlog::level::warn);
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*tune_cmd) return cmd_tune(tune);
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(tr);
    if (*eval_cmd) return cmd_evaluate(eval);
    if (*mc_cmd) return cmd_monte_carlo(mc);
  } catch (const MissingArtifactError& e) {
    std::fprintf(stderr, "adcs: missing artifact: %s\n", e.path().c_str());
    std::fprintf(stderr, "  (%s)\n", e.what());
    return kMissingArtifact;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "adcs: invalid configuration: %s\n", e.what());
    return kBadConfig;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "adcs: malformed input: %s\n", e.what());
    return kBadConfig;
  } catch (const VersionError& e) {
    std::fprintf(stderr, "adcs: incompatible artifact: %s\n", e.what());
    return kMissingArtifact;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "adcs: error: %s\n", e.what());
    return kFailure;
  }
  return kUsage;
}
