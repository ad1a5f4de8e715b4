#include "adcs/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <thread>
#include <tuple>

#include <spdlog/spdlog.h>

#include "adcs/errors.hpp"
#include "adcs/io.hpp"
#include "adcs/roles.hpp"

namespace adcs {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& s, const std::array<std::pair<const char*, Enum>, N>& table, const char* what) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  std::string options;
  for (const auto& [name, value] : table) options += std::string(options.empty() ? "" : ", ") + name;
  throw ConfigError("unknown " + std::string(what) + " '" + s + "' (expected one of: " + options + ")");
}

constexpr std::array<std::pair<const char*, ControllerKind>, 3> kControllers{
    {{"pid", ControllerKind::pid}, {"anfis", ControllerKind::anfis}, {"integrated", ControllerKind::integrated}}};
constexpr std::array<std::pair<const char*, EstimatorKind>, 3> kEstimators{
    {{"truth", EstimatorKind::truth}, {"measured", EstimatorKind::measured}, {"anfis", EstimatorKind::anfis}}};
constexpr std::array<std::pair<const char*, ModulatorKind>, 2> kModulators{
    {{"none", ModulatorKind::none}, {"pwpf", ModulatorKind::pwpf}}};
constexpr std::array<std::pair<const char*, DisturbanceKind>, 3> kDisturbances{
    {{"none", DisturbanceKind::none}, {"constant", DisturbanceKind::constant}, {"sinusoidal", DisturbanceKind::sinusoidal}}};

template <typename Enum, std::size_t N>
std::string enum_name(Enum v, const std::array<std::pair<const char*, Enum>, N>& table) {
  for (const auto& [name, value] : table)
    if (v == value) return name;
  return "?";
}

const RoleBundle& require(const std::shared_ptr<const RoleBundle>& b, const char* what) {
  if (!b) throw MissingArtifactError(std::string("no ") + what + " bundle loaded", what);
  return *b;
}

}  // namespace

std::string to_string(ControllerKind k) { return enum_name(k, kControllers); }
std::string to_string(EstimatorKind k) { return enum_name(k, kEstimators); }
std::string to_string(ModulatorKind k) { return enum_name(k, kModulators); }
std::string to_string(DisturbanceKind k) { return enum_name(k, kDisturbances); }
ControllerKind controller_kind_from_string(const std::string& s) { return parse_enum(s, kControllers, "controller"); }
EstimatorKind estimator_kind_from_string(const std::string& s) { return parse_enum(s, kEstimators, "estimator"); }
ModulatorKind modulator_kind_from_string(const std::string& s) { return parse_enum(s, kModulators, "modulator"); }
DisturbanceKind disturbance_kind_from_string(const std::string& s) {
  return parse_enum(s, kDisturbances, "disturbance");
}

Torque Disturbance::at(double t) const {
  switch (kind) {
    case DisturbanceKind::constant:
      return amplitude;
    case DisturbanceKind::sinusoidal:
      return amplitude * std::sin(2.0 * std::numbers::pi * frequency_hz * t);
    default:
      return Torque::Zero();
  }
}

int SimConfig::steps() const { return static_cast<int>(std::lround(duration / dt)); }

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(duration >= dt)) throw ConfigError("duration must be at least one step");
  if (!initial_rate.allFinite()) throw ConfigError("initial rates must be finite");
  noise.validate();
  geo.validate();
  epoch.validate();
  gains.validate();
  if (modulator == ModulatorKind::pwpf) pwpf.validate();
}

Quaternion attitude_error(const Quaternion& q, const Quaternion& qc) {
  const Quaternion e = quaternion_error(q, qc);
  return e.q4 < 0.0 ? -e : e;
}

RunRecord run_closed_loop(const SimConfig& cfg, const Bundles& bundles, const RunOptions& options) {
  cfg.validate();
  const RoleBundle* controller_bundle = nullptr;
  const RoleBundle* estimator_bundle = nullptr;
  if (cfg.controller == ControllerKind::anfis) controller_bundle = &require(bundles.controller, "controller");
  if (cfg.controller == ControllerKind::integrated) controller_bundle = &require(bundles.integrated, "integrated");
  if (cfg.estimator == EstimatorKind::anfis && cfg.controller != ControllerKind::integrated)
    estimator_bundle = &require(bundles.estimator, "estimator");

  Rng rng(cfg.seed);
  const SensorSuite sensors(cfg.geo, cfg.epoch, cfg.effective_noise());
  const bool need_readings = options.record_readings || cfg.controller == ControllerKind::integrated ||
                             cfg.estimator != EstimatorKind::truth;

  RunRecord record;
  record.config = cfg;
  const int n = cfg.steps();
  record.steps.reserve(n + 1);
  if (options.record_readings) record.readings.reserve(n + 1);

  BodyState state{euler_to_quat(cfg.initial_attitude), cfg.initial_rate};
  const Quaternion qc = euler_to_quat(cfg.desired);
  PidController pid(cfg.gains);
  std::optional<PwpfModulator> pwpf;
  if (cfg.modulator == ModulatorKind::pwpf) pwpf.emplace(cfg.pwpf);

  for (int k = 0; k <= n; ++k) {
    const double t = k * cfg.dt;
    StepRecord step;
    step.t = t;
    step.truth = state;
    step.euler = quat_to_euler(state.q);

    SensorReading reading;
    if (need_readings) reading = sensors.sample(state, t, rng);

    if (cfg.controller == ControllerKind::integrated) {
      step.qe = attitude_error(state.q, qc).vector_part();
      step.command = anfis_integrated(*controller_bundle, reading);
      step.est_q = Quaternion{NAN, NAN, NAN, NAN};
    } else {
      switch (cfg.estimator) {
        case EstimatorKind::truth:
          step.est_q = state.q;
          step.est_w = state.w;
          break;
        case EstimatorKind::measured:
          step.est_q = triad_attitude(reading);
          step.est_w = reading.gyro;
          break;
        case EstimatorKind::anfis: {
          const StateEstimate est = anfis_estimate(*estimator_bundle, reading);
          step.est_q = est.q;
          step.est_w = est.w;
          break;
        }
      }
      step.qe = attitude_error(step.est_q, qc).vector_part();
      step.command = cfg.controller == ControllerKind::pid
                         ? pid.update(step.qe, step.est_w, cfg.dt)
                         : anfis_control(*controller_bundle, step.qe, step.est_w);
    }
    step.applied = pwpf ? pwpf->step(step.command, cfg.dt) : step.command;

    record.steps.push_back(step);
    if (options.record_readings) record.readings.push_back(reading);
    if (k < n) state = integrate_step(state, cfg.inertia_true, step.applied, cfg.disturbance.at(t), cfg.dt);
  }
  return record;
}

// --- metrics ------------------------------------------------------------------

FuelConsumption fuel_consumption(const RunRecord& record) {
  if (record.steps.empty()) throw DomainError("empty run record");
  FuelConsumption f;
  for (std::size_t k = 0; k + 1 < record.steps.size(); ++k)
    f.per_axis += record.steps[k].applied.cwiseAbs() * record.dt();
  f.total = f.per_axis.sum();
  return f;
}

double trajectory_cost(const RunRecord& record) {
  if (record.steps.empty()) throw DomainError("empty run record");
  CostValue cost;
  for (std::size_t k = 0; k + 1 < record.steps.size(); ++k)
    cost = accumulate_cost(cost, record.steps[k].qe, record.steps[k].truth.w, record.dt());
  return cost.j;
}

std::optional<double> settling_time(const std::vector<double>& t, const std::vector<double>& err, double band) {
  if (t.empty() || t.size() != err.size()) throw DimensionError("settling time needs matching, nonempty series");
  std::size_t k = err.size();
  while (k > 0 && std::abs(err[k - 1]) <= band) --k;
  if (k == err.size()) return std::nullopt;
  return t[k];
}

std::array<std::optional<double>, 3> settling_time(const RunRecord& record, double band_fraction) {
  if (record.steps.empty()) throw DomainError("empty run record");
  std::array<std::optional<double>, 3> out;
  std::vector<double> t(record.steps.size()), err(record.steps.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t k = 0; k < record.steps.size(); ++k) {
      t[k] = record.steps[k].t;
      err[k] = wrap_degrees(record.steps[k].euler[axis] - record.config.desired[axis]);
    }
    const double initial = std::abs(err.front());
    out[axis] = initial == 0.0 ? std::optional<double>(record.steps.front().t)
                               : settling_time(t, err, band_fraction * initial);
  }
  return out;
}

Vec3 final_euler_error(const RunRecord& record, bool signed_error) {
  if (record.steps.empty()) throw DomainError("empty run record");
  const EulerAngles& e = record.steps.back().euler;
  Vec3 out;
  for (int axis = 0; axis < 3; ++axis) {
    out[axis] = wrap_degrees(e[axis] - record.config.desired[axis]);
    if (!signed_error) out[axis] = std::abs(out[axis]);
  }
  return out;
}

Metrics compute_metrics(const RunRecord& record) {
  return {fuel_consumption(record), settling_time(record, 0.01), final_euler_error(record), trajectory_cost(record)};
}

// --- persistence ----------------------------------------------------------------

const std::vector<std::string>& run_record_columns() {
  static const std::vector<std::string> cols{
      "t",      "q1",     "q2",     "q3",     "q4",       "w1",       "w2",       "w3",     "qe1",
      "qe2",    "qe3",    "mc1",    "mc2",    "mc3",      "applied1", "applied2", "applied3", "phi",
      "theta",  "psi",    "est_q1", "est_q2", "est_q3",   "est_q4",   "est_w1",   "est_w2", "est_w3"};
  return cols;
}

void write_run_record_csv(const RunRecord& record, const std::string& path) {
  CsvWriter out(path, run_record_columns());
  std::vector<double> row;
  for (const StepRecord& s : record.steps) {
    row = {s.t,          s.truth.q.q1, s.truth.q.q2, s.truth.q.q3, s.truth.q.q4, s.truth.w[0], s.truth.w[1],
           s.truth.w[2], s.qe[0],      s.qe[1],      s.qe[2],      s.command[0], s.command[1], s.command[2],
           s.applied[0], s.applied[1], s.applied[2], s.euler.phi,  s.euler.theta, s.euler.psi, s.est_q.q1,
           s.est_q.q2,   s.est_q.q3,   s.est_q.q4,   s.est_w[0],   s.est_w[1],   s.est_w[2]};
    out.row(row);
  }
}

RunRecord read_run_record_csv(const std::string& path, double dt) {
  const CsvTable table = read_csv(path);
  if (table.header != run_record_columns()) throw ParseError("unexpected run record columns in " + path);
  RunRecord record;
  record.config.dt = dt;
  for (const auto& r : table.rows) {
    StepRecord s;
    s.t = r[0];
    s.truth.q = {r[1], r[2], r[3], r[4]};
    s.truth.w = {r[5], r[6], r[7]};
    s.qe = {r[8], r[9], r[10]};
    s.command = {r[11], r[12], r[13]};
    s.applied = {r[14], r[15], r[16]};
    s.euler = {r[17], r[18], r[19]};
    s.est_q = {r[20], r[21], r[22], r[23]};
    s.est_w = {r[24], r[25], r[26]};
    record.steps.push_back(s);
  }
  return record;
}

// --- PID tuning -------------------------------------------------------------------

double tuning_cost(const PidGains& gains, const SimConfig& scenario) {
  SimConfig cfg = scenario;
  cfg.gains = gains;
  cfg.controller = ControllerKind::pid;
  cfg.estimator = EstimatorKind::truth;
  cfg.modulator = ModulatorKind::none;
  cfg.noise_enabled = false;
  cfg.disturbance = {};
  cfg.inertia_true = cfg.inertia_nominal;
  try {
    const double j = trajectory_cost(run_closed_loop(cfg));
    return std::isfinite(j) ? j : std::numeric_limits<double>::infinity();
  } catch (const DivergedError&) {
    return std::numeric_limits<double>::infinity();
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

PidGains default_initial_gains(const InertiaTensor& inertia, double mc_max) {
  // Small-angle plant: I θ̈ = Kp θ/2 + Kd θ̇, since q_e ≈ θ/2.
  constexpr double natural_frequency = 0.8;  // rad/s
  constexpr double damping = 0.9;
  PidGains g;
  g.kp = -2.0 * natural_frequency * natural_frequency * inertia.moments();
  g.kd = -2.0 * damping * natural_frequency * inertia.moments();
  g.mc_max = mc_max;
  return g;
}

GainBounds tuning_bounds(const PidGains& initial, double factor, double integral_fraction) {
  if (!(factor >= 1.0) || !(integral_fraction >= 0.0)) throw DomainError("invalid gain bounds");
  GainBounds b{initial, initial};
  for (int i = 0; i < 3; ++i) {
    for (auto [k, lo, hi] : {std::tuple{initial.kp[i], &b.lower.kp[i], &b.upper.kp[i]},
                             std::tuple{initial.kd[i], &b.lower.kd[i], &b.upper.kd[i]}}) {
      *lo = std::min(factor * k, 0.0);
      *hi = std::max(factor * k, 0.0);
    }
    const double span = integral_fraction * std::abs(initial.kp[i]);
    b.lower.kq[i] = initial.kq[i] - span;
    b.upper.kq[i] = initial.kq[i] + span;
    b.lower.kw[i] = initial.kw[i] - span;
    b.upper.kw[i] = initial.kw[i] + span;
  }
  return b;
}

TuningResult tune_pid(const SimConfig& scenario, const PidGains& initial, int budget, std::uint64_t seed,
                      const std::optional<GainBounds>& bounds) {
  TuningResult out;
  out.initial_cost = tuning_cost(initial, scenario);
  out.tuning =
      optimize_gains([&](const PidGains& g) { return tuning_cost(g, scenario); }, initial, budget, seed, bounds);
  return out;
}

// --- Monte Carlo ----------------------------------------------------------------

void MonteCarloConfig::validate() const {
  if (runs < 1) throw ConfigError("Monte Carlo needs at least one run");
  if (!(angle_range_deg >= 0.0) || !(rate_range >= 0.0) || !(inertia_range >= 0.0))
    throw ConfigError("Monte Carlo ranges must be nonnegative");
  if (workers < 1) throw ConfigError("worker count must be at least 1");
  base.validate();
}

SimConfig monte_carlo_scenario(const MonteCarloConfig& config, int k, MonteCarloRun* draw) {
  Rng rng(derive_seed(config.master_seed, static_cast<std::uint64_t>(k)));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  SimConfig cfg = config.base;
  cfg.initial_attitude = {config.angle_range_deg * unit(rng), config.angle_range_deg * unit(rng),
                          config.angle_range_deg * unit(rng)};
  for (int i = 0; i < 3; ++i) cfg.initial_rate[i] = config.rate_range * unit(rng);
  Vec3 inertia = config.base.inertia_nominal.moments();
  for (int i = 0; i < 3; ++i) inertia[i] = std::max(inertia[i] + config.inertia_range * unit(rng), 0.05);
  cfg.inertia_true = InertiaTensor(inertia);
  cfg.noise_enabled = config.noise;
  cfg.seed = derive_seed(config.master_seed ^ 0x5eed5eedULL, static_cast<std::uint64_t>(k));
  if (draw) {
    draw->index = k;
    draw->initial_attitude = cfg.initial_attitude;
    draw->initial_rate = cfg.initial_rate;
    draw->inertia = inertia;
  }
  return cfg;
}

MonteCarloReport monte_carlo(const MonteCarloConfig& config, const Bundles& bundles) {
  config.validate();
  MonteCarloReport report;
  report.runs.resize(config.runs);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < config.runs; k = next++) {
      MonteCarloRun& slot = report.runs[k];
      const SimConfig cfg = monte_carlo_scenario(config, k, &slot);
      try {
        slot.final_error = final_euler_error(run_closed_loop(cfg, bundles), true);
      } catch (const DivergedError& e) {
        slot.failed = true;
        slot.failure = e.what();
      } catch (const EstimateInvalidError& e) {
        slot.failed = true;
        slot.failure = e.what();
      }
    }
  };
  const int workers = std::min(config.workers, config.runs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  Vec3 mean = Vec3::Zero();
  Vec3 m2 = Vec3::Zero();
  int count = 0;
  for (const MonteCarloRun& run : report.runs) {
    if (run.failed) {
      ++report.failed;
      spdlog::warn("Monte Carlo run {} failed: {}", run.index, run.failure);
    } else {
      ++count;
      const Vec3 delta = run.final_error - mean;
      mean += delta / count;
      m2 += delta.cwiseProduct(run.final_error - mean);
      report.max_abs_error_deg = std::max(report.max_abs_error_deg, run.final_error.cwiseAbs().maxCoeff());
    }
    report.running_mean.push_back(count ? mean : Vec3::Constant(NAN));
    report.running_sigma3.push_back(count ? Vec3(3.0 * (m2 / count).cwiseSqrt()) : Vec3::Constant(NAN));
  }
  return report;
}

void write_monte_carlo_csv(const MonteCarloReport& report, const std::string& path) {
  CsvWriter out(path, {"run", "err_phi", "err_theta", "err_psi", "mean_phi", "mean_theta", "mean_psi",
                       "sigma3_phi", "sigma3_theta", "sigma3_psi"});
  for (std::size_t k = 0; k < report.runs.size(); ++k) {
    const MonteCarloRun& r = report.runs[k];
    const Vec3 err = r.failed ? Vec3::Constant(NAN) : r.final_error;
    const Vec3& m = report.running_mean[k];
    const Vec3& s = report.running_sigma3[k];
    const double row[] = {static_cast<double>(r.index + 1), err[0], err[1], err[2], m[0], m[1], m[2], s[0], s[1], s[2]};
    out.row(row);
  }
}

int default_worker_count() {
  if (const char* env = std::getenv("ADCS_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
    spdlog::warn("ignoring invalid ADCS_WORKERS='{}'", env);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// --- comparison -------------------------------------------------------------------

std::vector<EvaluationRow> evaluate_controllers(const SimConfig& base, const InertiaTensor& uncertain_inertia,
                                                const PidGains& gains, const Bundles& bundles) {
  struct Condition {
    const char* name;
    bool noise;
    EstimatorKind estimator;
    InertiaTensor inertia;
  };
  const Condition conditions[] = {
      {"nominal", false, EstimatorKind::truth, base.inertia_nominal},
      {"noise", true, EstimatorKind::measured, base.inertia_nominal},
      {"uncertainty", false, EstimatorKind::truth, uncertain_inertia},
  };
  std::vector<EvaluationRow> rows;
  for (const Condition& c : conditions) {
    for (const ControllerKind kind : {ControllerKind::anfis, ControllerKind::pid}) {
      SimConfig cfg = base;
      cfg.controller = kind;
      cfg.estimator = c.estimator;
      cfg.modulator = ModulatorKind::none;
      cfg.noise_enabled = c.noise;
      cfg.inertia_true = c.inertia;
      cfg.gains = gains;
      rows.push_back({c.name, kind == ControllerKind::anfis ? "ANFIS" : "PID",
                      compute_metrics(run_closed_loop(cfg, bundles))});
    }
  }
  return rows;
}

namespace {

std::string settle_cell(const std::optional<double>& v) { return v ? format_double(*v) : "not-settled"; }

}  // namespace

void write_evaluation_csv(const std::vector<EvaluationRow>& rows, const std::string& path) {
  CsvWriter out(path, {"condition", "controller", "fuel_x", "fuel_y", "fuel_z", "fuel_total", "settle_x",
                       "settle_y", "settle_z", "final_err_x", "final_err_y", "final_err_z", "cost"});
  for (const EvaluationRow& r : rows) {
    const Metrics& m = r.metrics;
    out.row(std::vector<std::string>{
        r.condition, r.controller, format_double(m.fuel.per_axis[0]), format_double(m.fuel.per_axis[1]),
        format_double(m.fuel.per_axis[2]), format_double(m.fuel.total), settle_cell(m.settling[0]),
        settle_cell(m.settling[1]), settle_cell(m.settling[2]), format_double(m.final_error_deg[0]),
        format_double(m.final_error_deg[1]), format_double(m.final_error_deg[2]), format_double(m.cost)});
  }
}

std::string format_evaluation_table(const std::vector<EvaluationRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "condition" << std::setw(8) << "ctrl" << std::right;
  for (const char* h : {"fuel_x", "fuel_y", "fuel_z", "total", "ts_x", "ts_y", "ts_z"}) out << std::setw(10) << h;
  out << '\n' << std::fixed;
  for (const EvaluationRow& r : rows) {
    const Metrics& m = r.metrics;
    out << std::left << std::setw(12) << r.condition << std::setw(8) << r.controller << std::right
        << std::setprecision(4);
    for (int i = 0; i < 3; ++i) out << std::setw(10) << m.fuel.per_axis[i];
    out << std::setw(10) << m.fuel.total << std::setprecision(2);
    for (int i = 0; i < 3; ++i) {
      if (m.settling[i])
        out << std::setw(10) << *m.settling[i];
      else
        out << std::setw(10) << "-";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace adcs
