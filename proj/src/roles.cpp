#include "adcs/roles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include <spdlog/spdlog.h>

#include "adcs/errors.hpp"
#include "adcs/io.hpp"

namespace adcs {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Role role) {
  switch (role) {
    case Role::controller:
      return "controller";
    case Role::estimator:
      return "estimator";
    case Role::integrated:
      return "integrated";
  }
  return "?";
}

Role role_from_string(const std::string& s) {
  if (s == "controller") return Role::controller;
  if (s == "estimator") return Role::estimator;
  if (s == "integrated") return Role::integrated;
  throw ConfigError("unknown role '" + s + "' (expected controller, estimator or integrated)");
}

const std::vector<std::string>& controller_input_names() {
  static const std::vector<std::string> names{"qe1", "qe2", "qe3", "w1", "w2", "w3"};
  return names;
}

const std::vector<std::string>& sensor_input_names() {
  static const std::vector<std::string> names{"mb1", "mb2", "mb3", "sb1", "sb2", "sb3", "g1", "g2",
                                              "g3",  "mi1", "mi2", "mi3", "si1", "si2", "si3"};
  return names;
}

const std::vector<std::string>& role_input_names(Role role) {
  return role == Role::controller ? controller_input_names() : sensor_input_names();
}

const std::vector<std::string>& role_output_names(Role role) {
  static const std::vector<std::string> torque{"mc1", "mc2", "mc3"};
  static const std::vector<std::string> state{"q1", "q2", "q3", "q4", "w1", "w2", "w3"};
  return role == Role::estimator ? state : torque;
}

std::vector<double> sensor_features(const SensorReading& r) {
  std::vector<double> f;
  f.reserve(15);
  for (const Vec3* v : {&r.mag_body, &r.sun_body, &r.gyro, &r.mag_inertial, &r.sun_inertial})
    f.insert(f.end(), v->data(), v->data() + 3);
  return f;
}

// --- datasets ---------------------------------------------------------------------

int Dataset::run_count() const { return static_cast<int>(std::set<int>(run.begin(), run.end()).size()); }

void Dataset::save_csv(const std::string& path) const {
  std::vector<std::string> header{"run"};
  for (const auto& n : role_input_names(role)) header.push_back(n);
  for (const auto& n : role_output_names(role)) header.push_back(n);
  CsvWriter out(path, header);
  std::vector<double> row(header.size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    row[0] = run[i];
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) row[1 + j] = inputs(i, j);
    for (Eigen::Index j = 0; j < targets.cols(); ++j) row[1 + inputs.cols() + j] = targets(i, j);
    out.row(row);
  }
}

Dataset Dataset::load_csv(const std::string& path, Role role) {
  const CsvTable table = read_csv(path);
  const auto& in = role_input_names(role);
  const auto& outs = role_output_names(role);
  std::vector<std::string> expected{"run"};
  expected.insert(expected.end(), in.begin(), in.end());
  expected.insert(expected.end(), outs.begin(), outs.end());
  if (table.header != expected)
    throw ParseError(path + ": columns do not match the " + to_string(role) + " dataset layout");
  Dataset d;
  d.role = role;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  d.inputs.resize(n, static_cast<Eigen::Index>(in.size()));
  d.targets.resize(n, static_cast<Eigen::Index>(outs.size()));
  d.run.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = table.rows[i];
    d.run[i] = static_cast<int>(r[0]);
    for (Eigen::Index j = 0; j < d.inputs.cols(); ++j) d.inputs(i, j) = r[1 + j];
    for (Eigen::Index j = 0; j < d.targets.cols(); ++j) d.targets(i, j) = r[1 + d.inputs.cols() + j];
  }
  if (!d.inputs.allFinite() || !d.targets.allFinite()) throw ParseError(path + ": non-finite sample");
  return d;
}

void DataGenConfig::validate() const {
  if (runs < 1) throw ConfigError("data generation needs at least one run");
  if (!(angle_range_deg >= 0.0) || !(rate_range >= 0.0) || !(inertia_range >= 0.0))
    throw ConfigError("data generation ranges must be nonnegative");
  base.validate();
}

namespace {

SimConfig draw_scenario(const DataGenConfig& config, const PidGains& teacher, std::uint64_t seed, int k) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  SimConfig cfg = config.base;
  cfg.initial_attitude = {config.angle_range_deg * unit(rng), config.angle_range_deg * unit(rng),
                          config.angle_range_deg * unit(rng)};
  for (int i = 0; i < 3; ++i) cfg.initial_rate[i] = config.rate_range * unit(rng);
  Vec3 inertia = config.base.inertia_nominal.moments();
  for (int i = 0; i < 3; ++i) inertia[i] = std::max(inertia[i] + config.inertia_range * unit(rng), 0.05);
  cfg.inertia_true = InertiaTensor(inertia);
  cfg.controller = ControllerKind::pid;
  cfg.estimator = EstimatorKind::truth;
  cfg.modulator = ModulatorKind::none;
  cfg.gains = teacher;
  cfg.noise_enabled = config.noise;
  cfg.seed = derive_seed(seed ^ 0xda7a5eedULL, static_cast<std::uint64_t>(k));
  return cfg;
}

std::vector<RunRecord> simulate_runs(const std::vector<SimConfig>& scenarios) {
  std::vector<RunRecord> records;
  records.reserve(scenarios.size());
  for (const SimConfig& cfg : scenarios) records.push_back(run_closed_loop(cfg, {}, {.record_readings = true}));
  return records;
}

Dataset collect(Role role, const std::vector<RunRecord>& records) {
  std::size_t total = 0;
  for (const auto& r : records) total += r.steps.size() - 1;
  Dataset d;
  d.role = role;
  const auto in = static_cast<Eigen::Index>(role_input_names(role).size());
  const auto out = static_cast<Eigen::Index>(role_output_names(role).size());
  d.inputs.resize(static_cast<Eigen::Index>(total), in);
  d.targets.resize(static_cast<Eigen::Index>(total), out);
  d.run.reserve(total);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const RunRecord& rec = records[k];
    for (std::size_t i = 0; i + 1 < rec.steps.size(); ++i, ++row) {
      const StepRecord& s = rec.steps[i];
      if (role == Role::controller) {
        d.inputs.row(row) << s.qe.transpose(), s.truth.w.transpose();
      } else {
        const auto f = sensor_features(rec.readings[i]);
        d.inputs.row(row) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), in);
      }
      if (role == Role::estimator) {
        const Quaternion q = s.truth.q.q4 < 0.0 ? -s.truth.q : s.truth.q;
        d.targets.row(row) << q.q1, q.q2, q.q3, q.q4, s.truth.w.transpose();
      } else {
        d.targets.row(row) = s.command.transpose();
      }
      d.run.push_back(static_cast<int>(k));
    }
  }
  return d;
}

}  // namespace

std::vector<SimConfig> make_scenarios(const DataGenConfig& config, const PidGains& teacher, std::uint64_t seed) {
  config.validate();
  std::vector<SimConfig> out;
  for (int k = 0; k < config.runs; ++k) out.push_back(draw_scenario(config, teacher, seed, k));
  return out;
}

Dataset generate_controller_data(const PidGains& gains, const DataGenConfig& config, std::uint64_t seed) {
  DataGenConfig nominal = config;
  nominal.noise = false;
  nominal.inertia_range = 0.0;
  nominal.validate();
  std::vector<RunRecord> records;
  int draw = 0;
  const int max_draws = 10 * config.runs;
  while (static_cast<int>(records.size()) < config.runs) {
    if (draw >= max_draws) throw DivergedError("controller data generation: too many diverged runs");
    try {
      records.push_back(run_closed_loop(draw_scenario(nominal, gains, seed, draw++)));
    } catch (const DivergedError& e) {
      spdlog::warn("data run {} diverged, redrawing: {}", draw - 1, e.what());
    }
  }
  return collect(Role::controller, records);
}

Dataset generate_estimator_data(const std::vector<SimConfig>& scenarios) {
  return collect(Role::estimator, simulate_runs(scenarios));
}

Dataset generate_integrated_data(const std::vector<SimConfig>& scenarios) {
  return collect(Role::integrated, simulate_runs(scenarios));
}

// --- training -------------------------------------------------------------------

RoleTrainOptions default_train_options(Role role) {
  RoleTrainOptions o;
  o.train.epochs = 4;
  o.train.learning_rate = 0.05;
  o.train.ridge = 1e-4;
  o.stride = 4;
  (void)role;
  return o;
}

namespace {

std::vector<int> default_mfs(Role role, const std::vector<std::string>& names, const std::vector<int>& selected) {
  std::vector<int> mfs;
  for (int idx : selected) {
    // Gyro channels enter the consequents linearly only.
    const bool gyro = role != Role::controller && names[idx].front() == 'g';
    mfs.push_back(gyro ? 1 : 2);
  }
  return mfs;
}

void validate_options(const RoleTrainOptions& o) {
  if (!(o.holdout_fraction >= 0.0 && o.holdout_fraction < 1.0))
    throw ConfigError("holdout fraction must be in [0, 1)");
  if (o.stride < 1) throw ConfigError("training stride must be at least 1");
  if (!(o.mf_width > 0.0)) throw ConfigError("membership width must be positive");
  for (int m : o.mfs_per_input)
    if (m < 1) throw ConfigError("membership function counts must be at least 1");
  o.train.validate();
}

}  // namespace

RoleBundle train_role(const Dataset& data, const RoleTrainOptions& options, double mc_max) {
  validate_options(options);
  const auto& names = role_input_names(data.role);
  if (data.inputs.cols() != static_cast<Eigen::Index>(names.size()) ||
      data.targets.cols() != static_cast<Eigen::Index>(role_output_names(data.role).size()) ||
      data.targets.rows() != data.size() || static_cast<Eigen::Index>(data.run.size()) != data.size())
    throw DimensionError("dataset shape does not match the " + to_string(data.role) + " role");
  if (data.size() == 0) throw DomainError("empty dataset");

  RoleBundle bundle;
  bundle.role = data.role;
  bundle.input_names = names;
  bundle.output_names = role_output_names(data.role);
  bundle.mc_max = mc_max;

  // Held-out data: the last whole runs.
  std::vector<int> runs(data.run.begin(), data.run.end());
  std::sort(runs.begin(), runs.end());
  runs.erase(std::unique(runs.begin(), runs.end()), runs.end());
  int holdout_runs = 0;
  if (options.holdout_fraction > 0.0 && runs.size() > 1)
    holdout_runs = std::max(1, static_cast<int>(std::lround(options.holdout_fraction * runs.size())));
  const std::set<int> held(runs.end() - holdout_runs, runs.end());

  std::vector<Eigen::Index> train_rows, test_rows;
  Eigen::Index seen = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (held.count(data.run[i])) {
      test_rows.push_back(i);
    } else if (seen++ % options.stride == 0) {
      train_rows.push_back(i);
    }
  }

  for (int j = 0; j < data.inputs.cols(); ++j) {
    double lo = INFINITY, hi = -INFINITY;
    for (Eigen::Index i : train_rows) {
      lo = std::min(lo, data.inputs(i, j));
      hi = std::max(hi, data.inputs(i, j));
    }
    if (hi - lo > options.prune_tolerance) {
      bundle.selected.push_back(j);
      bundle.ranges.emplace_back(lo, hi);
    }
  }
  if (bundle.selected.empty()) throw DomainError("every input channel is constant");

  std::vector<int> mfs = options.mfs_per_input.empty() ? default_mfs(data.role, names, bundle.selected)
                                                       : options.mfs_per_input;
  if (mfs.size() != bundle.selected.size())
    throw ConfigError("expected " + std::to_string(bundle.selected.size()) +
                      " membership function counts (one per non-constant input), got " +
                      std::to_string(mfs.size()));

  auto normalized = [&](const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(bundle.selected.size()));
    std::vector<double> raw(names.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < names.size(); ++j) raw[j] = data.inputs(rows[r], static_cast<Eigen::Index>(j));
      const auto n = bundle.normalize(raw);
      for (std::size_t j = 0; j < n.size(); ++j) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = n[j];
    }
    return x;
  };
  anfis::TrainingSet train_set, test_set;
  train_set.inputs = normalized(train_rows);
  test_set.inputs = normalized(test_rows);
  const std::vector<std::pair<double, double>> unit_ranges(bundle.selected.size(), {-1.0, 1.0});

  json train_rmse = json::array(), holdout_rmse = json::array();
  for (Eigen::Index c = 0; c < data.targets.cols(); ++c) {
    train_set.targets.resize(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t r = 0; r < train_rows.size(); ++r) train_set.targets[r] = data.targets(train_rows[r], c);
    anfis::TrainConfig tc = options.train;
    tc.seed = derive_seed(options.train.seed, static_cast<std::uint64_t>(c));
    anfis::TrainResult result = anfis::train(anfis::grid_partition_init(unit_ranges, mfs, options.mf_width), train_set, tc);
    train_rmse.push_back(result.model.metadata.final_rmse);
    if (!test_rows.empty()) {
      test_set.targets.resize(static_cast<Eigen::Index>(test_rows.size()));
      for (std::size_t r = 0; r < test_rows.size(); ++r) test_set.targets[r] = data.targets(test_rows[r], c);
      holdout_rmse.push_back(anfis::rmse(result.model, test_set));
    }
    spdlog::info("{} {}: train RMSE {:.3e}{}", to_string(data.role), bundle.output_names[c],
                 result.model.metadata.final_rmse,
                 test_rows.empty() ? "" : fmt::format(", held-out RMSE {:.3e}", holdout_rmse.back().get<double>()));
    bundle.models.push_back(std::move(result.model));
  }
  bundle.metadata = {{"train_samples", train_rows.size()},
                     {"holdout_samples", test_rows.size()},
                     {"holdout_runs", std::vector<int>(held.begin(), held.end())},
                     {"stride", options.stride},
                     {"mfs_per_input", mfs},
                     {"mf_width", options.mf_width},
                     {"train_rmse", train_rmse},
                     {"holdout_rmse", holdout_rmse}};
  return bundle;
}

// --- inference ------------------------------------------------------------------

std::vector<double> RoleBundle::normalize(std::span<const double> raw) const {
  if (raw.size() != input_names.size())
    throw DimensionError(to_string(role) + " bundle expects " + std::to_string(input_names.size()) + " inputs, got " +
                         std::to_string(raw.size()));
  std::vector<double> x(selected.size());
  for (std::size_t j = 0; j < selected.size(); ++j) {
    const auto [lo, hi] = ranges[j];
    x[j] = 2.0 * (raw[selected[j]] - lo) / (hi - lo) - 1.0;
  }
  return x;
}

std::vector<double> RoleBundle::predict(std::span<const double> raw) const {
  const std::vector<double> x = normalize(raw);
  static std::atomic<bool> warned{false};
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (std::abs(x[j]) > 1.5) {
      if (!warned.exchange(true))
        spdlog::warn("{} bundle input '{}' = {} is far outside its training range [{}, {}]", to_string(role),
                     input_names[selected[j]], raw[selected[j]], ranges[j].first, ranges[j].second);
      else
        spdlog::debug("{} bundle extrapolating on '{}'", to_string(role), input_names[selected[j]]);
    }
  }
  std::vector<double> y(models.size());
  for (std::size_t c = 0; c < models.size(); ++c) y[c] = anfis::evaluate(models[c], x);
  return y;
}

namespace {

void require_role(const RoleBundle& b, Role role) {
  if (b.role != role)
    throw ConfigError("expected a " + to_string(role) + " bundle, got a " + to_string(b.role) + " bundle");
}

}  // namespace

Torque anfis_control(const RoleBundle& bundle, const Vec3& qe, const AngularVelocity& w) {
  require_role(bundle, Role::controller);
  const double raw[] = {qe[0], qe[1], qe[2], w[0], w[1], w[2]};
  const auto y = bundle.predict(raw);
  return saturate(Torque(y[0], y[1], y[2]), bundle.mc_max);
}

StateEstimate anfis_estimate(const RoleBundle& bundle, const SensorReading& reading) {
  require_role(bundle, Role::estimator);
  const auto y = bundle.predict(sensor_features(reading));
  const Quaternion q{y[0], y[1], y[2], y[3]};
  const double n = q.norm();
  if (!(n >= 0.1)) throw EstimateInvalidError("estimated quaternion norm " + format_double(n) + " is below 0.1");
  return {q.normalized(), AngularVelocity(y[4], y[5], y[6])};
}

Torque anfis_integrated(const RoleBundle& bundle, const SensorReading& reading) {
  require_role(bundle, Role::integrated);
  const auto y = bundle.predict(sensor_features(reading));
  return saturate(Torque(y[0], y[1], y[2]), bundle.mc_max);
}

// --- persistence ----------------------------------------------------------------

void save_bundle(const RoleBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  json manifest{{"format", "adcs-anfis-bundle"},
                {"version", kBundleFormatVersion},
                {"role", to_string(bundle.role)},
                {"input_names", bundle.input_names},
                {"selected", bundle.selected},
                {"ranges", bundle.ranges},
                {"output_names", bundle.output_names},
                {"mc_max", bundle.mc_max},
                {"metadata", bundle.metadata}};
  json files = json::array();
  for (std::size_t c = 0; c < bundle.models.size(); ++c) {
    const std::string name = bundle.output_names[c] + ".json";
    anfis::save_model(bundle.models[c], (fs::path(dir) / name).string());
    files.push_back(name);
  }
  manifest["models"] = files;
  const std::string path = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << manifest.dump(1) << '\n';
}

RoleBundle load_bundle(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  if (!fs::exists(manifest_path)) throw MissingArtifactError("model bundle not found", manifest_path.string());
  std::ifstream in(manifest_path);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  try {
    if (m.at("format").get<std::string>() != "adcs-anfis-bundle")
      throw ParseError(manifest_path.string() + ": not a model bundle manifest");
    const int version = m.at("version").get<int>();
    if (version != kBundleFormatVersion)
      throw VersionError(manifest_path.string() + ": unsupported bundle version " + std::to_string(version));
    RoleBundle b;
    b.role = role_from_string(m.at("role").get<std::string>());
    b.input_names = m.at("input_names").get<std::vector<std::string>>();
    b.selected = m.at("selected").get<std::vector<int>>();
    b.ranges = m.at("ranges").get<std::vector<std::pair<double, double>>>();
    b.output_names = m.at("output_names").get<std::vector<std::string>>();
    b.mc_max = m.at("mc_max").get<double>();
    b.metadata = m.value("metadata", json::object());
    if (b.input_names != role_input_names(b.role) || b.output_names != role_output_names(b.role))
      throw ParseError(manifest_path.string() + ": channel names do not match the " + to_string(b.role) + " role");
    if (b.selected.size() != b.ranges.size() || b.selected.empty())
      throw ParseError(manifest_path.string() + ": inconsistent input selection");
    for (int s : b.selected)
      if (s < 0 || s >= b.input_dimension()) throw ParseError(manifest_path.string() + ": selected index out of range");
    for (const auto& [lo, hi] : b.ranges)
      if (!(hi > lo)) throw ParseError(manifest_path.string() + ": empty input range");
    const auto files = m.at("models").get<std::vector<std::string>>();
    if (files.size() != b.output_names.size()) throw ParseError(manifest_path.string() + ": model count mismatch");
    for (const auto& f : files) {
      const fs::path p = fs::path(dir) / f;
      if (!fs::exists(p)) throw MissingArtifactError("model file not found", p.string());
      b.models.push_back(anfis::load_model(p.string()));
      if (b.models.back().n_inputs() != static_cast<int>(b.selected.size()))
        throw ParseError(p.string() + ": model input count does not match the bundle");
    }
    return b;
  } catch (const json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
}

double attitude_difference_deg(const Quaternion& a, const Quaternion& b) {
  const double d = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
  return 2.0 * std::acos(d) * 180.0 / std::numbers::pi;
}

}  // namespace adcs
