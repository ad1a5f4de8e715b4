#include "adcs/config.hpp"

#include <filesystem>
#include <set>

#include "adcs/errors.hpp"

namespace adcs {

std::string ArtifactPaths::bundle(Role role) const {
  switch (role) {
    case Role::controller:
      return controller_bundle;
    case Role::estimator:
      return estimator_bundle;
    case Role::integrated:
      return integrated_bundle;
  }
  return {};
}

std::string ArtifactPaths::dataset(Role role) const {
  return (std::filesystem::path(data_dir) / (to_string(role) + ".csv")).string();
}

RoleTrainOptions& AppConfig::train(Role role) {
  return role == Role::controller ? train_controller : role == Role::estimator ? train_estimator : train_integrated;
}

const RoleTrainOptions& AppConfig::train(Role role) const { return const_cast<AppConfig&>(*this).train(role); }

MonteCarloConfig AppConfig::monte_carlo_config() const {
  MonteCarloConfig mc = monte_carlo;
  const ControllerKind controller = mc.base.controller;
  const EstimatorKind estimator = mc.base.estimator;
  mc.base = sim;
  mc.base.controller = controller;
  mc.base.estimator = estimator;
  mc.base.inertia_true = sim.inertia_nominal;
  mc.master_seed = sim.seed;
  return mc;
}

DataGenConfig AppConfig::data_config() const {
  DataGenConfig d = data;
  d.base = sim;
  d.base.inertia_true = sim.inertia_nominal;
  d.base.disturbance = {};
  return d;
}

namespace {

// Reads typed values and remembers which keys were consumed so that unknown
// keys can be reported.
class Reader {
 public:
  explicit Reader(const IniDocument& doc) : doc_(doc) {}

  double number(const std::string& s, const std::string& k, double fallback) {
    return wrap(s, k, [&] { return doc_.get_double(s, k, fallback); });
  }
  int integer(const std::string& s, const std::string& k, int fallback) {
    return wrap(s, k, [&] { return static_cast<int>(doc_.get_int(s, k, fallback)); });
  }
  std::uint64_t seed(const std::string& s, const std::string& k, std::uint64_t fallback) {
    const std::int64_t v = wrap(s, k, [&] { return doc_.get_int(s, k, static_cast<std::int64_t>(fallback)); });
    if (v < 0) throw ConfigError(where(s, k) + ": seed must be nonnegative");
    return static_cast<std::uint64_t>(v);
  }
  bool flag(const std::string& s, const std::string& k, bool fallback) {
    return wrap(s, k, [&] { return doc_.get_bool(s, k, fallback); });
  }
  std::string text(const std::string& s, const std::string& k, const std::string& fallback) {
    return wrap(s, k, [&] { return doc_.get_string(s, k, fallback); });
  }
  Vec3 vec3(const std::string& s, const std::string& k, const Vec3& fallback) {
    return wrap(s, k, [&] { return doc_.get_vec3(s, k, fallback); });
  }
  std::vector<int> ints(const std::string& s, const std::string& k, const std::vector<int>& fallback) {
    if (!doc_.has(s, k)) return fallback;
    return wrap(s, k, [&] {
      const std::string raw = doc_.get_string(s, k);
      return raw.empty() ? std::vector<int>{} : doc_.get_int_list(s, k);
    });
  }
  template <typename F>
  auto parsed(const std::string& s, const std::string& k, const std::string& fallback, F&& convert) {
    const std::string v = text(s, k, fallback);
    try {
      return convert(v);
    } catch (const ConfigError& e) {
      throw ConfigError(where(s, k) + ": " + e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [s, k] : doc_.entries())
      if (!seen_.count({s, k}))
        throw ConfigError(doc_.source() + ": unknown key " + (s.empty() ? k : "[" + s + "] " + k));
  }

  std::string where(const std::string& s, const std::string& k) const {
    return doc_.source() + ": [" + s + "] " + k;
  }

 private:
  template <typename F>
  auto wrap(const std::string& s, const std::string& k, F&& get) -> decltype(get()) {
    seen_.insert({s, k});
    try {
      return get();
    } catch (const ParseError& e) {
      // The document's message already names the key and file.
      throw ConfigError(e.what());
    }
  }

  const IniDocument& doc_;
  std::set<std::pair<std::string, std::string>> seen_;
};

void read_train(Reader& r, const std::string& section, RoleTrainOptions& o) {
  o.mfs_per_input = r.ints(section, "mfs", o.mfs_per_input);
  o.train.epochs = r.integer(section, "epochs", o.train.epochs);
  o.train.learning_rate = r.number(section, "learning_rate", o.train.learning_rate);
  o.train.learning_rate_decay = r.number(section, "learning_rate_decay", o.train.learning_rate_decay);
  o.train.ridge = r.number(section, "ridge", o.train.ridge);
  o.holdout_fraction = r.number(section, "holdout_fraction", o.holdout_fraction);
  o.stride = r.integer(section, "stride", o.stride);
  o.mf_width = r.number(section, "mf_width", o.mf_width);
}

void write_train(IniDocument& doc, const std::string& section, const RoleTrainOptions& o) {
  std::string mfs;
  for (std::size_t i = 0; i < o.mfs_per_input.size(); ++i) mfs += (i ? ", " : "") + std::to_string(o.mfs_per_input[i]);
  doc.set(section, "mfs", mfs);
  doc.set(section, "epochs", o.train.epochs);
  doc.set(section, "learning_rate", o.train.learning_rate);
  doc.set(section, "learning_rate_decay", o.train.learning_rate_decay);
  doc.set(section, "ridge", o.train.ridge);
  doc.set(section, "holdout_fraction", o.holdout_fraction);
  doc.set(section, "stride", o.stride);
  doc.set(section, "mf_width", o.mf_width);
}

EulerAngles euler(const Vec3& v) { return {v[0], v[1], v[2]}; }
Vec3 vec(const EulerAngles& e) { return {e.phi, e.theta, e.psi}; }

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

AppConfig parse_app_config(const IniDocument& doc) {
  AppConfig c;
  c.source = doc.source();
  Reader r(doc);
  SimConfig& s = c.sim;

  s.dt = r.number("simulation", "dt", s.dt);
  s.duration = r.number("simulation", "duration", s.duration);
  s.seed = r.seed("simulation", "seed", s.seed);
  s.controller = r.parsed("simulation", "controller", to_string(s.controller), controller_kind_from_string);
  s.estimator = r.parsed("simulation", "estimator", to_string(s.estimator), estimator_kind_from_string);
  s.modulator = r.parsed("simulation", "modulator", to_string(s.modulator), modulator_kind_from_string);

  try {
    s.inertia_nominal = InertiaTensor(r.vec3("spacecraft", "inertia_nominal", s.inertia_nominal.moments()));
    s.inertia_true = InertiaTensor(r.vec3("spacecraft", "inertia_true", s.inertia_nominal.moments()));
    c.inertia_uncertain = InertiaTensor(r.vec3("spacecraft", "inertia_uncertain", c.inertia_uncertain.moments()));
  } catch (const DomainError& e) {
    throw ConfigError(doc.source() + ": [spacecraft] " + e.what());
  }
  c.mc_max = r.number("spacecraft", "mc_max", c.mc_max);
  check(c.mc_max > 0.0, doc.source() + ": [spacecraft] mc_max must be positive");
  s.gains.mc_max = c.mc_max;

  s.initial_attitude = euler(r.vec3("initial", "attitude_deg", vec(s.initial_attitude)));
  s.initial_rate = r.vec3("initial", "rate", s.initial_rate);
  s.desired = euler(r.vec3("desired", "attitude_deg", vec(s.desired)));

  s.noise_enabled = r.flag("noise", "enabled", s.noise_enabled);
  s.noise.sigma_mag = r.number("noise", "sigma_mag", s.noise.sigma_mag);
  s.noise.sigma_sun = r.number("noise", "sigma_sun", s.noise.sigma_sun);
  s.noise.sigma_gyro = r.number("noise", "sigma_gyro", s.noise.sigma_gyro);

  s.disturbance.kind = r.parsed("disturbance", "kind", to_string(s.disturbance.kind), disturbance_kind_from_string);
  s.disturbance.amplitude = r.vec3("disturbance", "amplitude", s.disturbance.amplitude);
  s.disturbance.frequency_hz = r.number("disturbance", "frequency_hz", s.disturbance.frequency_hz);

  s.geo.latitude_deg = r.number("orbit", "latitude_deg", s.geo.latitude_deg);
  s.geo.longitude_deg = r.number("orbit", "longitude_deg", s.geo.longitude_deg);
  s.geo.altitude_km = r.number("orbit", "altitude_km", s.geo.altitude_km);
  s.epoch.year = r.integer("epoch", "year", s.epoch.year);
  s.epoch.month = r.integer("epoch", "month", s.epoch.month);
  s.epoch.day = r.integer("epoch", "day", s.epoch.day);
  s.epoch.hour = r.integer("epoch", "hour", s.epoch.hour);
  s.epoch.minute = r.integer("epoch", "minute", s.epoch.minute);
  s.epoch.second = r.number("epoch", "second", s.epoch.second);

  s.pwpf.km = r.number("pwpf", "km", s.pwpf.km);
  s.pwpf.tm = r.number("pwpf", "tm", s.pwpf.tm);
  s.pwpf.u_on = r.number("pwpf", "u_on", s.pwpf.u_on);
  s.pwpf.u_off = r.number("pwpf", "u_off", s.pwpf.u_off);
  s.pwpf.thrust = r.number("pwpf", "thrust", c.mc_max);

  c.tuning_budget = r.integer("tuning", "budget", c.tuning_budget);
  c.gain_bound_factor = r.number("tuning", "gain_bound_factor", c.gain_bound_factor);
  c.integral_bound_fraction = r.number("tuning", "integral_bound_fraction", c.integral_bound_fraction);

  c.data.runs = r.integer("data", "runs", c.data.runs);
  c.data.angle_range_deg = r.number("data", "angle_range_deg", c.data.angle_range_deg);
  c.data.rate_range = r.number("data", "rate_range", c.data.rate_range);
  c.data.inertia_range = r.number("data", "inertia_range", c.data.inertia_range);
  c.data.noise = r.flag("data", "noise", c.data.noise);

  read_train(r, "train_controller", c.train_controller);
  read_train(r, "train_estimator", c.train_estimator);
  read_train(r, "train_integrated", c.train_integrated);

  MonteCarloConfig& mc = c.monte_carlo;
  mc.base.controller = ControllerKind::integrated;
  mc.base.estimator = EstimatorKind::truth;
  mc.runs = r.integer("monte_carlo", "runs", mc.runs);
  mc.angle_range_deg = r.number("monte_carlo", "angle_range_deg", mc.angle_range_deg);
  mc.rate_range = r.number("monte_carlo", "rate_range", mc.rate_range);
  mc.inertia_range = r.number("monte_carlo", "inertia_range", mc.inertia_range);
  mc.noise = r.flag("monte_carlo", "noise", mc.noise);
  mc.base.controller =
      r.parsed("monte_carlo", "controller", to_string(mc.base.controller), controller_kind_from_string);
  mc.base.estimator = r.parsed("monte_carlo", "estimator", to_string(mc.base.estimator), estimator_kind_from_string);
  mc.workers = r.integer("monte_carlo", "workers", 0);

  c.artifacts.gains = r.text("artifacts", "gains", c.artifacts.gains);
  c.artifacts.data_dir = r.text("artifacts", "data_dir", c.artifacts.data_dir);
  c.artifacts.controller_bundle = r.text("artifacts", "controller_bundle", c.artifacts.controller_bundle);
  c.artifacts.estimator_bundle = r.text("artifacts", "estimator_bundle", c.artifacts.estimator_bundle);
  c.artifacts.integrated_bundle = r.text("artifacts", "integrated_bundle", c.artifacts.integrated_bundle);

  r.reject_unknown();

  try {
    s.validate();
    s.pwpf.validate();
    c.data.validate();
    check(c.tuning_budget >= 50, "tuning budget must be at least 50 evaluations");
    check(c.gain_bound_factor == 0.0 || c.gain_bound_factor >= 1.0, "gain_bound_factor must be 0 or >= 1");
    check(c.integral_bound_fraction >= 0.0, "integral_bound_fraction must be nonnegative");
    check(mc.runs >= 1, "Monte Carlo needs at least one run");
    check(mc.workers >= 0, "Monte Carlo workers must be >= 0 (0 selects the default)");
    for (Role role : {Role::controller, Role::estimator, Role::integrated}) {
      const RoleTrainOptions& o = c.train(role);
      check(o.holdout_fraction >= 0.0 && o.holdout_fraction < 1.0, "holdout_fraction must be in [0, 1)");
      check(o.stride >= 1, "stride must be at least 1");
      check(o.mf_width > 0.0, "mf_width must be positive");
      o.train.validate();
    }
  } catch (const ConfigError& e) {
    throw ConfigError(doc.source() + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(doc.source() + ": " + e.what());
  }
  return c;
}

AppConfig load_app_config(const std::string& path) { return parse_app_config(IniDocument::load(path)); }

IniDocument to_ini(const AppConfig& c) {
  IniDocument doc;
  const SimConfig& s = c.sim;
  doc.set("simulation", "dt", s.dt);
  doc.set("simulation", "duration", s.duration);
  doc.set("simulation", "seed", std::to_string(s.seed));
  doc.set("simulation", "controller", to_string(s.controller));
  doc.set("simulation", "estimator", to_string(s.estimator));
  doc.set("simulation", "modulator", to_string(s.modulator));
  doc.set("spacecraft", "inertia_nominal", s.inertia_nominal.moments());
  doc.set("spacecraft", "inertia_true", s.inertia_true.moments());
  doc.set("spacecraft", "inertia_uncertain", c.inertia_uncertain.moments());
  doc.set("spacecraft", "mc_max", c.mc_max);
  doc.set("initial", "attitude_deg", vec(s.initial_attitude));
  doc.set("initial", "rate", s.initial_rate);
  doc.set("desired", "attitude_deg", vec(s.desired));
  doc.set("noise", "enabled", s.noise_enabled ? "true" : "false");
  doc.set("noise", "sigma_mag", s.noise.sigma_mag);
  doc.set("noise", "sigma_sun", s.noise.sigma_sun);
  doc.set("noise", "sigma_gyro", s.noise.sigma_gyro);
  doc.set("disturbance", "kind", to_string(s.disturbance.kind));
  doc.set("disturbance", "amplitude", s.disturbance.amplitude);
  doc.set("disturbance", "frequency_hz", s.disturbance.frequency_hz);
  doc.set("orbit", "latitude_deg", s.geo.latitude_deg);
  doc.set("orbit", "longitude_deg", s.geo.longitude_deg);
  doc.set("orbit", "altitude_km", s.geo.altitude_km);
  doc.set("epoch", "year", s.epoch.year);
  doc.set("epoch", "month", s.epoch.month);
  doc.set("epoch", "day", s.epoch.day);
  doc.set("epoch", "hour", s.epoch.hour);
  doc.set("epoch", "minute", s.epoch.minute);
  doc.set("epoch", "second", s.epoch.second);
  doc.set("pwpf", "km", s.pwpf.km);
  doc.set("pwpf", "tm", s.pwpf.tm);
  doc.set("pwpf", "u_on", s.pwpf.u_on);
  doc.set("pwpf", "u_off", s.pwpf.u_off);
  doc.set("pwpf", "thrust", s.pwpf.thrust);
  doc.set("tuning", "budget", c.tuning_budget);
  doc.set("tuning", "gain_bound_factor", c.gain_bound_factor);
  doc.set("tuning", "integral_bound_fraction", c.integral_bound_fraction);
  doc.set("data", "runs", c.data.runs);
  doc.set("data", "angle_range_deg", c.data.angle_range_deg);
  doc.set("data", "rate_range", c.data.rate_range);
  doc.set("data", "inertia_range", c.data.inertia_range);
  doc.set("data", "noise", c.data.noise ? "true" : "false");
  write_train(doc, "train_controller", c.train_controller);
  write_train(doc, "train_estimator", c.train_estimator);
  write_train(doc, "train_integrated", c.train_integrated);
  const MonteCarloConfig& mc = c.monte_carlo;
  doc.set("monte_carlo", "runs", mc.runs);
  doc.set("monte_carlo", "angle_range_deg", mc.angle_range_deg);
  doc.set("monte_carlo", "rate_range", mc.rate_range);
  doc.set("monte_carlo", "inertia_range", mc.inertia_range);
  doc.set("monte_carlo", "noise", mc.noise ? "true" : "false");
  doc.set("monte_carlo", "controller", to_string(mc.base.controller));
  doc.set("monte_carlo", "estimator", to_string(mc.base.estimator));
  doc.set("monte_carlo", "workers", mc.workers);
  doc.set("artifacts", "gains", c.artifacts.gains);
  doc.set("artifacts", "data_dir", c.artifacts.data_dir);
  doc.set("artifacts", "controller_bundle", c.artifacts.controller_bundle);
  doc.set("artifacts", "estimator_bundle", c.artifacts.estimator_bundle);
  doc.set("artifacts", "integrated_bundle", c.artifacts.integrated_bundle);
  return doc;
}

}  // namespace adcs
