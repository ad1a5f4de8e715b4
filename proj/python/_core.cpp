// Python bindings for the attitude control library.
#include <memory>
#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <spdlog/spdlog.h>

#include "adcs/anfis.hpp"
#include "adcs/config.hpp"
#include "adcs/errors.hpp"
#include "adcs/pid.hpp"
#include "adcs/pwpf.hpp"
#include "adcs/roles.hpp"
#include "adcs/sensors.hpp"
#include "adcs/sim.hpp"

namespace py = pybind11;
using namespace adcs;

namespace {

using BundlePtr = std::shared_ptr<RoleBundle>;

Vec3 euler_vec(const EulerAngles& e) { return {e.phi, e.theta, e.psi}; }

py::dict metrics_dict(const Metrics& m) {
  py::list settling;
  for (const auto& s : m.settling) settling.append(s ? py::cast(*s) : py::none());
  py::dict d;
  d["fuel_per_axis"] = m.fuel.per_axis;
  d["fuel_total"] = m.fuel.total;
  d["settling"] = settling;
  d["final_error_deg"] = m.final_error_deg;
  d["cost"] = m.cost;
  return d;
}

// Column-stacked run record.
py::dict run_dict(const RunRecord& r) {
  const auto n = static_cast<Eigen::Index>(r.steps.size());
  Eigen::VectorXd t(n);
  Eigen::MatrixXd q(n, 4), w(n, 3), euler(n, 3), qe(n, 3), command(n, 3), applied(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) {
    const StepRecord& s = r.steps[k];
    t[k] = s.t;
    q.row(k) = s.truth.q.vec4().transpose();
    w.row(k) = s.truth.w.transpose();
    euler.row(k) = euler_vec(s.euler).transpose();
    qe.row(k) = s.qe.transpose();
    command.row(k) = s.command.transpose();
    applied.row(k) = s.applied.transpose();
  }
  py::dict d;
  d["t"] = t;
  d["q"] = q;
  d["w"] = w;
  d["euler"] = euler;
  d["qe"] = qe;
  d["command"] = command;
  d["applied"] = applied;
  d["metrics"] = metrics_dict(compute_metrics(r));
  return d;
}

Bundles make_bundles(const BundlePtr& controller, const BundlePtr& estimator, const BundlePtr& integrated) {
  return {controller, estimator, integrated};
}

PidGains gains_or_default(const AppConfig& cfg, const std::optional<PidGains>& gains) {
  PidGains g = gains ? *gains : default_initial_gains(cfg.sim.inertia_nominal, cfg.mc_max);
  g.mc_max = cfg.mc_max;
  return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Satellite attitude simulation with PID and ANFIS controllers";
  spdlog::set_level(spdlog::level::warn);

  auto base = py::register_exception<Error>(m, "AdcsError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<MissingArtifactError>(m, "MissingArtifactError", base.ptr());
  py::register_exception<DivergedError>(m, "DivergedError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<VersionError>(m, "VersionError", base.ptr());
  py::register_exception<EstimateInvalidError>(m, "EstimateInvalidError", base.ptr());

  // --- kinematics and ephemeris -----------------------------------------------
  m.def("euler_to_quat", [](const Vec3& e) { return euler_to_quat({e[0], e[1], e[2]}).vec4(); },
        py::arg("euler_deg"), "3-2-1 Euler angles (phi, theta, psi) in degrees to a scalar-last quaternion.");
  m.def("quat_to_euler", [](const Vec4& q) { return euler_vec(quat_to_euler(Quaternion::from_vec4(q))); },
        py::arg("q"));
  m.def("quat_to_dcm", [](const Vec4& q) { return quat_to_dcm(Quaternion::from_vec4(q)); }, py::arg("q"));
  m.def(
      "julian_date",
      [](int year, int month, int day, int hour, int minute, double second) {
        return julian_date({year, month, day, hour, minute, second});
      },
      py::arg("year"), py::arg("month"), py::arg("day"), py::arg("hour") = 0, py::arg("minute") = 0,
      py::arg("second") = 0.0);
  m.def("sun_direction", &sun_direction_inertial, py::arg("jd"), "Unit inertial sun vector.");

  // --- configuration --------------------------------------------------------------
  py::class_<AppConfig>(m, "Config")
      .def_property(
          "seed", [](const AppConfig& c) { return c.sim.seed; }, [](AppConfig& c, std::uint64_t s) { c.sim.seed = s; })
      .def_property(
          "duration", [](const AppConfig& c) { return c.sim.duration; },
          [](AppConfig& c, double v) { c.sim.duration = v; })
      .def_property_readonly("dt", [](const AppConfig& c) { return c.sim.dt; })
      .def_property(
          "controller", [](const AppConfig& c) { return to_string(c.sim.controller); },
          [](AppConfig& c, const std::string& v) { c.sim.controller = controller_kind_from_string(v); })
      .def_property(
          "estimator", [](const AppConfig& c) { return to_string(c.sim.estimator); },
          [](AppConfig& c, const std::string& v) { c.sim.estimator = estimator_kind_from_string(v); })
      .def_property(
          "modulator", [](const AppConfig& c) { return to_string(c.sim.modulator); },
          [](AppConfig& c, const std::string& v) { c.sim.modulator = modulator_kind_from_string(v); })
      .def_property(
          "noise", [](const AppConfig& c) { return c.sim.noise_enabled; },
          [](AppConfig& c, bool v) { c.sim.noise_enabled = v; })
      .def_property(
          "initial_attitude", [](const AppConfig& c) { return euler_vec(c.sim.initial_attitude); },
          [](AppConfig& c, const Vec3& e) { c.sim.initial_attitude = {e[0], e[1], e[2]}; })
      .def_property(
          "initial_rate", [](const AppConfig& c) { return c.sim.initial_rate; },
          [](AppConfig& c, const Vec3& w) { c.sim.initial_rate = w; })
      .def_property(
          "data_runs", [](const AppConfig& c) { return c.data.runs; }, [](AppConfig& c, int v) { c.data.runs = v; })
      .def_property(
          "monte_carlo_runs", [](const AppConfig& c) { return c.monte_carlo.runs; },
          [](AppConfig& c, int v) { c.monte_carlo.runs = v; })
      .def_property(
          "monte_carlo_controller", [](const AppConfig& c) { return to_string(c.monte_carlo.base.controller); },
          [](AppConfig& c, const std::string& v) { c.monte_carlo.base.controller = controller_kind_from_string(v); })
      .def_property(
          "monte_carlo_estimator", [](const AppConfig& c) { return to_string(c.monte_carlo.base.estimator); },
          [](AppConfig& c, const std::string& v) { c.monte_carlo.base.estimator = estimator_kind_from_string(v); })
      .def("to_ini", [](const AppConfig& c) { return to_ini(c).to_string(); });
  m.def("load_config", &load_app_config, py::arg("path"));
  m.def("default_config", [] { return AppConfig{}; });

  // --- PID ------------------------------------------------------------------------
  py::class_<PidGains>(m, "PidGains")
      .def(py::init<>())
      .def_readwrite("kp", &PidGains::kp)
      .def_readwrite("kd", &PidGains::kd)
      .def_readwrite("kq", &PidGains::kq)
      .def_readwrite("kw", &PidGains::kw)
      .def_readwrite("mc_max", &PidGains::mc_max)
      .def("to_vector", &PidGains::to_vector);
  m.def("load_gains", [](const std::string& path) { return load_gains(path).gains; }, py::arg("path"));
  m.def(
      "save_gains", [](const PidGains& g, const std::string& path) { save_gains({g}, path); }, py::arg("gains"),
      py::arg("path"));
  m.def(
      "default_initial_gains",
      [](const AppConfig& cfg) { return default_initial_gains(cfg.sim.inertia_nominal, cfg.mc_max); },
      py::arg("config"));
  m.def(
      "tune_pid",
      [](const AppConfig& cfg, std::optional<int> budget, bool bounded) {
        const PidGains initial = default_initial_gains(cfg.sim.inertia_nominal, cfg.mc_max);
        std::optional<GainBounds> bounds;
        if (bounded && cfg.gain_bound_factor > 0.0)
          bounds = tuning_bounds(initial, cfg.gain_bound_factor, cfg.integral_bound_fraction);
        TuningResult r;
        {
          py::gil_scoped_release release;
          r = tune_pid(cfg.sim, initial, budget.value_or(cfg.tuning_budget), cfg.sim.seed, bounds);
        }
        py::dict d;
        d["gains"] = r.tuning.gains;
        d["initial_cost"] = r.initial_cost;
        d["cost"] = r.tuning.search.best_f;
        d["evaluations"] = r.tuning.search.evaluations;
        d["history"] = r.tuning.search.best_history;
        return d;
      },
      py::arg("config"), py::arg("budget") = py::none(), py::arg("bounded") = true,
      "Tunes the PID gains on the configured scenario. Returns gains, costs and the best-so-far history.");

  // --- PWPF -----------------------------------------------------------------------
  py::class_<PwpfModulator>(m, "PwpfModulator")
      .def(py::init([](double km, double tm, double u_on, double u_off, double thrust) {
             return PwpfModulator(PwpfParams{km, tm, u_on, u_off, thrust});
           }),
           py::arg("km") = 4.5, py::arg("tm") = 0.15, py::arg("u_on") = 0.45, py::arg("u_off") = 0.15,
           py::arg("thrust") = 1.0)
      .def("step", &PwpfModulator::step, py::arg("command"), py::arg("dt"))
      .def("reset", &PwpfModulator::reset)
      .def_property_readonly("filter", [](const PwpfModulator& p) { return p.state().filter; });

  // --- ANFIS ----------------------------------------------------------------------
  py::class_<anfis::AnfisModel>(m, "AnfisModel")
      .def_property_readonly("n_inputs", &anfis::AnfisModel::n_inputs)
      .def_property_readonly("rule_count", &anfis::AnfisModel::rule_count)
      .def_readwrite("consequent", &anfis::AnfisModel::consequent)
      .def("__call__", [](const anfis::AnfisModel& model, const std::vector<double>& x) { return anfis::evaluate(model, x); })
      .def("predict", [](const anfis::AnfisModel& model, const Eigen::MatrixXd& x) {
        Eigen::VectorXd y(x.rows());
        std::vector<double> row(x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          for (Eigen::Index j = 0; j < x.cols(); ++j) row[j] = x(i, j);
          y[i] = anfis::evaluate(model, row);
        }
        return y;
      });
  m.def("grid_partition_init", &anfis::grid_partition_init, py::arg("ranges"), py::arg("mfs_per_input"),
        py::arg("width") = 0.5);
  m.def(
      "train_anfis",
      [](const anfis::AnfisModel& init, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int epochs,
         double learning_rate, double ridge) {
        anfis::TrainingSet d{x, y};
        anfis::TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        cfg.ridge = ridge;
        anfis::TrainResult r;
        {
          py::gil_scoped_release release;
          r = anfis::train(init, d, cfg);
        }
        return py::make_tuple(r.model, r.rmse_history);
      },
      py::arg("model"), py::arg("inputs"), py::arg("targets"), py::arg("epochs") = 10,
      py::arg("learning_rate") = 0.01, py::arg("ridge") = 1e-8,
      "Hybrid training; returns (best model, per-epoch RMSE).");
  m.def("save_model", &anfis::save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &anfis::load_model, py::arg("path"));

  // --- role bundles ---------------------------------------------------------------
  py::class_<RoleBundle, BundlePtr>(m, "RoleBundle")
      .def_property_readonly("role", [](const RoleBundle& b) { return to_string(b.role); })
      .def_readonly("input_names", &RoleBundle::input_names)
      .def_readonly("output_names", &RoleBundle::output_names)
      .def_property_readonly("metadata", [](const RoleBundle& b) { return b.metadata.dump(); })
      .def("predict", [](const RoleBundle& b, const std::vector<double>& raw) { return b.predict(raw); });
  m.def("load_bundle", [](const std::string& dir) { return std::make_shared<RoleBundle>(load_bundle(dir)); },
        py::arg("dir"));
  m.def(
      "save_bundle", [](const BundlePtr& b, const std::string& dir) { save_bundle(*b, dir); }, py::arg("bundle"),
      py::arg("dir"));
  m.def(
      "generate_data",
      [](const AppConfig& cfg, const std::string& role, std::optional<PidGains> teacher) {
        const PidGains g = gains_or_default(cfg, teacher);
        const Role r = role_from_string(role);
        Dataset d;
        {
          py::gil_scoped_release release;
          const DataGenConfig data = cfg.data_config();
          d = r == Role::controller ? generate_controller_data(g, data, derive_seed(cfg.sim.seed, 1))
                                    : (r == Role::estimator
                                           ? generate_estimator_data(make_scenarios(data, g, derive_seed(cfg.sim.seed, 2)))
                                           : generate_integrated_data(make_scenarios(data, g, derive_seed(cfg.sim.seed, 2))));
        }
        return py::make_tuple(d.inputs, d.targets, d.run);
      },
      py::arg("config"), py::arg("role"), py::arg("teacher") = py::none(),
      "Training data for a role as (inputs, targets, run index), seeded like the CLI.");
  m.def(
      "train_role",
      [](const AppConfig& cfg, const std::string& role, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
         const std::vector<int>& run) {
        Dataset d{role_from_string(role), inputs, targets, run};
        RoleTrainOptions options = cfg.train(d.role);
        options.train.seed = derive_seed(cfg.sim.seed, 3 + static_cast<std::uint64_t>(d.role));
        py::gil_scoped_release release;
        return std::make_shared<RoleBundle>(train_role(d, options, cfg.mc_max));
      },
      py::arg("config"), py::arg("role"), py::arg("inputs"), py::arg("targets"), py::arg("run"));

  // --- simulation -----------------------------------------------------------------
  m.def(
      "simulate",
      [](const AppConfig& cfg, std::optional<PidGains> gains, BundlePtr controller, BundlePtr estimator,
         BundlePtr integrated) {
        SimConfig sim = cfg.sim;
        sim.gains = gains_or_default(cfg, gains);
        RunRecord r;
        {
          py::gil_scoped_release release;
          r = run_closed_loop(sim, make_bundles(controller, estimator, integrated));
        }
        return run_dict(r);
      },
      py::arg("config"), py::arg("gains") = py::none(), py::arg("controller") = nullptr,
      py::arg("estimator") = nullptr, py::arg("integrated") = nullptr,
      "One closed-loop run; returns arrays t, q, w, euler, qe, command, applied and a metrics dict.");
  m.def(
      "evaluate",
      [](const AppConfig& cfg, const PidGains& gains, BundlePtr controller) {
        std::vector<EvaluationRow> rows;
        {
          py::gil_scoped_release release;
          rows = evaluate_controllers(cfg.sim, cfg.inertia_uncertain, gains_or_default(cfg, gains),
                                      make_bundles(controller, nullptr, nullptr));
        }
        py::list out;
        for (const EvaluationRow& r : rows) {
          py::dict d = metrics_dict(r.metrics);
          d["condition"] = r.condition;
          d["controller"] = r.controller;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("gains"), py::arg("controller"));
  m.def(
      "monte_carlo",
      [](const AppConfig& cfg, std::optional<PidGains> gains, BundlePtr controller, BundlePtr estimator,
         BundlePtr integrated, int workers) {
        MonteCarloConfig mc = cfg.monte_carlo_config();
        mc.base.gains = gains_or_default(cfg, gains);
        mc.workers = workers;
        MonteCarloReport rep;
        {
          py::gil_scoped_release release;
          rep = monte_carlo(mc, make_bundles(controller, estimator, integrated));
        }
        const auto n = static_cast<Eigen::Index>(rep.runs.size());
        Eigen::MatrixXd err(n, 3), mean(n, 3), sigma3(n, 3);
        for (Eigen::Index k = 0; k < n; ++k) {
          err.row(k) = (rep.runs[k].failed ? Vec3::Constant(NAN) : rep.runs[k].final_error).transpose();
          mean.row(k) = rep.running_mean[k].transpose();
          sigma3.row(k) = rep.running_sigma3[k].transpose();
        }
        py::dict d;
        d["final_error"] = err;
        d["running_mean"] = mean;
        d["running_sigma3"] = sigma3;
        d["failed"] = rep.failed;
        d["max_abs_error_deg"] = rep.max_abs_error_deg;
        return d;
      },
      py::arg("config"), py::arg("gains") = py::none(), py::arg("controller") = nullptr,
      py::arg("estimator") = nullptr, py::arg("integrated") = nullptr, py::arg("workers") = 1);
}
