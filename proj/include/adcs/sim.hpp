#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adcs/dynamics.hpp"
#include "adcs/pid.hpp"
#include "adcs/pwpf.hpp"
#include "adcs/sensors.hpp"

namespace adcs {

class RoleBundle;

enum class ControllerKind { pid, anfis, integrated };
/// truth: exact state. measured: two-vector attitude solution plus gyro.
/// anfis: trained estimator bundle.
enum class EstimatorKind { truth, measured, anfis };
enum class ModulatorKind { none, pwpf };
enum class DisturbanceKind { none, constant, sinusoidal };

std::string to_string(ControllerKind k);
std::string to_string(EstimatorKind k);
std::string to_string(ModulatorKind k);
std::string to_string(DisturbanceKind k);
ControllerKind controller_kind_from_string(const std::string& s);
EstimatorKind estimator_kind_from_string(const std::string& s);
ModulatorKind modulator_kind_from_string(const std::string& s);
DisturbanceKind disturbance_kind_from_string(const std::string& s);

struct Disturbance {
  DisturbanceKind kind = DisturbanceKind::none;
  Torque amplitude = Torque::Zero();
  double frequency_hz = 0.0;

  Torque at(double t) const;
};

struct SimConfig {
  InertiaTensor inertia_nominal{1.5, 2.6, 3.0};
  InertiaTensor inertia_true{1.5, 2.6, 3.0};  // drives the plant
  double dt = 0.01;
  double duration = 20.0;
  EulerAngles initial_attitude{10.0, 5.0, 10.0};
  AngularVelocity initial_rate{0.0125, 0.05, 0.075};
  EulerAngles desired{5.0, 0.0, 0.0};
  bool noise_enabled = false;
  NoiseSpec noise;
  Disturbance disturbance;
  GeoPosition geo;
  CalendarInstant epoch;
  ControllerKind controller = ControllerKind::pid;
  EstimatorKind estimator = EstimatorKind::truth;
  ModulatorKind modulator = ModulatorKind::none;
  PidGains gains;
  PwpfParams pwpf;
  std::uint64_t seed = 0;

  /// Number of integration steps; the record holds steps() + 1 samples.
  int steps() const;
  void validate() const;
  NoiseSpec effective_noise() const { return noise_enabled ? noise : NoiseSpec::off(); }
};

struct Bundles {
  std::shared_ptr<const RoleBundle> controller;
  std::shared_ptr<const RoleBundle> estimator;
  std::shared_ptr<const RoleBundle> integrated;
};

struct StepRecord {
  double t = 0.0;
  BodyState truth;
  Quaternion est_q;
  AngularVelocity est_w = AngularVelocity::Constant(std::numeric_limits<double>::quiet_NaN());
  Vec3 qe = Vec3::Zero();        // vector part of the error quaternion seen by the cost
  Torque command = Torque::Zero();
  Torque applied = Torque::Zero();  // after the modulator
  EulerAngles euler;
};

struct RunRecord {
  SimConfig config;
  std::vector<StepRecord> steps;
  std::vector<SensorReading> readings;  // only when requested

  double dt() const { return config.dt; }
};

struct RunOptions {
  bool record_readings = false;
};

/// Closes the loop sensors → estimator → error → controller → modulator →
/// plant at a fixed step. Throws DivergedError or MissingArtifactError.
RunRecord run_closed_loop(const SimConfig& config, const Bundles& bundles = {}, const RunOptions& options = {});

/// Error quaternion with the shorter-rotation sign (q4 >= 0).
Quaternion attitude_error(const Quaternion& q, const Quaternion& qc);

// --- metrics -----------------------------------------------------------------

struct FuelConsumption {
  Vec3 per_axis = Vec3::Zero();  // N·m·s
  double total = 0.0;
};

/// Rectangle rule over the integration intervals of |applied torque|.
FuelConsumption fuel_consumption(const RunRecord& record);

/// J accumulated over the integration intervals from the logged q_e and the
/// true body rates.
double trajectory_cost(const RunRecord& record);

/// Earliest sample time after which |err| stays within `band` for every
/// later sample; nullopt if the last sample is outside.
std::optional<double> settling_time(const std::vector<double>& t, const std::vector<double>& err, double band);

/// Per Euler axis, band = fraction · |initial − desired|. Axes that start on
/// target settle at t = 0.
std::array<std::optional<double>, 3> settling_time(const RunRecord& record, double band_fraction = 0.01);

/// |angle(end) − desired| per axis, degrees (signed = false) or signed.
Vec3 final_euler_error(const RunRecord& record, bool signed_error = false);

struct Metrics {
  FuelConsumption fuel;
  std::array<std::optional<double>, 3> settling;
  Vec3 final_error_deg = Vec3::Zero();
  double cost = 0.0;
};

Metrics compute_metrics(const RunRecord& record);

// --- persistence ----------------------------------------------------------

const std::vector<std::string>& run_record_columns();
void write_run_record_csv(const RunRecord& record, const std::string& path);
/// Reads back the columns written above (config is not restored).
RunRecord read_run_record_csv(const std::string& path, double dt);

// --- PID tuning -------------------------------------------------------------

/// Closed-loop J of `gains` on the tuning scenario (PID, truth estimator, no
/// noise, nominal plant). Diverged runs cost +∞.
double tuning_cost(const PidGains& gains, const SimConfig& scenario);

/// Critically damped-ish PD start point sized from the nominal inertia.
PidGains default_initial_gains(const InertiaTensor& inertia, double mc_max = 1.0);

struct TuningResult {
  GainTuningResult tuning;
  double initial_cost = 0.0;
};

/// Search box around a negative-feedback start point: proportional and
/// derivative gains keep their sign and may grow by at most `factor`;
/// integral gains stay within ±integral_fraction·|Kp| of the start.
GainBounds tuning_bounds(const PidGains& initial, double factor, double integral_fraction);

TuningResult tune_pid(const SimConfig& scenario, const PidGains& initial, int budget, std::uint64_t seed,
                      const std::optional<GainBounds>& bounds = std::nullopt);

// --- Monte Carlo ------------------------------------------------------------

struct MonteCarloConfig {
  int runs = 200;
  double angle_range_deg = 15.0;
  double rate_range = 0.1;     // rad/s
  double inertia_range = 1.0;  // kg·m², per axis
  bool noise = true;
  SimConfig base;
  std::uint64_t master_seed = 0;
  int workers = 1;

  void validate() const;
};

struct MonteCarloRun {
  int index = 0;
  bool failed = false;
  std::string failure;
  EulerAngles initial_attitude;
  AngularVelocity initial_rate = AngularVelocity::Zero();
  Vec3 inertia = Vec3::Zero();
  Vec3 final_error = Vec3::Zero();  // signed, degrees (φ, θ, ψ)
};

struct MonteCarloReport {
  std::vector<MonteCarloRun> runs;
  std::vector<Vec3> running_mean;    // after run k, over successful runs 1..k
  std::vector<Vec3> running_sigma3;  // 3 × population standard deviation
  int failed = 0;
  double max_abs_error_deg = 0.0;
};

/// Draws the k-th scenario of a campaign (depends only on config and k).
SimConfig monte_carlo_scenario(const MonteCarloConfig& config, int k, MonteCarloRun* draw = nullptr);

MonteCarloReport monte_carlo(const MonteCarloConfig& config, const Bundles& bundles);
void write_monte_carlo_csv(const MonteCarloReport& report, const std::string& path);

/// ADCS_WORKERS if set and valid, otherwise the hardware concurrency.
int default_worker_count();

// --- controller comparison ------------------------------------------------

struct EvaluationRow {
  std::string condition;   // nominal | noise | uncertainty
  std::string controller;  // ANFIS | PID
  Metrics metrics;
};

/// Runs the nominal, noisy and uncertain-inertia cases for the ANFIS and PID
/// controllers. The noisy cases use the measured estimator.
std::vector<EvaluationRow> evaluate_controllers(const SimConfig& base, const InertiaTensor& uncertain_inertia,
                                                const PidGains& gains, const Bundles& bundles);
void write_evaluation_csv(const std::vector<EvaluationRow>& rows, const std::string& path);
std::string format_evaluation_table(const std::vector<EvaluationRow>& rows);

}  // namespace adcs
