#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "adcs/anfis.hpp"
#include "adcs/sim.hpp"

namespace adcs {

enum class Role { controller, estimator, integrated };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

/// (q_e1..3, ω1..3)
const std::vector<std::string>& controller_input_names();
/// Body and inertial sensor directions plus the gyro: 15 channels.
const std::vector<std::string>& sensor_input_names();
const std::vector<std::string>& role_input_names(Role role);
const std::vector<std::string>& role_output_names(Role role);

std::vector<double> sensor_features(const SensorReading& reading);

/// Samples tagged with the simulation run they came from.
struct Dataset {
  Role role = Role::controller;
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  std::vector<int> run;

  Eigen::Index size() const { return inputs.rows(); }
  int run_count() const;
  /// Header: run, <input channels>, <target channels>.
  void save_csv(const std::string& path) const;
  static Dataset load_csv(const std::string& path, Role role);
};

struct DataGenConfig {
  int runs = 15;
  double angle_range_deg = 15.0;  // initial Euler angles uniform in ±range
  double rate_range = 0.1;        // initial rates uniform in ±range, rad/s
  double inertia_range = 0.0;     // plant inertia perturbation, kg·m² per axis
  bool noise = true;              // sensor noise in estimator/integrated data
  SimConfig base;                 // dt, duration, desired attitude, geo, epoch, noise levels

  void validate() const;
};

/// Randomized closed-loop scenarios for data generation. Run k depends only
/// on (config, seed, k).
std::vector<SimConfig> make_scenarios(const DataGenConfig& config, const PidGains& teacher, std::uint64_t seed);

/// PID teacher data (q_e, ω) → M_c on the nominal plant; one sample per
/// integration step. Diverged runs are redrawn.
Dataset generate_controller_data(const PidGains& gains, const DataGenConfig& config, std::uint64_t seed);

/// Sensor features → true (q, ω).
Dataset generate_estimator_data(const std::vector<SimConfig>& scenarios);
/// Sensor features → PID teacher torque.
Dataset generate_integrated_data(const std::vector<SimConfig>& scenarios);

struct RoleTrainOptions {
  /// MFs per selected input; empty selects the role default.
  std::vector<int> mfs_per_input;
  anfis::TrainConfig train;
  double holdout_fraction = 0.1;  // whole runs, taken from the end
  int stride = 1;                 // training subsampling
  double prune_tolerance = 1e-9;  // channels with a smaller span are dropped
  double mf_width = 1.0;          // initial bell half-width, in MF spacings
};

RoleTrainOptions default_train_options(Role role);

/// One single-output model per output channel sharing the input selection
/// and normalization.
class RoleBundle {
 public:
  Role role = Role::controller;
  std::vector<std::string> input_names;   // raw feature order
  std::vector<int> selected;              // raw indices fed to the models
  std::vector<std::pair<double, double>> ranges;  // per selected input, raw units
  std::vector<std::string> output_names;
  std::vector<anfis::AnfisModel> models;
  double mc_max = 1.0;
  nlohmann::json metadata = nlohmann::json::object();

  int input_dimension() const { return static_cast<int>(input_names.size()); }
  /// Raw features → per-channel outputs. Throws DimensionError on a size
  /// mismatch; inputs far outside the training envelope log a diagnostic.
  std::vector<double> predict(std::span<const double> raw) const;
  std::vector<double> normalize(std::span<const double> raw) const;
};

RoleBundle train_role(const Dataset& data, const RoleTrainOptions& options, double mc_max);

Torque anfis_control(const RoleBundle& bundle, const Vec3& qe, const AngularVelocity& w);

struct StateEstimate {
  Quaternion q;
  AngularVelocity w = AngularVelocity::Zero();
};

/// Throws EstimateInvalidError when the predicted quaternion norm is < 0.1.
StateEstimate anfis_estimate(const RoleBundle& bundle, const SensorReading& reading);

Torque anfis_integrated(const RoleBundle& bundle, const SensorReading& reading);

inline constexpr int kBundleFormatVersion = 1;

/// Directory with manifest.json and one model file per channel.
void save_bundle(const RoleBundle& bundle, const std::string& dir);
RoleBundle load_bundle(const std::string& dir);

/// Angle between two attitudes, degrees.
double attitude_difference_deg(const Quaternion& a, const Quaternion& b);

}  // namespace adcs
