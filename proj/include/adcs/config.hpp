#pragma once

#include <cstdint>
#include <string>

#include "adcs/io.hpp"
#include "adcs/roles.hpp"
#include "adcs/sim.hpp"

namespace adcs {

struct ArtifactPaths {
  std::string gains = "artifacts/gains.ini";
  std::string data_dir = "artifacts/data";
  std::string controller_bundle = "artifacts/controller";
  std::string estimator_bundle = "artifacts/estimator";
  std::string integrated_bundle = "artifacts/integrated";

  std::string bundle(Role role) const;
  std::string dataset(Role role) const;
};

/// Everything a CLI command needs. `sim.seed` is the single run seed; the
/// tuning, data, training and Monte Carlo streams derive from it.
struct AppConfig {
  SimConfig sim;
  InertiaTensor inertia_uncertain{2.5, 4.0, 3.3};
  double mc_max = 1.0;  // N·m per axis; also the default PWPF thrust
  int tuning_budget = 500;
  double gain_bound_factor = 2.0;        // see tuning_bounds; 0 disables the box
  double integral_bound_fraction = 0.05;
  DataGenConfig data;
  RoleTrainOptions train_controller = default_train_options(Role::controller);
  RoleTrainOptions train_estimator = default_train_options(Role::estimator);
  RoleTrainOptions train_integrated = default_train_options(Role::integrated);
  MonteCarloConfig monte_carlo;  // base is filled from sim at use
  ArtifactPaths artifacts;
  std::string source = "<defaults>";

  RoleTrainOptions& train(Role role);
  const RoleTrainOptions& train(Role role) const;
  /// Monte Carlo settings with the current sim as base and seed as master.
  MonteCarloConfig monte_carlo_config() const;
  DataGenConfig data_config() const;
};

/// Unknown sections or keys and out-of-range values throw ConfigError; a
/// missing file throws MissingArtifactError, broken syntax ParseError.
AppConfig load_app_config(const std::string& path);
AppConfig parse_app_config(const IniDocument& doc);
/// Full echo of the effective configuration, loadable by parse_app_config.
IniDocument to_ini(const AppConfig& config);

}  // namespace adcs
