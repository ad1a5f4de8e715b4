#pragma once

#include <array>

#include "adcs/dynamics.hpp"

namespace adcs {

/// Pulse-width pulse-frequency modulator: gain, first-order lag and a
/// Schmitt trigger with thruster feedback, independently per axis.
struct PwpfParams {
  double km = 4.5;      // pre-filter gain
  double tm = 0.15;     // lag time constant, s
  double u_on = 0.45;   // trigger-on threshold
  double u_off = 0.15;  // trigger-off threshold
  double thrust = 1.0;  // N·m delivered by one firing thruster pair

  void validate() const;
};

struct PwpfState {
  Vec3 filter = Vec3::Zero();
  std::array<int, 3> firing{0, 0, 0};  // -1, 0 or +1
};

PwpfState pwpf_reset(const PwpfParams& params);

struct PwpfOutput {
  PwpfState state;
  Torque torque;  // thrust · firing
};

/// Advances the lag exactly over `dt` (zero-order hold on its input), then
/// applies the trigger. Requires 0 < dt <= Tm/5.
PwpfOutput pwpf_step(const PwpfState& state, const Torque& command, double dt, const PwpfParams& params);

class PwpfModulator {
 public:
  explicit PwpfModulator(const PwpfParams& params);

  Torque step(const Torque& command, double dt);
  void reset();

  const PwpfState& state() const { return state_; }
  const PwpfParams& params() const { return params_; }

 private:
  PwpfParams params_;
  PwpfState state_;
};

}  // namespace adcs
