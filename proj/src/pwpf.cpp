#include "adcs/pwpf.hpp"

#include <cmath>

#include "adcs/errors.hpp"

namespace adcs {

void PwpfParams::validate() const {
  if (!(tm > 0.0)) throw DomainError("PWPF time constant must be positive");
  if (!(u_off > 0.0 && u_off < u_on)) throw DomainError("PWPF thresholds must satisfy 0 < Uoff < Uon");
  if (!(thrust > 0.0)) throw DomainError("PWPF thrust must be positive");
  if (!std::isfinite(km)) throw DomainError("PWPF gain must be finite");
}

PwpfState pwpf_reset(const PwpfParams& params) {
  params.validate();
  return {};
}

PwpfOutput pwpf_step(const PwpfState& state, const Torque& command, double dt, const PwpfParams& p) {
  if (!(dt > 0.0) || dt > p.tm / 5.0 + 1e-15)
    throw DomainError("PWPF step must satisfy 0 < dt <= Tm/5");
  const double decay = std::exp(-dt / p.tm);
  PwpfOutput out{state, Torque::Zero()};
  for (int i = 0; i < 3; ++i) {
    const double e = p.km * command[i] - p.thrust * state.firing[i];
    double& f = out.state.filter[i];
    f = e + (f - e) * decay;
    int& firing = out.state.firing[i];
    if (firing == 0) {
      if (std::abs(f) >= p.u_on) firing = f > 0.0 ? 1 : -1;
    } else if (std::abs(f) <= p.u_off) {
      firing = 0;
    }
    out.torque[i] = p.thrust * firing;
  }
  return out;
}

PwpfModulator::PwpfModulator(const PwpfParams& params) : params_(params), state_(pwpf_reset(params)) {}

Torque PwpfModulator::step(const Torque& command, double dt) {
  PwpfOutput out = pwpf_step(state_, command, dt, params_);
  state_ = out.state;
  return out.torque;
}

void PwpfModulator::reset() { state_ = pwpf_reset(params_); }

}  // namespace adcs
