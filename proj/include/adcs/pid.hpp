#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adcs/dynamics.hpp"

namespace adcs {

/// Diagonal gains of M_c = Kp q_e + Kd ω + Kq ∫q_e dt + Kω ∫ω dt.
/// Negative gains give negative feedback.
struct PidGains {
  Vec3 kp = Vec3::Zero();
  Vec3 kd = Vec3::Zero();
  Vec3 kq = Vec3::Zero();
  Vec3 kw = Vec3::Zero();
  double mc_max = 1.0;  // N·m per axis

  static constexpr int kParameterCount = 12;

  /// Stacked as (kp, kd, kq, kw), each x/y/z.
  std::vector<double> to_vector() const;
  static PidGains from_vector(std::span<const double> v, double mc_max);
  void validate() const;
};

/// Integral accumulators with per-axis anti-windup flags.
struct PidState {
  Vec3 int_qe = Vec3::Zero();
  Vec3 int_w = Vec3::Zero();
  std::array<bool, 3> saturated{false, false, false};
};

/// Per-axis clamp to [-mc_max, mc_max].
Torque saturate(const Torque& mc, double mc_max);

/// Evaluates the control law on the current accumulators, then clamps.
/// Pure: the state is not advanced.
Torque pid_control(const Vec3& qe, const AngularVelocity& w, const PidState& state,
                   const PidGains& gains);

/// Stateful wrapper: computes the command, then integrates q_e and ω over
/// `dt` on every axis that is not saturated.
class PidController {
 public:
  explicit PidController(PidGains gains) : gains_(std::move(gains)) { gains_.validate(); }

  Torque update(const Vec3& qe, const AngularVelocity& w, double dt);
  void reset() { state_ = {}; }

  const PidState& state() const { return state_; }
  const PidGains& gains() const { return gains_; }

 private:
  PidGains gains_;
  PidState state_;
};

/// J = ∫ (Σ|ω_i| + Σ|q_ei|) dt, accumulated with the rectangle rule.
struct CostValue {
  double j = 0.0;
};

CostValue accumulate_cost(CostValue cost, const Vec3& qe, const AngularVelocity& w, double dt);

// --- derivative-free optimization -----------------------------------------

struct NelderMeadOptions {
  int budget = 500;               // objective evaluations
  double initial_step = 0.25;     // relative simplex edge (absolute when |x| is small)
  double min_step = 1e-3;         // absolute edge floor
  double tolerance = 1e-10;       // simplex spread in f that triggers a restart
  std::uint64_t seed = 0;
};

struct OptimizationResult {
  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  double initial_f = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int restarts = 0;
  std::vector<double> history;       // f of every evaluation
  std::vector<double> best_history;  // best-so-far after every evaluation
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder–Mead simplex search with restarts around the incumbent. Non-finite
/// objective values are treated as +∞. The first evaluation is always x0, so
/// best_f <= f(x0).
OptimizationResult nelder_mead(const Objective& f, std::vector<double> x0,
                               const NelderMeadOptions& options = {});

/// Axis-wise box on the gains. Candidates outside it cost +∞ without being
/// simulated.
struct GainBounds {
  PidGains lower;
  PidGains upper;

  bool contains(const PidGains& g) const;
};

struct GainTuningResult {
  PidGains gains;
  OptimizationResult search;
};

GainTuningResult optimize_gains(const std::function<double(const PidGains&)>& objective,
                                const PidGains& initial, int budget = 500,
                                std::uint64_t seed = 0,
                                const std::optional<GainBounds>& bounds = std::nullopt);

// --- gains file ------------------------------------------------------------

inline constexpr int kGainsFormatVersion = 1;

struct GainsFile {
  PidGains gains;
  double cost = std::numeric_limits<double>::quiet_NaN();
  int evaluations = 0;
  std::uint64_t seed = 0;
};

void save_gains(const GainsFile& file, const std::string& path);
/// Throws MissingArtifactError, ParseError or VersionError.
GainsFile load_gains(const std::string& path);

}  // namespace adcs
