#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

namespace adcs::anfis {

/// Generalized bell membership μ(x) = 1 / (1 + |(x - c)/a|^(2b)).
struct BellMf {
  double a = 1.0;  // half-width, input units
  double b = 2.0;  // slope exponent
  double c = 0.0;  // center, input units

  double operator()(double x) const;
};

/// Full Cartesian rule grid. Rule r combines one membership function per
/// input; the last input varies fastest.
class RuleGrid {
 public:
  RuleGrid() = default;
  explicit RuleGrid(std::vector<int> mfs_per_input);

  int n_inputs() const { return static_cast<int>(mfs_.size()); }
  int rule_count() const { return rules_; }
  const std::vector<int>& mfs_per_input() const { return mfs_; }
  int mf_index(int rule, int input) const { return table_[static_cast<std::size_t>(rule) * mfs_.size() + input]; }

 private:
  std::vector<int> mfs_;
  std::vector<int> table_;
  int rules_ = 0;
};

struct TrainingMetadata {
  int epochs = 0;
  double final_rmse = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
};

/// First-order Takagi–Sugeno model with a single output.
struct AnfisModel {
  RuleGrid grid;
  std::vector<std::vector<BellMf>> premise;            // [input][mf]
  Eigen::MatrixXd consequent;                           // rule x (n_inputs + 1), bias last
  std::vector<std::pair<double, double>> input_ranges;  // per input
  TrainingMetadata metadata;

  int n_inputs() const { return grid.n_inputs(); }
  int rule_count() const { return grid.rule_count(); }
  int consequent_count() const { return rule_count() * (n_inputs() + 1); }
  int premise_count() const;
  void validate() const;
};

/// Per-layer intermediates of one forward pass.
struct ForwardTrace {
  std::vector<std::vector<double>> membership;  // layer 1, [input][mf]
  std::vector<double> firing;                   // layer 2
  std::vector<double> normalized;               // layer 3
  std::vector<double> rule_output;              // f_i
  std::vector<double> weighted;                 // layer 4
  double output = 0.0;                          // layer 5
  bool underflow = false;                       // uniform fallback used
};

/// Below this total firing strength layer 3 falls back to uniform weights.
inline constexpr double kFiringFloor = 1e-300;

ForwardTrace forward(const AnfisModel& model, std::span<const double> x);
/// Layer-5 output only; throws DimensionError on a size mismatch.
double evaluate(const AnfisModel& model, std::span<const double> x);

struct TrainingSet {
  Eigen::MatrixXd inputs;  // N x n_inputs
  Eigen::VectorXd targets;

  Eigen::Index size() const { return inputs.rows(); }
  std::vector<std::pair<double, double>> input_ranges() const;
  void validate(int n_inputs) const;
};

double rmse(const AnfisModel& model, const TrainingSet& data);

struct LseResult {
  double rmse = 0.0;
  bool rank_deficient = false;
};

/// Solves min ‖Aθ − y‖² + λ‖θ‖² for the consequents with an orthogonal
/// factorization; premises are untouched. With λ = 0 a rank-deficient system
/// yields the minimum-norm solution and sets `rank_deficient`.
LseResult lse_consequents(AnfisModel& model, const TrainingSet& data, double ridge = 1e-8);

/// ∂E/∂(a, b, c) for E = ½ Σ (ŷ − y)², laid out like `premise`.
struct PremiseGradient {
  std::vector<std::vector<Eigen::Vector3d>> d;  // [input][mf] -> (a, b, c)
  double loss = 0.0;

  double norm() const;
};

PremiseGradient premise_gradient(const AnfisModel& model, const TrainingSet& data);

struct TrainConfig {
  int epochs = 10;
  /// Length of each premise step in the (a, b, c) space, i.e. the update is
  /// −η g/‖g‖.
  double learning_rate = 0.01;
  double learning_rate_decay = 0.5;  // applied when the epoch RMSE rises
  double ridge = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  AnfisModel model;                  // best-RMSE model seen
  std::vector<double> rmse_history;  // after each epoch's least-squares pass
  double initial_rmse = 0.0;
};

/// Hybrid learning: each epoch solves the consequents by least squares, then
/// takes one gradient step on the premises. Throws DivergedError naming the
/// epoch if the loss turns non-finite.
TrainResult train(AnfisModel model, const TrainingSet& data, const TrainConfig& config);

/// Evenly spaced bell functions (a = width · spacing, b = 2) and zero
/// consequents. The default width puts neighbours' crossover halfway between
/// centers; width 1 makes them cross at 0.5 on each other's centers. An input with a single MF gets one bell spanning its range;
/// it is common to every rule and so cancels in layer 3, leaving the input
/// in the linear consequents only.
AnfisModel grid_partition_init(const std::vector<std::pair<double, double>>& ranges,
                               const std::vector<int>& mfs_per_input, double width = 0.5);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const AnfisModel& model);
/// Throws ParseError or VersionError; never returns a partial model.
AnfisModel from_json(const nlohmann::json& doc);

void save_model(const AnfisModel& model, const std::string& path);
AnfisModel load_model(const std::string& path);

}  // namespace adcs::anfis
