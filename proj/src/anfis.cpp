#include "adcs/anfis.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Dense>
#include <Eigen/QR>
#include <spdlog/spdlog.h>

#include "adcs/errors.hpp"

namespace adcs::anfis {

namespace {

void note_underflow() {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true))
    spdlog::warn("ANFIS firing strengths underflowed; using uniform rule weights");
  else
    spdlog::debug("ANFIS firing strengths underflowed");
}

/// Layers 1–3 for one sample, reusing caller-owned buffers.
struct Workspace {
  std::vector<std::vector<double>> mu;
  std::vector<double> firing;
  std::vector<double> norm;

  explicit Workspace(const AnfisModel& m) : mu(m.n_inputs()), firing(m.rule_count()), norm(m.rule_count()) {
    for (int j = 0; j < m.n_inputs(); ++j) mu[j].resize(m.premise[j].size());
  }

  /// Returns false when the uniform fallback was used.
  bool compute(const AnfisModel& m, const double* x) {
    const int n = m.n_inputs();
    for (int j = 0; j < n; ++j)
      for (std::size_t k = 0; k < mu[j].size(); ++k) mu[j][k] = m.premise[j][k](x[j]);
    const int r = m.rule_count();
    double total = 0.0;
    for (int i = 0; i < r; ++i) {
      double w = 1.0;
      for (int j = 0; j < n; ++j) w *= mu[j][m.grid.mf_index(i, j)];
      firing[i] = w;
      total += w;
    }
    if (!(total >= kFiringFloor)) {
      std::fill(norm.begin(), norm.end(), 1.0 / r);
      return false;
    }
    for (int i = 0; i < r; ++i) norm[i] = firing[i] / total;
    return true;
  }
};

double rule_output(const AnfisModel& m, int rule, const double* x) {
  const int n = m.n_inputs();
  double f = m.consequent(rule, n);
  for (int j = 0; j < n; ++j) f += m.consequent(rule, j) * x[j];
  return f;
}

void check_dimension(const AnfisModel& m, std::size_t size) {
  if (static_cast<int>(size) != m.n_inputs())
    throw DimensionError("ANFIS input has " + std::to_string(size) + " components, model expects " +
                         std::to_string(m.n_inputs()));
}

/// Row-major copy so a sample's inputs are contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

double BellMf::operator()(double x) const {
  const double z = std::abs((x - c) / a);
  return 1.0 / (1.0 + std::pow(z, 2.0 * b));
}

RuleGrid::RuleGrid(std::vector<int> mfs_per_input) : mfs_(std::move(mfs_per_input)) {
  if (mfs_.empty()) throw DomainError("rule grid needs at least one input");
  long long rules = 1;
  for (int m : mfs_) {
    if (m < 1) throw DomainError("every input needs at least one membership function");
    rules *= m;
    if (rules > 1'000'000) throw DomainError("rule grid too large");
  }
  rules_ = static_cast<int>(rules);
  const std::size_t n = mfs_.size();
  table_.resize(static_cast<std::size_t>(rules_) * n);
  for (int r = 0; r < rules_; ++r) {
    int rem = r;
    for (int j = static_cast<int>(n) - 1; j >= 0; --j) {
      table_[static_cast<std::size_t>(r) * n + j] = rem % mfs_[j];
      rem /= mfs_[j];
    }
  }
}

int AnfisModel::premise_count() const {
  int count = 0;
  for (const auto& mfs : premise) count += 3 * static_cast<int>(mfs.size());
  return count;
}

void AnfisModel::validate() const {
  const int n = n_inputs();
  if (static_cast<int>(premise.size()) != n) throw DomainError("premise table does not match the grid");
  for (int j = 0; j < n; ++j) {
    if (static_cast<int>(premise[j].size()) != grid.mfs_per_input()[j])
      throw DomainError("premise table does not match the grid");
    for (const auto& mf : premise[j])
      if (!(mf.a > 0.0) || !(mf.b > 0.0) || !std::isfinite(mf.a) || !std::isfinite(mf.b) || !std::isfinite(mf.c))
        throw DomainError("membership parameters must be finite with a > 0 and b > 0");
  }
  if (consequent.rows() != rule_count() || consequent.cols() != n + 1)
    throw DomainError("consequent table must be rules x (inputs + 1)");
  if (!consequent.allFinite()) throw DomainError("consequent parameters must be finite");
  if (static_cast<int>(input_ranges.size()) != n) throw DomainError("input ranges do not match the grid");
}

ForwardTrace forward(const AnfisModel& model, std::span<const double> x) {
  check_dimension(model, x.size());
  Workspace ws(model);
  ForwardTrace t;
  t.underflow = !ws.compute(model, x.data());
  if (t.underflow) note_underflow();
  t.membership = ws.mu;
  t.firing = ws.firing;
  t.normalized = ws.norm;
  const int r = model.rule_count();
  t.rule_output.resize(r);
  t.weighted.resize(r);
  for (int i = 0; i < r; ++i) {
    t.rule_output[i] = rule_output(model, i, x.data());
    t.weighted[i] = t.normalized[i] * t.rule_output[i];
    t.output += t.weighted[i];
  }
  return t;
}

double evaluate(const AnfisModel& model, std::span<const double> x) {
  check_dimension(model, x.size());
  thread_local std::vector<double> mu_flat;
  const int n = model.n_inputs();
  // Offsets of each input's memberships inside mu_flat.
  thread_local std::vector<int> offset;
  offset.assign(n + 1, 0);
  for (int j = 0; j < n; ++j) offset[j + 1] = offset[j] + static_cast<int>(model.premise[j].size());
  mu_flat.resize(offset[n]);
  for (int j = 0; j < n; ++j)
    for (std::size_t k = 0; k < model.premise[j].size(); ++k) mu_flat[offset[j] + k] = model.premise[j][k](x[j]);

  double total = 0.0;
  double acc = 0.0;
  double plain = 0.0;
  const int r = model.rule_count();
  for (int i = 0; i < r; ++i) {
    double w = 1.0;
    for (int j = 0; j < n; ++j) w *= mu_flat[offset[j] + model.grid.mf_index(i, j)];
    const double f = rule_output(model, i, x.data());
    total += w;
    acc += w * f;
    plain += f;
  }
  if (!(total >= kFiringFloor)) {
    note_underflow();
    return plain / r;
  }
  return acc / total;
}

std::vector<std::pair<double, double>> TrainingSet::input_ranges() const {
  std::vector<std::pair<double, double>> out;
  for (Eigen::Index j = 0; j < inputs.cols(); ++j)
    out.emplace_back(inputs.col(j).minCoeff(), inputs.col(j).maxCoeff());
  return out;
}

void TrainingSet::validate(int n_inputs) const {
  if (inputs.rows() == 0) throw DomainError("training set is empty");
  if (inputs.cols() != n_inputs)
    throw DimensionError("training inputs have " + std::to_string(inputs.cols()) +
                         " columns, model expects " + std::to_string(n_inputs));
  if (targets.size() != inputs.rows()) throw DimensionError("training targets and inputs differ in length");
}

double rmse(const AnfisModel& model, const TrainingSet& data) {
  data.validate(model.n_inputs());
  const RowMatrix x = data.inputs;
  double sse = 0.0;
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    const double e = evaluate(model, std::span<const double>(x.row(s).data(), x.cols())) - data.targets[s];
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(x.rows()));
}

LseResult lse_consequents(AnfisModel& model, const TrainingSet& data, double ridge) {
  data.validate(model.n_inputs());
  if (!(ridge >= 0.0)) throw DomainError("ridge must be nonnegative");
  const int n = model.n_inputs();
  const int r = model.rule_count();
  const Eigen::Index rows = data.size();
  const Eigen::Index params = static_cast<Eigen::Index>(r) * (n + 1);
  const RowMatrix x = data.inputs;

  const Eigen::Index extra = ridge > 0.0 ? params : 0;
  Eigen::MatrixXd a(rows + extra, params);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows + extra);
  y.head(rows) = data.targets;
  Workspace ws(model);
  bool underflow = false;
  for (Eigen::Index s = 0; s < rows; ++s) {
    underflow |= !ws.compute(model, x.row(s).data());
    for (int i = 0; i < r; ++i) {
      const double w = ws.norm[i];
      const Eigen::Index base = static_cast<Eigen::Index>(i) * (n + 1);
      for (int j = 0; j < n; ++j) a(s, base + j) = w * x(s, j);
      a(s, base + n) = w;
    }
  }
  if (underflow) note_underflow();

  LseResult result;
  Eigen::VectorXd theta;
  if (ridge > 0.0) {
    a.bottomRows(extra).setZero();
    a.bottomRows(extra).diagonal().setConstant(std::sqrt(ridge));
    theta = a.householderQr().solve(y);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    result.rank_deficient = cod.rank() < params;
    if (result.rank_deficient)
      spdlog::warn("consequent system is rank deficient ({} of {}); using the minimum-norm solution",
                   cod.rank(), params);
    theta = cod.solve(y);
  }

  for (int i = 0; i < r; ++i)
    for (int j = 0; j <= n; ++j) model.consequent(i, j) = theta[static_cast<Eigen::Index>(i) * (n + 1) + j];

  const Eigen::VectorXd residual = a.topRows(rows) * theta - data.targets;
  result.rmse = std::sqrt(residual.squaredNorm() / static_cast<double>(rows));
  return result;
}

double PremiseGradient::norm() const {
  double s = 0.0;
  for (const auto& input : d)
    for (const auto& g : input) s += g.squaredNorm();
  return std::sqrt(s);
}

PremiseGradient premise_gradient(const AnfisModel& model, const TrainingSet& data) {
  data.validate(model.n_inputs());
  const int n = model.n_inputs();
  const int r = model.rule_count();
  const RowMatrix x = data.inputs;

  PremiseGradient g;
  g.d.resize(n);
  for (int j = 0; j < n; ++j) g.d[j].assign(model.premise[j].size(), Eigen::Vector3d::Zero());

  Workspace ws(model);
  std::vector<std::vector<double>> dmu(n);  // ∂E/∂μ for one sample
  for (int j = 0; j < n; ++j) dmu[j].resize(model.premise[j].size());
  std::vector<double> f(r), prefix(n + 1), suffix(n + 1);

  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    const double* xs = x.row(s).data();
    const bool ok = ws.compute(model, xs);
    double y = 0.0;
    double total = 0.0;
    for (int i = 0; i < r; ++i) {
      f[i] = rule_output(model, i, xs);
      y += ws.norm[i] * f[i];
      total += ws.firing[i];
    }
    const double e = y - data.targets[s];
    g.loss += 0.5 * e * e;
    if (!ok) continue;  // uniform fallback does not depend on the premises

    for (auto& v : dmu) std::fill(v.begin(), v.end(), 0.0);
    for (int i = 0; i < r; ++i) {
      // ∂E/∂w_i = e (f_i − y) / Σw
      const double gi = e * (f[i] - y) / total;
      if (gi == 0.0) continue;
      prefix[0] = 1.0;
      for (int j = 0; j < n; ++j) prefix[j + 1] = prefix[j] * ws.mu[j][model.grid.mf_index(i, j)];
      suffix[n] = 1.0;
      for (int j = n - 1; j >= 0; --j) suffix[j] = suffix[j + 1] * ws.mu[j][model.grid.mf_index(i, j)];
      for (int j = 0; j < n; ++j) dmu[j][model.grid.mf_index(i, j)] += gi * prefix[j] * suffix[j + 1];
    }

    for (int j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < model.premise[j].size(); ++k) {
        if (dmu[j][k] == 0.0) continue;
        const BellMf& mf = model.premise[j][k];
        const double z = (xs[j] - mf.c) / mf.a;
        const double az = std::abs(z);
        const double mu = ws.mu[j][k];
        const double mu2 = mu * mu;
        const double t = std::pow(az, 2.0 * mf.b);  // |z|^(2b)
        // dμ/dz = −2b μ² |z|^(2b−1) sign(z)
        const double tz = az > 0.0 ? std::pow(az, 2.0 * mf.b - 1.0) * (z > 0.0 ? 1.0 : -1.0) : 0.0;
        const double dmu_dz = -2.0 * mf.b * mu2 * tz;
        const double da = dmu_dz * (-z / mf.a);
        const double dc = dmu_dz * (-1.0 / mf.a);
        const double db = az > 0.0 ? -mu2 * t * 2.0 * std::log(az) : 0.0;
        g.d[j][k] += dmu[j][k] * Eigen::Vector3d(da, db, dc);
      }
    }
  }
  return g;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw DomainError("training needs at least one epoch");
  if (!(learning_rate >= 0.0)) throw DomainError("learning rate must be nonnegative");
  if (!(learning_rate_decay > 0.0 && learning_rate_decay <= 1.0))
    throw DomainError("learning-rate decay must be in (0, 1]");
  if (!(ridge >= 0.0)) throw DomainError("ridge must be nonnegative");
}

TrainResult train(AnfisModel model, const TrainingSet& data, const TrainConfig& config) {
  config.validate();
  model.validate();
  data.validate(model.n_inputs());
  if (data.size() < model.consequent_count())
    spdlog::warn("training set has {} samples for {} consequent parameters", data.size(),
                 model.consequent_count());

  TrainResult out;
  out.initial_rmse = rmse(model, data);
  out.model = model;
  double best = std::isfinite(out.initial_rmse) ? out.initial_rmse : std::numeric_limits<double>::infinity();
  double eta = config.learning_rate;
  double previous = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const LseResult lse = lse_consequents(model, data, config.ridge);
    if (!std::isfinite(lse.rmse) || !model.consequent.allFinite())
      throw DivergedError("ANFIS training diverged at epoch " + std::to_string(epoch));
    out.rmse_history.push_back(lse.rmse);
    if (lse.rmse < best) {
      best = lse.rmse;
      out.model = model;
      out.model.metadata.epochs = epoch;
    }
    if (lse.rmse > previous) eta *= config.learning_rate_decay;
    previous = lse.rmse;

    if (epoch == config.epochs || eta <= 0.0) continue;
    const PremiseGradient grad = premise_gradient(model, data);
    if (!std::isfinite(grad.loss))
      throw DivergedError("ANFIS training diverged at epoch " + std::to_string(epoch));
    const double gnorm = grad.norm();
    if (!(gnorm > 0.0) || !std::isfinite(gnorm)) continue;
    const double scale = eta / gnorm;
    for (int j = 0; j < model.n_inputs(); ++j) {
      for (std::size_t k = 0; k < model.premise[j].size(); ++k) {
        BellMf& mf = model.premise[j][k];
        mf.a = std::max(mf.a - scale * grad.d[j][k][0], 1e-6);
        mf.b = std::max(mf.b - scale * grad.d[j][k][1], 1e-3);
        mf.c -= scale * grad.d[j][k][2];
      }
    }
  }
  out.model.metadata.final_rmse = best;
  out.model.metadata.seed = config.seed;
  return out;
}

AnfisModel grid_partition_init(const std::vector<std::pair<double, double>>& ranges,
                               const std::vector<int>& mfs_per_input, double width) {
  if (!(width > 0.0) || !std::isfinite(width)) throw DomainError("membership width must be positive");
  if (ranges.size() != mfs_per_input.size())
    throw DimensionError("one range is needed per input");
  AnfisModel m;
  m.grid = RuleGrid(mfs_per_input);
  m.input_ranges = ranges;
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    const auto [lo, hi] = ranges[j];
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
      throw DomainError("degenerate input range for input " + std::to_string(j));
    const int count = mfs_per_input[j];
    std::vector<BellMf> mfs;
    if (count == 1) {
      mfs.push_back({0.5 * (hi - lo), 2.0, 0.5 * (lo + hi)});
    } else {
      const double spacing = (hi - lo) / (count - 1);
      for (int k = 0; k < count; ++k) mfs.push_back({width * spacing, 2.0, lo + k * spacing});
    }
    m.premise.push_back(std::move(mfs));
  }
  m.consequent = Eigen::MatrixXd::Zero(m.rule_count(), m.n_inputs() + 1);
  return m;
}

// --- persistence ------------------------------------------------------------

namespace {

double number_or_nan(const nlohmann::json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

nlohmann::json to_json(const AnfisModel& model) {
  using nlohmann::json;
  json doc;
  doc["format"] = "adcs-anfis-model";
  doc["version"] = kModelFormatVersion;
  doc["n_inputs"] = model.n_inputs();
  doc["mfs_per_input"] = model.grid.mfs_per_input();
  json ranges = json::array();
  for (const auto& [lo, hi] : model.input_ranges) ranges.push_back({lo, hi});
  doc["input_ranges"] = ranges;
  json premise = json::array();
  for (int j = 0; j < model.n_inputs(); ++j)
    for (std::size_t k = 0; k < model.premise[j].size(); ++k) {
      const BellMf& mf = model.premise[j][k];
      premise.push_back({{"input", j}, {"mf", k}, {"a", mf.a}, {"b", mf.b}, {"c", mf.c}});
    }
  doc["premise"] = premise;
  json consequent = json::array();
  for (int i = 0; i < model.rule_count(); ++i) {
    std::vector<double> coeff(model.n_inputs());
    for (int j = 0; j < model.n_inputs(); ++j) coeff[j] = model.consequent(i, j);
    consequent.push_back({{"rule", i}, {"coefficients", coeff}, {"bias", model.consequent(i, model.n_inputs())}});
  }
  doc["consequent"] = consequent;
  doc["training"] = {{"epochs", model.metadata.epochs},
                     {"final_rmse", std::isfinite(model.metadata.final_rmse) ? json(model.metadata.final_rmse) : json(nullptr)},
                     {"seed", model.metadata.seed}};
  return doc;
}

AnfisModel from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || doc.value("format", "") != "adcs-anfis-model")
      throw ParseError("not an ANFIS model document");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw VersionError("unsupported ANFIS model version " + std::to_string(version));
    AnfisModel m;
    const auto mfs = doc.at("mfs_per_input").get<std::vector<int>>();
    if (doc.at("n_inputs").get<int>() != static_cast<int>(mfs.size()))
      throw ParseError("n_inputs does not match mfs_per_input");
    m.grid = RuleGrid(mfs);
    for (const auto& r : doc.at("input_ranges")) m.input_ranges.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
    m.premise.resize(mfs.size());
    for (std::size_t j = 0; j < mfs.size(); ++j) m.premise[j].resize(mfs[j]);
    std::vector<std::vector<bool>> seen(mfs.size());
    for (std::size_t j = 0; j < mfs.size(); ++j) seen[j].assign(mfs[j], false);
    for (const auto& p : doc.at("premise")) {
      const auto j = p.at("input").get<std::size_t>();
      const auto k = p.at("mf").get<std::size_t>();
      if (j >= mfs.size() || k >= static_cast<std::size_t>(mfs[j])) throw ParseError("premise index out of range");
      m.premise[j][k] = {p.at("a").get<double>(), p.at("b").get<double>(), p.at("c").get<double>()};
      seen[j][k] = true;
    }
    for (const auto& s : seen)
      for (bool b : s)
        if (!b) throw ParseError("premise table is incomplete");
    const int n = static_cast<int>(mfs.size());
    m.consequent = Eigen::MatrixXd::Constant(m.rule_count(), n + 1, std::numeric_limits<double>::quiet_NaN());
    for (const auto& c : doc.at("consequent")) {
      const int i = c.at("rule").get<int>();
      const auto coeff = c.at("coefficients").get<std::vector<double>>();
      if (i < 0 || i >= m.rule_count() || static_cast<int>(coeff.size()) != n)
        throw ParseError("consequent row out of range");
      for (int j = 0; j < n; ++j) m.consequent(i, j) = coeff[j];
      m.consequent(i, n) = c.at("bias").get<double>();
    }
    const auto& t = doc.at("training");
    m.metadata.epochs = t.at("epochs").get<int>();
    m.metadata.final_rmse = number_or_nan(t.at("final_rmse"));
    m.metadata.seed = t.at("seed").get<std::uint64_t>();
    try {
      m.validate();
    } catch (const DomainError& e) {
      throw ParseError(std::string("invalid ANFIS model: ") + e.what());
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed ANFIS model: ") + e.what());
  }
}

void save_model(const AnfisModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << to_json(model).dump(1) << '\n';
}

AnfisModel load_model(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("ANFIS model file not found", path);
  std::ifstream in(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed ANFIS model " + path + ": " + e.what());
  }
  try {
    return from_json(doc);
  } catch (const VersionError& e) {
    throw VersionError(std::string(e.what()) + ": " + path);
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()) + ": " + path);
  }
}

}  // namespace adcs::anfis
