#include "adcs/pid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "adcs/errors.hpp"
#include "adcs/sensors.hpp"
#include "adcs/io.hpp"

namespace adcs {

std::vector<double> PidGains::to_vector() const {
  std::vector<double> v;
  v.reserve(kParameterCount);
  for (const Vec3* k : {&kp, &kd, &kq, &kw})
    for (int i = 0; i < 3; ++i) v.push_back((*k)[i]);
  return v;
}

PidGains PidGains::from_vector(std::span<const double> v, double mc_max) {
  if (v.size() != kParameterCount) throw DimensionError("PID gain vector must have 12 entries");
  PidGains g;
  Vec3* blocks[] = {&g.kp, &g.kd, &g.kq, &g.kw};
  for (int b = 0; b < 4; ++b)
    for (int i = 0; i < 3; ++i) (*blocks[b])[i] = v[3 * b + i];
  g.mc_max = mc_max;
  return g;
}

void PidGains::validate() const {
  if (!(mc_max > 0.0) || !std::isfinite(mc_max)) throw DomainError("mc_max must be positive");
  if (!kp.allFinite() || !kd.allFinite() || !kq.allFinite() || !kw.allFinite())
    throw DomainError("PID gains must be finite");
}

Torque saturate(const Torque& mc, double mc_max) {
  if (!(mc_max > 0.0)) throw DomainError("saturation bound must be positive");
  return mc.cwiseMax(-mc_max).cwiseMin(mc_max);
}

Torque pid_control(const Vec3& qe, const AngularVelocity& w, const PidState& state,
                   const PidGains& gains) {
  const Torque raw = gains.kp.cwiseProduct(qe) + gains.kd.cwiseProduct(w) +
                     gains.kq.cwiseProduct(state.int_qe) + gains.kw.cwiseProduct(state.int_w);
  return saturate(raw, gains.mc_max);
}

Torque PidController::update(const Vec3& qe, const AngularVelocity& w, double dt) {
  const Torque mc = pid_control(qe, w, state_, gains_);
  for (int i = 0; i < 3; ++i) {
    state_.saturated[i] = std::abs(mc[i]) >= gains_.mc_max;
    if (state_.saturated[i]) continue;
    state_.int_qe[i] += qe[i] * dt;
    state_.int_w[i] += w[i] * dt;
  }
  return mc;
}

CostValue accumulate_cost(CostValue cost, const Vec3& qe, const AngularVelocity& w, double dt) {
  if (!(dt > 0.0)) throw DomainError("cost integration step must be positive");
  cost.j += dt * (w.cwiseAbs().sum() + qe.cwiseAbs().sum());
  return cost;
}

// ---------------------------------------------------------------------------

namespace {

class BudgetedObjective {
 public:
  BudgetedObjective(const Objective& f, int budget, OptimizationResult& out)
      : f_(f), budget_(budget), out_(out) {}

  bool exhausted() const { return out_.evaluations >= budget_; }

  double operator()(const std::vector<double>& x) {
    double v = f_(x);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
    ++out_.evaluations;
    out_.history.push_back(v);
    if (v < out_.best_f || out_.best_x.empty()) {
      if (v < out_.best_f) out_.best_f = v;
      out_.best_x = x;
    }
    out_.best_history.push_back(out_.best_f);
    return v;
  }

 private:
  const Objective& f_;
  int budget_;
  OptimizationResult& out_;
};

struct Vertex {
  std::vector<double> x;
  double f;
};

std::vector<double> affine(const std::vector<double>& a, const std::vector<double>& b, double t) {
  // a + t (b - a)
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + t * (b[i] - a[i]);
  return r;
}

}  // namespace

OptimizationResult nelder_mead(const Objective& f, std::vector<double> x0,
                               const NelderMeadOptions& options) {
  if (x0.empty()) throw DimensionError("Nelder-Mead needs at least one parameter");
  if (options.budget < 1) throw DomainError("optimization budget must be positive");

  OptimizationResult result;
  BudgetedObjective eval(f, options.budget, result);
  const std::size_t n = x0.size();
  const double nd = static_cast<double>(n);
  // Dimension-adaptive coefficients (Gao & Han).
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / nd;
  const double gamma = 0.75 - 0.5 / nd;
  const double delta = 1.0 - 1.0 / nd;

  Rng rng(options.seed);
  std::uniform_int_distribution<int> coin(0, 1);

  result.initial_f = eval(x0);
  std::vector<double> start = x0;
  double step_scale = options.initial_step;

  while (!eval.exhausted()) {
    std::vector<Vertex> simplex;
    simplex.push_back({start, start == result.best_x ? result.best_f : eval(start)});
    for (std::size_t i = 0; i < n && !eval.exhausted(); ++i) {
      std::vector<double> x = start;
      double h = step_scale * std::max(std::abs(x[i]), 1.0);
      if (result.restarts > 0 && coin(rng)) h = -h;
      x[i] += h;
      simplex.push_back({x, eval(x)});
    }
    if (simplex.size() < n + 1) break;

    while (!eval.exhausted()) {
      std::sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
      const double spread = simplex.back().f - simplex.front().f;
      double diameter = 0.0;
      for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t i = 0; i < n; ++i)
          diameter = std::max(diameter, std::abs(simplex[k].x[i] - simplex[0].x[i]));
      if ((std::isfinite(spread) && spread <= options.tolerance * (1.0 + std::abs(simplex[0].f))) ||
          diameter < 1e-12)
        break;

      std::vector<double> centroid(n, 0.0);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k].x[i] / nd;

      Vertex& worst = simplex.back();
      const std::vector<double> xr = affine(centroid, worst.x, -alpha);
      const double fr = eval(xr);
      if (fr < simplex.front().f) {
        if (eval.exhausted()) { worst = {xr, fr}; break; }
        const std::vector<double> xe = affine(centroid, worst.x, -alpha * beta);
        const double fe = eval(xe);
        worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
      } else if (fr < simplex[n - 1].f) {
        worst = {xr, fr};
      } else {
        if (eval.exhausted()) break;
        const bool outside = fr < worst.f;
        const std::vector<double> xc = outside ? affine(centroid, worst.x, -alpha * gamma)
                                               : affine(centroid, worst.x, gamma);
        const double fc = eval(xc);
        if (fc < std::min(fr, worst.f)) {
          worst = {xc, fc};
        } else {
          for (std::size_t k = 1; k <= n && !eval.exhausted(); ++k) {
            simplex[k].x = affine(simplex[0].x, simplex[k].x, delta);
            simplex[k].f = eval(simplex[k].x);
          }
        }
      }
    }

    start = result.best_x;
    step_scale *= 0.5;
    ++result.restarts;
  }
  return result;
}

bool GainBounds::contains(const PidGains& g) const {
  const auto x = g.to_vector(), lo = lower.to_vector(), hi = upper.to_vector();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  return true;
}

GainTuningResult optimize_gains(const std::function<double(const PidGains&)>& objective,
                                const PidGains& initial, int budget, std::uint64_t seed,
                                const std::optional<GainBounds>& bounds) {
  if (budget < 50) throw DomainError("gain optimization budget must be at least 50 evaluations");
  initial.validate();
  if (bounds && !bounds->contains(initial)) throw DomainError("initial gains lie outside the search bounds");
  const double mc_max = initial.mc_max;
  NelderMeadOptions options;
  options.budget = budget;
  options.seed = seed;
  // The search runs in scaled coordinates. Integral gains act on slowly
  // accumulating states, so their natural unit is a small fraction of the
  // proportional gain; unscaled, the first simplex steps into them dominate
  // the response and the search stalls.
  std::vector<double> scale(PidGains::kParameterCount, 1.0);
  for (int i = 0; i < 3; ++i) {
    const double s = 0.01 * std::max(std::abs(initial.kp[i]), 1.0);
    scale[6 + i] = s;
    scale[9 + i] = s;
  }
  std::vector<double> x(PidGains::kParameterCount);
  auto unscale = [&](std::span<const double> z) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = z[i] * scale[i];
    return PidGains::from_vector(x, mc_max);
  };
  std::vector<double> z0 = initial.to_vector();
  for (std::size_t i = 0; i < z0.size(); ++i) z0[i] /= scale[i];
  GainTuningResult out;
  auto scaled = [&](std::span<const double> z) {
    const PidGains g = unscale(z);
    if (bounds && !bounds->contains(g)) return std::numeric_limits<double>::infinity();
    return objective(g);
  };
  out.search = nelder_mead(scaled, z0, options);
  out.gains = unscale(out.search.best_x);
  out.search.best_x = out.gains.to_vector();
  return out;
}

// ---------------------------------------------------------------------------

void save_gains(const GainsFile& file, const std::string& path) {
  IniDocument doc;
  doc.set("meta", "format", "adcs-gains");
  doc.set("meta", "version", std::to_string(kGainsFormatVersion));
  const char* axes[] = {"x", "y", "z"};
  const std::pair<const char*, const Vec3*> blocks[] = {
      {"kp", &file.gains.kp}, {"kd", &file.gains.kd}, {"kq", &file.gains.kq}, {"kw", &file.gains.kw}};
  for (const auto& [name, k] : blocks)
    for (int i = 0; i < 3; ++i)
      doc.set("gains", std::string(name) + "_" + axes[i], format_double((*k)[i]));
  doc.set("gains", "mc_max", format_double(file.gains.mc_max));
  doc.set("tuning", "cost", format_double(file.cost));
  doc.set("tuning", "evaluations", std::to_string(file.evaluations));
  doc.set("tuning", "seed", std::to_string(file.seed));
  doc.save(path);
}

GainsFile load_gains(const std::string& path) {
  const IniDocument doc = IniDocument::load(path, "gains file");
  if (doc.get_string("meta", "format") != "adcs-gains")
    throw ParseError("not a gains file: " + path);
  const int version = static_cast<int>(doc.get_int("meta", "version"));
  if (version != kGainsFormatVersion)
    throw VersionError("unsupported gains file version " + std::to_string(version) + ": " + path);
  GainsFile out;
  const char* axes[] = {"x", "y", "z"};
  const std::pair<const char*, Vec3*> blocks[] = {
      {"kp", &out.gains.kp}, {"kd", &out.gains.kd}, {"kq", &out.gains.kq}, {"kw", &out.gains.kw}};
  for (const auto& [name, k] : blocks)
    for (int i = 0; i < 3; ++i)
      (*k)[i] = doc.get_double("gains", std::string(name) + "_" + axes[i]);
  out.gains.mc_max = doc.get_double("gains", "mc_max");
  out.gains.validate();
  out.cost = doc.get_double("tuning", "cost", out.cost);
  out.evaluations = static_cast<int>(doc.get_int("tuning", "evaluations", 0));
  out.seed = static_cast<std::uint64_t>(doc.get_int("tuning", "seed", 0));
  return out;
}

}  // namespace adcs
