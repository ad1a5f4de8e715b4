#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "adcs/errors.hpp"
#include "adcs/pid.hpp"
#include "adcs/sim.hpp"

using namespace adcs;
namespace fs = std::filesystem;

namespace {

PidGains random_gains(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  PidGains g;
  for (Vec3* k : {&g.kp, &g.kd, &g.kq, &g.kw}) *k = Vec3(n(rng), n(rng), n(rng));
  return g;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "adcs_test_pid";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("control law") {
  PidGains g;
  g.kp = {-1, -1, -1};
  PidState s;
  CHECK(pid_control(Vec3::Zero(), Vec3::Zero(), s, g).norm() == 0.0);
  CHECK((pid_control(Vec3(0.1, 0, 0), Vec3::Zero(), s, g) - Vec3(-0.1, 0, 0)).norm() == 0.0);

  g = PidGains{{-2, -3, -4}, {-5, -6, -7}, {0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, 100.0};
  s.int_qe = {1, 2, 3};
  s.int_w = {-1, -2, -3};
  const Vec3 qe(0.01, 0.02, 0.03), w(0.1, 0.2, 0.3);
  const Vec3 expected(-2 * 0.01 - 5 * 0.1 + 0.1 * 1 - 0.4 * 1, -3 * 0.02 - 6 * 0.2 + 0.2 * 2 - 0.5 * 2,
                      -4 * 0.03 - 7 * 0.3 + 0.3 * 3 - 0.6 * 3);
  CHECK((pid_control(qe, w, s, g) - expected).norm() < 1e-15);
}

TEST_CASE("saturation") {
  CHECK(saturate({2, -0.5, 0}, 1.0) == Vec3(1, -0.5, 0));
  CHECK(saturate({0.3, -0.2, 0.9}, 1.0) == Vec3(0.3, -0.2, 0.9));
  CHECK(saturate({-3, -3, -3}, 1.0) == Vec3(-1, -1, -1));
  CHECK_THROWS_AS(saturate(Vec3::Zero(), 0.0), DomainError);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 2000; ++i) {
    PidGains g = random_gains(rng, 50.0);
    g.mc_max = 0.5;
    PidState s;
    s.int_qe = {n(rng), n(rng), n(rng)};
    s.int_w = {n(rng), n(rng), n(rng)};
    const Torque mc = pid_control({n(rng), n(rng), n(rng)}, {n(rng), n(rng), n(rng)}, s, g);
    CHECK(mc.cwiseAbs().maxCoeff() <= 0.5);
  }
}

TEST_CASE("anti-windup") {
  PidGains g{{-10, -10, -10}, {0, 0, 0}, {-1, -1, -1}, {0, 0, 0}, 1.0};
  PidController pid(g);
  // Axis x saturates (|−10·0.5| > 1), y does not (|−10·0.01| < 1).
  for (int k = 0; k < 100; ++k) pid.update({0.5, 0.01, 0.0}, {0.2, 0.3, 0.0}, 0.01);
  CHECK(pid.state().int_qe[0] == 0.0);
  CHECK(pid.state().int_w[0] == 0.0);
  CHECK(pid.state().saturated[0]);
  CHECK_FALSE(pid.state().saturated[1]);
  CHECK(pid.state().int_qe[1] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(pid.state().int_w[1] == doctest::Approx(0.3).epsilon(1e-12));
  pid.reset();
  CHECK(pid.state().int_qe.norm() == 0.0);
}

TEST_CASE("trajectory cost") {
  CostValue zero;
  for (int k = 0; k < 100; ++k) zero = accumulate_cost(zero, Vec3::Zero(), Vec3::Zero(), 0.01);
  CHECK(zero.j == 0.0);

  CostValue c;
  for (int k = 0; k < 2000; ++k) c = accumulate_cost(c, {0.1, 0, 0}, Vec3::Zero(), 0.01);
  CHECK(c.j == doctest::Approx(2.0).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  CostValue run;
  double manual = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec3 qe(n(rng), n(rng), n(rng)), w(n(rng), n(rng), n(rng));
    const double before = run.j;
    run = accumulate_cost(run, qe, w, 0.01);
    CHECK(run.j >= before);
    manual += 0.01 * (std::abs(w[0]) + std::abs(w[1]) + std::abs(w[2]) + std::abs(qe[0]) + std::abs(qe[1]) +
                      std::abs(qe[2]));
  }
  CHECK(run.j == doctest::Approx(manual).epsilon(1e-12));
  CHECK_THROWS_AS(accumulate_cost({}, Vec3::Zero(), Vec3::Zero(), 0.0), DomainError);
}

TEST_CASE("Nelder-Mead") {
  const std::vector<double> target{1.5, -2.0, 0.25, 4.0};
  const std::vector<double> weight{1.0, 3.0, 0.5, 2.0};
  auto quad = [&](std::span<const double> x) {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) f += weight[i] * (x[i] - target[i]) * (x[i] - target[i]);
    return f;
  };
  NelderMeadOptions opt;
  opt.budget = 2000;
  const OptimizationResult r = nelder_mead(quad, {0, 0, 0, 0}, opt);
  for (std::size_t i = 0; i < target.size(); ++i) CHECK(std::abs(r.best_x[i] - target[i]) < 1e-3);
  CHECK(r.best_f <= r.initial_f);
  CHECK(r.evaluations == 2000);
  CHECK(r.history.size() == 2000);
  for (std::size_t k = 1; k < r.best_history.size(); ++k) CHECK(r.best_history[k] <= r.best_history[k - 1]);

  SUBCASE("reproducible per seed") {
    opt.budget = 300;
    opt.seed = 9;
    const OptimizationResult a = nelder_mead(quad, {3, 3, 3, 3}, opt);
    const OptimizationResult b = nelder_mead(quad, {3, 3, 3, 3}, opt);
    CHECK(a.history == b.history);
    CHECK(a.best_x == b.best_x);
  }

  SUBCASE("non-finite values count as +inf") {
    auto holey = [&](std::span<const double> x) { return x[0] > 1.0 ? std::nan("") : quad(x); };
    opt.budget = 400;
    const OptimizationResult h = nelder_mead(holey, {0, 0, 0, 0}, opt);
    CHECK(std::isfinite(h.best_f));
    CHECK(h.best_x[0] <= 1.0);
    for (double v : h.history) CHECK_FALSE(std::isnan(v));
  }
}

TEST_CASE("gain optimization") {
  std::mt19937_64 rng(4);
  PidGains best = random_gains(rng, 2.0);
  best.kq *= 0.05;
  best.kw *= 0.05;
  const std::vector<double> star = best.to_vector();
  auto objective = [&](const PidGains& g) {
    const std::vector<double> x = g.to_vector();
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) f += (1.0 + i % 3) * (x[i] - star[i]) * (x[i] - star[i]);
    return f;
  };
  PidGains start;
  start.kp = {-1, -1, -1};
  start.kd = {-1, -1, -1};
  const GainTuningResult r = optimize_gains(objective, start, 5000, 1);
  const std::vector<double> got = r.gains.to_vector();
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - star[i]) < 1e-3);
  CHECK(r.search.best_f <= objective(start));
  CHECK(r.search.initial_f == objective(start));

  CHECK_THROWS_AS(optimize_gains(objective, start, 49, 1), DomainError);

  SUBCASE("bounded search never leaves the box") {
    const GainBounds box = tuning_bounds(start, 2.0, 0.05);
    CHECK(box.contains(start));
    int outside = 0;
    auto counted = [&](const PidGains& g) {
      if (!box.contains(g)) ++outside;
      return objective(g);
    };
    const GainTuningResult b = optimize_gains(counted, start, 500, 1, box);
    CHECK(outside == 0);
    CHECK(box.contains(b.gains));
    CHECK(b.search.best_f <= objective(start));

    PidGains far = start;
    far.kp[0] = -10.0;
    CHECK_THROWS_AS(optimize_gains(objective, far, 500, 1, box), DomainError);
  }
}

TEST_CASE("tuning bounds") {
  const PidGains g0 = default_initial_gains(InertiaTensor{1.5, 2.6, 3.0});
  const GainBounds b = tuning_bounds(g0, 2.0, 0.05);
  for (int i = 0; i < 3; ++i) {
    CHECK(b.lower.kp[i] == 2.0 * g0.kp[i]);
    CHECK(b.upper.kp[i] == 0.0);
    CHECK(b.lower.kd[i] == 2.0 * g0.kd[i]);
    CHECK(b.upper.kw[i] == doctest::Approx(0.05 * std::abs(g0.kp[i])));
    CHECK(b.lower.kq[i] == doctest::Approx(-0.05 * std::abs(g0.kp[i])));
  }
  CHECK_THROWS_AS(tuning_bounds(g0, 0.5, 0.05), DomainError);
}

TEST_CASE("default gains give a damped small-angle loop") {
  // q_e ≈ θ/2, so I θ̈ = Kp θ/2 + Kd θ̇: ωn² = −Kp/(2I), 2ζωn = −Kd/I.
  const InertiaTensor inertia{1.5, 2.6, 3.0};
  const PidGains g = default_initial_gains(inertia);
  for (int i = 0; i < 3; ++i) {
    const double wn = std::sqrt(-g.kp[i] / (2.0 * inertia[i]));
    const double zeta = -g.kd[i] / inertia[i] / (2.0 * wn);
    CHECK(wn == doctest::Approx(0.8));
    CHECK(zeta == doctest::Approx(0.9));
  }
  CHECK(g.kq.norm() == 0.0);
  CHECK(g.kw.norm() == 0.0);
}

TEST_CASE("tuned PID settles the sample manoeuvre") {
  SimConfig scenario;
  const PidGains g0 = default_initial_gains(scenario.inertia_nominal);
  const TuningResult r = tune_pid(scenario, g0, 500, 42, tuning_bounds(g0, 2.0, 0.05));
  CHECK(r.tuning.search.best_f <= r.initial_cost);
  CHECK(r.tuning.search.best_f == doctest::Approx(tuning_cost(r.tuning.gains, scenario)).epsilon(1e-12));
  SimConfig run = scenario;
  run.gains = r.tuning.gains;
  const auto settle = settling_time(run_closed_loop(run));
  for (const auto& s : settle) {
    REQUIRE(s.has_value());
    CHECK(*s <= 20.0);
  }
  // Same seed, same result.
  const TuningResult again = tune_pid(scenario, g0, 500, 42, tuning_bounds(g0, 2.0, 0.05));
  CHECK(again.tuning.search.history == r.tuning.search.history);
}

TEST_CASE("gains file") {
  std::mt19937_64 rng(8);
  GainsFile f{random_gains(rng, 3.0), 0.7071234567890123, 500, 42};
  f.gains.mc_max = 0.75;
  const std::string path = scratch("gains.ini").string();
  save_gains(f, path);
  const GainsFile back = load_gains(path);
  CHECK(back.gains.to_vector() == f.gains.to_vector());
  CHECK(back.gains.mc_max == 0.75);
  CHECK(back.cost == f.cost);
  CHECK(back.evaluations == 500);
  CHECK(back.seed == 42);

  CHECK_THROWS_AS(load_gains(scratch("absent.ini").string()), MissingArtifactError);

  std::string text;
  {
    std::ifstream in(path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto rewrite = [&](const std::string& body) {
    std::ofstream(path) << body;
  };
  std::string v2 = text;
  v2.replace(v2.find("version=1"), 9, "version=2");
  rewrite(v2);
  CHECK_THROWS_AS(load_gains(path), VersionError);
  rewrite(text.substr(0, text.find("kd_x")));
  CHECK_THROWS_AS(load_gains(path), ParseError);
  std::string bad = text;
  bad.replace(bad.find("kp_y=") + 5, 1, "x");
  rewrite(bad);
  CHECK_THROWS_AS(load_gains(path), ParseError);
}
