#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "adcs/anfis.hpp"
#include "adcs/errors.hpp"

using namespace adcs;
using namespace adcs::anfis;
namespace fs = std::filesystem;

namespace {

using Rng = std::mt19937_64;

AnfisModel random_anfis(Rng& rng, const std::vector<int>& mfs) {
  std::vector<std::pair<double, double>> ranges;
  std::uniform_real_distribution<double> lo(-2.0, 0.0), span(0.5, 3.0);
  for (std::size_t j = 0; j < mfs.size(); ++j) {
    const double a = lo(rng);
    ranges.emplace_back(a, a + span(rng));
  }
  AnfisModel m = grid_partition_init(ranges, mfs);
  std::uniform_real_distribution<double> jitter(0.8, 1.25), shift(-0.2, 0.2);
  for (auto& row : m.premise)
    for (BellMf& mf : row) {
      mf.a *= jitter(rng);
      mf.b *= jitter(rng);
      mf.c += shift(rng) * mf.a;
    }
  std::normal_distribution<double> n;
  for (Eigen::Index i = 0; i < m.consequent.size(); ++i) m.consequent.data()[i] = n(rng);
  return m;
}

TrainingSet noise_set(Rng& rng, const AnfisModel& m, int samples) {
  TrainingSet d;
  d.inputs.resize(samples, m.n_inputs());
  d.targets.resize(samples);
  std::normal_distribution<double> n;
  for (int s = 0; s < samples; ++s) {
    for (int j = 0; j < m.n_inputs(); ++j) {
      const auto [lo, hi] = m.input_ranges[j];
      d.inputs(s, j) = std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    d.targets[s] = n(rng);
  }
  return d;
}

// Targets produced by the model itself.
TrainingSet self_data(Rng& rng, const AnfisModel& m, int samples) {
  TrainingSet d = noise_set(rng, m, samples);
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x = d.inputs.row(s).transpose();
    d.targets[s] = evaluate(m, {x.data(), static_cast<std::size_t>(x.size())});
  }
  return d;
}

double loss(const AnfisModel& m, const TrainingSet& d) {
  double e = 0.0;
  for (Eigen::Index s = 0; s < d.size(); ++s) {
    const Eigen::VectorXd x = d.inputs.row(s).transpose();
    const double r = evaluate(m, {x.data(), static_cast<std::size_t>(x.size())}) - d.targets[s];
    e += 0.5 * r * r;
  }
  return e;
}

double& parameter(AnfisModel& m, int j, int k, int p) {
  BellMf& mf = m.premise[j][k];
  return p == 0 ? mf.a : (p == 1 ? mf.b : mf.c);
}

double out_at(const AnfisModel& m, std::vector<double> x) { return evaluate(m, x); }

}  // namespace

TEST_CASE("bell membership") {
  const BellMf mf{0.5, 2.0, 1.0};
  CHECK(mf(1.0) == 1.0);
  CHECK(mf(1.5) == doctest::Approx(0.5));
  CHECK(mf(0.5) == doctest::Approx(0.5));
  CHECK(mf(3.0) == doctest::Approx(1.0 / (1.0 + std::pow(4.0, 4.0))));
  CHECK(mf(1e6) > 0.0);
}

TEST_CASE("rule grid") {
  const RuleGrid g({2, 3});
  CHECK(g.rule_count() == 6);
  // Last input varies fastest.
  CHECK(g.mf_index(0, 0) == 0);
  CHECK(g.mf_index(0, 1) == 0);
  CHECK(g.mf_index(1, 1) == 1);
  CHECK(g.mf_index(2, 1) == 2);
  CHECK(g.mf_index(3, 0) == 1);
  CHECK(g.mf_index(3, 1) == 0);
  CHECK_THROWS(RuleGrid({2, 0}));
}

TEST_CASE("grid partition initialization") {
  const AnfisModel m = grid_partition_init({{0.0, 1.0}}, {3});
  REQUIRE(m.premise[0].size() == 3);
  CHECK(m.premise[0][0].c == 0.0);
  CHECK(m.premise[0][1].c == 0.5);
  CHECK(m.premise[0][2].c == 1.0);
  for (const BellMf& mf : m.premise[0]) {
    CHECK(mf.a == 0.25);
    CHECK(mf.b == 2.0);
  }
  CHECK(m.consequent.norm() == 0.0);

  for (double width : {0.5, 1.0}) {
    const AnfisModel w = grid_partition_init({{-3.0, 5.0}, {0.0, 1.0}}, {4, 2}, width);
    for (int j = 0; j < 2; ++j)
      for (double t = 0.0; t <= 1.0; t += 0.001) {
        const auto [lo, hi] = w.input_ranges[j];
        const double x = lo + t * (hi - lo);
        double best = 0.0;
        for (const BellMf& mf : w.premise[j]) best = std::max(best, mf(x));
        CHECK(best >= 0.5);
      }
  }
  CHECK(grid_partition_init({{0, 1}, {0, 1}}, {2, 2}, 1.0).premise[0][0].a == 1.0);

  const AnfisModel nine = grid_partition_init({{0, 1}, {0, 1}}, {3, 3});
  CHECK(nine.rule_count() == 9);
  CHECK(nine.consequent_count() == 27);

  CHECK_THROWS_AS(grid_partition_init({{1.0, 1.0}}, {2}), DomainError);
  CHECK_THROWS_AS(grid_partition_init({{0.0, 1.0}}, {2}, 0.0), DomainError);
  CHECK_THROWS_AS(grid_partition_init({{0.0, 1.0}}, {2, 2}), DimensionError);
}

TEST_CASE("forward pass") {
  Rng rng(1);
  SUBCASE("single rule is its linear consequent") {
    AnfisModel m = grid_partition_init({{0, 1}, {-1, 1}}, {1, 1});
    m.consequent << 2.0, -3.0, 0.5;
    m.premise[0][0] = {0.01, 7.0, 0.3};
    CHECK(out_at(m, {0.2, 0.7}) == doctest::Approx(2.0 * 0.2 - 3.0 * 0.7 + 0.5).epsilon(1e-15));
    CHECK(out_at(m, {100.0, -50.0}) == doctest::Approx(2.0 * 100 + 150 + 0.5).epsilon(1e-15));
  }
  SUBCASE("normalization") {
    for (int i = 0; i < 100; ++i) {
      const AnfisModel m = random_anfis(rng, {2, 3, 2});
      std::vector<double> x(3);
      for (int j = 0; j < 3; ++j) x[j] = std::uniform_real_distribution<double>(-3, 3)(rng);
      const ForwardTrace t = forward(m, x);
      double sum = 0.0, out = 0.0;
      for (std::size_t r = 0; r < t.normalized.size(); ++r) {
        CHECK(t.normalized[r] >= 0.0);
        CHECK(t.normalized[r] <= 1.0);
        sum += t.normalized[r];
        out += t.weighted[r];
        CHECK(t.weighted[r] == doctest::Approx(t.normalized[r] * t.rule_output[r]));
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
      CHECK(t.output == doctest::Approx(out).epsilon(1e-12));
      // Layer 2 is the product of the rule's memberships.
      for (int r = 0; r < m.rule_count(); ++r) {
        double w = 1.0;
        for (int j = 0; j < 3; ++j) w *= t.membership[j][m.grid.mf_index(r, j)];
        CHECK(t.firing[r] == doctest::Approx(w).epsilon(1e-12));
      }
    }
  }
  SUBCASE("equal constant consequents") {
    AnfisModel m = random_anfis(rng, {3, 2});
    m.consequent.setZero();
    m.consequent.col(2).setConstant(-1.75);
    for (int i = 0; i < 50; ++i)
      CHECK(out_at(m, {std::normal_distribution<double>(0, 2)(rng), 0.3}) == doctest::Approx(-1.75).epsilon(1e-12));
  }
  SUBCASE("underflow falls back to uniform weights") {
    AnfisModel m = grid_partition_init({{0, 1}}, {2});
    m.premise[0][0] = {1e-3, 50.0, 0.0};
    m.premise[0][1] = {1e-3, 50.0, 1.0};
    m.consequent << 0.0, 2.0, 0.0, 4.0;
    const ForwardTrace t = forward(m, std::vector<double>{50.0});
    CHECK(t.underflow);
    CHECK(t.normalized[0] == 0.5);
    CHECK(t.output == doctest::Approx(3.0));
  }
  SUBCASE("continuity") {
    const AnfisModel m = random_anfis(rng, {3, 3});
    double worst = 0.0;
    for (double x = -2.0; x < 3.0; x += 1e-3) {
      const double y0 = out_at(m, {x, 0.1});
      const double y1 = out_at(m, {x + 1e-7, 0.1});
      worst = std::max(worst, std::abs(y1 - y0));
    }
    CHECK(worst < 1e-4);
  }
  AnfisModel m = grid_partition_init({{0, 1}, {0, 1}}, {2, 2});
  CHECK_THROWS_AS(evaluate(m, std::vector<double>{0.5}), DimensionError);
}

TEST_CASE("least-squares consequents") {
  Rng rng(2);
  SUBCASE("recovers a model sharing the premises") {
    for (int i = 0; i < 20; ++i) {
      const AnfisModel truth = random_anfis(rng, {2, 2, 3});
      const TrainingSet d = self_data(rng, truth, 400);
      AnfisModel fit = truth;
      fit.consequent.setZero();
      const LseResult r = lse_consequents(fit, d, 0.0);
      CHECK_FALSE(r.rank_deficient);
      CHECK(r.rmse < 1e-9);
      CHECK((fit.consequent - truth.consequent).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SUBCASE("constant targets") {
    AnfisModel m = random_anfis(rng, {3, 2});
    TrainingSet d = noise_set(rng, m, 200);
    d.targets.setConstant(0.37);
    const LseResult r = lse_consequents(m, d, 0.0);
    CHECK(r.rmse < 1e-10);
  }
  SUBCASE("ridge limit") {
    AnfisModel m = random_anfis(rng, {2, 2});
    const TrainingSet d = noise_set(rng, m, 100);
    lse_consequents(m, d, 1e14);
    CHECK(m.consequent.cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("never worse than the incoming consequents") {
    for (int i = 0; i < 20; ++i) {
      AnfisModel m = random_anfis(rng, {2, 3});
      const TrainingSet d = noise_set(rng, m, 150);
      const double before = rmse(m, d);
      const LseResult r = lse_consequents(m, d, 0.0);
      CHECK(r.rmse <= before + 1e-12);
      CHECK(r.rmse == doctest::Approx(rmse(m, d)).epsilon(1e-12));
    }
  }
  SUBCASE("rank deficiency is flagged with the minimum-norm solution") {
    AnfisModel m = grid_partition_init({{0, 1}, {0, 1}}, {2, 2});
    TrainingSet d;
    d.inputs.resize(50, 2);
    d.targets.resize(50);
    for (int s = 0; s < 50; ++s) {
      d.inputs(s, 0) = s / 49.0;
      d.inputs(s, 1) = s / 49.0;  // duplicated input
      d.targets[s] = 2.0 * s / 49.0;
    }
    const LseResult r = lse_consequents(m, d, 0.0);
    CHECK(r.rank_deficient);
    CHECK(r.rmse < 1e-9);
    // The two slope columns are identical; the minimum-norm split is even.
    for (int i = 0; i < m.rule_count(); ++i) CHECK(m.consequent(i, 0) == doctest::Approx(m.consequent(i, 1)));
  }
}

TEST_CASE("premise gradient") {
  Rng rng(3);
  SUBCASE("matches central differences") {
    for (int trial = 0; trial < 100; ++trial) {
      const std::vector<int> mfs = trial % 2 ? std::vector<int>{2, 3} : std::vector<int>{2, 2, 2};
      AnfisModel m = random_anfis(rng, mfs);
      const TrainingSet d = noise_set(rng, m, 30);
      const PremiseGradient g = premise_gradient(m, d);
      CHECK(g.loss == doctest::Approx(loss(m, d)).epsilon(1e-12));
      for (int j = 0; j < m.n_inputs(); ++j)
        for (int k = 0; k < mfs[j]; ++k)
          for (int p = 0; p < 3; ++p) {
            const double h = 1e-6;
            double& v = parameter(m, j, k, p);
            const double v0 = v;
            v = v0 + h;
            const double up = loss(m, d);
            v = v0 - h;
            const double down = loss(m, d);
            v = v0;
            const double fd = (up - down) / (2 * h);
            const double an = g.d[j][k][p];
            CHECK(std::abs(an - fd) <= 1e-5 * std::max({std::abs(fd), std::abs(an), 1e-3}));
          }
    }
  }
  SUBCASE("vanishes at zero residual") {
    const AnfisModel m = random_anfis(rng, {2, 3});
    const TrainingSet d = self_data(rng, m, 100);
    CHECK(premise_gradient(m, d).norm() < 1e-9);
  }
  SUBCASE("additive over datasets") {
    const AnfisModel m = random_anfis(rng, {3, 2});
    const TrainingSet a = noise_set(rng, m, 40), b = noise_set(rng, m, 60);
    TrainingSet ab;
    ab.inputs.resize(100, 2);
    ab.inputs << a.inputs, b.inputs;
    ab.targets.resize(100);
    ab.targets << a.targets, b.targets;
    const PremiseGradient ga = premise_gradient(m, a), gb = premise_gradient(m, b), gab = premise_gradient(m, ab);
    for (int j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < gab.d[j].size(); ++k)
        CHECK((gab.d[j][k] - ga.d[j][k] - gb.d[j][k]).norm() < 1e-10 * (1.0 + gab.d[j][k].norm()));
  }
}

TEST_CASE("hybrid training") {
  Rng rng(4);
  SUBCASE("exact recovery of a representable model") {
    const AnfisModel truth = random_anfis(rng, {2, 2});
    AnfisModel init = truth;
    init.consequent.setZero();
    const TrainingSet d = self_data(rng, truth, 500);
    TrainConfig cfg;
    cfg.epochs = 50;
    const TrainResult r = train(init, d, cfg);
    CHECK(*std::min_element(r.rmse_history.begin(), r.rmse_history.end()) < 1e-6);
    CHECK(rmse(r.model, d) < 1e-6);
  }
  SUBCASE("one epoch without a premise step is one least-squares solve") {
    AnfisModel m = random_anfis(rng, {2, 3});
    const TrainingSet d = noise_set(rng, m, 200);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.learning_rate = 0.0;
    const TrainResult r = train(m, d, cfg);
    lse_consequents(m, d, cfg.ridge);
    CHECK(r.model.consequent == m.consequent);
  }
  SUBCASE("best model is never worse than the start") {
    for (int i = 0; i < 10; ++i) {
      const AnfisModel m = random_anfis(rng, {2, 2, 2});
      const TrainingSet d = noise_set(rng, m, 200);
      TrainConfig cfg;
      cfg.epochs = 8;
      cfg.learning_rate = 0.05;
      const TrainResult r = train(m, d, cfg);
      CHECK(rmse(r.model, d) <= r.initial_rmse + 1e-12);
      CHECK(r.rmse_history.size() == 8);
      CHECK(r.model.metadata.final_rmse == doctest::Approx(rmse(r.model, d)).epsilon(1e-9));
    }
  }
  SUBCASE("premise steps reduce the error on a misplaced grid") {
    // Target: a step-like function whose breakpoint is off the initial centers.
    TrainingSet d;
    d.inputs.resize(400, 1);
    d.targets.resize(400);
    for (int s = 0; s < 400; ++s) {
      const double x = s / 399.0;
      d.inputs(s, 0) = x;
      d.targets[s] = std::tanh(12.0 * (x - 0.3));
    }
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 0.02;
    const TrainResult r = train(grid_partition_init({{0, 1}}, {3}), d, cfg);
    CHECK(rmse(r.model, d) < 0.8 * r.rmse_history.front());
  }
  SUBCASE("non-finite loss aborts naming the epoch") {
    AnfisModel m = random_anfis(rng, {2});
    TrainingSet d = noise_set(rng, m, 20);
    d.targets[3] = std::nan("");
    TrainConfig cfg;
    CHECK_THROWS_WITH_AS(train(m, d, cfg), doctest::Contains("epoch 1"), DivergedError);
  }
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("model files") {
  Rng rng(5);
  const fs::path dir = fs::temp_directory_path() / "adcs_test_anfis";
  fs::create_directories(dir);
  AnfisModel m = random_anfis(rng, {3, 2, 2});
  m.metadata = {12, 0.0123456789, 77};
  const std::string path = (dir / "model.json").string();
  save_model(m, path);
  const AnfisModel back = load_model(path);
  CHECK(back.metadata.epochs == 12);
  CHECK(back.metadata.final_rmse == m.metadata.final_rmse);
  CHECK(back.metadata.seed == 77);
  CHECK(back.consequent == m.consequent);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(3);
    for (double& v : x) v = std::normal_distribution<double>(0, 2)(rng);
    CHECK(evaluate(back, x) == evaluate(m, x));
  }

  std::string text;
  {
    std::ifstream in(path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  const std::string broken = (dir / "broken.json").string();
  std::ofstream(broken) << text.substr(0, text.size() / 2);
  CHECK_THROWS_AS(load_model(broken), ParseError);

  nlohmann::json doc = to_json(m);
  doc["version"] = kModelFormatVersion + 1;
  std::ofstream(broken) << doc.dump();
  CHECK_THROWS_AS(load_model(broken), VersionError);

  doc = to_json(m);
  doc["premise"].erase(0);
  std::ofstream(broken) << doc.dump();
  CHECK_THROWS_AS(load_model(broken), ParseError);

  CHECK_THROWS_AS(load_model((dir / "absent.json").string()), MissingArtifactError);
}
