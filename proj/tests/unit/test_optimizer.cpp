#include <doctest.h>

#include <cmath>

#include "scbo/optimizer.hpp"

using namespace scbo;

namespace {

RunConfig toy_config(int budget, std::uint64_t seed) {
  RunConfig cfg;
  cfg.problem = toy2d();
  cfg.budget = budget;
  cfg.n_init = 10;
  cfg.seed = seed;
  return cfg;
}

void check_history_invariants(const RunHistory& h) {
  const auto& p = h.config.problem;
  CHECK(static_cast<int>(h.records.size()) <= h.config.budget);
  for (std::size_t i = 0; i < h.records.size(); ++i) {
    const auto& r = h.records[i];
    CHECK(r.eval_index == static_cast<int>(i));
    CHECK((r.point.array() >= p.lower.array()).all());
    CHECK((r.point.array() <= p.upper.array()).all());
    CHECK(r.feasible == (r.constraints.array() <= 0.0).all());
    if (i > 0) CHECK(!(h.records[i - 1].incumbent < r.incumbent));
  }
}

}  // namespace

TEST_CASE("config validation") {
  auto cfg = toy_config(5, 0);
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
  cfg.budget = 20;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
  cfg.batch_size = 1;
  cfg.delta = 1.0;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
}

TEST_CASE("budget equal to the initial design") {
  const auto h = run(toy_config(10, 4));
  REQUIRE(h.records.size() == 10);
  CHECK(h.completed);
  MeritKey best = MeritKey::worst();
  for (const auto& r : h.records) {
    const auto k = merit_key(r.objective, r.constraints);
    if (k < best) best = k;
  }
  CHECK(h.records.back().incumbent == best);
  // The initial design is a Latin hypercube in the unit cube.
  for (int k = 0; k < 2; ++k) {
    std::vector<int> strata;
    for (const auto& r : h.records) strata.push_back(static_cast<int>(std::floor(r.point[k] * 10)));
    std::sort(strata.begin(), strata.end());
    for (int i = 0; i < 10; ++i) CHECK(strata[static_cast<std::size_t>(i)] == i);
  }
}

TEST_CASE("runs are deterministic and respect the budget") {
  for (auto method : {AcquisitionMethod::thompson, AcquisitionMethod::cei, AcquisitionMethod::random}) {
    for (bool region : {true, false}) {
      auto cfg = toy_config(23, 11);
      cfg.method = method;
      cfg.use_trust_region = region;
      cfg.batch_size = 3;
      const auto a = run(cfg);
      const auto b = run(cfg);
      REQUIRE(a.records.size() == 23);
      REQUIRE(b.records.size() == 23);
      for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].point == b.records[i].point);
        CHECK(a.records[i].objective == b.records[i].objective);
      }
      check_history_invariants(a);
    }
  }
}

TEST_CASE("trust region progress on toy2d") {
  const auto h = run(toy_config(60, 2));
  check_history_invariants(h);
  const auto trace = h.best_feasible_trace();
  REQUIRE(std::isfinite(trace.back()));
  CHECK(trace.back() < 0.75);
  REQUIRE(h.recommendation.has_value());
  CHECK(h.records[*h.recommendation].objective == trace.back());
  CHECK(std::isfinite(h.records.back().length));
}

TEST_CASE("restarts retire old data and start from a fresh design") {
  auto cfg = toy_config(120, 5);
  cfg.length_min = 0.3;
  const auto h = run(cfg);
  check_history_invariants(h);
  REQUIRE(h.regions.size() >= 2);
  for (std::size_t k = 0; k + 1 < h.regions.size(); ++k) {
    CHECK(h.regions[k].terminated);
    CHECK(h.regions[k + 1].first_eval > h.regions[k].first_eval);
    const auto& next = h.regions[k + 1];
    CHECK(next.initial_design.rows() == cfg.n_init);
    CHECK(h.records[static_cast<std::size_t>(next.first_eval)].restart_count == static_cast<int>(k + 1));
    CHECK(h.records[static_cast<std::size_t>(next.first_eval)].length == 0.8);
  }
}

TEST_CASE("recommendation rules") {
  RunHistory h;
  CHECK(!recommend(h).has_value());
  EvaluationRecord a, b, c;
  a.point = Vector::Constant(1, 0.1);
  a.objective = 3.0;
  a.feasible = true;
  b.point = Vector::Constant(1, 0.2);
  b.objective = 1.0;
  b.feasible = true;
  c.point = Vector::Constant(1, 0.3);
  c.objective = -5.0;
  c.feasible = false;
  h.records = {a, b, c};
  REQUIRE(recommend(h).has_value());
  CHECK((*recommend(h))[0] == 0.2);
  h.records = {c};
  CHECK(!recommend(h).has_value());
}

TEST_CASE("noisy recommendation") {
  Rng rng(3);
  Matrix x(6, 1);
  x << 0.0, 0.2, 0.4, 0.6, 0.8, 1.0;
  Vector f(6), g(6);
  f << 5.0, 4.0, 3.0, 2.0, 1.0, 0.0;
  g << -1.0, -1.0, -1.0, -1.0, 1.0, 1.0;
  GPHyperparameters h;
  h.lengthscales = Vector::Constant(1, 0.2);
  h.noise_variance = 1e-4;
  const std::vector<TrainedGP> models{TrainedGP(x, f, h), TrainedGP(x, g, h)};
  const auto strict = recommend_noisy(models, x, 0.05);
  REQUIRE(strict.has_value());
  CHECK(*strict == 3);
  // delta close to 1 admits every point: overall minimum posterior mean.
  const auto loose = recommend_noisy(models, x, 1.0 - 1e-300);
  REQUIRE(loose.has_value());
  CHECK(*loose == 5);
  Vector bad = Vector::Constant(6, 1.0);
  const std::vector<TrainedGP> none{TrainedGP(x, f, h), TrainedGP(x, bad + 0.01 * x.col(0), h)};
  CHECK(!recommend_noisy(none, x, 0.05).has_value());
}

TEST_CASE("noisy mode runs end to end") {
  auto cfg = toy_config(25, 8);
  cfg.noisy_observations = true;
  const auto h = run(cfg);
  check_history_invariants(h);
  CHECK(h.completed);
}

TEST_CASE("evaluation failure aborts with a partial history") {
  RunConfig cfg;
  cfg.problem = external_problem({"python3 " + std::string(SCBO_TEST_DATA) + "/dying_evaluator.py 14",
                                  std::chrono::milliseconds(20000)},
                                 2, 1, Vector::Zero(2), Vector::Ones(2), "dying");
  cfg.budget = 30;
  cfg.n_init = 5;
  const auto h = run(cfg);
  CHECK(!h.completed);
  CHECK(h.records.size() == 14);
  CHECK(!h.error.empty());
}

TEST_CASE("consistency stress helper") {
  const auto t = consistency_stress(80, 0.25, 1);
  CHECK(t.best_feasible.size() == 80);
  for (std::size_t i = 1; i < t.best_feasible.size(); ++i) CHECK(t.best_feasible[i] <= t.best_feasible[i - 1]);
  CHECK(t.history.regions.size() >= 2);
}
