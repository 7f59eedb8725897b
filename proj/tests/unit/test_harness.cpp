#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "scbo/harness.hpp"

using namespace scbo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("scbo_harness_" + name);
  fs::remove_all(p);
  return p;
}

HistoryFile hand_history(const std::string& problem, const std::string& cell, std::vector<double> objectives,
                         std::vector<bool> feasible) {
  HistoryFile h;
  h.config = {{"problem", {{"name", problem}}}, {"cell", cell}};
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    if (feasible[i]) best = std::min(best, objectives[i]);
    h.rows.push_back({static_cast<int>(i), Vector::Zero(1), objectives[i], Vector::Zero(1), feasible[i], best});
  }
  return h;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cell labels and the ablation grid") {
  CHECK(cell_label(AcquisitionMethod::thompson, true, true) == "ts-tf-tr");
  CHECK(cell_label(AcquisitionMethod::cei, false, false) == "cei-raw-global");
  CHECK(cell_label(AcquisitionMethod::random, true, false) == "random");
  const auto grid = ablation_grid();
  CHECK(grid.size() == 8);
  std::set<std::string> labels;
  for (const auto& c : grid) labels.insert(c.label);
  CHECK(labels.size() == 8);
}

TEST_CASE("summary of two hand-built runs") {
  // Run A: feasible values 4 then 2; run B: infeasible, then 6, then 1.
  const auto a = hand_history("p", "x", {4.0, 3.0, 2.0}, {true, false, true});
  const auto b = hand_history("p", "x", {9.0, 6.0, 1.0}, {false, true, true});
  const auto s = summarize({a, b});
  // Default = largest objective observed on the problem = 9.
  CHECK(s.infeasible_default.at("p") == 9.0);
  const auto* c = s.find("p", "x");
  REQUIRE(c != nullptr);
  CHECK(c->runs == 2);
  CHECK(c->feasible_runs == 2);
  CHECK(*c->best == 1.0);
  CHECK(*c->worst == 2.0);
  CHECK(*c->median == 1.5);
  // Per-evaluation merits: (4, 9), (4, 6), (2, 1).
  const std::vector<double> mean{6.5, 5.0, 1.5};
  const std::vector<double> se{2.5, 1.0, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(c->curve.mean[i] == doctest::Approx(mean[i]));
    CHECK(c->curve.standard_error[i] == doctest::Approx(se[i]));
    CHECK(c->curve.count[i] == 2);
  }
  CHECK(c->final_mean == doctest::Approx(1.5));
  const auto over = summarize({a, b}, 100.0);
  CHECK(over.find("p", "x")->curve.mean[0] == doctest::Approx(52.0));
}

TEST_CASE("single run curve equals its running minimum") {
  const auto a = hand_history("p", "x", {5.0, 7.0, 3.0, 4.0}, {true, true, true, true});
  const auto s = summarize({a});
  const auto* c = s.find("p", "x");
  const std::vector<double> expected{5.0, 5.0, 3.0, 3.0};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(c->curve.mean[i] == expected[i]);
    CHECK(c->curve.standard_error[i] == 0.0);
  }
}

TEST_CASE("cells without feasible runs report NA") {
  const auto a = hand_history("p", "rs", {5.0, 7.0}, {false, false});
  const auto b = hand_history("p", "ts", {1.0, 0.5}, {true, true});
  const auto s = summarize({a, b});
  const auto* c = s.find("p", "rs");
  CHECK(!c->best.has_value());
  CHECK(c->feasible_runs == 0);
  CHECK(c->curve.mean[1] == 7.0);
  const std::string table = format_table(s);
  CHECK(table.find("NA") != std::string::npos);
  CHECK(table.find("0/1") != std::string::npos);
  const auto j = to_json(s);
  CHECK(j["cells"][0]["best"] == "NA");
  CHECK(j["infeasible_default"]["p"] == 7.0);
  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}

TEST_CASE("history CSV round trip") {
  RunConfig cfg;
  cfg.problem = toy2d();
  cfg.budget = 14;
  cfg.n_init = 10;
  cfg.seed = 3;
  const auto h = run(cfg);
  const fs::path dir = scratch("csv");
  const fs::path file = dir / "run.csv";
  const auto desc = describe_run(cfg, "", 2);
  write_history_csv(file, h, desc);
  const auto back = read_history_csv(file);
  CHECK(back.problem() == "toy2d");
  CHECK(back.cell() == "ts-tf-tr");
  CHECK(back.config["replication"] == 2);
  CHECK(back.config["seed"] == 3);
  REQUIRE(back.rows.size() == h.records.size());
  const auto trace = h.best_feasible_trace();
  for (std::size_t i = 0; i < h.records.size(); ++i) {
    CHECK(back.rows[i].x == h.records[i].point);
    CHECK(back.rows[i].objective == h.records[i].objective);
    CHECK(back.rows[i].constraints == h.records[i].constraints);
    CHECK(back.rows[i].feasible == h.records[i].feasible);
    CHECK(back.rows[i].best_merit == trace[i]);
  }
  const auto mem = to_history_file(h, desc);
  CHECK(mem.rows.size() == back.rows.size());
  CHECK(load_histories(dir).size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("study config parsing") {
  const auto j = nlohmann::json::parse(R"({
    "problems": [{"name": "toy2d", "budget": 12, "q": 2, "n_init": 4}],
    "methods": [{"method": "ts"}, {"method": "cei", "use_trust_region": false, "use_transforms": false},
                {"method": "random"}],
    "replications": 2, "base_seed": 40, "output_dir": "somewhere", "workers": 2})");
  const auto c = study_config_from_json(j);
  CHECK(c.problems.size() == 1);
  CHECK(c.problems[0].batch_size == 2);
  CHECK(c.methods[1].label == "cei-raw-global");
  CHECK(c.methods[2].label == "random");
  CHECK(replication_seed(c, 3) == 43);
  CHECK(study_config_from_json(to_json(c)).methods.size() == 3);
  CHECK_THROWS_AS(study_config_from_json(nlohmann::json::parse(R"({"problems": [{"name": "nope"}],
      "methods": [{"method": "ts"}]})")), std::invalid_argument);
  CHECK_THROWS_AS(study_config_from_json(nlohmann::json::parse(R"({"problems": []})")), std::invalid_argument);
  const auto grid = study_config_from_json(
      nlohmann::json::parse(R"({"problems": [{"name": "keane30"}], "ablation_grid": true})"));
  CHECK(grid.methods.size() == 8);
}

TEST_CASE("studies are reproducible and independent of worker count") {
  StudyConfig c;
  c.problems.push_back({"toy2d", std::nullopt, 16, 2, 6});
  c.methods = {{"ts-tf-tr", AcquisitionMethod::thompson, true, true},
               {"random", AcquisitionMethod::random, true, true}};
  c.replications = 3;
  c.base_seed = 5;
  c.output_dir = scratch("study_a");
  c.workers = 1;
  const auto r1 = run_study(c);
  auto c2 = c;
  c2.output_dir = scratch("study_b");
  c2.workers = 3;
  const auto r2 = run_study(c2);
  REQUIRE(r1.runs.size() == 6);
  for (std::size_t i = 0; i < r1.runs.size(); ++i) {
    CHECK(r1.runs[i].completed);
    CHECK(r1.runs[i].seed == 5 + static_cast<std::uint64_t>(r1.runs[i].replication));
    const auto rel = fs::relative(r1.runs[i].file, c.output_dir);
    CHECK(slurp(r1.runs[i].file) == slurp(c2.output_dir / rel));
  }
  CHECK(fs::exists(r1.manifest));
  const auto manifest = nlohmann::json::parse(slurp(r1.manifest));
  CHECK(manifest["runs"].size() == 6);
  CHECK(load_histories(c.output_dir).size() == 6);
  fs::remove_all(c.output_dir);
  fs::remove_all(c2.output_dir);
}

TEST_CASE("failed runs are recorded and the study continues") {
  StudyConfig c;
  ExternalSpec ext{"python3 " + std::string(SCBO_TEST_DATA) + "/dying_evaluator.py 4", 2, 1, Vector::Zero(2),
                   Vector::Ones(2), 20000};
  c.problems.push_back({"dying", ext, 10, 1, 5});
  c.problems.push_back({"toy2d", std::nullopt, 6, 1, 6});
  c.methods = {{"random", AcquisitionMethod::random, true, true}};
  c.output_dir = scratch("study_fail");
  const auto r = run_study(c);
  REQUIRE(r.runs.size() == 2);
  CHECK(!r.runs[0].completed);
  CHECK(!r.runs[0].error.empty());
  CHECK(r.runs[1].completed);
  const auto partial = read_history_csv(r.runs[0].file);
  CHECK(partial.rows.size() == 4);
  CHECK(partial.config["completed"] == false);
  fs::remove_all(c.output_dir);
}
