#include <CLI11.hpp>
#include <json.hpp>

#include <malloc.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "scbo/harness.hpp"

namespace fs = std::filesystem;
using namespace scbo;

namespace {

constexpr int kUsageError = 2;
constexpr int kRunError = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_output_dir() {
  const char* env = std::getenv("SCBO_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path("scbo-out");
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

struct RunArgs {
  std::string problem;
  std::string method = "ts";
  int budget = 100;
  int q = 1;
  int n_init = 10;
  std::uint64_t seed = 0;
  bool no_transforms = false;
  bool global = false;
  double delta = 0.05;
  bool noisy = false;
  std::optional<double> length_min;
  std::string output;
  std::string external_cmd;
  int dim = 0;
  int constraints = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  int timeout_ms = 60000;
};

int do_run(const RunArgs& a) {
  RunConfig cfg;
  std::optional<ExternalSpec> external;
  try {
    if (!a.external_cmd.empty()) {
      if (a.dim < 1) throw UsageError("--dim is required with --external-cmd");
      if (static_cast<int>(a.lower.size()) != a.dim || static_cast<int>(a.upper.size()) != a.dim)
        throw UsageError("--lower and --upper need exactly --dim values each");
      external = ExternalSpec{a.external_cmd, a.dim, a.constraints, to_vector(a.lower), to_vector(a.upper),
                              a.timeout_ms};
      ProblemEntry entry{a.problem.empty() ? "external" : a.problem, external};
      cfg.problem = entry.instantiate();
    } else {
      if (a.problem.empty()) throw UsageError("--problem or --external-cmd is required");
      cfg.problem = make_problem(a.problem);
    }
    cfg.method = parse_acquisition_method(a.method);
    cfg.budget = a.budget;
    cfg.batch_size = a.q;
    cfg.n_init = a.n_init;
    cfg.seed = a.seed;
    cfg.use_transforms = !a.no_transforms;
    cfg.use_trust_region = !a.global;
    cfg.delta = a.delta;
    cfg.noisy_observations = a.noisy;
    cfg.length_min = a.length_min;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const RunHistory history = run(cfg);
  fs::path out = a.output;
  if (out.empty()) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%s_seed%llu.csv", cfg.problem.name.c_str(),
                  cell_label(cfg.method, cfg.use_transforms, cfg.use_trust_region).c_str(),
                  static_cast<unsigned long long>(cfg.seed));
    out = default_output_dir() / name;
  }
  write_history_csv(out, history, describe_run(cfg, "", std::nullopt, external));

  const auto best = history.best_feasible_trace();
  std::cout << "wrote " << out.string() << " (" << history.records.size() << " evaluations)\n";
  if (!best.empty() && std::isfinite(best.back()))
    std::printf("best feasible objective: %.10g\n", best.back());
  else
    std::printf("no feasible point found\n");
  if (!history.completed) {
    std::cerr << "run aborted: " << history.error << '\n';
    return kRunError;
  }
  return 0;
}

int do_study(const std::string& path, std::optional<int> workers) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path);
  StudyConfig cfg;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.contains("output_dir")) j["output_dir"] = default_output_dir().string();
    cfg = study_config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (workers) cfg.workers = *workers;
  const StudyResult result = run_study(cfg);
  int failed = 0;
  for (const auto& r : result.runs) {
    if (r.completed) continue;
    ++failed;
    std::cerr << r.problem << '/' << r.cell << " rep " << r.replication << ": " << r.error << '\n';
  }
  std::printf("%zu runs, %d failed, %.1f s; manifest %s\n", result.runs.size(), failed, result.wall_seconds,
              result.manifest.string().c_str());
  return failed == 0 ? 0 : kRunError;
}

int do_summarize(const std::string& input, std::optional<double> default_value, const std::string& output) {
  std::vector<HistoryFile> histories;
  try {
    histories = load_histories(input);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (histories.empty()) throw UsageError("no history files under " + input);
  const StudySummary summary = summarize(histories, default_value);
  std::cout << format_table(summary);
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw std::runtime_error("cannot write " + output);
    out << to_json(summary).dump(2) << '\n';
  }
  return 0;
}

int do_mc_volume(const std::string& problem, std::uint64_t samples, std::uint64_t seed) {
  ProblemSpec p;
  try {
    p = make_problem(problem);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (samples == 0) throw UsageError("--samples must be positive");
  const VolumeEstimate v = feasible_volume(p, samples, seed);
  std::printf("problem %s: %llu/%llu feasible, fraction %.6e (standard error %.2e)\n", p.name.c_str(),
              static_cast<unsigned long long>(v.feasible), static_cast<unsigned long long>(v.samples),
              v.fraction, v.standard_error);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // Large posterior matrices are reallocated every iteration; keep them on the heap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  CLI::App app{"Scalable constrained Bayesian optimization"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Run one optimization and write its history CSV");
  run_cmd->add_option("--problem", ra.problem, "Benchmark name (see list-problems)");
  run_cmd->add_option("--method", ra.method, "ts, cei or random")->capture_default_str();
  run_cmd->add_option("--budget", ra.budget, "Evaluation budget")->check(CLI::PositiveNumber)->capture_default_str();
  run_cmd->add_option("--q", ra.q, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
  run_cmd->add_option("--n-init", ra.n_init, "Initial design size")->check(CLI::PositiveNumber)->capture_default_str();
  run_cmd->add_option("--seed", ra.seed, "Random seed")->capture_default_str();
  run_cmd->add_flag("--no-transforms", ra.no_transforms, "Disable copula and bilog transforms");
  run_cmd->add_flag("--global", ra.global, "Disable the trust region");
  run_cmd->add_option("--delta", ra.delta, "Risk level for the noisy recommendation")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  run_cmd->add_flag("--noisy", ra.noisy, "Use posterior means for region decisions");
  run_cmd->add_option("--length-min", ra.length_min, "Override the minimum region length");
  run_cmd->add_option("--output,-o", ra.output, "History CSV path");
  run_cmd->add_option("--external-cmd", ra.external_cmd, "Shell command of an external evaluator");
  run_cmd->add_option("--dim", ra.dim, "External problem dimension");
  run_cmd->add_option("--constraints", ra.constraints, "External constraint count");
  run_cmd->add_option("--lower", ra.lower, "External lower bounds")->delimiter(',');
  run_cmd->add_option("--upper", ra.upper, "External upper bounds")->delimiter(',');
  run_cmd->add_option("--timeout-ms", ra.timeout_ms, "External reply timeout")->capture_default_str();

  std::string study_path;
  std::optional<int> workers;
  auto* study_cmd = app.add_subcommand("study", "Run a replicated study from a JSON config");
  study_cmd->add_option("--config", study_path, "Study config JSON")->required();
  study_cmd->add_option("--workers", workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);

  std::string input;
  std::string summary_out;
  std::optional<double> default_value;
  auto* sum_cmd = app.add_subcommand("summarize", "Summarize history CSVs");
  sum_cmd->add_option("--input", input, "Directory or CSV file")->required();
  sum_cmd->add_option("--default-value", default_value, "Override the infeasible default merit");
  sum_cmd->add_option("--output,-o", summary_out, "Write the JSON summary here");

  auto* list_cmd = app.add_subcommand("list-problems", "List built-in benchmarks");

  std::string vol_problem;
  std::uint64_t vol_samples = 1000000;
  std::uint64_t vol_seed = 0;
  auto* vol_cmd = app.add_subcommand("mc-volume", "Monte Carlo estimate of the feasible fraction");
  vol_cmd->add_option("--problem", vol_problem, "Benchmark name")->required();
  vol_cmd->add_option("--samples", vol_samples, "Sample count")->capture_default_str();
  vol_cmd->add_option("--seed", vol_seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run_cmd) return do_run(ra);
    if (*study_cmd) return do_study(study_path, workers);
    if (*sum_cmd) return do_summarize(input, default_value, summary_out);
    if (*list_cmd) {
      for (const auto& name : problem_names()) {
        const ProblemSpec p = make_problem(name);
        std::printf("%-12s d=%-3d m=%d\n", name.c_str(), p.dim, p.constraint_count);
      }
      return 0;
    }
    if (*vol_cmd) return do_mc_volume(vol_problem, vol_samples, vol_seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunError;
  }
  return kUsageError;
}
