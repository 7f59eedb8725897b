#pragma once

#include "scbo/optimizer.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace scbo {

inline constexpr const char* kVersion = "0.1.0";

struct ExternalSpec {
  std::string command;
  int dim = 0;
  int constraint_count = 0;
  Vector lower;
  Vector upper;
  int timeout_ms = 60000;
};

/// One problem of a study, either from the registry or external.
struct ProblemEntry {
  std::string name;
  std::optional<ExternalSpec> external;
  int budget = 100;
  int batch_size = 1;
  int n_init = 10;

  ProblemSpec instantiate() const;
};

/// One method/ablation cell.
struct MethodCell {
  std::string label;
  AcquisitionMethod method = AcquisitionMethod::thompson;
  bool use_transforms = true;
  bool use_trust_region = true;
};

/// e.g. "ts-tf-tr", "cei-raw-global", "random".
std::string cell_label(AcquisitionMethod method, bool use_transforms, bool use_trust_region);

/// The 2 x 2 x 2 grid over transforms, acquisition (TS/cEI) and region mode.
std::vector<MethodCell> ablation_grid();

struct StudyConfig {
  std::vector<ProblemEntry> problems;
  std::vector<MethodCell> methods;
  int replications = 1;
  std::uint64_t base_seed = 0;
  std::filesystem::path output_dir = "scbo-study";
  int workers = 1;
};

StudyConfig study_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StudyConfig& config);

/// Seed of replication k: base_seed + k.
inline std::uint64_t replication_seed(const StudyConfig& c, int k) {
  return c.base_seed + static_cast<std::uint64_t>(k);
}

struct StudyRunRecord {
  std::string problem;
  std::string cell;
  int replication = 0;
  std::uint64_t seed = 0;
  std::filesystem::path file;
  bool completed = false;
  std::string error;
  double wall_seconds = 0.0;
};

struct StudyResult {
  std::vector<StudyRunRecord> runs;
  std::filesystem::path manifest;
  double wall_seconds = 0.0;
};

/// Runs every problem x method x replication cell, writing one history CSV
/// per run under output_dir/<problem>/<cell>/rep_<k>.csv and a manifest.json.
/// Failed runs are recorded in the manifest and do not stop the study.
StudyResult run_study(const StudyConfig& config);

/// Self-describing echo of a run configuration (no timing data).
nlohmann::json describe_run(const RunConfig& config, const std::string& cell = "",
                            std::optional<int> replication = std::nullopt,
                            const std::optional<ExternalSpec>& external = std::nullopt);

/// History CSV: a leading "# {json}" line with the resolved configuration,
/// then columns eval_index, x_1..x_d, objective, c_1..c_m, feasible,
/// best_merit (best feasible objective so far, "inf" before any).
void write_history_csv(std::ostream& out, const RunHistory& history, const nlohmann::json& description);
void write_history_csv(const std::filesystem::path& path, const RunHistory& history,
                       const nlohmann::json& description);

struct HistoryRow {
  int eval_index = 0;
  Vector x;
  double objective = 0.0;
  Vector constraints;
  bool feasible = false;
  double best_merit = 0.0;
};

struct HistoryFile {
  std::filesystem::path path;
  nlohmann::json config;
  std::vector<HistoryRow> rows;

  std::string problem() const;
  std::string cell() const;
};

HistoryFile read_history_csv(const std::filesystem::path& path);
/// In-memory equivalent of writing and re-reading a history.
HistoryFile to_history_file(const RunHistory& history, const nlohmann::json& description);
/// All *.csv files below `root`, sorted by path.
std::vector<HistoryFile> load_histories(const std::filesystem::path& root);

struct MeritCurve {
  std::vector<double> mean;
  std::vector<double> standard_error;
  std::vector<int> count;
};

struct CellSummary {
  std::string problem;
  std::string cell;
  int runs = 0;
  int feasible_runs = 0;
  std::optional<double> best;
  std::optional<double> worst;
  std::optional<double> median;
  MeritCurve curve;
  // Mean and standard error of the final merit (default applied).
  double final_mean = 0.0;
  double final_standard_error = 0.0;
};

struct StudySummary {
  // Merit assigned to runs without a feasible point so far, per problem.
  std::map<std::string, double> infeasible_default;
  std::vector<CellSummary> cells;

  const CellSummary* find(const std::string& problem, const std::string& cell) const;
};

/// Per-cell table and merit curves. Infeasible prefixes take the largest
/// objective observed across all runs of the same problem unless
/// `default_override` is given.
StudySummary summarize(const std::vector<HistoryFile>& histories,
                       std::optional<double> default_override = std::nullopt);
nlohmann::json to_json(const StudySummary& summary);
/// Fixed-width text table: problem, cell, best, worst, median, feasible.
std::string format_table(const StudySummary& summary);

}  // namespace scbo
