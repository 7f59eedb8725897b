#include "scbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace scbo {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_json_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double standard_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

}  // namespace

ProblemSpec ProblemEntry::instantiate() const {
  if (external) {
    ExternalCommand cmd{external->command, std::chrono::milliseconds(external->timeout_ms)};
    return external_problem(cmd, external->dim, external->constraint_count, external->lower,
                            external->upper, name.empty() ? "external" : name);
  }
  return make_problem(name);
}

std::string cell_label(AcquisitionMethod method, bool use_transforms, bool use_trust_region) {
  if (method == AcquisitionMethod::random) return "random";
  return to_string(method) + (use_transforms ? "-tf" : "-raw") + (use_trust_region ? "-tr" : "-global");
}

std::vector<MethodCell> ablation_grid() {
  std::vector<MethodCell> cells;
  for (bool transforms : {true, false})
    for (auto method : {AcquisitionMethod::thompson, AcquisitionMethod::cei})
      for (bool region : {true, false})
        cells.push_back({cell_label(method, transforms, region), method, transforms, region});
  return cells;
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
  StudyConfig c;
  if (!j.contains("problems") || !j["problems"].is_array() || j["problems"].empty())
    throw std::invalid_argument("study config: 'problems' must be a non-empty array");
  for (const auto& p : j["problems"]) {
    ProblemEntry e;
    e.name = p.value("name", std::string{});
    e.budget = p.value("budget", 100);
    e.batch_size = p.value("q", 1);
    e.n_init = p.value("n_init", 10);
    if (p.contains("external")) {
      const auto& x = p["external"];
      ExternalSpec s;
      s.command = x.at("command").get<std::string>();
      s.dim = x.at("d").get<int>();
      s.constraint_count = x.at("m").get<int>();
      s.lower = from_json_vector(x.at("lower"));
      s.upper = from_json_vector(x.at("upper"));
      s.timeout_ms = x.value("timeout_ms", 60000);
      e.external = std::move(s);
      if (e.name.empty()) e.name = "external";
    } else {
      (void)make_problem(e.name);
    }
    c.problems.push_back(std::move(e));
  }
  if (j.contains("methods")) {
    for (const auto& m : j["methods"]) {
      MethodCell cell;
      cell.method = parse_acquisition_method(m.at("method").get<std::string>());
      cell.use_transforms = m.value("use_transforms", true);
      cell.use_trust_region = m.value("use_trust_region", true);
      cell.label = m.value("label", cell_label(cell.method, cell.use_transforms, cell.use_trust_region));
      c.methods.push_back(std::move(cell));
    }
  } else if (j.value("ablation_grid", false)) {
    c.methods = ablation_grid();
  }
  if (c.methods.empty()) throw std::invalid_argument("study config: no methods given");
  c.replications = j.value("replications", 1);
  c.base_seed = j.value("base_seed", std::uint64_t{0});
  c.output_dir = j.value("output_dir", std::string("scbo-study"));
  c.workers = j.value("workers", 1);
  if (c.replications < 1) throw std::invalid_argument("study config: replications must be >= 1");
  if (c.workers < 1) throw std::invalid_argument("study config: workers must be >= 1");
  return c;
}

nlohmann::json to_json(const StudyConfig& c) {
  nlohmann::json j;
  j["problems"] = nlohmann::json::array();
  for (const auto& p : c.problems) {
    nlohmann::json e{{"name", p.name}, {"budget", p.budget}, {"q", p.batch_size}, {"n_init", p.n_init}};
    if (p.external)
      e["external"] = {{"command", p.external->command},
                       {"d", p.external->dim},
                       {"m", p.external->constraint_count},
                       {"lower", to_std(p.external->lower)},
                       {"upper", to_std(p.external->upper)},
                       {"timeout_ms", p.external->timeout_ms}};
    j["problems"].push_back(std::move(e));
  }
  j["methods"] = nlohmann::json::array();
  for (const auto& m : c.methods)
    j["methods"].push_back({{"label", m.label},
                            {"method", to_string(m.method)},
                            {"use_transforms", m.use_transforms},
                            {"use_trust_region", m.use_trust_region}});
  j["replications"] = c.replications;
  j["base_seed"] = c.base_seed;
  j["output_dir"] = c.output_dir.string();
  j["workers"] = c.workers;
  return j;
}

nlohmann::json describe_run(const RunConfig& config, const std::string& cell,
                            std::optional<int> replication, const std::optional<ExternalSpec>& external) {
  const auto& p = config.problem;
  nlohmann::json problem{{"name", p.name},
                         {"d", p.dim},
                         {"m", p.constraint_count},
                         {"lower", to_std(p.lower)},
                         {"upper", to_std(p.upper)}};
  if (external) problem["external_command"] = external->command;
  nlohmann::json gp{{"lengthscale_bounds", {config.gp.lengthscale_lo, config.gp.lengthscale_hi}},
                    {"signal_variance_bounds", {config.gp.signal_variance_lo, config.gp.signal_variance_hi}},
                    {"noise_variance_bounds", {config.gp.noise_variance_lo, config.gp.noise_variance_hi}},
                    {"horseshoe_scale", config.gp.horseshoe_scale},
                    {"restarts", config.gp.restarts},
                    {"warm_restarts", config.gp.warm_restarts},
                    {"max_iterations", config.gp.max_iterations},
                    {"jitter", {config.gp.jitter_initial, config.gp.jitter_max}}};
  const auto tr = TrustRegionConfig::defaults(p.dim, config.batch_size);
  nlohmann::json region{{"length_init", tr.length_init},
                        {"length_min", config.length_min.value_or(tr.length_min)},
                        {"length_max", tr.length_max},
                        {"success_tolerance", tr.success_tolerance},
                        {"failure_tolerance", tr.failure_tolerance},
                        {"candidates", candidate_count(p.dim)},
                        {"perturbation_probability", perturbation_probability(p.dim)}};
  nlohmann::json j{{"problem", problem},
                   {"budget", config.budget},
                   {"q", config.batch_size},
                   {"n_init", config.n_init},
                   {"seed", config.seed},
                   {"method", to_string(config.method)},
                   {"use_transforms", config.use_transforms},
                   {"use_trust_region", config.use_trust_region},
                   {"delta", config.delta},
                   {"noisy_observations", config.noisy_observations},
                   {"gp", gp},
                   {"trust_region", region},
                   {"version", kVersion}};
  j["cell"] = cell.empty() ? cell_label(config.method, config.use_transforms, config.use_trust_region) : cell;
  if (replication) j["replication"] = *replication;
  return j;
}

void write_history_csv(std::ostream& out, const RunHistory& history, const nlohmann::json& description) {
  nlohmann::json desc = description;
  desc["completed"] = history.completed;
  if (!history.completed) desc["error"] = history.error;
  out << "# " << desc.dump() << '\n';
  const int d = history.config.problem.dim;
  const int m = history.config.problem.constraint_count;
  out << "eval_index";
  for (int k = 1; k <= d; ++k) out << ",x_" << k;
  out << ",objective";
  for (int k = 1; k <= m; ++k) out << ",c_" << k;
  out << ",feasible,best_merit\n";
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : history.records) {
    if (r.feasible) best = std::min(best, r.objective);
    out << r.eval_index;
    for (Index k = 0; k < r.point.size(); ++k) out << ',' << format_double(r.point[k]);
    out << ',' << format_double(r.objective);
    for (Index k = 0; k < r.constraints.size(); ++k) out << ',' << format_double(r.constraints[k]);
    out << ',' << (r.feasible ? 1 : 0) << ',' << format_double(best) << '\n';
  }
}

void write_history_csv(const fs::path& path, const RunHistory& history, const nlohmann::json& description) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_history_csv(out, history, description);
  if (!out) throw std::runtime_error("error writing " + path.string());
}

std::string HistoryFile::problem() const {
  return config.contains("problem") ? config["problem"].value("name", std::string{"?"}) : "?";
}

std::string HistoryFile::cell() const { return config.value("cell", std::string{"?"}); }

HistoryFile read_history_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  HistoryFile h;
  h.path = path;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::runtime_error(path.string() + ": missing configuration header");
  h.config = nlohmann::json::parse(line.substr(2));
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing column header");
  const auto header = split(line, ',');
  int d = 0, m = 0;
  for (const auto& col : header) {
    if (col.rfind("x_", 0) == 0) ++d;
    if (col.rfind("c_", 0) == 0) ++m;
  }
  const std::size_t expected = static_cast<std::size_t>(d + m + 4);
  if (header.size() != expected) throw std::runtime_error(path.string() + ": unexpected columns");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != expected) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    HistoryRow r;
    std::size_t i = 0;
    r.eval_index = std::stoi(f[i++]);
    r.x.resize(d);
    for (int k = 0; k < d; ++k) r.x[k] = parse_double(f[i++]);
    r.objective = parse_double(f[i++]);
    r.constraints.resize(m);
    for (int k = 0; k < m; ++k) r.constraints[k] = parse_double(f[i++]);
    r.feasible = f[i++] == "1";
    r.best_merit = parse_double(f[i++]);
    h.rows.push_back(std::move(r));
  }
  return h;
}

HistoryFile to_history_file(const RunHistory& history, const nlohmann::json& description) {
  HistoryFile h;
  h.config = description;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : history.records) {
    if (r.feasible) best = std::min(best, r.objective);
    h.rows.push_back({r.eval_index, r.point, r.objective, r.constraints, r.feasible, best});
  }
  return h;
}

std::vector<HistoryFile> load_histories(const fs::path& root) {
  std::vector<fs::path> files;
  if (!fs::exists(root)) throw std::invalid_argument("no such directory: " + root.string());
  if (fs::is_regular_file(root)) {
    files.push_back(root);
  } else {
    for (const auto& entry : fs::recursive_directory_iterator(root))
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<HistoryFile> out;
  for (const auto& f : files) out.push_back(read_history_csv(f));
  return out;
}

const CellSummary* StudySummary::find(const std::string& problem, const std::string& cell) const {
  for (const auto& c : cells)
    if (c.problem == problem && c.cell == cell) return &c;
  return nullptr;
}

StudySummary summarize(const std::vector<HistoryFile>& histories, std::optional<double> default_override) {
  if (histories.empty()) throw std::invalid_argument("summarize: no histories");
  StudySummary s;
  for (const auto& h : histories) {
    auto it = s.infeasible_default.try_emplace(h.problem(), -std::numeric_limits<double>::infinity()).first;
    for (const auto& r : h.rows) it->second = std::max(it->second, r.objective);
  }
  if (default_override)
    for (auto& [_, v] : s.infeasible_default) v = *default_override;

  std::map<std::pair<std::string, std::string>, std::vector<const HistoryFile*>> groups;
  for (const auto& h : histories) groups[{h.problem(), h.cell()}].push_back(&h);

  for (const auto& [key, runs] : groups) {
    CellSummary c;
    c.problem = key.first;
    c.cell = key.second;
    c.runs = static_cast<int>(runs.size());
    const double fallback = s.infeasible_default.at(c.problem);
    std::vector<double> finals;
    std::vector<double> final_merits;
    std::size_t length = 0;
    for (const auto* h : runs) {
      length = std::max(length, h->rows.size());
      const double last = h->rows.empty() ? std::numeric_limits<double>::infinity() : h->rows.back().best_merit;
      if (std::isfinite(last)) finals.push_back(last);
      final_merits.push_back(std::isfinite(last) ? last : fallback);
    }
    c.feasible_runs = static_cast<int>(finals.size());
    if (!finals.empty()) {
      std::sort(finals.begin(), finals.end());
      c.best = finals.front();
      c.worst = finals.back();
      const std::size_t n = finals.size();
      c.median = n % 2 == 1 ? finals[n / 2] : 0.5 * (finals[n / 2 - 1] + finals[n / 2]);
    }
    c.final_mean = mean_of(final_merits);
    c.final_standard_error = standard_error_of(final_merits);
    for (std::size_t i = 0; i < length; ++i) {
      std::vector<double> vals;
      for (const auto* h : runs) {
        if (i >= h->rows.size()) continue;
        const double v = h->rows[i].best_merit;
        vals.push_back(std::isfinite(v) ? v : fallback);
      }
      c.curve.mean.push_back(mean_of(vals));
      c.curve.standard_error.push_back(standard_error_of(vals));
      c.curve.count.push_back(static_cast<int>(vals.size()));
    }
    s.cells.push_back(std::move(c));
  }
  return s;
}

nlohmann::json to_json(const StudySummary& summary) {
  nlohmann::json j;
  j["infeasible_default"] = summary.infeasible_default;
  j["cells"] = nlohmann::json::array();
  const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json("NA"); };
  for (const auto& c : summary.cells) {
    j["cells"].push_back({{"problem", c.problem},
                          {"cell", c.cell},
                          {"runs", c.runs},
                          {"best", opt(c.best)},
                          {"worst", opt(c.worst)},
                          {"median", opt(c.median)},
                          {"feasible", std::to_string(c.feasible_runs) + "/" + std::to_string(c.runs)},
                          {"final_mean", c.final_mean},
                          {"final_standard_error", c.final_standard_error},
                          {"curve", {{"mean", c.curve.mean},
                                     {"standard_error", c.curve.standard_error},
                                     {"count", c.curve.count}}}});
  }
  return j;
}

std::string format_table(const StudySummary& summary) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %-16s %12s %12s %12s %9s\n", "problem", "cell", "best", "worst",
                "median", "feasible");
  os << buf;
  const auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("NA");
    char b[32];
    std::snprintf(b, sizeof b, "%.6g", *v);
    return std::string(b);
  };
  for (const auto& c : summary.cells) {
    const std::string feas = std::to_string(c.feasible_runs) + "/" + std::to_string(c.runs);
    std::snprintf(buf, sizeof buf, "%-14s %-16s %12s %12s %12s %9s\n", c.problem.c_str(), c.cell.c_str(),
                  cell(c.best).c_str(), cell(c.worst).c_str(), cell(c.median).c_str(), feas.c_str());
    os << buf;
  }
  for (const auto& [problem, v] : summary.infeasible_default)
    os << "infeasible default for " << problem << ": " << format_double(v) << '\n';
  return os.str();
}

StudyResult run_study(const StudyConfig& config) {
  struct Job {
    const ProblemEntry* problem;
    const MethodCell* cell;
    int replication;
  };
  std::vector<Job> jobs;
  for (const auto& p : config.problems)
    for (const auto& m : config.methods)
      for (int k = 0; k < config.replications; ++k) jobs.push_back({&p, &m, k});

  StudyResult result;
  result.runs.resize(jobs.size());
  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      auto& rec = result.runs[i];
      rec.problem = job.problem->name;
      rec.cell = job.cell->label;
      rec.replication = job.replication;
      rec.seed = replication_seed(config, job.replication);
      char name[32];
      std::snprintf(name, sizeof name, "rep_%03d.csv", job.replication);
      rec.file = config.output_dir / rec.problem / rec.cell / name;
      const auto start = std::chrono::steady_clock::now();
      try {
        RunConfig rc;
        rc.problem = job.problem->instantiate();
        rc.budget = job.problem->budget;
        rc.batch_size = job.problem->batch_size;
        rc.n_init = job.problem->n_init;
        rc.seed = rec.seed;
        rc.method = job.cell->method;
        rc.use_transforms = job.cell->use_transforms;
        rc.use_trust_region = job.cell->use_trust_region;
        const RunHistory h = run(rc);
        write_history_csv(rec.file, h, describe_run(rc, rec.cell, rec.replication, job.problem->external));
        rec.completed = h.completed;
        rec.error = h.error;
      } catch (const std::exception& e) {
        rec.completed = false;
        rec.error = e.what();
      }
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };

  const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(jobs.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json manifest;
  manifest["config"] = to_json(config);
  manifest["version"] = kVersion;
  manifest["wall_seconds"] = result.wall_seconds;
  manifest["runs"] = nlohmann::json::array();
  for (const auto& r : result.runs) {
    nlohmann::json e{{"problem", r.problem},
                     {"cell", r.cell},
                     {"replication", r.replication},
                     {"seed", r.seed},
                     {"file", fs::relative(r.file, config.output_dir).string()},
                     {"completed", r.completed},
                     {"wall_seconds", r.wall_seconds}};
    if (!r.error.empty()) e["error"] = r.error;
    manifest["runs"].push_back(std::move(e));
  }
  fs::create_directories(config.output_dir);
  result.manifest = config.output_dir / "manifest.json";
  std::ofstream(result.manifest) << manifest.dump(2) << '\n';
  return result;
}

}  // namespace scbo
