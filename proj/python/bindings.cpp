#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "scbo/harness.hpp"

namespace py = pybind11;
using namespace scbo;

namespace {

ProblemSpec python_problem(py::function fn, int dim, int constraint_count, const Vector& lower,
                           const Vector& upper, const std::string& name) {
  ProblemSpec p;
  p.name = name;
  p.dim = dim;
  p.constraint_count = constraint_count;
  p.lower = lower;
  p.upper = upper;
  p.evaluate = [fn, constraint_count](const Vector& x) {
    py::gil_scoped_acquire gil;
    const auto reply = fn(x).cast<std::pair<double, Vector>>();
    if (reply.second.size() != constraint_count)
      throw EvaluationError("python problem returned " + std::to_string(reply.second.size()) +
                            " constraints, expected " + std::to_string(constraint_count));
    return Evaluation{reply.first, reply.second};
  };
  p.validate();
  return p;
}

py::dict history_dict(const RunHistory& h) {
  const auto n = static_cast<Index>(h.records.size());
  const int d = h.config.problem.dim, m = h.config.problem.constraint_count;
  Matrix x(n, d), c(n, m);
  Vector f(n), length(n);
  std::vector<bool> feasible;
  for (Index i = 0; i < n; ++i) {
    const auto& r = h.records[static_cast<std::size_t>(i)];
    x.row(i) = r.point.transpose();
    c.row(i) = r.constraints.transpose();
    f[i] = r.objective;
    length[i] = r.length;
    feasible.push_back(r.feasible);
  }
  const auto trace = h.best_feasible_trace();
  py::dict out;
  out["x"] = x;
  out["objective"] = f;
  out["constraints"] = c;
  out["feasible"] = feasible;
  out["best_feasible"] = Vector(Eigen::Map<const Vector>(trace.data(), static_cast<Index>(trace.size())));
  out["length"] = length;
  out["restarts"] = static_cast<int>(h.regions.size()) - 1;
  out["completed"] = h.completed;
  out["error"] = h.error;
  if (auto rec = recommend(h)) out["recommendation"] = *rec;
  else out["recommendation"] = py::none();
  return out;
}

}  // namespace

PYBIND11_MODULE(_scbo, m) {
  m.doc() = "Constrained trust-region Bayesian optimization";
  m.attr("__version__") = kVersion;

  py::register_exception<EvaluationError>(m, "EvaluationError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("bilog", py::overload_cast<const Vector&>(&bilog), py::arg("y"));
  m.def(
      "copula_transform", [](const Vector& raw) { return copula_fit_transform(raw).transformed; },
      py::arg("y"));
  m.def(
      "latin_hypercube",
      [](int n, int dim, std::uint64_t seed) {
        Rng rng(seed);
        return latin_hypercube(n, dim, rng);
      },
      py::arg("n"), py::arg("dim"), py::arg("seed") = 0);

  m.def("problem_names", &problem_names);
  m.def(
      "problem_info",
      [](const std::string& name) {
        const auto p = make_problem(name);
        py::dict d;
        d["name"] = p.name;
        d["dim"] = p.dim;
        d["constraints"] = p.constraint_count;
        d["lower"] = p.lower;
        d["upper"] = p.upper;
        return d;
      },
      py::arg("name"));
  m.def(
      "evaluate",
      [](const std::string& name, const Vector& x) {
        const auto e = make_problem(name).evaluate(x);
        return std::make_pair(e.objective, e.constraints);
      },
      py::arg("name"), py::arg("x"));
  m.def(
      "feasible_volume",
      [](const std::string& name, std::uint64_t samples, std::uint64_t seed) {
        const auto v = feasible_volume(make_problem(name), samples, seed);
        return std::make_pair(v.fraction, v.standard_error);
      },
      py::arg("name"), py::arg("samples"), py::arg("seed") = 0);

  py::class_<GPHyperparameters>(m, "GPHyperparameters")
      .def(py::init<>())
      .def_readwrite("lengthscales", &GPHyperparameters::lengthscales)
      .def_readwrite("signal_variance", &GPHyperparameters::signal_variance)
      .def_readwrite("noise_variance", &GPHyperparameters::noise_variance)
      .def_readwrite("constant_mean", &GPHyperparameters::constant_mean);

  py::class_<TrainedGP>(m, "GP")
      .def(py::init<Matrix, const Vector&, GPHyperparameters>(), py::arg("x"), py::arg("y"),
           py::arg("hyperparameters"))
      .def_property_readonly("hyperparameters", &TrainedGP::hyperparameters)
      .def(
          "predict",
          [](const TrainedGP& gp, const Matrix& q, bool observation_noise) {
            const auto p = gp.predict(q, {.destandardize = true, .observation_noise = observation_noise});
            return std::make_pair(p.mean, p.variance);
          },
          py::arg("x"), py::arg("observation_noise") = false)
      .def(
          "sample",
          [](const TrainedGP& gp, const Matrix& q, int count, std::uint64_t seed) {
            Rng rng(seed);
            return sample_joint(gp, q, count, rng, true);
          },
          py::arg("x"), py::arg("count") = 1, py::arg("seed") = 0);

  m.def(
      "fit_gp",
      [](const Matrix& x, const Vector& y, std::uint64_t seed) {
        Rng rng(seed);
        return fit(x, y, GPFitConfig{}, rng);
      },
      py::arg("x"), py::arg("y"), py::arg("seed") = 0,
      "Fits a GP to inputs in the unit cube and raw targets.");

  m.def(
      "run",
      [](py::object problem, const std::string& method, int budget, int q, int n_init, std::uint64_t seed,
         bool use_transforms, bool use_trust_region, bool noisy, double delta, int dim, int constraints,
         std::optional<Vector> lower, std::optional<Vector> upper) {
        RunConfig cfg;
        if (py::isinstance<py::str>(problem)) {
          cfg.problem = make_problem(problem.cast<std::string>());
        } else {
          if (dim < 1 || !lower || !upper)
            throw std::invalid_argument("a callable problem needs dim, constraints, lower and upper");
          cfg.problem = python_problem(problem.cast<py::function>(), dim, constraints, *lower, *upper, "python");
        }
        cfg.method = parse_acquisition_method(method);
        cfg.budget = budget;
        cfg.batch_size = q;
        cfg.n_init = n_init;
        cfg.seed = seed;
        cfg.use_transforms = use_transforms;
        cfg.use_trust_region = use_trust_region;
        cfg.noisy_observations = noisy;
        cfg.delta = delta;
        return history_dict(run(cfg));
      },
      py::arg("problem"), py::arg("method") = "ts", py::arg("budget") = 100, py::arg("q") = 1,
      py::arg("n_init") = 10, py::arg("seed") = 0, py::arg("use_transforms") = true,
      py::arg("use_trust_region") = true, py::arg("noisy") = false, py::arg("delta") = 0.05, py::arg("dim") = 0,
      py::arg("constraints") = 0, py::arg("lower") = py::none(), py::arg("upper") = py::none());

  m.def(
      "summarize_json",
      [](const std::filesystem::path& root, std::optional<double> default_value) {
        return to_json(summarize(load_histories(root), default_value)).dump();
      },
      py::arg("root"), py::arg("default_value") = py::none());
}
