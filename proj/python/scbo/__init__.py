"""Constrained trust-region Bayesian optimization."""

import json

from ._scbo import (
    GP,
    EvaluationError,
    GPHyperparameters,
    NumericalError,
    __version__,
    bilog,
    copula_transform,
    evaluate,
    feasible_volume,
    fit_gp,
    latin_hypercube,
    problem_info,
    problem_names,
    run,
    summarize_json,
)


def summarize(root, default_value=None):
    """Summary of all history CSVs below ``root`` as a dict."""
    return json.loads(summarize_json(str(root), default_value))


__all__ = [
    "GP",
    "EvaluationError",
    "GPHyperparameters",
    "NumericalError",
    "__version__",
    "bilog",
    "copula_transform",
    "evaluate",
    "feasible_volume",
    "fit_gp",
    "latin_hypercube",
    "problem_info",
    "problem_names",
    "run",
    "summarize",
]
