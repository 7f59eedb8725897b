import math

import numpy as np
import pytest

import scbo


def test_transforms():
    y = np.array([-3.0, 0.0, 2.0, 10.0])
    b = scbo.bilog(y)
    assert b[1] == 0.0
    assert b[2] == pytest.approx(math.log(3.0))
    assert np.all(np.sign(b) == np.sign(y))
    t = scbo.copula_transform(np.array([5.0, 1.0, 3.0]))
    assert t[2] == pytest.approx(0.0, abs=1e-12)
    assert t[1] < t[2] < t[0]


def test_latin_hypercube():
    x = scbo.latin_hypercube(8, 3, seed=1)
    assert x.shape == (8, 3)
    for k in range(3):
        assert sorted(np.floor(x[:, k] * 8).astype(int)) == list(range(8))
    assert np.array_equal(x, scbo.latin_hypercube(8, 3, seed=1))


def test_problems():
    assert {"ackley10", "keane30", "toy2d", "rosenbrock5"} <= set(scbo.problem_names())
    info = scbo.problem_info("ackley10")
    assert info["dim"] == 10 and info["constraints"] == 2
    f, c = scbo.evaluate("ackley10", np.zeros(10))
    assert abs(f) < 1e-12
    assert c.shape == (2,)
    with pytest.raises(ValueError):
        scbo.evaluate("branin", np.zeros(2))


def test_gp_fit_and_predict():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(25, 2))
    y = np.sin(4 * x[:, 0]) + x[:, 1]
    gp = scbo.fit_gp(x, y, seed=3)
    mean, var = gp.predict(x)
    assert np.max(np.abs(mean - y)) < 0.2
    assert np.all(var >= 0)
    draws = gp.sample(x[:5], count=4, seed=1)
    assert draws.shape == (4, 5)
    assert np.array_equal(draws, gp.sample(x[:5], count=4, seed=1))


def test_run_registry_problem():
    h = scbo.run("toy2d", budget=20, n_init=8, seed=2)
    assert h["x"].shape == (20, 2)
    assert h["completed"]
    best = h["best_feasible"]
    assert np.all(np.diff(best[np.isfinite(best)]) <= 0)
    again = scbo.run("toy2d", budget=20, n_init=8, seed=2)
    assert np.array_equal(h["x"], again["x"])


def test_run_python_callable():
    calls = []

    def problem(x):
        calls.append(x.copy())
        return float(np.sum((x - 0.3) ** 2)), np.array([x[0] - 0.8])

    h = scbo.run(problem, method="cei", budget=15, n_init=6, dim=2, constraints=1,
                 lower=np.zeros(2), upper=np.ones(2), seed=0)
    assert len(calls) == 15
    assert h["recommendation"] is not None
    assert h["recommendation"][0] <= 0.8

    def broken(x):
        return 0.0, np.zeros(3)

    h = scbo.run(broken, budget=10, n_init=5, dim=2, constraints=1,
                 lower=np.zeros(2), upper=np.ones(2))
    assert not h["completed"]
    assert "constraints" in h["error"]


def test_summarize(tmp_path):
    with pytest.raises(ValueError):
        scbo.summarize(tmp_path / "missing")
