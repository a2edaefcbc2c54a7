import numpy as np
import pytest

from jetid import get_model
from jetid.models import DEFAULTS
from jetid.simulate import simulate_jets

MODEL_NAMES = ("lotka_volterra", "reactor", "henon_heiles", "linparam")


def rel_err(est, true):
    est, true = np.asarray(est, dtype=float), np.asarray(true, dtype=float)
    return float(np.max(np.abs(est - true) / np.where(true != 0, np.abs(true), 1.0)))


def sample_lv(rng):
    return rng.uniform(0.5, 1.5, 4), rng.uniform(0.5, 2.5, 2)


def sample_reactor(rng):
    theta = np.array([rng.uniform(0.5, 2.0), rng.uniform(1.0, 3.0), rng.uniform(50.0, 150.0)])
    x0 = np.array([rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0), rng.uniform(300.0, 400.0)])
    return theta, x0


def sample_hh(rng):
    theta = np.asarray(DEFAULTS["henon_heiles"]["theta"]) * rng.uniform(0.8, 1.2, 6)
    return theta, rng.uniform(-0.15, 0.15, 4) + np.array([0.0, 0.0, 0.05, 0.05])


def sample_linparam(rng):
    theta = np.array([rng.uniform(0.5, 1.5), rng.uniform(-2.0, -0.5), rng.uniform(-0.5, -0.1)])
    return theta, np.array([rng.uniform(-0.5, 0.5), 0.0])


SAMPLERS = {
    "lotka_volterra": sample_lv,
    "reactor": sample_reactor,
    "henon_heiles": sample_hh,
    "linparam": sample_linparam,
}


@pytest.fixture(scope="session")
def models():
    return {name: get_model(name) for name in MODEL_NAMES}


@pytest.fixture(scope="session")
def default_jets(models):
    """Analytic jets on [0, 10) with 200 points at the default parameters."""
    return {
        name: simulate_jets(models[name], DEFAULTS[name]["x0"], DEFAULTS[name]["theta"], (0.0, 10.0), 200)
        for name in MODEL_NAMES
    }


ACCEPTANCE_LINES = []


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
