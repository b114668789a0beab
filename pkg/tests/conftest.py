import numpy as np
import pytest

from heatsched.core import PumpConfig, Tariff
from heatsched.demand import default_stats, fit_lognormal, sample_profiles
from heatsched.optimizer import solve_batch

ACCEPTANCE_LINES = []


def random_instance(rng: np.random.Generator, H: int, mode: str):
    """Random (demand, tariff, config) with frequent ties and boundary hits."""
    kind = rng.integers(3)
    if kind == 0:
        mt_hours = rng.choice(H, size=rng.integers(0, H + 1), replace=False)
        prices = [1000 if t in mt_hours else 1500 for t in range(H)]
    elif kind == 1:
        prices = (rng.integers(1, 5, H) * 1000).tolist()
    else:
        prices = [1000] * H
    s0 = float(rng.choice([rng.uniform(0, 200), 10.0 * rng.integers(0, 21)]))
    scale = rng.choice([60.0, 90.0, 140.0, 260.0])
    if rng.random() < 0.5:
        hd = rng.uniform(0, scale, H)
    else:
        hd = 10.0 * rng.integers(0, int(scale / 10) + 1, H)
    cfg = PumpConfig(s0=s0, horizon=H, terminal_mode=mode)
    return hd, Tariff(prices), cfg


@pytest.fixture(scope="session")
def default_model():
    return fit_lognormal(default_stats())


@pytest.fixture(scope="session")
def pipeline_100k(default_model):
    """(X, solution) for 10^5 default-stats profiles, seed 0."""
    X = sample_profiles(default_model, 100_000, seed=0)
    return X, solve_batch(X, Tariff.default(), PumpConfig())


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def labeled_pipeline(n: int, seed: int):
    """(X, Y) of feasible default-stats profiles and their optimal schedules."""
    from heatsched.core import decode_codes

    X = sample_profiles(fit_lognormal(default_stats()), n, seed=seed)
    sol = solve_batch(X, Tariff.default(), PumpConfig())
    ok = sol.feasible
    return X[ok], decode_codes(sol.code[ok], 24)


@pytest.fixture(scope="session")
def small_labeled():
    return labeled_pipeline(3000, seed=21)
