import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatsched.core import Schedule
from heatsched.space import (
    MultiplicityHistogram,
    PoissonBaseline,
    baseline_fraction_at_most,
    build_histogram,
    fit_truncated_poisson,
    histogram_from_counts,
    space_report,
    truncated_mean,
)

LAM = 100_000 / 2**24


def hist(counts_by_mult, horizon=24):
    n = sum(m * c for m, c in counts_by_mult.items())
    return MultiplicityHistogram(n, dict(counts_by_mult), sum(counts_by_mult.values()), horizon)


# --- histogram ----------------------------------------------------------------

def test_identical_schedules():
    h = build_histogram([Schedule([1, 0, 1])] * 3)
    assert h.counts_by_multiplicity == {3: 1}
    assert h.distinct == 1 and h.horizon == 3


def test_distinct_schedules():
    h = build_histogram([5, 6, 7])
    assert h.counts_by_multiplicity == {1: 3}
    assert h.distinct == 3 and h.n == 3


def test_mixed_horizons_rejected():
    with pytest.raises(ValueError):
        build_histogram([Schedule([1, 0]), Schedule([1, 0, 0])])


def test_empty_rejected():
    with pytest.raises(ValueError):
        build_histogram([])


@given(st.lists(st.integers(0, 2**24 - 1), min_size=1, max_size=300))
def test_conservation(codes):
    h = build_histogram(codes)
    assert sum(m * c for m, c in h.counts_by_multiplicity.items()) == len(codes)
    assert sum(h.counts_by_multiplicity.values()) == h.distinct == len(set(codes))


def test_histograms_merge_by_count_addition():
    rng = np.random.default_rng(0)
    codes = rng.integers(0, 50, 1000)
    a, b = Counter(codes[:400].tolist()), Counter(codes[400:].tolist())
    assert histogram_from_counts(a + b, 24) == build_histogram(codes)


# --- baseline -----------------------------------------------------------------

def test_baseline_singleton_fraction():
    b = PoissonBaseline.uniform(100_000, 24)
    assert b.lam == pytest.approx(0.0059605, abs=1e-7)
    assert baseline_fraction_at_most(1, b) == pytest.approx(0.9999823, abs=5e-7)
    assert baseline_fraction_at_most(1, b) == pytest.approx(math.exp(-LAM) * (1 + LAM), rel=1e-14)


def test_baseline_zero_and_limit():
    b = PoissonBaseline(LAM)
    assert baseline_fraction_at_most(0, b) == pytest.approx(0.9940572, abs=1e-7)
    assert baseline_fraction_at_most(60, b) == 1.0
    with pytest.raises(ValueError):
        baseline_fraction_at_most(-1, b)


@given(st.floats(1e-4, 30), st.floats(1e-4, 30), st.integers(0, 40))
def test_baseline_monotone(l1, l2, k):
    lo, hi = sorted((l1, l2))
    assert baseline_fraction_at_most(k + 1, PoissonBaseline(lo)) >= baseline_fraction_at_most(k, PoissonBaseline(lo))
    # smaller rate (larger 1/lambda) never lowers the CDF
    assert baseline_fraction_at_most(k, PoissonBaseline(lo)) >= baseline_fraction_at_most(k, PoissonBaseline(hi)) - 1e-15


# --- fit ----------------------------------------------------------------------

def test_degenerate_no_repeats():
    f = fit_truncated_poisson(hist({1: 500}))
    assert f.degenerate and math.isinf(f.m_hat)
    assert f.m_lower == 500**2 / 2


def test_root_substitution():
    f = fit_truncated_poisson(hist({1: 80, 2: 10}))
    lam = f.lambda_hat
    assert abs(lam / (1 - math.exp(-lam)) - 100 / 90) < 1e-9
    assert f.m_hat == pytest.approx(100 / lam)
    assert f.repeat_years_365 == pytest.approx(f.m_hat / 365)
    assert f.repeat_years_season == pytest.approx(f.m_hat / 190)


def test_large_mean_expands_bracket():
    f = fit_truncated_poisson(hist({400: 2}))
    assert f.lambda_hat == pytest.approx(400, rel=1e-9)


@given(st.dictionaries(st.integers(1, 12), st.integers(1, 40), min_size=1))
def test_scale_consistency(counts):
    h = hist(counts)
    if h.n == h.distinct:
        return
    doubled = hist({m: 2 * c for m, c in counts.items()})
    a, b = fit_truncated_poisson(h), fit_truncated_poisson(doubled)
    assert b.lambda_hat == pytest.approx(a.lambda_hat, rel=1e-9)
    assert b.m_hat == pytest.approx(2 * a.m_hat, rel=1e-9)


@pytest.mark.parametrize("M", [10_000, 70_000, 1_000_000])
def test_calibration_uniform_draws(M):
    est = []
    for seed in range(20):
        codes = np.random.default_rng(seed).integers(0, M, 100_000)
        est.append(fit_truncated_poisson(build_histogram(codes)).m_hat)
    assert abs(np.median(est) / M - 1) < 0.10


def test_truncated_mean_limits():
    assert truncated_mean(1e-9) == pytest.approx(1.0)
    assert truncated_mean(50.0) == pytest.approx(50.0)


# --- report -------------------------------------------------------------------

def test_report_order_invariant():
    rng = np.random.default_rng(1)
    codes = rng.integers(0, 300, 2000)
    a, b = space_report(codes), space_report(rng.permutation(codes))
    assert a.to_dict() == b.to_dict()
    assert a.curve() == b.curve()


def test_report_outputs(tmp_path):
    rep = space_report([1, 1, 2, 3, 3, 3], horizon=4)
    d = rep.to_dict()
    assert d["max_multiplicity"] == 3 and d["distinct"] == 3 and d["horizon"] == 4
    rep.write_json(tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text()) == json.loads(json.dumps(d))
    rep.write_curve_csv(tmp_path / "c.csv", k_max=5)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].startswith("k,empirical_fraction_at_most_k,baseline_fraction_at_most_k")
    assert len(lines) == 6
    rows = rep.curve(5)
    assert [r["empirical_fraction_at_most_k"] for r in rows] == [1 / 3, 2 / 3, 1, 1, 1]


def test_degenerate_report_serialises():
    d = space_report([1, 2, 3]).to_dict()
    assert d["degenerate"] and d["m_hat"] is None and d["m_hat_lower_bound"] == 4.5
    json.dumps(d, allow_nan=False)


def test_pipeline_space_is_localised(pipeline_100k):
    _, sol = pipeline_100k
    rep = space_report(sol.code[sol.feasible])
    assert rep.fit.m_hat < 2**24
    assert rep.max_multiplicity >= 2
    row1 = rep.curve(1)[0]
    assert row1["empirical_fraction_at_most_k"] < row1["baseline_fraction_at_most_k"]
