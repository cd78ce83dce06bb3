import math

import numpy as np
import pytest

from conftest import TABLE_H0, TABLE_TIMES, random_cohort
from survkit.coxph import (
    BaselineHazardTable,
    FittedCoxModel,
    baseline_survival,
    breslow_baseline,
    build_risk_sets,
    fit_cox,
    load_cox,
    log_partial_likelihood,
    save_cox,
)
from survkit.dataset import cohort_from_arrays
from survkit.errors import ConvergenceError, DataError, DegenerateDataError
from survkit.simulate import SimulationSpec, simulate_cohort


def naive_partial_loglik(beta, times, events, X):
    """Breslow log partial likelihood by explicit enumeration of risk sets."""
    beta = np.atleast_1d(beta)
    X = np.atleast_2d(np.asarray(X, dtype=float).T).T
    total = 0.0
    for i in range(len(times)):
        if not events[i]:
            continue
        risk = [j for j in range(len(times)) if times[j] >= times[i]]
        den = sum(math.exp(float(X[j] @ beta)) for j in risk)
        total += float(X[i] @ beta) - math.log(den)
    return total


FOUR = dict(times=[1.0, 2.0, 3.0, 4.0], events=[1, 1, 0, 1], X=[1.2, -0.4, 0.7, 0.3])


# ---------------------------------------------------------------------------
# risk sets
# ---------------------------------------------------------------------------


def test_risk_sets_full_ordering():
    idx = build_risk_sets(cohort_from_arrays([2, 5, 7], [1, 1, 1], [0.1, 0.2, 0.3]))
    np.testing.assert_array_equal(idx.sizes, [3, 2, 1])


def test_risk_sets_with_censoring():
    idx = build_risk_sets(cohort_from_arrays([2, 5, 7], [1, 0, 1], [0.1, 0.2, 0.3]))
    np.testing.assert_array_equal(idx.times, [2, 7])
    np.testing.assert_array_equal(idx.at_risk(1), [2])
    np.testing.assert_array_equal(idx.at_risk(0), [0, 1, 2])


def test_tied_events_grouped():
    idx = build_risk_sets(cohort_from_arrays([4, 4, 6], [1, 1, 1], [0.1, 0.2, 0.3]))
    np.testing.assert_array_equal(idx.times, [4, 6])
    np.testing.assert_array_equal(idx.events_at, [2, 1])


def test_risk_sets_no_events():
    with pytest.raises(DegenerateDataError):
        build_risk_sets(cohort_from_arrays([1, 2], [0, 0], [0.0, 1.0]))


def test_risk_set_invariants(rng):
    for _ in range(10):
        c = random_cohort(rng, n=25, ties=True)
        idx = build_risk_sets(c)
        assert np.all(idx.events_at >= 1)
        assert np.all(np.diff(idx.times) > 0)
        for i in range(len(idx)):
            members = set(idx.at_risk(i))
            assert members == {j for j in range(len(c)) if c.times[j] >= idx.times[i]}
            assert set(idx.event_subjects[i]) <= members
            if i + 1 < len(idx):
                assert set(idx.at_risk(i + 1)) <= members


# ---------------------------------------------------------------------------
# partial likelihood
# ---------------------------------------------------------------------------


def test_null_three_subjects():
    c = cohort_from_arrays([1, 2, 3], [1, 1, 1], [0.5, -1.0, 2.0])
    ll = log_partial_likelihood([0.0], build_risk_sets(c), c)
    assert ll == pytest.approx(-(math.log(3) + math.log(2)), abs=1e-15)
    assert ll == pytest.approx(-1.791759, abs=1e-6)


def test_two_subjects():
    c = cohort_from_arrays([1, 2], [1, 1], [1.0, 0.0])
    ll = log_partial_likelihood([0.5], build_risk_sets(c), c)
    assert ll == pytest.approx(math.log(math.exp(0.5) / (math.exp(0.5) + 1)), abs=1e-15)
    assert ll == pytest.approx(-0.474077, abs=1e-6)


def test_null_closed_form(rng):
    for _ in range(10):
        c = random_cohort(rng, ties=True)
        idx = build_risk_sets(c)
        expected = -sum(d * math.log(len(idx.at_risk(i))) for i, d in enumerate(idx.events_at))
        assert log_partial_likelihood(np.zeros(2), idx, c) == pytest.approx(expected, abs=1e-12)


def test_matches_naive_enumeration(rng):
    for _ in range(10):
        c = random_cohort(rng, ties=True)
        idx = build_risk_sets(c)
        beta = rng.normal(size=2)
        assert log_partial_likelihood(beta, idx, c) == pytest.approx(
            naive_partial_loglik(beta, c.times, c.events, c.X), abs=1e-10
        )


def test_large_linear_predictor_stays_finite():
    c = cohort_from_arrays([1, 2, 3], [1, 1, 1], [800.0, 0.0, -800.0])
    ll = log_partial_likelihood([1.0], build_risk_sets(c), c)
    assert math.isfinite(ll)
    assert ll == pytest.approx(0.0 + (0.0 - math.log(1 + math.exp(-800.0))) + 0.0, abs=1e-12)


def test_gradient_matches_finite_differences(rng):
    h = 1e-6
    for _ in range(20):
        c = random_cohort(rng, n=40, p=3, ties=True)
        idx = build_risk_sets(c)
        beta = rng.normal(scale=0.8, size=3)
        _, g, H = log_partial_likelihood(beta, idx, c, derivatives=True)
        fd = np.array([
            (log_partial_likelihood(beta + h * e, idx, c) - log_partial_likelihood(beta - h * e, idx, c)) / (2 * h)
            for e in np.eye(3)
        ])
        assert np.linalg.norm(g - fd) / np.linalg.norm(g) < 1e-5
        assert np.max(np.linalg.eigvalsh(H)) <= 1e-8


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def test_four_subject_grid_oracle():
    grid = np.round(np.arange(-3000, 3001) * 1e-3, 3)
    values = [naive_partial_loglik(b, FOUR["times"], FOUR["events"], FOUR["X"]) for b in grid]
    best = grid[int(np.argmax(values))]
    m = fit_cox(cohort_from_arrays(**FOUR))
    assert m.converged
    assert abs(m.coefficients["x1"] - best) < 2e-3


def test_null_effect_recovery():
    spec = SimulationSpec(2000, (0.0,), lambda0=0.5, censoring_rate_target=0.2, seed=99)
    m = fit_cox(simulate_cohort(spec))
    assert abs(m.coefficients["x1"]) < 0.1


def test_parameter_recovery():
    spec = SimulationSpec(5000, (0.5, -0.3), lambda0=0.1, censoring_rate_target=0.2, seed=2024)
    m = fit_cox(simulate_cohort(spec))
    assert abs(m.coefficients["x1"] - 0.5) < 0.1
    assert abs(m.coefficients["x2"] + 0.3) < 0.1
    assert all(0 < s < 0.1 for s in m.standard_errors.values())
    assert np.all(np.diff(m.loglik_trace) >= 0)


def test_monotone_likelihood_does_not_converge():
    # larger x always fails first: partial likelihood increases without bound in beta
    c = cohort_from_arrays([1, 2, 3, 4, 5], [1, 1, 1, 1, 1], [5.0, 4.0, 3.0, 2.0, 1.0])
    with pytest.raises(ConvergenceError) as err:
        fit_cox(c)
    assert abs(err.value.params[0]) > 5


def test_fit_rejects_bad_cohorts():
    with pytest.raises(DegenerateDataError):
        fit_cox(cohort_from_arrays([1, 2], [0, 0], [1.0, 2.0]))
    with pytest.raises(DataError, match="constant"):
        fit_cox(cohort_from_arrays([1, 2, 3], [1, 0, 1], [[1.0, 0.3], [1.0, 0.1], [1.0, 0.2]]))


# ---------------------------------------------------------------------------
# baseline
# ---------------------------------------------------------------------------


def test_breslow_null_three_subjects():
    c = cohort_from_arrays([1, 2, 3], [1, 1, 1], [0.5, -1.0, 2.0])
    table = breslow_baseline([0.0], build_risk_sets(c), c)
    np.testing.assert_allclose(table.increments, [1 / 3, 1 / 2, 1.0], rtol=1e-15)
    np.testing.assert_allclose(table.cumulative, [1 / 3, 5 / 6, 11 / 6], rtol=1e-15)


def test_breslow_single_subject():
    c = cohort_from_arrays([2.0], [1], [0.7])
    table = breslow_baseline([1.3], build_risk_sets(c), c)
    assert table.increments[0] == pytest.approx(1 / math.exp(1.3 * 0.7), rel=1e-15)


def test_breslow_zero_covariates_ignore_beta():
    c = cohort_from_arrays([1, 2, 2, 5], [1, 1, 1, 0], np.zeros((4, 1)))
    idx = build_risk_sets(c)
    a = breslow_baseline([0.0], idx, c)
    b = breslow_baseline([3.7], idx, c)
    np.testing.assert_array_equal(a.cumulative, b.cumulative)


def test_breslow_tied_increment():
    c = cohort_from_arrays([4, 4, 6], [1, 1, 1], [0.0, 0.0, 0.0])
    table = breslow_baseline([0.0], build_risk_sets(c), c)
    np.testing.assert_allclose(table.increments, [2 / 3, 1.0])


def test_baseline_survival_worked_table():
    table = BaselineHazardTable.from_cumulative(TABLE_TIMES, TABLE_H0)
    assert baseline_survival(table, 0.0) == (1.0, False)
    assert baseline_survival(table, 6).probability == pytest.approx(math.exp(-1.10), abs=1e-15)
    assert baseline_survival(table, 6).probability == pytest.approx(0.3329, abs=1e-4)
    assert baseline_survival(table, 2).probability == pytest.approx(0.7788, abs=1e-4)
    # between rows the last value holds
    assert baseline_survival(table, 2.9).probability == baseline_survival(table, 2).probability
    assert baseline_survival(table, 0.5).probability == 1.0
    beyond = baseline_survival(table, 12)
    assert beyond.extrapolated and beyond.probability == pytest.approx(math.exp(-1.10))


def test_table_validation():
    with pytest.raises(DataError):
        BaselineHazardTable.from_cumulative([1, 2], [0.5, 0.5])
    with pytest.raises(DataError):
        BaselineHazardTable.from_cumulative([2, 1], [0.1, 0.5])
    with pytest.raises(DataError):
        BaselineHazardTable([1, 2], [0.1, 0.2], [0.1, 0.5])


def test_cox_json_round_trip(tmp_path, rng):
    m = fit_cox(random_cohort(rng, n=60))
    save_cox(m, tmp_path / "cox.json")
    back = load_cox(tmp_path / "cox.json")
    assert back.coefficients == m.coefficients
    np.testing.assert_array_equal(back.baseline.cumulative, m.baseline.cumulative)
    np.testing.assert_array_equal(back.baseline.times, m.baseline.times)
    assert back.to_dict()["ties"] == "breslow"
