"""
Cox proportional hazards with Breslow ties.

Estimation runs in two stages.  The coefficients maximise the log partial
likelihood

    l(b) = sum_i [ sum_{j in D_i} b.x_j  -  d_i log sum_{j in R_i} exp(b.x_j) ]

over distinct event times t_i, where D_i are the d_i subjects failing at
t_i and R_i are the subjects with follow-up time >= t_i.  Censored subjects
enter the risk sets only.  The baseline cumulative hazard is then the
Breslow step function with jumps d_i / sum_{R_i} exp(b.x_j).

Risk sets are never materialised: subjects are sorted by time and the risk
set of t_i is the suffix of that order starting at ``start[i]``, so all
risk-set sums are reverse cumulative sums.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .dataset import Cohort, CovariateVector, validate_cohort
from .errors import ConvergenceError, DataError, DegenerateDataError, SchemaError
from .glm import _profile_values
from .optim import FitConfig, newton_maximize

__all__ = [
    "RiskSetIndex",
    "BaselineHazardTable",
    "BaselineSurvival",
    "FittedCoxModel",
    "build_risk_sets",
    "log_partial_likelihood",
    "fit_cox",
    "breslow_baseline",
    "baseline_survival",
    "save_cox",
    "load_cox",
]


# ---------------------------------------------------------------------------
# Risk sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RiskSetIndex:
    """Distinct event times and suffix-encoded risk sets.

    ``order`` sorts subjects by follow-up time; ``start[i]`` is the first
    position in ``order`` whose time is >= ``times[i]``.
    """

    times: np.ndarray
    events_at: np.ndarray
    order: np.ndarray
    start: np.ndarray
    event_subjects: tuple
    n_subjects: int

    def at_risk(self, i: int) -> np.ndarray:
        """Subject indices at risk just before the i-th distinct event time."""
        return np.sort(self.order[self.start[i]:])

    @property
    def sizes(self) -> np.ndarray:
        return self.n_subjects - self.start

    def __len__(self):
        return len(self.times)


def _risk_sets(times, events) -> RiskSetIndex:
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if not events.any():
        raise DegenerateDataError("no observed events")
    order = np.argsort(times, kind="stable")
    sorted_times = times[order]
    uniq, counts = np.unique(times[events], return_counts=True)
    start = np.searchsorted(sorted_times, uniq, side="left")
    event_idx = np.flatnonzero(events)
    members = tuple(event_idx[times[event_idx] == u] for u in uniq)
    for arr in (uniq, counts, order, start):
        arr.setflags(write=False)
    return RiskSetIndex(uniq, counts, order, start, members, len(times))


def build_risk_sets(cohort: Cohort) -> RiskSetIndex:
    if not cohort.is_survival:
        raise TypeError("risk sets need a survival cohort")
    return _risk_sets(cohort.times, cohort.events)


# ---------------------------------------------------------------------------
# Partial likelihood
# ---------------------------------------------------------------------------


def _log_denominators(eta, index):
    """log sum_{j in R_i} exp(eta_j) for each distinct event time."""
    eta_sorted = eta[index.order]
    suffix_lse = np.logaddexp.accumulate(eta_sorted[::-1])[::-1]
    return suffix_lse[index.start]


def _partial_loglik(beta, X, index, events, derivatives=True):
    eta = X @ beta
    log_den = _log_denominators(eta, index)
    ll = float(np.sum(eta[events]) - np.dot(index.events_at, log_den))
    if not derivatives:
        return ll

    # moments of the risk-set weighted covariate distribution
    Xs = X[index.order]
    w = np.exp(eta[index.order] - eta.max())
    s0 = np.cumsum(w[::-1])[::-1][index.start]
    s1 = np.cumsum((w[:, None] * Xs)[::-1], axis=0)[::-1][index.start]
    s2 = np.cumsum((w[:, None, None] * Xs[:, :, None] * Xs[:, None, :])[::-1], axis=0)[::-1][
        index.start
    ]
    xbar = s1 / s0[:, None]
    d = index.events_at.astype(float)
    grad = X[events].sum(axis=0) - d @ xbar
    cov = s2 / s0[:, None, None] - xbar[:, :, None] * xbar[:, None, :]
    hess = -np.tensordot(d, cov, axes=1)
    return ll, grad, hess


def log_partial_likelihood(beta, index: RiskSetIndex, cohort: Cohort, derivatives=False):
    """Breslow log partial likelihood at ``beta``.

    Denominators use a suffix log-sum-exp, so large linear predictors do
    not overflow.  With ``derivatives=True`` returns ``(ll, grad, hess)``.
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta must be finite")
    return _partial_loglik(beta, cohort.X, index, cohort.events, derivatives)


# ---------------------------------------------------------------------------
# Baseline hazard
# ---------------------------------------------------------------------------


class BaselineSurvival(NamedTuple):
    probability: float
    extrapolated: bool


@dataclass(frozen=True)
class BaselineHazardTable:
    """Right-continuous step function H0(t) over distinct event times."""

    times: np.ndarray
    increments: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        for name in ("times", "increments", "cumulative"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        t, inc, cum = self.times, self.increments, self.cumulative
        if not (t.ndim == 1 and t.shape == inc.shape == cum.shape and len(t) > 0):
            raise DataError("baseline table needs equal-length, non-empty columns")
        if np.any(np.diff(t) <= 0):
            raise DataError("baseline times must be strictly increasing")
        if np.any(inc <= 0):
            raise DataError("baseline increments must be positive")
        if not np.allclose(np.cumsum(inc), cum, rtol=1e-12, atol=1e-12):
            raise DataError("cumulative column is not the prefix sum of increments")

    @classmethod
    def from_cumulative(cls, times, cumulative) -> "BaselineHazardTable":
        cumulative = np.asarray(cumulative, dtype=float)
        return cls(times, np.diff(cumulative, prepend=0.0), cumulative)

    def cumulative_at(self, t):
        """H0(t); 0 before the first event time, last value after the last."""
        t = np.asarray(t, dtype=float)
        pos = np.searchsorted(self.times, t, side="right")
        padded = np.concatenate([[0.0], self.cumulative])
        out = padded[pos]
        return float(out) if out.ndim == 0 else out

    def is_extrapolated(self, t) -> bool:
        return bool(np.any(np.asarray(t) > self.times[-1]))

    def rows(self):
        return [
            {"time": float(a), "increment": float(b), "cumulative": float(c)}
            for a, b, c in zip(self.times, self.increments, self.cumulative)
        ]

    def __len__(self):
        return len(self.times)


def breslow_baseline(beta, index: RiskSetIndex, cohort: Cohort) -> BaselineHazardTable:
    beta = np.asarray(beta, dtype=float).reshape(-1)
    eta = cohort.X @ beta
    return _breslow(eta, index)


def _breslow(eta, index):
    inc = index.events_at * np.exp(-_log_denominators(eta, index))
    return BaselineHazardTable(index.times, inc, np.cumsum(inc))


def baseline_survival(table: BaselineHazardTable, t) -> BaselineSurvival:
    """S0(t) = exp(-H0(t)).  Beyond the last event time the last value is
    returned with ``extrapolated=True``."""
    t = float(t)
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    return BaselineSurvival(float(np.exp(-table.cumulative_at(t))), table.is_extrapolated(t))


# ---------------------------------------------------------------------------
# Fitted model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FittedCoxModel:
    covariate_names: tuple[str, ...]
    coefficients: dict[str, float]
    baseline: BaselineHazardTable
    converged: bool = True
    log_partial_likelihood: float = float("nan")
    iterations: int = 0
    covariate_means: dict[str, float] = field(default_factory=dict)
    standard_errors: dict[str, float] = field(default_factory=dict)
    time_unit: str | None = None
    loglik_trace: tuple[float, ...] = field(default=(), compare=False)

    ties = "breslow"

    @classmethod
    def from_table(cls, coefficients: dict, times, cumulative, time_unit=None):
        """Model from known coefficients and a tabulated H0(t)."""
        return cls(
            tuple(coefficients),
            {k: float(v) for k, v in coefficients.items()},
            BaselineHazardTable.from_cumulative(times, cumulative),
            time_unit=time_unit,
        )

    @property
    def beta(self) -> np.ndarray:
        return np.array([self.coefficients[n] for n in self.covariate_names])

    def linear_predictor(self, x) -> float:
        return float(np.dot(self.beta, _profile_values(x, self.covariate_names)))

    def cumulative_hazard(self, t, x):
        """H(t | x) = H0(t) exp(b.x)."""
        return self.baseline.cumulative_at(t) * math.exp(self.linear_predictor(x))

    def survival(self, t, x):
        return np.exp(-self.cumulative_hazard(t, x))

    def to_dict(self) -> dict:
        return {
            "covariate_names": list(self.covariate_names),
            "coefficients": {n: self.coefficients[n] for n in self.covariate_names},
            "baseline": self.baseline.rows(),
            "converged": self.converged,
            "log_partial_likelihood": self.log_partial_likelihood,
            "iterations": self.iterations,
            "covariate_means": self.covariate_means,
            "standard_errors": self.standard_errors,
            "time_unit": self.time_unit,
            "ties": self.ties,
        }

    @classmethod
    def from_dict(cls, d) -> "FittedCoxModel":
        if d.get("ties", "breslow") != "breslow":
            raise SchemaError(f"unsupported ties {d['ties']!r}")
        names = tuple(d["covariate_names"])
        rows = d["baseline"]
        table = BaselineHazardTable(
            [r["time"] for r in rows],
            [r["increment"] for r in rows],
            [r["cumulative"] for r in rows],
        )
        return cls(
            names,
            {n: float(d["coefficients"][n]) for n in names},
            table,
            bool(d.get("converged", True)),
            float(d.get("log_partial_likelihood", float("nan"))),
            int(d.get("iterations", 0)),
            dict(d.get("covariate_means", {})),
            dict(d.get("standard_errors", {})),
            d.get("time_unit"),
        )


def save_cox(model: FittedCoxModel, path):
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def load_cox(path) -> FittedCoxModel:
    return FittedCoxModel.from_dict(json.loads(Path(path).read_text()))


def _check_fittable(cohort):
    if not cohort.is_survival:
        raise TypeError("fit_cox needs a survival cohort")
    findings = validate_cohort(cohort)
    if "no observed events" in findings:
        raise DegenerateDataError("no observed events")
    if findings:
        raise DataError("; ".join(findings))


def _standard_errors(hess, names):
    try:
        var = np.diag(np.linalg.inv(-hess))
    except np.linalg.LinAlgError:
        var = np.full(len(names), np.nan)
    se = np.where(var > 0, np.sqrt(np.abs(var)), np.nan)
    return {n: float(s) for n, s in zip(names, se)}


def _assemble(cohort, index, result, converged):
    names = cohort.covariate_names
    beta = result.params
    return FittedCoxModel(
        covariate_names=names,
        coefficients={n: float(b) for n, b in zip(names, beta)},
        baseline=_breslow(cohort.X @ beta, index),
        converged=converged,
        log_partial_likelihood=float(result.loglik),
        iterations=int(result.iterations),
        covariate_means={n: float(m) for n, m in zip(names, cohort.X.mean(axis=0))},
        standard_errors=_standard_errors(result.hessian, names),
        time_unit=cohort.time_unit,
        loglik_trace=tuple(result.trace),
    )


def fit_cox(cohort: Cohort, config: FitConfig = FitConfig()) -> FittedCoxModel:
    """Fit coefficients by damped Newton, then the Breslow baseline.

    Raises :class:`DegenerateDataError` without events, :class:`DataError`
    for constant or non-finite covariates and :class:`ConvergenceError`
    when the partial likelihood has no finite maximiser (a covariate that
    perfectly orders the events).  In the last case the exception carries
    the unconverged model as ``.model``.
    """
    _check_fittable(cohort)
    index = build_risk_sets(cohort)
    X, events = cohort.X, cohort.events
    try:
        result = newton_maximize(
            lambda b: _partial_loglik(b, X, index, events),
            np.zeros(X.shape[1]),
            config,
            loglik_only=lambda b: _partial_loglik(b, X, index, events, derivatives=False),
        )
    except ConvergenceError as exc:
        if exc.result is not None and np.all(np.isfinite(exc.result.params)):
            exc.model = _assemble(cohort, index, exc.result, converged=False)
        raise
    return _assemble(cohort, index, result, converged=True)
