"""
Synthetic proportional-hazards cohorts with known truth.

Event times are drawn by inverting S(t | x) = exp(-lambda0 t^shape exp(b.x)):

    t = (-log(U) / (lambda0 exp(b.x))) ** (1 / shape)

``shape = 1`` is the constant baseline hazard.  Censoring times are
Uniform(0, c_max) with ``c_max`` chosen by bisection so that the expected
censored fraction, computed analytically given the drawn covariates,
equals the target.

Every subject has its own Philox stream keyed by ``(seed, subject index)``,
so a cohort can be generated in any order or in parallel and still be
identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma, gammainc

from .dataset import Cohort, CovariateVector, SurvivalRecord

__all__ = ["CovariateSpec", "SimulationSpec", "SpecError", "simulate_cohort", "censoring_fraction"]


class SpecError(ValueError):
    """A simulation spec that cannot be realised."""


@dataclass(frozen=True)
class CovariateSpec:
    """``kind`` is ``"normal"`` (standard normal) or ``"bernoulli"`` with ``q``."""

    name: str
    kind: str = "normal"
    q: float = 0.5

    def __post_init__(self):
        if self.kind not in ("normal", "bernoulli"):
            raise SpecError(f"unknown covariate distribution {self.kind!r}")
        if self.kind == "bernoulli" and not 0 < self.q < 1:
            raise SpecError(f"bernoulli q must lie in (0, 1), got {self.q}")


@dataclass(frozen=True)
class SimulationSpec:
    n_subjects: int
    true_beta: tuple[float, ...] = ()
    covariates: tuple[CovariateSpec, ...] = ()
    lambda0: float = 1.0
    shape: float = 1.0
    censoring_rate_target: float = 0.0
    seed: int = 0
    time_unit: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "true_beta", tuple(float(b) for b in self.true_beta))
        covs = tuple(
            c if isinstance(c, CovariateSpec) else CovariateSpec(**c) if isinstance(c, dict)
            else CovariateSpec(str(c))
            for c in self.covariates
        )
        if not covs and self.true_beta:
            covs = tuple(CovariateSpec(f"x{k + 1}") for k in range(len(self.true_beta)))
        object.__setattr__(self, "covariates", covs)
        if int(self.n_subjects) != self.n_subjects or self.n_subjects < 1:
            raise SpecError(f"n_subjects must be a positive integer, got {self.n_subjects}")
        if len(self.true_beta) != len(covs):
            raise SpecError(
                f"{len(self.true_beta)} coefficients for {len(covs)} covariates"
            )
        if not (self.lambda0 > 0 and math.isfinite(self.lambda0)):
            raise SpecError(f"lambda0 must be positive, got {self.lambda0}")
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise SpecError(f"shape must be positive, got {self.shape}")
        if not 0 <= self.censoring_rate_target < 1:
            raise SpecError(
                f"censoring target must lie in [0, 1), got {self.censoring_rate_target}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise SpecError("seed must be a 64-bit unsigned integer")

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.covariates)

    @classmethod
    def from_dict(cls, d) -> "SimulationSpec":
        d = dict(d)
        d["covariates"] = tuple(d.get("covariates", ()))
        d["true_beta"] = tuple(d.get("true_beta", ()))
        try:
            return cls(**d)
        except TypeError as exc:
            raise SpecError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "SimulationSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _subject_draws(seed, i, covariates):
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, i], dtype=np.uint64)))
    x = np.empty(len(covariates))
    for k, c in enumerate(covariates):
        if c.kind == "normal":
            x[k] = rng.standard_normal()
        else:
            x[k] = float(rng.random() < c.q)
    u_event, u_censor = rng.random(2)
    return x, u_event, u_censor


def _mean_survival_integral(rates, shape, c):
    """mean_i (1/c) int_0^c exp(-rate_i u^shape) du."""
    if shape == 1.0:
        rc = rates * c
        return float(np.mean(-np.expm1(-rc) / rc))
    a = 1.0 / shape
    integral = gamma(a) * gammainc(a, rates * c**shape) / (shape * rates**a)
    return float(np.mean(integral / c))


def censoring_fraction(rates, shape, c_max) -> float:
    """Expected share of subjects censored by Uniform(0, c_max) censoring.

    P(C < T_i) = (1/c_max) int_0^c_max S_i(u) du, averaged over subjects.
    """
    if math.isinf(c_max):
        return 0.0
    return _mean_survival_integral(np.asarray(rates, dtype=float), shape, c_max)


def _calibrate_c_max(rates, shape, target):
    if target == 0:
        return math.inf
    # S_i(u) = exp(-rate_i u^shape): fraction -> 1 as c -> 0 and -> 0 as c -> inf
    scale = float(np.median(rates ** (-1.0 / shape)))
    lo, hi = scale * 1e-12, scale
    while censoring_fraction(rates, shape, hi) > target:
        hi *= 2
        if hi > scale * 1e15:
            raise SpecError(f"censoring target {target} unreachable")
    if censoring_fraction(rates, shape, lo) < target:
        raise SpecError(f"censoring target {target} unreachable")
    return brentq(
        lambda c: censoring_fraction(rates, shape, c) - target, lo, hi, xtol=1e-14 * hi, rtol=1e-12
    )


def simulate_cohort(spec: SimulationSpec) -> Cohort:
    """Draw a right-censored cohort under ``spec``; deterministic in ``spec.seed``."""
    n, p = int(spec.n_subjects), len(spec.covariates)
    X = np.empty((n, p))
    u_event = np.empty(n)
    u_censor = np.empty(n)
    for i in range(n):
        X[i], u_event[i], u_censor[i] = _subject_draws(spec.seed, i, spec.covariates)

    beta = np.asarray(spec.true_beta, dtype=float)
    rates = spec.lambda0 * np.exp(X @ beta) if p else np.full(n, spec.lambda0)
    # 1 - U keeps the argument of log in (0, 1]
    event_time = (-np.log1p(-u_event) / rates) ** (1.0 / spec.shape)

    c_max = _calibrate_c_max(rates, spec.shape, spec.censoring_rate_target)
    censor_time = u_censor * c_max if math.isfinite(c_max) else np.full(n, math.inf)
    observed = event_time <= censor_time
    time = np.where(observed, event_time, censor_time)

    names = spec.covariate_names
    records = tuple(
        SurvivalRecord(f"s{i + 1}", float(time[i]), bool(observed[i]), CovariateVector(names, X[i]))
        for i in range(n)
    )
    return Cohort(records, names, spec.time_unit)
