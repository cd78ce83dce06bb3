"""
Exponential-family forms and GLM fitting.

Two models are fitted by maximum likelihood:

``logistic``
    P(Y=1 | x) = 1 / (1 + exp(-(b0 + b.x))), for an event inside a fixed
    interval.

``poisson_survival``
    event rate exp(b0 + b.x), so S(t | x) = exp(-t exp(b0 + b.x)).  With
    right-censoring the log-likelihood is

        sum_i d_i (b0 + b.x_i) - t_i exp(b0 + b.x_i),

    i.e. Poisson regression of the event flag with offset log(t_i).
    The intercept b0 plays the role of log(lambda0) of a constant
    baseline hazard.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .dataset import Cohort, CovariateVector, validate_cohort
from .errors import ConvergenceError, DegenerateDataError, DomainError, SchemaError
from .optim import FitConfig, newton_maximize

__all__ = [
    "ExpFamilyForm",
    "exp_family_form",
    "FittedGlmModel",
    "logistic_loglik",
    "poisson_survival_loglik",
    "fit_logistic",
    "fit_poisson_survival",
    "predict_logistic",
    "predict_poisson_survival",
    "odds_ratio",
    "save_glm",
    "load_glm",
]

LOGISTIC = "logistic"
POISSON_SURVIVAL = "poisson_survival"


# ---------------------------------------------------------------------------
# Exponential family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpFamilyForm:
    """f(y) = b(y) exp(eta T(y) - a(eta)), stored with log b(y)."""

    family: str
    eta: float
    log_partition: float
    log_base_measure: float
    sufficient_stat: float

    def log_density(self):
        return self.log_base_measure + self.eta * self.sufficient_stat - self.log_partition

    def density(self):
        return math.exp(self.log_density())


def exp_family_form(family, param, y) -> ExpFamilyForm:
    """Rewrite a Bernoulli(p), Exponential(lam) or Poisson(lam) density at ``y``.

    >>> exp_family_form("bernoulli", 0.5, 1).log_partition == math.log(2)
    True
    """
    param = float(param)
    if family == "bernoulli":
        if not 0 < param < 1:
            raise DomainError(f"bernoulli p must lie in (0, 1), got {param}")
        if y not in (0, 1):
            raise DomainError(f"bernoulli support is {{0, 1}}, got {y}")
        eta = math.log(param / (1 - param))
        return ExpFamilyForm(family, eta, math.log1p(math.exp(eta)), 0.0, float(y))
    if family == "exponential":
        if not param > 0:
            raise DomainError(f"exponential rate must be positive, got {param}")
        if y < 0:
            raise DomainError(f"exponential support is y >= 0, got {y}")
        eta = -param
        # lam e^{-lam y} = exp(eta y + log(-eta)), hence a(eta) = -log(-eta)
        return ExpFamilyForm(family, eta, -math.log(-eta), 0.0, float(y))
    if family == "poisson":
        if not param > 0:
            raise DomainError(f"poisson rate must be positive, got {param}")
        if y < 0 or int(y) != y:
            raise DomainError(f"poisson support is 0, 1, 2, ..., got {y}")
        eta = math.log(param)
        return ExpFamilyForm(family, eta, math.exp(eta), -math.lgamma(y + 1), float(y))
    raise DomainError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# Log-likelihoods with analytic derivatives
# ---------------------------------------------------------------------------


def _design(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return np.column_stack([np.ones(len(X)), X])


def logistic_loglik(params, Z, y, derivatives=True):
    """Bernoulli log-likelihood in ``params = (b0, b1..bp)``.

    ``Z`` is the design matrix with a leading column of ones.
    """
    eta = Z @ params
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    if not derivatives:
        return ll
    mu = expit(eta)
    grad = Z.T @ (y - mu)
    hess = -(Z.T * (mu * (1 - mu))) @ Z
    return ll, grad, hess


def poisson_survival_loglik(params, Z, times, events, derivatives=True):
    """Exponential-time log-likelihood with right-censoring."""
    eta = Z @ params
    rate_t = times * np.exp(eta)
    ll = float(np.sum(events * eta - rate_t))
    if not derivatives:
        return ll
    grad = Z.T @ (events - rate_t)
    hess = -(Z.T * rate_t) @ Z
    return ll, grad, hess


# ---------------------------------------------------------------------------
# Fitted model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FittedGlmModel:
    family: str
    covariate_names: tuple[str, ...]
    intercept: float
    coefficients: dict[str, float]
    converged: bool
    log_likelihood: float
    iterations: int
    time_unit: str | None = None
    loglik_trace: tuple[float, ...] = field(default=(), compare=False)

    @property
    def beta(self) -> np.ndarray:
        return np.array([self.coefficients[n] for n in self.covariate_names])

    def linear_predictor(self, x) -> float:
        """b0 + b.x for a CovariateVector or mapping of covariate values."""
        values = _profile_values(x, self.covariate_names)
        return self.intercept + float(np.dot(self.beta, values))

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "covariate_names": list(self.covariate_names),
            "intercept": self.intercept,
            "coefficients": {n: self.coefficients[n] for n in self.covariate_names},
            "converged": self.converged,
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "time_unit": self.time_unit,
        }

    @classmethod
    def from_dict(cls, d) -> "FittedGlmModel":
        if d.get("family") not in (LOGISTIC, POISSON_SURVIVAL):
            raise SchemaError(f"unknown GLM family {d.get('family')!r}")
        names = tuple(d["covariate_names"])
        coefs = {n: float(d["coefficients"][n]) for n in names}
        return cls(
            d["family"], names, float(d["intercept"]), coefs,
            bool(d["converged"]), float(d["log_likelihood"]), int(d["iterations"]),
            d.get("time_unit"),
        )


def _profile_values(x, names):
    if isinstance(x, CovariateVector):
        return x.aligned(names)
    if isinstance(x, dict):
        return CovariateVector.from_mapping(x).aligned(names)
    values = np.asarray(x, dtype=float)
    if values.shape != (len(names),):
        raise SchemaError(f"expected {len(names)} covariate values, got shape {values.shape}")
    return values


def save_glm(model: FittedGlmModel, path):
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def load_glm(path) -> FittedGlmModel:
    return FittedGlmModel.from_dict(json.loads(Path(path).read_text()))


def _build_model(family, cohort, result, time_unit=None, converged=True):
    names = cohort.covariate_names
    params = result.params
    return FittedGlmModel(
        family=family,
        covariate_names=names,
        intercept=float(params[0]),
        coefficients={n: float(b) for n, b in zip(names, params[1:])},
        converged=converged,
        log_likelihood=float(result.loglik),
        iterations=int(result.iterations),
        time_unit=time_unit,
        loglik_trace=tuple(result.trace),
    )


def _fit(family, cohort, objective, config):
    try:
        result = newton_maximize(
            objective,
            np.zeros(len(cohort.covariate_names) + 1),
            config,
            loglik_only=lambda b: objective(b, derivatives=False),
        )
    except ConvergenceError as exc:
        if exc.result is not None:
            exc.model = _build_model(family, cohort, exc.result, cohort.time_unit, False)
        raise
    return _build_model(family, cohort, result, cohort.time_unit)


def fit_logistic(cohort: Cohort, config: FitConfig = FitConfig()) -> FittedGlmModel:
    """Maximum-likelihood logistic regression with an intercept.

    Perfectly separable data has no finite maximiser and surfaces as
    :class:`ConvergenceError` (the exception carries ``.model`` with
    ``converged=False`` when a last iterate is available).
    """
    if cohort.is_survival:
        raise TypeError("fit_logistic needs a binary cohort")
    y = cohort.outcomes
    if not (np.any(y == 1) and np.any(y == 0)):
        raise DegenerateDataError("both outcome classes must be present")
    Z = _design(cohort.X)
    objective = lambda b, derivatives=True: logistic_loglik(b, Z, y, derivatives)
    return _fit(LOGISTIC, cohort, objective, config)


def fit_poisson_survival(cohort: Cohort, config: FitConfig = FitConfig()) -> FittedGlmModel:
    """Constant-hazard survival regression with log link and intercept.

    With no covariate information the intercept is log(events / exposure).
    """
    if not cohort.is_survival:
        raise TypeError("fit_poisson_survival needs a survival cohort")
    if "no observed events" in validate_cohort(cohort):
        raise DegenerateDataError("no observed events")
    t = cohort.times
    if not np.any(t > 0):
        raise DegenerateDataError("all follow-up times are zero")
    d = cohort.events.astype(float)
    Z = _design(cohort.X)
    objective = lambda b, derivatives=True: poisson_survival_loglik(b, Z, t, d, derivatives)
    return _fit(POISSON_SURVIVAL, cohort, objective, config)


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def predict_logistic(model: FittedGlmModel, x) -> float:
    return float(expit(model.linear_predictor(x)))


def odds_ratio(model: FittedGlmModel, covariate_name: str) -> float:
    """exp(b_k): multiplicative change in odds (or rate) per unit of x_k."""
    if covariate_name not in model.coefficients:
        raise SchemaError(f"unknown covariate {covariate_name!r}")
    return math.exp(model.coefficients[covariate_name])


def predict_poisson_survival(model: FittedGlmModel, x, t) -> float:
    if model.family != POISSON_SURVIVAL:
        raise ValueError(f"model family is {model.family!r}, not {POISSON_SURVIVAL!r}")
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise DomainError(f"horizon must be non-negative and finite, got {t}")
    return math.exp(-t * math.exp(model.linear_predictor(x)))
