"""
Constant-rate Poisson process and exponential waiting-time calculators.

All functions take a rate ``lam`` (events per unit time, > 0) and a
horizon ``t`` (>= 0, same time unit).  They are pure and accept scalars
only; use ``np.vectorize`` or a comprehension for grids.
"""

import math

from .errors import DomainError

__all__ = [
    "poisson_pmf",
    "prob_exactly_one",
    "prob_at_least_one",
    "survival_const_rate",
    "exponential_pdf",
    "exponential_cdf",
]

# exact factorial below this k, log-gamma above
_EXACT_FACTORIAL_MAX_K = 20


def _check_rate(lam):
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"rate must be positive and finite, got {lam}")
    return lam


def _check_horizon(t):
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise DomainError(f"horizon must be non-negative and finite, got {t}")
    return t


def poisson_pmf(lam, t, k):
    """P(N_t = k) for a Poisson process with rate ``lam``.

    Evaluated as exp(k log(lam t) - lam t - log k!) so large ``k`` does not
    overflow.  ``t = 0`` gives 1 for ``k = 0`` and 0 otherwise.
    """
    lam = _check_rate(lam)
    t = _check_horizon(t)
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a non-negative integer, got {k}")
    k = int(k)
    mu = lam * t
    if k == 0:
        return math.exp(-mu)
    if mu == 0.0:
        return 0.0
    if k <= _EXACT_FACTORIAL_MAX_K:
        log_fact = math.log(math.factorial(k))
    else:
        log_fact = math.lgamma(k + 1)
    return math.exp(k * math.log(mu) - mu - log_fact)


def prob_exactly_one(lam, t):
    """P(N_t = 1) = lam t exp(-lam t)."""
    return poisson_pmf(lam, t, 1)


def prob_at_least_one(lam, t):
    """P(N_t >= 1) = 1 - exp(-lam t), the exponential CDF at ``t``."""
    lam = _check_rate(lam)
    t = _check_horizon(t)
    return 1.0 - math.exp(-lam * t)


def survival_const_rate(lam, t):
    """S(t) = P(T >= t) = P(N_t = 0) = exp(-lam t)."""
    return poisson_pmf(lam, t, 0)


def exponential_pdf(lam, t):
    lam = _check_rate(lam)
    t = _check_horizon(t)
    return lam * math.exp(-lam * t)


def exponential_cdf(lam, t):
    return prob_at_least_one(lam, t)
