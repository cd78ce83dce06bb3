"""Damped Newton ascent shared by the GLM and Cox fitters."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from .errors import ConvergenceError

logger = logging.getLogger(__name__)

__all__ = ["FitConfig", "NewtonResult", "newton_maximize"]


@dataclass(frozen=True)
class FitConfig:
    tol: float = 1e-8
    max_iter: int = 100
    max_halvings: int = 30
    ties: str = "breslow"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.ties != "breslow":
            raise ValueError(f"only ties='breslow' is supported, got {self.ties!r}")


@dataclass
class NewtonResult:
    params: np.ndarray
    loglik: float
    gradient: np.ndarray
    hessian: np.ndarray
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


def newton_maximize(
    objective: Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray]],
    start,
    config: FitConfig = FitConfig(),
    loglik_only: Callable[[np.ndarray], float] | None = None,
) -> NewtonResult:
    """Maximise a concave objective by Newton steps with step-halving.

    ``objective(b)`` returns ``(loglik, gradient, hessian)``.  A step is
    accepted once the log-likelihood does not decrease; each rejection
    halves the step, up to ``config.max_halvings`` times.  Convergence is
    declared when ``|l_new - l_old| <= tol * |l_old|`` and the accepted step
    is small, ``max|step| <= sqrt(tol) * (1 + max|beta|)``.  The step test
    matters when the maximiser is at infinity: the likelihood flattens out
    there but Newton steps keep a roughly constant length.

    Raises :class:`ConvergenceError` when ``max_iter`` is exhausted or the
    Hessian stops being invertible (typical of separated or monotone
    likelihoods where the maximiser lies at infinity).
    """
    loglik_only = loglik_only or (lambda b: objective(b)[0])
    beta = np.array(start, dtype=float)
    ll, grad, hess = objective(beta)
    trace = [ll]
    if not np.isfinite(ll):
        raise ConvergenceError("log-likelihood not finite at start", beta, ll, 0)

    for it in range(1, config.max_iter + 1):
        try:
            step = linalg.solve(-hess, grad, assume_a="pos")
        except (linalg.LinAlgError, ValueError):
            raise ConvergenceError(
                f"Hessian not negative definite at iteration {it}; "
                f"max |beta| = {np.max(np.abs(beta)):.3g}",
                beta.copy(), ll, it - 1,
                NewtonResult(beta.copy(), ll, grad, hess, it - 1, False, trace),
            ) from None
        if not np.all(np.isfinite(step)):
            raise ConvergenceError(
                f"non-finite Newton step at iteration {it}", beta.copy(), ll, it - 1,
                NewtonResult(beta.copy(), ll, grad, hess, it - 1, False, trace),
            )

        scale = 1.0
        for _ in range(config.max_halvings + 1):
            candidate = beta + scale * step
            ll_new = loglik_only(candidate)
            if np.isfinite(ll_new) and ll_new >= ll:
                break
            scale *= 0.5
        else:
            # no ascent left at float precision; only a maximiser if Newton agrees
            logger.debug("step-halving exhausted at iteration %d", it)
            result = NewtonResult(beta, ll, grad, hess, it, True, trace)
            if np.max(np.abs(step)) <= np.sqrt(config.tol) * (1.0 + np.max(np.abs(beta))):
                return result
            result.converged = False
            raise ConvergenceError(
                f"likelihood flat but Newton step still large at iteration {it}; "
                f"max |beta| = {np.max(np.abs(beta)):.3g}",
                beta.copy(), ll, it, result,
            )

        old = ll
        moved = np.max(np.abs(scale * step), initial=0.0)
        beta = candidate
        ll, grad, hess = objective(beta)
        trace.append(ll)
        logger.debug("iter %d: loglik=%.12g scale=%g", it, ll, scale)
        small_step = moved <= np.sqrt(config.tol) * (1.0 + np.max(np.abs(beta), initial=0.0))
        if abs(ll - old) <= config.tol * abs(old) and small_step:
            return NewtonResult(beta, ll, grad, hess, it, True, trace)

    raise ConvergenceError(
        f"no convergence within {config.max_iter} iterations "
        f"(loglik={ll:.6g}, max |beta| = {np.max(np.abs(beta)):.3g})",
        beta.copy(), ll, config.max_iter,
        NewtonResult(beta.copy(), ll, grad, hess, config.max_iter, False, trace),
    )
