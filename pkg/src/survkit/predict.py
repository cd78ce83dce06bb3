"""
Applying fitted survival models.

* :func:`survival_at` - S(t | x) at chosen horizons.
* :func:`time_to_threshold` - first time S(t | x) drops to a threshold
  (0.5 gives the median survival time).
* :func:`hazard_ratios` - exp(b_k) per covariate with percent change.
* :func:`cox_poisson_equivalence_report` - how far a Cox fit and a
  constant-rate Poisson-survival fit disagree on the same data.

Cox predictions use the Breslow step function directly.  Between event
times H0 keeps its last value; no interpolation is done anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coxph import FittedCoxModel
from .dataset import CovariateVector
from .errors import SchemaError
from .glm import POISSON_SURVIVAL, FittedGlmModel

__all__ = [
    "SurvivalCurve",
    "TimeEstimate",
    "HazardRatio",
    "EquivalenceReport",
    "survival_curve",
    "survival_at",
    "time_to_threshold",
    "hazard_ratios",
    "cox_poisson_equivalence_report",
    "format_table",
]


def _check_model(model):
    if isinstance(model, FittedCoxModel):
        return
    if isinstance(model, FittedGlmModel) and model.family == POISSON_SURVIVAL:
        return
    raise TypeError(
        "expected a FittedCoxModel or a poisson_survival FittedGlmModel, "
        f"got {type(model).__name__}"
    )


def _cumulative_hazard(model, times, lp):
    """H(t | x) given the linear predictor ``lp``."""
    if isinstance(model, FittedCoxModel):
        return model.baseline.cumulative_at(times) * math.exp(lp)
    return times * math.exp(lp)


@dataclass(frozen=True)
class SurvivalCurve:
    """S(t | x) for one covariate profile; call with a time or array of times."""

    model: object
    profile: CovariateVector
    linear_predictor: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValueError("times must be finite and non-negative")
        s = np.exp(-_cumulative_hazard(self.model, t, self.linear_predictor))
        return float(s) if s.ndim == 0 else s

    @property
    def extrapolates_after(self) -> float:
        """Last time supported by data (inf for the parametric model)."""
        if isinstance(self.model, FittedCoxModel):
            return float(self.model.baseline.times[-1])
        return math.inf


def _as_profile(model, profile):
    if isinstance(profile, CovariateVector):
        vec = profile
    elif isinstance(profile, dict):
        vec = CovariateVector.from_mapping(profile)
    else:
        vec = CovariateVector(model.covariate_names, profile)
    if set(vec.names) != set(model.covariate_names):
        raise SchemaError(
            f"profile covariates {sorted(vec.names)} do not match model "
            f"covariates {sorted(model.covariate_names)}"
        )
    return vec


def survival_curve(model, profile) -> SurvivalCurve:
    _check_model(model)
    vec = _as_profile(model, profile)
    return SurvivalCurve(model, vec, model.linear_predictor(vec))


def survival_at(model, profile, times) -> list[float]:
    """S(t | x) at each of ``times``.

    Cox: exp(-H0(t) exp(b.x)).  Poisson-survival: exp(-t exp(b0 + b.x)).
    """
    curve = survival_curve(model, profile)
    return [float(v) for v in np.atleast_1d(curve(np.asarray(times, dtype=float)))]


@dataclass(frozen=True)
class TimeEstimate:
    """Result of inverting a survival curve at ``threshold``.

    ``time`` is None when the curve never reaches the threshold within the
    tabulated baseline ("beyond horizon").
    """

    time: float | None
    threshold: float
    extrapolated: bool
    target_cumulative_hazard: float
    linear_predictor: float

    @property
    def beyond_horizon(self) -> bool:
        return self.time is None

    def to_dict(self):
        return {
            "time": "beyond-horizon" if self.time is None else self.time,
            "threshold": self.threshold,
            "extrapolated": self.extrapolated,
            "target_baseline_cumulative_hazard": self.target_cumulative_hazard,
            "linear_predictor": self.linear_predictor,
        }


def time_to_threshold(model, profile, threshold: float = 0.5) -> TimeEstimate:
    """Smallest time with S(t | x) <= threshold.

    For a Cox model the target baseline cumulative hazard is
    -log(threshold) / exp(b.x) and the answer is the first tabulated event
    time whose H0 reaches it.  For the Poisson-survival model the curve is
    continuous and is inverted in closed form.
    """
    threshold = float(threshold)
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    curve = survival_curve(model, profile)
    lp = curve.linear_predictor
    target = -math.log(threshold) / math.exp(lp)

    if isinstance(model, FittedGlmModel):
        return TimeEstimate(target, threshold, False, target, lp)

    table = model.baseline
    # same arithmetic as survival_at, so the returned time always satisfies S <= threshold
    s = np.exp(-table.cumulative * math.exp(lp))
    hits = np.flatnonzero(s <= threshold)
    if len(hits) == 0:
        return TimeEstimate(None, threshold, True, target, lp)
    return TimeEstimate(float(table.times[hits[0]]), threshold, False, target, lp)


@dataclass(frozen=True)
class HazardRatio:
    coefficient: float
    hazard_ratio: float
    percent_change: float

    @property
    def label(self) -> str:
        pct = round(self.percent_change)
        if pct == 0:
            return "0%"
        return f"{pct:+d}%"

    @property
    def direction(self) -> str:
        if self.coefficient > 0:
            return "increase"
        if self.coefficient < 0:
            return "decrease"
        return "no change"

    def to_dict(self):
        return {
            "coefficient": self.coefficient,
            "hazard_ratio": self.hazard_ratio,
            "percent_change": self.percent_change,
        }


def hazard_ratios(model) -> dict[str, HazardRatio]:
    """exp(b_k) and 100 (exp(b_k) - 1) for every covariate."""
    out = {}
    for name in model.covariate_names:
        b = float(model.coefficients[name])
        hr = math.exp(b)
        out[name] = HazardRatio(b, hr, 100.0 * math.expm1(b))
    return out


# ---------------------------------------------------------------------------
# Cox vs Poisson-survival
# ---------------------------------------------------------------------------


@dataclass
class EquivalenceReport:
    rows: list = field(default_factory=list)
    baseline_rows: list = field(default_factory=list)
    max_divergence: float = 0.0
    max_baseline_gap: float = 0.0

    def to_dict(self):
        return {
            "rows": self.rows,
            "baseline": self.baseline_rows,
            "max_divergence": self.max_divergence,
            "max_baseline_gap": self.max_baseline_gap,
        }


def cox_poisson_equivalence_report(
    cox: FittedCoxModel, glm: FittedGlmModel, profiles, times
) -> EquivalenceReport:
    """Compare S(t | x) from both models on a profile x time grid.

    The Poisson-survival model implies a constant baseline with
    H0(t) = t exp(b0); the report also tabulates that line against the
    Breslow H0(t) at each requested time.
    """
    if glm.family != POISSON_SURVIVAL:
        raise ValueError("the GLM must be a poisson_survival model")
    if set(cox.covariate_names) != set(glm.covariate_names):
        raise SchemaError(
            f"covariate mismatch: cox {sorted(cox.covariate_names)} vs "
            f"glm {sorted(glm.covariate_names)}"
        )
    times = np.asarray(times, dtype=float)
    report = EquivalenceReport()
    for p_idx, profile in enumerate(profiles):
        s_cox = survival_at(cox, profile, times)
        s_glm = survival_at(glm, profile, times)
        for t, a, b in zip(times, s_cox, s_glm):
            gap = abs(a - b)
            report.rows.append(
                {"profile": p_idx, "time": float(t), "s_cox": a, "s_glm": b, "divergence": gap}
            )
            report.max_divergence = max(report.max_divergence, gap)
    h_cox = np.atleast_1d(cox.baseline.cumulative_at(times))
    h_glm = times * math.exp(glm.intercept)
    for t, a, b in zip(times, h_cox, h_glm):
        report.baseline_rows.append(
            {"time": float(t), "h0_cox": float(a), "h0_constant": float(b)}
        )
    report.max_baseline_gap = float(np.max(np.abs(h_cox - h_glm), initial=0.0))
    return report


def format_table(rows: list[dict], columns: list[str] | None = None, digits: int = 6) -> str:
    """Plain aligned-column rendering of a list of dicts."""
    if not rows:
        return ""
    columns = columns or list(rows[0])

    def cell(v):
        if isinstance(v, float):
            return f"{v:.{digits}g}"
        return str(v)

    body = [[cell(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)
