"""
Logistic and Poisson-survival regression
========================================

Both models are fit by Newton's method with step-halving.
"""

import math

import numpy as np

from survkit import (
    SimulationSpec,
    binary_cohort_from_arrays,
    fit_logistic,
    fit_poisson_survival,
    odds_ratio,
    predict_logistic,
    predict_poisson_survival,
    simulate_cohort,
)

rng = np.random.default_rng(0)

# binary outcome: P(fall) = expit(-1 + 0.8 x)
x = rng.normal(size=800)
y = rng.random(800) < 1 / (1 + np.exp(-(-1 + 0.8 * x)))
binary = binary_cohort_from_arrays(y, x[:, None], covariate_names=("gait_score",))
logit = fit_logistic(binary)
print(f"logistic: intercept={logit.intercept:.3f} gait_score={logit.coefficients['gait_score']:.3f}")
print(f"  odds ratio per unit gait_score: {odds_ratio(logit, 'gait_score'):.3f}")
print(f"  P(fall | gait_score=1) = {predict_logistic(logit, {'gait_score': 1.0}):.3f}")

# time to event with a constant baseline rate of 0.1 per month
spec = SimulationSpec(3000, (0.5,), covariates=("age_z",), lambda0=0.1,
                      censoring_rate_target=0.25, seed=11, time_unit="months")
cohort = simulate_cohort(spec)
pois = fit_poisson_survival(cohort)
print(f"poisson-survival: intercept={pois.intercept:.3f} (log 0.1 = {math.log(0.1):.3f})")
print(f"  age_z={pois.coefficients['age_z']:.3f} after {pois.iterations} iterations")
for t in (3, 6, 12):
    s = predict_poisson_survival(pois, {"age_z": 1.0}, t)
    print(f"  S({t:2d} months | age_z=1) = {s:.3f}")
