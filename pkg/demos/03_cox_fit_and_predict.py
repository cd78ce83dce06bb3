"""
Fitting a Cox model and reading its predictions
===============================================

Median survival from a tabulated baseline, hazard ratios, and risk
at fixed horizons.
"""

from survkit import (
    FittedCoxModel,
    SimulationSpec,
    fit_cox,
    format_table,
    hazard_ratios,
    simulate_cohort,
    survival_at,
    time_to_threshold,
)

# a hand-built baseline: cumulative hazard at months 1 to 6
table_model = FittedCoxModel.from_table(
    {"risk_score": 1.0}, [1, 2, 3, 4, 5, 6], [0.10, 0.25, 0.40, 0.60, 0.85, 1.10], "months"
)
est = time_to_threshold(table_model, {"risk_score": 2.0})
print(f"target H0 = log 2 / exp(2) = {est.target_cumulative_hazard:.4f}")
print(f"median survival for risk_score=2: month {est.time:g}")

# beyond the table the answer is reported as unknown, not guessed
late = time_to_threshold(table_model, {"risk_score": -2.0})
print(f"median for risk_score=-2: {late.time} (beyond horizon: {late.beyond_horizon})")

# a fitted model on simulated data
spec = SimulationSpec(2000, (0.5, -0.5), covariates=("slow_gait", "strength"),
                      lambda0=0.05, censoring_rate_target=0.3, seed=4, time_unit="months")
cohort = simulate_cohort(spec)
model = fit_cox(cohort)
print(f"\nfit in {model.iterations} iterations, log partial likelihood {model.log_partial_likelihood:.2f}")

rows = [
    {"covariate": name, "coef": hr.coefficient, "HR": hr.hazard_ratio, "change": hr.label}
    for name, hr in hazard_ratios(model).items()
]
print(format_table(rows, digits=3))

# fall risk 1 - S(t) at 3, 6 and 12 months for two profiles
for profile in ({"slow_gait": 1.0, "strength": -1.0}, {"slow_gait": -1.0, "strength": 1.0}):
    risk = [1 - s for s in survival_at(model, profile, [3, 6, 12])]
    print(profile, " ".join(f"{r:.3f}" for r in risk))
