"""Time-to-event models: logistic, Poisson-survival and Cox proportional hazards."""

from .coxph import (
    BaselineHazardTable,
    FittedCoxModel,
    baseline_survival,
    breslow_baseline,
    build_risk_sets,
    fit_cox,
    log_partial_likelihood,
)
from .dataset import (
    BinaryRecord,
    Cohort,
    CovariateVector,
    CsvSchema,
    SurvivalRecord,
    binary_cohort_from_arrays,
    cohort_from_arrays,
    load_binary_csv,
    load_survival_csv,
    validate_cohort,
    write_survival_csv,
)
from .distributions import (
    exponential_cdf,
    exponential_pdf,
    poisson_pmf,
    prob_at_least_one,
    prob_exactly_one,
    survival_const_rate,
)
from .errors import (
    ConvergenceError,
    DataError,
    DegenerateDataError,
    DomainError,
    ParseError,
    SchemaError,
    ValidationError,
)
from .glm import (
    FittedGlmModel,
    exp_family_form,
    fit_logistic,
    fit_poisson_survival,
    odds_ratio,
    predict_logistic,
    predict_poisson_survival,
)
from .optim import FitConfig
from .predict import (
    cox_poisson_equivalence_report,
    format_table,
    hazard_ratios,
    survival_at,
    survival_curve,
    time_to_threshold,
)
from .simulate import CovariateSpec, SimulationSpec, simulate_cohort

__version__ = "0.1.0"
