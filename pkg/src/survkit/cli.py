"""
Survival model fitting and prediction from the command line.

    survkit fit {cox,poisson,logistic} --data FILE --covariates a,b --out model.json
    survkit predict --model model.json --profile a=1,b=0 (--times 3,6,12 | --median | --hazard-ratios)
    survkit simulate (--spec spec.json | --n 1000 --beta 0.5,-0.3 ...) --out cohort.csv
    survkit compare --cox cox.json --glm glm.json --times 1,2,3 --profile a=0,b=0
    survkit prob at-least-one --rate 0.1 --t 12

Exit status: 0 success, 2 input error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import distributions
from .coxph import FittedCoxModel, fit_cox
from .dataset import CsvSchema, load_binary_csv, load_survival_csv, write_survival_csv
from .errors import ConvergenceError, SurvkitError
from .glm import FittedGlmModel, fit_logistic, fit_poisson_survival
from .optim import FitConfig
from .predict import (
    cox_poisson_equivalence_report,
    format_table,
    hazard_ratios,
    survival_at,
    time_to_threshold,
)
from .simulate import SimulationSpec, SpecError, simulate_cohort

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGED = 3


class InputError(Exception):
    pass


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _parse_profile(text):
    profile = {}
    for item in _names(text):
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"profile entries look like name=value, got {item!r}")
        try:
            profile[key.strip()] = float(value)
        except ValueError:
            raise InputError(f"profile value for {key!r} is not numeric: {value!r}") from None
    return profile


def _profiles_from_args(args):
    profiles = [_parse_profile(p) for p in (args.profile or [])]
    if getattr(args, "profile_csv", None):
        import csv

        with open(args.profile_csv, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                profiles.append({k.strip(): float(v) for k, v in row.items()})
    return profiles


def _dump(obj):
    return json.dumps(obj, indent=2, allow_nan=True)


def _load_model(path):
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model {path}: {exc}") from None
    if "family" in d:
        return FittedGlmModel.from_dict(d)
    return FittedCoxModel.from_dict(d)


def _fit_config(args):
    settings = {}
    if args.config:
        try:
            settings.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
    if args.tol is not None:
        settings["tol"] = args.tol
    if args.max_iter is not None:
        settings["max_iter"] = args.max_iter
    allowed = {"tol", "max_iter", "max_halvings", "ties"}
    unknown = set(settings) - allowed
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    try:
        return FitConfig(**settings)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_fit(args, out=sys.stdout):
    config = _fit_config(args)
    covariates = _names(args.covariates) if args.covariates else []
    if args.model == "logistic":
        schema = CsvSchema(covariates, outcome=args.outcome, id=args.id)
        cohort = load_binary_csv(args.data, schema)
        fitter = fit_logistic
    else:
        schema = CsvSchema(
            covariates, time=args.time, event=args.event, id=args.id, time_unit=args.time_unit
        )
        cohort = load_survival_csv(args.data, schema)
        fitter = fit_cox if args.model == "cox" else fit_poisson_survival

    status = EXIT_OK
    try:
        model = fitter(cohort, config)
    except ConvergenceError as exc:
        model = getattr(exc, "model", None)
        print(f"not converged: {exc}", file=sys.stderr)
        status = EXIT_NONCONVERGED
        if model is None:
            return status

    Path(args.out).write_text(_dump(model.to_dict()) + "\n")
    if isinstance(model, FittedCoxModel):
        ll_name, ll = "log partial likelihood", model.log_partial_likelihood
    else:
        ll_name, ll = "log likelihood", model.log_likelihood
    print(
        f"{args.model}: converged={model.converged} iterations={model.iterations} "
        f"{ll_name}={ll:.10g}",
        file=out,
    )
    for name, value in model.coefficients.items():
        print(f"  {name} = {value:.6g}", file=out)
    return status


def cmd_predict(args, out=sys.stdout):
    model = _load_model(args.model)
    if args.hazard_ratios:
        ratios = hazard_ratios(model)
        if args.format == "json":
            print(_dump({k: v.to_dict() for k, v in ratios.items()}), file=out)
        else:
            rows = [
                {"covariate": k, "coefficient": v.coefficient, "hazard_ratio": v.hazard_ratio,
                 "change": v.label}
                for k, v in ratios.items()
            ]
            print(format_table(rows), file=out)
        return EXIT_OK

    profiles = _profiles_from_args(args)
    if not profiles:
        raise InputError("predict needs --profile or --profile-csv")
    if args.median or args.threshold is not None:
        threshold = 0.5 if args.threshold is None else args.threshold
        estimates = [time_to_threshold(model, p, threshold) for p in profiles]
        if args.format == "json":
            print(_dump([e.to_dict() for e in estimates]), file=out)
        else:
            rows = [dict(profile=i, **e.to_dict()) for i, e in enumerate(estimates)]
            print(format_table(rows), file=out)
        return EXIT_OK

    if args.times is None:
        raise InputError("predict needs one of --times, --median, --threshold, --hazard-ratios")
    times = _floats(args.times)
    if any(t < 0 for t in times):
        raise InputError("times must be non-negative")
    rows = []
    for i, p in enumerate(profiles):
        for t, s in zip(times, survival_at(model, p, times)):
            rows.append({"profile": i, "time": t, "survival": s, "risk": 1.0 - s})
    if args.format == "json":
        print(_dump(rows), file=out)
    else:
        print(format_table(rows), file=out)
    return EXIT_OK


def _spec_from_args(args):
    if args.spec:
        try:
            d = json.loads(Path(args.spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read spec {args.spec}: {exc}") from None
    else:
        d = {}
    if args.n is not None:
        d["n_subjects"] = args.n
    if args.beta is not None:
        d["true_beta"] = _floats(args.beta)
    if args.covariates is not None:
        names = _names(args.covariates)
        kinds = _names(args.kinds) if args.kinds else ["normal"] * len(names)
        if len(kinds) != len(names):
            raise InputError("--kinds must list one distribution per covariate")
        d["covariates"] = [
            {"name": n, "kind": k.split(":")[0], "q": float(k.split(":")[1]) if ":" in k else 0.5}
            for n, k in zip(names, kinds)
        ]
    for key, value in (
        ("lambda0", args.lambda0),
        ("shape", args.shape),
        ("censoring_rate_target", args.censoring),
        ("seed", args.seed),
        ("time_unit", args.time_unit),
    ):
        if value is not None:
            d[key] = value
    if "n_subjects" not in d:
        raise InputError("simulate needs --n or a spec with n_subjects")
    return SimulationSpec.from_dict(d)


def cmd_simulate(args, out=sys.stdout):
    spec = _spec_from_args(args)
    cohort = simulate_cohort(spec)
    write_survival_csv(cohort, args.out)
    frac = cohort.n_censored / len(cohort)
    print(
        f"wrote {len(cohort)} subjects to {args.out}: events={cohort.n_events} "
        f"censored={cohort.n_censored} (fraction {frac:.4f})",
        file=out,
    )
    return EXIT_OK


def cmd_compare(args, out=sys.stdout):
    cox = _load_model(args.cox)
    glm = _load_model(args.glm)
    if not isinstance(cox, FittedCoxModel) or not isinstance(glm, FittedGlmModel):
        raise InputError("--cox must be a Cox model and --glm a poisson_survival model")
    if args.times:
        times = _floats(args.times)
    else:
        lo, hi = cox.baseline.times[0], cox.baseline.times[-1]
        times = list(np.linspace(lo, hi, args.grid))
    profiles = _profiles_from_args(args) or [{n: 0.0 for n in cox.covariate_names}]
    report = cox_poisson_equivalence_report(cox, glm, profiles, times)
    if args.format == "json":
        print(_dump(report.to_dict()), file=out)
    else:
        print(format_table(report.rows), file=out)
        print(file=out)
        print(format_table(report.baseline_rows), file=out)
        print(f"\nmax survival divergence: {report.max_divergence:.6g}", file=out)
        print(f"max baseline gap: {report.max_baseline_gap:.6g}", file=out)
    return EXIT_OK


_PROB = {
    "pmf": lambda a: distributions.poisson_pmf(a.rate, a.t, a.k),
    "exactly-one": lambda a: distributions.prob_exactly_one(a.rate, a.t),
    "at-least-one": lambda a: distributions.prob_at_least_one(a.rate, a.t),
    "survival": lambda a: distributions.survival_const_rate(a.rate, a.t),
    "pdf": lambda a: distributions.exponential_pdf(a.rate, a.t),
}


def cmd_prob(args, out=sys.stdout):
    value = _PROB[args.quantity](args)
    if args.format == "json":
        print(_dump({"quantity": args.quantity, "rate": args.rate, "t": args.t, "value": value}),
              file=out)
    else:
        print(repr(value), file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="survkit", description=__doc__.splitlines()[1])
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a model from a CSV file")
    fit.add_argument("model", choices=["cox", "poisson", "logistic"])
    fit.add_argument("--data", required=True)
    fit.add_argument("--time", default="time")
    fit.add_argument("--event", default="event")
    fit.add_argument("--outcome", default="outcome")
    fit.add_argument("--covariates", default="")
    fit.add_argument("--id")
    fit.add_argument("--time-unit")
    fit.add_argument("--tol", type=float)
    fit.add_argument("--max-iter", type=int)
    fit.add_argument("--config", help="JSON file with tol / max_iter")
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=cmd_fit)

    pred = sub.add_parser("predict", help="apply a fitted model")
    pred.add_argument("--model", required=True)
    pred.add_argument("--profile", action="append", help="name=value,... (repeatable)")
    pred.add_argument("--profile-csv")
    what = pred.add_mutually_exclusive_group()
    what.add_argument("--times", help="comma-separated horizons")
    what.add_argument("--median", action="store_true")
    what.add_argument("--threshold", type=float)
    what.add_argument("--hazard-ratios", action="store_true")
    pred.add_argument("--format", choices=["json", "table"], default="json")
    pred.set_defaults(func=cmd_predict)

    sim = sub.add_parser("simulate", help="write a synthetic cohort CSV")
    sim.add_argument("--spec", help="JSON simulation spec")
    sim.add_argument("--n", type=int)
    sim.add_argument("--beta")
    sim.add_argument("--covariates")
    sim.add_argument("--kinds", help="normal or bernoulli:q per covariate")
    sim.add_argument("--lambda0", type=float)
    sim.add_argument("--shape", type=float)
    sim.add_argument("--censoring", type=float)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--time-unit")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="Cox vs Poisson-survival divergence")
    cmp_.add_argument("--cox", required=True)
    cmp_.add_argument("--glm", required=True)
    cmp_.add_argument("--times")
    cmp_.add_argument("--grid", type=int, default=50, help="grid size over the event-time span")
    cmp_.add_argument("--profile", action="append")
    cmp_.add_argument("--profile-csv")
    cmp_.add_argument("--format", choices=["json", "table"], default="json")
    cmp_.set_defaults(func=cmd_compare)

    prob = sub.add_parser("prob", help="constant-rate event probabilities")
    prob.add_argument("quantity", choices=sorted(_PROB))
    prob.add_argument("--rate", type=float, required=True)
    prob.add_argument("--t", type=float, required=True)
    prob.add_argument("--k", type=int, default=1)
    prob.add_argument("--format", choices=["json", "text"], default="text")
    prob.set_defaults(func=cmd_prob)
    return parser


def main(argv=None, out=sys.stdout):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args, out=out)
    except (InputError, SurvkitError, SpecError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
