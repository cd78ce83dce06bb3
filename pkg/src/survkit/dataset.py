"""
Cohort data model and CSV ingestion.

A cohort is an ordered, immutable collection of records sharing one list
of covariate names.  Survival records carry a follow-up time and an event
flag (``False`` means right-censored at ``time``); binary records carry a
0/1 outcome for fixed-interval classification.

Construction only enforces structure (shapes and names).  Semantic checks
such as "at least one event" or "no constant covariate" are reported by
:func:`validate_cohort` so a cohort can be inspected before it is fitted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, SchemaError, ValidationError

__all__ = [
    "CovariateVector",
    "SurvivalRecord",
    "BinaryRecord",
    "Cohort",
    "CsvSchema",
    "load_survival_csv",
    "load_binary_csv",
    "write_survival_csv",
    "write_binary_csv",
    "validate_cohort",
    "cohort_from_arrays",
    "binary_cohort_from_arrays",
]

_TRUE = {"1", "true"}
_FALSE = {"0", "false"}


@dataclass(frozen=True)
class CovariateVector:
    """Named covariate values for one subject.

    An empty vector is allowed for intercept-only models.
    """

    names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.names) != len(self.values):
            raise SchemaError(
                f"{len(self.names)} covariate names but {len(self.values)} values"
            )
        if len(set(self.names)) != len(self.names):
            raise SchemaError(f"duplicate covariate names in {self.names}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "CovariateVector":
        return cls(tuple(mapping), tuple(mapping.values()))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def aligned(self, names: Sequence[str]) -> np.ndarray:
        """Values reordered to ``names``; the name sets must match exactly."""
        if set(names) != set(self.names):
            missing = sorted(set(names) - set(self.names))
            extra = sorted(set(self.names) - set(names))
            raise SchemaError(
                f"covariate mismatch: missing {missing}, unexpected {extra}"
            )
        lookup = self.as_dict()
        return np.array([lookup[n] for n in names], dtype=float)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SurvivalRecord:
    subject_id: str
    time: float
    event: bool
    covariates: CovariateVector


@dataclass(frozen=True)
class BinaryRecord:
    subject_id: str
    outcome: int
    covariates: CovariateVector


@dataclass(frozen=True)
class Cohort:
    """Ordered records with a shared covariate list.

    Numeric views (``X``, ``times``, ``events``, ``outcomes``) are built
    once on first access and are read-only.
    """

    records: tuple
    covariate_names: tuple[str, ...]
    time_unit: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        if not self.records:
            raise ValidationError("a cohort needs at least one record")
        kinds = {type(r) for r in self.records}
        if len(kinds) != 1 or not kinds <= {SurvivalRecord, BinaryRecord}:
            raise ValidationError(
                "records must be all SurvivalRecord or all BinaryRecord"
            )
        for i, rec in enumerate(self.records, start=1):
            if rec.covariates.names != self.covariate_names:
                raise SchemaError(
                    f"record {i} ({rec.subject_id!r}) has covariates "
                    f"{rec.covariates.names}, expected {self.covariate_names}"
                )

    @property
    def is_survival(self) -> bool:
        return isinstance(self.records[0], SurvivalRecord)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @cached_property
    def X(self) -> np.ndarray:
        x = np.array([r.covariates.values for r in self.records], dtype=float)
        x = x.reshape(len(self.records), len(self.covariate_names))
        x.setflags(write=False)
        return x

    @cached_property
    def times(self) -> np.ndarray:
        self._require_survival()
        t = np.array([r.time for r in self.records], dtype=float)
        t.setflags(write=False)
        return t

    @cached_property
    def events(self) -> np.ndarray:
        self._require_survival()
        d = np.array([r.event for r in self.records], dtype=bool)
        d.setflags(write=False)
        return d

    @cached_property
    def outcomes(self) -> np.ndarray:
        if self.is_survival:
            raise TypeError("survival cohort has no binary outcomes")
        y = np.array([r.outcome for r in self.records], dtype=float)
        y.setflags(write=False)
        return y

    @property
    def n_events(self) -> int:
        return int(self.events.sum())

    @property
    def n_censored(self) -> int:
        return len(self) - self.n_events

    def _require_survival(self):
        if not self.is_survival:
            raise TypeError("binary cohort has no follow-up times")


def cohort_from_arrays(
    times: Iterable[float],
    events: Iterable,
    X,
    covariate_names: Sequence[str] | None = None,
    subject_ids: Sequence[str] | None = None,
    time_unit: str | None = None,
) -> Cohort:
    """Build a survival cohort from parallel arrays.

    ``X=None`` gives a covariate-free cohort (intercept-only models).
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events).astype(bool)
    X = np.empty((len(times), 0)) if X is None else np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if times.shape != (n,) or events.shape != (n,):
        raise SchemaError("times, events and X must have the same number of rows")
    if covariate_names is None:
        covariate_names = [f"x{k + 1}" for k in range(p)]
    names = tuple(covariate_names)
    if subject_ids is None:
        subject_ids = [f"s{i + 1}" for i in range(n)]
    records = tuple(
        SurvivalRecord(
            str(subject_ids[i]),
            float(times[i]),
            bool(events[i]),
            CovariateVector(names, X[i]),
        )
        for i in range(n)
    )
    return Cohort(records, names, time_unit)


def binary_cohort_from_arrays(y, X, covariate_names=None, subject_ids=None) -> Cohort:
    y = np.asarray(y)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if covariate_names is None:
        covariate_names = [f"x{k + 1}" for k in range(p)]
    names = tuple(covariate_names)
    if subject_ids is None:
        subject_ids = [f"s{i + 1}" for i in range(n)]
    records = tuple(
        BinaryRecord(str(subject_ids[i]), int(y[i]), CovariateVector(names, X[i]))
        for i in range(n)
    )
    return Cohort(records, names)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    """Explicit mapping from roles to CSV column names.

    ``time``/``event`` are used for survival files, ``outcome`` for binary
    files.  ``id`` is optional; without it subjects are numbered ``s1..sn``
    in row order.
    """

    covariates: tuple[str, ...]
    time: str | None = "time"
    event: str | None = "event"
    outcome: str | None = None
    id: str | None = None
    time_unit: str | None = None

    def __post_init__(self):
        covs = self.covariates
        if isinstance(covs, str):
            covs = [c.strip() for c in covs.split(",") if c.strip()]
        object.__setattr__(self, "covariates", tuple(covs))


def _read_rows(path, required):
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: missing header row")
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        return list(reader)


def _parse_float(cell, column, row):
    try:
        value = float(cell)
    except (TypeError, ValueError):
        raise ParseError(
            f"row {row}: column {column!r} is not numeric: {cell!r}", row=row
        ) from None
    if not math.isfinite(value):
        raise ParseError(f"row {row}: column {column!r} is not finite: {cell!r}", row=row)
    return value


def _parse_flag(cell, column, row):
    token = (cell or "").strip().lower()
    if token in _TRUE:
        return True
    if token in _FALSE:
        return False
    raise ParseError(
        f"row {row}: column {column!r} must be one of 0,1,true,false; got {cell!r}",
        row=row,
    )


def load_survival_csv(path, schema: CsvSchema) -> Cohort:
    """Read a right-censored survival cohort; rows keep file order.

    Row numbers in error messages count data rows from 1 (the header is
    not counted).
    """
    required = [schema.time, schema.event, *schema.covariates]
    if schema.id:
        required.append(schema.id)
    rows = _read_rows(path, required)
    names = schema.covariates
    records = []
    for i, row in enumerate(rows, start=1):
        t = _parse_float(row[schema.time], schema.time, i)
        if t < 0:
            raise ValidationError(f"row {i}: negative time {t}", row=i)
        event = _parse_flag(row[schema.event], schema.event, i)
        values = [_parse_float(row[c], c, i) for c in names]
        sid = row[schema.id] if schema.id else f"s{i}"
        records.append(SurvivalRecord(sid, t, event, CovariateVector(names, values)))
    if not records:
        raise ValidationError(f"{path}: no data rows")
    return Cohort(tuple(records), names, schema.time_unit)


def load_binary_csv(path, schema: CsvSchema) -> Cohort:
    """Read a 0/1 outcome cohort for logistic regression."""
    if schema.outcome is None:
        raise SchemaError("schema.outcome must name the outcome column")
    required = [schema.outcome, *schema.covariates]
    if schema.id:
        required.append(schema.id)
    rows = _read_rows(path, required)
    names = schema.covariates
    records = []
    for i, row in enumerate(rows, start=1):
        y = int(_parse_flag(row[schema.outcome], schema.outcome, i))
        values = [_parse_float(row[c], c, i) for c in names]
        sid = row[schema.id] if schema.id else f"s{i}"
        records.append(BinaryRecord(sid, y, CovariateVector(names, values)))
    if not records:
        raise ValidationError(f"{path}: no data rows")
    return Cohort(tuple(records), names)


def write_survival_csv(cohort: Cohort, path, id_col="id", time_col="time", event_col="event"):
    """Write a survival cohort; floats use ``repr`` so they reload bit-equal."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([id_col, time_col, event_col, *cohort.covariate_names])
        for r in cohort.records:
            writer.writerow(
                [r.subject_id, repr(r.time), int(r.event), *map(repr, r.covariates.values)]
            )


def write_binary_csv(cohort: Cohort, path, id_col="id", outcome_col="outcome"):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([id_col, outcome_col, *cohort.covariate_names])
        for r in cohort.records:
            writer.writerow([r.subject_id, r.outcome, *map(repr, r.covariates.values)])


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_cohort(cohort: Cohort) -> list[str]:
    """Return one human-readable finding per invariant violation.

    An empty list means the cohort is fit for use.
    """
    findings = []
    ids = [r.subject_id for r in cohort.records]
    seen, dups = set(), []
    for sid in ids:
        if sid in seen and sid not in dups:
            dups.append(sid)
        seen.add(sid)
    if dups:
        findings.append(f"duplicate subject ids: {', '.join(dups)}")

    X = cohort.X
    for k, name in enumerate(cohort.covariate_names):
        col = X[:, k]
        if not np.all(np.isfinite(col)):
            findings.append(f"non-finite value in covariate {name!r}")
        elif len(col) > 1 and np.all(col == col[0]):
            findings.append(f"constant covariate {name!r}")

    if cohort.is_survival:
        t = cohort.times
        if not np.all(np.isfinite(t)):
            findings.append("non-finite follow-up time")
        elif np.any(t < 0):
            findings.append("negative follow-up time")
        if not cohort.events.any():
            findings.append("no observed events")
    else:
        y = cohort.outcomes
        bad = ~np.isin(y, (0, 1))
        if bad.any():
            findings.append("outcome values outside {0, 1}")
        elif np.all(y == y[0]):
            findings.append(f"only one outcome class ({int(y[0])}) present")
    return findings
