"""Typed column store: CSV ingestion, schema inference, binning, summaries,
row filtering and the seeded synthetic loan-application generator."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CsvStructureError,
    EmptyDatasetError,
    SchemaError,
    ValidationError,
)

MISSING_MARKERS = ("", "NA")

NUMERIC = "numeric"
CATEGORICAL = "categorical"

#: Numeric-looking columns with at most this many distinct values are treated
#: as categorical (integer codes such as risk levels stay grouped).
DEFAULT_KIND_THRESHOLD = 12

#: Cap on the square-root bin count so per-feature bar charts stay legible.
DEFAULT_MAX_BINS = 10


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str  # NUMERIC | CATEGORICAL
    distinct_values: tuple[str, ...] = ()
    min: float | None = None
    max: float | None = None
    missing_count: int = 0


@dataclass(frozen=True)
class BinSpec:
    feature: str
    edges: tuple[float, ...]  # k+1 strictly increasing (single value when k=1)
    labels: tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.labels)

    def index_of(self, value: float) -> int:
        """Bin index for a non-missing value; last bin is right-closed."""
        if self.k == 1:
            return 0
        idx = int(np.searchsorted(self.edges, value, side="right")) - 1
        return min(max(idx, 0), self.k - 1)

    def label_of(self, value: float) -> str:
        return self.labels[self.index_of(value)]


@dataclass(frozen=True)
class FeatureSummary:
    feature: str
    # (value or bin label, count, positive_count, acceptance_rate or None)
    groups: tuple[tuple[str, int, int, float | None], ...]
    overall_rate: float


@dataclass(frozen=True)
class DataTable:
    """Immutable table of applications.

    Numeric cells are floats, categorical cells are strings; missing cells
    are None in both cases.
    """

    schema: tuple[ColumnSchema, ...]
    columns: dict[str, tuple]  # name -> tuple of cells
    n_rows: int
    target: str | None = None
    positive_label: str | None = None
    derived: tuple[str, ...] = field(default=())  # names of derived columns

    # -- construction ------------------------------------------------------

    @staticmethod
    def build(names, kinds, columns, target=None, positive_label=None,
              derived=()):
        """Assemble a table from parallel column lists, computing schema stats.

        `columns` maps name -> sequence of cells (float/str/None). Kind is
        taken from `kinds`, not inferred.
        """
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate column name(s): {', '.join(dupes)}")
        if not names:
            raise EmptyDatasetError("no columns")
        n = len(columns[names[0]])
        if n < 1:
            raise EmptyDatasetError("table has no rows")
        schema = []
        store = {}
        for name in names:
            cells = list(columns[name])
            if len(cells) != n:
                raise SchemaError(f"column {name!r} has {len(cells)} cells, expected {n}")
            kind = kinds[name]
            missing = sum(1 for c in cells if c is None)
            if missing == n:
                raise SchemaError(f"column {name!r} has no non-missing values")
            if kind == NUMERIC:
                vals = [float(c) for c in cells if c is not None]
                schema.append(ColumnSchema(name, NUMERIC, (), min(vals), max(vals), missing))
                store[name] = tuple(float(c) if c is not None else None for c in cells)
            elif kind == CATEGORICAL:
                distinct = tuple(sorted({str(c) for c in cells if c is not None}))
                schema.append(ColumnSchema(name, CATEGORICAL, distinct, None, None, missing))
                store[name] = tuple(str(c) if c is not None else None for c in cells)
            else:
                raise SchemaError(f"unknown kind {kind!r} for column {name!r}")
        table = DataTable(tuple(schema), store, n, derived=tuple(derived))
        if target is not None:
            table = table.with_target(target, positive_label)
        return table

    def with_target(self, target: str, positive_label: str) -> "DataTable":
        """Designate the binary target column and its positive value."""
        col = self.column_schema(target)
        if col.kind != CATEGORICAL:
            raise ValidationError(f"target column {target!r} must be categorical")
        if len(col.distinct_values) != 2:
            raise ValidationError(
                f"target column {target!r} has {len(col.distinct_values)} values, expected exactly 2")
        if col.missing_count:
            raise ValidationError(f"target column {target!r} has missing cells")
        if positive_label not in col.distinct_values:
            raise ValidationError(
                f"positive label {positive_label!r} not among target values {col.distinct_values}")
        return replace(self, target=target, positive_label=positive_label)

    def with_derived_column(self, name: str, cells) -> "DataTable":
        """Return a copy with one extra numeric column marked as derived."""
        if any(s.name == name for s in self.schema):
            raise ValidationError(f"column {name!r} already exists")
        names = [s.name for s in self.schema] + [name]
        kinds = {s.name: s.kind for s in self.schema}
        kinds[name] = NUMERIC
        columns = dict(self.columns)
        columns[name] = tuple(cells)
        return DataTable.build(names, kinds, columns, self.target,
                               self.positive_label, self.derived + (name,))

    # -- lookups -----------------------------------------------------------

    def column_schema(self, name: str) -> ColumnSchema:
        for s in self.schema:
            if s.name == name:
                return s
        available = ", ".join(s.name for s in self.schema)
        raise ValidationError(f"unknown feature {name!r}; available: {available}")

    def feature_names(self, include_target=True, include_derived=True):
        out = []
        for s in self.schema:
            if not include_target and s.name == self.target:
                continue
            if not include_derived and s.name in self.derived:
                continue
            out.append(s.name)
        return out

    def positives(self) -> np.ndarray:
        """Recorded per-row positive-outcome flags (requires target)."""
        if self.target is None:
            raise ValidationError("no target designated")
        col = self.columns[self.target]
        return np.array([c == self.positive_label for c in col], dtype=bool)


# ---------------------------------------------------------------------------
# inference and CSV io


def infer_kind(cells, threshold: int = DEFAULT_KIND_THRESHOLD, name: str = "") -> str:
    """Classify raw string cells as numeric or categorical.

    Numeric iff every non-missing cell parses as a decimal number and the
    distinct non-missing count exceeds `threshold`.
    """
    non_missing = [c for c in cells if c is not None]
    if not non_missing:
        raise SchemaError(f"column {name!r} has no non-missing values")
    parsed = []
    for c in non_missing:
        try:
            v = float(c)
        except (TypeError, ValueError):
            return CATEGORICAL
        if not math.isfinite(v):
            return CATEGORICAL
        parsed.append(v)
    if len(set(parsed)) > threshold:
        return NUMERIC
    return CATEGORICAL


def load_csv(source, kind_threshold: int = DEFAULT_KIND_THRESHOLD) -> DataTable:
    """Parse a CSV byte stream (or bytes/str) into a DataTable.

    The first record must be a header of unique names; "" and "NA" count as
    missing. No target is designated yet.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDatasetError("empty CSV: no header row") from None
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise SchemaError(f"duplicate header name(s): {', '.join(dupes)}")
    width = len(header)
    rows = []
    for i, record in enumerate(reader):
        if len(record) != width:
            raise CsvStructureError(
                f"row {i} has {len(record)} fields, expected {width}", row_index=i)
        rows.append([None if cell in MISSING_MARKERS else cell for cell in record])
    if not rows:
        raise EmptyDatasetError("CSV has a header but no data rows")
    raw_columns = {h: [r[j] for r in rows] for j, h in enumerate(header)}
    kinds = {h: infer_kind(raw_columns[h], kind_threshold, name=h) for h in header}
    columns = {}
    for h in header:
        if kinds[h] == NUMERIC:
            columns[h] = [None if c is None else float(c) for c in raw_columns[h]]
        else:
            columns[h] = raw_columns[h]
    return DataTable.build(header, kinds, columns)


def format_cell(value) -> str:
    """Canonical CSV text for a cell; floats round-trip exactly."""
    if value is None:
        return ""
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 1e16:
            return str(int(value))
        return repr(value)
    return str(value)


def export_csv(table: DataTable) -> bytes:
    """Byte-stable CSV export; load_csv of the result reproduces the cells."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = [s.name for s in table.schema]
    writer.writerow(names)
    cols = [table.columns[n] for n in names]
    for i in range(table.n_rows):
        writer.writerow([format_cell(col[i]) for col in cols])
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# binning and summaries


def _fmt_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e16:
        return str(int(x))
    return f"{x:.6g}"


def bin_numeric(table: DataTable, feature: str, k_max: int = DEFAULT_MAX_BINS) -> BinSpec:
    """Square-root rule: k = min(ceil(sqrt(n_non_missing)), k_max) equal-width
    bins over [min, max]; the last bin is right-closed."""
    schema = table.column_schema(feature)
    if schema.kind != NUMERIC:
        raise ValidationError(f"feature {feature!r} is not numeric")
    values = [v for v in table.columns[feature] if v is not None]
    n = len(values)
    lo, hi = schema.min, schema.max
    if lo == hi:
        return BinSpec(feature, (lo, hi), (_fmt_number(lo),))
    k = min(math.ceil(math.sqrt(n)), k_max)
    edges = np.linspace(lo, hi, k + 1)
    edges[0], edges[-1] = lo, hi
    labels = []
    fmt = _fmt_number
    for attempt in range(2):
        labels = []
        for i in range(k):
            close = "]" if i == k - 1 else ")"
            labels.append(f"[{fmt(edges[i])}, {fmt(edges[i + 1])}{close}")
        if len(set(labels)) == k:
            break
        fmt = repr  # ultra-narrow ranges: fall back to exact floats
    return BinSpec(feature, tuple(float(e) for e in edges), tuple(labels))


def group_labels(table: DataTable, feature: str, k_max: int = DEFAULT_MAX_BINS):
    """Ordered group labels for a feature: category values or bin labels."""
    schema = table.column_schema(feature)
    if schema.kind == CATEGORICAL:
        return list(schema.distinct_values)
    return list(bin_numeric(table, feature, k_max).labels)


def group_indices(table: DataTable, feature: str, k_max: int = DEFAULT_MAX_BINS):
    """Map group label -> list of row indices (missing cells in no group)."""
    schema = table.column_schema(feature)
    cells = table.columns[feature]
    if schema.kind == CATEGORICAL:
        groups = {label: [] for label in schema.distinct_values}
        for i, c in enumerate(cells):
            if c is not None:
                groups[c].append(i)
        return groups
    spec = bin_numeric(table, feature, k_max)
    groups = {label: [] for label in spec.labels}
    for i, c in enumerate(cells):
        if c is not None:
            groups[spec.label_of(c)].append(i)
    return groups


def summarize_feature(table: DataTable, feature: str, predictions=None,
                      k_max: int = DEFAULT_MAX_BINS) -> FeatureSummary:
    """Per-group counts and acceptance rates for one feature.

    Acceptance comes from the recorded target, or from `predictions`
    (per-row positive flags) for the model view.
    """
    if predictions is not None:
        positive = np.asarray(predictions, dtype=bool)
        if len(positive) != table.n_rows:
            raise ValidationError("predictions length does not match row count")
    else:
        positive = table.positives()
    groups = []
    for label, idx in group_indices(table, feature, k_max).items():
        count = len(idx)
        pos = int(positive[idx].sum()) if count else 0
        rate = pos / count if count else None
        groups.append((label, count, pos, rate))
    overall = float(positive.sum()) / table.n_rows
    return FeatureSummary(feature, tuple(groups), overall)


def filter_rows(table: DataTable, constraints, k_max: int = DEFAULT_MAX_BINS):
    """Row indices satisfying all constraints, in original order.

    A constraint is (feature, value): for categorical features the value is a
    category label; for numeric features either a bin label of the feature's
    default BinSpec or an inclusive (lo, hi) range.
    """
    keep = list(range(table.n_rows))
    for feature, value in constraints:
        schema = table.column_schema(feature)
        cells = table.columns[feature]
        if schema.kind == CATEGORICAL:
            if value not in schema.distinct_values:
                raise ValidationError(
                    f"value {value!r} not in domain of {feature!r}")
            keep = [i for i in keep if cells[i] == value]
        elif isinstance(value, (tuple, list)) and len(value) == 2:
            lo, hi = float(value[0]), float(value[1])
            keep = [i for i in keep
                    if cells[i] is not None and lo <= cells[i] <= hi]
        else:
            spec = bin_numeric(table, feature, k_max)
            if value not in spec.labels:
                raise ValidationError(
                    f"bin {value!r} not in domain of {feature!r}")
            keep = [i for i in keep
                    if cells[i] is not None and spec.label_of(cells[i]) == value]
    return keep


# ---------------------------------------------------------------------------
# synthetic loan applications
#
# The generator stands in for a proprietary bank dataset: 26 columns (the
# 26th is the binary `result`), complete cells, and a documented linear
# structural-equation core with planted paths
#   citizenship -> credit_risk_level -> result
#   age         -> credit_risk_level -> result
#   net_monthly_income -> result
# so that group-bias and causal-recovery checks have a known ground truth.

# planted SEM coefficients (standardized latent scales)
RISK_CIT_COEF = 1.35       # being foreign raises the risk latent
RISK_AGE_COEF = -0.90      # older applicants score lower risk
RISK_NOISE = 0.70
RISK_CODE_CENTER = 10.5    # 1..20 bank masterscale code = center + scale*latent
RISK_CODE_SCALE = 2.8
RESULT_RISK_COEF = -0.45   # logit units per risk-code unit above center
RESULT_INCOME_COEF = 0.85  # per standard deviation of income
RESULT_INTERCEPT = 0.35


def synth_loans(seed: int, n: int) -> DataTable:
    """Deterministic synthetic loan-application table (26 columns, binary
    `result` with positive label "accepted")."""
    if n < 1:
        raise ValidationError("row count must be >= 1")
    rng = np.random.default_rng(seed)

    age = np.round(rng.uniform(18, 75, n))
    gender = rng.choice(["M", "F"], n, p=[0.52, 0.48])
    citizenship = rng.choice(["national", "foreign"], n, p=[0.72, 0.28])
    marital_status = rng.choice(
        ["single", "married", "divorced", "widowed"], n, p=[0.34, 0.48, 0.13, 0.05])
    region = rng.choice(
        ["north", "centre", "south", "islands"], n, p=[0.40, 0.25, 0.25, 0.10])
    dependents = rng.choice(["0", "1", "2", "3"], n, p=[0.42, 0.27, 0.21, 0.10])
    employment_type = rng.choice(
        ["employee", "self_employed", "retired", "unemployed"], n,
        p=[0.58, 0.22, 0.14, 0.06])

    income_base = {"employee": 2100.0, "self_employed": 2400.0,
                   "retired": 1500.0, "unemployed": 800.0}
    net_monthly_income = np.round(
        np.array([income_base[e] for e in employment_type])
        * np.exp(rng.normal(0.0, 0.35, n)), 2)
    household_income = np.round(
        net_monthly_income * rng.uniform(1.0, 2.2, n) + rng.normal(0, 150, n), 2)
    other_income = np.round(
        np.where(rng.random(n) < 0.25, rng.uniform(50, 900, n), 0.0), 2)
    savings_balance = np.round(np.exp(rng.normal(8.2, 1.1, n)), 2)
    existing_debt = np.round(
        np.where(rng.random(n) < 0.45, np.exp(rng.normal(8.6, 0.9, n)), 0.0), 2)
    insurance = rng.choice(["yes", "no"], n, p=[0.38, 0.62])

    loan_amount = np.round(np.exp(rng.normal(9.4, 0.65, n)), 2)
    loan_purpose = rng.choice(
        ["car", "home", "health", "education", "business"], n,
        p=[0.30, 0.30, 0.15, 0.10, 0.15])
    loan_duration_months = np.round(rng.uniform(6, 120, n))
    interest_rate = np.round(rng.uniform(2.0, 9.0, n), 2)
    monthly_payment = np.round(
        loan_amount / loan_duration_months * (1 + interest_rate / 100.0)
        + rng.normal(0, 12, n), 2)

    years_with_bank = np.round(rng.uniform(0, 30, n))
    prior_loans_count = rng.choice(["0", "1", "2", "3"], n, p=[0.38, 0.32, 0.20, 0.10])
    late_payments_12m = rng.choice(["0", "1", "2"], n, p=[0.78, 0.15, 0.07])
    account_type = rng.choice(["basic", "premium", "private"], n, p=[0.60, 0.30, 0.10])
    aml_check = rng.choice(["passed", "flagged"], n, p=[0.97, 0.03])
    fraud_check = rng.choice(["passed", "flagged"], n, p=[0.985, 0.015])

    # planted SEM: risk code <- citizenship + age, then result <- risk + income
    age_std = (age - 46.5) / 16.4
    risk_latent = (RISK_CIT_COEF * (citizenship == "foreign")
                   + RISK_AGE_COEF * age_std
                   + rng.normal(0.0, RISK_NOISE, n))
    credit_risk_level = np.clip(
        np.round(RISK_CODE_CENTER + RISK_CODE_SCALE * risk_latent), 1, 20)
    income_std = (net_monthly_income - 2000.0) / 900.0
    logit = (RESULT_INTERCEPT
             + RESULT_RISK_COEF * (credit_risk_level - RISK_CODE_CENTER)
             + RESULT_INCOME_COEF * income_std)
    accepted = rng.random(n) < 1.0 / (1.0 + np.exp(-logit))
    result = np.where(accepted, "accepted", "rejected")

    names = ["age", "gender", "citizenship", "marital_status", "region",
             "dependents", "employment_type", "net_monthly_income",
             "household_income", "other_income", "savings_balance",
             "existing_debt", "insurance", "loan_amount", "loan_purpose",
             "loan_duration_months", "interest_rate", "monthly_payment",
             "years_with_bank", "credit_risk_level", "prior_loans_count",
             "late_payments_12m", "account_type", "aml_check", "fraud_check",
             "result"]
    numeric = {"age", "net_monthly_income", "household_income", "other_income",
               "savings_balance", "existing_debt", "loan_amount",
               "loan_duration_months", "interest_rate", "monthly_payment",
               "years_with_bank", "credit_risk_level"}
    data = {
        "age": age, "gender": gender, "citizenship": citizenship,
        "marital_status": marital_status, "region": region,
        "dependents": dependents, "employment_type": employment_type,
        "net_monthly_income": net_monthly_income,
        "household_income": household_income, "other_income": other_income,
        "savings_balance": savings_balance, "existing_debt": existing_debt,
        "insurance": insurance, "loan_amount": loan_amount,
        "loan_purpose": loan_purpose,
        "loan_duration_months": loan_duration_months,
        "interest_rate": interest_rate, "monthly_payment": monthly_payment,
        "years_with_bank": years_with_bank,
        "credit_risk_level": credit_risk_level,
        "prior_loans_count": prior_loans_count,
        "late_payments_12m": late_payments_12m, "account_type": account_type,
        "aml_check": aml_check, "fraud_check": fraud_check,
        "result": result,
    }
    kinds = {name: (NUMERIC if name in numeric else CATEGORICAL) for name in names}
    columns = {}
    for name in names:
        col = data[name]
        if kinds[name] == NUMERIC:
            columns[name] = [float(v) for v in col]
        else:
            columns[name] = [str(v) for v in col]
    return DataTable.build(names, kinds, columns, target="result",
                           positive_label="accepted")
