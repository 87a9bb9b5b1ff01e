"""Decision-model audit: stratified split, L2-regularized logistic training,
per-row predictions with confidence, feature importance and signed
weight-times-value contributions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .causal import Encoder
from .data import DataTable
from .errors import ValidationError


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    test_fraction: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValidationError("test_fraction must be in (0, 1)")


def split(table: DataTable, spec: SplitSpec):
    """Deterministic stratified split into (train indices, test indices)."""
    outcomes = table.positives()
    rng = np.random.default_rng(spec.seed)
    train, test = [], []
    for positive in (False, True):
        members = np.flatnonzero(outcomes == positive)
        if len(members) < 2:
            raise ValidationError(
                "each target class needs at least 2 rows to split")
        shuffled = members[rng.permutation(len(members))]
        n_test = int(round(len(members) * spec.test_fraction))
        n_test = min(max(n_test, 1), len(members) - 1)
        test.extend(shuffled[:n_test].tolist())
        train.extend(shuffled[n_test:].tolist())
    return sorted(train), sorted(test)


@dataclass(frozen=True)
class ModelArtifact:
    weights: np.ndarray          # per encoded column
    intercept: float
    encoder: Encoder             # standardization + encoding map
    l2: float
    iterations: int
    final_loss: float
    converged: bool
    feature_columns: tuple[str, ...]  # original features used

    def weight_by_column(self) -> dict:
        return {c.name: float(w) for c, w in zip(self.encoder.columns, self.weights)}

    def to_json(self) -> dict:
        return {
            "weights": self.weight_by_column(),
            "intercept": self.intercept,
            "standardization": {
                c.name: {"mean": c.mean, "std": c.std} for c in self.encoder.columns},
            "meta": {"l2": self.l2, "iterations": self.iterations,
                     "final_loss": self.final_loss, "converged": self.converged},
        }


@dataclass(frozen=True)
class Prediction:
    row: int
    p: float | None
    label: str | None
    confidence: float | None
    defined: bool

    def to_json(self) -> dict:
        return {"row": self.row, "p": self.p, "label": self.label,
                "confidence": self.confidence, "defined": self.defined}


@dataclass(frozen=True)
class FeatureContribution:
    feature: str
    value: object            # raw cell value
    contribution: float
    sign: str                # "positive" | "negative" | "zero"
    depth: float             # |c| / max |c| within the row


@dataclass(frozen=True)
class ContributionRow:
    row: int
    intercept: float
    logit: float
    items: tuple[FeatureContribution, ...]


def logistic_loss(w_full: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float):
    """(mean logistic loss + (l2/2)‖w‖², gradient); the intercept is the
    last coordinate and is not regularized."""
    n = X.shape[0]
    w, b = w_full[:-1], w_full[-1]
    z = X @ w + b
    # log(1 + exp(z)) - y z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    p = _sigmoid(z)
    resid = (p - y) / n
    grad_w = X.T @ resid + l2 * w
    grad_b = float(resid.sum())
    loss += 0.5 * l2 * float(w @ w)
    return loss, np.append(grad_w, grad_b)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def train_logistic(table: DataTable, rows=None, *, l2: float = 1e-4,
                   tol: float = 1e-8, max_iter: int = 500,
                   feature_columns=None) -> ModelArtifact:
    """Damped-Newton fit of an L2-regularized logistic model on the encoded
    features (target excluded). Deterministic from zero initialization."""
    if table.target is None:
        raise ValidationError("no target designated")
    if feature_columns is None:
        feature_columns = table.feature_names(include_target=False,
                                              include_derived=False)
    sub = table if rows is None else _take_rows(table, rows)
    encoder = Encoder(sub, feature_columns)
    X = encoder.matrix().X
    y = sub.positives()[list(encoder.row_ids)].astype(float)
    n, d = X.shape
    w = np.zeros(d + 1)
    loss, grad = logistic_loss(w, X, y, l2)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if float(np.abs(grad).max()) <= tol:
            converged = True
            break
        p = _sigmoid(X @ w[:-1] + w[-1])
        s = np.maximum(p * (1.0 - p), 1e-12)
        Xb = np.hstack([X, np.ones((n, 1))])
        H = (Xb * s[:, None]).T @ Xb / n
        H[np.arange(d), np.arange(d)] += l2
        H[np.arange(d + 1), np.arange(d + 1)] += 1e-10  # keep H factorizable
        direction = np.linalg.solve(H, grad)
        step = 1.0
        while step > 1e-12:
            cand = w - step * direction
            cand_loss, cand_grad = logistic_loss(cand, X, y, l2)
            if cand_loss <= loss - 1e-4 * step * float(grad @ direction):
                w, loss, grad = cand, cand_loss, cand_grad
                break
            step *= 0.5
        else:
            break  # line search exhausted: numerically converged
    return ModelArtifact(w[:-1].copy(), float(w[-1]), encoder, l2, it, loss,
                         converged or float(np.abs(grad).max()) <= 1e-4,
                         tuple(feature_columns))


def _take_rows(table: DataTable, rows) -> DataTable:
    names = [s.name for s in table.schema]
    kinds = {s.name: s.kind for s in table.schema}
    columns = {n: [table.columns[n][i] for i in rows] for n in names}
    return DataTable.build(names, kinds, columns, table.target,
                           table.positive_label, table.derived)


def predict(model: ModelArtifact, table: DataTable, row: int) -> Prediction:
    """p = sigmoid(w·x + b) on the standardized encoding; confidence
    |2p - 1|. Rows missing any used feature are undefined."""
    for feature in model.feature_columns:
        if table.columns[feature][row] is None:
            return Prediction(row, None, None, None, False)
    vec, _ = model.encoder.encode_row(table, row)
    p = float(_sigmoid(model.weights @ vec + model.intercept))
    labels = table.column_schema(table.target).distinct_values
    negative = labels[0] if labels[1] == table.positive_label else labels[1]
    label = table.positive_label if p >= 0.5 else negative
    return Prediction(row, p, label, abs(2.0 * p - 1.0), True)


def predict_all(model: ModelArtifact, table: DataTable):
    return [predict(model, table, i) for i in range(table.n_rows)]


def feature_importance(model: ModelArtifact) -> dict:
    """Per-feature max |weight| over its encoded columns, normalized to the
    max raw importance; an all-zero model maps to all zeros."""
    raw = {f: 0.0 for f in model.feature_columns}
    for col, w in zip(model.encoder.columns, model.weights):
        raw[col.feature] = max(raw[col.feature], abs(float(w)))
    top = max(raw.values(), default=0.0)
    if top == 0.0:
        return {f: 0.0 for f in raw}
    return {f: v / top for f, v in raw.items()}


def contributions(model: ModelArtifact, table: DataTable, row: int) -> ContributionRow:
    """Signed per-feature weight*value contributions for one application;
    color depth is |c| normalized within the row."""
    pred = predict(model, table, row)
    if not pred.defined:
        raise ValidationError(f"row {row} has missing cells; no contributions")
    vec, _ = model.encoder.encode_row(table, row)
    per_feature = {f: 0.0 for f in model.feature_columns}
    for j, col in enumerate(model.encoder.columns):
        per_feature[col.feature] += float(model.weights[j] * vec[j])
    top = max((abs(c) for c in per_feature.values()), default=0.0)
    items = []
    for f in model.feature_columns:
        c = per_feature[f]
        sign = "zero" if c == 0 else ("positive" if c > 0 else "negative")
        depth = abs(c) / top if top > 0 else 0.0
        items.append(FeatureContribution(f, table.columns[f][row], c, sign, depth))
    logit = float(model.weights @ vec + model.intercept)
    return ContributionRow(row, model.intercept, logit, tuple(items))
