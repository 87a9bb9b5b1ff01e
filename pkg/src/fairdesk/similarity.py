"""Application-to-application similarity (Pearson over encoded rows), the
comparison scatter and side-by-side feature comparison."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .causal import Encoder
from .data import CATEGORICAL, DataTable
from .errors import ValidationError


@dataclass(frozen=True)
class SimilarityPoint:
    row: int
    similarity: float
    x: float              # target-class position (dataset) or signed confidence (model)
    label: str | None     # recorded target (dataset view) or predicted label
    selected: bool = False

    def to_json(self) -> dict:
        return {"id": self.row, "sim": self.similarity, "x": self.x,
                "label": self.label, "selected": self.selected}


@dataclass(frozen=True)
class FeatureScore:
    feature: str
    value_a: object
    value_b: object
    score: float

    def to_json(self) -> dict:
        return {"name": self.feature, "va": self.value_a, "vb": self.value_b,
                "score": self.score}


def row_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation across the two vectors' coordinates; zero-variance
    vectors compare as 1.0 when element-wise equal, else 0.0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError("row vectors must have equal dimension")
    if a.size < 2:
        raise ValidationError("row vectors need at least 2 coordinates")
    da = a - a.mean()
    db = b - b.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va == 0.0 or vb == 0.0:
        return 1.0 if np.array_equal(a, b) else 0.0
    return float(np.clip((da @ db) / np.sqrt(va * vb), -1.0, 1.0))


class SimilarityIndex:
    """Precomputed encoded rows for one table (target and derived columns
    excluded, missing cells mean-imputed), for O(n·d) scatter queries."""

    def __init__(self, table: DataTable):
        features = table.feature_names(include_target=False,
                                       include_derived=False)
        self.table = table
        self.encoder = Encoder(table, features)
        rows = []
        for i in range(table.n_rows):
            vec, _ = self.encoder.encode_row(table, i)
            rows.append(vec)
        self.vectors = np.vstack(rows)

    def similarities_to(self, row: int) -> np.ndarray:
        """Pearson similarity of every row against the selected one."""
        if not 0 <= row < self.table.n_rows:
            raise ValidationError(f"unknown row id {row}")
        V = self.vectors
        sel = V[row]
        centered = V - V.mean(axis=1, keepdims=True)
        sel_c = sel - sel.mean()
        norms = np.sqrt((centered * centered).sum(axis=1))
        sel_norm = float(np.sqrt(sel_c @ sel_c))
        out = np.zeros(len(V))
        if sel_norm == 0.0:
            for i in range(len(V)):
                out[i] = 1.0 if np.array_equal(V[i], sel) else 0.0
            return out
        nonzero = norms > 0
        out[nonzero] = (centered[nonzero] @ sel_c) / (norms[nonzero] * sel_norm)
        # zero-variance rows match only if element-wise equal
        for i in np.flatnonzero(~nonzero):
            out[i] = 1.0 if np.array_equal(V[i], sel) else 0.0
        return np.clip(out, -1.0, 1.0)


def _jitter(row: int) -> float:
    """Deterministic per-row horizontal jitter in [-0.3, 0.3]."""
    state = (1103515245 * (row + 12345) + 54321) % (1 << 31)
    return (state / float(1 << 31) - 0.5) * 0.6


def scatter(index: SimilarityIndex, selected: int, view: str = "dataset",
            predictions=None) -> list[SimilarityPoint]:
    """All applications vs the selected one.

    Dataset view: x is the recorded target class (0/1 columns with
    deterministic jitter). Model view: x is prediction confidence signed by
    the predicted class, so |x| equals the model confidence.
    """
    table = index.table
    sims = index.similarities_to(selected)
    points = []
    if view == "dataset":
        positives = table.positives()
        for i in range(table.n_rows):
            x = float(int(positives[i])) + _jitter(i)
            points.append(SimilarityPoint(i, float(sims[i]), x,
                                          table.columns[table.target][i],
                                          i == selected))
        return points
    if predictions is None:
        raise ValidationError("model view needs per-row predictions")
    for i in range(table.n_rows):
        pred = predictions[i]
        if pred.defined:
            direction = 1.0 if pred.label == table.positive_label else -1.0
            x = direction * pred.confidence
        else:
            x = 0.0
        points.append(SimilarityPoint(i, float(sims[i]), x,
                                      pred.label, i == selected))
    return points


def compare_pair(table: DataTable, row_a: int, row_b: int) -> list[FeatureScore]:
    """Side-by-side feature comparison ordered least similar first.

    Numeric score: 1 - |a-b| / (column max - min), constant columns score 1;
    categorical score: exact match. A one-sided missing cell scores 0, both
    missing scores 1.
    """
    for row in (row_a, row_b):
        if not 0 <= row < table.n_rows:
            raise ValidationError(f"unknown row id {row}")
    scores = []
    for schema in table.schema:
        if schema.name == table.target:
            continue
        va = table.columns[schema.name][row_a]
        vb = table.columns[schema.name][row_b]
        if va is None and vb is None:
            score = 1.0
        elif va is None or vb is None:
            score = 0.0
        elif schema.kind == CATEGORICAL:
            score = 1.0 if va == vb else 0.0
        else:
            spread = schema.max - schema.min
            score = 1.0 if spread == 0 else 1.0 - abs(va - vb) / spread
        scores.append(FeatureScore(schema.name, va, vb, float(score)))
    order = {s.name: i for i, s in enumerate(table.schema)}
    return sorted(scores, key=lambda s: (s.score, order[s.feature]))
