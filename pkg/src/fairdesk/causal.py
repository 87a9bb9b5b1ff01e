"""Score-based causal structure learning over the encoded feature matrix,
plus aggregation of the learned weights into the feature-level graph that
the UI renders."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .data import CATEGORICAL, NUMERIC, DataTable
from .errors import ValidationError


# ---------------------------------------------------------------------------
# encoding


@dataclass(frozen=True)
class EncodedColumn:
    name: str            # "age" or "gender=M"
    feature: str
    level: str | None    # categorical level, None for numerics
    mean: float
    std: float           # 0 marks a constant column (encoded as all zeros)


@dataclass(frozen=True)
class EncodedMatrix:
    X: np.ndarray                      # rows x encoded columns, standardized
    columns: tuple[EncodedColumn, ...]
    row_ids: tuple[int, ...]           # source rows (missing-free)
    dropped_rows: int

    @property
    def column_map(self) -> dict:
        return {i: c.feature for i, c in enumerate(self.columns)}


class Encoder:
    """Shared standardized encoding: numerics z-scored, categoricals one-hot
    with the first (sorted) level dropped, indicators z-scored.

    Statistics are fitted on rows with no missing cell in any used column,
    so the fitted matrix has exact zero mean and unit variance per column.
    """

    def __init__(self, table: DataTable, columns=None):
        names = columns if columns is not None else [s.name for s in table.schema]
        self.feature_names = list(names)
        used = [table.columns[n] for n in names]
        keep = [i for i in range(table.n_rows)
                if all(col[i] is not None for col in used)]
        if not keep:
            raise ValidationError("no rows without missing values in the used columns")
        self.row_ids = tuple(keep)
        self.dropped_rows = table.n_rows - len(keep)
        cols: list[EncodedColumn] = []
        raw_parts = []
        for name in names:
            schema = table.column_schema(name)
            cells = table.columns[name]
            if schema.kind == NUMERIC:
                raw = np.array([cells[i] for i in keep], dtype=float)
                cols.append(EncodedColumn(name, name, None,
                                          float(raw.mean()), _std(raw)))
                raw_parts.append(raw)
            else:
                for level in schema.distinct_values[1:]:
                    raw = np.array([1.0 if cells[i] == level else 0.0 for i in keep])
                    cols.append(EncodedColumn(f"{name}={level}", name, level,
                                              float(raw.mean()), _std(raw)))
                    raw_parts.append(raw)
        self.columns = tuple(cols)
        Z = np.zeros((len(keep), len(cols)))
        for j, (col, raw) in enumerate(zip(cols, raw_parts)):
            if col.std > 0:
                Z[:, j] = (raw - col.mean) / col.std
        self._matrix = Z

    def matrix(self) -> EncodedMatrix:
        return EncodedMatrix(self._matrix, self.columns, self.row_ids,
                             self.dropped_rows)

    def encode_row(self, table: DataTable, row: int):
        """Standardized vector for one row; missing cells are imputed at the
        column mean (zero in standardized space) and flagged in the mask."""
        vec = np.zeros(len(self.columns))
        imputed = np.zeros(len(self.columns), dtype=bool)
        for j, col in enumerate(self.columns):
            cell = table.columns[col.feature][row]
            if cell is None:
                imputed[j] = True
                continue
            raw = float(cell) if col.level is None else (1.0 if cell == col.level else 0.0)
            if col.std > 0:
                vec[j] = (raw - col.mean) / col.std
        return vec, imputed


def _std(values: np.ndarray) -> float:
    s = float(values.std())
    return s if s > 1e-12 else 0.0


def encode(table: DataTable, columns=None) -> EncodedMatrix:
    """Standardized matrix over all (or the given) columns; rows with any
    missing used cell are dropped and counted."""
    return Encoder(table, columns).matrix()


def same_feature_mask(encoded: EncodedMatrix) -> np.ndarray:
    """Structural zeros between one-hot columns of the same feature; such
    entries are meaningless at the feature level and only distort the fit."""
    feats = [c.feature for c in encoded.columns]
    d = len(feats)
    mask = np.zeros((d, d), dtype=bool)
    for i in range(d):
        for j in range(d):
            if i != j and feats[i] == feats[j]:
                mask[i, j] = True
    return mask


# ---------------------------------------------------------------------------
# acyclicity function and least-squares score


def acyclicity(W: np.ndarray) -> float:
    """h(W) = trace(exp(W∘W)) - d: zero exactly on acyclic weight matrices."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValidationError("weight matrix must be square")
    E = scipy.linalg.expm(W * W)
    return float(np.trace(E)) - W.shape[0]


def acyclicity_grad(W: np.ndarray):
    """(h, dh/dW) with dh/dW = exp(W∘W)ᵀ ∘ 2W."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValidationError("weight matrix must be square")
    E = scipy.linalg.expm(W * W)
    h = float(np.trace(E)) - W.shape[0]
    return h, E.T * (2.0 * W)


def squared_loss(W: np.ndarray, X: np.ndarray):
    """((1/2n)‖X - XW‖_F², gradient) - the structure-learning data term."""
    n = X.shape[0]
    R = X - X @ W
    loss = 0.5 / n * float((R * R).sum())
    grad = -(X.T @ R) / n
    return loss, grad


# ---------------------------------------------------------------------------
# structure learning


@dataclass(frozen=True)
class StructureConfig:
    l1_penalty: float = 0.05
    edge_threshold: float = 0.3
    rho_init: float = 1.0
    rho_mult: float = 10.0
    rho_max: float = 1e16
    alpha_init: float = 0.0
    h_tol: float = 1e-8
    max_outer: int = 100
    inner_tol: float = 1e-6
    max_inner: int = 5000


@dataclass(frozen=True)
class StructureResult:
    W: np.ndarray
    converged: bool
    h: float
    outer_iterations: int


def learn_structure(X, cfg: StructureConfig = StructureConfig(),
                    forbidden=None, on_step=None) -> StructureResult:
    """Minimize (1/2n)‖X - XW‖² + λ‖W‖₁ subject to h(W)=0 by the augmented
    Lagrangian, with a proximal gradient descent (backtracking line search)
    inner solver. Deterministic: zero initialization, fixed schedule.

    `forbidden` is an optional boolean matrix of structural zeros (besides
    the diagonal), e.g. pairs of one-hot columns of the same feature.
    `on_step(phase, objective)` is called after each accepted inner step with
    the composite augmented-Lagrangian objective for that phase.
    """
    if isinstance(X, EncodedMatrix):
        X = X.X
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValidationError("matrix contains non-finite values")
    n, d = X.shape
    C = (X.T @ X) / n  # all loss evaluations go through the d x d Gram matrix
    lam = cfg.l1_penalty
    if forbidden is not None:
        forbidden = np.asarray(forbidden, dtype=bool)
        if forbidden.shape != (d, d):
            raise ValidationError("forbidden mask shape must match the matrix")

    def smooth(W, rho, alpha):
        h, Gh = acyclicity_grad(W)
        R = C @ (W - np.eye(d))
        loss = 0.5 * float(np.trace((np.eye(d) - W).T @ C @ (np.eye(d) - W)))
        val = loss + 0.5 * rho * h * h + alpha * h
        grad = R + (rho * h + alpha) * Gh
        return val, grad, h

    def smooth_val(W, rho, alpha):
        # oversized line-search candidates can overflow expm: treat as +inf
        with np.errstate(over="ignore", invalid="ignore"):
            h = acyclicity(W)
        if not math.isfinite(h):
            return math.inf
        loss = 0.5 * float(np.trace((np.eye(d) - W).T @ C @ (np.eye(d) - W)))
        return loss + 0.5 * rho * h * h + alpha * h

    phase = 0

    def inner_solve(W, rho, alpha):
        W = W.copy()
        step = 1.0
        val, grad, _ = smooth(W, rho, alpha)
        for _ in range(cfg.max_inner):
            while True:
                cand = _soft_threshold(W - step * grad, step * lam)
                np.fill_diagonal(cand, 0.0)
                if forbidden is not None:
                    cand[forbidden] = 0.0
                delta = cand - W
                quad = val + float((grad * delta).sum()) \
                    + 0.5 / step * float((delta * delta).sum())
                cand_val = smooth_val(cand, rho, alpha)
                if cand_val <= quad + 1e-12:
                    break
                step *= 0.5
                if step < 1e-14:
                    return W
            move = float(np.abs(delta).max())
            W = cand
            val, grad, _ = smooth(W, rho, alpha)
            if on_step is not None:
                on_step(phase, val + lam * float(np.abs(W).sum()))
            if move <= cfg.inner_tol:
                break
            step *= 1.5
        return W

    W = np.zeros((d, d))
    rho, alpha = cfg.rho_init, cfg.alpha_init
    h = np.inf
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        W_new, h_new = None, None
        while rho < cfg.rho_max:
            phase += 1
            W_new = inner_solve(W, rho, alpha)
            h_new = acyclicity(W_new)
            if h_new > 0.25 * h:
                rho *= cfg.rho_mult
            else:
                break
        if W_new is None:  # rho exhausted before any solve
            phase += 1
            W_new = inner_solve(W, rho, alpha)
            h_new = acyclicity(W_new)
        W, h = W_new, h_new
        alpha += rho * h
        if h <= cfg.h_tol or rho >= cfg.rho_max:
            break
    return StructureResult(W, bool(h <= cfg.h_tol), float(h), outer)


def _soft_threshold(A: np.ndarray, t: float) -> np.ndarray:
    return np.sign(A) * np.maximum(np.abs(A) - t, 0.0)


# ---------------------------------------------------------------------------
# feature-level graph


@dataclass(frozen=True)
class GraphNode:
    feature: str
    in_degree: int
    out_degree: int
    spd_range: float
    sensitive: bool
    target: bool
    unfair: bool


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    strength: float


@dataclass(frozen=True)
class CausalGraph:
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]
    meta: dict = field(default_factory=dict)

    def node(self, feature: str) -> GraphNode:
        for n in self.nodes:
            if n.feature == feature:
                return n
        raise ValidationError(f"unknown graph node {feature!r}")

    def has_edge(self, src: str, dst: str) -> bool:
        return any(e.src == src and e.dst == dst for e in self.edges)

    def to_json(self) -> dict:
        return {
            "nodes": [{"feature": n.feature, "in_degree": n.in_degree,
                       "out_degree": n.out_degree, "spd_range": n.spd_range,
                       "sensitive": n.sensitive, "target": n.target,
                       "unfair": n.unfair} for n in self.nodes],
            "edges": [{"src": e.src, "dst": e.dst, "strength": e.strength}
                      for e in self.edges],
            "meta": dict(self.meta),
        }


#: Minimum advantage in the noise-homogeneity score before the pairwise
#: orientation test overrides the optimizer's edge direction.
ORIENT_MARGIN = 0.05


def aggregate_to_features(W: np.ndarray, encoded: EncodedMatrix,
                          table: DataTable, omega: float, *,
                          spd_ranges: dict | None = None,
                          sensitive=(), unfair=(), meta=None) -> CausalGraph:
    """Collapse encoded-column weights to feature edges.

    Feature-pair strength is the max absolute weight over the features'
    encoded column pairs; pairs below omega are dropped. Direction comes
    from the optimizer unless the additive-noise test on the raw cells
    clearly disagrees (standardized least squares cannot orient reliably);
    target-adjacent edges always point at the target. Edges are inserted
    strongest first, skipping any that would close a cycle, so the result
    is a DAG.
    """
    features = [s.name for s in table.schema]
    target = table.target
    col_feature = [c.feature for c in encoded.columns]
    strength: dict[tuple[str, str], float] = {}
    d = W.shape[0]
    for i in range(d):
        for j in range(d):
            fa, fb = col_feature[i], col_feature[j]
            if fa == fb:
                continue
            w = abs(float(W[i, j]))
            if w > strength.get((fa, fb), 0.0):
                strength[(fa, fb)] = w
    # collapse ordered pairs to adjacencies at the pair's max strength
    pairs: dict[tuple[str, str], float] = {}
    learned: dict[tuple[str, str], str] = {}
    for (fa, fb), w in strength.items():
        key = (fa, fb) if fa < fb else (fb, fa)
        if w > pairs.get(key, 0.0):
            pairs[key] = w
        rev = strength.get((fb, fa), 0.0)
        if w > rev or (w == rev and fa < fb):
            learned[key] = fa
    oriented: dict[tuple[str, str], float] = {}
    for (fa, fb), w in sorted(pairs.items()):
        if w < omega:
            continue
        if target is not None and target in (fa, fb):
            src = fb if fa == target else fa
            dst = target
        else:
            src = _orient(table, fa, fb, default_src=learned[(fa, fb)])
            dst = fb if src == fa else fa
        key = (src, dst)
        if w > oriented.get(key, 0.0):
            oriented[key] = w
    # strongest-first insertion keeps the feature graph acyclic
    ordered = sorted(oriented.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    adjacency: dict[str, set] = {f: set() for f in features}
    edges = []
    for (fa, fb), w in ordered:
        if _reaches(adjacency, fb, fa):
            continue
        adjacency[fa].add(fb)
        edges.append(GraphEdge(fa, fb, w))
    in_deg = {f: 0 for f in features}
    out_deg = {f: 0 for f in features}
    for e in edges:
        out_deg[e.src] += 1
        in_deg[e.dst] += 1
    spd_ranges = spd_ranges or {}
    sensitive, unfair = set(sensitive), set(unfair)
    nodes = tuple(
        GraphNode(f, in_deg[f], out_deg[f], float(spd_ranges.get(f, 0.0)),
                  f in sensitive, f == target, f in unfair)
        for f in features)
    graph_meta = {"omega": omega, "dropped_rows": encoded.dropped_rows}
    if meta:
        graph_meta.update(meta)
    return CausalGraph(nodes, tuple(edges), graph_meta)


def _orient(table: DataTable, fa: str, fb: str, default_src: str) -> str:
    """Pick the edge source for an adjacent feature pair.

    Additive-noise reasoning: in the causal direction the child's residual
    spread is roughly constant across parent groups, while the anti-causal
    regression is heteroscedastic. The optimizer's direction stands unless
    the score gap is decisive.
    """
    s_ab = _noise_heterogeneity(table, fa, fb)
    s_ba = _noise_heterogeneity(table, fb, fa)
    if s_ab + ORIENT_MARGIN < s_ba:
        return fa
    if s_ba + ORIENT_MARGIN < s_ab:
        return fb
    return default_src


def _noise_heterogeneity(table: DataTable, parent: str, child: str) -> float:
    """Weighted coefficient of variation of the child's conditional variance
    across the parent's groups; near zero means homoscedastic."""
    from .data import group_indices

    child_schema = table.column_schema(child)
    cells = table.columns[child]
    if child_schema.kind == NUMERIC:
        series = [np.array([cells[i] for i in idx if cells[i] is not None])
                  for idx in group_indices(table, parent).values()]
        return _cv_of_group_variances(series)
    scores = []
    for level in child_schema.distinct_values:
        series = [np.array([1.0 if cells[i] == level else 0.0
                            for i in idx if cells[i] is not None])
                  for idx in group_indices(table, parent).values()]
        scores.append(_cv_of_group_variances(series))
    return float(np.mean(scores)) if scores else 0.0


def _cv_of_group_variances(series) -> float:
    counts = np.array([len(s) for s in series if len(s) >= 2], dtype=float)
    if counts.size < 2:
        return 0.0
    variances = np.array([float(s.var()) for s in series if len(s) >= 2])
    total = counts.sum()
    pooled = float((counts * variances).sum() / total)
    if pooled <= 1e-12:
        return 0.0
    spread = math.sqrt(float((counts * (variances - pooled) ** 2).sum() / total))
    return spread / pooled


def _reaches(adjacency: dict, start: str, goal: str) -> bool:
    if start == goal:
        return True
    seen, stack = {start}, [start]
    while stack:
        node = stack.pop()
        for nxt in adjacency.get(node, ()):
            if nxt == goal:
                return True
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def topological_order(graph: CausalGraph):
    """Kahn topological sort; raises if the edge set has a cycle."""
    indeg = {n.feature: 0 for n in graph.nodes}
    out: dict[str, list] = {n.feature: [] for n in graph.nodes}
    for e in graph.edges:
        indeg[e.dst] += 1
        out[e.src].append(e.dst)
    ready = sorted(f for f, k in indeg.items() if k == 0)
    order = []
    while ready:
        f = ready.pop(0)
        order.append(f)
        for nxt in out[f]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
        ready.sort()
    if len(order) != len(graph.nodes):
        raise ValidationError("graph has a cycle")
    return order


def drill_down(graph: CausalGraph, keep) -> CausalGraph:
    """Induced subgraph on keep ∪ {target}; strengths kept, degrees redone."""
    target_features = {n.feature for n in graph.nodes if n.target}
    selected = set(keep) | target_features
    unknown = selected - {n.feature for n in graph.nodes}
    if unknown:
        raise ValidationError(f"unknown feature(s): {', '.join(sorted(unknown))}")
    edges = tuple(e for e in graph.edges
                  if e.src in selected and e.dst in selected)
    in_deg = {f: 0 for f in selected}
    out_deg = {f: 0 for f in selected}
    for e in edges:
        out_deg[e.src] += 1
        in_deg[e.dst] += 1
    nodes = tuple(replace(n, in_degree=in_deg[n.feature],
                          out_degree=out_deg[n.feature])
                  for n in graph.nodes if n.feature in selected)
    return CausalGraph(nodes, edges, dict(graph.meta))
