"""Group-fairness metric suite: statistical parity difference, disparate
impact, equal-opportunity difference, average odds difference and the Theil
index, plus the per-feature rate range behind the graph mini-bars."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataTable, group_indices, summarize_feature
from .errors import ValidationError

SPD = "SPD"
EQ_OPP_DIFF = "EqOppDiff"
AVG_ODDS_DIFF = "AvgOddsDiff"
DISPARATE_IMPACT = "DisparateImpact"
THEIL = "Theil"

ALL_KINDS = (SPD, EQ_OPP_DIFF, AVG_ODDS_DIFF, DISPARATE_IMPACT, THEIL)
#: Metrics that need model predictions in addition to recorded labels.
MODEL_ONLY_KINDS = (EQ_OPP_DIFF, AVG_ODDS_DIFF, THEIL)

DATASET_VIEW = "dataset"
MODEL_VIEW = "model"


@dataclass(frozen=True)
class GroupSpec:
    """Privileged value set of one feature; the complement is unprivileged.

    Values are category labels or bin labels, matching group_indices keys.
    """

    feature: str
    privileged: frozenset

    def __post_init__(self):
        if not self.privileged:
            raise ValidationError("privileged set must be non-empty")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def size(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def tpr(self) -> float | None:
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    def fpr(self) -> float | None:
        neg = self.fp + self.tn
        return self.fp / neg if neg else None


@dataclass(frozen=True)
class MetricValue:
    kind: str
    scope: str  # feature name or "model"
    value: float | None
    defined: bool
    view: str
    reason: str | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "scope": self.scope,
            "value": self.value,
            "defined": self.defined,
            "view": self.view,
            "reason": self.reason,
        }


def _undefined(kind, scope, view, reason):
    return MetricValue(kind, scope, None, False, view, reason)


def positive_rate(outcomes, members) -> float | None:
    """Fraction of positive outcomes among the member rows; None if empty."""
    members = list(members)
    if not members:
        return None
    outcomes = np.asarray(outcomes, dtype=bool)
    return float(outcomes[members].sum()) / len(members)


def split_by_group(table: DataTable, group: GroupSpec, k_max: int = 10):
    """(privileged row indices, unprivileged row indices) for a GroupSpec."""
    groups = group_indices(table, group.feature, k_max)
    unknown = set(group.privileged) - set(groups)
    if unknown:
        raise ValidationError(
            f"privileged values {sorted(unknown)} not in domain of {group.feature!r}")
    if set(group.privileged) >= set(groups):
        raise ValidationError("privileged set must be a proper subset of the domain")
    priv, unpriv = [], []
    for label, idx in groups.items():
        (priv if label in group.privileged else unpriv).extend(idx)
    return sorted(priv), sorted(unpriv)


def default_privileged(table: DataTable, feature: str, k_max: int = 10) -> frozenset:
    """Default privileged designation: the single group with the highest
    recorded acceptance rate (one-vs-rest for multi-valued features)."""
    summary = summarize_feature(table, feature, k_max=k_max)
    best, best_rate = None, -1.0
    for label, count, _pos, rate in summary.groups:
        if count and rate is not None and rate > best_rate:
            best, best_rate = label, rate
    if best is None:
        raise ValidationError(f"feature {feature!r} has no populated groups")
    return frozenset({best})


def spd_from_sets(outcomes, priv, unpriv, scope, view=DATASET_VIEW) -> MetricValue:
    rate_p = positive_rate(outcomes, priv)
    rate_u = positive_rate(outcomes, unpriv)
    if rate_p is None or rate_u is None:
        return _undefined(SPD, scope, view, "a group is empty")
    return MetricValue(SPD, scope, rate_u - rate_p, True, view)


def spd(outcomes, table: DataTable, group: GroupSpec, view=DATASET_VIEW) -> MetricValue:
    """Statistical parity difference: rate(unprivileged) - rate(privileged)."""
    priv, unpriv = split_by_group(table, group)
    return spd_from_sets(outcomes, priv, unpriv, group.feature, view)


def disparate_impact_from_sets(outcomes, priv, unpriv, scope,
                               view=DATASET_VIEW) -> MetricValue:
    rate_p = positive_rate(outcomes, priv)
    rate_u = positive_rate(outcomes, unpriv)
    if rate_p is None or rate_u is None:
        return _undefined(DISPARATE_IMPACT, scope, view, "a group is empty")
    if rate_p == 0:
        return _undefined(DISPARATE_IMPACT, scope, view,
                          "privileged positive rate is zero")
    return MetricValue(DISPARATE_IMPACT, scope, rate_u / rate_p, True, view)


def disparate_impact(outcomes, table: DataTable, group: GroupSpec,
                     view=DATASET_VIEW) -> MetricValue:
    """Rate ratio rate(unprivileged) / rate(privileged)."""
    priv, unpriv = split_by_group(table, group)
    return disparate_impact_from_sets(outcomes, priv, unpriv, group.feature, view)


def spd_range(table: DataTable, feature: str, predictions=None,
              k_max: int = 10) -> float:
    """Max minus min group acceptance rate over the feature's values/bins.

    This is the 0-to-1 mini-bar length shown on graph nodes; empty groups
    are skipped and a single-group feature yields 0.
    """
    summary = summarize_feature(table, feature, predictions, k_max)
    rates = [g[3] for g in summary.groups if g[1] > 0]
    if len(rates) < 2:
        return 0.0
    return max(rates) - min(rates)


def confusion(predictions, labels, members) -> ConfusionCounts:
    predictions = np.asarray(predictions, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    idx = np.asarray(list(members), dtype=int)
    if idx.size == 0:
        return ConfusionCounts()
    p, y = predictions[idx], labels[idx]
    return ConfusionCounts(
        tp=int((p & y).sum()),
        fp=int((p & ~y).sum()),
        tn=int((~p & ~y).sum()),
        fn=int((~p & y).sum()),
    )


def equal_opportunity_diff_from_sets(predictions, labels, priv, unpriv,
                                     scope) -> MetricValue:
    tpr_p = confusion(predictions, labels, priv).tpr()
    tpr_u = confusion(predictions, labels, unpriv).tpr()
    if tpr_p is None or tpr_u is None:
        return _undefined(EQ_OPP_DIFF, scope, MODEL_VIEW,
                          "a group has no actual positives")
    return MetricValue(EQ_OPP_DIFF, scope, tpr_u - tpr_p, True, MODEL_VIEW)


def equal_opportunity_diff(predictions, labels, table: DataTable,
                           group: GroupSpec) -> MetricValue:
    """TPR(unprivileged) - TPR(privileged) on aligned predictions/labels."""
    priv, unpriv = split_by_group(table, group)
    return equal_opportunity_diff_from_sets(predictions, labels, priv, unpriv,
                                            group.feature)


def average_odds_diff_from_sets(predictions, labels, priv, unpriv,
                                scope) -> MetricValue:
    cp, cu = confusion(predictions, labels, priv), confusion(predictions, labels, unpriv)
    parts = (cp.tpr(), cu.tpr(), cp.fpr(), cu.fpr())
    if any(p is None for p in parts):
        return _undefined(AVG_ODDS_DIFF, scope, MODEL_VIEW,
                          "a group lacks actual positives or negatives")
    tpr_p, tpr_u, fpr_p, fpr_u = parts
    value = 0.5 * ((fpr_u - fpr_p) + (tpr_u - tpr_p))
    return MetricValue(AVG_ODDS_DIFF, scope, value, True, MODEL_VIEW)


def average_odds_diff(predictions, labels, table: DataTable,
                      group: GroupSpec) -> MetricValue:
    """Mean of the FPR and TPR differences between unprivileged and privileged."""
    priv, unpriv = split_by_group(table, group)
    return average_odds_diff_from_sets(predictions, labels, priv, unpriv,
                                       group.feature)


def theil_index(predictions, labels) -> MetricValue:
    """Generalized-entropy index over per-row benefits b = yhat - y + 1.

    Zero exactly when all benefits are equal; 0*ln(0) is taken as 0.
    """
    predictions = np.asarray(predictions, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    n = len(predictions)
    if n == 0:
        return _undefined(THEIL, "model", MODEL_VIEW, "no rows")
    b = predictions.astype(float) - labels.astype(float) + 1.0
    mu = b.mean()
    if mu == 0.0:
        return MetricValue(THEIL, "model", 0.0, True, MODEL_VIEW)
    r = b / mu
    terms = np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0)
    return MetricValue(THEIL, "model", float(terms.mean()), True, MODEL_VIEW)


def metric_suite(table: DataTable, feature: str, chosen, *, view=DATASET_VIEW,
                 privileged=None, predictions=None, labels=None,
                 member_rows=None) -> list[MetricValue]:
    """Evaluate the chosen metric kinds for one feature.

    Dataset view computes SPD and disparate impact from recorded outcomes;
    the confusion-based metrics and Theil need model predictions and are
    returned undefined in dataset view. In model view, `predictions` and
    `labels` are aligned per-row flags for `member_rows` (defaults to all
    rows of the table).
    """
    unknown = [k for k in chosen if k not in ALL_KINDS]
    if unknown:
        raise ValidationError(f"unknown metric kind(s): {', '.join(map(str, unknown))}")
    group = GroupSpec(feature, frozenset(privileged) if privileged
                      else default_privileged(table, feature))
    out = []
    if view == DATASET_VIEW:
        outcomes = table.positives()
        for kind in chosen:
            if kind == SPD:
                out.append(spd(outcomes, table, group))
            elif kind == DISPARATE_IMPACT:
                out.append(disparate_impact(outcomes, table, group))
            else:
                out.append(_undefined(kind, "model" if kind == THEIL else feature,
                                      DATASET_VIEW, "requires model view"))
        return out
    if predictions is None or labels is None:
        raise ValidationError("model view needs predictions and labels")
    member_rows = list(member_rows) if member_rows is not None else list(range(table.n_rows))
    pred = np.asarray(predictions, dtype=bool)
    lab = np.asarray(labels, dtype=bool)
    if len(pred) != len(member_rows) or len(lab) != len(member_rows):
        raise ValidationError("predictions/labels must align with member_rows")
    # group membership comes from the full table's domains/bins, then is
    # re-indexed into positions within member_rows
    position = {row: i for i, row in enumerate(member_rows)}
    priv_rows, unpriv_rows = split_by_group(table, group)
    priv = [position[r] for r in priv_rows if r in position]
    unpriv = [position[r] for r in unpriv_rows if r in position]
    for kind in chosen:
        if kind == SPD:
            out.append(spd_from_sets(pred, priv, unpriv, feature, MODEL_VIEW))
        elif kind == DISPARATE_IMPACT:
            out.append(disparate_impact_from_sets(pred, priv, unpriv, feature,
                                                  MODEL_VIEW))
        elif kind == EQ_OPP_DIFF:
            out.append(equal_opportunity_diff_from_sets(pred, lab, priv, unpriv, feature))
        elif kind == AVG_ODDS_DIFF:
            out.append(average_odds_diff_from_sets(pred, lab, priv, unpriv, feature))
        elif kind == THEIL:
            out.append(theil_index(pred, lab))
    return out
