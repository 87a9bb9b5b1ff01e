"""Feature-combination cards for intersectional subgroup analysis."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .data import DataTable, filter_rows
from .errors import ValidationError

DEFAULT_MAX_CONSTRAINTS = 3


@dataclass(frozen=True)
class Combination:
    """1..K (feature, value-or-bin) constraints over distinct features."""

    constraints: tuple[tuple[str, str], ...]
    max_constraints: int = DEFAULT_MAX_CONSTRAINTS

    def __post_init__(self):
        if not self.constraints:
            raise ValidationError("a combination needs at least one constraint")
        if len(self.constraints) > self.max_constraints:
            raise ValidationError(
                f"at most {self.max_constraints} constraints per combination")
        features = [f for f, _ in self.constraints]
        if len(set(features)) != len(features):
            raise ValidationError("combination features must be distinct")

    @property
    def id(self) -> str:
        canonical = repr(sorted(self.constraints))
        return hashlib.sha1(canonical.encode("utf-8")).hexdigest()[:12]

    def to_json(self) -> dict:
        return {"id": self.id,
                "constraints": [{"feature": f, "value": v}
                                for f, v in self.constraints]}


@dataclass(frozen=True)
class SubgroupCard:
    combination: Combination
    member_count: int
    acceptance_rate: float | None  # None when the subgroup is empty
    unfair: bool = False

    def to_json(self) -> dict:
        out = self.combination.to_json()
        out.update({"count": self.member_count, "rate": self.acceptance_rate,
                    "unfair": self.unfair})
        return out


def build_card(table: DataTable, combination: Combination, *,
               predictions=None, unfair: bool = False,
               min_support: int = 0) -> SubgroupCard:
    """Membership via row filtering; acceptance from recorded outcomes or,
    in the model view, from per-row predicted positive flags."""
    members = filter_rows(table, combination.constraints)
    if min_support and len(members) < min_support:
        return SubgroupCard(combination, len(members), None, unfair)
    if predictions is not None:
        positive = np.asarray(predictions, dtype=bool)
    else:
        positive = table.positives()
    count = len(members)
    rate = float(positive[members].sum()) / count if count else None
    return SubgroupCard(combination, count, rate, unfair)


def order_cards(cards) -> list:
    """Ascending acceptance rate; undefined rates last; ties broken by
    descending member count, then by id."""
    def key(card: SubgroupCard):
        undefined = card.acceptance_rate is None
        return (undefined, card.acceptance_rate if not undefined else 0.0,
                -card.member_count, card.combination.id)
    return sorted(cards, key=key)
