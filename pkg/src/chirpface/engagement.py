"""Rule-based engagement indicator and score from a stream of predicted expressions.

Counts are indexed Happy=0, SadNeutral=1, Angry=2, Surprise=3, and each
genre id points at its matching expression (comedy=0, tragedy=1, anger=2,
horror=3).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from chirpface.labels import ExpressionLabel

NEUTRAL = int(ExpressionLabel.SAD_NEUTRAL)
CHANGE_RATE = 0.3


class Genre(enum.Enum):
    COMEDY = 0
    TRAGEDY = 1
    ANGER = 2
    HORROR = 3
    MIXED = "mixed"

    @classmethod
    def parse(cls, value) -> "Genre":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key.isdigit():
                return cls(int(key))
            try:
                return cls[key.upper()]
            except KeyError:
                raise ValueError(f"unknown genre {value!r}") from None
        return cls(value)


@dataclass(frozen=True)
class SessionStats:
    """Expression counts ``E``, change count ``R`` and content length ``l`` (minutes)."""

    E: tuple
    R: int
    length_min: float

    def __post_init__(self):
        E = tuple(int(v) for v in self.E)
        if len(E) != 4 or any(v < 0 for v in E):
            raise ValueError("E holds four non-negative counts")
        if self.R < 0:
            raise ValueError("R must be non-negative")
        if not (math.isfinite(self.length_min) and self.length_min > 0):
            raise ValueError("content length must be positive")
        object.__setattr__(self, "E", E)

    @classmethod
    def from_labels(cls, labels: Sequence, length_min: float) -> "SessionStats":
        labs = [int(ExpressionLabel.parse(v)) for v in labels]
        E = np.bincount(labs, minlength=4)
        return cls(tuple(E.tolist()), change_count(labs), length_min)


@dataclass(frozen=True)
class EngagementReport:
    indicator: Optional[bool]
    rule_fired: int
    score: Optional[float]
    distribution: list
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"indicator": self.indicator, "score": self.score, "rule_fired": self.rule_fired,
                "distribution": self.distribution, "flags": self.flags}


def change_count(labels: Sequence) -> int:
    """Number of adjacent pairs whose labels differ."""
    labs = [int(ExpressionLabel.parse(v)) for v in labels]
    if not labs:
        raise ValueError("empty label stream")
    a = np.asarray(labs)
    return int(np.count_nonzero(a[1:] != a[:-1]))


def dominant_expression(E: Sequence[int], k: Optional[int] = None) -> int:
    """Index of the largest count.

    On ties the genre's own expression wins if it is among the leaders,
    then neutral, then the lowest index.
    """
    E = list(E)
    top = max(E)
    leaders = [i for i, v in enumerate(E) if v == top]
    if k is not None and k in leaders:
        return k
    if NEUTRAL in leaders:
        return NEUTRAL
    return leaders[0]


def indicator(stats: SessionStats, genre) -> tuple:
    """``(indicator, rule)``; rules are tried in order 1, 2, 3 with 4 the fallback.

    Mixed content yields ``(None, 5)``.
    """
    g = Genre.parse(genre)
    if g is Genre.MIXED:
        return None, 5
    k = g.value
    E = stats.E
    top = dominant_expression(E, k)
    if top == k:
        return True, 1
    if top == NEUTRAL:
        if k == NEUTRAL:
            baseline = sum(E) / 4.0
        else:
            baseline = (E[0] + E[2] + E[3]) / 3.0
        if E[k] > baseline:
            return True, 2
        if stats.R > CHANGE_RATE * stats.length_min:
            return True, 3
    return False, 4


def score(stats: SessionStats, genre) -> tuple:
    """``(percent, degenerate)``: share of the genre's expression.

    Tragedy divides by all counts, other genres by the non-neutral counts.
    An empty denominator gives ``(0.0, True)``.
    """
    g = Genre.parse(genre)
    if g is Genre.MIXED:
        raise ValueError("mixed genre has no single score; use mixed_distribution")
    k = g.value
    E = stats.E
    denom = sum(E) if k == NEUTRAL else E[0] + E[2] + E[3]
    if denom == 0:
        return 0.0, True
    return min(100.0, max(0.0, 100.0 * E[k] / denom)), False


def mixed_distribution(stats: SessionStats) -> list:
    total = sum(stats.E)
    if total == 0:
        raise ValueError("no expressions observed")
    return [100.0 * v / total for v in stats.E]


def report(stats: SessionStats, genre) -> EngagementReport:
    g = Genre.parse(genre)
    flags = []
    ind, rule = indicator(stats, g)
    try:
        dist = mixed_distribution(stats)
    except ValueError:
        dist = [0.0] * 4
        flags.append("empty_session")
    if g is Genre.MIXED:
        return EngagementReport(None, rule, None, dist, flags)
    pct, degenerate = score(stats, g)
    if degenerate:
        flags.append("degenerate_session")
    return EngagementReport(ind, rule, pct, dist, flags)
