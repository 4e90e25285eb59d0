"""System Usability Scale scoring."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field

QUESTIONS = tuple(f"q{i}" for i in range(1, 11))
GROUP_KEYS = ("age", "gender", "profession", "country")


@dataclass(frozen=True)
class SusResponse:
    """Ten answers on a 1-5 scale, Q1 first, plus optional demographics."""

    answers: tuple
    demographics: dict = field(default_factory=dict)

    def __post_init__(self):
        answers = tuple(self.answers)
        if len(answers) != 10:
            raise ValueError(f"SUS needs 10 answers, got {len(answers)}")
        for i, a in enumerate(answers, 1):
            if isinstance(a, bool) or int(a) != a or not 1 <= a <= 5:
                raise ValueError(f"answer to Q{i} must be an integer in 1..5, got {a!r}")
        object.__setattr__(self, "answers", tuple(int(a) for a in answers))


def sus_score(r) -> float:
    """2.5 x [sum over odd items of (a - 1) + sum over even items of (5 - a)]."""
    if not isinstance(r, SusResponse):
        r = SusResponse(tuple(r))
    a = r.answers
    odd = sum(a[i] - 1 for i in range(0, 10, 2))
    even = sum(5 - a[i] for i in range(1, 10, 2))
    return 2.5 * (odd + even)


def aggregate(responses, group_by: str | None = None) -> dict:
    """Overall mean score and, with ``group_by``, the mean per group value."""
    responses = list(responses)
    if not responses:
        raise ValueError("no responses")
    scores = [sus_score(r) for r in responses]
    out = {"n": len(scores), "overall": sum(scores) / len(scores)}
    if group_by is not None:
        if group_by not in GROUP_KEYS:
            raise ValueError(f"group_by must be one of {GROUP_KEYS}")
        groups = defaultdict(list)
        for r, s in zip(responses, scores):
            groups[str(r.demographics.get(group_by, "unknown"))].append(s)
        out["group_by"] = group_by
        out["groups"] = {g: sum(v) / len(v) for g, v in sorted(groups.items())}
    return out


def read_responses(path) -> list:
    """Responses from a CSV with header ``q1..q10`` plus optional demographic columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip().lower() for h in (reader.fieldnames or [])]
        missing = [q for q in QUESTIONS if q not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        out = []
        for line, row in enumerate(reader, 2):
            row = {k.strip().lower(): v for k, v in row.items()}
            try:
                answers = tuple(int(row[q]) for q in QUESTIONS)
            except ValueError as exc:
                raise ValueError(f"{path}:{line}: {exc}") from exc
            demo = {k: row[k] for k in GROUP_KEYS if k in row}
            out.append(SusResponse(answers, demo))
    return out
