"""Scoring detected change points against annotator consensus.

Change points are segment positions within a chain (a change at ``t`` means
a new regime starts at sample ``t``). ``pred`` / ``truth`` arguments are
sets of change points without the end sentinel; ``rand_index`` alone takes
full breakpoint lists ending in ``n``.

Metrics that are undefined for a chain (e.g. Hausdorff with no predicted
change point) come back as NaN and are excluded from that metric's
aggregate.
"""

from __future__ import annotations

import json
import math
import statistics
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ParseError, UndefinedMetricError

MARGINS = (1, 2, 4)
NAN = float("nan")


@dataclass
class AnnotationSet:
    chain_id: str
    n: int
    annotators: dict[str, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        for name, marks in self.annotators.items():
            marks = sorted(int(m) for m in marks)
            if len(set(marks)) != len(marks):
                raise ValueError(f"{self.chain_id}: annotator {name} marked an index twice")
            bad = [m for m in marks if not 1 <= m <= self.n - 1]
            if bad:
                raise ValueError(f"{self.chain_id}: annotator {name} has indices outside [1, {self.n - 1}]: {bad}")
            self.annotators[name] = marks


def load_annotations(path) -> dict[str, AnnotationSet]:
    """Read annotation records: one JSON object per line with ``chain_id``,
    ``annotator_id``, ``indices`` and ``n``."""
    sets: dict[str, AnnotationSet] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                chain_id, annotator, n = rec["chain_id"], rec["annotator_id"], int(rec["n"])
                indices = list(rec["indices"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad annotation record ({exc})", line=lineno, path=path) from None
            ann = sets.setdefault(chain_id, AnnotationSet(chain_id, n))
            if ann.n != n:
                raise ParseError(f"chain {chain_id} has conflicting lengths {ann.n} and {n}", line=lineno, path=path)
            if annotator in ann.annotators:
                raise ParseError(f"duplicate annotator {annotator} for chain {chain_id}", line=lineno, path=path)
            try:
                ann.annotators[annotator] = indices
                ann.__post_init__()
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno, path=path) from None
    return sets


def majority_vote(annotations: AnnotationSet, quorum: Optional[int] = None) -> list[int]:
    """Indices marked by at least ``quorum`` annotators (default: a majority,
    ``ceil(k / 2)`` of ``k``)."""
    if quorum is None:
        quorum = math.ceil(len(annotations.annotators) / 2)
    if quorum < 1:
        raise ValueError("quorum must be at least 1")
    votes = Counter(i for marks in annotations.annotators.values() for i in set(marks))
    return sorted(i for i, c in votes.items() if c >= quorum)


def hausdorff(pred: Iterable[int], truth: Iterable[int]) -> float:
    pred, truth = sorted(set(pred)), sorted(set(truth))
    if not pred or not truth:
        return NAN
    fwd = max(min(abs(p - t) for t in truth) for p in pred)
    bwd = max(min(abs(p - t) for p in pred) for t in truth)
    return float(max(fwd, bwd))


def _labels(bkps: Sequence[int], n: int) -> list[int]:
    bkps = sorted(set(int(b) for b in bkps))
    if not bkps or bkps[-1] != n:
        raise ValueError(f"breakpoints must end with the series length {n}")
    labels, start = [], 0
    for k, end in enumerate(bkps):
        labels.extend([k] * (end - start))
        start = end
    return labels


def rand_index(pred: Sequence[int], truth: Sequence[int], n: int) -> float:
    """Fraction of the ``n (n - 1) / 2`` sample pairs on which both
    segmentations agree about "same segment" vs "different segments".

    Computed from the contingency table of segment memberships.
    """
    if n < 2:
        raise UndefinedMetricError("rand index needs at least 2 samples")
    a, b = _labels(pred, n), _labels(truth, n)
    pairs = n * (n - 1) // 2

    def same_pairs(counts):
        return sum(c * (c - 1) // 2 for c in counts)

    both = same_pairs(Counter(zip(a, b)).values())
    in_a = same_pairs(Counter(a).values())
    in_b = same_pairs(Counter(b).values())
    disagree = in_a + in_b - 2 * both
    return (pairs - disagree) / pairs


def match_points(pred: Iterable[int], truth: Iterable[int], margin: int) -> list[tuple[int, int]]:
    """Greedy one-to-one matching, closest pairs first.

    Candidate pairs within ``margin`` are taken in order of distance, then
    predicted index, then true index; a pair is kept when neither side is
    already matched.
    """
    if margin < 0:
        raise ValueError("margin must be non-negative")
    pred, truth = sorted(set(pred)), sorted(set(truth))
    cands = sorted((abs(p - t), p, t) for p in pred for t in truth if abs(p - t) <= margin)
    used_p, used_t, matches = set(), set(), []
    for _, p, t in cands:
        if p in used_p or t in used_t:
            continue
        used_p.add(p)
        used_t.add(t)
        matches.append((p, t))
    return matches


def precision_recall(pred: Iterable[int], truth: Iterable[int], margin: int) -> tuple[float, float]:
    pred, truth = set(pred), set(truth)
    hits = len(match_points(pred, truth, margin))
    precision = hits / len(pred) if pred else NAN
    recall = hits / len(truth) if truth else NAN
    return precision, recall


METRICS = ("hausdorff", "rand_index") + tuple(
    f"{kind}@{m}" for m in MARGINS for kind in ("precision", "recall")
)


def evaluate_chain(pred_bkps: Sequence[int], truth: Sequence[int], n: int, margins=MARGINS) -> dict:
    """All metrics for one chain.

    ``pred_bkps`` is detector output (ending with ``n``); ``truth`` is the
    consensus change-point list.
    """
    pred = [b for b in pred_bkps if b != n]
    row = {
        "hausdorff": hausdorff(pred, truth),
        "rand_index": rand_index(list(pred_bkps), sorted(set(truth)) + [n], n),
    }
    for m in margins:
        p, r = precision_recall(pred, truth, m)
        row[f"precision@{m}"] = p
        row[f"recall@{m}"] = r
    return row


@dataclass
class MetricSummary:
    mean: float
    median: float
    n_valid: int
    n_excluded: int


@dataclass
class EvalReport:
    per_chain: list[dict]
    summary: dict[str, MetricSummary]


def _is_valid(v) -> bool:
    return v is not None and not (isinstance(v, float) and math.isnan(v))


def aggregate_report(per_chain: Sequence[Mapping], metrics: Sequence[str] = METRICS) -> EvalReport:
    """Mean and median of every metric over chains where it is defined."""
    summary = {}
    for metric in metrics:
        values = [float(row[metric]) for row in per_chain if metric in row and _is_valid(row[metric])]
        excluded = sum(1 for row in per_chain if metric in row) - len(values)
        if not values:
            warnings.warn(f"metric {metric} is undefined for every chain; omitted", stacklevel=2)
            continue
        if excluded:
            warnings.warn(f"metric {metric}: {excluded} chain(s) excluded as undefined", stacklevel=2)
        values.sort()
        summary[metric] = MetricSummary(math.fsum(values) / len(values), statistics.median(values),
                                        len(values), excluded)
    return EvalReport([dict(r) for r in per_chain], summary)
