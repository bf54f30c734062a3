"""Per-segment text statistics along conversation chains.

Every measure is computed on the segment's own tokens: duration, token
count, type-token ratio, entropy of the maximum-likelihood unigram
distribution (bits) and unigram perplexity. Values are then averaged per
chain position with normal-approximation 95% confidence intervals.
"""

from __future__ import annotations

import math
import re
import statistics
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import UndefinedStatisticError

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'"})

Z_95 = 1.96

MEASURES = ("duration", "token_count", "ttr", "entropy", "perplexity")

# Small English stopword list for the keyword-frequency report.
STOPWORDS = frozenset("""
a about above after again against all am an and any are aren't as at be because been before being
below between both but by can can't cannot could couldn't did didn't do does doesn't doing don't down
during each few for from further had hadn't has hasn't have haven't having he he'd he'll he's her here
here's hers herself him himself his how how's i i'd i'll i'm i've if in into is isn't it it's its itself
let's me more most mustn't my myself no nor not of off on once only or other ought our ours ourselves
out over own same shan't she she'd she'll she's should shouldn't so some such than that that's the their
theirs them themselves then there there's these they they'd they'll they're they've this those through
to too under until up very was wasn't we we'd we'll we're we've were weren't what what's when when's
where where's which while who who's whom why why's with won't would wouldn't you you'd you'll you're
you've your yours yourself yourselves just also oh uh um gonna gotta ok okay s t
""".split())


def tokenize(text: str) -> list[str]:
    """Lowercased runs of letters/digits, keeping internal apostrophes.

    >>> tokenize("Don't stop!")
    ["don't", 'stop']
    """
    return _TOKEN_RE.findall(text.translate(_APOSTROPHES).lower())


def _require_tokens(tokens: Sequence[str], name: str):
    if len(tokens) == 0:
        raise UndefinedStatisticError(f"{name} is undefined for an empty token list")


def ttr(tokens: Sequence[str]) -> float:
    _require_tokens(tokens, "type-token ratio")
    return len(set(tokens)) / len(tokens)


def unigram_entropy(tokens: Sequence[str]) -> float:
    """Shannon entropy in bits of the token list's own unigram distribution."""
    _require_tokens(tokens, "entropy")
    n = len(tokens)
    h = 0.0
    for count in Counter(tokens).values():
        p = count / n
        h -= p * math.log2(p)
    return max(h, 0.0)


def unigram_perplexity(tokens: Sequence[str]) -> float:
    """Per-token perplexity ``Pr(w_1..w_n) ** (-1/n)`` under the text's own
    maximum-likelihood unigram model.

    Evaluated as a mean of token log-probabilities rather than through the
    entropy, so that ``2 ** unigram_entropy(tokens)`` is an independent check.
    """
    _require_tokens(tokens, "perplexity")
    n = len(tokens)
    counts = Counter(tokens)
    log_prob = sum(math.log2(counts[w] / n) for w in tokens)
    return 2.0 ** (-log_prob / n)


def raw_unigram_perplexity(tokens: Sequence[str]) -> float:
    """Unnormalized ``Pr(w_1..w_n) ** -1``; grows with text length.

    Returns ``inf`` when the value overflows a float.
    """
    _require_tokens(tokens, "perplexity")
    n = len(tokens)
    counts = Counter(tokens)
    neg_log2 = -sum(math.log2(counts[w] / n) for w in tokens)
    try:
        return 2.0 ** neg_log2
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class SegmentStats:
    chain_id: str
    position: int
    duration: float
    token_count: int
    ttr: Optional[float]
    entropy: Optional[float]
    perplexity: Optional[float]
    raw_perplexity: Optional[float] = None


@dataclass(frozen=True)
class PositionAggregate:
    position: int
    mean: float
    ci_low: float
    ci_high: float
    n: int


def segment_stats(chain_id: str, position: int, text: str, duration: float) -> SegmentStats:
    tokens = tokenize(text)
    if not tokens:
        return SegmentStats(chain_id, position, duration, 0, None, None, None, None)
    return SegmentStats(
        chain_id,
        position,
        duration,
        len(tokens),
        ttr(tokens),
        unigram_entropy(tokens),
        unigram_perplexity(tokens),
        raw_unigram_perplexity(tokens),
    )


def chain_stats(chain) -> list[SegmentStats]:
    """Statistics for every segment of a :class:`~toxchains.chains.ConversationChain`."""
    return [
        segment_stats(chain.chain_id, pos, seg.text, seg.duration)
        for pos, seg in zip(chain.positions, chain.segments)
    ]


def aggregate_by_position(stats: Iterable[SegmentStats], measure: str) -> list[PositionAggregate]:
    """Mean and 95% CI (``mean ± 1.96 s / sqrt(n)``) of ``measure`` per position.

    Segments where the measure is undefined are skipped. Positions with fewer
    than two observations are left out with a warning.
    """
    if measure not in MEASURES and measure != "raw_perplexity":
        raise ValueError(f"unknown measure {measure!r}")
    by_pos: dict[int, list[float]] = defaultdict(list)
    for s in stats:
        value = getattr(s, measure)
        if value is not None:
            by_pos[s.position].append(float(value))

    out = []
    for pos in sorted(by_pos):
        # sort so the reduction does not depend on input order
        values = sorted(by_pos[pos])
        n = len(values)
        if n < 2:
            warnings.warn(f"{measure}: position {pos} has {n} observation(s); omitted", stacklevel=2)
            continue
        mean = math.fsum(values) / n
        half = Z_95 * statistics.stdev(values) / math.sqrt(n)
        out.append(PositionAggregate(pos, mean, mean - half, mean + half, n))
    return out


WINDOWS = ("preceding", "anchor", "following")


def window_of(position: int) -> str:
    return "anchor" if position == 0 else ("preceding" if position < 0 else "following")


def keyword_frequencies(chains, stopwords=STOPWORDS) -> dict[str, Counter]:
    """Stopword-filtered token counts for the preceding, anchor and following windows."""
    freqs = {w: Counter() for w in WINDOWS}
    for chain in chains:
        for pos, seg in zip(chain.positions, chain.segments):
            freqs[window_of(pos)].update(
                t for t in tokenize(seg.text) if t not in stopwords and not t.isdigit() and len(t) > 1
            )
    return freqs
