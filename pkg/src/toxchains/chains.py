"""Anchor detection, conversation-chain extraction and corpus statistics.

An anchor is a segment whose toxicity reaches ``anchor_threshold``. Each
anchor yields its own chain: the anchor plus up to ``window`` segments on
either side, clipped at episode boundaries (clipping is recorded in
``truncated_head`` / ``truncated_tail``, the chain is kept).
"""

from __future__ import annotations

import math
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import MissingScoreError
from .segmentation import Segment
from .textstats import tokenize

ANCHOR_THRESHOLD = 0.7
WINDOW = 10


@dataclass
class ConversationChain:
    chain_id: str
    episode_id: str
    anchor_index: int
    segments: list[Segment]
    truncated_head: int = 0
    truncated_tail: int = 0
    channel_id: str = ""
    window: int = WINDOW

    @property
    def anchor(self) -> Segment:
        return self.segments[self.anchor_index]

    @property
    def positions(self) -> range:
        """Position of each segment relative to the anchor (anchor = 0)."""
        return range(-self.anchor_index, len(self.segments) - self.anchor_index)

    @property
    def is_interior(self) -> bool:
        return self.truncated_head == 0 and self.truncated_tail == 0

    def toxicity_series(self) -> list[float]:
        return [s.toxicity for s in self.segments]

    def to_dict(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "episode_id": self.episode_id,
            "channel_id": self.channel_id,
            "anchor_offset": self.anchor_index,
            "anchor_segment_index": self.anchor.segment_index,
            "window": self.window,
            "truncated_head": self.truncated_head,
            "truncated_tail": self.truncated_tail,
            "segments": [
                {
                    "index": s.segment_index,
                    "speaker": s.speaker_id,
                    "start": s.start,
                    "end": s.end,
                    "toxicity": s.toxicity,
                    "text": s.text,
                }
                for s in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConversationChain":
        # chain records keep segment text but not chunk boundaries;
        # rebuild each segment as a single chunk spanning it
        from .segmentation import Chunk

        segments = [
            Segment(
                s["index"], s["speaker"],
                [Chunk(s["speaker"], s["start"], s["end"], s["text"], s["toxicity"])],
                episode_id=d["episode_id"], channel_id=d.get("channel_id", ""), toxicity=s["toxicity"],
            )
            for s in d["segments"]
        ]
        return cls(d["chain_id"], d["episode_id"], d["anchor_offset"], segments,
                   d.get("truncated_head", 0), d.get("truncated_tail", 0),
                   d.get("channel_id", ""), d.get("window", WINDOW))


def _require_scored(segments: Sequence[Segment]):
    for seg in segments:
        if seg.toxicity is None:
            raise MissingScoreError(f"segment {seg.segment_index} of episode {seg.episode_id!r} is not scored")


def find_anchors(segments: Sequence[Segment], anchor_threshold: float = ANCHOR_THRESHOLD) -> list[int]:
    """Positions of all segments with toxicity >= ``anchor_threshold``, ascending."""
    _require_scored(segments)
    return [i for i, seg in enumerate(segments) if seg.toxicity >= anchor_threshold]


def chain_id_for(episode_id: str, segment_index: int) -> str:
    return f"{episode_id}#{segment_index:05d}"


def extract_chain(
    segments: Sequence[Segment],
    anchor: int,
    window: int = WINDOW,
    episode_id: Optional[str] = None,
    channel_id: Optional[str] = None,
) -> ConversationChain:
    if not 0 <= anchor < len(segments):
        raise IndexError(f"anchor {anchor} outside episode with {len(segments)} segments")
    if window < 0:
        raise ValueError("window must be non-negative")
    lo = max(0, anchor - window)
    hi = min(len(segments), anchor + window + 1)
    seg = segments[anchor]
    ep = seg.episode_id if episode_id is None else episode_id
    return ConversationChain(
        chain_id=chain_id_for(ep, seg.segment_index),
        episode_id=ep,
        anchor_index=anchor - lo,
        segments=list(segments[lo:hi]),
        truncated_head=window - (anchor - lo),
        truncated_tail=window - (hi - anchor - 1),
        channel_id=seg.channel_id if channel_id is None else channel_id,
        window=window,
    )


def extract_chains(
    segments: Sequence[Segment],
    anchor_threshold: float = ANCHOR_THRESHOLD,
    window: int = WINDOW,
) -> list[ConversationChain]:
    return [extract_chain(segments, a, window) for a in find_anchors(segments, anchor_threshold)]


@dataclass
class ChannelStats:
    channel_id: str
    episodes: int = 0
    toxic_episodes: int = 0
    chains: int = 0
    durations_min: list = field(default_factory=list, repr=False)
    token_counts: list = field(default_factory=list, repr=False)
    chain_share: float = 0.0

    @property
    def toxic_pct(self) -> float:
        return 100.0 * self.toxic_episodes / self.episodes if self.episodes else 0.0

    @staticmethod
    def _mean_std(values):
        if not values:
            return math.nan, math.nan
        return statistics.fmean(values), (statistics.stdev(values) if len(values) > 1 else 0.0)

    @property
    def duration_min(self):
        """Mean and standard deviation of episode duration, minutes."""
        return self._mean_std(self.durations_min)

    @property
    def tokens(self):
        """Mean and standard deviation of tokens per episode."""
        return self._mean_std(self.token_counts)


def _round(x: float):
    return x if math.isnan(x) else round(x)


@dataclass
class CorpusStats:
    channels: dict[str, ChannelStats] = field(default_factory=dict)

    @property
    def total_chains(self) -> int:
        return sum(c.chains for c in self.channels.values())

    @property
    def total_episodes(self) -> int:
        return sum(c.episodes for c in self.channels.values())

    def rows(self) -> list[dict]:
        """Table rows, largest chain share first. Undefined means are NaN."""
        out = []
        for c in sorted(self.channels.values(), key=lambda c: (-c.chains, c.channel_id)):
            dur_mean, dur_std = c.duration_min
            tok_mean, tok_std = c.tokens
            out.append({
                "channel": c.channel_id,
                "episodes": c.episodes,
                "avg_duration_min": _round(dur_mean),
                "duration_std_min": _round(dur_std),
                "avg_tokens": _round(tok_mean),
                "tokens_std": _round(tok_std),
                "toxic_episodes": c.toxic_episodes,
                "toxic_episode_pct": round(c.toxic_pct),
                "chains": c.chains,
                "chain_share_pct": round(c.chain_share, 1),
            })
        return out


def corpus_stats(
    episodes: Iterable[tuple[str, str, Sequence[Segment]]],
    anchor_threshold: float = ANCHOR_THRESHOLD,
) -> CorpusStats:
    """Per-channel episode counts, toxic-episode percentage and chain shares.

    ``episodes`` yields ``(episode_id, channel_id, segments)`` with every
    segment scored. An episode is toxic when it holds at least one anchor;
    each anchor is one chain.
    """
    stats = CorpusStats()
    seen = set()
    for episode_id, channel_id, segments in episodes:
        if episode_id in seen:
            raise ValueError(f"episode {episode_id!r} listed twice")
        seen.add(episode_id)
        ch = stats.channels.setdefault(channel_id, ChannelStats(channel_id))
        n_anchors = len(find_anchors(segments, anchor_threshold))
        ch.episodes += 1
        ch.toxic_episodes += n_anchors > 0
        ch.chains += n_anchors
        if segments:
            ch.durations_min.append((segments[-1].end - segments[0].start) / 60.0)
        ch.token_counts.append(sum(len(tokenize(s.text)) for s in segments))

    total = stats.total_chains
    for ch in stats.channels.values():
        ch.durations_min.sort()
        ch.token_counts.sort()
        ch.chain_share = 100.0 * ch.chains / total if total else 0.0
    return stats
