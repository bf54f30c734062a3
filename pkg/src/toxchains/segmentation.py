"""Chunking of speaker turns and assembly of chunks into segments.

A turn is cut into equal-length chunks no longer than ``chunk_duration``
seconds (the unit sent to a toxicity scorer). Consecutive chunks of one
speaker are then grouped, at most ``max_chunks_per_segment`` at a time, into
segments of roughly one minute; segment toxicity is the max over its chunks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import ConfigError, MissingScoreError
from .ingest import Episode, SpeakerTurn

CHUNK_DURATION = 17.0
MAX_CHUNKS_PER_SEGMENT = 4


@dataclass
class Chunk:
    speaker_id: str
    start: float
    end: float
    text: str
    toxicity: Optional[float] = None

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "text": self.text, "toxicity": self.toxicity}


@dataclass
class Segment:
    segment_index: int
    speaker_id: str
    chunks: list[Chunk]
    episode_id: str = ""
    channel_id: str = ""
    toxicity: Optional[float] = None

    @property
    def start(self) -> float:
        return self.chunks[0].start

    @property
    def end(self) -> float:
        return self.chunks[-1].end

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def text(self) -> str:
        return " ".join(c.text for c in self.chunks if c.text)

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "channel_id": self.channel_id,
            "segment_index": self.segment_index,
            "speaker": self.speaker_id,
            "start": self.start,
            "end": self.end,
            "text": self.text,
            "toxicity": self.toxicity,
            "chunks": [c.to_dict() for c in self.chunks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Segment":
        chunks = [Chunk(d["speaker"], c["start"], c["end"], c["text"], c.get("toxicity"))
                  for c in d["chunks"]]
        return cls(d["segment_index"], d["speaker"], chunks,
                   episode_id=d.get("episode_id", ""), channel_id=d.get("channel_id", ""),
                   toxicity=d.get("toxicity"))


def _check_duration(chunk_duration: float):
    if not (chunk_duration > 0 and math.isfinite(chunk_duration)):
        raise ConfigError(f"chunk_duration must be positive, got {chunk_duration!r}")


def chunk_turn(turn: SpeakerTurn, chunk_duration: float = CHUNK_DURATION) -> list[Chunk]:
    """Split a turn into ``ceil(duration / chunk_duration)`` equal chunks.

    Whitespace tokens are dealt out by count: with ``q, r = divmod(tokens,
    chunks)`` the first ``r`` chunks get ``q + 1`` tokens and the rest ``q``.
    Chunks may end up with empty text when a turn has fewer tokens than
    chunks.
    """
    _check_duration(chunk_duration)
    duration = turn.end - turn.start
    n = max(1, math.ceil(duration / chunk_duration))
    while True:
        bounds = [turn.start + duration * i / n for i in range(n)] + [turn.end]
        if all(b - a <= chunk_duration for a, b in zip(bounds, bounds[1:])):
            break
        n += 1  # floating point put a boundary a hair past the limit

    tokens = turn.text.split()
    q, r = divmod(len(tokens), n)
    chunks, pos = [], 0
    for i in range(n):
        take = q + (1 if i < r else 0)
        chunks.append(Chunk(turn.speaker_id, bounds[i], bounds[i + 1], " ".join(tokens[pos:pos + take])))
        pos += take
    return chunks


def build_segments(
    chunks: Sequence[Chunk],
    max_chunks_per_segment: int = MAX_CHUNKS_PER_SEGMENT,
    episode_id: str = "",
    channel_id: str = "",
) -> list[Segment]:
    """Group time-ordered chunks greedily into same-speaker segments."""
    if max_chunks_per_segment < 1:
        raise ConfigError("max_chunks_per_segment must be at least 1")
    segments: list[Segment] = []
    current: list[Chunk] = []
    for chunk in chunks:
        if current and (chunk.speaker_id != current[0].speaker_id or len(current) == max_chunks_per_segment):
            segments.append(Segment(len(segments), current[0].speaker_id, current, episode_id, channel_id))
            current = []
        current.append(chunk)
    if current:
        segments.append(Segment(len(segments), current[0].speaker_id, current, episode_id, channel_id))
    return segments


def segment_episode(
    episode: Episode,
    chunk_duration: float = CHUNK_DURATION,
    max_chunks_per_segment: int = MAX_CHUNKS_PER_SEGMENT,
) -> list[Segment]:
    chunks: list[Chunk] = []
    for turn in episode.turns:
        chunks.extend(chunk_turn(turn, chunk_duration))
    return build_segments(chunks, max_chunks_per_segment, episode.episode_id, episode.channel_id)


def aggregate_segment_toxicity(segment: Segment) -> float:
    """Set ``segment.toxicity`` to the max chunk score and return it."""
    for i, chunk in enumerate(segment.chunks):
        if chunk.toxicity is None:
            raise MissingScoreError(
                f"chunk {i} of segment {segment.segment_index} "
                f"({chunk.start:.2f}-{chunk.end:.2f}s) has no toxicity score"
            )
    segment.toxicity = max(c.toxicity for c in segment.chunks)
    return segment.toxicity


def normalized_text(texts: Iterable[str]) -> str:
    """Whitespace-normalized concatenation of ``texts``."""
    return " ".join(tok for t in texts for tok in t.split())
