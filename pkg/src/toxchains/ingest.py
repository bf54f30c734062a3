"""Parsing and normalization of diarized transcripts.

A transcript file holds one JSON object per line::

    {"speaker": "SPK_0", "start": 0.0, "end": 4.2, "text": "hello there"}

Episode and channel ids are not part of the records; they come from the
corpus manifest (see :func:`load_manifest`) or from the caller.
"""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Union

from .errors import EmptyEpisodeError, ParseError

logger = logging.getLogger(__name__)

_REQUIRED = ("speaker", "start", "end", "text")


@dataclass(frozen=True)
class SpeakerTurn:
    speaker_id: str
    start: float
    end: float
    text: str

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError("turn times must be finite")
        if self.start < 0:
            raise ValueError(f"negative start time {self.start}")
        if not self.start < self.end:
            raise ValueError(f"start {self.start} is not before end {self.end}")
        if not self.text.strip():
            raise ValueError("turn text is empty")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Episode:
    episode_id: str
    channel_id: str
    turns: tuple[SpeakerTurn, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        starts = [t.start for t in self.turns]
        if starts != sorted(starts):
            raise ValueError("episode turns must be sorted by start time")

    @property
    def speech_duration(self) -> float:
        return sum(t.duration for t in self.turns)


class OverlapReport(NamedTuple):
    trimmed: int
    dropped: int


class ManifestEntry(NamedTuple):
    episode_id: str
    channel_id: str
    path: Path


def _parse_time(value, key, lineno):
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                raise ParseError(f"field {key!r} is not numeric: {value!r}", line=lineno) from None
        else:
            raise ParseError(f"field {key!r} is not numeric: {value!r}", line=lineno)
    value = float(value)
    if not math.isfinite(value):
        raise ParseError(f"field {key!r} is not finite", line=lineno)
    return value


def _parse_record(line: str, lineno: int) -> SpeakerTurn:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from None
    if not isinstance(rec, dict):
        raise ParseError("record is not an object", line=lineno)
    missing = [k for k in _REQUIRED if k not in rec]
    if missing:
        raise ParseError(f"missing field(s) {', '.join(missing)}", line=lineno)
    speaker, text = rec["speaker"], rec["text"]
    if not isinstance(speaker, str) or not speaker:
        raise ParseError("field 'speaker' must be a non-empty string", line=lineno)
    if not isinstance(text, str):
        raise ParseError("field 'text' must be a string", line=lineno)
    start = _parse_time(rec["start"], "start", lineno)
    end = _parse_time(rec["end"], "end", lineno)
    if start < 0:
        raise ParseError(f"negative start time {start}", line=lineno)
    if start >= end:
        raise ParseError(f"start {start} is not before end {end}", line=lineno)
    if not text.strip():
        raise ParseError("empty text", line=lineno)
    return SpeakerTurn(speaker, start, end, text)


def parse_transcript(
    stream: Union[bytes, str, IO[bytes], IO[str]],
    episode_id: str = "",
    channel_id: str = "",
) -> Episode:
    """Parse a line-delimited transcript into an :class:`Episode`.

    ``stream`` may be raw bytes, a string, or a binary/text file object.
    Blank lines are skipped. Any malformed record raises :class:`ParseError`
    carrying the 1-based line number; nothing is silently dropped. Turns are
    returned sorted by start time (stable, so ties keep file order).
    """
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)

    turns = []
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                raise ParseError("line is not valid UTF-8", line=lineno) from None
        line = raw.strip()
        if not line:
            continue
        turns.append(_parse_record(line, lineno))

    if not turns:
        raise EmptyEpisodeError("transcript contains no records")
    turns.sort(key=lambda t: t.start)
    return Episode(episode_id, channel_id, tuple(turns))


def read_transcript(path, episode_id: str = "", channel_id: str = "") -> Episode:
    path = Path(path)
    with path.open("rb") as fh:
        try:
            return parse_transcript(fh, episode_id=episode_id, channel_id=channel_id)
        except ParseError as exc:
            exc.path = path
            exc.args = (f"{path}: {exc.args[0]}",)
            raise


def normalize_overlaps(episode: Episode) -> tuple[Episode, OverlapReport]:
    """Remove overlapping speech so that turn intervals are disjoint.

    A turn starting before the previous kept turn ends has its start moved to
    that end; if nothing is left of it, it is dropped. The earlier turn is
    never modified. Text is kept as is on trimmed turns.
    """
    kept: list[SpeakerTurn] = []
    trimmed = dropped = 0
    for turn in episode.turns:
        if kept and turn.start < kept[-1].end:
            new_start = kept[-1].end
            if new_start >= turn.end:
                dropped += 1
                continue
            turn = SpeakerTurn(turn.speaker_id, new_start, turn.end, turn.text)
            trimmed += 1
        kept.append(turn)
    if trimmed or dropped:
        logger.debug("episode %s: %d turns trimmed, %d dropped", episode.episode_id, trimmed, dropped)
    return Episode(episode.episode_id, episode.channel_id, tuple(kept)), OverlapReport(trimmed, dropped)


def load_manifest(path) -> list[ManifestEntry]:
    """Read a corpus manifest.

    The manifest is a JSON object ``{"episodes": [{"episode_id": ...,
    "channel_id": ..., "path": ...}, ...]}``; relative paths resolve against
    the manifest's directory.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid manifest JSON ({exc.msg})", line=exc.lineno, path=path) from None
    entries = data.get("episodes", []) if isinstance(data, dict) else data
    out = []
    for i, item in enumerate(entries):
        try:
            ep_path = Path(item["path"])
            out.append(ManifestEntry(str(item["episode_id"]), str(item.get("channel_id", "")),
                                     ep_path if ep_path.is_absolute() else path.parent / ep_path))
        except (KeyError, TypeError):
            raise ParseError(f"manifest entry {i} needs 'episode_id' and 'path'", path=path) from None
    return out


def iter_episodes(entries: Iterable[ManifestEntry]):
    for entry in entries:
        if not entry.path.exists():
            raise FileNotFoundError(f"transcript not found: {entry.path}")
        yield read_transcript(entry.path, entry.episode_id, entry.channel_id)
