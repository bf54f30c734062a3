"""Reading and writing the pipeline's intermediate artifacts.

Every stage writes its outputs under one work directory, plus a
``<stage>.meta.json`` sidecar with the reproducibility header (config hash,
package versions, timestamp). Keeping the header out of the artifacts
themselves means re-runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import platform
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import __version__
from .errors import ParseError, StageOrderError

SEGMENTS = "segments.jsonl"
SCORED = "scored.jsonl"
CHAINS = "chains.jsonl"
CORPUS_STATS = "corpus_stats.csv"
TEXTSTATS = "textstats.csv"
KEYWORDS = "keywords.csv"
CPD = "cpd.jsonl"
EVAL_PER_CHAIN = "eval_per_chain.csv"
EVAL_REPORT = "eval_report.csv"
REPORT = "report.md"

#: artifact -> stage (command) that produces it
PRODUCER = {
    SEGMENTS: "ingest",
    SCORED: "score",
    CHAINS: "chains",
    CORPUS_STATS: "chains",
    TEXTSTATS: "stats",
    KEYWORDS: "stats",
    CPD: "cpd",
    EVAL_PER_CHAIN: "eval",
    EVAL_REPORT: "eval",
}


def require(workdir: Path, name: str) -> Path:
    path = Path(workdir) / name
    if not path.exists():
        stage = PRODUCER.get(name, "?")
        raise StageOrderError(f"{path} not found; run the '{stage}' stage first")
    return path


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(record) -> str:
    return json.dumps(record, ensure_ascii=False, default=_json_default)


def write_jsonl(path: Path, records: Iterable[dict]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    count = 0
    with tmp.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")
            count += 1
    tmp.replace(path)
    return count


def read_jsonl(path: Path) -> Iterator[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line=lineno, path=path) from None


def _fmt(value):
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(round(value, 10))
    return value


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
            count += 1
    return count


def read_csv(path: Path) -> list[dict]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_meta(workdir: Path, stage: str, config: dict, outputs: Sequence[str], extra: dict = None) -> dict:
    header = {
        "stage": stage,
        "config_hash": config_hash(config),
        "config": config,
        "versions": {
            "toxchains": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": list(outputs),
    }
    if extra:
        header.update(extra)
    path = Path(workdir) / f"{stage}.meta.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(header, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return header
