"""Command-line front end.

Stages, each reading the previous stage's artifacts from ``--workdir``::

    toxchains ingest  --manifest corpus/manifest.json
    toxchains score   --scorer lexicon --lexicon lexicon.csv
    toxchains chains
    toxchains stats
    toxchains cpd     --method kernelcpd --cost rbf
    toxchains eval    --annotations annotations.jsonl
    toxchains report

Settings come from defaults, then ``--config`` (a JSON object), then flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from . import artifacts as art
from .chains import ANCHOR_THRESHOLD, WINDOW, ConversationChain, corpus_stats, extract_chains
from .cpd import METHODS, detect, get_cost
from .cpd.search import KERNELS, default_penalty
from .errors import ConfigError, ParseError, ScorerError, StageOrderError, ToxChainsError
from .evaluation import METRICS, aggregate_report, evaluate_chain, load_annotations, majority_vote
from .ingest import iter_episodes, load_manifest, normalize_overlaps
from .segmentation import CHUNK_DURATION, MAX_CHUNKS_PER_SEGMENT, Segment, aggregate_segment_toxicity, segment_episode
from .textstats import MEASURES, WINDOWS, aggregate_by_position, chain_stats, keyword_frequencies
from .toxicity import ScoreCache, make_scorer, remote_score_batch, text_hash

logger = logging.getLogger("toxchains")

DATA_DIR = Path(__file__).parent / "data"
FIXTURE_DIR = DATA_DIR / "fixture"


@dataclass
class PipelineConfig:
    workdir: str = "toxchains-out"
    manifest: Optional[str] = None
    chunk_duration: float = CHUNK_DURATION
    max_chunks_per_segment: int = MAX_CHUNKS_PER_SEGMENT
    anchor_threshold: float = ANCHOR_THRESHOLD
    window: int = WINDOW
    scorer: str = "remote"
    lexicon: Optional[str] = None
    cache: Optional[str] = None
    endpoint: Optional[str] = None
    qps: float = 1.0
    max_retries: int = 5
    do_not_store: bool = True
    methods: list = field(default_factory=lambda: ["kernelcpd"])
    cost: str = "rbf"
    penalty: Optional[float] = None
    n_bkps: Optional[int] = None
    min_size: int = 2
    annotations: Optional[str] = None
    quorum: Optional[int] = None
    margins: list = field(default_factory=lambda: [1, 2, 4])
    top_k: int = 50
    raw_perplexity: bool = False

    def validate(self):
        positive = {
            "chunk_duration": self.chunk_duration,
            "max_chunks_per_segment": self.max_chunks_per_segment,
            "qps": self.qps,
            "min_size": self.min_size,
            "top_k": self.top_k,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ConfigError(f"{name} must be positive, got {value!r}")
        if not 0.0 <= self.anchor_threshold <= 1.0:
            raise ConfigError("anchor_threshold must lie in [0, 1]")
        if self.window < 0:
            raise ConfigError("window must be non-negative")
        if self.penalty is not None and not self.penalty > 0:
            raise ConfigError("penalty must be positive")
        if self.n_bkps is not None and self.n_bkps < 0:
            raise ConfigError("n_bkps must be non-negative")
        if self.penalty is not None and self.n_bkps is not None:
            raise ConfigError("set either penalty or n_bkps, not both")
        if self.scorer not in ("remote", "lexicon"):
            raise ConfigError(f"unknown scorer {self.scorer!r} (expected 'remote' or 'lexicon')")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown cpd method {m!r}; choose from {sorted(METHODS)}")
        if any(m < 0 for m in self.margins):
            raise ConfigError("margins must be non-negative")
        return self

    def stage_view(self, keys) -> dict:
        d = dataclasses.asdict(self)
        return {k: d[k] for k in keys}


# settings each stage depends on; its config hash covers only these
STAGE_KEYS = {
    "ingest": ["manifest", "chunk_duration", "max_chunks_per_segment"],
    "score": ["scorer", "lexicon", "endpoint", "do_not_store"],
    "chains": ["anchor_threshold", "window"],
    "stats": ["top_k", "raw_perplexity"],
    "cpd": ["methods", "cost", "penalty", "n_bkps", "min_size"],
    "eval": ["annotations", "quorum", "margins"],
    "report": [],
}


# -- stages -------------------------------------------------------------------

def cmd_ingest(cfg: PipelineConfig) -> int:
    if not cfg.manifest:
        raise ConfigError("ingest needs --manifest")
    manifest = Path(cfg.manifest)
    if not manifest.exists():
        raise FileNotFoundError(f"manifest not found: {manifest}")
    entries = load_manifest(manifest)
    if not entries:
        warnings.warn(f"manifest {manifest} lists no episodes; nothing to do")
        print("ingest: manifest is empty, nothing written")
        return 0

    workdir = Path(cfg.workdir)
    records, n_turns, n_trimmed, n_dropped, n_episodes = [], 0, 0, 0, 0
    for episode in iter_episodes(entries):
        episode, report = normalize_overlaps(episode)
        n_episodes += 1
        n_turns += len(episode.turns)
        n_trimmed += report.trimmed
        n_dropped += report.dropped
        for seg in segment_episode(episode, cfg.chunk_duration, cfg.max_chunks_per_segment):
            records.append(seg.to_dict())
    art.write_jsonl(workdir / art.SEGMENTS, records)
    summary = {"episodes": n_episodes, "turns": n_turns, "trimmed": n_trimmed,
               "dropped": n_dropped, "segments": len(records)}
    art.write_meta(workdir, "ingest", cfg.stage_view(STAGE_KEYS["ingest"]), [art.SEGMENTS], {"summary": summary})
    print("ingest: {episodes} episodes, {turns} turns ({trimmed} trimmed, {dropped} dropped), "
          "{segments} segments".format(**summary))
    return 0


def _load_segments(path: Path) -> list[Segment]:
    return [Segment.from_dict(r) for r in art.read_jsonl(path)]


def cmd_score(cfg: PipelineConfig) -> int:
    workdir = Path(cfg.workdir)
    src = art.require(workdir, art.SEGMENTS)
    cache = ScoreCache(cfg.cache or workdir / "score_cache.jsonl")
    options = {}
    if cfg.scorer == "remote":
        options = {"endpoint": cfg.endpoint, "qps": cfg.qps, "max_retries": cfg.max_retries,
                   "do_not_store": cfg.do_not_store}
    scorer = make_scorer(cfg.scorer, lexicon_path=cfg.lexicon, cache=cache, **options)

    segments = _load_segments(src)
    texts = [c.text for s in segments for c in s.chunks if c.text.strip()]
    cached_before = sum(1 for t in set(texts) if cache.get(scorer.scorer_id, text_hash(t)) is not None)
    try:
        results = remote_score_batch(texts, scorer)
    finally:
        cache.flush()

    it = iter(results)
    for seg in segments:
        for i, chunk in enumerate(seg.chunks):
            if not chunk.text.strip():
                # a chunk without words cannot be toxic
                chunk.toxicity = 0.0
                continue
            res = next(it)
            if isinstance(res, Exception):
                raise ScorerError(f"episode {seg.episode_id}, segment {seg.segment_index}, chunk {i} "
                                  f"({chunk.start:.2f}-{chunk.end:.2f}s): {res}") from res
            chunk.toxicity = res.value
        aggregate_segment_toxicity(seg)

    art.write_jsonl(workdir / art.SCORED, (s.to_dict() for s in segments))
    summary = {"chunks": len(texts), "unique_texts": len(set(texts)), "cache_hits": cached_before,
               "remote_calls": getattr(scorer, "calls", 0), "scorer_id": scorer.scorer_id}
    art.write_meta(workdir, "score", cfg.stage_view(STAGE_KEYS["score"]), [art.SCORED], {"summary": summary})
    print("score: {chunks} chunks ({unique_texts} unique, {cache_hits} cached), "
          "{remote_calls} remote calls, scorer {scorer_id}".format(**summary))
    return 0


def _episodes(segments: list[Segment]):
    by_ep: dict[str, list[Segment]] = defaultdict(list)
    order = []
    for seg in segments:
        if seg.episode_id not in by_ep:
            order.append(seg.episode_id)
        by_ep[seg.episode_id].append(seg)
    for ep in order:
        segs = sorted(by_ep[ep], key=lambda s: s.segment_index)
        yield ep, segs[0].channel_id, segs


def cmd_chains(cfg: PipelineConfig) -> int:
    workdir = Path(cfg.workdir)
    segments = _load_segments(art.require(workdir, art.SCORED))
    episodes = list(_episodes(segments))
    chains = []
    for _, _, segs in episodes:
        chains.extend(extract_chains(segs, cfg.anchor_threshold, cfg.window))
    art.write_jsonl(workdir / art.CHAINS, (c.to_dict() for c in chains))

    stats = corpus_stats(episodes, cfg.anchor_threshold)
    rows = stats.rows()
    header = ["channel", "episodes", "avg_duration_min", "duration_std_min", "avg_tokens", "tokens_std",
              "toxic_episodes", "toxic_episode_pct", "chains", "chain_share_pct"]
    art.write_csv(workdir / art.CORPUS_STATS, header, ([r[h] for h in header] for r in rows))
    summary = {"episodes": len(episodes), "chains": len(chains),
               "interior_chains": sum(c.is_interior for c in chains)}
    art.write_meta(workdir, "chains", cfg.stage_view(STAGE_KEYS["chains"]), [art.CHAINS, art.CORPUS_STATS],
                   {"summary": summary})
    print("chains: {chains} chains ({interior_chains} interior) from {episodes} episodes".format(**summary))
    return 0


def _load_chains(workdir: Path) -> list[ConversationChain]:
    return [ConversationChain.from_dict(r) for r in art.read_jsonl(art.require(workdir, art.CHAINS))]


def cmd_stats(cfg: PipelineConfig) -> int:
    workdir = Path(cfg.workdir)
    chains = _load_chains(workdir)
    stats = [s for chain in chains for s in chain_stats(chain)]
    measures = list(MEASURES) + (["raw_perplexity"] if cfg.raw_perplexity else [])
    rows = []
    with warnings.catch_warnings():
        # positions with a single observation are expected for small corpora
        warnings.simplefilter("ignore")
        for measure in measures:
            for agg in aggregate_by_position(stats, measure):
                rows.append([measure, agg.position, agg.mean, agg.ci_low, agg.ci_high, agg.n])
    art.write_csv(workdir / art.TEXTSTATS, ["measure", "position", "mean", "ci_low", "ci_high", "n"], rows)

    freqs = keyword_frequencies(chains)
    kw_rows = []
    for window in WINDOWS:
        top = sorted(freqs[window].items(), key=lambda kv: (-kv[1], kv[0]))[: cfg.top_k]
        kw_rows.extend([window, tok, count] for tok, count in top)
    art.write_csv(workdir / art.KEYWORDS, ["window", "token", "count"], kw_rows)
    art.write_meta(workdir, "stats", cfg.stage_view(STAGE_KEYS["stats"]), [art.TEXTSTATS, art.KEYWORDS],
                   {"summary": {"chains": len(chains), "segments": len(stats)}})
    print(f"stats: {len(stats)} segments from {len(chains)} chains, {len(rows)} aggregate rows")
    return 0


def run_cpd(series, method: str, cost: str, penalty=None, n_bkps=None, min_size: int = 2) -> dict:
    """Detect change points in one series and describe how it was done."""
    n = len(series)
    params = {"min_size": min_size}
    if method == "pelt" and n_bkps is not None:
        raise ConfigError("pelt runs in penalized mode only; use penalty, not n_bkps")
    if n < 2 * min_size:
        return {"cost": cost, "params": {**params, "mode": "skipped"}, "n": n, "breakpoints": [n],
                "note": f"series shorter than 2 * min_size = {2 * min_size}"}
    if method == "kernelcpd" and cost not in KERNELS:
        raise ConfigError(f"kernelcpd needs a kernel cost (rbf, cosine, linear), got {cost!r}")
    if n_bkps is not None:
        k = min(n_bkps, n // min_size - 1)
        params.update(mode="n_bkps", n_bkps=k)
        bkps = detect(series, method, cost, n_bkps=k, min_size=min_size)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fitted = get_cost(KERNELS.get(cost, cost) if method == "kernelcpd" else cost).fit(series)
            pen = penalty if penalty is not None else default_penalty(fitted)
            bkps = detect(series, method, cost, penalty=pen, min_size=min_size)
        params.update(mode="penalty", penalty=pen, penalty_source="given" if penalty is not None else "default")
        if getattr(fitted, "gamma", None) is not None:
            params["gamma"] = fitted.gamma
    return {"cost": cost, "params": params, "n": n, "breakpoints": [int(b) for b in bkps]}


def cmd_cpd(cfg: PipelineConfig) -> int:
    workdir = Path(cfg.workdir)
    chains = _load_chains(workdir)
    records = []
    for chain in chains:
        series = chain.toxicity_series()
        for method in cfg.methods:
            rec = run_cpd(series, method, cfg.cost, cfg.penalty, cfg.n_bkps, cfg.min_size)
            records.append({"chain_id": chain.chain_id, "method": method, **rec})
    art.write_jsonl(workdir / art.CPD, records)
    art.write_meta(workdir, "cpd", cfg.stage_view(STAGE_KEYS["cpd"]), [art.CPD],
                   {"summary": {"chains": len(chains), "records": len(records)}})
    print(f"cpd: {len(records)} records for {len(chains)} chains, methods {', '.join(cfg.methods)}")
    return 0


def cmd_eval(cfg: PipelineConfig) -> int:
    workdir = Path(cfg.workdir)
    if not cfg.annotations:
        raise ConfigError("eval needs --annotations")
    ann_path = Path(cfg.annotations)
    if not ann_path.exists():
        raise FileNotFoundError(f"annotation file not found: {ann_path}")
    annotations = load_annotations(ann_path)
    cpd_records = list(art.read_jsonl(art.require(workdir, art.CPD)))

    margins = tuple(cfg.margins)
    metrics = ("hausdorff", "rand_index") + tuple(f"{k}@{m}" for m in margins for k in ("precision", "recall"))
    by_method: dict[str, list[dict]] = defaultdict(list)
    per_chain_rows = []
    for rec in cpd_records:
        ann = annotations.get(rec["chain_id"])
        if ann is None:
            continue
        if ann.n != rec["n"]:
            raise ParseError(f"chain {rec['chain_id']}: annotations say n={ann.n}, cpd series has n={rec['n']}")
        truth = majority_vote(ann, cfg.quorum)
        row = evaluate_chain(rec["breakpoints"], truth, ann.n, margins)
        by_method[rec["method"]].append(row)
        per_chain_rows.append([rec["chain_id"], rec["method"]] + [row[m] for m in metrics])
    missing = sorted(set(annotations) - {r["chain_id"] for r in cpd_records})
    if missing:
        logger.warning("%d annotated chain(s) have no cpd output: %s", len(missing), ", ".join(missing))

    art.write_csv(workdir / art.EVAL_PER_CHAIN, ["chain_id", "method", *metrics], per_chain_rows)
    methods = [m for m in METHODS if m in by_method]
    reports = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in methods:
            reports[m] = aggregate_report(by_method[m], metrics)
    rows = []
    for metric in metrics:
        for label, attr in (("avg", "mean"), ("med", "median"), ("n_valid", "n_valid")):
            rows.append([metric, label] + [
                getattr(reports[m].summary[metric], attr) if metric in reports[m].summary else float("nan")
                for m in methods
            ])
    art.write_csv(workdir / art.EVAL_REPORT, ["metric", "aggregation", *methods], rows)
    art.write_meta(workdir, "eval", cfg.stage_view(STAGE_KEYS["eval"]), [art.EVAL_PER_CHAIN, art.EVAL_REPORT],
                   {"summary": {"annotated_chains": len(annotations), "evaluated_rows": len(per_chain_rows)}})
    print(f"eval: {len(per_chain_rows)} chain/method rows over {len(annotations)} annotated chains")
    return 0


def cmd_report(cfg: PipelineConfig) -> int:
    """Collect stage summaries and the main tables into one markdown file."""
    workdir = Path(cfg.workdir)
    lines = ["# toxchains report", ""]
    found = False
    for stage in ("ingest", "score", "chains", "stats", "cpd", "eval"):
        meta = workdir / f"{stage}.meta.json"
        if not meta.exists():
            continue
        found = True
        header = json.loads(meta.read_text(encoding="utf-8"))
        lines.append(f"## {stage}")
        lines.append("")
        lines.append(f"config hash `{header['config_hash']}`, toxchains {header['versions']['toxchains']}")
        lines.append("")
        for k, v in header.get("summary", {}).items():
            lines.append(f"- {k}: {v}")
        lines.append("")
    if not found:
        raise StageOrderError(f"no stage outputs in {workdir}; run 'ingest' first")
    for name in (art.CORPUS_STATS, art.EVAL_REPORT):
        path = workdir / name
        if path.exists():
            rows = art.read_csv(path)
            lines.append(f"## {name}")
            lines.append("")
            if rows:
                cols = list(rows[0])
                lines.append("| " + " | ".join(cols) + " |")
                lines.append("|" + "---|" * len(cols))
                lines.extend("| " + " | ".join(r[c] for c in cols) + " |" for r in rows)
            else:
                lines.append("(empty)")
            lines.append("")
    (workdir / art.REPORT).write_text("\n".join(lines), encoding="utf-8")
    print(f"report: wrote {workdir / art.REPORT}")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "score": cmd_score,
    "chains": cmd_chains,
    "stats": cmd_stats,
    "cpd": cmd_cpd,
    "eval": cmd_eval,
    "report": cmd_report,
}


# -- argument handling --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toxchains", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workdir", help="directory holding the stage artifacts")
    common.add_argument("--config", help="JSON file with PipelineConfig settings")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse transcripts, build chunks and segments")
    p.add_argument("--manifest")
    p.add_argument("--chunk-duration", type=float)
    p.add_argument("--max-chunks-per-segment", type=int)

    p = sub.add_parser("score", parents=[common], help="score chunk toxicity")
    p.add_argument("--scorer", help="remote or lexicon")
    p.add_argument("--lexicon", help="term,weight file for the lexicon scorer")
    p.add_argument("--cache", help="score cache file (default: <workdir>/score_cache.jsonl)")
    p.add_argument("--endpoint", help="remote scoring endpoint URL")
    p.add_argument("--qps", type=float)
    p.add_argument("--max-retries", type=int)

    p = sub.add_parser("chains", parents=[common], help="extract toxic conversation chains")
    p.add_argument("--anchor-threshold", type=float)
    p.add_argument("--window", type=int)

    p = sub.add_parser("stats", parents=[common], help="text statistics by chain position")
    p.add_argument("--top-k", type=int)
    p.add_argument("--raw-perplexity", action="store_true", default=None)

    p = sub.add_parser("cpd", parents=[common], help="change-point detection on chain toxicity series")
    p.add_argument("--method", dest="methods", action="append",
                   help=f"one of {', '.join(METHODS)} or 'all'; repeatable")
    p.add_argument("--cost")
    p.add_argument("--penalty", type=float)
    p.add_argument("--n-bkps", type=int)
    p.add_argument("--min-size", type=int)

    p = sub.add_parser("eval", parents=[common], help="evaluate change points against annotations")
    p.add_argument("--annotations")
    p.add_argument("--quorum", type=int)
    p.add_argument("--margins", type=lambda s: [int(x) for x in s.split(",")], help="e.g. 1,2,4")

    sub.add_parser("report", parents=[common], help="summarize all artifacts as markdown")
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    values = {}
    if args.config:
        try:
            values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON ({exc.msg})") from None
        known = {f.name for f in dataclasses.fields(PipelineConfig)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    for name in {f.name for f in dataclasses.fields(PipelineConfig)}:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    if values.get("methods") and "all" in values["methods"]:
        values["methods"] = list(METHODS)
    return PipelineConfig(**values).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (ToxChainsError, FileNotFoundError, ValueError) as exc:
        print(f"toxchains {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
