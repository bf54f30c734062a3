"""Toxicity scoring of chunk texts.

Two scorers share one interface: :class:`PerspectiveClient` talks to a
Perspective-style HTTP endpoint, :class:`LexiconScorer` is a deterministic
offline stand-in (noisy-OR over lexicon hits) for tests and air-gapped runs.
Both go through a :class:`ScoreCache` keyed by scorer id and a content hash
of the text, so identical chunks are only ever scored once.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import requests

from .errors import ConfigError, MustSplitError, PermanentScorerError, ScorerError, TransientScorerError
from .textstats import tokenize

logger = logging.getLogger(__name__)

API_KEY_ENV = "TOXCHAINS_API_KEY"
ENDPOINT_ENV = "TOXCHAINS_ENDPOINT"
DEFAULT_ENDPOINT = "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze"


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ToxicityScore:
    value: float
    scorer_id: str
    text_hash: str

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"toxicity {self.value} outside [0, 1]")


class ScoreCache:
    """Thread-safe ``(scorer_id, text_hash) -> value`` map backed by a JSONL file.

    New entries are buffered and appended to the file by :meth:`flush`, so
    the file only ever grows by whole records.
    """

    def __init__(self, path: Union[str, Path, None] = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[tuple[str, str], float] = {}
        self._pending: list[tuple[str, str, float]] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    self._entries[(rec["scorer_id"], rec["text_hash"])] = float(rec["value"])
                except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                    # a torn final line from an interrupted run is not fatal
                    logger.warning("skipping unreadable cache record in %s", self.path)

    def get(self, scorer_id: str, key: str) -> Optional[float]:
        return self._entries.get((scorer_id, key))

    def put(self, scorer_id: str, key: str, value: float):
        with self._lock:
            if (scorer_id, key) not in self._entries:
                self._pending.append((scorer_id, key, value))
            self._entries[(scorer_id, key)] = value

    def flush(self):
        if self.path is None:
            return
        with self._lock:
            if not self._pending:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                for sid, key, value in self._pending:
                    fh.write(json.dumps({"scorer_id": sid, "text_hash": key, "value": value}) + "\n")
            self._pending.clear()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, item):
        return item in self._entries


class Scorer:
    """Base class: subclasses implement :meth:`_score` for one text."""

    scorer_id = "base"
    #: maximum whitespace-token count accepted per request; ``None`` = unlimited
    max_tokens: Optional[int] = None

    def __init__(self, cache: Optional[ScoreCache] = None):
        self.cache = cache if cache is not None else ScoreCache()

    def check_text(self, text: str):
        if not isinstance(text, str) or not text.strip():
            raise ValueError("cannot score empty text")
        if self.max_tokens is not None and len(text.split()) > self.max_tokens:
            raise MustSplitError(
                f"text has {len(text.split())} tokens, above the {self.max_tokens}-token limit of {self.scorer_id}"
            )

    def _score(self, text: str) -> float:
        raise NotImplementedError


def score_text(text: str, scorer: Scorer) -> ToxicityScore:
    """Score one text, consulting the scorer's cache first."""
    scorer.check_text(text)
    key = text_hash(text)
    cached = scorer.cache.get(scorer.scorer_id, key)
    if cached is not None:
        return ToxicityScore(cached, scorer.scorer_id, key)
    value = float(scorer._score(text))
    score = ToxicityScore(value, scorer.scorer_id, key)
    scorer.cache.put(scorer.scorer_id, key, value)
    return score


# -- offline lexicon scorer ---------------------------------------------------

def lexicon_score(text: str, lexicon: Mapping[str, float]) -> float:
    """Noisy-OR of lexicon weights over every matched token occurrence.

    ``1 - prod(1 - w)`` over matches; 0.0 when nothing matches.
    """
    if not lexicon:
        raise ConfigError("lexicon is empty")
    miss = 1.0
    for tok in tokenize(text):
        w = lexicon.get(tok)
        if w is not None:
            miss *= 1.0 - w
    return 1.0 - miss


def load_lexicon(path) -> dict[str, float]:
    """Read ``term,weight`` lines; blank lines and ``#`` comments are ignored."""
    lexicon = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}:{lineno}: expected 'term,weight'")
            term, weight = row[0].strip().lower(), row[1].strip()
            try:
                w = float(weight)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: weight {weight!r} is not a number") from None
            if not 0.0 < w <= 1.0:
                raise ConfigError(f"{path}:{lineno}: weight {w} outside (0, 1]")
            lexicon[term] = w
    if not lexicon:
        raise ConfigError(f"{path}: lexicon is empty")
    return lexicon


class LexiconScorer(Scorer):
    def __init__(self, lexicon: Mapping[str, float], cache: Optional[ScoreCache] = None):
        super().__init__(cache)
        if not lexicon:
            raise ConfigError("lexicon is empty")
        bad = {t: w for t, w in lexicon.items() if not 0.0 < w <= 1.0}
        if bad:
            raise ConfigError(f"lexicon weights outside (0, 1]: {bad}")
        self.lexicon = {t.lower(): float(w) for t, w in lexicon.items()}
        digest = hashlib.sha256(json.dumps(sorted(self.lexicon.items())).encode()).hexdigest()[:12]
        self.scorer_id = f"lexicon:{digest}"

    def _score(self, text: str) -> float:
        return lexicon_score(text, self.lexicon)


# -- remote client ------------------------------------------------------------

class RateLimiter:
    """Spaces request start times at least ``1 / qps`` seconds apart."""

    def __init__(self, qps: float, clock=time.monotonic, sleep=time.sleep):
        if not qps > 0:
            raise ConfigError("qps limit must be positive")
        self.interval = 1.0 / qps
        self._clock = clock
        self._sleep = sleep
        self._next = None
        self._lock = threading.Lock()

    def acquire(self):
        with self._lock:
            now = self._clock()
            slot = now if self._next is None or self._next <= now else self._next
            self._next = slot + self.interval
        if slot > now:
            self._sleep(slot - now)


class PerspectiveClient(Scorer):
    """Client for a Perspective-style ``comments:analyze`` endpoint.

    Only the TOXICITY attribute is requested. HTTP 429 and 5xx responses are
    retried with exponential backoff (``backoff * 2**(attempt - 1)`` seconds, or the
    server's Retry-After when larger); other 4xx responses are permanent.
    """

    max_tokens = 3000

    def __init__(
        self,
        endpoint: Optional[str] = None,
        api_key: Optional[str] = None,
        qps: float = 1.0,
        max_retries: int = 5,
        backoff: float = 1.0,
        timeout: float = 30.0,
        languages: Sequence[str] = ("en",),
        do_not_store: bool = True,
        max_workers: int = 4,
        cache: Optional[ScoreCache] = None,
        session: Optional[requests.Session] = None,
        scorer_version: str = "v1alpha1",
    ):
        super().__init__(cache)
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV) or DEFAULT_ENDPOINT
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if max_retries < 0:
            raise ConfigError("max_retries must be non-negative")
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.languages = list(languages)
        self.do_not_store = do_not_store
        self.max_workers = max_workers
        self.limiter = RateLimiter(qps)
        self.session = session or requests.Session()
        self.scorer_id = f"perspective:TOXICITY:{scorer_version}"
        self.calls = 0
        self._calls_lock = threading.Lock()

    def request_body(self, text: str) -> dict:
        return {
            "comment": {"text": text},
            "languages": self.languages,
            "requestedAttributes": {"TOXICITY": {}},
            "doNotStore": self.do_not_store,
        }

    @staticmethod
    def parse_response(payload: dict) -> float:
        try:
            value = float(payload["attributeScores"]["TOXICITY"]["summaryScore"]["value"])
        except (KeyError, TypeError, ValueError):
            raise PermanentScorerError("response lacks attributeScores.TOXICITY.summaryScore.value") from None
        if not 0.0 <= value <= 1.0:
            raise PermanentScorerError(f"score {value} outside [0, 1]")
        return value

    def _post(self, text: str) -> requests.Response:
        self.limiter.acquire()
        with self._calls_lock:
            self.calls += 1
        params = {"key": self.api_key} if self.api_key else None
        return self.session.post(self.endpoint, params=params, json=self.request_body(text), timeout=self.timeout)

    def _score(self, text: str) -> float:
        last = "no attempt made"
        retry_after = 0.0
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(max(self.backoff * 2 ** (attempt - 1), retry_after))
            retry_after = 0.0
            try:
                resp = self._post(text)
            except requests.RequestException as exc:
                last = f"{type(exc).__name__}: {exc}"
                continue
            if resp.status_code == 200:
                try:
                    return self.parse_response(resp.json())
                except ValueError:
                    raise PermanentScorerError("response is not JSON") from None
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                try:
                    retry_after = float(resp.headers.get("Retry-After", 0))
                except ValueError:
                    pass
                continue
            raise PermanentScorerError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        raise TransientScorerError(f"gave up after {self.max_retries + 1} attempts ({last})")


def remote_score_batch(
    texts: Sequence[str],
    client: Scorer,
    qps_limit: Optional[float] = None,
    max_retries: Optional[int] = None,
) -> list[Union[ToxicityScore, ScorerError, ValueError]]:
    """Score ``texts`` in input order.

    Each result is either a :class:`ToxicityScore` or the exception raised for
    that text, so one failure does not discard the other scores. ``qps_limit``
    and ``max_retries`` override the client's settings when given.
    """
    if isinstance(client, PerspectiveClient):
        if qps_limit is not None:
            client.limiter = RateLimiter(qps_limit)
        if max_retries is not None:
            client.max_retries = max_retries
        workers = client.max_workers
    else:
        workers = 1

    def one(text):
        try:
            return score_text(text, client)
        except (ScorerError, ValueError) as exc:
            return exc

    # identical texts are scored once; the rest hit the cache
    unique = list(dict.fromkeys(texts))
    if workers > 1 and len(unique) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = dict(zip(unique, pool.map(one, unique)))
    else:
        done = {t: one(t) for t in unique}
    return [done[t] for t in texts]


def make_scorer(name: str, lexicon_path=None, cache: Optional[ScoreCache] = None, **remote_options) -> Scorer:
    if name == "lexicon":
        if lexicon_path is None:
            raise ConfigError("the lexicon scorer needs a lexicon file")
        return LexiconScorer(load_lexicon(lexicon_path), cache=cache)
    if name == "remote":
        return PerspectiveClient(cache=cache, **remote_options)
    raise ConfigError(f"unknown scorer {name!r} (expected 'remote' or 'lexicon')")
