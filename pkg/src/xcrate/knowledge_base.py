"""Queryable, ranked retrieval over a crate's API inventory.

A knowledge base wraps a finalized ApiIndex and answers textual queries with
a total ranking of its entries.  Retrieval runs in up to three stages: a fast
first-stage scorer selects a bounded candidate set (top 35 by default), an
optional second-stage reranker rescores it, and an optional list-wise reranker
produces the final ordering.  The default pipeline is fully deterministic: a
tf-idf style lexical scorer for stage one and nothing after it.  Model-backed
rankers plug in behind the same contract, with a recorded-scores replay mode
for hermetic runs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .api_index import ApiEntry, ApiIndex

logger = logging.getLogger(__name__)

DEFAULT_STAGE1_CUTOFF = 35
DEFAULT_TOP_N = 3


class UnknownRanker(Exception):
    """Raised when a retrieval config names a ranker that is not registered."""


class RankerFailure(Exception):
    """Raised by a stage plugin; the query falls back to the previous stage."""


@dataclass(frozen=True)
class GoApiEntry:
    """One source-language API record: package, name, doc and signature."""

    package: str
    name: str
    doc: str = ""
    signature: str = ""


def load_go_index(data: bytes | str) -> list[GoApiEntry]:
    """Load the neutral JSON index emitted by the source-language sidecar."""
    rows = json.loads(data)
    return [
        GoApiEntry(
            package=r["package"],
            name=r["name"],
            doc=r.get("doc", ""),
            signature=r.get("signature", ""),
        )
        for r in rows
    ]


def _collapse(text: str) -> str:
    return " ".join(text.split())


def normalize_query(text: str) -> str:
    """Lowercase and whitespace-collapse; punctuation is kept as-is."""
    return _collapse(text).lower()


def query_hash(text: str) -> str:
    return hashlib.sha256(normalize_query(text).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ApiQuery:
    """A retrieval query assembled from a source API's name and documentation."""

    source_api: str
    doc: str
    signature: str | None = None

    def rendered(self) -> str:
        tail = " ".join(
            part
            for part in (_collapse(self.doc), _collapse(self.signature or ""))
            if part
        )
        return f"{self.source_api}: {tail}".rstrip()


def make_query(go_api: GoApiEntry) -> ApiQuery:
    """Build the query string for one source API: ``pkg.name: doc signature``."""
    if not go_api.name:
        raise ValueError("source API name must be non-empty")
    pkg_short = go_api.package.rsplit("/", 1)[-1]
    source_api = f"{pkg_short}.{go_api.name}" if pkg_short else go_api.name
    return ApiQuery(
        source_api=source_api,
        doc=_collapse(go_api.doc),
        signature=_collapse(go_api.signature) or None,
    )


@dataclass(frozen=True)
class RankedResult:
    entry: ApiEntry
    score: float
    stage: str  # "retrieve" | "rerank" | "listwise"
    degraded: bool = False


@dataclass(frozen=True)
class RetrievalConfig:
    stage1: str = "lexical"
    stage2: str | None = None
    stage3: str | None = None
    k: int = DEFAULT_STAGE1_CUTOFF
    top_n: int = DEFAULT_TOP_N
    # Every stage-1 survivor is handed to the list-wise stage; recorded here
    # so replayed runs carry the choice explicitly.
    stage3_candidates: str = "all"

    @classmethod
    def from_json(cls, data: bytes | str) -> RetrievalConfig:
        obj = json.loads(data)
        return cls(
            stage1=obj.get("stage1", "lexical"),
            stage2=obj.get("stage2"),
            stage3=obj.get("stage3"),
            k=obj.get("k", DEFAULT_STAGE1_CUTOFF),
            top_n=obj.get("top_n", DEFAULT_TOP_N),
        )


_WORD = re.compile(r"[A-Za-z]+|[0-9]+")
_CAMEL = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+")


def tokenize(text: str) -> list[str]:
    """Split into lowercase word tokens, breaking camel case and digit runs."""
    tokens: list[str] = []
    for match in _WORD.finditer(text):
        word = match.group()
        if word.isdigit():
            tokens.append(word)
        else:
            tokens.extend(part.lower() for part in _CAMEL.findall(word))
    return tokens


class LexicalRanker:
    """Deterministic tf-idf cosine similarity over api_id + doc tokens."""

    def __init__(self, entries: tuple[ApiEntry, ...]):
        self.entries = entries
        self._doc_tf: dict[str, Counter] = {}
        df: Counter = Counter()
        for entry in entries:
            tf = Counter(tokenize(f"{entry.api_id} {entry.doc}"))
            self._doc_tf[entry.api_id] = tf
            df.update(tf.keys())
        n = len(entries)
        self._idf = {t: math.log((1 + n) / (1 + c)) + 1.0 for t, c in df.items()}
        self._default_idf = math.log(1 + n) + 1.0
        self._norms = {}
        for api_id, tf in self._doc_tf.items():
            weights = [c * self._idf[t] for t, c in sorted(tf.items())]
            self._norms[api_id] = math.sqrt(sum(w * w for w in weights)) or 1.0

    def _score_one(self, qvec: dict[str, float], qnorm: float, entry: ApiEntry) -> float:
        tf = self._doc_tf[entry.api_id]
        dot = 0.0
        for token in sorted(qvec):
            if token in tf:
                dot += qvec[token] * tf[token] * self._idf[token]
        return dot / (qnorm * self._norms[entry.api_id])

    def _query_vector(self, text: str) -> tuple[dict[str, float], float]:
        counts = Counter(tokenize(normalize_query(text)))
        qvec = {
            t: c * self._idf.get(t, self._default_idf) for t, c in counts.items()
        }
        qnorm = math.sqrt(sum(w * w for w in qvec.values())) or 1.0
        return qvec, qnorm

    def retrieve(self, text: str, k: int) -> list[tuple[ApiEntry, float]]:
        qvec, qnorm = self._query_vector(text)
        scored = [(e, self._score_one(qvec, qnorm, e)) for e in self.entries]
        scored.sort(key=lambda pair: (-pair[1], pair[0].api_id))
        return scored[:k]

    def rerank(self, text: str, scored) -> list[tuple[ApiEntry, float]]:
        qvec, qnorm = self._query_vector(text)
        rescored = [(e, self._score_one(qvec, qnorm, e)) for e, _ in scored]
        rescored.sort(key=lambda pair: (-pair[1], pair[0].api_id))
        return rescored


class IdentityReranker:
    """Keeps the incoming ordering; the stage contributes nothing."""

    def rerank(self, text: str, scored) -> list[tuple[ApiEntry, float]]:
        return list(scored)


class RecordedScoresReranker:
    """Replays scores recorded as JSONL rows of {query_hash, api_id, score}."""

    def __init__(self, path: str):
        self.path = path
        self._table: dict[str, dict[str, float]] = {}
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                self._table.setdefault(row["query_hash"], {})[row["api_id"]] = float(
                    row["score"]
                )

    def rerank(self, text: str, scored) -> list[tuple[ApiEntry, float]]:
        rows = self._table.get(query_hash(text))
        if rows is None:
            raise RankerFailure(f"no recorded scores for query hash {query_hash(text)}")
        rescored = [(e, rows.get(e.api_id, 0.0)) for e, _ in scored]
        rescored.sort(key=lambda pair: (-pair[1], pair[0].api_id))
        return rescored


class LlmListwiseReranker:
    """Final-stage list-wise reranker backed by the text-generation gateway."""

    def __init__(self, gateway):
        self.gateway = gateway

    def rerank(self, text: str, scored) -> list[tuple[ApiEntry, float]]:
        lines = [
            f"{i + 1}. {entry.api_id}: {_collapse(entry.doc)}"
            for i, (entry, _) in enumerate(scored)
        ]
        prompt = (
            "Rank the candidate APIs below by relevance to the query.\n"
            f"Query: {normalize_query(text)}\n"
            "Candidates:\n" + "\n".join(lines) + "\n"
            "Answer with the candidate numbers in ranked order, comma separated."
        )
        try:
            response = self.gateway.complete(prompt)
        except Exception as exc:
            raise RankerFailure(f"listwise reranker call failed: {exc}") from exc
        order = re.findall(r"\d+", response)
        picks = []
        seen = set()
        for num in order:
            idx = int(num) - 1
            if 0 <= idx < len(scored) and idx not in seen:
                seen.add(idx)
                picks.append(idx)
        if len(picks) != len(scored):
            raise RankerFailure(
                f"listwise response ranked {len(picks)} of {len(scored)} candidates"
            )
        return [(scored[idx][0], float(len(picks) - rank)) for rank, idx in enumerate(picks)]


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable ranked index over one crate's API entries."""

    crate: str
    entries: tuple[ApiEntry, ...]
    config: RetrievalConfig
    stage1: object = field(repr=False, default=None)
    stage2: object = field(repr=False, default=None)
    stage3: object = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.entries)


def _make_ranker(ref: str | None, entries, gateway):
    if ref is None:
        return None
    name, _, arg = ref.partition(":")
    if name == "lexical":
        return LexicalRanker(entries)
    if name == "identity":
        return IdentityReranker()
    if name == "recorded":
        if not arg:
            raise UnknownRanker("recorded ranker needs a scores file: recorded:<path>")
        return RecordedScoresReranker(arg)
    if name == "llm":
        if gateway is None:
            raise UnknownRanker("llm ranker requires a gateway")
        return LlmListwiseReranker(gateway)
    raise UnknownRanker(f"no ranker registered under id {ref!r}")


def build_kb(
    index: ApiIndex, config: RetrievalConfig | None = None, *, gateway=None
) -> KnowledgeBase:
    """Build an immutable knowledge base over a finalized index."""
    config = config or RetrievalConfig()
    entries = tuple(index.values())
    stage1 = _make_ranker(config.stage1, entries, gateway)
    if stage1 is None or not hasattr(stage1, "retrieve"):
        raise UnknownRanker(f"stage1 ranker {config.stage1!r} cannot retrieve")
    return KnowledgeBase(
        crate=index.crate,
        entries=entries,
        config=config,
        stage1=stage1,
        stage2=_make_ranker(config.stage2, entries, gateway),
        stage3=_make_ranker(config.stage3, entries, gateway),
    )


def query(kb: KnowledgeBase, q: ApiQuery | str, n: int | None = None) -> list[RankedResult]:
    """Rank the knowledge base against a query and return the top n results.

    Stage one selects at most ``config.k`` candidates; later stages reorder
    them.  A failing stage plugin falls back to the previous stage's ordering
    and flags the returned results as degraded.
    """
    if n is None:
        n = kb.config.top_n
    if n < 1:
        raise ValueError("n must be at least 1")
    text = q.rendered() if isinstance(q, ApiQuery) else q
    scored = kb.stage1.retrieve(text, kb.config.k)
    stage = "retrieve"
    degraded = False
    for ranker, label in ((kb.stage2, "rerank"), (kb.stage3, "listwise")):
        if ranker is None:
            continue
        try:
            scored = ranker.rerank(text, scored)
            stage = label
        except RankerFailure as exc:
            logger.warning("stage %s failed, keeping %s ordering: %s", label, stage, exc)
            degraded = True
    return [
        RankedResult(entry=e, score=s, stage=stage, degraded=degraded)
        for e, s in scored[:n]
    ]
