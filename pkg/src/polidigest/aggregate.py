"""Roll paragraph mixtures up to documents and documents up to time buckets.

A document's topic distribution is the token-count-weighted mean of its
paragraphs' distributions, so a 100-token paragraph moves the document more
than a 10-token one. Rollups apply the same weighting across documents per
UTC calendar bucket, grouped by whatever person/party/platform filter the
query carries. Summation order is fixed (entries sorted by doc_id) so
results are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .errors import DimensionMismatch, ModelMismatch, TopicOutOfRange
from .timeutil import BUCKETS, bucket_floor, bucket_next, parse_iso8601

if TYPE_CHECKING:  # pragma: no cover
    from .store import StoredEntry

WEIGHTINGS = ("tokens", "equal_person")


@dataclass
class DocumentTopics:
    """A document's aggregated distribution plus the sizes that produced it."""

    doc_id: str
    model_id: str
    theta: np.ndarray
    paragraph_count: int
    token_count: int


def uniform_distribution(num_topics: int) -> np.ndarray:
    return np.full(num_topics, 1.0 / num_topics)


def aggregate_document(
    thetas: list[np.ndarray],
    weights: list[int],
    num_topics: int,
) -> np.ndarray:
    """Token-count-weighted mean of paragraph mixtures, renormalized.

    An empty paragraph list (document with no in-vocabulary token) yields
    the uniform distribution: such documents stay queryable but carry no
    topic signal.
    """
    if len(thetas) != len(weights):
        raise ValueError(f"{len(thetas)} thetas vs {len(weights)} weights")
    if not thetas:
        return uniform_distribution(num_topics)
    if any(w <= 0 for w in weights):
        raise ValueError("paragraph token counts must be positive")
    acc = np.zeros(num_topics)
    for theta, w in zip(thetas, weights):
        acc += w * np.asarray(theta, dtype=float)
    acc /= sum(weights)
    return acc / acc.sum()


@dataclass(frozen=True)
class RollupQuery:
    """Filter + bucketing for a rollup; empty filter sets mean 'all'."""

    start: str
    end: str
    bucket: str = "month"
    model_id: str = ""
    persons: frozenset[str] | None = None
    parties: frozenset[str] | None = None
    platforms: frozenset[str] | None = None
    weighting: str = "tokens"

    def validate(self) -> tuple[datetime, datetime]:
        try:
            start = parse_iso8601(self.start)
            end = parse_iso8601(self.end)
        except ValueError as exc:
            raise ValueError(f"bad time range: {exc}") from exc
        if not start < end:
            raise ValueError(f"time range start must precede end: {self.start} >= {self.end}")
        if self.bucket not in BUCKETS:
            raise ValueError(f"unknown bucket {self.bucket!r}; expected one of {BUCKETS}")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}; expected one of {WEIGHTINGS}")
        if not self.model_id:
            raise ValueError("model_id is required")
        return start, end


@dataclass
class RollupBucket:
    bucket_start: datetime
    topic_share: np.ndarray
    document_count: int
    token_count: int


@dataclass
class RollupResult:
    buckets: list[RollupBucket]
    num_topics: int
    bucket: str = "month"
    model_id: str = ""


def _weighted_share(rows: list[tuple[str, np.ndarray, int]], num_topics: int) -> np.ndarray:
    """Token-weighted mean over (person_id, theta, tokens) rows, renormalized.

    Falls back to the unweighted mean when every document has zero tokens
    (uniform-fallback documents) so the share stays a valid distribution.
    """
    total = sum(tokens for _, _, tokens in rows)
    acc = np.zeros(num_topics)
    if total == 0:
        for _, theta, _ in rows:
            acc += theta
        acc /= len(rows)
    else:
        for _, theta, tokens in rows:
            acc += tokens * theta
        acc /= total
    return acc / acc.sum()


def rollup(entries: Iterable["StoredEntry"], query: RollupQuery, num_topics: int) -> RollupResult:
    """Aggregate matching entries into calendar buckets.

    With weighting="tokens" a bucket's share is the token-weighted mean of
    its documents' thetas; with weighting="equal_person" each matching
    person's token-weighted mean counts once. Buckets without documents
    emit all-zero shares. Entries under a different model_id raise
    ModelMismatch rather than being skipped.
    """
    start, end = query.validate()

    matching: list = []
    for entry in entries:
        if entry.model_id != query.model_id:
            raise ModelMismatch(f"entry {entry.doc_id} has model {entry.model_id}, query wants {query.model_id}")
        if entry.status != "active":
            continue
        if query.persons is not None and entry.person_id not in query.persons:
            continue
        if query.parties is not None and entry.party not in query.parties:
            continue
        if query.platforms is not None and entry.platform not in query.platforms:
            continue
        ts = parse_iso8601(entry.timestamp)
        if not start <= ts < end:
            continue
        matching.append((entry, ts))

    matching.sort(key=lambda pair: pair[0].doc_id)

    grouped: dict[datetime, list] = {}
    for entry, ts in matching:
        grouped.setdefault(bucket_floor(ts, query.bucket), []).append(entry)

    buckets: list[RollupBucket] = []
    cursor = bucket_floor(start, query.bucket)
    while cursor < end:
        group = grouped.get(cursor, [])
        if not group:
            buckets.append(RollupBucket(cursor, np.zeros(num_topics), 0, 0))
        else:
            rows = [(e.person_id, np.asarray(e.theta, dtype=float), e.token_count) for e in group]
            if query.weighting == "tokens":
                share = _weighted_share(rows, num_topics)
            else:
                by_person: dict[str, list] = {}
                for row in rows:
                    by_person.setdefault(row[0], []).append(row)
                acc = np.zeros(num_topics)
                for person in sorted(by_person):
                    acc += _weighted_share(by_person[person], num_topics)
                acc /= len(by_person)
                share = acc / acc.sum()
            buckets.append(RollupBucket(
                cursor, share, len(group), sum(e.token_count for e in group)))
        cursor = bucket_next(cursor, query.bucket)

    return RollupResult(buckets=buckets, num_topics=num_topics,
                        bucket=query.bucket, model_id=query.model_id)


def compare(a: np.ndarray, b: np.ndarray) -> float:
    """Jensen-Shannon divergence, log base 2, clipped into [0, 1].

    0 for identical distributions, 1 for disjoint supports.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"distribution lengths differ: {a.shape} vs {b.shape}")
    m = 0.5 * (a + b)

    def half_kl(x: np.ndarray) -> float:
        nz = x > 0
        return float((x[nz] * np.log2(x[nz] / m[nz])).sum())

    return min(max(0.5 * half_kl(a) + 0.5 * half_kl(b), 0.0), 1.0)


def topic_share_of(result: RollupResult, topic_ids: set[int]) -> list[float]:
    """Per-bucket total share of the designated topics."""
    for t in topic_ids:
        if not 0 <= t < result.num_topics:
            raise TopicOutOfRange(f"topic {t} outside 0..{result.num_topics - 1}")
    ids = sorted(topic_ids)
    return [float(b.topic_share[ids].sum()) if ids else 0.0 for b in result.buckets]


def load_topic_sets(path) -> dict[str, dict[str, list[int]]]:
    """Topic-designation config: {model_id: {label: [topic ids]}}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("topic designation file must be a JSON object keyed by model_id")
    out: dict[str, dict[str, list[int]]] = {}
    for model_id, sets in raw.items():
        if not isinstance(sets, dict):
            raise ValueError(f"topic sets for {model_id} must be an object of label -> id list")
        out[model_id] = {}
        for label, ids in sets.items():
            if not isinstance(ids, list) or not all(isinstance(i, int) for i in ids):
                raise ValueError(f"topic set {model_id}/{label} must be a list of integers")
            out[model_id][label] = ids
    return out
