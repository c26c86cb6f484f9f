"""Embedded single-file store for documents, topic entries, and model records.

Backed by sqlite so the whole pipeline runs self-contained; the class is the
interface a server-backed implementation would have to match. One writer,
any number of read-only handles. Theta vectors are serialized as
fixed-precision decimal text ("%.17g" per component, comma-separated),
which round-trips IEEE-754 doubles losslessly so rollups reproduce bitwise.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ChecksumMismatch,
    DuplicateModel,
    ForeignKeyViolation,
    IllegalTransition,
    StorageFailure,
    UnknownModel,
)
from .ingest import Document, PersonRef, Platform
from .timeutil import format_iso8601, parse_iso8601

SCHEMA_VERSION = 1

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS documents (
    doc_id TEXT PRIMARY KEY,
    person_id TEXT NOT NULL,
    display_name TEXT NOT NULL DEFAULT '',
    party TEXT NOT NULL,
    platform TEXT NOT NULL,
    timestamp TEXT NOT NULL,
    source_url TEXT NOT NULL,
    text TEXT NOT NULL,
    ingest_time TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'active',
    metadata TEXT NOT NULL DEFAULT '{}'
);
CREATE INDEX IF NOT EXISTS idx_documents_timestamp ON documents(timestamp);
CREATE TABLE IF NOT EXISTS seen_raw (
    source_id TEXT NOT NULL,
    external_id TEXT NOT NULL,
    doc_id TEXT NOT NULL,
    PRIMARY KEY (source_id, external_id)
);
CREATE TABLE IF NOT EXISTS models (
    model_id TEXT PRIMARY KEY,
    backend TEXT NOT NULL,
    created_at TEXT NOT NULL,
    config TEXT NOT NULL DEFAULT '{}',
    vocab_version TEXT NOT NULL DEFAULT '',
    artifact_path TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'staged',
    checksum TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS entries (
    doc_id TEXT NOT NULL,
    model_id TEXT NOT NULL,
    theta TEXT NOT NULL,
    paragraph_detail TEXT,
    token_count INTEGER NOT NULL,
    paragraph_count INTEGER NOT NULL,
    status TEXT NOT NULL DEFAULT 'active',
    PRIMARY KEY (doc_id, model_id)
);
CREATE INDEX IF NOT EXISTS idx_entries_model ON entries(model_id);
"""


def encode_theta(theta) -> str:
    """Lossless fixed-precision text encoding of a probability vector."""
    return ",".join("%.17g" % float(x) for x in theta)


def decode_theta(text: str) -> np.ndarray:
    return np.array([float(x) for x in text.split(",")], dtype=float)


@dataclass
class ParagraphTheta:
    """Optional per-paragraph detail kept alongside a document entry."""

    para_id: str
    token_count: int
    theta: np.ndarray

    def to_json(self) -> dict:
        return {"para_id": self.para_id, "token_count": self.token_count,
                "theta": encode_theta(self.theta)}

    @classmethod
    def from_json(cls, obj: dict) -> "ParagraphTheta":
        return cls(para_id=obj["para_id"], token_count=int(obj["token_count"]),
                   theta=decode_theta(obj["theta"]))


@dataclass
class StoredEntry:
    """One document's topic distribution under one model, with its metadata."""

    doc_id: str
    person_id: str
    party: str
    platform: str
    timestamp: str
    source_url: str
    model_id: str
    theta: np.ndarray
    token_count: int
    paragraph_count: int
    status: str = "active"
    paragraph_thetas: list[ParagraphTheta] | None = None
    metadata: dict[str, str] = field(default_factory=dict)


@dataclass
class ModelRecord:
    model_id: str
    backend: str  # "lda" | "hybrid"
    created_at: str
    config: dict
    vocab_version: str
    artifact_path: str
    status: str = "staged"
    checksum: str = ""


class Store:
    """Single-file document/entry/model store.

    Writers open with read_only=False (the default); the HTTP service and
    other consumers open read-only handles that can never touch the file.
    """

    def __init__(self, path: str | Path, read_only: bool = False):
        self.path = Path(path)
        self.read_only = read_only
        if read_only:
            if not self.path.exists():
                raise StorageFailure(f"store {self.path} does not exist")
            self._conn = sqlite3.connect(f"file:{self.path}?mode=ro", uri=True,
                                         check_same_thread=False)
        else:
            self._conn = sqlite3.connect(self.path, check_same_thread=False)
            self._conn.executescript(_SCHEMA)
            self._conn.execute(
                "INSERT OR IGNORE INTO meta (key, value) VALUES ('schema_version', ?)",
                (str(SCHEMA_VERSION),),
            )
            self._conn.commit()
        self._conn.row_factory = sqlite3.Row

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # --- documents ---------------------------------------------------------

    def put_document(self, doc: Document, status: str = "active") -> str:
        """Idempotent upsert keyed by doc_id; raw text stored verbatim."""
        try:
            self._conn.execute(
                """INSERT INTO documents
                   (doc_id, person_id, display_name, party, platform, timestamp,
                    source_url, text, ingest_time, status, metadata)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                   ON CONFLICT(doc_id) DO UPDATE SET
                     person_id=excluded.person_id, display_name=excluded.display_name,
                     party=excluded.party, platform=excluded.platform,
                     timestamp=excluded.timestamp, source_url=excluded.source_url,
                     text=excluded.text, ingest_time=excluded.ingest_time,
                     status=excluded.status, metadata=excluded.metadata""",
                (doc.doc_id, doc.person.id, doc.person.display_name, doc.party,
                 doc.platform.value, doc.timestamp, doc.source_url, doc.text,
                 doc.ingest_time, status, json.dumps(doc.metadata, sort_keys=True)),
            )
            self._conn.commit()
        except sqlite3.Error as exc:
            raise StorageFailure(f"put_document failed: {exc}") from exc
        return doc.doc_id

    def _row_to_document(self, row: sqlite3.Row) -> Document:
        return Document(
            doc_id=row["doc_id"],
            person=PersonRef(id=row["person_id"], display_name=row["display_name"],
                             party=row["party"]),
            party=row["party"],
            platform=Platform(row["platform"]),
            timestamp=row["timestamp"],
            source_url=row["source_url"],
            text=row["text"],
            ingest_time=row["ingest_time"],
            metadata=json.loads(row["metadata"]),
        )

    def get_document(self, doc_id: str) -> tuple[Document, str] | None:
        row = self._conn.execute("SELECT * FROM documents WHERE doc_id = ?", (doc_id,)).fetchone()
        if row is None:
            return None
        return self._row_to_document(row), row["status"]

    def list_documents(self, status: str = "active", since: str | None = None) -> list[Document]:
        sql = "SELECT * FROM documents WHERE status = ?"
        params: list = [status]
        if since is not None:
            sql += " AND timestamp >= ?"
            params.append(format_iso8601(parse_iso8601(since)))
        sql += " ORDER BY timestamp, doc_id"
        return [self._row_to_document(r) for r in self._conn.execute(sql, params)]

    def count_documents(self, status: str | None = None) -> int:
        if status is None:
            return self._conn.execute("SELECT COUNT(*) FROM documents").fetchone()[0]
        return self._conn.execute(
            "SELECT COUNT(*) FROM documents WHERE status = ?", (status,)).fetchone()[0]

    # --- raw-document dedupe ledger -----------------------------------------

    def seen_external_ids(self, source_id: str) -> set[str]:
        rows = self._conn.execute(
            "SELECT external_id FROM seen_raw WHERE source_id = ?", (source_id,))
        return {r["external_id"] for r in rows}

    def mark_seen(self, source_id: str, external_id: str, doc_id: str) -> None:
        self._conn.execute(
            "INSERT OR REPLACE INTO seen_raw (source_id, external_id, doc_id) VALUES (?, ?, ?)",
            (source_id, external_id, doc_id))
        self._conn.commit()

    # --- entries -------------------------------------------------------------

    def put_entry(self, entry: StoredEntry) -> None:
        """Upsert keyed by (doc_id, model_id); both references must exist."""
        doc = self._conn.execute(
            "SELECT doc_id FROM documents WHERE doc_id = ?", (entry.doc_id,)).fetchone()
        if doc is None:
            raise ForeignKeyViolation(f"entry references unknown document {entry.doc_id}")
        model = self._conn.execute(
            "SELECT model_id FROM models WHERE model_id = ?", (entry.model_id,)).fetchone()
        if model is None:
            raise ForeignKeyViolation(f"entry references unknown model {entry.model_id}")
        detail = None
        if entry.paragraph_thetas is not None:
            detail = json.dumps([p.to_json() for p in entry.paragraph_thetas])
        self._conn.execute(
            """INSERT INTO entries
               (doc_id, model_id, theta, paragraph_detail, token_count, paragraph_count, status)
               VALUES (?, ?, ?, ?, ?, ?, ?)
               ON CONFLICT(doc_id, model_id) DO UPDATE SET
                 theta=excluded.theta, paragraph_detail=excluded.paragraph_detail,
                 token_count=excluded.token_count, paragraph_count=excluded.paragraph_count,
                 status=excluded.status""",
            (entry.doc_id, entry.model_id, encode_theta(entry.theta), detail,
             entry.token_count, entry.paragraph_count, entry.status),
        )
        self._conn.commit()

    def _row_to_entry(self, row: sqlite3.Row) -> StoredEntry:
        detail = None
        if row["paragraph_detail"]:
            detail = [ParagraphTheta.from_json(obj) for obj in json.loads(row["paragraph_detail"])]
        return StoredEntry(
            doc_id=row["doc_id"],
            person_id=row["person_id"],
            party=row["party"],
            platform=row["platform"],
            timestamp=row["timestamp"],
            source_url=row["source_url"],
            model_id=row["model_id"],
            theta=decode_theta(row["theta"]),
            token_count=row["token_count"],
            paragraph_count=row["paragraph_count"],
            status=row["status"],
            paragraph_thetas=detail,
            metadata=json.loads(row["metadata"]),
        )

    _ENTRY_SELECT = """
        SELECT e.doc_id, e.model_id, e.theta, e.paragraph_detail, e.token_count,
               e.paragraph_count, e.status, d.person_id, d.party, d.platform,
               d.timestamp, d.source_url, d.metadata
        FROM entries e JOIN documents d ON d.doc_id = e.doc_id
    """

    def get_entry(self, doc_id: str, model_id: str) -> StoredEntry | None:
        row = self._conn.execute(
            self._ENTRY_SELECT + " WHERE e.doc_id = ? AND e.model_id = ?",
            (doc_id, model_id)).fetchone()
        return self._row_to_entry(row) if row else None

    def query_entries(
        self,
        model_id: str,
        persons: set[str] | None = None,
        parties: set[str] | None = None,
        platforms: set[str] | None = None,
        time_range: tuple[str, str] | None = None,
        page: int = 0,
        page_size: int = 1000,
    ) -> list[StoredEntry]:
        """Active entries matching the filter, ordered by (timestamp, doc_id).

        Quarantined documents and entries never match. Pagination is
        deterministic: concatenating all pages equals the unpaginated result.
        """
        if self.get_model(model_id) is None:
            raise UnknownModel(f"no model registered under {model_id!r}")
        sql = self._ENTRY_SELECT + " WHERE e.model_id = ? AND e.status = 'active' AND d.status = 'active'"
        params: list = [model_id]
        for column, values in (("d.person_id", persons), ("d.party", parties),
                               ("d.platform", platforms)):
            if values is not None:
                placeholders = ",".join("?" for _ in values)
                sql += f" AND {column} IN ({placeholders})"
                params.extend(sorted(values))
        if time_range is not None:
            start = format_iso8601(parse_iso8601(time_range[0]))
            end = format_iso8601(parse_iso8601(time_range[1]))
            sql += " AND d.timestamp >= ? AND d.timestamp < ?"
            params.extend([start, end])
        sql += " ORDER BY d.timestamp, e.doc_id LIMIT ? OFFSET ?"
        params.extend([page_size, page * page_size])
        return [self._row_to_entry(r) for r in self._conn.execute(sql, params)]

    def iter_all_entries(self, model_id: str):
        """Every entry for a model regardless of status, ordered by doc_id."""
        if self.get_model(model_id) is None:
            raise UnknownModel(f"no model registered under {model_id!r}")
        sql = self._ENTRY_SELECT + " WHERE e.model_id = ? ORDER BY e.doc_id"
        for row in self._conn.execute(sql, (model_id,)):
            yield self._row_to_entry(row)

    def entry_doc_ids(self, model_id: str) -> set[str]:
        rows = self._conn.execute(
            "SELECT doc_id FROM entries WHERE model_id = ?", (model_id,))
        return {r["doc_id"] for r in rows}

    # --- model registry -------------------------------------------------------

    def register_model(self, record: ModelRecord) -> None:
        """Insert a staged model record; the id must be new."""
        existing = self._conn.execute(
            "SELECT model_id FROM models WHERE model_id = ?", (record.model_id,)).fetchone()
        if existing is not None:
            raise DuplicateModel(f"model {record.model_id} is already registered")
        self._conn.execute(
            """INSERT INTO models
               (model_id, backend, created_at, config, vocab_version, artifact_path, status, checksum)
               VALUES (?, ?, ?, ?, ?, ?, ?, ?)""",
            (record.model_id, record.backend, record.created_at,
             json.dumps(record.config, sort_keys=True), record.vocab_version,
             str(record.artifact_path), record.status, record.checksum),
        )
        self._conn.commit()

    def _row_to_model(self, row: sqlite3.Row) -> ModelRecord:
        return ModelRecord(
            model_id=row["model_id"], backend=row["backend"], created_at=row["created_at"],
            config=json.loads(row["config"]), vocab_version=row["vocab_version"],
            artifact_path=row["artifact_path"], status=row["status"], checksum=row["checksum"],
        )

    def get_model(self, model_id: str) -> ModelRecord | None:
        row = self._conn.execute(
            "SELECT * FROM models WHERE model_id = ?", (model_id,)).fetchone()
        return self._row_to_model(row) if row else None

    def require_model(self, model_id: str, released: bool = False) -> ModelRecord:
        record = self.get_model(model_id)
        if record is None:
            raise UnknownModel(f"no model registered under {model_id!r}")
        if released and record.status != "released":
            raise UnknownModel(f"model {model_id} is {record.status}, not released")
        return record

    def list_models(self, status: str | None = None) -> list[ModelRecord]:
        """Model records, newest first; created_at ties broken by model_id."""
        sql = "SELECT * FROM models"
        params: tuple = ()
        if status is not None:
            sql += " WHERE status = ?"
            params = (status,)
        sql += " ORDER BY created_at DESC, model_id DESC"
        return [self._row_to_model(r) for r in self._conn.execute(sql, params)]

    def release_model(self, model_id: str) -> ModelRecord:
        """staged -> released; the artifact is checksummed at this moment."""
        record = self.require_model(model_id)
        if record.status != "staged":
            raise IllegalTransition(f"cannot release model {model_id} with status {record.status}")
        artifact = Path(record.artifact_path)
        if not artifact.exists():
            raise StorageFailure(f"artifact {artifact} for model {model_id} is missing")
        checksum = hashlib.sha256(artifact.read_bytes()).hexdigest()
        self._conn.execute(
            "UPDATE models SET status = 'released', checksum = ? WHERE model_id = ?",
            (checksum, model_id))
        self._conn.commit()
        return self.get_model(model_id)

    def retire_model(self, model_id: str) -> ModelRecord:
        record = self.require_model(model_id)
        if record.status != "released":
            raise IllegalTransition(f"cannot retire model {model_id} with status {record.status}")
        self._conn.execute(
            "UPDATE models SET status = 'retired' WHERE model_id = ?", (model_id,))
        self._conn.commit()
        return self.get_model(model_id)

    def load_artifact(self, model_id: str) -> bytes:
        """Artifact bytes; released artifacts are verified against their checksum."""
        record = self.require_model(model_id)
        artifact = Path(record.artifact_path)
        if not artifact.exists():
            raise StorageFailure(f"artifact {artifact} for model {model_id} is missing")
        data = artifact.read_bytes()
        if record.status == "released":
            actual = hashlib.sha256(data).hexdigest()
            if actual != record.checksum:
                raise ChecksumMismatch(
                    f"artifact for model {model_id} hashes to {actual[:12]}…, "
                    f"registry recorded {record.checksum[:12]}…")
        return data

    # --- export ----------------------------------------------------------------

    def export_entries(self, model_id: str):
        """Yield one JSON line per active entry (the documented export format)."""
        for entry in self.iter_all_entries(model_id):
            if entry.status != "active":
                continue
            doc = self.get_document(entry.doc_id)
            if doc is None or doc[1] != "active":
                continue
            yield json.dumps({
                "doc_id": entry.doc_id,
                "person_id": entry.person_id,
                "party": entry.party,
                "platform": entry.platform,
                "timestamp": entry.timestamp,
                "source_url": entry.source_url,
                "model_id": entry.model_id,
                "theta": encode_theta(entry.theta),
                "token_count": entry.token_count,
                "paragraph_count": entry.paragraph_count,
                "metadata": entry.metadata,
            }, sort_keys=True)
