"""Read-only HTTP API over the store: models, topics, rollups, documents.

Every endpoint is a thin view over the library calls in aggregate/store;
responses decode to exactly what the corresponding in-process call returns.
The store is only ever opened in read-only mode here — ingestion and
training run through the CLI, never through HTTP.

Error bodies are always {"code": ..., "message": ...}; malformed queries
are 400, unknown models/documents 404.
"""

from __future__ import annotations

import urllib.parse
from contextlib import contextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import aggregate, hybrid, lda
from .config import ServiceConfig
from .errors import PolidigestError, StorageFailure, UnknownModel
from .store import Store, StoredEntry
from .timeutil import format_iso8601

TOP_WORDS_PER_TOPIC = 10


class _ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def build_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="polidigest", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["GET"],
        allow_headers=["*"],
    )

    topic_sets: dict[str, dict[str, list[int]]] = {}
    if config.topic_sets_path is not None and config.topic_sets_path.exists():
        topic_sets = aggregate.load_topic_sets(config.topic_sets_path)

    artifact_cache: dict[str, object] = {}

    @contextmanager
    def open_store():
        try:
            store = Store(config.store_path, read_only=True)
        except StorageFailure as exc:
            raise _ApiError(503, "store_unavailable", str(exc)) from exc
        try:
            yield store
        finally:
            store.close()

    def resolve_model_id(model_id: str | None) -> str:
        if model_id:
            return model_id
        if config.default_model_id:
            return config.default_model_id
        raise _ApiError(400, "missing_model", "model_id is required (no default configured)")

    def released_model(store: Store, model_id: str):
        try:
            return store.require_model(model_id, released=True)
        except UnknownModel as exc:
            raise _ApiError(404, "unknown_model", str(exc)) from exc

    def load_model_artifact(store: Store, record):
        cached = artifact_cache.get(record.model_id)
        if cached is not None:
            return cached
        text = store.load_artifact(record.model_id).decode("utf-8")
        model = lda.loads_model(text) if record.backend == "lda" else hybrid.loads_hybrid_model(text)
        artifact_cache[record.model_id] = model
        return model

    def fetch_entries(store: Store, model_id: str) -> list[StoredEntry]:
        entries: list[StoredEntry] = []
        page = 0
        while True:
            batch = store.query_entries(model_id, page=page, page_size=1000)
            entries.extend(batch)
            if len(batch) < 1000:
                return entries
            page += 1

    def parse_rollup_params(params, store: Store) -> tuple[aggregate.RollupQuery, int]:
        model_id = resolve_model_id(params.get("model_id"))
        record = released_model(store, model_id)
        num_topics = int(record.config.get("k", 0))
        if num_topics < 1:
            raise _ApiError(500, "bad_model_record", f"model {model_id} has no topic count")

        def split(name: str) -> frozenset[str] | None:
            value = params.get(name)
            if not value:
                return None
            return frozenset(v for v in value.split(",") if v)

        start, end = params.get("from"), params.get("to")
        if not start or not end:
            raise _ApiError(400, "missing_range", "both 'from' and 'to' are required")
        query = aggregate.RollupQuery(
            start=start,
            end=end,
            bucket=params.get("bucket", "month"),
            model_id=model_id,
            persons=split("persons"),
            parties=split("parties"),
            platforms=split("platforms"),
            weighting=params.get("weighting", "tokens"),
        )
        try:
            query.validate()
        except ValueError as exc:
            raise _ApiError(400, "invalid_query", str(exc)) from exc
        return query, num_topics

    def parse_topic_ids(params, num_topics: int) -> list[int]:
        if not params.get("topics"):
            return []
        try:
            ids = [int(t) for t in params["topics"].split(",") if t]
        except ValueError:
            raise _ApiError(400, "invalid_query",
                            f"topics must be integer ids, got {params['topics']!r}") from None
        bad = [t for t in ids if not 0 <= t < num_topics]
        if bad:
            raise _ApiError(400, "invalid_query",
                            f"topic ids {bad} outside 0..{num_topics - 1}")
        return ids

    def rollup_payload(result: aggregate.RollupResult, topic_ids: list[int]) -> dict:
        # The share of a designated topic set is computed server-side so the
        # dashboard never does arithmetic on wire numbers.
        designated = (aggregate.topic_share_of(result, set(topic_ids))
                      if topic_ids else None)
        buckets = []
        for i, b in enumerate(result.buckets):
            item = {
                "bucket_start": format_iso8601(b.bucket_start),
                "topic_share": [float(x) for x in b.topic_share],
                "document_count": b.document_count,
                "token_count": b.token_count,
            }
            if designated is not None:
                item["designated_share"] = designated[i]
            buckets.append(item)
        return {
            "model_id": result.model_id,
            "bucket": result.bucket,
            "num_topics": result.num_topics,
            "designated_topics": topic_ids,
            "buckets": buckets,
        }

    # --- endpoints -----------------------------------------------------------

    @app.get("/api/models")
    def list_models():
        with open_store() as store:
            records = store.list_models(status="released")
            return {
                "models": [
                    {
                        "model_id": r.model_id,
                        "backend": r.backend,
                        "created_at": r.created_at,
                        "vocab_version": r.vocab_version,
                        "num_topics": r.config.get("k"),
                        "status": r.status,
                    }
                    for r in records
                ]
            }

    @app.get("/api/topics")
    def topics(model_id: str | None = None):
        with open_store() as store:
            resolved = resolve_model_id(model_id)
            record = released_model(store, resolved)
            model = load_model_artifact(store, record)
            out = []
            if record.backend == "lda":
                for k in range(model.k):
                    words = lda.top_words(model, k, TOP_WORDS_PER_TOPIC)
                    out.append({"topic": k,
                                "words": [{"word": w, "weight": float(p)} for w, p in words]})
            else:
                for k in range(model.k):
                    words = hybrid.topic_words_hybrid(model, model.embeddings, k, TOP_WORDS_PER_TOPIC)
                    out.append({"topic": k,
                                "words": [{"word": w, "weight": float(c)} for w, c in words]})
            return {
                "model_id": resolved,
                "backend": record.backend,
                "topics": out,
                "label_sets": topic_sets.get(resolved, {}),
            }

    @app.get("/api/rollup")
    def rollup_endpoint(request: Request):
        params = dict(request.query_params)
        with open_store() as store:
            query, num_topics = parse_rollup_params(params, store)
            topic_ids = parse_topic_ids(params, num_topics)
            entries = fetch_entries(store, query.model_id)
            result = aggregate.rollup(entries, query, num_topics)
            return rollup_payload(result, topic_ids)

    @app.get("/api/documents")
    def list_documents(request: Request):
        """Drill-down: documents ranked by theta mass on designated topics.

        `topics` is a comma-separated id list; omitted means all topics
        (every document then has mass 1 and the order falls back to doc_id).
        """
        params = dict(request.query_params)
        with open_store() as store:
            model_id = resolve_model_id(params.get("model_id"))
            record = released_model(store, model_id)
            num_topics = int(record.config.get("k", 0))
            topic_ids = parse_topic_ids(params, num_topics)
            try:
                limit = int(params.get("limit", 20))
            except ValueError:
                raise _ApiError(400, "invalid_query",
                                f"limit must be an integer, got {params['limit']!r}") from None
            if not 1 <= limit <= 500:
                raise _ApiError(400, "invalid_query", f"limit must be in 1..500, got {limit}")

            def split(name: str) -> set[str] | None:
                value = params.get(name)
                return set(v for v in value.split(",") if v) if value else None

            time_range = None
            if params.get("from") or params.get("to"):
                if not (params.get("from") and params.get("to")):
                    raise _ApiError(400, "invalid_query",
                                    "'from' and 'to' must be given together")
                time_range = (params["from"], params["to"])
            try:
                entries = store.query_entries(
                    model_id, persons=split("persons"), parties=split("parties"),
                    platforms=split("platforms"), time_range=time_range,
                    page_size=100_000)
            except ValueError as exc:
                raise _ApiError(400, "invalid_query", str(exc)) from exc

            def mass(entry) -> float:
                if not topic_ids:
                    return 1.0
                return float(sum(entry.theta[t] for t in topic_ids))

            ranked = sorted(entries, key=lambda e: (-mass(e), e.doc_id))[:limit]
            documents = []
            for entry in ranked:
                found = store.get_document(entry.doc_id)
                text = found[0].text if found else ""
                documents.append({
                    "doc_id": entry.doc_id,
                    "person_id": entry.person_id,
                    "party": entry.party,
                    "platform": entry.platform,
                    "timestamp": entry.timestamp,
                    "source_url": entry.source_url,
                    "topic_mass": mass(entry),
                    "theta": [float(x) for x in entry.theta],
                    "snippet": text[:240],
                })
            return {"model_id": model_id, "topics": topic_ids, "documents": documents}

    @app.get("/api/documents/{doc_id}")
    def document(doc_id: str, model_id: str | None = None):
        with open_store() as store:
            resolved = resolve_model_id(model_id)
            released_model(store, resolved)
            found = store.get_document(doc_id)
            if found is None or found[1] != "active":
                raise _ApiError(404, "unknown_document", f"no active document {doc_id}")
            doc, _ = found
            entry = store.get_entry(doc_id, resolved)
            if entry is None or entry.status != "active":
                raise _ApiError(404, "unknown_entry",
                                f"document {doc_id} has no entry under model {resolved}")
            return {
                "doc_id": doc.doc_id,
                "person_id": doc.person.id,
                "display_name": doc.person.display_name,
                "party": doc.party,
                "platform": doc.platform.value,
                "timestamp": doc.timestamp,
                "source_url": doc.source_url,
                "text": doc.text,
                "metadata": doc.metadata,
                "model_id": resolved,
                "theta": [float(x) for x in entry.theta],
                "token_count": entry.token_count,
                "paragraph_count": entry.paragraph_count,
            }

    @app.get("/api/compare")
    def compare_endpoint(left: str | None = None, right: str | None = None):
        if not left or not right:
            raise _ApiError(400, "missing_pane", "both 'left' and 'right' sub-queries are required")
        panes = []
        for raw in (left, right):
            parsed = urllib.parse.parse_qs(raw, keep_blank_values=True)
            panes.append({k: v[-1] for k, v in parsed.items()})
        with open_store() as store:
            left_query, left_k = parse_rollup_params(panes[0], store)
            right_query, right_k = parse_rollup_params(panes[1], store)
            if left_query.bucket != right_query.bucket:
                raise _ApiError(400, "bucket_mismatch",
                                f"left bucket {left_query.bucket} != right bucket {right_query.bucket}")
            if left_query.model_id != right_query.model_id:
                raise _ApiError(400, "model_mismatch",
                                f"left model {left_query.model_id} != right model {right_query.model_id}")
            entries = fetch_entries(store, left_query.model_id)
            left_result = aggregate.rollup(entries, left_query, left_k)
            right_result = aggregate.rollup(entries, right_query, right_k)
            # Panes may cover different periods (before/after an election,
            # say); buckets pair up positionally, truncating to the shorter.
            buckets = []
            for lb, rb in zip(left_result.buckets, right_result.buckets):
                buckets.append({
                    "left_bucket_start": format_iso8601(lb.bucket_start),
                    "right_bucket_start": format_iso8601(rb.bucket_start),
                    "divergence": aggregate.compare(lb.topic_share, rb.topic_share),
                    "left_share": [float(x) for x in lb.topic_share],
                    "right_share": [float(x) for x in rb.topic_share],
                    "left_document_count": lb.document_count,
                    "right_document_count": rb.document_count,
                })
            return {
                "model_id": left_query.model_id,
                "bucket": left_query.bucket,
                "buckets": buckets,
            }

    # --- error shaping ---------------------------------------------------------

    @app.exception_handler(_ApiError)
    async def api_error_handler(request: Request, exc: _ApiError):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error_response(400, "invalid_query", str(exc.errors()))

    @app.exception_handler(StarletteHTTPException)
    async def http_exception_handler(request: Request, exc: StarletteHTTPException):
        return _error_response(exc.status_code, "http_error", str(exc.detail))

    @app.exception_handler(PolidigestError)
    async def pipeline_error_handler(request: Request, exc: PolidigestError):
        # A healthy store never reaches this; surface storage corruption as 503.
        return _error_response(503, exc.__class__.__name__, str(exc))

    return app
