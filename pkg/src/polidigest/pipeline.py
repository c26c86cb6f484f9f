"""End-to-end orchestration: ingest -> corpus -> train -> entries -> infer.

These functions are what the CLI subcommands call; they are importable so
notebooks and tests can drive the same paths in-process.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from . import aggregate, hybrid, lda, textprep
from .errors import EmptyCorpus, InvalidConfig, UnknownPerson
from .ingest import Document, PersonRef, SourceDescriptor, dedupe, fetch, normalize, quarantine_document
from .store import ModelRecord, ParagraphTheta, Store, StoredEntry
from .timeutil import format_iso8601, utc_now


def ingest_source(
    descriptor: SourceDescriptor,
    registry: list[PersonRef],
    store: Store,
    ingest_time: datetime | None = None,
) -> dict[str, int]:
    """Fetch one source and persist everything it yielded.

    Returns {"fetched", "stored", "quarantined"}; fetched always equals
    stored + quarantined for the batch. Documents whose author cannot be
    resolved, or whose body yields no tokens, are stored with
    status=quarantined for manual review.
    """
    seen = store.seen_external_ids(descriptor.source_id)
    raws = fetch(descriptor, seen)

    active: list[Document] = []
    quarantined: list[Document] = []
    seen_marks: list[tuple[str, str]] = []
    for raw in raws:
        try:
            doc = normalize(raw, registry, descriptor, ingest_time)
            if not textprep.tokenize(doc.text):
                doc = quarantine_document(raw, descriptor, ingest_time, reason="no_tokens")
                quarantined.append(doc)
            else:
                active.append(doc)
        except UnknownPerson:
            doc = quarantine_document(raw, descriptor, ingest_time)
            quarantined.append(doc)
        seen_marks.append((raw.external_id, doc.doc_id))

    for doc in dedupe(active):
        store.put_document(doc, status="active")
    for doc in dedupe(quarantined):
        store.put_document(doc, status="quarantined")
    for external_id, doc_id in seen_marks:
        store.mark_seen(descriptor.source_id, external_id, doc_id)

    # Raw-level accounting: every fetched record is stored or quarantined
    # (identical-content records collapse onto one doc_id in the store).
    return {"fetched": len(raws), "stored": len(active), "quarantined": len(quarantined)}


@dataclass
class Corpus:
    """Everything the trainers need, derived from the stored documents."""

    documents: list[Document]
    vocab: textprep.Vocabulary
    paragraphs: list[textprep.Paragraph]

    @property
    def encoded(self) -> list[list[int]]:
        return [p.token_ids for p in self.paragraphs]

    @property
    def para_ids(self) -> list[str]:
        return [p.para_id for p in self.paragraphs]


def build_corpus(
    documents: list[Document],
    stopwords: set[str],
    min_count: int = 1,
    max_doc_fraction: float = 1.0,
    target_len: int = 150,
) -> Corpus:
    """Tokenize, build the vocabulary, and segment every document."""
    if not documents:
        raise EmptyCorpus("no active documents in the store")
    tokenized = [textprep.tokenize(doc.text) for doc in documents]
    vocab = textprep.build_vocabulary(tokenized, min_count, max_doc_fraction, stopwords)
    paragraphs: list[textprep.Paragraph] = []
    for doc, tokens in zip(documents, tokenized):
        paragraphs.extend(textprep.segment(doc.doc_id, tokens, vocab, target_len))
    return Corpus(documents=documents, vocab=vocab, paragraphs=paragraphs)


def write_entries(
    store: Store,
    corpus: Corpus,
    model_id: str,
    thetas: list[np.ndarray],
    num_topics: int,
) -> int:
    """Aggregate paragraph mixtures per document and upsert StoredEntries."""
    by_doc: dict[str, list[int]] = {}
    for i, para in enumerate(corpus.paragraphs):
        by_doc.setdefault(para.doc_id, []).append(i)

    written = 0
    for doc in corpus.documents:
        indices = by_doc.get(doc.doc_id, [])
        para_thetas = [thetas[i] for i in indices]
        weights = [len(corpus.paragraphs[i]) for i in indices]
        theta = aggregate.aggregate_document(para_thetas, weights, num_topics)
        detail = [
            ParagraphTheta(para_id=corpus.paragraphs[i].para_id,
                           token_count=len(corpus.paragraphs[i]),
                           theta=thetas[i])
            for i in indices
        ]
        store.put_entry(StoredEntry(
            doc_id=doc.doc_id,
            person_id=doc.person.id,
            party=doc.party,
            platform=doc.platform.value,
            timestamp=doc.timestamp,
            source_url=doc.source_url,
            model_id=model_id,
            theta=theta,
            token_count=sum(weights),
            paragraph_count=len(indices),
            paragraph_thetas=detail or None,
        ))
        written += 1
    return written


def train_and_store(
    store: Store,
    corpus: Corpus,
    backend: str,
    models_dir,
    lda_config: lda.LdaConfig | None = None,
    hybrid_config: hybrid.HybridTrainConfig | None = None,
    embeddings_path=None,
    hybrid_k: int | None = None,
) -> str:
    """Train the selected backend, write its artifact, register it staged,
    and store per-document entries. Returns the model_id.

    model_id is the hash of the artifact, so re-running with identical
    inputs and seed lands on the existing registration (idempotent).
    """
    models_dir = Path(models_dir)
    models_dir.mkdir(parents=True, exist_ok=True)

    if backend == "lda":
        if lda_config is None:
            raise InvalidConfig("lda backend requires an LdaConfig")
        result = lda.train(corpus.encoded, corpus.vocab, lda_config, para_ids=corpus.para_ids)
        model_id = result.model.model_id
        artifact = models_dir / f"{model_id}.model"
        result.model.save(artifact)
        thetas = result.thetas
        num_topics = lda_config.k
        config_snapshot = {
            "backend": "lda", "k": lda_config.k, "alpha": lda_config.effective_alpha,
            "beta": lda_config.beta, "iterations": lda_config.iterations,
            "burn_in": lda_config.burn_in, "seed": lda_config.seed,
        }
    elif backend == "hybrid":
        if hybrid_config is None or embeddings_path is None or hybrid_k is None:
            raise InvalidConfig("hybrid backend requires embeddings, k, and a HybridTrainConfig")
        table = hybrid.load_embeddings(embeddings_path, corpus.vocab)
        model = hybrid.train_hybrid(corpus.encoded, table, hybrid_k, hybrid_config,
                                    vocab_version=corpus.vocab.version)
        model_id = model.model_id
        artifact = models_dir / f"{model_id}.model"
        model.save(artifact)
        thetas = hybrid.all_doc_topics(model)
        num_topics = hybrid_k
        config_snapshot = {
            "backend": "hybrid", "k": hybrid_k,
            "learning_rate": hybrid_config.learning_rate, "epochs": hybrid_config.epochs,
            "negative_samples": hybrid_config.negative_samples, "window": hybrid_config.window,
            "lambda": hybrid_config.lambda_, "alpha_prior": hybrid_config.alpha_prior,
            "seed": hybrid_config.seed,
        }
    else:
        raise InvalidConfig(f"unknown backend {backend!r}; expected lda or hybrid")

    if store.get_model(model_id) is None:
        store.register_model(ModelRecord(
            model_id=model_id,
            backend=backend,
            created_at=format_iso8601(utc_now()),
            config=config_snapshot,
            vocab_version=corpus.vocab.version,
            artifact_path=str(artifact),
        ))
    write_entries(store, corpus, model_id, thetas, num_topics)
    return model_id


def derive_seed(seed: int, para_id: str) -> int:
    """Per-paragraph fold-in seed: first 8 bytes of sha256("{seed}:{para_id}")."""
    digest = hashlib.sha256(f"{seed}:{para_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def infer_new_documents(
    store: Store,
    model_id: str,
    seed: int,
    target_len: int = 150,
    iterations: int = 100,
    since: str | None = None,
) -> int:
    """Fold documents lacking an entry under `model_id` into the released model.

    Idempotent: a second run finds nothing to do. Only lda-backend models
    support online inference; hybrid models cover new documents by offline
    retraining.
    """
    record = store.require_model(model_id, released=True)
    if record.backend != "lda":
        raise InvalidConfig(
            f"model {model_id} uses backend {record.backend}; online inference "
            "requires an lda model (retrain and release to cover new documents)")
    model = lda.loads_model(store.load_artifact(model_id).decode("utf-8"))

    have = store.entry_doc_ids(model_id)
    todo = [d for d in store.list_documents(status="active", since=since)
            if d.doc_id not in have]

    k = model.k
    for doc in todo:
        tokens = textprep.tokenize(doc.text)
        paragraphs = textprep.segment(doc.doc_id, tokens, model.vocab, target_len)
        para_thetas = [
            lda.infer(model, p.token_ids, iterations=iterations,
                      seed=derive_seed(seed, p.para_id))
            for p in paragraphs
        ]
        weights = [len(p) for p in paragraphs]
        theta = aggregate.aggregate_document(para_thetas, weights, k)
        detail = [ParagraphTheta(para_id=p.para_id, token_count=len(p), theta=t)
                  for p, t in zip(paragraphs, para_thetas)]
        store.put_entry(StoredEntry(
            doc_id=doc.doc_id,
            person_id=doc.person.id,
            party=doc.party,
            platform=doc.platform.value,
            timestamp=doc.timestamp,
            source_url=doc.source_url,
            model_id=model_id,
            theta=theta,
            token_count=sum(weights),
            paragraph_count=len(paragraphs),
            paragraph_thetas=detail or None,
        ))
    return len(todo)
