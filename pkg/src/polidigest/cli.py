"""Command-line entry point: operate the pipeline end to end.

Subcommands: ingest, train, infer, release, serve, export. Progress goes to
stderr; the machine-readable result line goes to stdout. Exit codes are a
stable scripting contract: 0 success, 2 configuration error, 3 source or
bind failure, 4 data/model error. train and infer require an explicit
--seed so published numbers are reproducible: there is no hidden entropy.
"""

from __future__ import annotations

import argparse
import socket
import sys
from pathlib import Path

from .config import load_pipeline_config
from .errors import (
    EmptyCorpus,
    InvalidConfig,
    ParseFailure,
    PolidigestError,
    SourceUnavailable,
)
from .pipeline import build_corpus, infer_new_documents, ingest_source, train_and_store
from .store import Store

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOURCE = 3
EXIT_DATA = 4


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def cmd_ingest(args) -> int:
    config = load_pipeline_config(args.config)
    registry = config.registry()
    sources = config.sources()
    if args.source is not None:
        sources = [s for s in sources if s.source_id == args.source]
        if not sources:
            _progress(f"no source named {args.source!r} in {config.sources_path}")
            return EXIT_CONFIG

    totals = {"fetched": 0, "stored": 0, "quarantined": 0}
    failed = []
    with Store(config.store_path) as store:
        for descriptor in sources:
            try:
                counts = ingest_source(descriptor, registry, store)
            except (SourceUnavailable, ParseFailure) as exc:
                _progress(f"source {descriptor.source_id} failed: {exc}")
                failed.append(descriptor.source_id)
                continue
            _progress(f"source {descriptor.source_id}: fetched={counts['fetched']} "
                      f"stored={counts['stored']} quarantined={counts['quarantined']}")
            for key in totals:
                totals[key] += counts[key]

    print(f"fetched={totals['fetched']} stored={totals['stored']} quarantined={totals['quarantined']}")
    if failed:
        _progress(f"failed sources: {', '.join(failed)}")
        return EXIT_SOURCE
    return EXIT_OK


def cmd_train(args) -> int:
    config = load_pipeline_config(args.config)
    backend = args.backend or config.backend
    if backend == "hybrid" and config.embeddings_path() is None:
        _progress("hybrid backend requires config field hybrid.embeddings (path to the vector file)")
        return EXIT_CONFIG

    # Flags override the config file field for field.
    for flag in ("k", "alpha", "beta", "iterations"):
        value = getattr(args, flag)
        if value is not None:
            config.lda_params[flag] = value
    if args.burn_in is not None:
        config.lda_params["burn_in"] = args.burn_in

    with Store(config.store_path) as store:
        documents = store.list_documents(status="active")
        if not documents:
            raise EmptyCorpus("store has no active documents; run ingest first")
        _progress(f"building corpus from {len(documents)} documents")
        corpus = build_corpus(
            documents, config.stopwords(),
            min_count=config.min_count,
            max_doc_fraction=config.max_doc_fraction,
            target_len=config.target_len,
        )
        _progress(f"vocabulary size {corpus.vocab.size}, {len(corpus.paragraphs)} paragraphs")
        model_id = train_and_store(
            store, corpus, backend, config.models_dir,
            lda_config=config.lda_config(args.seed),
            hybrid_config=config.hybrid_config(args.seed),
            embeddings_path=config.embeddings_path(),
            hybrid_k=config.hybrid_k(args.k),
        )
    _progress(f"model {model_id} registered (staged); release it to serve")
    print(f"model_id={model_id}")
    return EXIT_OK


def cmd_infer(args) -> int:
    config = load_pipeline_config(args.config)
    iterations = args.iterations if args.iterations is not None else config.infer_iterations
    with Store(config.store_path) as store:
        count = infer_new_documents(
            store, args.model, seed=args.seed,
            target_len=config.target_len,
            iterations=iterations,
            since=args.since,
        )
    print(f"inferred={count}")
    return EXIT_OK


def cmd_release(args) -> int:
    config = load_pipeline_config(args.config)
    with Store(config.store_path) as store:
        record = store.release_model(args.model)
    _progress(f"model {record.model_id} released (checksum {record.checksum[:12]}…)")
    print(f"released={record.model_id}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    config = load_pipeline_config(args.config)
    service = config.service
    host = args.host or service.host
    port = args.port or service.port
    if args.model is not None:
        service.default_model_id = args.model

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        sock.bind((host, port))
    except OSError as exc:
        _progress(f"cannot bind {host}:{port}: {exc}")
        sock.close()
        return EXIT_SOURCE
    app = build_app(service)
    _progress(f"serving on http://{host}:{port}")
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return EXIT_OK


def cmd_export(args) -> int:
    config = load_pipeline_config(args.config)
    out_path = Path(args.out)
    count = 0
    with Store(config.store_path) as store:
        store.require_model(args.model)
        with open(out_path, "w", encoding="utf-8") as fh:
            for line in store.export_entries(args.model):
                fh.write(line + "\n")
                count += 1
    print(f"exported={count}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polidigest",
        description="Multi-source topic modelling over politician speech: "
                    "ingest sources, train topic models, serve rollup analytics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch all configured sources into the store")
    p.add_argument("--config", required=True, help="pipeline config file (JSON)")
    p.add_argument("--source", help="ingest only this source_id")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a topic model offline and register it staged")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True, help="RNG seed (required: no hidden entropy)")
    p.add_argument("--k", type=int, help="topic count override")
    p.add_argument("--alpha", type=float, help="document-topic prior (default 50/k)")
    p.add_argument("--beta", type=float, help="topic-word prior")
    p.add_argument("--iterations", type=int, help="Gibbs sweeps")
    p.add_argument("--burn-in", dest="burn_in", type=int, help="sweeps discarded before averaging")
    p.add_argument("--backend", choices=["lda", "hybrid"], help="override the configured backend")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="fold new documents into a released model")
    p.add_argument("--config", required=True)
    p.add_argument("--model", required=True, help="released model_id")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--iterations", type=int, help="fold-in sweeps per paragraph")
    p.add_argument("--since", help="only documents with timestamp >= this ISO-8601 instant")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("release", help="release a staged model (checksums its artifact)")
    p.add_argument("--config", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_release)

    p = sub.add_parser("serve", help="run the read-only HTTP API")
    p.add_argument("--config", required=True)
    p.add_argument("--host", help="bind address (overrides env and config)")
    p.add_argument("--port", type=int, help="port (overrides env and config)")
    p.add_argument("--model", help="default model_id for requests that omit one")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="write newline-delimited entry records for a model")
    p.add_argument("--config", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidConfig as exc:
        _progress(f"configuration error: {exc}")
        return EXIT_CONFIG
    except SourceUnavailable as exc:
        _progress(f"source error: {exc}")
        return EXIT_SOURCE
    except PolidigestError as exc:
        _progress(f"error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
