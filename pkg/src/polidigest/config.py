"""Pipeline configuration: one JSON file shared by the CLI and the service.

The schema below is the documented contract; load_pipeline_config validates
against it, resolves paths relative to the config file, and checks that the
referenced registry/source/stopword files exist and parse. Service settings
honor environment overrides (POLIDIGEST_HOST / POLIDIGEST_PORT); CLI flags
override both, giving the documented precedence flags > env > file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import InvalidConfig
from .hybrid import HybridTrainConfig
from .ingest import PersonRef, SourceDescriptor, load_persons, load_sources
from .lda import LdaConfig
from .textprep import default_stopwords, load_stopwords

PIPELINE_SCHEMA = {
    "type": "object",
    "required": ["store", "sources", "persons"],
    "additionalProperties": False,
    "properties": {
        "store": {"type": "string", "minLength": 1},
        "sources": {"type": "string", "minLength": 1},
        "persons": {"type": "string", "minLength": 1},
        "stopwords": {"type": "string"},
        "models_dir": {"type": "string"},
        "target_len": {"type": "integer", "minimum": 1},
        "min_count": {"type": "integer", "minimum": 1},
        "max_doc_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "backend": {"enum": ["lda", "hybrid"]},
        "infer_iterations": {"type": "integer", "minimum": 1},
        "lda": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": {"type": "integer", "minimum": 1},
                "alpha": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "iterations": {"type": "integer", "minimum": 1},
                "burn_in": {"type": "integer", "minimum": 0},
            },
        },
        "hybrid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "embeddings": {"type": "string", "minLength": 1},
                "k": {"type": "integer", "minimum": 1},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "epochs": {"type": "integer", "minimum": 0},
                "negative_samples": {"type": "integer", "minimum": 1},
                "window": {"type": "integer", "minimum": 1},
                "lambda": {"type": "number", "minimum": 0},
                "alpha_prior": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "service": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "host": {"type": "string"},
                "port": {"type": "integer", "minimum": 1, "maximum": 65535},
                "default_model_id": {"type": ["string", "null"]},
                "cors_origins": {"type": "array", "items": {"type": "string"}},
                "topic_sets": {"type": "string"},
            },
        },
    },
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    store_path: Path = Path("polidigest.db")
    default_model_id: str | None = None
    cors_origins: list[str] = field(default_factory=lambda: ["http://localhost:5173"])
    topic_sets_path: Path | None = None


@dataclass
class PipelineConfig:
    store_path: Path
    sources_path: Path
    persons_path: Path
    stopwords_path: Path | None
    models_dir: Path
    target_len: int
    min_count: int
    max_doc_fraction: float
    backend: str
    infer_iterations: int
    lda_params: dict
    hybrid_params: dict
    service: ServiceConfig

    def registry(self) -> list[PersonRef]:
        return load_persons(self.persons_path)

    def sources(self) -> list[SourceDescriptor]:
        return load_sources(self.sources_path, self.registry())

    def stopwords(self) -> set[str]:
        if self.stopwords_path is None:
            return default_stopwords("english")
        return load_stopwords(self.stopwords_path)

    def lda_config(self, seed: int, k: int | None = None) -> LdaConfig:
        params = dict(self.lda_params)
        if k is not None:
            params["k"] = k
        return LdaConfig(
            k=params.get("k", 20),
            alpha=params.get("alpha"),
            beta=params.get("beta", 0.01),
            iterations=params.get("iterations", 1000),
            burn_in=params.get("burn_in", 200),
            seed=seed,
        )

    def hybrid_config(self, seed: int) -> HybridTrainConfig:
        params = self.hybrid_params
        return HybridTrainConfig(
            learning_rate=params.get("learning_rate", 0.05),
            epochs=params.get("epochs", 10),
            negative_samples=params.get("negative_samples", 5),
            window=params.get("window", 2),
            lambda_=params.get("lambda", 1.0),
            alpha_prior=params.get("alpha_prior", 0.7),
            seed=seed,
        )

    def hybrid_k(self, k: int | None = None) -> int:
        return k if k is not None else self.hybrid_params.get("k", 20)

    def embeddings_path(self) -> Path | None:
        value = self.hybrid_params.get("embeddings")
        return Path(value) if value else None


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    """Parse, schema-validate, and sanity-check a pipeline config file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, PIPELINE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InvalidConfig(f"config {path}: {exc.message} (at {'/'.join(map(str, exc.path))})") from exc

    base = path.parent

    def resolve(value: str | None) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    service_raw = raw.get("service", {})
    host = os.environ.get("POLIDIGEST_HOST", service_raw.get("host", "127.0.0.1"))
    port_env = os.environ.get("POLIDIGEST_PORT")
    if port_env is not None:
        try:
            port = int(port_env)
        except ValueError:
            raise InvalidConfig(f"POLIDIGEST_PORT must be an integer, got {port_env!r}") from None
    else:
        port = service_raw.get("port", 8000)
    if not 1 <= port <= 65535:
        raise InvalidConfig(f"service port must be in 1..65535, got {port}")

    hybrid_params = dict(raw.get("hybrid", {}))
    if "embeddings" in hybrid_params:
        hybrid_params["embeddings"] = str(resolve(hybrid_params["embeddings"]))

    config = PipelineConfig(
        store_path=resolve(raw["store"]),
        sources_path=resolve(raw["sources"]),
        persons_path=resolve(raw["persons"]),
        stopwords_path=resolve(raw.get("stopwords")),
        models_dir=resolve(raw.get("models_dir", "models")),
        target_len=raw.get("target_len", 150),
        min_count=raw.get("min_count", 1),
        max_doc_fraction=raw.get("max_doc_fraction", 1.0),
        backend=raw.get("backend", "lda"),
        infer_iterations=raw.get("infer_iterations", 100),
        lda_params=dict(raw.get("lda", {})),
        hybrid_params=hybrid_params,
        service=ServiceConfig(
            host=host,
            port=port,
            store_path=resolve(raw["store"]),
            default_model_id=service_raw.get("default_model_id"),
            cors_origins=list(service_raw.get("cors_origins", ["http://localhost:5173"])),
            topic_sets_path=resolve(service_raw.get("topic_sets")),
        ),
    )

    for name, file_path in (("persons", config.persons_path), ("sources", config.sources_path)):
        if not file_path.exists():
            raise InvalidConfig(f"config {path}: {name} file {file_path} does not exist")
    if config.stopwords_path is not None and not config.stopwords_path.exists():
        raise InvalidConfig(f"config {path}: stopwords file {config.stopwords_path} does not exist")
    try:
        config.sources()
    except (ValueError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"config {path}: invalid sources/persons: {exc}") from exc
    return config
