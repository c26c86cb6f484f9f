"""polidigest: multi-source topic modelling and rollups over politician speech.

The pipeline ingests heterogeneous public documents (feeds, RSS/Atom,
transcripts), segments them into similar-length paragraphs, models topics
with either collapsed-Gibbs LDA or an embedding-space hybrid trained by SGD,
and serves person/party/platform/time rollups through a read-only HTTP API.
"""

from . import aggregate, hybrid, ingest, lda, store, textprep
from .aggregate import RollupQuery, aggregate_document, compare, rollup, topic_share_of
from .hybrid import EmbeddingTable, HybridTrainConfig, load_embeddings, train_hybrid
from .ingest import Document, PersonRef, Platform, RawDocument, SourceDescriptor
from .lda import LdaConfig, LdaModel, infer, perplexity, top_words, train
from .store import ModelRecord, Store, StoredEntry
from .textprep import Paragraph, Vocabulary, build_vocabulary, encode, segment, tokenize

__version__ = "0.1.0"

__all__ = [
    "aggregate", "hybrid", "ingest", "lda", "store", "textprep",
    "RollupQuery", "aggregate_document", "compare", "rollup", "topic_share_of",
    "EmbeddingTable", "HybridTrainConfig", "load_embeddings", "train_hybrid",
    "Document", "PersonRef", "Platform", "RawDocument", "SourceDescriptor",
    "LdaConfig", "LdaModel", "infer", "perplexity", "top_words", "train",
    "ModelRecord", "Store", "StoredEntry",
    "Paragraph", "Vocabulary", "build_vocabulary", "encode", "segment", "tokenize",
    "__version__",
]
