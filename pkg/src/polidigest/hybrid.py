"""Embedding-space topic model: topics and documents live in word-vector space.

Topics are vectors in the same space as a frozen pretrained word embedding
table. Each paragraph carries unnormalized topic weights whose softmax is its
mixture. Training is plain SGD over skip-gram pairs: the context vector is
the pivot word's embedding plus the mixture-weighted sum of topic vectors,
scored against output vectors with negative sampling, plus a Dirichlet
log-prior on the mixture that pushes it sparse when alpha_prior < 1:

    L = L_neg + lambda * L_dir
    L_neg = -log sigmoid(c . out[ctx]) - sum_neg log sigmoid(-c . out[neg])
    L_dir = -sum_k (alpha_prior - 1) * log softmax(logits)_k

Word input vectors are never updated; topic vectors, paragraph logits, and
output vectors are. Iteration order is fixed (epoch, paragraph, position,
context offset left to right) and all draws come from one PCG64 stream, so
equal seeds give bit-identical models.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    DivergenceDetected,
    FormatError,
    IndexOutOfRange,
    InsufficientCoverage,
    InvalidConfig,
    TopicOutOfRange,
)
from .textprep import Vocabulary

HYBRID_FORMAT_TAG = "polidigest-hybrid v1"

# Exponent flattening the unigram distribution for negative sampling.
NEGATIVE_SAMPLING_POWER = 0.75


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - np.max(x))
    return e / e.sum()


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def _log_sigmoid(x: float) -> float:
    if x >= 0:
        return -np.log1p(np.exp(-x))
    return x - np.log1p(np.exp(x))


@dataclass
class EmbeddingTable:
    """Pretrained word vectors for the subset of the vocabulary the file covers."""

    dim: int
    words: list[str]
    vocab_ids: list[int]
    vectors: np.ndarray  # len(words) x dim
    coverage: float

    def __post_init__(self):
        self.row_of = {vid: r for r, vid in enumerate(self.vocab_ids)}

    def __len__(self) -> int:
        return len(self.words)


def load_embeddings(path: str | Path, vocab: Vocabulary) -> EmbeddingTable:
    """Read a text embedding file (header "V D", rows "word v1 .. vD").

    Keeps only rows for vocabulary words; absent words get no vector and are
    excluded from hybrid training rather than zero-filled. Raises
    DimensionMismatch when a row's arity disagrees with the header, and
    FormatError for a bad header, bad numbers, or NaN/Inf entries.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty embedding file")
    header = lines[0].split()
    if len(header) != 2:
        raise FormatError(f"{path}: header must be 'V D', got {lines[0]!r}")
    try:
        declared_rows, dim = int(header[0]), int(header[1])
    except ValueError:
        raise FormatError(f"{path}: non-integer header {lines[0]!r}") from None
    if dim < 1:
        raise FormatError(f"{path}: dimension must be >= 1, got {dim}")
    if len(lines) - 1 != declared_rows:
        raise FormatError(f"{path}: header declares {declared_rows} rows, file has {len(lines) - 1}")

    words: list[str] = []
    vocab_ids: list[int] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != dim + 1:
            raise DimensionMismatch(
                f"{path}:{lineno}: row has {len(parts) - 1} values, header declares {dim}"
            )
        word = parts[0]
        try:
            values = [float(v) for v in parts[1:]]
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric vector component") from None
        if not all(np.isfinite(values)):
            raise FormatError(f"{path}:{lineno}: NaN or Inf vector component")
        if word in seen or word not in vocab.id_of:
            continue
        seen.add(word)
        words.append(word)
        vocab_ids.append(vocab.id_of[word])
        rows.append(values)

    vectors = np.asarray(rows, dtype=float) if rows else np.zeros((0, dim))
    return EmbeddingTable(
        dim=dim, words=words, vocab_ids=vocab_ids, vectors=vectors,
        coverage=len(words) / vocab.size,
    )


@dataclass(frozen=True)
class HybridTrainConfig:
    learning_rate: float = 0.05
    epochs: int = 10
    negative_samples: int = 5
    window: int = 2
    lambda_: float = 1.0
    alpha_prior: float = 0.7
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise InvalidConfig(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise InvalidConfig(f"epochs must be >= 0, got {self.epochs}")
        if self.negative_samples < 1:
            raise InvalidConfig(f"negative_samples must be >= 1, got {self.negative_samples}")
        if self.window < 1:
            raise InvalidConfig(f"window must be >= 1, got {self.window}")
        if self.lambda_ < 0:
            raise InvalidConfig(f"lambda must be >= 0, got {self.lambda_}")
        if not 0 < self.alpha_prior < 1:
            raise InvalidConfig(f"alpha_prior must be in (0, 1), got {self.alpha_prior}")


@dataclass
class HybridModel:
    """Trained topic vectors, paragraph logits, and output vectors."""

    config: HybridTrainConfig
    embeddings: EmbeddingTable
    vocab_version: str
    topic_vectors: np.ndarray        # K x D, trained
    word_output_vectors: np.ndarray  # rows x D, trained
    doc_logits: np.ndarray           # P x K, trained
    model_id: str = ""

    def __post_init__(self):
        if not self.model_id:
            self.model_id = "hybrid-" + hashlib.sha256(self._payload().encode("utf-8")).hexdigest()[:16]

    @property
    def k(self) -> int:
        return int(self.topic_vectors.shape[0])

    @property
    def num_paragraphs(self) -> int:
        return int(self.doc_logits.shape[0])

    def _payload(self) -> str:
        cfg = self.config
        out = [
            HYBRID_FORMAT_TAG,
            f"config lr={cfg.learning_rate!r} epochs={cfg.epochs} negative_samples={cfg.negative_samples} "
            f"window={cfg.window} lambda={cfg.lambda_!r} alpha_prior={cfg.alpha_prior!r} seed={cfg.seed}",
            f"vocab_version {self.vocab_version}",
            f"embedding_rows {len(self.embeddings)} {self.embeddings.dim}",
        ]
        for word, vid, vec in zip(self.embeddings.words, self.embeddings.vocab_ids, self.embeddings.vectors):
            out.append(f"{word} {vid} " + " ".join(repr(float(x)) for x in vec))
        for name, mat in (("topic_vectors", self.topic_vectors),
                          ("output_vectors", self.word_output_vectors),
                          ("doc_logits", self.doc_logits)):
            out.append(f"{name} {mat.shape[0]} {mat.shape[1]}")
            for row in mat:
                out.append(" ".join(repr(float(x)) for x in row))
        return "\n".join(out) + "\n"

    def dumps(self) -> str:
        return self._payload() + f"model_id {self.model_id}\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())


def hybrid_loss(
    model: HybridModel,
    doc_index: int,
    pivot: int,
    context: int,
    negatives: list[int],
) -> float:
    """Per-pair loss: negative-sampling skip-gram term plus Dirichlet prior.

    `pivot`, `context`, and `negatives` are embedding-table row indices;
    `doc_index` selects the paragraph whose mixture shapes the context vector.
    """
    if not 0 <= doc_index < model.num_paragraphs:
        raise IndexOutOfRange(f"doc_index {doc_index} outside 0..{model.num_paragraphs - 1}")
    loss, _ = _pair_loss_and_grads(
        model.embeddings.vectors, model.word_output_vectors, model.topic_vectors,
        model.doc_logits[doc_index], model.config.lambda_, model.config.alpha_prior,
        pivot, context, negatives, want_grads=False,
    )
    return loss


def _pair_loss_and_grads(word_vectors, output_vectors, topic_vectors, logits,
                         lam, alpha_prior, pivot, context, negatives, want_grads=True):
    n_rows = word_vectors.shape[0]
    for name, idx in [("pivot", pivot), ("context", context)] + [("negative", i) for i in negatives]:
        if not 0 <= idx < n_rows:
            raise IndexOutOfRange(f"{name} row {idx} outside 0..{n_rows - 1}")

    p = _softmax(logits)
    topic_mix = p @ topic_vectors  # D
    c = word_vectors[pivot] + topic_mix

    s_pos = float(c @ output_vectors[context])
    loss = -_log_sigmoid(s_pos)
    g_scores = [(context, _sigmoid(s_pos) - 1.0)]
    for nidx in negatives:
        s_neg = float(c @ output_vectors[nidx])
        loss += -_log_sigmoid(-s_neg)
        g_scores.append((nidx, _sigmoid(s_neg)))

    loss += lam * float(-(alpha_prior - 1.0) * np.log(p).sum())

    if not want_grads:
        return float(loss), None

    k = topic_vectors.shape[0]
    d_c = np.zeros_like(c)
    grad_out: dict[int, np.ndarray] = {}
    for idx, g in g_scores:
        d_c += g * output_vectors[idx]
        if idx in grad_out:
            grad_out[idx] = grad_out[idx] + g * c
        else:
            grad_out[idx] = g * c

    grad_topics = np.outer(p, d_c)  # K x D
    # d c / d logit_j = p_j * (t_j - sum_k p_k t_k)
    grad_logits = p * ((topic_vectors - topic_mix) @ d_c)
    grad_logits += lam * (-(alpha_prior - 1.0) * (1.0 - k * p))

    return float(loss), (grad_topics, grad_logits, grad_out)


def train_hybrid(
    paragraphs: list[list[int]],
    embeddings: EmbeddingTable,
    k: int,
    config: HybridTrainConfig,
    vocab_version: str = "",
) -> HybridModel:
    """SGD over skip-gram pairs within `window`, one paragraph at a time.

    Paragraph tokens without an embedding row are skipped. Raises
    InsufficientCoverage when no paragraph has two covered tokens, and
    DivergenceDetected as soon as the running loss goes non-finite.
    """
    config.validate()
    if k < 1:
        raise InvalidConfig(f"k must be >= 1, got {k}")
    if embeddings.coverage <= 0:
        raise InsufficientCoverage("embedding table covers no vocabulary word")

    row_of = embeddings.row_of
    encoded = [[row_of[w] for w in para if w in row_of] for para in paragraphs]
    if not any(len(rows) >= 2 for rows in encoded):
        raise InsufficientCoverage("no paragraph has >= 2 tokens with embedding vectors")

    rng = np.random.Generator(np.random.PCG64(config.seed))
    topic_vectors = rng.normal(0.0, 0.1, size=(k, embeddings.dim))
    doc_logits = rng.normal(0.0, 0.1, size=(len(paragraphs), k))
    output_vectors = np.zeros((len(embeddings), embeddings.dim))

    # Negative sampling from the unigram distribution raised to 0.75.
    counts = np.zeros(len(embeddings))
    for rows in encoded:
        for r in rows:
            counts[r] += 1
    weights = counts ** NEGATIVE_SAMPLING_POWER
    cum = np.cumsum(weights / weights.sum())

    lr = config.learning_rate
    for epoch in range(config.epochs):
        for d, rows in enumerate(encoded):
            para_loss = 0.0
            for i, pivot in enumerate(rows):
                lo = max(0, i - config.window)
                hi = min(len(rows), i + config.window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    negatives = np.searchsorted(cum, rng.random(config.negative_samples)).tolist()
                    loss, (g_topics, g_logits, g_out) = _pair_loss_and_grads(
                        embeddings.vectors, output_vectors, topic_vectors, doc_logits[d],
                        config.lambda_, config.alpha_prior, pivot, rows[j], negatives)
                    para_loss += loss
                    topic_vectors -= lr * g_topics
                    doc_logits[d] -= lr * g_logits
                    for idx, g in g_out.items():
                        output_vectors[idx] -= lr * g
            if not np.isfinite(para_loss):
                raise DivergenceDetected(
                    f"non-finite loss at epoch {epoch}, paragraph {d}; lower the learning rate"
                )

    return HybridModel(
        config=config, embeddings=embeddings, vocab_version=vocab_version,
        topic_vectors=topic_vectors, word_output_vectors=output_vectors,
        doc_logits=doc_logits,
    )


def doc_topics_hybrid(model: HybridModel, index: int) -> np.ndarray:
    """Mixture of one trained paragraph: softmax of its logits row."""
    if not 0 <= index < model.num_paragraphs:
        raise IndexOutOfRange(f"paragraph index {index} outside 0..{model.num_paragraphs - 1}")
    return _softmax(model.doc_logits[index])


def all_doc_topics(model: HybridModel) -> list[np.ndarray]:
    return [doc_topics_hybrid(model, i) for i in range(model.num_paragraphs)]


def topic_words_hybrid(
    model: HybridModel,
    embeddings: EmbeddingTable,
    topic: int,
    n: int,
) -> list[tuple[str, float]]:
    """Words whose embedding is most cosine-similar to a topic vector."""
    if not 0 <= topic < model.k:
        raise TopicOutOfRange(f"topic {topic} outside 0..{model.k - 1}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    t = model.topic_vectors[topic]
    t_norm = np.linalg.norm(t)
    sims = []
    for word, vec in zip(embeddings.words, embeddings.vectors):
        denom = t_norm * np.linalg.norm(vec)
        sims.append((word, float(vec @ t / denom) if denom > 0 else 0.0))
    sims.sort(key=lambda ws: (-ws[1], ws[0]))
    return sims[:n]


def mixture_entropy(mixture: np.ndarray) -> float:
    """Shannon entropy (nats) of a mixture; the sparsity diagnostic."""
    p = np.asarray(mixture)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def load_hybrid_model(path) -> HybridModel:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_hybrid_model(fh.read())


def loads_hybrid_model(text: str) -> HybridModel:
    lines = text.splitlines()
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise FormatError("truncated hybrid model file")
        line = lines[pos]
        pos += 1
        return line

    if take() != HYBRID_FORMAT_TAG:
        raise FormatError("unrecognized hybrid model format tag")
    m = re.fullmatch(
        r"config lr=([0-9.eE+-]+) epochs=(\d+) negative_samples=(\d+) window=(\d+) "
        r"lambda=([0-9.eE+-]+) alpha_prior=([0-9.eE+-]+) seed=(\d+)",
        take(),
    )
    if not m:
        raise FormatError("bad hybrid config line")
    config = HybridTrainConfig(
        learning_rate=float(m.group(1)), epochs=int(m.group(2)),
        negative_samples=int(m.group(3)), window=int(m.group(4)),
        lambda_=float(m.group(5)), alpha_prior=float(m.group(6)), seed=int(m.group(7)),
    )
    vv_line = take()
    if not vv_line.startswith("vocab_version "):
        raise FormatError(f"expected vocab_version, got {vv_line!r}")
    vocab_version = vv_line.split()[1] if len(vv_line.split()) > 1 else ""

    emb_header = take().split()
    if len(emb_header) != 3 or emb_header[0] != "embedding_rows":
        raise FormatError("expected embedding_rows header")
    n_rows, dim = int(emb_header[1]), int(emb_header[2])
    words, vocab_ids, vecs = [], [], []
    for _ in range(n_rows):
        parts = take().split()
        if len(parts) != dim + 2:
            raise FormatError("bad embedding row in hybrid model")
        words.append(parts[0])
        vocab_ids.append(int(parts[1]))
        vecs.append([float(x) for x in parts[2:]])
    embeddings = EmbeddingTable(
        dim=dim, words=words, vocab_ids=vocab_ids,
        vectors=np.asarray(vecs, dtype=float) if vecs else np.zeros((0, dim)),
        coverage=1.0,
    )

    def read_matrix(name: str) -> np.ndarray:
        header = take().split()
        if len(header) != 3 or header[0] != name:
            raise FormatError(f"expected {name} header")
        r, c = int(header[1]), int(header[2])
        mat = np.asarray([[float(x) for x in take().split()] for _ in range(r)], dtype=float)
        if mat.shape != (r, c):
            raise FormatError(f"{name} shape mismatch")
        if mat.size and not np.isfinite(mat).all():
            raise FormatError(f"{name} contains NaN or Inf")
        return mat

    topic_vectors = read_matrix("topic_vectors")
    output_vectors = read_matrix("output_vectors")
    doc_logits = read_matrix("doc_logits")

    id_line = take()
    if not id_line.startswith("model_id "):
        raise FormatError(f"expected model_id, got {id_line!r}")
    model = HybridModel(
        config=config, embeddings=embeddings, vocab_version=vocab_version,
        topic_vectors=topic_vectors, word_output_vectors=output_vectors,
        doc_logits=doc_logits,
    )
    if model.model_id != id_line.split()[1]:
        raise FormatError("hybrid model_id does not match content hash")
    return model
