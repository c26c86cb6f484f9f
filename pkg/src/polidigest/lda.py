"""Latent Dirichlet allocation over paragraphs via collapsed Gibbs sampling.

Training integrates out the topic mixtures and topic-word distributions and
resamples one token's topic at a time from the count-based conditional

    p(k) ∝ (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta)

where all counts exclude the token being resampled. Paragraph mixtures are
estimated as (n_dk + alpha) / (n_d + K*alpha) averaged over the sweeps kept
after burn-in. New paragraphs are folded in against a frozen model: the
topic-word counts never move, only the paragraph's own assignments do.

All randomness flows from a PCG64 generator seeded by the caller, so any
two runs with equal inputs and seed produce bit-identical models.
"""

from __future__ import annotations

import dataclasses
import hashlib
import re
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCorpus, EmptyParagraph, FormatError, InvalidConfig, TopicOutOfRange
from .textprep import Vocabulary

MODEL_FORMAT_TAG = "polidigest-lda v1"


@dataclass(frozen=True)
class LdaConfig:
    """Sampler hyperparameters. alpha defaults to 50/K when left as None."""

    k: int = 20
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    seed: int = 0

    @property
    def effective_alpha(self) -> float:
        return 50.0 / self.k if self.alpha is None else self.alpha

    def validate(self) -> None:
        if self.k < 1:
            raise InvalidConfig(f"k must be >= 1, got {self.k}")
        if self.effective_alpha <= 0:
            raise InvalidConfig(f"alpha must be > 0, got {self.effective_alpha}")
        if self.beta <= 0:
            raise InvalidConfig(f"beta must be > 0, got {self.beta}")
        if not self.iterations > self.burn_in >= 0:
            raise InvalidConfig(
                f"need iterations > burn_in >= 0, got iterations={self.iterations} burn_in={self.burn_in}"
            )
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidConfig(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass
class TopicAssignment:
    """Final per-token topic indices for one paragraph."""

    para_id: str
    z: list[int]


@dataclass
class LdaModel:
    """Trained topic-word statistics plus the vocabulary they index."""

    config: LdaConfig
    vocab: Vocabulary
    n_kw: np.ndarray  # K x V integer topic-word counts
    n_k: np.ndarray   # length-K topic totals
    model_id: str = ""

    def __post_init__(self):
        if not self.model_id:
            self.model_id = "lda-" + hashlib.sha256(self._payload().encode("utf-8")).hexdigest()[:16]

    @property
    def k(self) -> int:
        return int(self.n_kw.shape[0])

    @property
    def vocab_version(self) -> str:
        return self.vocab.version

    @property
    def phi(self) -> np.ndarray:
        """Row-stochastic K x V topic-word matrix: (n_kw + beta) / (n_k + V*beta)."""
        beta = self.config.beta
        v = self.n_kw.shape[1]
        return (self.n_kw + beta) / (self.n_k + v * beta)[:, None]

    def _payload(self) -> str:
        cfg = self.config
        lines = [
            MODEL_FORMAT_TAG,
            f"config k={cfg.k} alpha={cfg.effective_alpha!r} beta={cfg.beta!r} "
            f"iterations={cfg.iterations} burn_in={cfg.burn_in} seed={cfg.seed}",
        ]
        vocab_text = self.vocab.dumps()
        vocab_lines = vocab_text.count("\n")
        lines.append(f"vocab_lines {vocab_lines}")
        lines.append(vocab_text.rstrip("\n"))
        k, v = self.n_kw.shape
        lines.append(f"n_kw {k} {v}")
        for row in self.n_kw:
            lines.append(" ".join(str(int(c)) for c in row))
        return "\n".join(lines) + "\n"

    def dumps(self) -> str:
        return self._payload() + f"model_id {self.model_id}\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())


def theta_estimate(n_dk: np.ndarray, alpha: float) -> np.ndarray:
    """Mixture estimate (n_dk + alpha) / (n_d + K*alpha), rows independent."""
    n_dk = np.atleast_2d(np.asarray(n_dk, dtype=float))
    k = n_dk.shape[1]
    return (n_dk + alpha) / (n_dk.sum(axis=1) + k * alpha)[:, None]


@dataclass
class TrainResult:
    model: LdaModel
    thetas: list[np.ndarray]
    perplexity_per_sweep: list[float] = field(repr=False)
    assignments: list[TopicAssignment] = field(repr=False)
    n_dk: np.ndarray = field(repr=False, default=None)


def train(
    paragraphs: list[list[int]],
    vocab: Vocabulary,
    config: LdaConfig,
    para_ids: list[str] | None = None,
) -> TrainResult:
    """Run collapsed Gibbs sampling over encoded paragraphs.

    Returns the trained model, one averaged topic distribution per input
    paragraph (uniform for empty ones), the per-sweep training perplexity,
    and the final token-topic assignments.
    """
    config.validate()
    if vocab.size < 1:
        raise EmptyCorpus("vocabulary is empty")
    if not any(paragraphs):
        raise EmptyCorpus(f"no non-empty paragraph among {len(paragraphs)}")
    k, v = config.k, vocab.size
    alpha, beta = config.effective_alpha, config.beta
    for p, para in enumerate(paragraphs):
        for w in para:
            if not 0 <= w < v:
                raise InvalidConfig(f"token id {w} in paragraph {p} outside vocabulary 0..{v - 1}")

    # Flatten for the sampler: plain lists keep the inner loop cheap.
    words: list[int] = []
    bounds: list[tuple[int, int]] = []
    for para in paragraphs:
        start = len(words)
        words.extend(para)
        bounds.append((start, len(words)))
    n_tokens = len(words)

    rng = np.random.Generator(np.random.PCG64(config.seed))
    z = rng.integers(0, k, size=n_tokens).tolist()

    n_dk = [[0] * k for _ in paragraphs]
    n_wk = [[0] * k for _ in range(v)]
    n_k = [0] * k
    for d, (start, end) in enumerate(bounds):
        for i in range(start, end):
            topic = z[i]
            n_dk[d][topic] += 1
            n_wk[words[i]][topic] += 1
            n_k[topic] += 1

    doc_idx = np.repeat(np.arange(len(paragraphs)), [len(p) for p in paragraphs])
    word_idx = np.array(words, dtype=np.int64)
    para_len = np.array([len(p) for p in paragraphs], dtype=float)

    vbeta = v * beta
    cum = [0.0] * k
    theta_acc = np.zeros((len(paragraphs), k))
    retained = 0
    perplexity_trace: list[float] = []

    for sweep in range(1, config.iterations + 1):
        u = rng.random(n_tokens).tolist()
        for d, (start, end) in enumerate(bounds):
            nd = n_dk[d]
            for i in range(start, end):
                w = words[i]
                col = n_wk[w]
                topic = z[i]
                nd[topic] -= 1
                col[topic] -= 1
                n_k[topic] -= 1
                total = 0.0
                for kk in range(k):
                    total += (nd[kk] + alpha) * (col[kk] + beta) / (n_k[kk] + vbeta)
                    cum[kk] = total
                topic = bisect_right(cum, u[i] * total)
                if topic == k:  # u*total rounded up to total
                    topic = k - 1
                z[i] = topic
                nd[topic] += 1
                col[topic] += 1
                n_k[topic] += 1

        n_dk_arr = np.asarray(n_dk, dtype=float)
        theta_sweep = (n_dk_arr + alpha) / (para_len + k * alpha)[:, None]
        phi_sweep = (np.asarray(n_wk, dtype=float).T + beta) / (np.asarray(n_k, dtype=float) + vbeta)[:, None]
        perplexity_trace.append(_perplexity_flat(theta_sweep, phi_sweep, doc_idx, word_idx))
        if sweep > config.burn_in:
            theta_acc += theta_sweep
            retained += 1

    thetas = [row for row in theta_acc / retained]

    model = LdaModel(
        # Pin the resolved alpha so the artifact is self-describing.
        config=dataclasses.replace(config, alpha=alpha),
        vocab=vocab,
        n_kw=np.asarray(n_wk, dtype=np.int64).T.copy(),
        n_k=np.asarray(n_k, dtype=np.int64),
    )
    ids = para_ids if para_ids is not None else [str(i) for i in range(len(paragraphs))]
    assignments = [
        TopicAssignment(para_id=ids[d], z=z[start:end]) for d, (start, end) in enumerate(bounds)
    ]
    return TrainResult(
        model=model,
        thetas=thetas,
        perplexity_per_sweep=perplexity_trace,
        assignments=assignments,
        n_dk=np.asarray(n_dk, dtype=np.int64),
    )


def infer(model: LdaModel, tokens: list[int], iterations: int = 100, seed: int = 0) -> np.ndarray:
    """Fold a single encoded paragraph into a frozen model.

    Topic-word counts stay fixed; only this paragraph's assignments are
    resampled. Returns the mixture averaged over the last ceil(iterations/2)
    sweeps. The model is never mutated.
    """
    if iterations < 1:
        raise InvalidConfig(f"iterations must be >= 1, got {iterations}")
    if not tokens:
        raise EmptyParagraph("all tokens were out of vocabulary")
    k = model.k
    alpha = model.config.effective_alpha
    # Frozen topic-word weight per token position: (n_kw + beta) / (n_k + V*beta).
    weights = model.phi[:, tokens]  # K x n
    wcols = [weights[:, i].tolist() for i in range(len(tokens))]

    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.integers(0, k, size=len(tokens)).tolist()
    nd = [0] * k
    for topic in z:
        nd[topic] += 1

    cum = [0.0] * k
    theta_acc = np.zeros(k)
    first_kept = iterations // 2 + 1
    retained = 0
    n = float(len(tokens))

    for sweep in range(1, iterations + 1):
        u = rng.random(len(tokens)).tolist()
        for i in range(len(tokens)):
            col = wcols[i]
            topic = z[i]
            nd[topic] -= 1
            total = 0.0
            for kk in range(k):
                total += (nd[kk] + alpha) * col[kk]
                cum[kk] = total
            topic = bisect_right(cum, u[i] * total)
            if topic == k:
                topic = k - 1
            z[i] = topic
            nd[topic] += 1
        if sweep >= first_kept:
            theta_acc += (np.asarray(nd, dtype=float) + alpha) / (n + k * alpha)
            retained += 1

    return theta_acc / retained


def _perplexity_flat(theta: np.ndarray, phi: np.ndarray, doc_idx: np.ndarray, word_idx: np.ndarray) -> float:
    token_prob = np.einsum("nk,kn->n", theta[doc_idx], phi[:, word_idx])
    return float(np.exp(-np.log(token_prob).mean()))


def perplexity(model: LdaModel, paragraphs: list[list[int]], thetas: list[np.ndarray]) -> float:
    """exp(- mean log p(token)) with p(token) = sum_k theta_dk * phi_kw."""
    n_tokens = sum(len(p) for p in paragraphs)
    if n_tokens == 0:
        raise EmptyCorpus("no tokens to evaluate")
    doc_idx = np.repeat(np.arange(len(paragraphs)), [len(p) for p in paragraphs])
    word_idx = np.array([w for p in paragraphs for w in p], dtype=np.int64)
    return _perplexity_flat(np.vstack(thetas), model.phi, doc_idx, word_idx)


def top_words(model: LdaModel, topic: int, n: int) -> list[tuple[str, float]]:
    """The n highest-probability words of a topic, ties broken lexicographically."""
    if not 0 <= topic < model.k:
        raise TopicOutOfRange(f"topic {topic} outside 0..{model.k - 1}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    row = model.phi[topic]
    order = sorted(range(len(row)), key=lambda w: (-row[w], model.vocab.word_of[w]))
    return [(model.vocab.word_of[w], float(row[w])) for w in order[:n]]


def permute_topics(model: LdaModel, perm: list[int]) -> LdaModel:
    """Relabel topics: new topic i is old topic perm[i]."""
    if sorted(perm) != list(range(model.k)):
        raise InvalidConfig(f"perm must be a permutation of 0..{model.k - 1}")
    idx = np.asarray(perm)
    return LdaModel(config=model.config, vocab=model.vocab,
                    n_kw=model.n_kw[idx].copy(), n_k=model.n_k[idx].copy())


def load_model(path) -> LdaModel:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_model(fh.read())


def loads_model(text: str) -> LdaModel:
    """Parse and validate a serialized model; raises FormatError on any defect."""
    lines = text.splitlines()
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise FormatError("truncated model file")
        line = lines[pos]
        pos += 1
        return line

    if take() != MODEL_FORMAT_TAG:
        raise FormatError("unrecognized model format tag")
    cfg_line = take()
    m = re.fullmatch(
        r"config k=(\d+) alpha=([0-9.eE+-]+) beta=([0-9.eE+-]+) iterations=(\d+) burn_in=(\d+) seed=(\d+)",
        cfg_line,
    )
    if not m:
        raise FormatError(f"bad config line: {cfg_line!r}")
    config = LdaConfig(
        k=int(m.group(1)), alpha=float(m.group(2)), beta=float(m.group(3)),
        iterations=int(m.group(4)), burn_in=int(m.group(5)), seed=int(m.group(6)),
    )
    vocab_header = take()
    if not vocab_header.startswith("vocab_lines "):
        raise FormatError(f"expected vocab_lines, got {vocab_header!r}")
    n_vocab_lines = int(vocab_header.split()[1])
    vocab_text = "\n".join(take() for _ in range(n_vocab_lines)) + "\n"
    vocab = Vocabulary.loads(vocab_text)

    shape_line = take()
    parts = shape_line.split()
    if len(parts) != 3 or parts[0] != "n_kw":
        raise FormatError(f"expected n_kw header, got {shape_line!r}")
    k, v = int(parts[1]), int(parts[2])
    if v != vocab.size:
        raise FormatError(f"n_kw width {v} != vocabulary size {vocab.size}")
    rows = []
    for _ in range(k):
        row = [int(c) for c in take().split()]
        if len(row) != v:
            raise FormatError(f"n_kw row has {len(row)} entries, expected {v}")
        if any(c < 0 for c in row):
            raise FormatError("negative count in n_kw")
        rows.append(row)
    n_kw = np.asarray(rows, dtype=np.int64)

    id_line = take()
    if not id_line.startswith("model_id "):
        raise FormatError(f"expected model_id, got {id_line!r}")
    model = LdaModel(config=config, vocab=vocab, n_kw=n_kw, n_k=n_kw.sum(axis=1))
    if model.model_id != id_line.split()[1]:
        raise FormatError(
            f"model_id mismatch: file says {id_line.split()[1]}, content hashes to {model.model_id}"
        )
    row_sums = model.phi.sum(axis=1)
    if not np.allclose(row_sums, 1.0, atol=1e-9):
        raise FormatError("phi rows do not sum to 1")
    return model
