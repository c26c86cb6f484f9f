"""Tokenization, vocabulary construction, and paragraph segmentation.

Documents are reduced to lowercase word tokens, filtered through a
frequency-based vocabulary, and split into consecutive paragraphs of
similar length. Paragraphs are the unit all topic inference runs on:
a short post maps to a single paragraph while a long speech is split
into several balanced ones.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from collections import Counter

from .errors import EmptyVocabulary, FormatError

# Maximal runs of Unicode alphanumerics; underscore is a boundary.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

VOCAB_FORMAT_TAG = "polidigest-vocab v1"


def tokenize(text: str) -> list[str]:
    """Lowercase `text` and split it into word tokens.

    Boundaries are non-alphanumeric characters (Unicode-aware). Pure digit
    tokens and single-character tokens are dropped. May return [].
    """
    tokens = _TOKEN_RE.findall(text.lower())
    return [t for t in tokens if len(t) > 1 and not t.isdigit()]


def load_stopwords(path: str | Path) -> set[str]:
    """Read a stopword file: UTF-8, one token per line, '#' starts a comment."""
    words: set[str] = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line)
    return words


def default_stopwords(language: str = "english") -> set[str]:
    """Stopword set shipped with the package ('english' or 'none')."""
    return load_stopwords(Path(__file__).parent / "data" / f"stopwords_{language}.txt")


@dataclass
class Vocabulary:
    """Dense word <-> id mapping with the corpus counts that produced it.

    Ids are assigned in descending corpus frequency, ties broken
    lexicographically, so id 0 is always the most frequent retained word.
    """

    id_of: dict[str, int]
    word_of: list[str]
    counts: list[int]  # corpus frequency per id
    min_count: int
    max_doc_fraction: float

    @property
    def size(self) -> int:
        return len(self.word_of)

    def __len__(self) -> int:
        return len(self.word_of)

    def __contains__(self, word: str) -> bool:
        return word in self.id_of

    @property
    def version(self) -> str:
        """Content hash identifying this vocabulary snapshot."""
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()[:16]

    def dumps(self) -> str:
        header = f"{VOCAB_FORMAT_TAG}\nmin_count={self.min_count} max_doc_fraction={self.max_doc_fraction!r}\n"
        rows = "".join(f"{i}\t{w}\t{c}\n" for i, (w, c) in enumerate(zip(self.word_of, self.counts)))
        return header + rows

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "Vocabulary":
        lines = text.splitlines()
        if not lines or lines[0] != VOCAB_FORMAT_TAG:
            raise FormatError(f"unrecognized vocabulary header: {lines[0][:40] if lines else '<empty>'!r}")
        m = re.fullmatch(r"min_count=(\d+) max_doc_fraction=([0-9.eE+-]+)", lines[1])
        if not m:
            raise FormatError(f"bad vocabulary parameter line: {lines[1]!r}")
        word_of: list[str] = []
        counts: list[int] = []
        for lineno, row in enumerate(lines[2:], start=3):
            parts = row.split("\t")
            if len(parts) != 3:
                raise FormatError(f"bad vocabulary row at line {lineno}: {row!r}")
            idx, word, count = int(parts[0]), parts[1], int(parts[2])
            if idx != len(word_of):
                raise FormatError(f"non-dense vocabulary id {idx} at line {lineno}")
            word_of.append(word)
            counts.append(count)
        return cls(
            id_of={w: i for i, w in enumerate(word_of)},
            word_of=word_of,
            counts=counts,
            min_count=int(m.group(1)),
            max_doc_fraction=float(m.group(2)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def build_vocabulary(
    corpus: list[list[str]],
    min_count: int = 1,
    max_doc_fraction: float = 1.0,
    stopwords: set[str] | frozenset[str] = frozenset(),
) -> Vocabulary:
    """Build the training vocabulary from tokenized documents.

    A word is retained when it occurred at least `min_count` times in the
    corpus, appeared in at most `max_doc_fraction` of the documents, and is
    not a stopword. Raises EmptyVocabulary when nothing survives.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    if not 0 < max_doc_fraction <= 1:
        raise ValueError(f"max_doc_fraction must be in (0, 1], got {max_doc_fraction}")

    freq: Counter[str] = Counter()
    doc_freq: Counter[str] = Counter()
    for tokens in corpus:
        freq.update(tokens)
        doc_freq.update(set(tokens))

    n_docs = len(corpus)
    retained = [
        w for w, c in freq.items()
        if c >= min_count and doc_freq[w] <= max_doc_fraction * n_docs and w not in stopwords
    ]
    if not retained:
        raise EmptyVocabulary(
            f"no word passed min_count={min_count}, max_doc_fraction={max_doc_fraction} "
            f"over {n_docs} documents"
        )
    retained.sort(key=lambda w: (-freq[w], w))
    return Vocabulary(
        id_of={w: i for i, w in enumerate(retained)},
        word_of=retained,
        counts=[freq[w] for w in retained],
        min_count=min_count,
        max_doc_fraction=max_doc_fraction,
    )


def encode(tokens: list[str], vocab: Vocabulary) -> list[int]:
    """Map tokens to vocabulary ids, silently dropping out-of-vocabulary ones."""
    id_of = vocab.id_of
    return [id_of[t] for t in tokens if t in id_of]


def decode(token_ids: list[int], vocab: Vocabulary) -> list[str]:
    return [vocab.word_of[i] for i in token_ids]


@dataclass
class Paragraph:
    """A consecutive span of a document's in-vocabulary tokens.

    raw_span is the half-open [start, end) range in the parent token list
    such that the in-vocabulary tokens inside it are exactly this
    paragraph's token_ids. Concatenating the in-vocabulary tokens of all
    raw spans in index order reproduces the document's in-vocabulary
    token sequence.
    """

    doc_id: str
    index: int
    token_ids: list[int] = field(repr=False)
    raw_span: tuple[int, int]

    @property
    def para_id(self) -> str:
        return f"{self.doc_id}:{self.index}"

    def __len__(self) -> int:
        return len(self.token_ids)


def segment(doc_id: str, tokens: list[str], vocab: Vocabulary, target_len: int = 150) -> list[Paragraph]:
    """Split a document into balanced paragraphs of roughly `target_len` tokens.

    Only in-vocabulary tokens count toward length. With n such tokens the
    document yields m = ceil(n / target_len) paragraphs whose sizes are
    floor(n/m) or ceil(n/m), larger ones first, token order preserved.
    Returns [] when the document has no in-vocabulary token.
    """
    if target_len < 1:
        raise ValueError(f"target_len must be >= 1, got {target_len}")

    positions = [i for i, t in enumerate(tokens) if t in vocab.id_of]
    n = len(positions)
    if n == 0:
        return []

    m = -(-n // target_len)  # ceil
    base, extra = divmod(n, m)
    sizes = [base + 1] * extra + [base] * (m - extra)

    paragraphs = []
    cursor = 0
    for index, size in enumerate(sizes):
        span_positions = positions[cursor:cursor + size]
        token_ids = [vocab.id_of[tokens[p]] for p in span_positions]
        paragraphs.append(Paragraph(
            doc_id=doc_id,
            index=index,
            token_ids=token_ids,
            raw_span=(span_positions[0], span_positions[-1] + 1),
        ))
        cursor += size
    return paragraphs
