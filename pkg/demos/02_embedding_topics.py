"""Embedding-space topic model on a two-cluster corpus.

Two word blocks live in orthogonal halves of the embedding space; paragraphs
draw words from one block only. After SGD the topic vectors should settle
near the block centroids and each paragraph's mixture should commit to its
block's topic. The Dirichlet prior strength (lambda) controls how hard the
mixtures commit.

    python demos/02_embedding_topics.py
"""

import numpy as np

from polidigest.hybrid import (
    EmbeddingTable,
    HybridTrainConfig,
    doc_topics_hybrid,
    mixture_entropy,
    topic_words_hybrid,
    train_hybrid,
)

DIM, V, N_PARAGRAPHS, PARA_LEN = 10, 20, 40, 20

rng = np.random.default_rng(11)
words = [f"block{'A' if i < 10 else 'B'}-{i % 10}" for i in range(V)]
vectors = np.zeros((V, DIM))
for i in range(V):
    span = slice(0, 5) if i < 10 else slice(5, 10)
    raw = np.abs(rng.normal(1.0, 0.3, 5))
    vectors[i, span] = raw / np.linalg.norm(raw)
table = EmbeddingTable(dim=DIM, words=words, vocab_ids=list(range(V)),
                       vectors=vectors, coverage=1.0)

paragraphs = []
for p in range(N_PARAGRAPHS):
    lo = 0 if p % 2 == 0 else 10
    paragraphs.append([int(x) for x in rng.integers(lo, lo + 10, size=PARA_LEN)])

print(f"corpus: {N_PARAGRAPHS} paragraphs, alternating between two word blocks")

for lam in (0.0, 1.0, 10.0):
    config = HybridTrainConfig(learning_rate=0.05, epochs=10, negative_samples=5,
                               window=2, lambda_=lam, alpha_prior=0.7, seed=99)
    model = train_hybrid(paragraphs, table, 2, config)
    entropies = [mixture_entropy(doc_topics_hybrid(model, p))
                 for p in range(N_PARAGRAPHS)]
    print(f"\nlambda = {lam}: mean mixture entropy = {np.mean(entropies):.4f}")
    if lam == 1.0:
        for k in range(2):
            top = ", ".join(w for w, _ in topic_words_hybrid(model, table, k, 5))
            print(f"  topic {k} nearest words: {top}")
        mix0 = doc_topics_hybrid(model, 0)
        mix1 = doc_topics_hybrid(model, 1)
        print(f"  block-A paragraph mixture: {np.round(mix0, 3).tolist()}")
        print(f"  block-B paragraph mixture: {np.round(mix1, 3).tolist()}")

print("\nHigher lambda pushes mixtures toward a single topic (lower entropy);"
      "\nlambda=0 leaves them soft. The topic words stay inside one block either way.")
