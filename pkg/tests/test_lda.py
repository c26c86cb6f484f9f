"""Collapsed Gibbs sampler contracts: recovery, determinism, conservation."""

from __future__ import annotations

import numpy as np
import pytest

from polidigest import lda
from polidigest.errors import (
    EmptyCorpus,
    EmptyParagraph,
    FormatError,
    InvalidConfig,
    TopicOutOfRange,
)
from tests.conftest import make_block_corpus, make_vocab, matched_cosines, sample_block_paragraphs


@pytest.fixture(scope="module")
def small_recovery():
    """A quick train on the disjoint-block corpus, shared across tests."""
    vocab, paragraphs, labels, gen_phi = make_block_corpus(
        k=3, v=30, n_paragraphs=100, tokens_per_para=40, seed=7)
    config = lda.LdaConfig(k=3, iterations=120, burn_in=40, seed=42)
    result = lda.train(paragraphs, vocab, config)
    return vocab, paragraphs, labels, gen_phi, config, result


class TestConfig:
    def test_defaults(self):
        config = lda.LdaConfig()
        assert config.k == 20
        assert config.effective_alpha == 2.5  # 50 / K
        assert config.beta == 0.01
        assert (config.iterations, config.burn_in) == (1000, 200)

    @pytest.mark.parametrize("kwargs", [
        {"k": 0}, {"alpha": -1.0}, {"beta": 0.0},
        {"iterations": 10, "burn_in": 10}, {"burn_in": -1, "iterations": 5},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidConfig):
            lda.LdaConfig(**kwargs).validate()


class TestTrain:
    def test_single_topic_theta_is_exactly_one(self):
        vocab = make_vocab(["aa", "bb"])
        config = lda.LdaConfig(k=1, iterations=5, burn_in=1, seed=0)
        result = lda.train([[0, 1, 0], [1]], vocab, config)
        for theta in result.thetas:
            assert theta.tolist() == [1.0]

    def test_empty_corpus_rejected(self):
        vocab = make_vocab(["aa"])
        config = lda.LdaConfig(k=2, iterations=5, burn_in=1, seed=0)
        with pytest.raises(EmptyCorpus):
            lda.train([], vocab, config)
        with pytest.raises(EmptyCorpus):
            lda.train([[], []], vocab, config)

    def test_recovers_generating_topics(self, small_recovery):
        _, _, _, gen_phi, _, result = small_recovery
        cosines = matched_cosines(result.model.phi, gen_phi)
        assert all(c >= 0.9 for c in cosines), cosines

    def test_equal_seed_bitwise_equal(self, small_recovery):
        vocab, paragraphs, _, _, config, result = small_recovery
        again = lda.train(paragraphs, vocab, config)
        assert np.array_equal(result.model.n_kw, again.model.n_kw)
        assert result.model.model_id == again.model.model_id
        for a, b in zip(result.thetas, again.thetas):
            assert np.array_equal(a, b)

    def test_different_seed_differs(self, small_recovery):
        vocab, paragraphs, _, _, config, result = small_recovery
        other = lda.train(paragraphs, vocab,
                          lda.LdaConfig(k=3, iterations=120, burn_in=40, seed=43))
        assert not np.array_equal(result.model.n_kw, other.model.n_kw)

    @pytest.mark.parametrize("iterations,burn_in", [(1, 0), (2, 1), (5, 2)])
    def test_count_conservation(self, iterations, burn_in):
        vocab, paragraphs, _, _ = make_block_corpus(
            k=3, v=30, n_paragraphs=20, tokens_per_para=15, seed=3)
        config = lda.LdaConfig(k=3, iterations=iterations, burn_in=burn_in, seed=5)
        result = lda.train(paragraphs, vocab, config)
        total = sum(len(p) for p in paragraphs)
        assert int(result.model.n_kw.sum()) == total
        assert np.array_equal(result.model.n_kw.sum(axis=1), result.model.n_k)
        assert np.array_equal(result.n_dk.sum(axis=1),
                              np.array([len(p) for p in paragraphs]))
        for assignment, para in zip(result.assignments, paragraphs):
            assert len(assignment.z) == len(para)
            assert all(0 <= z < 3 for z in assignment.z)

    def test_row_stochasticity(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        assert np.allclose(result.model.phi.sum(axis=1), 1.0, atol=1e-9)
        for theta in result.thetas:
            assert abs(theta.sum() - 1.0) <= 1e-9
            assert (theta >= 0).all()

    def test_k200_runs_and_conserves(self):
        vocab, paragraphs, _, _ = make_block_corpus(
            k=5, v=50, n_paragraphs=30, tokens_per_para=15, seed=2)
        config = lda.LdaConfig(k=200, alpha=0.25, iterations=15, burn_in=5, seed=1)
        result = lda.train(paragraphs, vocab, config)
        assert result.model.k == 200
        assert int(result.model.n_kw.sum()) == sum(len(p) for p in paragraphs)
        assert np.allclose(result.model.phi.sum(axis=1), 1.0, atol=1e-9)


class TestInfer:
    def test_single_topic(self, small_recovery):
        vocab = make_vocab(["aa", "bb"])
        config = lda.LdaConfig(k=1, iterations=5, burn_in=1, seed=0)
        model = lda.train([[0, 1]], vocab, config).model
        assert lda.infer(model, [0, 1, 1], iterations=10, seed=3).tolist() == [1.0]

    def test_empty_paragraph(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        with pytest.raises(EmptyParagraph):
            lda.infer(result.model, [], iterations=10, seed=0)

    def test_deterministic_and_immutable(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        model = result.model
        n_kw_before = model.n_kw.copy()
        n_k_before = model.n_k.copy()
        theta1 = lda.infer(model, [0, 1, 2, 10, 11], iterations=30, seed=9)
        theta2 = lda.infer(model, [0, 1, 2, 10, 11], iterations=30, seed=9)
        assert np.array_equal(theta1, theta2)
        assert np.array_equal(model.n_kw, n_kw_before)
        assert np.array_equal(model.n_k, n_k_before)
        assert abs(theta1.sum() - 1.0) <= 1e-9

    def test_held_out_dominant_topic(self, small_recovery):
        _, _, _, gen_phi, _, result = small_recovery
        from tests.conftest import greedy_match

        mapping = greedy_match(result.model.phi, gen_phi)
        held, labels = sample_block_paragraphs(gen_phi, n=60, tokens_per_para=40, seed=99)
        hits = 0
        for i, (para, label) in enumerate(zip(held, labels)):
            theta = lda.infer(result.model, para, iterations=40, seed=1000 + i)
            if int(np.argmax(theta)) == mapping[label]:
                hits += 1
        assert hits >= 0.8 * len(held)


class TestPerplexity:
    def test_uniform_model_equals_vocab_size(self):
        vocab = make_vocab([f"w{i}" for i in range(30)])
        config = lda.LdaConfig(k=4, iterations=2, burn_in=1, seed=0)
        model = lda.LdaModel(config=config, vocab=vocab,
                             n_kw=np.zeros((4, 30), dtype=np.int64),
                             n_k=np.zeros(4, dtype=np.int64))
        paragraphs = [[0, 5, 7], [2, 2, 29]]
        thetas = [np.full(4, 0.25), np.full(4, 0.25)]
        assert abs(lda.perplexity(model, paragraphs, thetas) - 30.0) <= 1e-9

    def test_single_token_arithmetic(self):
        # One token with total probability 0.25 -> perplexity 4.
        vocab = make_vocab(["aa", "bb"])
        config = lda.LdaConfig(k=1, alpha=1.0, beta=1.0, iterations=2, burn_in=1, seed=0)
        # n_kw = [1, 2]: phi = (1+1, 2+1) / (3+2) = (0.4, 0.6); pick a theta of 1.
        model = lda.LdaModel(config=config, vocab=vocab,
                             n_kw=np.array([[0, 1]], dtype=np.int64),
                             n_k=np.array([1], dtype=np.int64))
        # phi[0] = (0+1)/(1+2), (1+1)/(1+2) = (1/3, 2/3); use word 0 with theta [0.75]?
        # Simpler: force phi exactly 0.25 via beta=1, counts 0 over V=4.
        vocab4 = make_vocab(["aa", "bb", "cc", "dd"])
        uniform = lda.LdaModel(config=lda.LdaConfig(k=1, alpha=1.0, beta=1.0,
                                                    iterations=2, burn_in=1, seed=0),
                               vocab=vocab4,
                               n_kw=np.zeros((1, 4), dtype=np.int64),
                               n_k=np.zeros(1, dtype=np.int64))
        value = lda.perplexity(uniform, [[0]], [np.array([1.0])])
        assert abs(value - 4.0) <= 1e-12

    def test_empty_corpus(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        with pytest.raises(EmptyCorpus):
            lda.perplexity(result.model, [], [])

    def test_training_perplexity_decreases(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        trace = result.perplexity_per_sweep
        assert trace[-1] < trace[0]


class TestTopWords:
    def test_smoothing_arithmetic(self):
        vocab = make_vocab(["aa", "bb"])
        config = lda.LdaConfig(k=1, alpha=1.0, beta=1.0, iterations=2, burn_in=1, seed=0)
        model = lda.LdaModel(config=config, vocab=vocab,
                             n_kw=np.array([[3, 1]], dtype=np.int64),
                             n_k=np.array([4], dtype=np.int64))
        words = lda.top_words(model, 0, 2)
        assert words[0][0] == "aa" and abs(words[0][1] - 4 / 6) < 1e-12
        assert words[1][0] == "bb" and abs(words[1][1] - 2 / 6) < 1e-12

    def test_n_larger_than_vocab_clamps(self):
        vocab = make_vocab(["aa", "bb"])
        config = lda.LdaConfig(k=1, iterations=2, burn_in=1, seed=0)
        model = lda.LdaModel(config=config, vocab=vocab,
                             n_kw=np.array([[1, 1]], dtype=np.int64),
                             n_k=np.array([2], dtype=np.int64))
        assert len(lda.top_words(model, 0, 10)) == 2

    def test_topic_out_of_range(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        with pytest.raises(TopicOutOfRange):
            lda.top_words(result.model, 3, 5)

    def test_top_words_within_generating_blocks(self, small_recovery):
        _, _, _, gen_phi, _, result = small_recovery
        from tests.conftest import greedy_match

        mapping = greedy_match(result.model.phi, gen_phi)
        for gen_topic, learned in mapping.items():
            block = {f"w{i:03d}" for i in range(gen_topic * 10, (gen_topic + 1) * 10)}
            top5 = {w for w, _ in lda.top_words(result.model, learned, 5)}
            assert top5 <= block

    def test_tie_break_lexicographic(self):
        vocab = make_vocab(["bb", "aa", "cc"])
        config = lda.LdaConfig(k=1, iterations=2, burn_in=1, seed=0)
        model = lda.LdaModel(config=config, vocab=vocab,
                             n_kw=np.array([[2, 2, 2]], dtype=np.int64),
                             n_k=np.array([6], dtype=np.int64))
        assert [w for w, _ in lda.top_words(model, 0, 3)] == ["aa", "bb", "cc"]


class TestPermutationEquivariance:
    def test_top_words_permute(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        perm = [2, 0, 1]
        permuted = lda.permute_topics(result.model, perm)
        for new_topic, old_topic in enumerate(perm):
            assert lda.top_words(permuted, new_topic, 10) == lda.top_words(
                result.model, old_topic, 10)

    def test_theta_estimates_permute(self):
        # Mixture estimates from permuted counts are the permuted estimates.
        # (Sampled paths are seed-dependent and only equivariant in
        # expectation, so the exact check lives at the estimator level.)
        rng = np.random.default_rng(4)
        n_dk = rng.integers(0, 20, size=(6, 4))
        perm = [3, 1, 0, 2]
        theta = lda.theta_estimate(n_dk, alpha=0.5)
        theta_perm = lda.theta_estimate(n_dk[:, perm], alpha=0.5)
        assert np.array_equal(theta[:, perm], theta_perm)

    def test_permuted_model_phi_rows(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        perm = [1, 2, 0]
        permuted = lda.permute_topics(result.model, perm)
        assert np.array_equal(permuted.phi, result.model.phi[perm])


class TestSerialization:
    def test_round_trip(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        text = result.model.dumps()
        loaded = lda.loads_model(text)
        assert loaded.model_id == result.model.model_id
        assert np.array_equal(loaded.n_kw, result.model.n_kw)
        assert loaded.config == result.model.config
        assert loaded.vocab.word_of == result.model.vocab.word_of
        assert loaded.dumps() == text

    def test_tampered_counts_rejected(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        lines = result.model.dumps().splitlines()
        row_start = next(i for i, l in enumerate(lines) if l.startswith("n_kw")) + 1
        cells = lines[row_start].split()
        cells[0] = str(int(cells[0]) + 1)
        lines[row_start] = " ".join(cells)
        with pytest.raises(FormatError, match="model_id mismatch"):
            lda.loads_model("\n".join(lines) + "\n")

    def test_truncated_rejected(self, small_recovery):
        _, _, _, _, _, result = small_recovery
        text = result.model.dumps()
        with pytest.raises(FormatError):
            lda.loads_model(text[: len(text) // 2])

    def test_file_round_trip(self, small_recovery, tmp_path):
        _, _, _, _, _, result = small_recovery
        path = tmp_path / "model.txt"
        result.model.save(path)
        assert lda.load_model(path).model_id == result.model.model_id
