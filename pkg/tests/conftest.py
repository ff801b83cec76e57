"""Shared fixtures and synthetic corpus generators."""

import numpy as np
import pytest

from w2vtuner.corpus import Corpus, build_corpus


def planted_corpus(n_communities: int = 80, community_size: int = 10,
                   n_sequences: int = 6000, seq_len: int = 10,
                   noise: float = 0.1, seed: int = 0) -> Corpus:
    """Two-level synthetic data: tokens cluster into communities and each
    sequence stays inside one community except for uniform noise tokens.

    Next-event prediction on this corpus is learnable (top-10 of a community
    member should be its community mates), and quality improves with more
    training, which makes tuning gains observable.
    """
    rng = np.random.default_rng(seed)
    n_vocab = n_communities * community_size
    seqs = []
    for _ in range(n_sequences):
        c = int(rng.integers(n_communities))
        toks = c * community_size + rng.integers(0, community_size, size=seq_len)
        noise_mask = rng.random(seq_len) < noise
        toks[noise_mask] = rng.integers(0, n_vocab, size=int(noise_mask.sum()))
        seqs.append([str(t) for t in toks])
    return build_corpus(seqs)


def zipf_corpus(n_vocab: int = 2000, n_sequences: int = 3000, seq_len: int = 12,
                exponent: float = 0.8, seed: int = 0) -> Corpus:
    """Popularity-skewed random corpus with no learnable structure."""
    rng = np.random.default_rng(seed)
    probs = (1.0 / np.arange(1, n_vocab + 1)) ** exponent
    probs /= probs.sum()
    toks = rng.choice(n_vocab, size=(n_sequences, seq_len), p=probs)
    return build_corpus([[str(t) for t in row] for row in toks])


@pytest.fixture(scope="session")
def small_planted():
    return planted_corpus(n_communities=20, community_size=8, n_sequences=800,
                          seq_len=8, noise=0.05, seed=3)


@pytest.fixture(scope="session")
def tiny_corpus():
    return build_corpus([["a", "b", "c", "d"], ["b", "c", "d", "e"],
                         ["a", "c", "e", "b"], ["d", "a", "b", "c"]])
