"""Weighted negative sampling (alias method) and context-window sampling."""

from __future__ import annotations

import numpy as np

from .corpus import Vocabulary
from .errors import ValidationError

__all__ = ["AliasTable", "NegativeSampler", "build_sampler", "sample_window"]


class AliasTable:
    """Walker's alias method: O(n) build, O(1) exact draws from any discrete
    distribution. No discretization loss, which matters for negative
    exponents where a fixed-size unigram table would distort the tail."""

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or len(w) == 0:
            raise ValidationError("weights must be a non-empty 1-d array")
        if not np.all(np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
            raise ValidationError("weights must be finite, non-negative, and not all zero")
        n = len(w)
        self.probs = np.asarray(w * (n / w.sum()), dtype=np.float64)
        self.alias = np.zeros(n, dtype=np.int32)
        small = [i for i in range(n) if self.probs[i] < 1.0]
        large = [i for i in range(n) if self.probs[i] >= 1.0]
        while small and large:
            s = small.pop()
            l = large.pop()
            self.alias[s] = l
            self.probs[l] -= 1.0 - self.probs[s]
            if self.probs[l] < 1.0:
                small.append(l)
            else:
                large.append(l)
        for i in large:
            self.probs[i] = 1.0
        for i in small:  # numerical leftovers
            self.probs[i] = 1.0

    def __len__(self) -> int:
        return len(self.probs)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Vectorized draws; the training kernels use the same arrays inline."""
        n = len(self.probs)
        idx = rng.integers(0, n, size=size)
        keep = rng.random(size) < self.probs[idx]
        return np.where(keep, idx, self.alias[idx]).astype(np.int32)


class NegativeSampler:
    """Draws noise token ids with probability proportional to count**exponent.

    exponent 0 is uniform over the vocabulary, 1 follows popularity, and -1
    inverts it; counts >= 1 keep the weights finite for any exponent in
    [-1, 1].
    """

    def __init__(self, vocab: Vocabulary, exponent: float, seed: int = 1):
        if vocab.size < 2:
            raise ValidationError("negative sampling needs a vocabulary of size >= 2")
        if not -1.0 <= exponent <= 1.0:
            raise ValidationError(f"negative-sampling exponent must be in [-1, 1], got {exponent}")
        self.exponent = float(exponent)
        self.seed = seed
        weights = vocab.counts.astype(np.float64) ** self.exponent
        self.distribution = weights / weights.sum()
        self.table = AliasTable(weights)
        self._rng = np.random.default_rng(seed)

    def draw(self, size: int) -> np.ndarray:
        return self.table.sample(self._rng, size)


def build_sampler(vocab: Vocabulary, alpha: float, seed: int = 1) -> NegativeSampler:
    """Sampler over ids with P(j) = counts[j]**alpha / sum_k counts[k]**alpha."""
    return NegativeSampler(vocab, alpha, seed=seed)


def sample_window(max_window: int, rng: np.random.Generator) -> int:
    """Effective context width drawn uniformly from {1, ..., max_window}.

    Width 0 would generate no pairs, so the support starts at 1; at sequence
    boundaries the window truncates to the available tokens.
    """
    if max_window < 1:
        raise ValidationError(f"max window must be >= 1, got {max_window}")
    return int(rng.integers(1, max_window + 1))
