"""Skipgram/CBOW training with negative sampling.

The input matrix (target vectors) is the embedding handed to the evaluator;
the output matrix holds context vectors and is kept for inspection. Inner
loops live in :mod:`w2vtuner._kernels`; this module owns hyperparameters,
weight lifecycle, the learning-rate schedule, and the float64 reference
gradients used for verification.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .corpus import Corpus, Vocabulary, keep_probability_table
from .errors import TrainingError, ValidationError
from .sampling import build_sampler

__all__ = [
    "HyperParams",
    "DEFAULT_HP",
    "EmbeddingModel",
    "TrainStats",
    "EmbeddingTrainer",
    "train",
    "sgns_loss",
    "sgns_gradient",
    "cbow_gradient",
    "save_embeddings",
    "load_embeddings",
]

MODELS = ("sg", "cbow")


@dataclass(frozen=True)
class HyperParams:
    """One point in the search space.

    ``t_ratio`` and ``min_count`` are fixed during tuning (1e-5 and 1);
    the five searched dimensions are dim, window, ns_exponent, lr, and
    negatives, plus the epoch count set by the runtime budget.
    """

    model: str = "sg"
    dim: int = 100
    window: int = 5
    ns_exponent: float = 0.75
    lr: float = 0.025
    negatives: int = 5
    epochs: int = 5
    t_ratio: float = 1e-5
    min_count: int = 1

    def validate(self) -> "HyperParams":
        if self.model not in MODELS:
            raise ValidationError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.dim < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise ValidationError(f"window must be >= 1, got {self.window}")
        if self.negatives < 1:
            raise ValidationError(f"negatives must be >= 1, got {self.negatives}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise ValidationError(f"lr must be > 0, got {self.lr}")
        if not -1.0 <= self.ns_exponent <= 1.0:
            raise ValidationError(f"ns_exponent must be in [-1, 1], got {self.ns_exponent}")
        if self.t_ratio < 0:
            raise ValidationError(f"t_ratio must be >= 0, got {self.t_ratio}")
        return self

    def with_epochs(self, n: int) -> "HyperParams":
        return replace(self, epochs=n)

    def to_dict(self) -> dict:
        return {
            "model": self.model, "dim": self.dim, "window": self.window,
            "ns_exponent": self.ns_exponent, "lr": self.lr,
            "negatives": self.negatives, "epochs": self.epochs,
            "t_ratio": self.t_ratio, "min_count": self.min_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        return cls(**d).validate()


DEFAULT_HP = HyperParams()


@dataclass
class EmbeddingModel:
    """Trained weight matrices bound to their vocabulary."""

    w_in: np.ndarray  # (|V|, d) float32 target vectors; the embedding proper
    w_out: np.ndarray  # (|V|, d) float32 context vectors
    vocab: Vocabulary

    @property
    def dim(self) -> int:
        return self.w_in.shape[1]

    def vector(self, token: str) -> np.ndarray:
        return self.w_in[self.vocab.token_to_id[token]]


@dataclass
class TrainStats:
    epoch_times_s: list[float] = field(default_factory=list)
    epoch_losses: list[float] = field(default_factory=list)
    tokens_per_s: float = 0.0
    final_loss: float = float("nan")
    total_wall_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "epoch_times_s": self.epoch_times_s,
            "epoch_losses": self.epoch_losses,
            "tokens_per_s": self.tokens_per_s,
            "final_loss": self.final_loss,
            "total_wall_s": self.total_wall_s,
        }


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def _worker_states(seed: int, workers: int) -> np.ndarray:
    states = np.empty(workers, dtype=np.uint64)
    x = seed
    for w in range(workers):
        x = _splitmix64(x ^ (w + 1))
        states[w] = x if x != 0 else 0x9E3779B97F4A7C15
    return states


def _chunk_starts(offsets: np.ndarray, workers: int) -> np.ndarray:
    """Contiguous sequence chunks balanced by token count (deterministic)."""
    n_seq = len(offsets) - 1
    total = offsets[-1]
    starts = [0]
    for w in range(1, workers):
        target = total * w // workers
        starts.append(int(np.searchsorted(offsets, target, side="left")))
    starts.append(n_seq)
    return np.asarray(starts, dtype=np.int64)


class EmbeddingTrainer:
    """Epoch-at-a-time trainer; ``train`` wraps it for the one-shot case.

    ``total_epochs`` fixes the learning-rate decay horizon; callers that
    stop early (convergence-based runs) simply stop calling
    :meth:`run_epoch`.
    """

    def __init__(self, corpus: Corpus, hp: HyperParams, workers: int = 1,
                 seed: int = 1, total_epochs: int | None = None,
                 max_memory_gb: float = 8.0, window_sampling: bool = True):
        hp.validate()
        if corpus.n_sequences == 0:
            raise ValidationError("cannot train on an empty corpus")
        n_vocab = corpus.vocab.size
        if n_vocab < 2:
            raise ValidationError("training requires a vocabulary of size >= 2")
        need_gb = 2 * n_vocab * hp.dim * 4 / 1024**3
        if need_gb > max_memory_gb:
            raise TrainingError(
                f"weight matrices need {need_gb:.2f} GiB "
                f"(|V|={n_vocab}, d={hp.dim}), cap is {max_memory_gb} GiB")
        if workers < 1:
            raise ValidationError(f"workers must be >= 1, got {workers}")

        self.hp = hp
        self.corpus = corpus
        self.workers = workers
        self.seed = seed
        self.window_sampling = window_sampling
        self.total_epochs = total_epochs if total_epochs is not None else hp.epochs

        lengths = np.fromiter((len(s) for s in corpus.sequences),
                              dtype=np.int64, count=corpus.n_sequences)
        self._offsets = np.zeros(corpus.n_sequences + 1, dtype=np.int64)
        np.cumsum(lengths, out=self._offsets[1:])
        self._tokens = np.concatenate(corpus.sequences).astype(np.int32)
        self._chunks = _chunk_starts(self._offsets, workers)
        self._keep = keep_probability_table(corpus.vocab, hp.t_ratio)
        sampler = build_sampler(corpus.vocab, hp.ns_exponent, seed=seed)
        self._alias_probs = sampler.table.probs
        self._alias_ids = sampler.table.alias

        rng = np.random.default_rng(seed)
        bound = 0.5 / hp.dim
        self.w_in = rng.uniform(-bound, bound, size=(n_vocab, hp.dim)).astype(np.float32)
        self.w_out = np.zeros((n_vocab, hp.dim), dtype=np.float32)

        self._states = _worker_states(seed, workers)
        self._progress = np.zeros(1, dtype=np.int64)
        self._planned = max(1, int(self._offsets[-1]) * self.total_epochs)
        self._lr_floor = max(1e-4, 1e-4 * hp.lr)
        self.stats = TrainStats()
        self.epochs_run = 0

    @property
    def model(self) -> EmbeddingModel:
        return EmbeddingModel(w_in=self.w_in, w_out=self.w_out, vocab=self.corpus.vocab)

    def run_epoch(self) -> tuple[float, float]:
        """Run one epoch; returns (mean pair loss, wall seconds)."""
        import numba

        numba.set_num_threads(min(self.workers, numba.config.NUMBA_NUM_THREADS))
        kernel = _kernels.sg_epoch if self.hp.model == "sg" else _kernels.cbow_epoch
        loss_out = np.zeros(self.workers, dtype=np.float64)
        pair_out = np.zeros(self.workers, dtype=np.int64)
        t0 = time.perf_counter()
        kernel(self._tokens, self._offsets, self._chunks, self.w_in, self.w_out,
               self._keep, self._alias_probs, self._alias_ids,
               self.hp.window, self.hp.negatives,
               self.hp.lr, self._lr_floor, float(self._planned),
               self._progress, self._states, loss_out, pair_out,
               self.window_sampling)
        wall = time.perf_counter() - t0
        self.epochs_run += 1
        if not (np.isfinite(self.w_in).all() and np.isfinite(self.w_out).all()):
            raise TrainingError(
                f"non-finite weights after epoch {self.epochs_run} "
                f"(model={self.hp.model}, lr={self.hp.lr}); aborting")
        pairs = int(pair_out.sum())
        mean_loss = float(loss_out.sum() / pairs) if pairs else float("nan")
        self.stats.epoch_times_s.append(wall)
        self.stats.epoch_losses.append(mean_loss)
        self.stats.total_wall_s += wall
        self.stats.final_loss = mean_loss
        scanned = self.epochs_run * int(self._offsets[-1])
        self.stats.tokens_per_s = scanned / max(self.stats.total_wall_s, 1e-12)
        return mean_loss, wall


def train(corpus: Corpus, hp: HyperParams, workers: int = 1, seed: int = 1,
          epochs: int | None = None, max_memory_gb: float = 8.0,
          window_sampling: bool = True) -> tuple[EmbeddingModel, TrainStats]:
    """Train for a fixed number of epochs (``epochs`` overrides ``hp.epochs``)."""
    n = epochs if epochs is not None else hp.epochs
    trainer = EmbeddingTrainer(corpus, hp, workers=workers, seed=seed,
                               total_epochs=n, max_memory_gb=max_memory_gb,
                               window_sampling=window_sampling)
    for _ in range(n):
        trainer.run_epoch()
    return trainer.model, trainer.stats


def _sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def sgns_loss(v_c: np.ndarray, u_w: np.ndarray, u_negs: np.ndarray) -> float:
    """Float64 pair loss: -log s(u_w.v_c) - sum_k log s(-u_k.v_c)."""
    pos = float(np.dot(u_w, v_c))
    negs = u_negs @ v_c if len(u_negs) else np.zeros(0)
    eps = 1e-300
    return float(-np.log(_sigmoid(pos) + eps) - np.sum(np.log(_sigmoid(-negs) + eps)))


def sgns_gradient(v_c: np.ndarray, u_w: np.ndarray,
                  u_negs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic float64 gradients of :func:`sgns_loss`.

    Returns (d/dv_c, d/du_w, d/du_negs); exposed so the kernels' update rule
    can be checked against finite differences.
    """
    v_c = np.asarray(v_c, dtype=np.float64)
    u_w = np.asarray(u_w, dtype=np.float64)
    u_negs = np.asarray(u_negs, dtype=np.float64).reshape(-1, len(v_c))
    s_pos = _sigmoid(float(np.dot(u_w, v_c)))
    s_negs = _sigmoid(u_negs @ v_c)
    grad_v = (s_pos - 1.0) * u_w + s_negs @ u_negs
    grad_u_w = (s_pos - 1.0) * v_c
    grad_u_negs = np.outer(s_negs, v_c)
    return grad_v, grad_u_w, grad_u_negs


def cbow_gradient(context_vecs: np.ndarray, u_w: np.ndarray,
                  u_negs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients when the input is the mean of the context vectors.

    Each context vector receives the hidden-layer gradient divided by the
    context count.
    """
    ctx = np.asarray(context_vecs, dtype=np.float64)
    h = ctx.mean(axis=0)
    grad_h, grad_u_w, grad_u_negs = sgns_gradient(h, u_w, u_negs)
    grad_ctx = np.tile(grad_h / ctx.shape[0], (ctx.shape[0], 1))
    return grad_ctx, grad_u_w, grad_u_negs


def save_embeddings(model: EmbeddingModel, path: str | Path) -> None:
    """word2vec text format: header ``|V| d``, then one token per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{model.vocab.size} {model.dim}\n")
        for i, tok in enumerate(model.vocab.id_to_token):
            vals = " ".join(f"{x:.8e}" for x in model.w_in[i])
            fh.write(f"{tok} {vals}\n")


def load_embeddings(path: str | Path) -> EmbeddingModel:
    """Load a word2vec text file; counts are unknown so the vocabulary is
    reconstructed with unit counts (evaluation does not depend on them)."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"embeddings file does not exist: {path}")
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValidationError(f"bad word2vec header in {path}")
        n, d = int(header[0]), int(header[1])
        token_to_id: dict[str, int] = {}
        w_in = np.empty((n, d), dtype=np.float32)
        for i in range(n):
            parts = fh.readline().rstrip("\n").split(" ")
            if len(parts) != d + 1:
                raise ValidationError(f"bad embedding row {i} in {path}")
            token_to_id[parts[0]] = i
            w_in[i] = np.asarray(parts[1:], dtype=np.float32)
    vocab = Vocabulary(token_to_id=token_to_id, counts=np.ones(n, dtype=np.int64))
    return EmbeddingModel(w_in=w_in, w_out=np.zeros_like(w_in), vocab=vocab)
