"""Sequence corpora: ingestion, vocabulary, downsampling, splits, subsampling.

A corpus is a list of integer-encoded event sequences (one per user, time
ordered) plus the vocabulary that binds ids to token strings. All ids are
dense in ``[0, |V|)`` and assigned in descending frequency order so that
downstream samplers can index count arrays directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, EmptyTestSetError, ValidationError

__all__ = [
    "Vocabulary",
    "Corpus",
    "DownsampleConfig",
    "EvalSplit",
    "build_corpus",
    "ingest",
    "keep_probability",
    "keep_probability_table",
    "downsample",
    "split_last_token",
    "split_temporal",
    "sample_sequences",
    "write_plain",
    "write_split",
    "load_split",
]


@dataclass
class Vocabulary:
    """Token-to-id binding with per-id occurrence counts.

    Ids are dense in ``[0, size)``, ordered by descending count with ties
    broken by token string, so id 0 is always the most frequent token.
    """

    token_to_id: dict[str, int]
    counts: np.ndarray  # int64, counts[id] = occurrences in the corpus
    min_count: int = 1
    id_to_token: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.id_to_token:
            self.id_to_token = [""] * len(self.token_to_id)
            for tok, i in self.token_to_id.items():
                self.id_to_token[i] = tok

    @property
    def size(self) -> int:
        return len(self.token_to_id)

    @property
    def total_tokens(self) -> int:
        return int(self.counts.sum())

    def __len__(self) -> int:
        return self.size


@dataclass
class Corpus:
    """Integer-encoded event sequences with their vocabulary.

    ``timestamps`` is only present for datasets ingested from timestamped
    files; each sequence's timestamps are non-decreasing.
    """

    sequences: list[np.ndarray]  # int32 arrays of token ids
    vocab: Vocabulary
    timestamps: list[np.ndarray] | None = None  # int64 unix seconds, parallel to sequences

    @property
    def n_sequences(self) -> int:
        return len(self.sequences)

    @property
    def total_tokens(self) -> int:
        return int(sum(len(s) for s in self.sequences))

    def tokens_of(self, seq: np.ndarray) -> list[str]:
        return [self.vocab.id_to_token[i] for i in seq]


@dataclass
class DownsampleConfig:
    """Frequent-token downsampling: threshold ratio and RNG seed.

    The absolute count threshold is ``t_ratio * total_tokens``; ``t_ratio=0``
    disables downsampling entirely.
    """

    t_ratio: float = 1e-5
    seed: int = 1

    def __post_init__(self):
        if self.t_ratio < 0:
            raise ValidationError(f"t_ratio must be >= 0, got {self.t_ratio}")


@dataclass
class EvalSplit:
    """Training corpus plus (query, target) next-event test pairs.

    Pair ids live in the id space of ``train.vocab``; every query id occurs
    somewhere in the training sequences. Pairs with ``query == target`` are
    kept here; the evaluator applies the discard rule.
    """

    train: Corpus
    test_pairs: np.ndarray  # (n, 2) int32 of (query_id, target_id)
    protocol: str = "last-token"
    test_start: int | None = None


def _build_vocab(counts_by_token: dict[str, int], min_count: int) -> Vocabulary:
    kept = [(tok, c) for tok, c in counts_by_token.items() if c >= min_count]
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    token_to_id = {tok: i for i, (tok, _) in enumerate(kept)}
    counts = np.array([c for _, c in kept], dtype=np.int64)
    return Vocabulary(token_to_id=token_to_id, counts=counts, min_count=min_count,
                      id_to_token=[tok for tok, _ in kept])


def build_corpus(
    token_sequences: list[list[str]],
    min_count: int = 1,
    timestamp_sequences: list[list[int]] | None = None,
) -> Corpus:
    """Encode string-token sequences into a Corpus.

    Tokens occurring fewer than ``min_count`` times are removed from the
    sequences; sequences that become empty are dropped.
    """
    if min_count < 1:
        raise ValidationError(f"min_count must be >= 1, got {min_count}")
    counts: dict[str, int] = {}
    for seq in token_sequences:
        for tok in seq:
            counts[tok] = counts.get(tok, 0) + 1
    vocab = _build_vocab(counts, min_count)

    sequences: list[np.ndarray] = []
    ts_out: list[np.ndarray] | None = [] if timestamp_sequences is not None else None
    for si, seq in enumerate(token_sequences):
        ids = [vocab.token_to_id[t] for t in seq if t in vocab.token_to_id]
        if not ids:
            continue
        sequences.append(np.asarray(ids, dtype=np.int32))
        if ts_out is not None:
            ts = [timestamp_sequences[si][j] for j, t in enumerate(seq) if t in vocab.token_to_id]
            arr = np.asarray(ts, dtype=np.int64)
            if len(arr) > 1 and (np.diff(arr) < 0).any():
                raise ValidationError(
                    f"sequence {si}: timestamps must be non-decreasing")
            ts_out.append(arr)
    return Corpus(sequences=sequences, vocab=vocab, timestamps=ts_out)


def ingest(path: str | Path, format: str = "plain", min_count: int = 1) -> Corpus:
    """Read a corpus file and build its vocabulary.

    ``plain``: one sequence per line, whitespace-separated tokens.
    ``timestamped``: header-less TSV rows ``user<TAB>token<TAB>unix_seconds``;
    rows are grouped by user and sorted by timestamp within each user.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"corpus file does not exist: {path}")
    if format == "plain":
        token_seqs: list[list[str]] = []
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                toks = line.split()
                if toks:
                    token_seqs.append(toks)
        return build_corpus(token_seqs, min_count=min_count)
    if format == "timestamped":
        by_user: dict[str, list[tuple[int, str]]] = {}
        order: list[str] = []
        with path.open("r", encoding="utf-8") as fh:
            for ln, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3:
                    raise DataFormatError(
                        f"expected 3 tab-separated fields, got {len(parts)}", line_no=ln)
                user, tok, ts_str = parts
                try:
                    ts = int(float(ts_str))
                except ValueError:
                    raise DataFormatError(f"bad timestamp {ts_str!r}", line_no=ln) from None
                if user not in by_user:
                    by_user[user] = []
                    order.append(user)
                by_user[user].append((ts, tok))
        token_seqs = []
        ts_seqs: list[list[int]] = []
        for user in order:
            events = sorted(by_user[user], key=lambda e: e[0])
            token_seqs.append([tok for _, tok in events])
            ts_seqs.append([ts for ts, _ in events])
        return build_corpus(token_seqs, min_count=min_count, timestamp_sequences=ts_seqs)
    raise ValidationError(f"unknown corpus format {format!r} (expected plain|timestamped)")


def keep_probability(f_i: float, t: float) -> float:
    """Raw keep weight for a token with count ``f_i`` given absolute threshold ``t``.

    Returns ``(sqrt(f_i/t) + 1) * (t/f_i)``, the rule shared by the gensim
    and word2vec.c implementations. Values >= 1 mean the token is always
    kept; the rule only bites for ``f_i >= t``. ``t == 0`` disables
    downsampling (returns +inf).
    """
    if f_i < 1:
        raise ValidationError(f"token count must be >= 1, got {f_i}")
    if t <= 0:
        return float("inf")
    return (np.sqrt(f_i / t) + 1.0) * (t / f_i)


def keep_probability_table(vocab: Vocabulary, t_ratio: float) -> np.ndarray:
    """Per-id keep probabilities, clamped to 1, as float64.

    ``t = t_ratio * total_tokens``; tokens with ``f_i < t`` are always kept.
    """
    if t_ratio <= 0:
        return np.ones(vocab.size, dtype=np.float64)
    t = t_ratio * vocab.total_tokens
    f = vocab.counts.astype(np.float64)
    p = (np.sqrt(f / t) + 1.0) * (t / f)
    p = np.minimum(p, 1.0)
    p[f < t] = 1.0
    return p


def downsample(corpus: Corpus, cfg: DownsampleConfig) -> Corpus:
    """One stochastic downsampling pass over the corpus.

    Each occurrence of token i survives with probability
    ``min(1, keep_probability(f_i, t))``. Returns a view sharing the
    vocabulary; the trainer re-draws this filter independently every epoch,
    this materialized form exists for inspection and statistics.
    """
    if cfg.t_ratio <= 0:
        return corpus
    keep = keep_probability_table(corpus.vocab, cfg.t_ratio)
    rng = np.random.default_rng(cfg.seed)
    out: list[np.ndarray] = []
    ts_out: list[np.ndarray] | None = [] if corpus.timestamps is not None else None
    for si, seq in enumerate(corpus.sequences):
        mask = rng.random(len(seq)) < keep[seq]
        filtered = seq[mask]
        if len(filtered) == 0:
            continue
        out.append(filtered)
        if ts_out is not None:
            ts_out.append(corpus.timestamps[si][mask])
    return Corpus(sequences=out, vocab=corpus.vocab, timestamps=ts_out)


def split_last_token(corpus: Corpus) -> EvalSplit:
    """Hold out the final token of each sequence as the test target.

    Training keeps every sequence truncated by one token; sequences of
    length 1 stay in training whole and contribute no test pair. The test
    pair of an eligible sequence is (penultimate, last), so every query id
    is guaranteed to remain in the training sequences.
    """
    train_seqs: list[np.ndarray] = []
    pairs: list[tuple[int, int]] = []
    for seq in corpus.sequences:
        if len(seq) >= 2:
            train_seqs.append(seq[:-1])
            pairs.append((int(seq[-2]), int(seq[-1])))
        else:
            train_seqs.append(seq)
    if not pairs:
        raise EmptyTestSetError("empty test set: no sequence has length >= 2")
    train = Corpus(sequences=train_seqs, vocab=corpus.vocab, timestamps=None)
    return EvalSplit(train=train, test_pairs=np.asarray(pairs, dtype=np.int32),
                     protocol="last-token")


def split_temporal(corpus: Corpus, test_start: int) -> EvalSplit:
    """Per-user temporal split at ``test_start`` (unix seconds).

    Training keeps each sequence restricted to events strictly before
    ``test_start``. A sequence with at least two events at/after
    ``test_start`` contributes its final two tokens as a (query, target)
    pair, kept only when the query token occurs somewhere in the training
    sequences.
    """
    if corpus.timestamps is None:
        raise ValidationError("temporal split requires a timestamped corpus")
    train_seqs: list[np.ndarray] = []
    candidates: list[tuple[int, int]] = []
    for seq, ts in zip(corpus.sequences, corpus.timestamps):
        before = seq[ts < test_start]
        if len(before) > 0:
            train_seqs.append(before)
        n_test = int((ts >= test_start).sum())
        if n_test >= 2:
            candidates.append((int(seq[-2]), int(seq[-1])))
    seen = np.zeros(corpus.vocab.size, dtype=bool)
    for s in train_seqs:
        seen[s] = True
    pairs = [(q, t) for q, t in candidates if seen[q]]
    pairs_arr = np.asarray(pairs, dtype=np.int32) if pairs else np.empty((0, 2), dtype=np.int32)
    train = Corpus(sequences=train_seqs, vocab=corpus.vocab, timestamps=None)
    return EvalSplit(train=train, test_pairs=pairs_arr, protocol="temporal",
                     test_start=test_start)


def sample_sequences(corpus: Corpus, fraction: float, seed: int = 1) -> Corpus:
    """Uniform sample without replacement of whole sequences.

    Keeps ``floor(fraction * n_sequences)`` sequences in their original
    order and rebuilds the vocabulary over the sample (dense re-id, same
    min_count).
    """
    if not 0 < fraction <= 1:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    n = corpus.n_sequences
    k = int(np.floor(fraction * n))
    if k == 0:
        raise ValidationError(f"fraction {fraction} of {n} sequences yields an empty sample")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=k, replace=False))
    token_seqs = [corpus.tokens_of(corpus.sequences[i]) for i in idx]
    ts_seqs = None
    if corpus.timestamps is not None:
        ts_seqs = [corpus.timestamps[i].tolist() for i in idx]
    return build_corpus(token_seqs, min_count=corpus.vocab.min_count,
                        timestamp_sequences=ts_seqs)


def write_plain(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus in plain format (one sequence per line)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for seq in corpus.sequences:
            fh.write(" ".join(corpus.vocab.id_to_token[i] for i in seq))
            fh.write("\n")


def write_split(split: EvalSplit, out_dir: str | Path, seed: int = 1) -> dict:
    """Persist a split: train corpus, test pairs TSV, and the JSON manifest.

    Returns the manifest dict; pairs are written as token strings so they
    survive vocabulary re-encoding on load.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / "train.txt"
    pairs_path = out_dir / "test_pairs.tsv"
    write_plain(split.train, train_path)
    id_to_token = split.train.vocab.id_to_token
    with pairs_path.open("w", encoding="utf-8") as fh:
        for q, t in split.test_pairs:
            fh.write(f"{id_to_token[q]}\t{id_to_token[t]}\n")
    manifest = {
        "train_path": str(train_path),
        "test_pairs_path": str(pairs_path),
        "protocol": split.protocol,
        "seed": seed,
    }
    if split.test_start is not None:
        manifest["test_start"] = split.test_start
    with (out_dir / "split.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


def load_split(manifest_path: str | Path, min_count: int = 1) -> EvalSplit:
    """Load a split previously written by :func:`write_split`."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise ValidationError(f"split manifest does not exist: {manifest_path}")
    with manifest_path.open("r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    train = ingest(manifest["train_path"], format="plain", min_count=min_count)
    pairs: list[tuple[int, int]] = []
    with Path(manifest["test_pairs_path"]).open("r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise DataFormatError("expected 2 tab-separated tokens", line_no=ln)
            q, t = parts
            # queries are guaranteed present in train; targets may be unseen
            if q not in train.vocab.token_to_id:
                continue
            tid = train.vocab.token_to_id.get(t, -1)
            pairs.append((train.vocab.token_to_id[q], tid))
    arr = np.asarray(pairs, dtype=np.int32) if pairs else np.empty((0, 2), dtype=np.int32)
    return EvalSplit(train=train, test_pairs=arr,
                     protocol=manifest.get("protocol", "last-token"),
                     test_start=manifest.get("test_start"))
