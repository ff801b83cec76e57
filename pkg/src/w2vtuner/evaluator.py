"""Next-event prediction scoring: cosine top-k retrieval, HR@k and NDCG@k.

Exact mode ranks by brute-force cosine with deterministic tie-breaking and
is the default everywhere results are asserted; the approximate mode is a
small-world graph index whose recall is validated against exact retrieval
at build time.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import EmptyTestSetError, ValidationError, W2vtError
from .trainer import EmbeddingModel

__all__ = [
    "EvalResult",
    "AggregateResult",
    "CosineIndex",
    "top_k",
    "evaluate",
    "aggregate_runs",
]


@dataclass
class EvalResult:
    hr_at_k: float  # percent in [0, 100]
    ndcg_at_k: float  # in [0, 1]
    k: int
    n_pairs: int
    per_pair_ranks: np.ndarray | None = None  # rank in 1..k, or -1 for a miss

    def to_dict(self) -> dict:
        return {"hr_at_10": self.hr_at_k, "ndcg_at_10": self.ndcg_at_k,
                "k": self.k, "n_pairs": self.n_pairs}


@dataclass
class AggregateResult:
    hr_mean: float
    hr_ci95: float  # half-width
    ndcg_mean: float
    ndcg_ci95: float
    n_runs: int

    def to_dict(self) -> dict:
        return {"hr_mean": self.hr_mean, "hr_ci95": self.hr_ci95,
                "ndcg_mean": self.ndcg_mean, "ndcg_ci95": self.ndcg_ci95,
                "n_runs": self.n_runs}


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float32)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return m / norms


class _SmallWorldGraph:
    """Single-layer navigable-small-world graph over unit vectors.

    Nodes are inserted in id order; each insert links bidirectionally to its
    nearest existing nodes found by beam search, and neighbor lists are
    trimmed to the best ``2 * m_neighbors`` by cosine. Queries run the same
    beam search with width ``ef_search``.
    """

    def __init__(self, unit_matrix: np.ndarray, m_neighbors: int = 12,
                 ef_construction: int = 48):
        self.matrix = unit_matrix
        n = unit_matrix.shape[0]
        self.neighbors: list[list[int]] = [[] for _ in range(n)]
        m_max = 2 * m_neighbors
        for i in range(1, n):
            found = self.search(unit_matrix[i], ef_construction, n_valid=i)
            links = [j for j, _ in found[:m_neighbors]]
            for j in links:
                self.neighbors[i].append(j)
                self.neighbors[j].append(i)
                if len(self.neighbors[j]) > m_max:
                    sims = self.matrix[self.neighbors[j]] @ self.matrix[j]
                    order = np.lexsort((self.neighbors[j], -sims))[:m_max]
                    self.neighbors[j] = [self.neighbors[j][o] for o in order]

    def search(self, query_vec: np.ndarray, ef: int,
               n_valid: int | None = None) -> list[tuple[int, float]]:
        """Beam search from node 0; returns [(id, cosine)] best-first."""
        n = len(self.neighbors) if n_valid is None else n_valid
        if n == 0:
            return []
        visited = np.zeros(n, dtype=bool)
        entry_sim = float(self.matrix[0] @ query_vec)
        visited[0] = True
        candidates = [(-entry_sim, 0)]  # max-heap on similarity
        best: list[tuple[float, int]] = [(entry_sim, 0)]  # min-heap of keepers
        while candidates:
            neg_sim, node = heapq.heappop(candidates)
            if len(best) >= ef and -neg_sim < best[0][0]:
                break
            neigh = [j for j in self.neighbors[node] if j < n and not visited[j]]
            if not neigh:
                continue
            for j in neigh:
                visited[j] = True
            sims = self.matrix[neigh] @ query_vec
            for j, s in zip(neigh, sims):
                s = float(s)
                if len(best) < ef or s > best[0][0]:
                    heapq.heappush(best, (s, j))
                    if len(best) > ef:
                        heapq.heappop(best)
                    heapq.heappush(candidates, (-s, j))
        out = sorted(best, key=lambda si: (-si[0], si[1]))
        return [(j, s) for s, j in out]


class CosineIndex:
    """Top-k cosine retrieval over the input-embedding rows.

    ``exact`` ranks by full scan with ties broken by ascending id.
    ``approximate`` builds a small-world graph and widens its search beam
    until recall@10 against exact retrieval reaches 0.95 on a probe set.
    """

    def __init__(self, matrix: np.ndarray, mode: str = "exact",
                 n_probes: int = 1000, min_recall: float = 0.95):
        if mode not in ("exact", "approximate"):
            raise ValidationError(f"index mode must be exact|approximate, got {mode!r}")
        self.mode = mode
        self.matrix = _normalize_rows(matrix)
        self.n = self.matrix.shape[0]
        self._graph: _SmallWorldGraph | None = None
        self.ef_search = 64
        self.probe_recall: float | None = None
        if mode == "approximate":
            self._graph = _SmallWorldGraph(self.matrix)
            self._validate_recall(n_probes, min_recall)

    @classmethod
    def from_model(cls, model: EmbeddingModel, mode: str = "exact") -> "CosineIndex":
        return cls(model.w_in, mode=mode)

    def _validate_recall(self, n_probes: int, min_recall: float) -> None:
        rng = np.random.default_rng(0)
        probes = rng.choice(self.n, size=min(n_probes, self.n), replace=False)
        k = min(10, self.n - 1)
        exact = self._exact_batch(probes, k)
        while True:
            hits = 0
            total = 0
            for row, q in enumerate(probes):
                approx = set(self._approx_top_k(int(q), k))
                truth = exact[row]
                truth = truth[truth >= 0]
                hits += len(approx.intersection(truth.tolist()))
                total += len(truth)
            self.probe_recall = hits / max(total, 1)
            if self.probe_recall >= min_recall or self.ef_search >= 4096:
                break
            self.ef_search *= 2
        if self.probe_recall < min_recall:
            raise W2vtError(
                f"approximate index recall {self.probe_recall:.3f} below {min_recall} "
                f"even at ef_search={self.ef_search}")

    def _exact_batch(self, query_ids: np.ndarray, k: int) -> np.ndarray:
        """(n_query, k) id matrix, -1 padded; descending cosine, ties by id."""
        query_ids = np.asarray(query_ids, dtype=np.int64)
        k = min(k, self.n - 1)
        out = np.full((len(query_ids), k), -1, dtype=np.int64)
        chunk = max(1, int(2**22 // max(self.n, 1)))
        for lo in range(0, len(query_ids), chunk):
            qids = query_ids[lo:lo + chunk]
            scores = self.matrix[qids] @ self.matrix.T
            scores[np.arange(len(qids)), qids] = -np.inf  # self never recommended
            out[lo:lo + chunk] = self._rank_rows(scores, k)
        return out

    @staticmethod
    def _rank_rows(scores: np.ndarray, k: int) -> np.ndarray:
        """Top-k ids per row, descending score with ties by ascending id.

        Stable argsort on the negated scores gives the tie-break for free
        but costs O(n log n) per row; for wide rows an argpartition
        prefilter keeps only rows whose boundary is tied for the full sort.
        """
        n = scores.shape[1]
        if n <= 4 * (k + 64):
            return np.argsort(-scores, axis=1, kind="stable")[:, :k]
        m = k + 64
        part = np.argpartition(-scores, m, axis=1)[:, :m + 1]
        part_scores = np.take_along_axis(scores, part, axis=1)
        # block order is arbitrary, so ties need the id as secondary key
        order = np.lexsort((part, -part_scores), axis=1)
        ranked = np.take_along_axis(part, order, axis=1)
        ranked_scores = np.take_along_axis(part_scores, order, axis=1)
        # a tie between the k-th keeper and the block minimum could admit a
        # smaller id from the dropped tail; those rows take the exact path
        suspect = ranked_scores[:, k - 1] <= ranked_scores[:, m]
        out = ranked[:, :k].copy()
        for row in np.flatnonzero(suspect):
            out[row] = np.argsort(-scores[row], kind="stable")[:k]
        return out

    def _approx_top_k(self, query_id: int, k: int) -> list[int]:
        found = self._graph.search(self.matrix[query_id], max(self.ef_search, k + 1))
        ids = [j for j, _ in found if j != query_id]
        return ids[:k]

    def top_k(self, query_id: int, k: int = 10, exclude_self: bool = True) -> np.ndarray:
        """ids of the k nearest vectors by cosine, best first."""
        if not 0 <= query_id < self.n:
            raise ValidationError(f"query id {query_id} out of range [0, {self.n})")
        k = min(k, self.n - 1 if exclude_self else self.n)
        if self.mode == "approximate":
            return np.asarray(self._approx_top_k(query_id, k), dtype=np.int64)
        scores = self.matrix @ self.matrix[query_id]
        if exclude_self:
            scores[query_id] = -np.inf
        order = np.argsort(-scores, kind="stable")[:k]
        return order.astype(np.int64)

    def batch_top_k(self, query_ids: np.ndarray, k: int = 10) -> np.ndarray:
        if self.mode == "approximate":
            k_eff = min(k, self.n - 1)
            out = np.full((len(query_ids), k_eff), -1, dtype=np.int64)
            for row, q in enumerate(query_ids):
                ids = self._approx_top_k(int(q), k_eff)
                out[row, :len(ids)] = ids
            return out
        return self._exact_batch(query_ids, k)


def top_k(index: CosineIndex, query_id: int, k: int = 10,
          exclude_self: bool = True) -> np.ndarray:
    return index.top_k(query_id, k=k, exclude_self=exclude_self)


def evaluate(model: EmbeddingModel, test_pairs: np.ndarray, k: int = 10,
             mode: str = "exact", keep_self_pairs: bool = False,
             index: CosineIndex | None = None) -> EvalResult:
    """HR@k and NDCG@k over (query, target) pairs.

    Pairs with identical query and target are discarded (removed from the
    denominator) unless ``keep_self_pairs``; a hit contributes
    ``1/log2(rank + 1)`` to NDCG. Target id -1 marks a token unseen in
    training and always counts as a miss.
    """
    pairs = np.asarray(test_pairs)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValidationError("test_pairs must be an (n, 2) array")
    if index is None:
        index = CosineIndex.from_model(model, mode=mode)
    n_vocab = index.n
    mask = pairs[:, 0] >= 0
    mask &= pairs[:, 0] < n_vocab
    if not keep_self_pairs:
        mask &= pairs[:, 0] != pairs[:, 1]
    pairs = pairs[mask]
    if len(pairs) == 0:
        raise EmptyTestSetError("no evaluable test pairs after the discard rule")

    queries = pairs[:, 0].astype(np.int64)
    uniq, inverse = np.unique(queries, return_inverse=True)
    top = index.batch_top_k(uniq, k=k)  # (n_uniq, k)
    ranks = np.full(len(pairs), -1, dtype=np.int64)
    targets = pairs[:, 1].astype(np.int64)
    rows = top[inverse]  # (n_pairs, k)
    match = (rows == targets[:, None]) & (targets[:, None] >= 0)
    has_hit = match.any(axis=1)
    ranks[has_hit] = match[has_hit].argmax(axis=1) + 1
    hits = int(has_hit.sum())
    gains = np.where(has_hit, 1.0 / np.log2(ranks.clip(min=1) + 1.0), 0.0)
    return EvalResult(
        hr_at_k=100.0 * hits / len(pairs),
        ndcg_at_k=float(gains.mean()),
        k=k,
        n_pairs=len(pairs),
        per_pair_ranks=ranks,
    )


def aggregate_runs(results: list[EvalResult]) -> AggregateResult:
    """Mean and 95% CI half-width (t-distribution) across repeated runs."""
    if len(results) < 2:
        raise ValidationError("aggregation needs at least 2 runs")
    hr = np.array([r.hr_at_k for r in results], dtype=np.float64)
    nd = np.array([r.ndcg_at_k for r in results], dtype=np.float64)
    r = len(results)
    t_crit = stats.t.ppf(0.975, r - 1)

    def half_width(x: np.ndarray) -> float:
        s = x.std(ddof=1)
        return float(t_crit * s / np.sqrt(r))

    return AggregateResult(hr_mean=float(hr.mean()), hr_ci95=half_width(hr),
                           ndcg_mean=float(nd.mean()), ndcg_ci95=half_width(nd),
                           n_runs=r)
