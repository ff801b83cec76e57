"""Numba-compiled inner training loops.

Both kernels share one structure: per worker chunk, per sequence, re-draw
the frequent-token filter, then slide a sampled-width window and apply
sequential SGD updates against the positive target plus N alias-sampled
negatives. Weights are float32 with float32 accumulation; loss bookkeeping
is float64. Workers write to the shared matrices without locks; torn
updates are benign (word-sized element writes), determinism holds only for
a single worker.
"""

import math

import numpy as np
from numba import njit, prange

_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, inline="always")
def _rng_u64(state):
    # xorshift64*: nonzero state, full 2**64-1 period
    state ^= state >> np.uint64(12)
    state ^= state << np.uint64(25)
    state ^= state >> np.uint64(27)
    return state, state * np.uint64(0x2545F4914F6CDD1D)


@njit(cache=True, inline="always")
def _rng_unit(state):
    state, out = _rng_u64(state)
    return state, np.float64(out >> np.uint64(11)) * _INV_2_53


@njit(cache=True, inline="always")
def _update_against_targets(v, w_out, center, n_negatives,
                            alias_probs, alias_ids, lr, state, grad):
    """One positive + up to N negative logistic updates against input vector v.

    Accumulates the input-side gradient step into ``grad`` (caller applies
    it) and updates the output rows in place. Negatives colliding with the
    positive target are redrawn up to 8 times, then skipped.
    """
    d = v.shape[0]
    for c in range(d):
        grad[c] = np.float32(0.0)
    loss = 0.0
    n_slots = np.uint64(alias_probs.shape[0])
    for k in range(n_negatives + 1):
        if k == 0:
            target = np.int64(center)
            label = 1.0
        else:
            target = np.int64(-1)
            for _ in range(8):
                state, r1 = _rng_u64(state)
                j = np.int64(r1 % n_slots)
                state, u = _rng_unit(state)
                cand = j if u < alias_probs[j] else np.int64(alias_ids[j])
                if cand != center:
                    target = cand
                    break
            if target < 0:
                continue
            label = 0.0
        u_row = w_out[target]
        dot = np.float32(0.0)
        for c in range(d):
            dot += u_row[c] * v[c]
        x = float(dot)
        if x > 30.0:
            x = 30.0
        elif x < -30.0:
            x = -30.0
        s = 1.0 / (1.0 + math.exp(-x))
        if label > 0.5:
            loss -= math.log(s if s > 1e-12 else 1e-12)
        else:
            loss -= math.log(1.0 - s if s < 1.0 - 1e-12 else 1e-12)
        g = np.float32((label - s) * lr)
        for c in range(d):
            grad[c] += g * u_row[c]
        for c in range(d):
            u_row[c] += g * v[c]
    return state, loss


@njit(cache=True, parallel=True)
def sg_epoch(tokens, offsets, chunk_starts, w_in, w_out, keep_probs,
             alias_probs, alias_ids, max_window, n_negatives,
             lr0, lr_floor, planned_tokens, progress, rng_states,
             loss_out, pair_out, window_sampling):
    """One Skipgram epoch: every surviving (context, center) pair gets its
    own independent update, so per-window work grows with window * negatives."""
    n_workers = chunk_starts.shape[0] - 1
    d = w_in.shape[1]
    mw = np.uint64(max_window)
    for w in prange(n_workers):
        state = rng_states[w]
        grad = np.empty(d, dtype=np.float32)
        kept = np.empty(64, dtype=np.int32)
        loss = 0.0
        pairs = np.int64(0)
        lr = lr0
        for sq in range(chunk_starts[w], chunk_starts[w + 1]):
            beg = offsets[sq]
            end = offsets[sq + 1]
            ln = end - beg
            if kept.shape[0] < ln:
                kept = np.empty(ln, dtype=np.int32)
            n_kept = 0
            for i in range(beg, end):
                tok = tokens[i]
                p = keep_probs[tok]
                if p >= 1.0:
                    kept[n_kept] = tok
                    n_kept += 1
                else:
                    state, u = _rng_unit(state)
                    if p >= u:
                        kept[n_kept] = tok
                        n_kept += 1
            progress[0] += ln
            lr = lr0 * (1.0 - np.float64(progress[0]) / planned_tokens)
            if lr < lr_floor:
                lr = lr_floor
            for pos in range(n_kept):
                center = kept[pos]
                if window_sampling:
                    state, r = _rng_u64(state)
                    l = 1 + np.int64(r % mw)
                else:
                    l = np.int64(max_window)
                lo = pos - l
                if lo < 0:
                    lo = 0
                hi = pos + l
                if hi > n_kept - 1:
                    hi = n_kept - 1
                for j in range(lo, hi + 1):
                    if j == pos:
                        continue
                    v = w_in[kept[j]]
                    state, pl = _update_against_targets(
                        v, w_out, center, n_negatives,
                        alias_probs, alias_ids, lr, state, grad)
                    loss += pl
                    pairs += 1
                    for c in range(d):
                        v[c] += grad[c]
        rng_states[w] = state
        loss_out[w] = loss
        pair_out[w] = pairs


@njit(cache=True, parallel=True)
def cbow_epoch(tokens, offsets, chunk_starts, w_in, w_out, keep_probs,
               alias_probs, alias_ids, max_window, n_negatives,
               lr0, lr_floor, planned_tokens, progress, rng_states,
               loss_out, pair_out, window_sampling):
    """One CBOW epoch: a single update per window against the mean of the
    context vectors; the input-side gradient is split equally (mean, not
    sum) across the contributing context rows."""
    n_workers = chunk_starts.shape[0] - 1
    d = w_in.shape[1]
    mw = np.uint64(max_window)
    for w in prange(n_workers):
        state = rng_states[w]
        grad = np.empty(d, dtype=np.float32)
        h = np.empty(d, dtype=np.float32)
        ctx_ids = np.empty(2 * max_window, dtype=np.int32)
        kept = np.empty(64, dtype=np.int32)
        loss = 0.0
        pairs = np.int64(0)
        lr = lr0
        for sq in range(chunk_starts[w], chunk_starts[w + 1]):
            beg = offsets[sq]
            end = offsets[sq + 1]
            ln = end - beg
            if kept.shape[0] < ln:
                kept = np.empty(ln, dtype=np.int32)
            n_kept = 0
            for i in range(beg, end):
                tok = tokens[i]
                p = keep_probs[tok]
                if p >= 1.0:
                    kept[n_kept] = tok
                    n_kept += 1
                else:
                    state, u = _rng_unit(state)
                    if p >= u:
                        kept[n_kept] = tok
                        n_kept += 1
            progress[0] += ln
            lr = lr0 * (1.0 - np.float64(progress[0]) / planned_tokens)
            if lr < lr_floor:
                lr = lr_floor
            for pos in range(n_kept):
                center = kept[pos]
                if window_sampling:
                    state, r = _rng_u64(state)
                    l = 1 + np.int64(r % mw)
                else:
                    l = np.int64(max_window)
                lo = pos - l
                if lo < 0:
                    lo = 0
                hi = pos + l
                if hi > n_kept - 1:
                    hi = n_kept - 1
                nc = 0
                for j in range(lo, hi + 1):
                    if j != pos:
                        ctx_ids[nc] = kept[j]
                        nc += 1
                if nc == 0:
                    continue
                for c in range(d):
                    h[c] = np.float32(0.0)
                for q in range(nc):
                    row = w_in[ctx_ids[q]]
                    for c in range(d):
                        h[c] += row[c]
                inv = np.float32(1.0 / nc)
                for c in range(d):
                    h[c] *= inv
                state, pl = _update_against_targets(
                    h, w_out, center, n_negatives,
                    alias_probs, alias_ids, lr, state, grad)
                loss += pl
                pairs += 1
                for c in range(d):
                    grad[c] *= inv
                for q in range(nc):
                    row = w_in[ctx_ids[q]]
                    for c in range(d):
                        row[c] += grad[c]
        rng_states[w] = state
        loss_out[w] = loss
        pair_out[w] = pairs
