"""Hot numeric loops, each with a numba path and a vectorized numpy path.

The public names (``expected_counts``, ``consistent_spans``) dispatch to the
numba versions unless JIT is disabled; both variants are importable so tests
and benchmarks can compare them directly.
"""
import numpy as np

from ._accel import JIT_ENABLED, njit

__all__ = [
    "expected_counts",
    "expected_counts_numpy",
    "expected_counts_numba",
    "consistent_spans",
    "consistent_spans_numpy",
    "consistent_spans_numba",
]


# --------------------------------------------------------------------------
# EM expected counts
#
# A corpus is flattened into "cells": one cell per (target token occurrence,
# candidate source position). Each cell points at a lexical parameter
# (cell_param), a positional parameter (cell_pos) and the target-token
# occurrence it belongs to (cell_tok). Cells of one token are contiguous.
# --------------------------------------------------------------------------


def expected_counts_numpy(cell_param, cell_pos, cell_tok, t, q, n_tok):
    weight = t[cell_param] * q[cell_pos]
    denom = np.bincount(cell_tok, weights=weight, minlength=n_tok)
    post = weight / denom[cell_tok]
    lex = np.bincount(cell_param, weights=post, minlength=t.shape[0])
    pos = np.bincount(cell_pos, weights=post, minlength=q.shape[0])
    return lex, pos, float(np.log(denom).sum())


@njit
def expected_counts_numba(cell_param, cell_pos, cell_tok, t, q, n_tok):
    lex = np.zeros(t.shape[0])
    pos = np.zeros(q.shape[0])
    loglik = 0.0
    n_cells = cell_param.shape[0]
    start = 0
    while start < n_cells:
        tok = cell_tok[start]
        stop = start
        denom = 0.0
        while stop < n_cells and cell_tok[stop] == tok:
            denom += t[cell_param[stop]] * q[cell_pos[stop]]
            stop += 1
        loglik += np.log(denom)
        for c in range(start, stop):
            p = t[cell_param[c]] * q[cell_pos[c]] / denom
            lex[cell_param[c]] += p
            pos[cell_pos[c]] += p
        start = stop
    return lex, pos, loglik


def expected_counts(cell_param, cell_pos, cell_tok, t, q, n_tok):
    """One E-step: lexical counts, positional counts, corpus log-likelihood."""
    if JIT_ENABLED:
        return expected_counts_numba(cell_param, cell_pos, cell_tok, t, q, n_tok)
    return expected_counts_numpy(cell_param, cell_pos, cell_tok, t, q, n_tok)


# --------------------------------------------------------------------------
# Alignment-consistent span pairs
# --------------------------------------------------------------------------


def consistent_spans_numpy(links, max_len):
    """All (i1, i2, j1, j2) inclusive span pairs consistent with ``links``.

    ``links`` is an m x n boolean matrix. A box is consistent when it holds at
    least one link and the links in its source rows and in its target columns
    all fall inside the box; equal counts express exactly that.
    """
    a = np.asarray(links, dtype=np.int64)
    m, n = a.shape
    if m == 0 or n == 0 or not a.any():
        return np.zeros((0, 4), dtype=np.int64)
    box = np.zeros((m + 1, n + 1), dtype=np.int64)
    box[1:, 1:] = a.cumsum(0).cumsum(1)
    rows = np.concatenate(([0], a.sum(1).cumsum()))
    cols = np.concatenate(([0], a.sum(0).cumsum()))

    i1, i2 = np.triu_indices(m)
    keep = i2 - i1 < max_len
    i1, i2 = i1[keep], i2[keep]
    j1, j2 = np.triu_indices(n)
    keep = j2 - j1 < max_len
    j1, j2 = j1[keep], j2[keep]

    I1, J1 = i1[:, None], j1[None, :]
    I2, J2 = i2[:, None] + 1, j2[None, :] + 1
    inside = box[I2, J2] - box[I1, J2] - box[I2, J1] + box[I1, J1]
    row_total = (rows[i2 + 1] - rows[i1])[:, None]
    col_total = (cols[j2 + 1] - cols[j1])[None, :]
    ok = (inside > 0) & (inside == row_total) & (inside == col_total)
    si, sj = np.nonzero(ok)
    return np.stack([i1[si], i2[si], j1[sj], j2[sj]], axis=1).astype(np.int64)


@njit
def consistent_spans_numba(links, max_len):
    m, n = links.shape
    cap = m * min(m, max_len) * n * min(n, max_len)
    out = np.empty((max(cap, 1), 4), dtype=np.int64)
    k = 0
    src_aligned = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        for j in range(n):
            if links[i, j]:
                src_aligned[i] = True
    for j1 in range(n):
        for j2 in range(j1, min(n, j1 + max_len)):
            # source projection of the target span
            lo = m
            hi = -1
            for j in range(j1, j2 + 1):
                for i in range(m):
                    if links[i, j]:
                        if i < lo:
                            lo = i
                        if i > hi:
                            hi = i
            if hi < 0 or hi - lo + 1 > max_len:
                continue
            bad = False
            for i in range(lo, hi + 1):
                for j in range(n):
                    if links[i, j] and (j < j1 or j > j2):
                        bad = True
                        break
                if bad:
                    break
            if bad:
                continue
            # widen over unaligned source words on either edge
            s = lo
            while True:
                e = hi
                while True:
                    out[k, 0] = s
                    out[k, 1] = e
                    out[k, 2] = j1
                    out[k, 3] = j2
                    k += 1
                    e += 1
                    if e >= m or src_aligned[e] or e - s + 1 > max_len:
                        break
                s -= 1
                if s < 0 or src_aligned[s] or hi - s + 1 > max_len:
                    break
    return out[:k]


def consistent_spans(links, max_len):
    """Consistent span pairs as an ``(k, 4)`` int array ``(i1, i2, j1, j2)``."""
    links = np.ascontiguousarray(links, dtype=np.bool_)
    if links.size == 0:
        return np.zeros((0, 4), dtype=np.int64)
    if JIT_ENABLED:
        return consistent_spans_numba(links, max_len)
    return consistent_spans_numpy(links, max_len)
