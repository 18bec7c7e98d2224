"""Simplified MERT: coordinate line search over merged n-best lists."""
from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from .decoder import FEATURES, DecoderParams, FeatureWeights, nbest
from .errors import DecodeFailure, TuningError, ValidationError
from .bleu import bleu_from_stats, sentence_stats

log = logging.getLogger(__name__)


class NbestPool:
    """Merged, deduplicated n-best candidates per tune sentence."""

    def __init__(self, references: Sequence[Sequence[str]]):
        self.references = [tuple(r) for r in references]
        self.feats: list[np.ndarray] = [np.zeros((0, len(FEATURES))) for _ in references]
        self.stats: list[np.ndarray] = [np.zeros((0, 10)) for _ in references]
        self.seen: list[set] = [set() for _ in references]

    def add(self, k: int, entries) -> int:
        """Merge entries for sentence ``k``; returns how many were new."""
        new_f, new_s = [], []
        for t in entries:
            if t.tokens in self.seen[k]:
                continue
            self.seen[k].add(t.tokens)
            new_f.append(t.features)
            new_s.append(sentence_stats(t.tokens, self.references[k]))
        if new_f:
            self.feats[k] = np.vstack([self.feats[k], np.array(new_f)])
            self.stats[k] = np.vstack([self.stats[k], np.array(new_s, dtype=float)])
        return len(new_f)

    def active(self) -> list[int]:
        return [k for k, f in enumerate(self.feats) if len(f)]

    def bleu(self, weights: np.ndarray) -> float:
        total = np.zeros(10)
        for k in self.active():
            total += self.stats[k][int(np.argmax(self.feats[k] @ weights))]
        return bleu_from_stats(total)


def _envelope(slopes: np.ndarray, intercepts: np.ndarray) -> tuple[list[float], list[int]]:
    """Upper envelope of lines ``intercept + slope * x``.

    Returns breakpoints ``xs`` and candidate ids ``ids`` such that ``ids[0]``
    wins on (-inf, xs[0]), ``ids[k]`` on [xs[k-1], xs[k]) and the last one
    on [xs[-1], inf).
    """
    order = sorted(range(len(slopes)), key=lambda c: (slopes[c], intercepts[c]))
    # keep the best intercept per slope
    lines: list[int] = []
    for c in order:
        if lines and slopes[lines[-1]] == slopes[c]:
            lines[-1] = c
        else:
            lines.append(c)
    hull: list[int] = []
    starts: list[float] = []
    for c in lines:
        while hull:
            top = hull[-1]
            x = (intercepts[top] - intercepts[c]) / (slopes[c] - slopes[top])
            if x <= starts[-1]:
                hull.pop()
                starts.pop()
            else:
                break
        if hull:
            top = hull[-1]
            starts.append((intercepts[top] - intercepts[c]) / (slopes[c] - slopes[top]))
        else:
            starts.append(-math.inf)
        hull.append(c)
    return starts[1:], hull


def line_search(pool: NbestPool, weights: np.ndarray, dim: int) -> tuple[float, float]:
    """Exact best value of ``weights[dim]`` for corpus BLEU on the pool.

    Returns ``(value, bleu)``. Candidate values are midpoints between
    consecutive envelope breakpoints plus one point beyond each end.
    """
    events = []
    stats = np.zeros(10)
    current = {}
    for k in pool.active():
        f = pool.feats[k]
        slopes = f[:, dim]
        base = f @ weights - slopes * weights[dim]
        xs, ids = _envelope(slopes, base)
        stats += pool.stats[k][ids[0]]
        current[k] = ids[0]
        for x, c in zip(xs, ids[1:]):
            events.append((x, k, c))
    events.sort(key=lambda e: e[0])
    if not events:
        return float(weights[dim]), bleu_from_stats(stats)
    best_val = events[0][0] - 1.0
    best_bleu = bleu_from_stats(stats)
    idx = 0
    while idx < len(events):
        x = events[idx][0]
        while idx < len(events) and events[idx][0] == x:
            _, k, c = events[idx]
            stats += pool.stats[k][c] - pool.stats[k][current[k]]
            current[k] = c
            idx += 1
        nxt = events[idx][0] if idx < len(events) else x + 2.0
        val = 0.5 * (x + nxt)
        b = bleu_from_stats(stats)
        if b > best_bleu + 1e-12:
            best_val, best_bleu = val, b
    return float(best_val), best_bleu


def optimize(pool: NbestPool, start: np.ndarray, rng: np.random.Generator, restarts: int = 5,
             max_passes: int = 20, fixed: Sequence[int] = ()) -> tuple[np.ndarray, float]:
    """Coordinate ascent from ``start`` and from ``restarts`` random points.

    A move is taken only when it strictly improves BLEU, so the result never
    scores below ``start`` on the pool.
    """
    free = [d for d in range(len(start)) if d not in set(fixed)]

    def ascend(w):
        w = w.copy()
        score = pool.bleu(w)
        for _ in range(max_passes):
            improved = False
            for d in free:
                val, b = line_search(pool, w, d)
                if b > score + 1e-9:
                    w[d] = val
                    score = b
                    improved = True
            if not improved:
                break
        return w, score

    best_w, best = ascend(start)
    for _ in range(restarts):
        w0 = start.copy()
        w0[free] = rng.uniform(-1.0, 1.0, size=len(free))
        w, b = ascend(w0)
        if b > best + 1e-9:
            best_w, best = w, b
    return best_w, best


def tune_weights(sources: Sequence[Sequence[str]], references: Sequence[Sequence[str]], ptable, lm,
                 params: DecoderParams | None = None, initial: FeatureWeights | None = None,
                 iterations: int = 5, nbest_size: int = 100, seed: int = 0, restarts: int = 5) -> FeatureWeights:
    """Iterate decoding and line search; returns the best weights found.

    BLEU on the final merged n-best pool is never lower than with
    ``initial``. More than half of the tune sentences failing to decode
    aborts tuning.
    """
    if not sources:
        raise ValidationError("empty tune set")
    if len(sources) != len(references):
        raise ValidationError("tune sources and references differ in length")
    params = params or DecoderParams()
    weights = np.array((initial or FeatureWeights()).array, dtype=float)
    start = weights.copy()
    rng = np.random.default_rng(seed)
    pool = NbestPool(references)
    for it in range(iterations):
        fw = FeatureWeights(weights)
        failures = 0
        added = 0
        for k, src in enumerate(sources):
            try:
                added += pool.add(k, nbest(src, ptable, lm, fw, params, nbest_size, sentence_id=k + 1))
            except DecodeFailure:
                failures += 1
        if failures * 2 > len(sources):
            raise TuningError(f"{failures} of {len(sources)} tune sentences failed to decode")
        if added == 0 and it > 0:
            break
        weights, score = optimize(pool, weights, rng, restarts)
        log.info("tuning iteration %d: pool BLEU %.2f", it + 1, score)
    if pool.bleu(weights) < pool.bleu(start):
        weights = start
    return FeatureWeights(weights)
