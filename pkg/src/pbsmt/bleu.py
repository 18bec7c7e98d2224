"""Corpus BLEU with clipped n-gram precision and brevity penalty."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError

MAX_ORDER = 4


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[k : k + n]) for k in range(len(tokens) - n + 1))


def sentence_stats(hyp: Sequence[str], ref: Sequence[str], max_order: int = MAX_ORDER) -> list[int]:
    """``[match_1..match_N, total_1..total_N, hyp_len, ref_len]``."""
    hyp, ref = tuple(hyp), tuple(ref)
    match, total = [], []
    for n in range(1, max_order + 1):
        h = _ngrams(hyp, n)
        r = _ngrams(ref, n)
        match.append(sum(min(c, r[g]) for g, c in h.items()))
        total.append(max(len(hyp) - n + 1, 0))
    return match + total + [len(hyp), len(ref)]


@dataclass(frozen=True)
class BleuReport:
    precisions: tuple[float, ...]  # smoothed values actually used
    brevity_penalty: float
    hyp_length: int
    ref_length: int
    bleu: float  # 0..100
    matches: tuple[int, ...] = ()
    totals: tuple[int, ...] = ()

    def __str__(self):
        return f"{self.bleu:.2f}"

    def summary(self) -> str:
        ps = "/".join(f"{100 * p:.1f}" for p in self.precisions)
        return (
            f"BLEU = {self.bleu:.2f} {ps} (BP = {self.brevity_penalty:.3f} "
            f"hyp_len = {self.hyp_length} ref_len = {self.ref_length})"
        )


def report_from_stats(stats, max_order: int = MAX_ORDER) -> BleuReport:
    stats = [int(round(x)) for x in stats]
    match, total = stats[:max_order], stats[max_order : 2 * max_order]
    h, r = stats[2 * max_order], stats[2 * max_order + 1]
    if h == 0:
        return BleuReport((0.0,) * max_order, 0.0, h, r, 0.0, tuple(match), tuple(total))
    floor = 1.0 / (2.0 * h)
    precisions = []
    for m, t in zip(match, total):
        if t == 0:
            # no n-grams of this order anywhere in the hypotheses: vacuous
            precisions.append(1.0)
            continue
        p = m / t
        precisions.append(p if p > 0 else floor)
    bp = 1.0 if h >= r else math.exp(1.0 - r / h)
    score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / max_order)
    return BleuReport(tuple(precisions), bp, h, r, min(score, 100.0), tuple(match), tuple(total))


def bleu_from_stats(stats, max_order: int = MAX_ORDER) -> float:
    return report_from_stats(stats, max_order).bleu


def bleu(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]], max_order: int = MAX_ORDER) -> BleuReport:
    """Corpus-level BLEU of pre-tokenized hypotheses against single references.

    A zero precision is floored at 1/(2 * total hypothesis length) so short
    corpora still get a finite, non-zero score. An order with no hypothesis
    n-grams at all counts as precision 1; the brevity penalty still applies.
    """
    if len(hypotheses) != len(references):
        raise ValidationError(f"{len(hypotheses)} hypotheses for {len(references)} references")
    if not hypotheses:
        raise ValidationError("BLEU of an empty corpus")
    total = np.zeros(2 * max_order + 2, dtype=np.int64)
    for h, r in zip(hypotheses, references):
        h = h.split() if isinstance(h, str) else h
        r = r.split() if isinstance(r, str) else r
        total += np.asarray(sentence_stats(h, r, max_order), dtype=np.int64)
    return report_from_stats(total.tolist(), max_order)
