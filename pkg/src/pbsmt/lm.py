"""Interpolated Kneser-Ney n-gram language model with ARPA serialization.

All probabilities are log10. Sentences are padded with a single ``<s>`` and
terminated with ``</s>``; words outside the vocabulary score as ``<unk>``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import read_lines
from .errors import ParseError, ValidationError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
LOG_ZERO = -99.0
DEFAULT_DISCOUNT = 0.75

NGram = tuple[str, ...]


@dataclass
class NGramCounts:
    order: int
    counts: list[Counter]  # counts[n - 1]: raw counts of n-grams
    continuation: list[Counter]  # continuation[n - 1]: N1+(• g) for |g| = n < order

    def count(self, ngram: Sequence[str]) -> int:
        return self.counts[len(ngram) - 1].get(tuple(ngram), 0)


def count_ngrams(sentences: Iterable[Sequence[str]], order: int = 5) -> NGramCounts:
    if order < 1:
        raise ValidationError("n-gram order must be >= 1")
    counts = [Counter() for _ in range(order)]
    for sent in sentences:
        toks = (BOS, *sent, EOS)
        for k in range(len(toks)):
            for n in range(1, min(order, k + 1) + 1):
                counts[n - 1][toks[k - n + 1 : k + 1]] += 1
    continuation = [Counter() for _ in range(order - 1)]
    for n in range(2, order + 1):
        cont = continuation[n - 2]
        for g in counts[n - 1]:
            cont[g[1:]] += 1
    return NGramCounts(order, counts, continuation)


def count_of_counts_discount(counts: Counter) -> float | None:
    """D = n1 / (n1 + 2 n2); None when the data gives no estimate."""
    n1 = sum(1 for c in counts.values() if c == 1)
    n2 = sum(1 for c in counts.values() if c == 2)
    if n1 == 0:
        return None
    return n1 / (n1 + 2 * n2)


class NGramModel:
    """Backoff n-gram model: ``probs[n-1][g]`` and ``backoffs[h]`` in log10."""

    def __init__(self, order: int, probs: list[dict[NGram, float]], backoffs: dict[NGram, float] | None = None):
        if order < 1 or len(probs) != order:
            raise ValidationError("model needs one probability map per order")
        self.order = order
        self.probs = probs
        self.backoffs = backoffs or {}
        self.vocab = frozenset(g[0] for g in probs[0])
        self._cache: dict[tuple[NGram, str], tuple[float, NGram]] = {}
        self._upper: dict[str, float] | None = None

    @classmethod
    def uniform(cls, words: Iterable[str]) -> "NGramModel":
        vocab = sorted(set(words) | {EOS, UNK})
        lp = -math.log10(len(vocab))
        probs = {(w,): lp for w in vocab}
        probs[(BOS,)] = LOG_ZERO
        return cls(1, [probs])

    def map_word(self, w: str) -> str:
        return w if w in self.vocab else UNK

    def logprob(self, context: Sequence[str], word: str) -> float:
        return self.score_word(tuple(context), word)[0]

    def score_word(self, context: NGram, word: str) -> tuple[float, NGram]:
        """``(log10 P(word | context), next context)``; the context keeps order-1 words."""
        key = (context, word)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        w = self.map_word(word)
        ctx = context[len(context) - self.order + 1 :] if self.order > 1 else ()
        bow = 0.0
        lp = None
        for start in range(len(ctx) + 1):
            h = ctx[start:]
            lp = self.probs[len(h)].get(h + (w,))
            if lp is not None:
                lp += bow
                break
            bow += self.backoffs.get(h, 0.0)
        if lp is None:  # no <unk> entry in a hand-built model
            lp = LOG_ZERO
        nxt = (ctx + (w,))[-(self.order - 1) :] if self.order > 1 else ()
        self._cache[key] = (lp, nxt)
        return lp, nxt

    def score_tokens(self, tokens: Sequence[str], context: NGram = (BOS,), eos: bool = False) -> tuple[float, NGram]:
        total = 0.0
        for w in tokens:
            lp, context = self.score_word(context, w)
            total += lp
        if eos:
            lp, context = self.score_word(context, EOS)
            total += lp
        return total, context

    def upper_bound(self, word: str) -> float:
        """Largest log10 probability ``word`` can receive in any context."""
        if self._upper is None:
            best: dict[str, float] = {}
            for level in self.probs:
                for g, lp in level.items():
                    if lp > best.get(g[-1], LOG_ZERO):
                        best[g[-1]] = lp
            # backoff weights may exceed 1 in foreign models
            slack = max([0.0, *self.backoffs.values()])
            self._upper = {w: min(0.0, lp + slack * (self.order - 1)) for w, lp in best.items()}
        return self._upper.get(self.map_word(word), 0.0)

    # ----------------------------------------------------------------------

    def predictable_vocab(self) -> list[str]:
        return sorted(self.vocab - {BOS})

    def contexts(self) -> list[NGram]:
        """Every context with an explicit backoff weight, plus the empty one."""
        return [()] + sorted(self.backoffs)

    def write_arpa(self, path) -> None:
        Path(path).write_text(self.to_arpa(), encoding="utf-8")

    def to_arpa(self) -> str:
        lines = ["", "\\data\\"]
        for n, level in enumerate(self.probs, 1):
            lines.append(f"ngram {n}={len(level)}")
        for n, level in enumerate(self.probs, 1):
            lines.append("")
            lines.append(f"\\{n}-grams:")
            for g in sorted(level):
                row = f"{_fmt(level[g])}\t{' '.join(g)}"
                if n < self.order and g in self.backoffs:
                    row += f"\t{_fmt(self.backoffs[g])}"
                lines.append(row)
        lines.append("")
        lines.append("\\end\\")
        return "\n".join(lines) + "\n"

    @classmethod
    def read_arpa(cls, path) -> "NGramModel":
        return parse_arpa(read_lines(path), str(path))


def _fmt(x: float) -> str:
    return f"{x:.10f}"


def parse_arpa(lines: Sequence[str], path: str | None = None) -> NGramModel:
    declared: dict[int, int] = {}
    probs: list[dict[NGram, float]] = []
    backoffs: dict[NGram, float] = {}
    state = "start"
    level = 0
    ended = False
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if ended:
            raise ParseError("content after \\end\\", lineno, path)
        if state == "start":
            if line != "\\data\\":
                raise ParseError("expected \\data\\", lineno, path)
            state = "header"
            continue
        if line == "\\end\\":
            ended = True
            continue
        if line.startswith("ngram ") and state == "header":
            try:
                n, c = line[6:].split("=")
                declared[int(n)] = int(c)
            except ValueError:
                raise ParseError(f"bad count line {line!r}", lineno, path) from None
            continue
        if line.startswith("\\") and line.endswith("-grams:"):
            try:
                level = int(line[1:-7])
            except ValueError:
                raise ParseError(f"bad section header {line!r}", lineno, path) from None
            if level != len(probs) + 1 or level not in declared:
                raise ParseError(f"unexpected section {line!r}", lineno, path)
            probs.append({})
            state = "body"
            continue
        if state != "body":
            raise ParseError(f"unexpected line {line!r}", lineno, path)
        parts = line.split("\t") if "\t" in line else line.split()
        if "\t" in line:
            if len(parts) not in (2, 3):
                raise ParseError("expected 'logprob<TAB>ngram[<TAB>backoff]'", lineno, path)
            words = tuple(parts[1].split())
            rest = parts[2:]
        else:
            words = tuple(parts[1 : 1 + level])
            rest = parts[1 + level :]
        if len(words) != level or len(rest) > 1:
            raise ParseError(f"expected a {level}-gram", lineno, path)
        try:
            probs[-1][words] = float(parts[0])
            if rest:
                backoffs[words] = float(rest[0])
        except ValueError:
            raise ParseError(f"bad number in {line!r}", lineno, path) from None
    if not ended:
        raise ParseError("missing \\end\\", path=path)
    if len(probs) != len(declared):
        raise ParseError("header declares more orders than sections present", path=path)
    for n, level_probs in enumerate(probs, 1):
        if declared[n] != len(level_probs):
            raise ParseError(
                f"header says {declared[n]} {n}-grams, section has {len(level_probs)}", path=path
            )
    return NGramModel(len(probs), probs, backoffs)


# --------------------------------------------------------------------------
# Estimation
# --------------------------------------------------------------------------


def estimate_kn(counts: NGramCounts, order: int | None = None, discount="fixed",
                value: float = DEFAULT_DISCOUNT) -> NGramModel:
    """Interpolated Kneser-Ney with one absolute discount per order.

    ``discount`` is ``"fixed"`` (``value`` at every order) or
    ``"count-of-counts"`` (n1/(n1+2 n2) per order, falling back to ``value``).
    The highest order and n-grams starting with ``<s>`` use raw counts; the
    others use continuation counts. Unigrams interpolate with a uniform
    distribution over the vocabulary including ``<unk>``.
    """
    order = order or counts.order
    if order > counts.order:
        raise ValidationError(f"counts only go up to order {counts.order}")
    if not counts.counts or not counts.counts[0]:
        raise ValidationError("cannot estimate a model from empty counts")

    adjusted: list[dict[NGram, int]] = []
    for n in range(1, order + 1):
        raw = counts.counts[n - 1]
        if n == order:
            adjusted.append(dict(raw))
            continue
        cont = counts.continuation[n - 1]
        adj = {}
        for g, c in raw.items():
            if g == (BOS,):
                continue
            adj[g] = c if g[0] == BOS else cont.get(g, 0)
        adjusted.append({g: c for g, c in adj.items() if c > 0})

    discounts = []
    for n in range(1, order + 1):
        if discount == "fixed":
            d = value
        elif discount == "count-of-counts":
            d = count_of_counts_discount(adjusted[n - 1]) or value
        else:
            raise ValidationError(f"unknown discount policy {discount!r}")
        if not 0.0 < d <= 1.0:
            raise ValidationError(f"discount {d} outside (0, 1]")
        discounts.append(d)

    probs: list[dict[NGram, float]] = [dict() for _ in range(order)]
    backoffs: dict[NGram, float] = {}

    # unigrams
    uni = adjusted[0]
    uni.pop((BOS,), None)
    vocab = sorted({g[0] for g in uni} | {EOS, UNK})
    total = sum(uni.values())
    d = discounts[0]
    gamma = d * len(uni) / total
    floor = gamma / len(vocab)
    lin1: dict[NGram, float] = {}
    for w in vocab:
        lin1[(w,)] = max(uni.get((w,), 0) - d, 0.0) / total + floor
    probs[0] = {g: math.log10(p) for g, p in lin1.items()}
    probs[0][(BOS,)] = LOG_ZERO
    lower_lin = lin1

    for n in range(2, order + 1):
        adj = adjusted[n - 1]
        d = discounts[n - 1]
        ctx_total: Counter = Counter()
        ctx_types: Counter = Counter()
        for g, c in adj.items():
            ctx_total[g[:-1]] += c
            ctx_types[g[:-1]] += 1
        lin: dict[NGram, float] = {}
        for g, c in adj.items():
            h = g[:-1]
            gam = d * ctx_types[h] / ctx_total[h]
            lin[g] = max(c - d, 0.0) / ctx_total[h] + gam * _lower(lower_lin, lin1, probs, backoffs, g[1:])
        for h, tot in ctx_total.items():
            backoffs[h] = math.log10(d * ctx_types[h] / tot)
        probs[n - 1] = {g: math.log10(p) for g, p in lin.items()}
        lower_lin = lin
    return NGramModel(order, probs, backoffs)


def _lower(lower_lin, lin1, probs, backoffs, g: NGram) -> float:
    """Linear P(g[-1] | g[:-1]) from the already-built lower orders."""
    p = lower_lin.get(g)
    if p is not None:
        return p
    # fall back through the stored log-domain model
    bow = 0.0
    for start in range(len(g)):
        sub = g[start:]
        lp = probs[len(sub) - 1].get(sub)
        if lp is not None:
            return 10.0 ** (lp + bow)
        bow += backoffs.get(sub[:-1], 0.0)
    return lin1.get((UNK,), 0.0)


def train_lm(sentences: Iterable[Sequence[str]], order: int = 5, discount="fixed", value: float = DEFAULT_DISCOUNT) -> NGramModel:
    sentences = list(sentences)
    if not sentences:
        raise ValidationError("cannot train a language model on no text")
    return estimate_kn(count_ngrams(sentences, order), order, discount, value)


def score_sequence(model: NGramModel, tokens: Sequence[str]) -> float:
    """log10 P of a sentence, including the transition into ``</s>``."""
    return model.score_tokens(tokens, (BOS,), eos=True)[0]


def perplexity(model: NGramModel, sentences: Iterable[Sequence[str]]) -> float:
    total = 0.0
    n = 0
    for sent in sentences:
        total += score_sequence(model, sent)
        n += len(sent) + 1
    if n == 0:
        raise ValidationError("perplexity of an empty corpus")
    return 10.0 ** (-total / n)
