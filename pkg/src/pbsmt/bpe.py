"""Byte pair encoding: greedy merge learning and deterministic application."""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import read_lines, write_lines
from .errors import ParseError, ValidationError

EOW = "</w>"
CONTINUATION = "@@"


def _initial_symbols(word: str) -> tuple[str, ...]:
    chars = list(word)
    chars[-1] = chars[-1] + EOW
    return tuple(chars)


@dataclass
class BpeModel:
    merges: list[tuple[str, str]] = field(default_factory=list)
    vocab: set[str] = field(default_factory=set)

    def __post_init__(self):
        self.ranks = {pair: r for r, pair in enumerate(self.merges)}
        self._cache: dict[str, tuple[str, ...]] = {}

    @property
    def merge_count(self) -> int:
        return len(self.merges)

    def segment(self, word: str) -> tuple[str, ...]:
        """Split ``word`` into subwords; the last one carries the end marker."""
        if not word:
            return ()
        hit = self._cache.get(word)
        if hit is not None:
            return hit
        symbols = list(_initial_symbols(word))
        while len(symbols) > 1:
            best = None
            best_rank = len(self.merges)
            for k in range(len(symbols) - 1):
                r = self.ranks.get((symbols[k], symbols[k + 1]))
                if r is not None and r < best_rank:
                    best, best_rank = k, r
            if best is None:
                break
            left, right = symbols[best], symbols[best + 1]
            merged: list[str] = []
            k = 0
            while k < len(symbols):
                if k < len(symbols) - 1 and symbols[k] == left and symbols[k + 1] == right:
                    merged.append(left + right)
                    k += 2
                else:
                    merged.append(symbols[k])
                    k += 1
            symbols = merged
        out = tuple(symbols)
        self._cache[word] = out
        return out

    def save(self, path) -> None:
        write_lines(path, [str(len(self.merges))] + [f"{a} {b}" for a, b in self.merges])

    @classmethod
    def load(cls, path) -> "BpeModel":
        lines = read_lines(path)
        if not lines:
            raise ParseError("empty BPE model file", path=path)
        try:
            count = int(lines[0].strip())
        except ValueError:
            raise ParseError("header must be the merge count", 1, path) from None
        merges = []
        vocab: set[str] = set()
        for lineno, line in enumerate(lines[1:], 2):
            parts = line.split(" ")
            if len(parts) != 2 or not all(parts):
                raise ParseError("expected 'left right'", lineno, path)
            merges.append((parts[0], parts[1]))
            vocab.add(parts[0] + parts[1])
        if len(merges) != count:
            raise ParseError(f"header announces {count} merges, found {len(merges)}", path=path)
        return cls(merges, vocab)


def bpe_train(sentences: Iterable[Sequence[str]], merges: int) -> BpeModel:
    """Learn up to ``merges`` merge operations from tokenized sentences.

    The most frequent adjacent symbol pair is merged each round; equal
    frequencies go to the lexicographically smallest pair. Learning stops
    early once no pair occurs at least twice.
    """
    if merges < 0:
        raise ValidationError("merge count must be >= 0")
    freq = Counter(tok for sent in sentences for tok in sent)
    if not freq:
        raise ValidationError("cannot train BPE on an empty corpus")

    words = [list(_initial_symbols(w)) for w in freq]
    counts = [freq[w] for w in freq]
    vocab = {s for w in words for s in w}

    stats: Counter = Counter()
    where: dict[tuple[str, str], set[int]] = defaultdict(set)
    for idx, (sym, c) in enumerate(zip(words, counts)):
        for pair in zip(sym, sym[1:]):
            stats[pair] += c
            where[pair].add(idx)

    learned: list[tuple[str, str]] = []
    while len(learned) < merges and stats:
        best = min(stats.items(), key=lambda kv: (-kv[1], kv[0]))
        pair, n = best
        if n < 2:
            break
        learned.append(pair)
        a, b = pair
        joined = a + b
        vocab.add(joined)
        for idx in sorted(where.pop(pair, ())):
            sym = words[idx]
            c = counts[idx]
            for p in zip(sym, sym[1:]):
                stats[p] -= c
                if stats[p] <= 0:
                    del stats[p]
                if p != pair:
                    where[p].discard(idx)
            new: list[str] = []
            k = 0
            while k < len(sym):
                if k < len(sym) - 1 and sym[k] == a and sym[k + 1] == b:
                    new.append(joined)
                    k += 2
                else:
                    new.append(sym[k])
                    k += 1
            words[idx] = new
            for p in zip(new, new[1:]):
                stats[p] += c
                where[p].add(idx)
    return BpeModel(learned, vocab)


def bpe_apply(model: BpeModel, word: str) -> list[str]:
    """Subwords of ``word`` with the end-of-word marker removed."""
    seg = list(model.segment(word))
    if seg:
        seg[-1] = seg[-1][: -len(EOW)]
        if not seg[-1]:
            seg.pop()
    return seg


def encode_sentence(model: BpeModel, tokens: Sequence[str]) -> list[str]:
    """Subword tokens with ``@@`` marking non-final pieces."""
    out = []
    for tok in tokens:
        pieces = bpe_apply(model, tok)
        out.extend(p + CONTINUATION for p in pieces[:-1])
        out.append(pieces[-1])
    return out


def decode_sentence(tokens: Sequence[str]) -> list[str]:
    return " ".join(tokens).replace(CONTINUATION + " ", "").split()
