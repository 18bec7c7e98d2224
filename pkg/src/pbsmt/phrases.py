"""Phrase-pair extraction and four-feature phrase-table scoring."""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .alignment import NULL, PROB_FLOOR, AlignmentMatrix, TranslationTable
from .corpus import SentencePair, read_lines, write_lines
from .errors import ParseError, ValidationError
from .kernels import consistent_spans

DEFAULT_MAX_LEN = 7

Phrase = tuple[str, ...]
Links = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class PhrasePair:
    source: Phrase
    target: Phrase
    alignment: Links = ()  # links relative to the phrase starts
    count: int = 1


def extract_spans(alignment: AlignmentMatrix, max_len: int = DEFAULT_MAX_LEN) -> set[tuple[int, int, int, int]]:
    """Inclusive ``(i1, i2, j1, j2)`` boxes consistent with ``alignment``."""
    if max_len < 1 or not alignment.links:
        return set()
    spans = consistent_spans(alignment.to_dense(), max_len)
    return {tuple(row) for row in spans.tolist()}


def extract_phrases(pair: SentencePair, alignment: AlignmentMatrix, max_len: int = DEFAULT_MAX_LEN) -> list[PhrasePair]:
    """All alignment-consistent phrase pairs of one sentence pair.

    One entry per consistent box, in (source start, source end, target
    start, target end) order; a box never repeats.
    """
    if (alignment.m, alignment.n) != (len(pair.source), len(pair.target)):
        raise ValidationError("alignment does not match sentence lengths")
    out = []
    links = sorted(alignment.links)
    for i1, i2, j1, j2 in sorted(extract_spans(alignment, max_len)):
        inner = tuple((i - i1, j - j1) for i, j in links if i1 <= i <= i2 and j1 <= j <= j2)
        out.append(PhrasePair(pair.source[i1 : i2 + 1], pair.target[j1 : j2 + 1], inner))
    return out


# --------------------------------------------------------------------------
# Scoring
# --------------------------------------------------------------------------


def lexical_weight(src: Phrase, tgt: Phrase, links: Links, table: TranslationTable) -> float:
    """Π over target words of the mean t(e|f) across linked source words.

    Unlinked target words use t(e|NULL). ``table`` is t(target | source).
    """
    linked: dict[int, list[int]] = defaultdict(list)
    for i, j in links:
        linked[j].append(i)
    w = 1.0
    for j, e in enumerate(tgt):
        srcs = linked.get(j)
        if srcs:
            p = sum(max(table.get(e, src[i]), PROB_FLOOR) for i in srcs) / len(srcs)
        else:
            p = max(table.get(e, NULL), PROB_FLOOR)
        w *= p
    return w


FEATURE_NAMES = ("p_tgt_src", "lex_tgt_src", "p_src_tgt", "lex_src_tgt")


class PhraseTable:
    """Phrase pairs keyed by source phrase.

    Features per entry, in file order: φ(tgt|src), lex(tgt|src), φ(src|tgt),
    lex(src|tgt), all probabilities in (0, 1].
    """

    def __init__(self, entries: dict[Phrase, dict[Phrase, tuple[float, float, float, float]]] | None = None):
        self.entries: dict[Phrase, dict[Phrase, tuple[float, float, float, float]]] = entries or {}
        self.max_source_len = max((len(s) for s in self.entries), default=0)

    def __len__(self):
        return sum(len(v) for v in self.entries.values())

    def __contains__(self, src):
        return tuple(src) in self.entries

    def options(self, src: Phrase):
        return self.entries.get(tuple(src), {})

    def get(self, src, tgt):
        return self.entries[tuple(src)][tuple(tgt)]

    def add(self, src: Phrase, tgt: Phrase, features) -> None:
        f = tuple(float(x) for x in features)
        if len(f) != 4 or not all(0.0 < x <= 1.0 for x in f):
            raise ValidationError(f"phrase features must be 4 probabilities in (0,1]: {f}")
        self.entries.setdefault(tuple(src), {})[tuple(tgt)] = f
        self.max_source_len = max(self.max_source_len, len(src))

    def items(self):
        for src in sorted(self.entries):
            for tgt in sorted(self.entries[src]):
                yield src, tgt, self.entries[src][tgt]

    def normalization_errors(self) -> tuple[float, float]:
        """Largest |Σ-1| of φ(tgt|src) per source and φ(src|tgt) per target."""
        by_src = defaultdict(float)
        by_tgt = defaultdict(float)
        for src, tgt, f in self.items():
            by_src[src] += f[0]
            by_tgt[tgt] += f[2]
        e1 = max((abs(v - 1.0) for v in by_src.values()), default=0.0)
        e2 = max((abs(v - 1.0) for v in by_tgt.values()), default=0.0)
        return e1, e2

    def save(self, path) -> None:
        write_lines(
            path,
            (
                f"{' '.join(s)} ||| {' '.join(t)} ||| " + " ".join(f"{x:.10g}" for x in f)
                for s, t, f in self.items()
            ),
        )

    @classmethod
    def load(cls, path) -> "PhraseTable":
        table = cls()
        for lineno, line in enumerate(read_lines(path), 1):
            if not line.strip():
                continue
            parts = [p.strip() for p in line.split("|||")]
            if len(parts) < 3 or not parts[0] or not parts[1]:
                raise ParseError("expected 'src ||| tgt ||| f1 f2 f3 f4'", lineno, path)
            try:
                feats = [float(x) for x in parts[2].split()]
                table.add(parts[0].split(), parts[1].split(), feats)
            except (ValueError, ValidationError) as exc:
                raise ParseError(str(exc), lineno, path) from None
        return table


def score_phrase_table(extractions: Iterable[PhrasePair], ttable: TranslationTable,
                       reverse_ttable: TranslationTable) -> PhraseTable:
    """Relative-frequency and lexical scores over all extracted occurrences.

    ``ttable`` is t(target|source); ``reverse_ttable`` is t(source|target),
    i.e. trained on the swapped corpus. The lexical weights use the most
    frequent internal alignment of each pair (first seen wins ties).
    """
    pair_counts: Counter = Counter()
    align_counts: dict[tuple[Phrase, Phrase], Counter] = defaultdict(Counter)
    first_seen: dict[tuple[Phrase, Phrase], dict[Links, int]] = defaultdict(dict)
    for k, pp in enumerate(extractions):
        key = (pp.source, pp.target)
        pair_counts[key] += pp.count
        align_counts[key][pp.alignment] += pp.count
        first_seen[key].setdefault(pp.alignment, k)
    if not pair_counts:
        raise ValidationError("no phrase pairs to score")
    src_totals: Counter = Counter()
    tgt_totals: Counter = Counter()
    for (s, t), c in pair_counts.items():
        src_totals[s] += c
        tgt_totals[t] += c

    table = PhraseTable()
    for (s, t), c in pair_counts.items():
        seen = first_seen[(s, t)]
        links = min(align_counts[(s, t)].items(), key=lambda kv: (-kv[1], seen[kv[0]]))[0]
        lex_ts = lexical_weight(s, t, links, ttable)
        flipped = tuple((j, i) for i, j in links)
        lex_st = lexical_weight(t, s, flipped, reverse_ttable)
        table.add(s, t, (c / src_totals[s], lex_ts, c / tgt_totals[t], lex_st))
    return table


def build_phrase_table(corpus, alignments, ttable, reverse_ttable, max_len: int = DEFAULT_MAX_LEN) -> PhraseTable:
    """Extract from every aligned pair, then score."""
    def occurrences():
        for pair, a in zip(corpus, alignments):
            yield from extract_phrases(pair, a, max_len)
    return score_phrase_table(occurrences(), ttable, reverse_ttable)


def phrase_log_features(features) -> np.ndarray:
    return np.log10(np.asarray(features, dtype=np.float64))
