"""Parallel corpus ingestion, cleaning, filtering, transforms and analysis."""
from __future__ import annotations

import configparser
import csv
import io
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CorpusDecodeError, ParseError, SizeError, ValidationError

Tokens = tuple[str, ...]


def _as_tokens(seq) -> Tokens:
    if isinstance(seq, str):
        return tuple(seq.split())
    return tuple(seq)


@dataclass(frozen=True, slots=True)
class SentencePair:
    source: Tokens
    target: Tokens
    similarity: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "source", _as_tokens(self.source))
        object.__setattr__(self, "target", _as_tokens(self.target))
        if not self.source or not self.target:
            raise ValidationError("sentence pair has an empty side")
        for tok in self.source + self.target:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValidationError(f"invalid token {tok!r}")
        if self.similarity is not None and not 0.0 <= self.similarity <= 1.0:
            raise ValidationError(f"similarity {self.similarity} outside [0, 1]")

    @property
    def key(self) -> tuple[str, str]:
        return " ".join(self.source), " ".join(self.target)


@dataclass(frozen=True)
class Corpus:
    pairs: tuple[SentencePair, ...] = ()
    source_lang: str = "src"
    target_lang: str = "tgt"

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self) -> Iterator[SentencePair]:
        return iter(self.pairs)

    def __getitem__(self, idx):
        return self.pairs[idx]

    def replace(self, pairs) -> "Corpus":
        return Corpus(tuple(pairs), self.source_lang, self.target_lang)

    def subset(self, indices) -> "Corpus":
        return self.replace(self.pairs[int(i)] for i in indices)

    def sources(self) -> list[Tokens]:
        return [p.source for p in self.pairs]

    def targets(self) -> list[Tokens]:
        return [p.target for p in self.pairs]

    def swapped(self) -> "Corpus":
        return Corpus(
            tuple(SentencePair(p.target, p.source, p.similarity) for p in self.pairs),
            self.target_lang,
            self.source_lang,
        )


# --------------------------------------------------------------------------
# File IO
# --------------------------------------------------------------------------


def read_lines(path) -> list[str]:
    """Read a UTF-8 text file, one entry per line, without newline characters.

    Raises CorpusDecodeError naming the 1-based line of the first bad byte.
    """
    path = Path(path)
    raw = path.read_bytes()
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    out = []
    for lineno, line in enumerate(lines, 1):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusDecodeError(path, lineno, f"({exc.reason})") from None
        out.append(text.rstrip("\r"))
    return out


def write_lines(path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def read_raw_parallel(src_path, tgt_path) -> list[tuple[str, str]]:
    src = read_lines(src_path)
    tgt = read_lines(tgt_path)
    if len(src) != len(tgt):
        raise SizeError(
            f"parallel files differ in length: {src_path} has {len(src)} lines, "
            f"{tgt_path} has {len(tgt)}"
        )
    return list(zip(src, tgt))


def read_parallel(src_path, tgt_path, source_lang="src", target_lang="tgt") -> Corpus:
    """Load pre-tokenized parallel text (whitespace-separated tokens).

    Lines where either side is blank are skipped.
    """
    pairs = []
    for s, t in read_raw_parallel(src_path, tgt_path):
        if s.split() and t.split():
            pairs.append(SentencePair(s, t))
    return Corpus(tuple(pairs), source_lang, target_lang)


def write_parallel(corpus: Corpus, src_path, tgt_path) -> None:
    write_lines(src_path, (" ".join(p.source) for p in corpus))
    write_lines(tgt_path, (" ".join(p.target) for p in corpus))


def read_scores(path) -> list[float]:
    scores = []
    for lineno, line in enumerate(read_lines(path), 1):
        try:
            scores.append(float(line.strip()))
        except ValueError:
            raise ParseError(f"not a decimal number: {line!r}", lineno, path) from None
    return scores


# --------------------------------------------------------------------------
# Cleaning and tokenization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CleaningRules:
    punctuation_categories: frozenset[str] = frozenset(
        {"Pc", "Pd", "Pe", "Pf", "Pi", "Po", "Ps"}
    )
    emoji_ranges: tuple[tuple[int, int], ...] = ()
    extra_characters: frozenset[str] = frozenset()
    keep_characters: frozenset[str] = frozenset()
    strip_punctuation: bool = True
    strip_emoji: bool = True

    def is_punctuation(self, ch: str) -> bool:
        if ch in self.keep_characters:
            return False
        return ch in self.extra_characters or (
            unicodedata.category(ch) in self.punctuation_categories
        )

    def is_emoji(self, ch: str) -> bool:
        if ch in self.keep_characters:
            return False
        cp = ord(ch)
        return any(lo <= cp <= hi for lo, hi in self.emoji_ranges)

    def removes(self, ch: str) -> bool:
        return (self.strip_punctuation and self.is_punctuation(ch)) or (
            self.strip_emoji and self.is_emoji(ch)
        )


def _parse_ranges(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for item in text.split():
        lo, _, hi = item.partition("-")
        out.append((int(lo, 16), int(hi or lo, 16)))
    return tuple(out)


def load_cleaning_rules(path=None) -> CleaningRules:
    """Read cleaning rules; ``None`` loads the packaged defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    if path is None:
        text = resources.files("pbsmt").joinpath("data/cleaning.cfg").read_text("utf-8")
        parser.read_string(text)
    else:
        parser.read_string(Path(path).read_text("utf-8"))
    sec = parser["cleaning"]
    return CleaningRules(
        punctuation_categories=frozenset(sec.get("punctuation_categories", "").split()),
        emoji_ranges=_parse_ranges(sec.get("emoji_ranges", "")),
        extra_characters=frozenset("".join(sec.get("extra_characters", "").split())),
        keep_characters=frozenset("".join(sec.get("keep_characters", "").split())),
        strip_punctuation=sec.getboolean("strip_punctuation", True),
        strip_emoji=sec.getboolean("strip_emoji", True),
    )


_DEFAULT_RULES: CleaningRules | None = None


def default_rules() -> CleaningRules:
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = load_cleaning_rules()
    return _DEFAULT_RULES


def clean_text(text: str, rules: CleaningRules | None = None) -> Tokens:
    rules = rules or default_rules()
    text = unicodedata.normalize("NFC", text)
    kept = "".join(" " if rules.removes(ch) else ch for ch in text)
    return tuple(kept.split())


def clean_pair(pair, rules: CleaningRules | None = None) -> SentencePair | None:
    """Strip punctuation/emoji and normalize whitespace on both sides.

    ``pair`` is either a SentencePair or a ``(source_text, target_text)``
    tuple of raw strings. Returns None when a side ends up empty.
    """
    similarity = None
    if isinstance(pair, SentencePair):
        src, tgt, similarity = " ".join(pair.source), " ".join(pair.target), pair.similarity
    else:
        src, tgt = pair[0], pair[1]
        if len(pair) > 2:
            similarity = pair[2]
    s = clean_text(src, rules)
    t = clean_text(tgt, rules)
    if not s or not t:
        return None
    return SentencePair(s, t, similarity)


def tokenize(text: str) -> Tokens:
    """Whitespace tokenizer that also splits leading/trailing punctuation.

    Punctuation inside a word (``lithu'aniya``) stays attached; each
    peeled-off punctuation character becomes its own token.
    """
    out: list[str] = []
    for word in unicodedata.normalize("NFC", text).split():
        head: list[str] = []
        tail: list[str] = []
        while word and unicodedata.category(word[0]).startswith("P"):
            head.append(word[0])
            word = word[1:]
        while word and unicodedata.category(word[-1]).startswith("P"):
            tail.append(word[-1])
            word = word[:-1]
        out.extend(head)
        if word:
            out.append(word)
        out.extend(reversed(tail))
    return tuple(out)


def preprocess(raw_pairs: Iterable, rules: CleaningRules | None = None, source_lang="src", target_lang="tgt") -> Corpus:
    """Clean every raw pair, drop empties, then remove duplicate pairs."""
    cleaned = (clean_pair(p, rules) for p in raw_pairs)
    return dedup(Corpus(tuple(p for p in cleaned if p is not None), source_lang, target_lang))


# --------------------------------------------------------------------------
# Dedup and filtering
# --------------------------------------------------------------------------


def dedup(corpus: Corpus) -> Corpus:
    seen: set[tuple[Tokens, Tokens]] = set()
    kept = []
    for p in corpus:
        k = (p.source, p.target)
        if k in seen:
            continue
        seen.add(k)
        kept.append(p)
    return corpus.replace(kept)


def similarity_filter(corpus: Corpus, scores: Sequence[float] | None = None, threshold: float = 0.9) -> Corpus:
    """Keep pairs whose similarity score is at least ``threshold``.

    Scores default to the ones stored on the pairs.
    """
    if scores is None:
        scores = [p.similarity for p in corpus]
        if any(s is None for s in scores):
            raise ValidationError("pairs carry no similarity scores and none were given")
    if len(scores) != len(corpus):
        raise SizeError(f"{len(scores)} scores for {len(corpus)} pairs")
    for k, s in enumerate(scores):
        if not 0.0 <= s <= 1.0:
            raise ValidationError(f"score #{k + 1} = {s} outside [0, 1]")
    return corpus.replace(p for p, s in zip(corpus, scores) if s >= threshold)


# --------------------------------------------------------------------------
# Length-difference analysis
# --------------------------------------------------------------------------

LENGTH_CATEGORIES = ("0", "1-3", "4-5", ">=6")


def length_category(diff: int) -> str:
    diff = abs(diff)
    if diff == 0:
        return "0"
    if diff <= 3:
        return "1-3"
    if diff <= 5:
        return "4-5"
    return ">=6"


@dataclass(frozen=True)
class LengthDiffHistogram:
    counts: dict[str, int]
    total: int
    under_three: int = 0  # pairs with |diff| < 3

    def __post_init__(self):
        if set(self.counts) != set(LENGTH_CATEGORIES):
            raise ValidationError("histogram needs exactly the four length categories")
        if any(c < 0 for c in self.counts.values()) or sum(self.counts.values()) != self.total:
            raise ValidationError("histogram counts do not partition the total")

    def percent(self, category: str) -> float:
        return 100.0 * self.counts[category] / self.total if self.total else 0.0

    @property
    def under_three_percent(self) -> float:
        return 100.0 * self.under_three / self.total if self.total else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "count", "percent"])
        for cat in LENGTH_CATEGORIES:
            w.writerow([cat, self.counts[cat], f"{self.percent(cat):.2f}"])
        return buf.getvalue()


def length_diff_histogram(corpus: Iterable[SentencePair]) -> LengthDiffHistogram:
    counts = dict.fromkeys(LENGTH_CATEGORIES, 0)
    total = under = 0
    for p in corpus:
        d = abs(len(p.source) - len(p.target))
        counts[length_category(d)] += 1
        under += d < 3
        total += 1
    return LengthDiffHistogram(counts, total, under)


# --------------------------------------------------------------------------
# Experiment transforms
# --------------------------------------------------------------------------


def invert_source(pair: SentencePair) -> SentencePair:
    return SentencePair(pair.source[::-1], pair.target, pair.similarity)


@dataclass(frozen=True)
class TransliterationTable:
    """Grapheme (or grapheme cluster) to Latin-string map, longest match first."""

    mapping: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.mapping.items():
            if not k:
                raise ValidationError("empty grapheme in transliteration table")
            if any(ch.isspace() for ch in v):
                raise ValidationError(f"replacement for {k!r} contains whitespace")
        object.__setattr__(self, "_max_key", max(map(len, self.mapping), default=0))

    @classmethod
    def load(cls, path) -> "TransliterationTable":
        mapping = {}
        for lineno, line in enumerate(read_lines(path), 1):
            if not line.strip() or line.startswith("#"):
                continue
            key, sep, value = line.partition("\t")
            if not sep:
                raise ParseError("expected 'grapheme<TAB>replacement'", lineno, path)
            mapping[key] = value
        return cls(mapping)

    def dump(self, path) -> None:
        write_lines(path, (f"{k}\t{v}" for k, v in self.mapping.items()))

    def apply(self, text: str) -> str:
        out = []
        i, n = 0, len(text)
        while i < n:
            for width in range(min(self._max_key, n - i), 0, -1):
                rep = self.mapping.get(text[i : i + width])
                if rep is not None:
                    out.append(rep)
                    i += width
                    break
            else:
                out.append(text[i])
                i += 1
        return "".join(out)


def _romanize_side(tokens: Tokens, table: TransliterationTable) -> Tokens:
    out = tuple(t for t in (table.apply(tok) for tok in tokens) if t)
    if not out:
        raise ValidationError(f"romanization emptied sentence {' '.join(tokens)!r}")
    return out


def romanize(pair: SentencePair, table: TransliterationTable) -> SentencePair:
    """Transliterate both sides; tokens that map to nothing are dropped."""
    return SentencePair(
        _romanize_side(pair.source, table), _romanize_side(pair.target, table), pair.similarity
    )


# --------------------------------------------------------------------------
# Splitting
# --------------------------------------------------------------------------


def split_corpus(corpus: Corpus, sizes, seed: int = 0) -> tuple[Corpus, Corpus, Corpus]:
    """Seeded disjoint (train, tune, test) split; ``sizes`` is a 3-tuple or dict."""
    if isinstance(sizes, dict):
        sizes = (sizes["train"], sizes["tune"], sizes["test"])
    n_train, n_tune, n_test = (int(s) for s in sizes)
    if min(n_train, n_tune, n_test) < 0:
        raise SizeError("split sizes must be non-negative")
    if n_train + n_tune + n_test > len(corpus):
        raise SizeError(
            f"split sizes {n_train}+{n_tune}+{n_test} exceed corpus size {len(corpus)}"
        )
    order = np.random.default_rng(seed).permutation(len(corpus))
    a, b = n_train, n_train + n_tune
    return (
        corpus.subset(order[:a]),
        corpus.subset(order[a:b]),
        corpus.subset(order[b : b + n_test]),
    )
