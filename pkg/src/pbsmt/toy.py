"""Synthetic dictionary-substitution language pairs for desk-scale experiments.

Every source word translates to exactly one target word and word order is
kept, so the mapping is fully learnable. Some source words differ only by a
combining vowel mark; the lossy transliteration table deletes those marks,
merging words that translate differently.

Run ``python -m pbsmt.toy --out DIR`` to write a ready-to-use toy setup.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, SentencePair, TransliterationTable, write_parallel

DAMMA = "ُ"
KASRA = "ِ"
_CONSONANTS = "bcdfghjklmnpqrstvwxz"
_SYLLABLES = [c + v for c in "kgtdpbmnrls" for v in "aeiou"]


@dataclass(frozen=True)
class ToyLanguage:
    source_words: tuple[str, ...]
    target_words: tuple[str, ...]

    @property
    def lexicon(self) -> dict[str, str]:
        return dict(zip(self.source_words, self.target_words))

    def lossy_table(self) -> TransliterationTable:
        """Drops both vowel marks, collapsing e.g. gُl and gِl to gl."""
        return TransliterationTable({DAMMA: "", KASRA: ""})

    def translate(self, tokens) -> tuple[str, ...]:
        lex = self.lexicon
        return tuple(lex[w] for w in tokens)


def make_toy_language(vocab_size: int = 200, seed: int = 0, marked_fraction: float = 0.3) -> ToyLanguage:
    """Build ``vocab_size`` source/target word pairs.

    About ``marked_fraction`` of the source vocabulary comes in pairs whose
    members differ only in the vowel mark after the first letter.
    """
    rng = np.random.default_rng(seed)
    n_pairs = int(vocab_size * marked_fraction) // 2
    source: list[str] = []
    seen: set[str] = set()
    skeletons: set[str] = set()

    def skeleton():
        while True:
            k = int(rng.integers(2, 5))
            s = "".join(rng.choice(list(_CONSONANTS), size=k))
            if s not in skeletons:
                skeletons.add(s)
                return s

    for _ in range(n_pairs):
        s = skeleton()
        for mark in (DAMMA, KASRA):
            w = s[0] + mark + s[1:]
            source.append(w)
            seen.add(w)
    while len(source) < vocab_size:
        s = skeleton()
        if s not in seen:
            source.append(s)
            seen.add(s)

    target: list[str] = []
    used: set[str] = set()
    while len(target) < vocab_size:
        k = int(rng.integers(2, 4))
        w = "".join(rng.choice(_SYLLABLES, size=k))
        if w not in used:
            used.add(w)
            target.append(w)
    order = rng.permutation(vocab_size)
    return ToyLanguage(tuple(source[i] for i in order), tuple(target))


def generate_corpus(lang: ToyLanguage, n_sentences: int, seed: int = 0, min_len: int = 4, max_len: int = 12) -> Corpus:
    rng = np.random.default_rng(seed)
    words = np.array(lang.source_words, dtype=object)
    pairs = []
    for _ in range(n_sentences):
        k = int(rng.integers(min_len, max_len + 1))
        src = tuple(rng.choice(words, size=k))
        pairs.append(SentencePair(src, lang.translate(src)))
    return Corpus(tuple(pairs), "toy-src", "toy-tgt")


TOY_CONFIG = """\
# Toy dictionary-substitution experiment.
[data]
src = {src}
tgt = {tgt}
translit_table = {table}

[model]
lm_order = 5
em_iterations = 10
max_phrase_len = 7

[decoder]
distortion_limit = 0
stack_size = 100

[experiment]
variant = baseline
folds = 4
test_size = {test_size}
seed = 0
"""


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m pbsmt.toy", description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--vocab-size", type=int, default=200)
    ap.add_argument("--sentences", type=int, default=5500)
    ap.add_argument("--test-size", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lang = make_toy_language(args.vocab_size, args.seed)
    corpus = generate_corpus(lang, args.sentences, args.seed + 1)
    write_parallel(corpus, out / "toy.src", out / "toy.tgt")
    lang.lossy_table().dump(out / "lossy.tsv")
    (out / "toy.cfg").write_text(
        TOY_CONFIG.format(
            src=(out / "toy.src").resolve(), tgt=(out / "toy.tgt").resolve(),
            table=(out / "lossy.tsv").resolve(), test_size=args.test_size,
        ),
        encoding="utf-8",
    )
    print(out / "toy.cfg")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
