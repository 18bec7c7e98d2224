"""Log-linear phrase-based stack decoding.

Stacks are indexed by the number of covered source words. Hypotheses sharing
coverage, language-model context and last source position are recombined;
the losers are kept as extra incoming arcs so n-best lists can be read off
the search graph afterwards.
"""
from __future__ import annotations

import heapq
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import read_lines, write_lines
from .errors import DecodeFailure, ParseError, ValidationError
from .lm import BOS, EOS, NGramModel
from .phrases import PhraseTable

FEATURES = (
    "p_tgt_src",
    "lex_tgt_src",
    "p_src_tgt",
    "lex_src_tgt",
    "lm",
    "word_penalty",
    "phrase_penalty",
    "distortion",
    "oov",
)
N_FEATURES = len(FEATURES)
_LM, _WP, _PP, _DIST, _OOV = 4, 5, 6, 7, 8


class FeatureWeights:
    """Log-linear weights, one per entry of FEATURES."""

    def __init__(self, values=None, **kwargs):
        w = dict.fromkeys(FEATURES, 1.0)
        w["word_penalty"] = 0.0
        if values is not None:
            if isinstance(values, dict):
                w.update(values)
            else:
                values = list(values)
                if len(values) != N_FEATURES:
                    raise ValidationError(f"expected {N_FEATURES} weights, got {len(values)}")
                w.update(zip(FEATURES, values))
        w.update(kwargs)
        unknown = set(w) - set(FEATURES)
        if unknown:
            raise ValidationError(f"unknown features: {sorted(unknown)}")
        arr = np.array([float(w[k]) for k in FEATURES])
        if not np.all(np.isfinite(arr)):
            raise ValidationError("weights must be finite")
        self.array = arr

    def __getitem__(self, name):
        return float(self.array[FEATURES.index(name)])

    def __eq__(self, other):
        return isinstance(other, FeatureWeights) and np.array_equal(self.array, other.array)

    def __repr__(self):
        inner = ", ".join(f"{k}={v:g}" for k, v in zip(FEATURES, self.array))
        return f"FeatureWeights({inner})"

    def as_dict(self):
        return dict(zip(FEATURES, self.array.tolist()))

    def scaled(self, c: float) -> "FeatureWeights":
        return FeatureWeights(self.array * c)

    def dumps(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in zip(FEATURES, self.array.tolist()))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "FeatureWeights":
        values = {}
        for lineno, line in enumerate(read_lines(path), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep or key not in FEATURES:
                raise ParseError(f"expected 'feature-name = value', got {line!r}", lineno, path)
            try:
                values[key] = float(val)
            except ValueError:
                raise ParseError(f"bad weight {val.strip()!r}", lineno, path) from None
        return cls(values)


@dataclass
class DecoderParams:
    """Search settings. ``None`` switches the respective pruning off."""

    stack_size: int | None = 100
    beam_threshold: float | None = 1e-5
    distortion_limit: int | None = 6
    max_phrase_len: int = 7
    oov_penalty: float = -10.0
    ttable_limit: int | None = 20
    future_cost: bool = True

    def __post_init__(self):
        if self.stack_size is not None and self.stack_size < 1:
            raise ValidationError("stack size must be >= 1")
        if self.distortion_limit is not None and self.distortion_limit < 0:
            raise ValidationError("distortion limit must be >= 0 (or None for unlimited)")
        if self.beam_threshold is not None and not 0.0 <= self.beam_threshold < 1.0:
            raise ValidationError("beam threshold must be in [0, 1)")
        if self.max_phrase_len < 1:
            raise ValidationError("max phrase length must be >= 1")

    @classmethod
    def exhaustive(cls, distortion_limit=None, max_phrase_len=7) -> "DecoderParams":
        return cls(None, None, distortion_limit, max_phrase_len, ttable_limit=None)


class Option(NamedTuple):
    start: int
    end: int  # exclusive
    target: tuple
    feats: tuple  # static part: phrase features, penalties, oov
    static: float  # weighted static part
    estimate: float  # static + optimistic LM term


@dataclass(eq=False)
class Hypothesis:
    coverage: int
    n_covered: int
    lm_state: tuple
    last_end: int
    score: float
    future: float
    back: "Hypothesis | None"
    option: Option | None
    delta: tuple  # full feature increment of the last step
    recombined: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.score + self.future

    def chain(self) -> list["Hypothesis"]:
        out = []
        h = self
        while h.back is not None:
            out.append(h)
            h = h.back
        return out[::-1]

    def output(self) -> tuple:
        return tuple(w for h in self.chain() for w in h.option.target)

    def features(self) -> np.ndarray:
        f = np.zeros(N_FEATURES)
        for h in self.chain():
            f += h.delta
        return f


class Translation(NamedTuple):
    tokens: tuple
    score: float
    features: np.ndarray
    derivation: tuple  # ((start, end, target), ...)


def translation_options(sentence: Sequence[str], ptable: PhraseTable, lm: NGramModel,
                        weights: FeatureWeights, params: DecoderParams) -> list[Option]:
    """Every applicable phrase for every source span, plus OOV copies.

    A source word without a single-word entry gets a copy option carrying the
    fixed OOV cost, so monotone coverage is always possible.
    """
    lam = weights.array
    lm_w = lam[_LM]
    n = len(sentence)
    out: list[Option] = []
    max_len = min(params.max_phrase_len, max(ptable.max_source_len, 1))
    for i in range(n):
        for j in range(i + 1, min(n, i + max_len) + 1):
            src = tuple(sentence[i:j])
            span_opts = []
            for tgt, probs in ptable.options(src).items():
                feats = (*np.log10(probs).tolist(), 0.0, -float(len(tgt)), -1.0, 0.0, 0.0)
                static = float(np.dot(lam, feats))
                est = static + (lm_w * sum(lm.upper_bound(w) for w in tgt) if lm_w > 0 else 0.0)
                span_opts.append(Option(i, j, tgt, feats, static, est))
            if not span_opts and j == i + 1:
                feats = (0.0, 0.0, 0.0, 0.0, 0.0, -1.0, -1.0, 0.0, params.oov_penalty)
                static = float(np.dot(lam, feats))
                est = static + (lm_w * lm.upper_bound(src[0]) if lm_w > 0 else 0.0)
                span_opts.append(Option(i, j, src, feats, static, est))
            span_opts.sort(key=lambda o: (-o.estimate, o.target))
            if params.ttable_limit is not None:
                span_opts = span_opts[: params.ttable_limit]
            out.extend(span_opts)
    return out


def future_cost_table(n: int, options: list[Option]) -> np.ndarray:
    """fc[i, j]: best optimistic score for covering source span [i, j)."""
    fc = np.full((n + 1, n + 1), -np.inf)
    for o in options:
        if o.estimate > fc[o.start, o.end]:
            fc[o.start, o.end] = o.estimate
    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            j = i + width
            best = fc[i, j]
            for k in range(i + 1, j):
                s = fc[i, k] + fc[k, j]
                if s > best:
                    best = s
            fc[i, j] = best
    return fc


def _future(coverage: int, n: int, fc: np.ndarray) -> float:
    total = 0.0
    i = 0
    while i < n:
        if coverage >> i & 1:
            i += 1
            continue
        j = i
        while j < n and not coverage >> j & 1:
            j += 1
        total += fc[i, j]
        i = j
    return total


class _Search:
    def __init__(self, sentence, ptable, lm, weights, params):
        self.sentence = tuple(sentence)
        self.n = len(self.sentence)
        self.lm = lm
        self.weights = weights
        self.params = params
        self.lam = weights.array
        self.options = translation_options(self.sentence, ptable, lm, weights, params)
        self.fc = future_cost_table(self.n, self.options)
        self.full = (1 << self.n) - 1
        self.masks = [((1 << o.end) - (1 << o.start)) for o in self.options]
        scale = float(np.max(np.abs(self.lam))) if self.lam.size else 1.0
        thr = params.beam_threshold
        self.margin = -math.log10(thr) * scale if thr else math.inf

    def run(self) -> list[Hypothesis]:
        n = self.n
        start = Hypothesis(0, 0, (BOS,), 0, 0.0, 0.0, None, None, (0.0,) * N_FEATURES)
        if self.params.future_cost:
            start.future = _future(0, n, self.fc)
        stacks: list[dict] = [dict() for _ in range(n + 1)]
        stacks[0][(0, start.lm_state, 0)] = start
        lam = self.lam
        lm_w, d_w = lam[_LM], lam[_DIST]
        limit = self.params.distortion_limit
        for k in range(n):
            for hyp in self._prune(stacks[k]):
                for opt, mask in zip(self.options, self.masks):
                    if hyp.coverage & mask:
                        continue
                    jump = abs(opt.start - hyp.last_end)
                    if limit is not None and jump > limit:
                        continue
                    cov = hyp.coverage | mask
                    lm_score, state = self.lm.score_tokens(opt.target, hyp.lm_state, eos=cov == self.full)
                    delta = list(opt.feats)
                    delta[_LM] = lm_score
                    delta[_DIST] = -float(jump)
                    score = hyp.score + opt.static + lm_w * lm_score - d_w * jump
                    new = Hypothesis(
                        cov, hyp.n_covered + opt.end - opt.start, state, opt.end, score,
                        _future(cov, n, self.fc) if self.params.future_cost else 0.0,
                        hyp, opt, tuple(delta),
                    )
                    self._add(stacks[new.n_covered], new)
        final = list(stacks[n].values())
        final.sort(key=lambda h: -h.score)
        return final

    @staticmethod
    def _add(stack: dict, hyp: Hypothesis) -> None:
        key = (hyp.coverage, hyp.lm_state, hyp.last_end)
        old = stack.get(key)
        if old is None:
            stack[key] = hyp
        elif hyp.score > old.score:
            hyp.recombined = old.recombined + [old]
            old.recombined = []
            stack[key] = hyp
        else:
            old.recombined.append(hyp)

    def _prune(self, stack: dict) -> list[Hypothesis]:
        hyps = list(stack.values())
        if not hyps:
            return hyps
        hyps.sort(key=lambda h: -h.total)
        if self.margin != math.inf:
            cut = hyps[0].total - self.margin
            hyps = [h for h in hyps if h.total >= cut]
        if self.params.stack_size is not None:
            hyps = hyps[: self.params.stack_size]
        return hyps


def _describe(sentence) -> str:
    text = " ".join(sentence)
    return text if len(text) <= 80 else text[:77] + "..."


def search(sentence: Sequence[str], ptable: PhraseTable, lm: NGramModel, weights: FeatureWeights | None = None,
           params: DecoderParams | None = None, sentence_id=None) -> Translation:
    """Best full-coverage translation with its score and feature vector."""
    weights = weights or FeatureWeights()
    params = params or DecoderParams()
    if len(sentence) == 0:
        return Translation((), 0.0, np.zeros(N_FEATURES), ())
    final = _Search(sentence, ptable, lm, weights, params).run()
    if not final:
        label = f"#{sentence_id}" if sentence_id is not None else repr(_describe(sentence))
        raise DecodeFailure(f"no complete hypothesis for sentence {label}")
    best = final[0]
    chain = best.chain()
    return Translation(
        best.output(), best.score, best.features(),
        tuple((h.option.start, h.option.end, h.option.target) for h in chain),
    )


def decode(sentence: Sequence[str], ptable: PhraseTable, lm: NGramModel, weights: FeatureWeights | None = None,
           params: DecoderParams | None = None) -> tuple[tuple, float]:
    """``(translation tokens, model score)`` of the best hypothesis."""
    t = search(sentence, ptable, lm, weights, params)
    return t.tokens, t.score


def nbest(sentence: Sequence[str], ptable: PhraseTable, lm: NGramModel, weights: FeatureWeights | None = None,
          params: DecoderParams | None = None, n: int = 100, sentence_id=None) -> list[Translation]:
    """Up to ``n`` distinct translations, best first.

    Paths are enumerated best-first over the search graph (surviving
    hypotheses plus their recombined alternatives); a surface string that
    shows up again with a lower score is skipped.
    """
    if n < 1:
        raise ValidationError("n-best size must be >= 1")
    weights = weights or FeatureWeights()
    params = params or DecoderParams()
    if len(sentence) == 0:
        return [Translation((), 0.0, np.zeros(N_FEATURES), ())]
    final = _Search(sentence, ptable, lm, weights, params).run()
    if not final:
        label = f"#{sentence_id}" if sentence_id is not None else repr(_describe(sentence))
        raise DecodeFailure(f"no complete hypothesis for sentence {label}")

    tie = itertools.count()
    heap = []
    for h in final:
        for arc in [h, *h.recombined]:
            heapq.heappush(heap, (-arc.score, next(tie), arc, 0.0, ()))
    seen = set()
    out: list[Translation] = []
    budget = 200 * n + 1000
    while heap and len(out) < n and budget > 0:
        budget -= 1
        neg, _, arc, suffix, tail = heapq.heappop(heap)
        path = (arc, *tail)
        pred = arc.back
        if pred.back is None:
            tokens = tuple(w for a in path for w in a.option.target)
            if tokens in seen:
                continue
            seen.add(tokens)
            feats = np.zeros(N_FEATURES)
            for a in path:
                feats += a.delta
            out.append(Translation(
                tokens, float(np.dot(weights.array, feats)), feats,
                tuple((a.option.start, a.option.end, a.option.target) for a in path),
            ))
            continue
        step = arc.score - pred.score  # weighted increment of this arc
        for prev in [pred, *pred.recombined]:
            heapq.heappush(heap, (-(prev.score + step + suffix), next(tie), prev, step + suffix, path))
    return out


def decode_corpus(sentences, ptable, lm, weights=None, params=None, threads: int = 1) -> list[Translation]:
    """Decode many sentences, preserving order; failures propagate."""
    def one(args):
        k, s = args
        return search(s, ptable, lm, weights, params, sentence_id=k)
    items = list(enumerate(sentences, 1))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, items))
    return [one(it) for it in items]


def write_nbest(path, lists: Sequence[Sequence[Translation]]) -> None:
    lines = []
    for k, entries in enumerate(lists):
        for t in entries:
            feats = " ".join(f"{name}={v:.6f}" for name, v in zip(FEATURES, t.features))
            lines.append(f"{k} ||| {' '.join(t.tokens)} ||| {feats} ||| {t.score:.6f}")
    write_lines(path, lines)


def read_nbest(path) -> dict[int, list[Translation]]:
    out: dict[int, list[Translation]] = {}
    for lineno, line in enumerate(read_lines(path), 1):
        parts = [p.strip() for p in line.split("|||")]
        if len(parts) != 4:
            raise ParseError("expected 'id ||| translation ||| features ||| score'", lineno, path)
        try:
            feats = dict(item.split("=") for item in parts[2].split())
            vec = np.array([float(feats[name]) for name in FEATURES])
            out.setdefault(int(parts[0]), []).append(
                Translation(tuple(parts[1].split()), float(parts[3]), vec, ())
            )
        except (KeyError, ValueError):
            raise ParseError("malformed n-best entry", lineno, path) from None
    return out
