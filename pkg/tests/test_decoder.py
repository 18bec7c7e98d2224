import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbsmt.decoder import (
    FEATURES, DecoderParams, FeatureWeights, decode, decode_corpus, nbest, read_nbest, search,
    write_nbest,
)
from pbsmt.errors import ValidationError
from pbsmt.lm import NGramModel, score_sequence, train_lm
from pbsmt.phrases import PhraseTable

from oracles import best_derivations

SRC = list("abcde")
TGT = ["x", "y", "z", "u", "v", "w"]


def synthetic_table(seed, coverage=0.8):
    """Random single- and two-word entries; some words have no entry (OOV copies)."""
    rng = np.random.default_rng(seed)
    table = PhraseTable()
    for s in SRC:
        if rng.random() < coverage:
            for t in rng.choice(TGT, size=int(rng.integers(1, 3)), replace=False):
                table.add((s,), (t,), rng.uniform(0.05, 1.0, size=4))
    for s1, s2 in itertools.product(SRC, SRC):
        if rng.random() < 0.25:
            k = int(rng.integers(1, 3))
            table.add((s1, s2), tuple(rng.choice(TGT, size=k)), rng.uniform(0.05, 1.0, size=4))
    return table


def synthetic_lm(seed):
    rng = np.random.default_rng(seed)
    text = [list(rng.choice(TGT + list(SRC), size=int(rng.integers(1, 6)))) for _ in range(40)]
    return train_lm(text, 2)


def as_dict(table):
    return {s: dict(v) for s, v in table.entries.items()}


def test_empty_sentence():
    lm = NGramModel.uniform(["x"])
    assert decode((), PhraseTable(), lm) == ((), 0.0)


def test_monotone_toy():
    table = PhraseTable()
    table.add(("a",), ("x",), (1.0, 1.0, 1.0, 1.0))
    table.add(("b",), ("y",), (1.0, 1.0, 1.0, 1.0))
    lm = NGramModel.uniform(["x", "y"])
    tokens, _ = decode(("a", "b"), table, lm, params=DecoderParams(distortion_limit=0))
    assert tokens == ("x", "y")


def test_oov_copied():
    table = PhraseTable()
    table.add(("a",), ("x",), (1.0, 1.0, 1.0, 1.0))
    lm = NGramModel.uniform(["x"])
    t = search(("a", "q"), table, lm)
    assert t.tokens == ("x", "q")
    assert t.features[FEATURES.index("oov")] == -10.0


@pytest.mark.parametrize("limit", [None, 0, 2])
def test_matches_brute_force(limit):
    rng = np.random.default_rng(100 + (limit or 9))
    for trial in range(50):
        table = synthetic_table(trial)
        lm = synthetic_lm(trial)
        weights = FeatureWeights(rng.uniform(0.1, 1.5, size=len(FEATURES)))
        n = int(rng.integers(1, 6))
        sent = tuple(rng.choice(SRC, size=n))
        params = DecoderParams.exhaustive(distortion_limit=limit)
        got = search(sent, table, lm, weights, params)
        oracle = best_derivations(sent, as_dict(table), lambda t: score_sequence(lm, t),
                                  weights.array, params.max_phrase_len, limit)
        assert got.score == pytest.approx(oracle[0][0], abs=1e-9)
        winners = {tok for s, tok, _, _ in oracle if s >= oracle[0][0] - 1e-9}
        assert got.tokens in winners


def test_future_cost_does_not_change_exhaustive_result():
    for trial in range(20):
        table, lm = synthetic_table(trial), synthetic_lm(trial)
        sent = tuple(np.random.default_rng(trial).choice(SRC, size=5))
        a = search(sent, table, lm, params=DecoderParams.exhaustive())
        p = DecoderParams.exhaustive()
        p.future_cost = False
        b = search(sent, table, lm, params=p)
        assert a.score == pytest.approx(b.score, abs=1e-9)


def test_bigger_stacks_never_worse():
    rng = np.random.default_rng(7)
    for trial in range(50):
        table, lm = synthetic_table(trial), synthetic_lm(trial)
        sent = tuple(rng.choice(SRC, size=int(rng.integers(1, 6))))
        small = search(sent, table, lm, params=DecoderParams(stack_size=10))
        big = search(sent, table, lm, params=DecoderParams(stack_size=100))
        assert big.score >= small.score - 1e-9


def test_score_recomputable():
    rng = np.random.default_rng(8)
    for trial in range(30):
        table, lm = synthetic_table(trial), synthetic_lm(trial)
        w = FeatureWeights(rng.uniform(0.1, 1.0, size=len(FEATURES)))
        sent = tuple(rng.choice(SRC, size=int(rng.integers(1, 6))))
        for t in nbest(sent, table, lm, w, n=10):
            # rebuild features from the derivation alone
            f = np.zeros(len(FEATURES))
            last = 0
            for start, end, tgt in t.derivation:
                src = sent[start:end]
                if tgt in table.options(src):
                    f[:4] += np.log10(table.get(src, tgt))
                else:
                    f[FEATURES.index("oov")] += -10.0
                f[FEATURES.index("word_penalty")] -= len(tgt)
                f[FEATURES.index("phrase_penalty")] -= 1
                f[FEATURES.index("distortion")] -= abs(start - last)
                last = end
            f[FEATURES.index("lm")] = score_sequence(lm, t.tokens)
            assert np.allclose(f, t.features, atol=1e-9)
            assert float(np.dot(w.array, f)) == pytest.approx(t.score, abs=1e-9)


@pytest.mark.parametrize("c", [0.01, 0.5, 3.0, 250.0])
def test_scale_invariance(c):
    rng = np.random.default_rng(9)
    for trial in range(15):
        table, lm = synthetic_table(trial), synthetic_lm(trial)
        w = FeatureWeights(rng.uniform(0.1, 1.0, size=len(FEATURES)))
        sent = tuple(rng.choice(SRC, size=5))
        a = search(sent, table, lm, w)
        b = search(sent, table, lm, w.scaled(c))
        assert a.tokens == b.tokens
        assert b.score == pytest.approx(c * a.score, rel=1e-9, abs=1e-9)


def test_nbest_one_equals_decode():
    for trial in range(10):
        table, lm = synthetic_table(trial), synthetic_lm(trial)
        sent = tuple(np.random.default_rng(trial).choice(SRC, size=4))
        (only,) = nbest(sent, table, lm, n=1)
        tokens, score = decode(sent, table, lm)
        assert only.tokens == tokens
        assert only.score == pytest.approx(score, abs=1e-9)


def test_nbest_two_derivations():
    table = PhraseTable()
    table.add(("a",), ("x",), (0.9, 1.0, 1.0, 1.0))
    table.add(("a",), ("y",), (0.3, 1.0, 1.0, 1.0))
    lm = NGramModel.uniform(["x", "y"])
    out = nbest(("a",), table, lm, n=5)
    assert [t.tokens for t in out] == [("x",), ("y",)]
    assert out[0].score > out[1].score


def test_nbest_sorted_distinct_and_exact_against_oracle():
    rng = np.random.default_rng(10)
    for trial in range(25):
        table, lm = synthetic_table(trial), synthetic_lm(trial)
        sent = tuple(rng.choice(SRC, size=int(rng.integers(2, 5))))
        params = DecoderParams.exhaustive()
        out = nbest(sent, table, lm, params=params, n=8)
        scores = [t.score for t in out]
        assert scores == sorted(scores, reverse=True)
        assert len({t.tokens for t in out}) == len(out)
        # best score per distinct string, from the oracle
        oracle = best_derivations(sent, as_dict(table), lambda t: score_sequence(lm, t),
                                  FeatureWeights().array, params.max_phrase_len)
        best = {}
        for s, tok, _, _ in oracle:
            best.setdefault(tok, s)
        expect = sorted(best.values(), reverse=True)[: len(out)]
        assert np.allclose(scores, expect, atol=1e-9)


def test_nbest_io_roundtrip(tmp_path):
    table, lm = synthetic_table(1), synthetic_lm(1)
    lists = [nbest(("a", "b"), table, lm, n=3), nbest(("c",), table, lm, n=2)]
    write_nbest(tmp_path / "nb", lists)
    back = read_nbest(tmp_path / "nb")
    assert [t.tokens for t in back[0]] == [t.tokens for t in lists[0]]
    assert np.allclose(back[1][0].features, lists[1][0].features, atol=1e-6)


def test_decode_corpus_threads_same_result():
    table, lm = synthetic_table(2), synthetic_lm(2)
    rng = np.random.default_rng(2)
    sents = [tuple(rng.choice(SRC, size=int(rng.integers(1, 6)))) for _ in range(12)]
    one = [t.tokens for t in decode_corpus(sents, table, lm, threads=1)]
    four = [t.tokens for t in decode_corpus(sents, table, lm, threads=4)]
    assert one == four


def test_weights_io(tmp_path):
    w = FeatureWeights(lm=0.5, distortion=0.25)
    w.save(tmp_path / "w")
    assert np.array_equal(FeatureWeights.load(tmp_path / "w").array, w.array)
    with pytest.raises(ValidationError):
        FeatureWeights(bogus=1.0)
    with pytest.raises(ValidationError):
        DecoderParams(stack_size=0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(SRC), min_size=1, max_size=5), st.integers(0, 20))
def test_property_exhaustive_matches_oracle(sent, seed):
    table, lm = synthetic_table(seed), synthetic_lm(seed)
    got = search(tuple(sent), table, lm, params=DecoderParams.exhaustive(distortion_limit=3))
    oracle = best_derivations(tuple(sent), as_dict(table), lambda t: score_sequence(lm, t),
                              FeatureWeights().array, 7, 3)
    assert got.score == pytest.approx(oracle[0][0], abs=1e-9)
