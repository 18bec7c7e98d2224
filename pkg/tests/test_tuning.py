import numpy as np
import pytest

from pbsmt import tuning
from pbsmt.decoder import FEATURES, DecoderParams, FeatureWeights, Translation, decode, nbest
from pbsmt.errors import DecodeFailure, TuningError, ValidationError
from pbsmt.lm import NGramModel
from pbsmt.phrases import PhraseTable
from pbsmt.tuning import NbestPool, line_search, optimize, tune_weights

P = FEATURES.index("p_tgt_src")


def two_choice_table():
    # a -> x is preferred by p(t|s); the reference wants y
    t = PhraseTable()
    t.add(("a",), ("x",), (0.9, 0.5, 0.5, 0.5))
    t.add(("a",), ("y",), (0.1, 0.5, 0.5, 0.5))
    t.add(("b",), ("z",), (1.0, 1.0, 1.0, 1.0))
    return t


def entry(tokens, feats):
    f = np.zeros(len(FEATURES))
    for k, v in feats.items():
        f[FEATURES.index(k)] = v
    return Translation(tuple(tokens), 0.0, f, ())


def test_line_search_flips_preference():
    pool = NbestPool([("y",)])
    pool.add(0, [entry(["x"], {"p_tgt_src": np.log10(0.9)}), entry(["y"], {"p_tgt_src": np.log10(0.1)})])
    w = FeatureWeights().array
    assert pool.bleu(w) < 100
    val, b = line_search(pool, w, P)
    assert val < 0
    assert b == pytest.approx(100.0)
    w[P] = val
    assert pool.bleu(w) == pytest.approx(100.0)


def test_line_search_hand_breakpoint():
    # candidate lines: x: 2 + 1*l, y: 0 + 3*l -> y wins for l > 1
    pool = NbestPool([("y",)])
    pool.add(0, [entry(["x"], {"lm": 2.0, "p_tgt_src": 1.0}), entry(["y"], {"p_tgt_src": 3.0})])
    w = np.zeros(len(FEATURES))
    w[FEATURES.index("lm")] = 1.0
    val, b = line_search(pool, w, P)
    assert val > 1.0 and b == pytest.approx(100.0)


def test_tune_flips_decoder_choice():
    table = two_choice_table()
    lm = NGramModel.uniform(["x", "y", "z"])
    srcs, refs = [("a", "b")], [("y", "z")]
    assert decode(srcs[0], table, lm)[0] == ("x", "z")
    w = tune_weights(srcs, refs, table, lm, DecoderParams(), iterations=2, nbest_size=10)
    assert decode(srcs[0], table, lm, w)[0] == ("y", "z")


def test_tune_keeps_perfect_weights():
    table = two_choice_table()
    lm = NGramModel.uniform(["x", "y", "z"])
    srcs, refs = [("a", "b"), ("b",)], [("x", "z"), ("z",)]
    start = FeatureWeights()
    w = tune_weights(srcs, refs, table, lm, DecoderParams(), start, iterations=2, nbest_size=10)
    assert [decode(s, table, lm, w)[0] for s in srcs] == refs
    pool = NbestPool(refs)
    for k, s in enumerate(srcs):
        pool.add(k, nbest(s, table, lm, w, n=10))
    assert pool.bleu(w.array) == pytest.approx(100.0)


def test_optimize_never_worse_than_start():
    rng = np.random.default_rng(0)
    for trial in range(10):
        refs = [tuple(rng.choice(list("xyz"), size=3)) for _ in range(4)]
        pool = NbestPool(refs)
        for k in range(4):
            pool.add(k, [
                Translation(tuple(rng.choice(list("xyz"), size=3)), 0.0, rng.normal(size=len(FEATURES)), ())
                for _ in range(6)
            ])
        start = rng.normal(size=len(FEATURES))
        w, b = optimize(pool, start, np.random.default_rng(trial))
        assert b >= pool.bleu(start) - 1e-12
        assert pool.bleu(w) == pytest.approx(b)


def test_tune_deterministic_given_seed():
    table = two_choice_table()
    lm = NGramModel.uniform(["x", "y", "z"])
    args = ([("a", "b"), ("a",)], [("y", "z"), ("x",)], table, lm, DecoderParams())
    a = tune_weights(*args, iterations=2, nbest_size=5, seed=3)
    b = tune_weights(*args, iterations=2, nbest_size=5, seed=3)
    assert np.array_equal(a.array, b.array)


def test_tune_errors(monkeypatch):
    table = two_choice_table()
    lm = NGramModel.uniform(["x", "y", "z"])
    with pytest.raises(ValidationError):
        tune_weights([], [], table, lm)

    def failing(*args, **kwargs):
        raise DecodeFailure("no hypothesis")

    monkeypatch.setattr(tuning, "nbest", failing)
    with pytest.raises(TuningError):
        tune_weights([("a",), ("b",)], [("x",), ("z",)], table, lm)
