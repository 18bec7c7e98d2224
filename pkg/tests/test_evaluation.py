import numpy as np
import pytest
from hypothesis import given, strategies as st

from pbsmt.decoder import DecoderParams
from pbsmt.errors import ValidationError
from pbsmt.evaluation import (
    ExperimentResult, ExperimentSettings, apply_variant, kfold, results_csv, results_table,
    run_experiment,
)
from pbsmt.pipeline import SystemSettings
from pbsmt.toy import generate_corpus, make_toy_language


def test_kfold_examples():
    folds = kfold(8, 4, seed=0)
    tests = [set(te.tolist()) for _, te in folds]
    assert [len(t) for t in tests] == [2, 2, 2, 2]
    assert set().union(*tests) == set(range(8))
    assert sum(len(t) for t in tests) == 8
    again = kfold(8, 4, seed=0)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))
    assert sorted(len(te) for _, te in kfold(5, 2)) == [2, 3]
    with pytest.raises(ValidationError):
        kfold(3, 4)
    with pytest.raises(ValidationError):
        kfold(3, 1)


@given(st.integers(2, 200), st.integers(2, 10), st.integers(0, 1000))
def test_kfold_partitions(n, k, seed):
    if k > n:
        return
    folds = kfold(n, k, seed)
    seen = np.concatenate([te for _, te in folds])
    assert sorted(seen.tolist()) == list(range(n))
    sizes = [len(te) for _, te in folds]
    assert max(sizes) - min(sizes) <= 1
    for tr, te in folds:
        assert not set(tr.tolist()) & set(te.tolist())
        assert len(tr) + len(te) == n


def test_mean_of_fold_literals():
    r = ExperimentResult("baseline", [67.32, 66.32, 64.90, 66.74])
    assert abs(r.mean - 66.32) < 1e-9
    assert abs(r.mean - sum(r.fold_bleus) / 4) < 1e-9


def small_settings(**kw):
    system = SystemSettings(lm_order=3, em_iterations=5, decoder=DecoderParams(distortion_limit=0))
    return ExperimentSettings(system=system, **kw)


def test_experiment_deterministic_and_reported():
    lang = make_toy_language(40, seed=1)
    corpus = generate_corpus(lang, 120, seed=2)
    a = run_experiment("baseline", corpus, small_settings(folds=2))
    b = run_experiment("baseline", corpus, small_settings(folds=2))
    assert a.fold_bleus == b.fold_bleus
    assert len(a.fold_bleus) == 2
    assert abs(a.mean - sum(a.fold_bleus) / 2) < 1e-9
    assert a.config["variant"] == "baseline" and a.config["lm_order"] == 3
    csv = results_csv([a])
    assert csv.splitlines()[0] == "variant,fold,bleu"
    assert csv.splitlines()[-1] == f"baseline,mean,{a.mean:.2f}"
    assert "SMT Model" in results_table([a])


def test_unknown_variant_and_missing_table():
    lang = make_toy_language(20)
    corpus = generate_corpus(lang, 10)
    with pytest.raises(ValidationError):
        apply_variant("sideways", corpus)
    with pytest.raises(ValidationError):
        apply_variant("romanized", corpus)


def test_inverted_variant_reverses_sources():
    lang = make_toy_language(20)
    corpus = generate_corpus(lang, 5)
    inv = apply_variant("inverted", corpus)
    assert all(p.source == q.source[::-1] and p.target == q.target for p, q in zip(inv, corpus))


def test_errors_annotated_with_variant_and_fold():
    lang = make_toy_language(20)
    corpus = generate_corpus(lang, 10)
    settings = small_settings(folds=2)
    settings.system.lm_discount = "bogus"
    with pytest.raises(ValidationError) as err:
        run_experiment("inverted", corpus, settings)
    assert "[variant inverted, fold 1]" in str(err.value)
