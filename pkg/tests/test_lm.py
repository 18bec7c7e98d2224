import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbsmt.errors import ParseError, ValidationError
from pbsmt.lm import (
    BOS, EOS, UNK, NGramModel, count_ngrams, estimate_kn, parse_arpa, perplexity, score_sequence,
    train_lm,
)

from oracles import KneserNeyReference

toy_sentences = st.lists(st.lists(st.sampled_from("abcde"), min_size=1, max_size=6), min_size=1, max_size=12)


def random_text(seed, n=100, vocab=12):
    rng = np.random.default_rng(seed)
    words = [f"w{k}" for k in range(vocab)]
    return [list(rng.choice(words, size=int(rng.integers(1, 10)))) for _ in range(n)]


def test_count_examples():
    c = count_ngrams([["a", "b"]], 2)
    assert dict(c.counts[1]) == {(BOS, "a"): 1, ("a", "b"): 1, ("b", EOS): 1}
    c = count_ngrams([["a", "a", "a"]], 1)
    assert c.count(("a",)) == 3
    c = count_ngrams([["a", "b"], ["c", "b"]], 2)
    assert c.continuation[0][("b",)] == 2


def test_hand_computed_bigram():
    # corpus {"a b", "c b", "a d"}, D = 0.75
    # continuation counts: a:1 (<s>), b:2 (a, c), c:1, d:1, </s>:2 (b, d) -> total 7, 5 types
    # vocabulary for the uniform floor: a b c d </s> <unk> = 6 words
    # P1(b) = (2 - .75)/7 + .75 * 5/7 / 6 = 1.875/7 ... plus floor
    p1_b = (2 - 0.75) / 7 + 0.75 * 5 / 7 / 6
    # context a: c(a b) = 1, c(a d) = 1 -> total 2, 2 types
    p_b_a = (1 - 0.75) / 2 + 0.75 * 2 / 2 * p1_b
    m = train_lm([["a", "b"], ["c", "b"], ["a", "d"]], 2)
    assert 10 ** m.logprob(("a",), "b") == pytest.approx(p_b_a, abs=1e-9)
    assert abs(p_b_a - 0.325892857142857) < 1e-9


@pytest.mark.parametrize("order", [1, 2, 3, 5])
def test_matches_reference_formula(order):
    text = random_text(order, n=40, vocab=6)
    m = train_lm(text, order)
    ref = KneserNeyReference(text, order)
    rng = np.random.default_rng(0)
    words = sorted(ref.vocab) + ["zzz"]
    for _ in range(300):
        h = [BOS] + [words[k] for k in rng.integers(0, len(words), size=int(rng.integers(0, order)))]
        h = [x for x in h if x != EOS]
        w = words[int(rng.integers(0, len(words)))]
        assert 10 ** m.logprob(tuple(h[-(order - 1):] if order > 1 else ()), w) == pytest.approx(
            ref.prob(w, h[-(order - 1):] if order > 1 else []), abs=1e-9
        )


def sum_over_vocab(m, h):
    return sum(10 ** m.logprob(h, w) for w in m.predictable_vocab())


def test_normalization_sampled_contexts():
    m = train_lm(random_text(1), 3)
    contexts = m.contexts()
    rng = np.random.default_rng(1)
    for k in rng.choice(len(contexts), size=min(1000, len(contexts)), replace=False):
        assert sum_over_vocab(m, contexts[k]) == pytest.approx(1.0, abs=1e-6)


def test_repeated_corpus_normalizes():
    m = train_lm([["a", "b"]] * 5, 2)
    assert sum_over_vocab(m, ("a",)) == pytest.approx(1.0, abs=1e-6)


def test_unseen_context_backs_off_exactly():
    m = train_lm([["a", "b"], ["c", "b"], ["a", "d"]], 3)
    assert ("d", "c") not in m.backoffs
    assert m.logprob(("d", "c"), "b") == m.logprob(("c",), "b")


@pytest.mark.parametrize("policy", ["fixed", "count-of-counts"])
def test_normalization_unseen_contexts(policy):
    m = train_lm(random_text(2, 60), 3, policy)
    for h in [(), ("w1",), ("zzz",), ("w1", "w2"), (BOS,), ("zzz", "w3")]:
        assert sum_over_vocab(m, h) == pytest.approx(1.0, abs=1e-6)


def test_unknown_word_gets_unk_mass():
    m = train_lm([["a", "b"]], 2)
    assert m.logprob(("a",), "never") == m.logprob(("a",), UNK) > -99


def test_arpa_roundtrip_byte_identical(tmp_path):
    m = train_lm(random_text(3), 4)
    m.write_arpa(tmp_path / "a.arpa")
    back = NGramModel.read_arpa(tmp_path / "a.arpa")
    back.write_arpa(tmp_path / "b.arpa")
    assert (tmp_path / "a.arpa").read_bytes() == (tmp_path / "b.arpa").read_bytes()
    for s in random_text(4, 20):
        assert score_sequence(back, s) == pytest.approx(score_sequence(m, s), abs=1e-6)


def test_arpa_header_counts(tmp_path):
    m = train_lm(random_text(5), 3)
    text = m.to_arpa().splitlines()
    declared = {int(l.split()[1].split("=")[0]): int(l.split("=")[1]) for l in text if l.startswith("ngram ")}
    actual, section = {}, None
    for line in text:
        if line.endswith("-grams:"):
            section = int(line[1])
            actual[section] = 0
        elif line.startswith("\\end"):
            section = None
        elif section and line.strip():
            actual[section] += 1
    assert declared == actual


def test_single_unigram_decimal_fidelity():
    text = "\n\\data\\\nngram 1=1\n\n\\1-grams:\n-0.30103\tx\n\n\\end\\\n"
    m = parse_arpa(text.splitlines())
    assert m.probs[0][("x",)] == -0.30103
    assert parse_arpa(m.to_arpa().splitlines()).probs[0][("x",)] == -0.30103


@pytest.mark.parametrize("text,line", [
    ("\\data\\\nngram 1=2\n\n\\1-grams:\n-0.3\ta\n\n\\end\\\n", None),
    ("\\data\\\nngram 1=1\n\n\\1-grams:\nnotanumber\ta\n\n\\end\\\n", 5),
    ("\\data\\\nngram 1=1\n\n\\2-grams:\n-0.3\ta b\n\\end\\\n", 4),
    ("ngram 1=1\n", 1),
])
def test_malformed_arpa(text, line):
    with pytest.raises(ParseError) as err:
        parse_arpa(text.splitlines())
    if line is not None:
        assert err.value.lineno == line


def test_empty_counts_rejected():
    with pytest.raises(ValidationError):
        train_lm([], 3)


def test_deterministic_corpus_perplexity_near_one():
    m = train_lm([["a"] * 200], 1)
    # P(a) with 200 of 201 tokens being a; perplexity of "a" tokens alone
    lp = m.logprob((), "a")
    assert 10 ** -lp == pytest.approx(1.0, abs=0.02)


def test_additivity():
    m = train_lm(random_text(6), 3)
    s = random_text(7, 1)[0]
    total = 0.0
    ctx = (BOS,)
    for w in s + [EOS]:
        lp, ctx = m.score_word(ctx, w)
        total += lp
    assert score_sequence(m, s) == pytest.approx(total, abs=1e-12)
    a, ctx = m.score_tokens(s[:2])
    b, _ = m.score_tokens(s[2:], ctx, eos=True)
    assert a + b == pytest.approx(score_sequence(m, s), abs=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_training_perplexity_below_uniform(order):
    text = random_text(8)
    m = train_lm(text, order)
    uniform = len(m.predictable_vocab())
    assert perplexity(m, text) <= uniform
    assert perplexity(NGramModel.uniform(w for s in text for w in s), text) == pytest.approx(uniform)


@settings(max_examples=40, deadline=None)
@given(toy_sentences, st.integers(1, 3))
def test_duplicated_corpus_does_not_hurt(text, order):
    # with a fixed absolute discount the estimate sharpens rather than staying
    # equal, so the guaranteed property is "does not increase"
    once = perplexity(train_lm(text, order), text)
    twice = perplexity(train_lm(text + text, order), text)
    assert twice <= once + 1e-9


@settings(max_examples=40, deadline=None)
@given(toy_sentences, st.integers(1, 4))
def test_property_normalization(text, order):
    m = train_lm(text, order)
    for h in m.contexts()[:20]:
        assert sum_over_vocab(m, h) == pytest.approx(1.0, abs=1e-6)


def test_upper_bound_is_admissible():
    m = train_lm(random_text(9), 3)
    for h in m.contexts():
        for w in m.predictable_vocab():
            assert m.logprob(h, w) <= m.upper_bound(w) + 1e-12
