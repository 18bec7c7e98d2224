from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from pbsmt.bpe import EOW, BpeModel, bpe_apply, bpe_train, decode_sentence, encode_sentence
from pbsmt.errors import ParseError, ValidationError

word = st.text(alphabet="abcde", min_size=1, max_size=6)
corpora = st.lists(st.lists(word, min_size=1, max_size=6), min_size=1, max_size=8)


def naive_bpe(sentences, merges):
    """Recount every pair from scratch each round."""
    vocab = Counter()
    for s in sentences:
        for w in s:
            vocab[tuple(w[:-1]) + (w[-1] + EOW,)] += 1
    learned = []
    for _ in range(merges):
        pairs = Counter()
        for sym, c in vocab.items():
            for p in zip(sym, sym[1:]):
                pairs[p] += c
        if not pairs:
            break
        best = min(pairs.items(), key=lambda kv: (-kv[1], kv[0]))
        if best[1] < 2:
            break
        a, b = best[0]
        learned.append((a, b))
        new = Counter()
        for sym, c in vocab.items():
            out, k = [], 0
            while k < len(sym):
                if k + 1 < len(sym) and sym[k] == a and sym[k + 1] == b:
                    out.append(a + b)
                    k += 2
                else:
                    out.append(sym[k])
                    k += 1
            new[tuple(out)] += c
        vocab = new
    return learned


def test_zero_merges_splits_characters():
    m = bpe_train([["low", "lower"]], 0)
    assert m.segment("low") == ("l", "o", "w" + EOW)
    assert bpe_apply(m, "low") == ["l", "o", "w"]


def test_first_merge_low_lower():
    m = bpe_train([["low"]] * 5 + [["lower"]] * 2, 1)
    assert m.merges == [("l", "o")]


def test_empty_corpus_rejected():
    with pytest.raises(ValidationError):
        bpe_train([], 10)
    with pytest.raises(ValidationError):
        bpe_train([["a"]], -1)


def test_stops_when_no_pair_repeats():
    m = bpe_train([["abc"]], 100)
    assert m.merge_count == 0


@settings(max_examples=60)
@given(corpora, st.integers(0, 30))
def test_matches_naive_trainer(sentences, merges):
    assert bpe_train(sentences, merges).merges == naive_bpe(sentences, merges)


@settings(max_examples=60)
@given(corpora, st.integers(0, 30))
def test_lossless_segmentation(sentences, merges):
    m = bpe_train(sentences, merges)
    for s in sentences:
        for w in s:
            assert "".join(bpe_apply(m, w)) == w
        assert decode_sentence(encode_sentence(m, s)) == list(s)


def test_unseen_word_still_lossless():
    m = bpe_train([["lower", "lowest", "low"]], 10)
    assert "".join(bpe_apply(m, "blowing")) == "blowing"


def test_model_roundtrip(tmp_path):
    m = bpe_train([["low"]] * 5 + [["lower"]] * 2, 5)
    m.save(tmp_path / "bpe")
    back = BpeModel.load(tmp_path / "bpe")
    assert back.merges == m.merges
    assert back.segment("lower") == m.segment("lower")


def test_model_header_mismatch(tmp_path):
    (tmp_path / "bpe").write_text("3\nl o\n", encoding="utf-8")
    with pytest.raises(ParseError):
        BpeModel.load(tmp_path / "bpe")
