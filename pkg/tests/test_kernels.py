import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbsmt import _accel
from pbsmt.kernels import (
    consistent_spans_numba, consistent_spans_numpy, expected_counts_numba, expected_counts_numpy,
)


def random_cells(rng):
    n_tok = int(rng.integers(1, 30))
    width = rng.integers(1, 5, size=n_tok)
    cell_tok = np.repeat(np.arange(n_tok), width)
    n_param = int(rng.integers(1, 20))
    cell_param = rng.integers(0, n_param, size=len(cell_tok))
    cell_pos = rng.integers(0, 7, size=len(cell_tok))
    t = rng.uniform(0.01, 1.0, size=n_param)
    q = rng.uniform(0.01, 1.0, size=7)
    return cell_param, cell_pos, cell_tok, t, q, n_tok


def test_expected_counts_paths_agree():
    rng = np.random.default_rng(0)
    for _ in range(200):
        args = random_cells(rng)
        a = expected_counts_numba(*args)
        b = expected_counts_numpy(*args)
        assert np.allclose(a[0], b[0], atol=1e-12)
        assert np.allclose(a[1], b[1], atol=1e-12)
        assert a[2] == pytest.approx(b[2], abs=1e-9)
        # posteriors of each token sum to one
        assert a[0].sum() == pytest.approx(args[5])


@settings(max_examples=100)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**36 - 1), st.integers(1, 7))
def test_span_paths_agree(m, n, bits, max_len):
    links = np.array([(bits >> k) & 1 for k in range(m * n)], dtype=bool).reshape(m, n)
    a = {tuple(r) for r in consistent_spans_numba(links, max_len).tolist()}
    b = {tuple(r) for r in consistent_spans_numpy(links, max_len).tolist()}
    assert a == b


def test_flag_disables_jit():
    code = "from pbsmt import _accel; print(_accel.JIT_ENABLED)"
    env = dict(os.environ, PBSMT_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"


def test_fallback_pipeline_matches(tmp_path):
    code = (
        "from pbsmt.toy import make_toy_language, generate_corpus\n"
        "from pbsmt.alignment import train_ibm1\n"
        "c = generate_corpus(make_toy_language(30), 40)\n"
        "t, tr = train_ibm1(c, 5)\n"
        "print(repr(tr.loglik[-1]))\n"
    )
    results = []
    for flag in ("0", "1"):
        env = dict(os.environ, PBSMT_DISABLE_JIT=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        results.append(float(out.stdout.strip()))
    assert results[0] == pytest.approx(results[1], abs=1e-9)


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("PBSMT_THREADS", "3")
    assert _accel.resolve_threads(0) == 3
    assert _accel.resolve_threads(2) == 2
    monkeypatch.delenv("PBSMT_THREADS")
    assert _accel.resolve_threads(None) == 1
