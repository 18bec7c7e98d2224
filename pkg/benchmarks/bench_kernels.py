"""Time the numba and numpy paths of each kernel on toy-sized inputs.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from pbsmt.alignment import _Cells
from pbsmt.kernels import (
    consistent_spans_numba, consistent_spans_numpy, expected_counts_numba, expected_counts_numpy,
)
from pbsmt.toy import generate_corpus, make_toy_language


def best_of(fn, args, repeat):
    fn(*args)  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sentences", type=int, default=5000)
    args = ap.parse_args()

    corpus = generate_corpus(make_toy_language(200), args.sentences, seed=1)
    cells = _Cells(corpus, True)
    t = np.full(len(cells.pair_src), 1.0 / len(cells.tgt_vocab))
    q = np.ones(len(cells.pos_keys))
    em_args = (cells.cell_param, cells.cell_pos, cells.cell_tok, t, q, cells.n_tok)

    rng = np.random.default_rng(0)
    mats = []
    for _ in range(2000):
        m, n = rng.integers(4, 16, size=2)
        a = np.zeros((m, n), dtype=bool)
        for j in range(n):
            if rng.random() < 0.9:
                a[rng.integers(0, m), j] = True
        mats.append(a)

    def spans(fn):
        for a in mats:
            fn(a, 7)

    rows = [
        ("expected_counts (one E-step)", best_of(expected_counts_numba, em_args, args.repeat),
         best_of(expected_counts_numpy, em_args, args.repeat)),
        ("consistent_spans (2000 pairs)", best_of(spans, (consistent_spans_numba,), args.repeat),
         best_of(spans, (consistent_spans_numpy,), args.repeat)),
    ]
    print(f"{'kernel':<32} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, a, b in rows:
        print(f"{name:<32} {a * 1e3:>8.2f}ms {b * 1e3:>8.2f}ms {b / a:>7.1f}x")


if __name__ == "__main__":
    main()
