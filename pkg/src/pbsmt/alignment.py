"""IBM Model 1/2 word alignment by EM, Viterbi links and symmetrization."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, SentencePair, read_lines, write_lines
from .errors import ParseError, ValidationError
from .kernels import expected_counts

log = logging.getLogger(__name__)

NULL = "NULL"
PROB_FLOOR = 1e-12


# --------------------------------------------------------------------------
# Alignment matrices
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AlignmentMatrix:
    """Links ``(i, j)`` between source position i and target position j."""

    m: int
    n: int
    links: frozenset = frozenset()

    def __post_init__(self):
        links = frozenset((int(i), int(j)) for i, j in self.links)
        for i, j in links:
            if not (0 <= i < self.m and 0 <= j < self.n):
                raise ValidationError(f"link {i}-{j} outside {self.m}x{self.n}")
        object.__setattr__(self, "links", links)

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.m, self.n), dtype=bool)
        for i, j in self.links:
            a[i, j] = True
        return a

    @classmethod
    def from_dense(cls, a) -> "AlignmentMatrix":
        a = np.asarray(a, dtype=bool)
        return cls(a.shape[0], a.shape[1], frozenset(zip(*map(list, np.nonzero(a)))))

    def transpose(self) -> "AlignmentMatrix":
        return AlignmentMatrix(self.n, self.m, frozenset((j, i) for i, j in self.links))

    def to_pharaoh(self) -> str:
        return " ".join(f"{i}-{j}" for i, j in sorted(self.links))

    @classmethod
    def from_pharaoh(cls, line: str, m: int, n: int) -> "AlignmentMatrix":
        links = []
        for item in line.split():
            i, sep, j = item.partition("-")
            if not sep:
                raise ParseError(f"bad alignment link {item!r}")
            links.append((int(i), int(j)))
        return cls(m, n, frozenset(links))


def write_pharaoh(path, alignments: Iterable[AlignmentMatrix]) -> None:
    write_lines(path, (a.to_pharaoh() for a in alignments))


def read_pharaoh(path, corpus: Corpus) -> list[AlignmentMatrix]:
    lines = read_lines(path)
    if len(lines) != len(corpus):
        raise ValidationError(f"{path}: {len(lines)} alignment lines for {len(corpus)} pairs")
    out = []
    for lineno, (line, pair) in enumerate(zip(lines, corpus), 1):
        try:
            out.append(AlignmentMatrix.from_pharaoh(line, len(pair.source), len(pair.target)))
        except (ParseError, ValidationError, ValueError) as exc:
            raise ParseError(str(exc), lineno, path) from None
    return out


# --------------------------------------------------------------------------
# Lexical translation table
# --------------------------------------------------------------------------


class TranslationTable:
    """t(target | source) over co-occurring word pairs.

    Pairs that never co-occurred get ``default``: 1/|V_target| before any
    training (the uniform start), 0 afterwards.
    """

    def __init__(self, src_vocab, tgt_vocab, pair_src, pair_tgt, prob, default=0.0, use_null=True):
        self.src_vocab: list[str] = list(src_vocab)
        self.tgt_vocab: list[str] = list(tgt_vocab)
        self.src_index = {w: k for k, w in enumerate(self.src_vocab)}
        self.tgt_index = {w: k for k, w in enumerate(self.tgt_vocab)}
        self.pair_src = np.asarray(pair_src, dtype=np.int64)
        self.pair_tgt = np.asarray(pair_tgt, dtype=np.int64)
        self.prob = np.asarray(prob, dtype=np.float64)
        self.default = float(default)
        self.use_null = use_null
        self._lookup = {
            (s, t): k for k, (s, t) in enumerate(zip(self.pair_src.tolist(), self.pair_tgt.tolist()))
        }

    def __call__(self, target: str, source: str) -> float:
        return self.get(target, source)

    def get(self, target: str, source: str) -> float:
        """t(target | source); 0 for words outside the vocabularies."""
        s = self.src_index.get(source)
        t = self.tgt_index.get(target)
        if s is None or t is None:
            return 0.0
        k = self._lookup.get((s, t))
        return self.default if k is None else float(self.prob[k])

    def row_sums(self) -> dict[str, float]:
        """Σ_target t(·|s) for every source word, counting defaulted entries."""
        sums = np.bincount(self.pair_src, weights=self.prob, minlength=len(self.src_vocab))
        if self.default:
            stored = np.bincount(self.pair_src, minlength=len(self.src_vocab))
            sums = sums + self.default * (len(self.tgt_vocab) - stored)
        return dict(zip(self.src_vocab, sums.tolist()))

    def items(self):
        for s, t, p in zip(self.pair_src.tolist(), self.pair_tgt.tolist(), self.prob.tolist()):
            yield self.src_vocab[s], self.tgt_vocab[t], p

    def save(self, path) -> None:
        write_lines(
            path,
            (f"{s}\t{t}\t{max(p, PROB_FLOOR):.12g}" for s, t, p in sorted(self.items())),
        )

    @classmethod
    def load(cls, path) -> "TranslationTable":
        src_vocab: dict[str, int] = {}
        tgt_vocab: dict[str, int] = {}
        ps, pt, pr = [], [], []
        for lineno, line in enumerate(read_lines(path), 1):
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError("expected 'source<TAB>target<TAB>probability'", lineno, path)
            try:
                p = float(parts[2])
            except ValueError:
                raise ParseError(f"bad probability {parts[2]!r}", lineno, path) from None
            ps.append(src_vocab.setdefault(parts[0], len(src_vocab)))
            pt.append(tgt_vocab.setdefault(parts[1], len(tgt_vocab)))
            pr.append(p)
        return cls(src_vocab, tgt_vocab, ps, pt, pr, 0.0, NULL in src_vocab)


@dataclass
class EmTrace:
    """Corpus log-likelihood (natural log) before EM and after each M-step."""

    loglik: list[float] = field(default_factory=list)

    def is_monotone(self, slack: float = 1e-9) -> bool:
        return all(b >= a - slack for a, b in zip(self.loglik, self.loglik[1:]))


# --------------------------------------------------------------------------
# EM
# --------------------------------------------------------------------------


class _Cells:
    """Flattened (target token, candidate source position) grid of a corpus."""

    def __init__(self, corpus: Corpus, use_null: bool):
        if len(corpus) == 0:
            raise ValidationError("cannot train an alignment model on an empty corpus")
        src_index: dict[str, int] = {}
        if use_null:
            src_index[NULL] = 0
        tgt_index: dict[str, int] = {}
        pair_index: dict[tuple[int, int], int] = {}
        pos_index: dict[tuple[int, int, int, int], int] = {}
        cell_param: list[int] = []
        cell_pos: list[int] = []
        cell_tok: list[int] = []
        cell_count: list[int] = []
        n_tok = 0
        total_log_norm = 0.0
        for pair in corpus:
            src = ([0] if use_null else []) + [src_index.setdefault(w, len(src_index)) for w in pair.source]
            l, m = len(pair.source), len(pair.target)
            width = len(src)
            total_log_norm += m * math.log(width)
            for j, w in enumerate(pair.target):
                t = tgt_index.setdefault(w, len(tgt_index))
                for k, s in enumerate(src):
                    i = k - 1 if use_null else k  # -1 denotes NULL
                    cell_param.append(pair_index.setdefault((s, t), len(pair_index)))
                    cell_pos.append(pos_index.setdefault((i, j, l, m), len(pos_index)))
                    cell_tok.append(n_tok)
                n_tok += 1
        self.src_vocab = list(src_index)
        self.tgt_vocab = list(tgt_index)
        self.src_index = src_index
        self.tgt_index = tgt_index
        keys = np.array(list(pair_index), dtype=np.int64).reshape(-1, 2)
        self.pair_src = keys[:, 0]
        self.pair_tgt = keys[:, 1]
        self.pos_keys = np.array(list(pos_index), dtype=np.int64).reshape(-1, 4)
        self.pos_index = pos_index
        self.cell_param = np.array(cell_param, dtype=np.int64)
        self.cell_pos = np.array(cell_pos, dtype=np.int64)
        self.cell_tok = np.array(cell_tok, dtype=np.int64)
        self.n_tok = n_tok
        self.log_norm = total_log_norm
        # positional normalization groups: (j, l, m)
        group_index: dict[tuple[int, int, int], int] = {}
        self.pos_group = np.array(
            [group_index.setdefault((j, l, m), len(group_index)) for _, j, l, m in self.pos_keys.tolist()],
            dtype=np.int64,
        )
        self.pos_width = np.array(
            [l + (1 if use_null else 0) for _, _, l, _ in self.pos_keys.tolist()], dtype=np.float64
        )


def _normalize(counts, groups, n_groups):
    totals = np.bincount(groups, weights=counts, minlength=n_groups)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = counts / totals[groups]
    return np.nan_to_num(out)


def train_ibm1(corpus: Corpus, iterations: int = 10, use_null: bool = True):
    """IBM Model 1 EM from a uniform start.

    Returns ``(TranslationTable, EmTrace)``. The trace holds the corpus
    log-likelihood under the initial table and after every M-step, so it
    has ``iterations + 1`` entries.
    """
    if iterations < 0:
        raise ValidationError("iterations must be >= 0")
    cells = _Cells(corpus, use_null)
    n_src = len(cells.src_vocab)
    uniform = 1.0 / len(cells.tgt_vocab)
    t = np.full(len(cells.pair_src), uniform)
    # Model 1 alignment prior is uniform, which only shifts the likelihood.
    ones = np.ones(max(len(cells.pos_keys), 1))
    trace = EmTrace()
    for it in range(iterations):
        lex, _, ll = expected_counts(cells.cell_param, cells.cell_pos, cells.cell_tok, t, ones, cells.n_tok)
        trace.loglik.append(ll - cells.log_norm)
        t = _normalize(lex, cells.pair_src, n_src)
        log.debug("ibm1 iteration %d loglik %.6f", it + 1, trace.loglik[-1])
    _, _, ll = expected_counts(cells.cell_param, cells.cell_pos, cells.cell_tok, t, ones, cells.n_tok)
    trace.loglik.append(ll - cells.log_norm)
    table = TranslationTable(
        cells.src_vocab, cells.tgt_vocab, cells.pair_src, cells.pair_tgt, t,
        default=uniform if iterations == 0 else 0.0, use_null=use_null,
    )
    return table, trace


class DistortionTable:
    """IBM Model 2 alignment probabilities a(i | j, l, m); i = -1 is NULL."""

    def __init__(self, probs: dict[tuple[int, int, int, int], float], use_null=True):
        self.probs = probs
        self.use_null = use_null

    def get(self, i, j, l, m) -> float:
        p = self.probs.get((i, j, l, m))
        if p is None:
            return 1.0 / (l + (1 if self.use_null else 0))
        return p


def train_ibm2(corpus: Corpus, iterations: int = 5, use_null: bool = True, init: TranslationTable | None = None):
    """IBM Model 2 EM; lexical table seeded from ``init`` (Model 1) when given.

    Returns ``(TranslationTable, DistortionTable, EmTrace)``.
    """
    if iterations < 0:
        raise ValidationError("iterations must be >= 0")
    cells = _Cells(corpus, use_null)
    n_src = len(cells.src_vocab)
    if init is None:
        t = np.full(len(cells.pair_src), 1.0 / len(cells.tgt_vocab))
    else:
        t = np.array(
            [init.get(cells.tgt_vocab[b], cells.src_vocab[a]) for a, b in zip(cells.pair_src.tolist(), cells.pair_tgt.tolist())]
        )
        t = np.maximum(t, PROB_FLOOR)
        t = _normalize(t, cells.pair_src, n_src)
    q = 1.0 / cells.pos_width
    n_groups = int(cells.pos_group.max()) + 1 if len(cells.pos_group) else 0
    trace = EmTrace()
    for _ in range(iterations):
        lex, pos, ll = expected_counts(cells.cell_param, cells.cell_pos, cells.cell_tok, t, q, cells.n_tok)
        trace.loglik.append(ll)
        t = _normalize(lex, cells.pair_src, n_src)
        q = _normalize(pos, cells.pos_group, n_groups)
    _, _, ll = expected_counts(cells.cell_param, cells.cell_pos, cells.cell_tok, t, q, cells.n_tok)
    trace.loglik.append(ll)
    table = TranslationTable(cells.src_vocab, cells.tgt_vocab, cells.pair_src, cells.pair_tgt, t, 0.0, use_null)
    dist = DistortionTable({tuple(k): float(p) for k, p in zip(cells.pos_keys.tolist(), q.tolist())}, use_null)
    return table, dist, trace


# --------------------------------------------------------------------------
# Viterbi alignment and symmetrization
# --------------------------------------------------------------------------


def viterbi_align(pair: SentencePair, table: TranslationTable, direction: str = "src2tgt",
                  distortion: DistortionTable | None = None) -> AlignmentMatrix:
    """Link each word on the generated side to its most probable counterpart.

    For ``src2tgt`` the table is t(target|source) and every target word picks
    a source word. For ``tgt2src`` the table was trained on the swapped corpus
    and links are returned in (source, target) orientation. Ties go to the
    lowest position; NULL wins only when strictly best, and NULL links are
    dropped.
    """
    if direction == "tgt2src":
        return viterbi_align(SentencePair(pair.target, pair.source), table, "src2tgt", distortion).transpose()
    if direction != "src2tgt":
        raise ValidationError(f"unknown direction {direction!r}")
    src, tgt = pair.source, pair.target
    l, m = len(src), len(tgt)
    links = []
    for j, e in enumerate(tgt):
        best_i, best_p = -1, 0.0
        for i, f in enumerate(src):
            p = table.get(e, f)
            if distortion is not None:
                p *= distortion.get(i, j, l, m)
            if p > best_p:
                best_i, best_p = i, p
        if table.use_null:
            p = table.get(e, NULL)
            if distortion is not None:
                p *= distortion.get(-1, j, l, m)
            if p > best_p:
                best_i = -1
        if best_i >= 0:
            links.append((best_i, j))
    return AlignmentMatrix(l, m, frozenset(links))


_NEIGHBORS = ((-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))
HEURISTICS = ("intersection", "union", "grow-diag", "grow-diag-final", "grow-diag-final-and")


def symmetrize(forward: AlignmentMatrix, reverse: AlignmentMatrix, heuristic: str = "grow-diag-final") -> AlignmentMatrix:
    """Merge two directional alignments of the same sentence pair."""
    if (forward.m, forward.n) != (reverse.m, reverse.n):
        raise ValidationError(
            f"alignment shapes differ: {forward.m}x{forward.n} vs {reverse.m}x{reverse.n}"
        )
    if heuristic not in HEURISTICS:
        raise ValidationError(f"unknown symmetrization heuristic {heuristic!r}")
    m, n = forward.m, forward.n
    fwd, rev = forward.to_dense(), reverse.to_dense()
    union = fwd | rev
    if heuristic == "union":
        return AlignmentMatrix.from_dense(union)
    cur = fwd & rev
    if heuristic == "intersection":
        return AlignmentMatrix.from_dense(cur)

    src_on = cur.any(1)
    tgt_on = cur.any(0)

    def add(i, j):
        cur[i, j] = True
        src_on[i] = True
        tgt_on[j] = True

    added = True
    while added:
        added = False
        for i in range(m):
            for j in range(n):
                if not cur[i, j]:
                    continue
                for di, dj in _NEIGHBORS:
                    a, b = i + di, j + dj
                    if 0 <= a < m and 0 <= b < n and union[a, b] and not cur[a, b]:
                        if not src_on[a] or not tgt_on[b]:
                            add(a, b)
                            added = True
    if heuristic != "grow-diag":
        both = heuristic == "grow-diag-final-and"
        for side in (fwd, rev):
            for i in range(m):
                for j in range(n):
                    if side[i, j] and not cur[i, j]:
                        free = (not src_on[i] and not tgt_on[j]) if both else (not src_on[i] or not tgt_on[j])
                        if free:
                            add(i, j)
    return AlignmentMatrix.from_dense(cur)


@dataclass
class AlignmentModels:
    forward: TranslationTable
    reverse: TranslationTable
    forward_trace: EmTrace
    reverse_trace: EmTrace
    forward_distortion: DistortionTable | None = None
    reverse_distortion: DistortionTable | None = None


def train_bidirectional(corpus: Corpus, iterations: int = 10, use_null: bool = True, model2_iterations: int = 0) -> AlignmentModels:
    fwd, ftrace = train_ibm1(corpus, iterations, use_null)
    rev, rtrace = train_ibm1(corpus.swapped(), iterations, use_null)
    fd = rd = None
    if model2_iterations > 0:
        fwd, fd, t2 = train_ibm2(corpus, model2_iterations, use_null, init=fwd)
        rev, rd, r2 = train_ibm2(corpus.swapped(), model2_iterations, use_null, init=rev)
        ftrace.loglik.extend(t2.loglik)
        rtrace.loglik.extend(r2.loglik)
    return AlignmentModels(fwd, rev, ftrace, rtrace, fd, rd)


def align_corpus(corpus: Corpus, models: AlignmentModels, heuristic: str = "grow-diag-final") -> list[AlignmentMatrix]:
    out = []
    for pair in corpus:
        f = viterbi_align(pair, models.forward, "src2tgt", models.forward_distortion)
        r = viterbi_align(pair, models.reverse, "tgt2src", models.reverse_distortion)
        out.append(symmetrize(f, r, heuristic))
    return out
