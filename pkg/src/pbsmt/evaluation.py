"""Cross-validation and the baseline / romanized / inverted experiment harness."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .bleu import BleuReport, bleu, sentence_stats  # noqa: F401  (re-exported)
from .corpus import Corpus, TransliterationTable, invert_source, romanize, split_corpus
from .errors import PbsmtError, SizeError, ValidationError
from .pipeline import SystemSettings, train_system

log = logging.getLogger(__name__)

VARIANTS = ("baseline", "romanized", "inverted")
VARIANT_LABELS = {
    "baseline": "SMT Model",
    "romanized": "Romanized-SMT Model",
    "inverted": "Inverted-SMT Model",
}


def kfold(n_items, k: int = 4, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded k-fold ``(train_indices, test_indices)`` partitions.

    ``n_items`` is a size or a sized collection. Test folds are disjoint,
    cover every index and differ in size by at most one.
    """
    n = n_items if isinstance(n_items, (int, np.integer)) else len(n_items)
    if k < 2:
        raise ValidationError("k-fold needs k >= 2")
    if k > n:
        raise ValidationError(f"k = {k} exceeds corpus size {n}")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(order, k)
    out = []
    for f in range(k):
        test = np.sort(folds[f])
        train = np.sort(np.concatenate([folds[g] for g in range(k) if g != f]))
        out.append((train, test))
    return out


@dataclass
class ExperimentSettings:
    system: SystemSettings = field(default_factory=SystemSettings)
    folds: int = 4
    test_size: int = 0  # > 0 selects a single seeded hold-out split instead of k-fold
    seed: int = 0
    threads: int = 1
    table: TransliterationTable | None = None
    lm_text: list | None = None


@dataclass
class ExperimentResult:
    variant: str
    fold_bleus: list[float]
    config: dict = field(default_factory=dict)
    reports: list[BleuReport] = field(default_factory=list, repr=False)

    @property
    def mean(self) -> float:
        return float(sum(self.fold_bleus) / len(self.fold_bleus)) if self.fold_bleus else 0.0


def apply_variant(variant: str, corpus: Corpus, table: TransliterationTable | None = None) -> Corpus:
    if variant == "baseline":
        return corpus
    if variant == "inverted":
        return corpus.replace(invert_source(p) for p in corpus)
    if variant == "romanized":
        if table is None:
            raise ValidationError("the romanized variant needs a transliteration table")
        return corpus.replace(romanize(p, table) for p in corpus)
    raise ValidationError(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")


def _splits(corpus: Corpus, settings: ExperimentSettings):
    if settings.test_size > 0:
        n_test = settings.test_size
        if n_test >= len(corpus):
            raise SizeError(f"test size {n_test} leaves no training data")
        train, _, test = split_corpus(corpus, (len(corpus) - n_test, 0, n_test), settings.seed)
        return [(train, test)]
    return [(corpus.subset(tr), corpus.subset(te)) for tr, te in kfold(len(corpus), settings.folds, settings.seed)]


def run_experiment(variant: str, corpus: Corpus, settings: ExperimentSettings | None = None) -> ExperimentResult:
    """Transform the corpus for ``variant``, then train and score every fold."""
    settings = settings or ExperimentSettings()
    data = apply_variant(variant, corpus, settings.table)
    sys_settings = settings.system
    result = ExperimentResult(variant, [], {
        "variant": variant, "folds": settings.folds, "test_size": settings.test_size,
        "seed": settings.seed, **sys_settings.snapshot(),
    })
    lm_text = settings.lm_text
    if lm_text is not None and variant == "romanized":
        lm_text = [tuple(t for t in (settings.table.apply(w) for w in s) if t) for s in lm_text]
    for f, (train, test) in enumerate(_splits(data, settings)):
        try:
            tune = None
            if sys_settings.tune and sys_settings.tune_size > 0:
                train, tune, _ = split_corpus(train, (len(train) - sys_settings.tune_size, sys_settings.tune_size, 0), settings.seed + f)
            system = train_system(train, sys_settings, lm_text, tune)
            hyps = [t.tokens for t in system.translate(test.sources(), settings.threads)]
            report = bleu(hyps, test.targets())
        except PbsmtError as exc:
            exc.args = (f"[variant {variant}, fold {f + 1}] {exc}",)
            raise
        log.info("%s fold %d: BLEU %.2f", variant, f + 1, report.bleu)
        result.fold_bleus.append(report.bleu)
        result.reports.append(report)
    return result


def results_csv(results) -> str:
    """``variant,fold,bleu`` rows followed by a ``mean`` summary row per variant."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "fold", "bleu"])
    for r in results:
        for f, b in enumerate(r.fold_bleus, 1):
            w.writerow([r.variant, f, f"{b:.2f}"])
        w.writerow([r.variant, "mean", f"{r.mean:.2f}"])
    return buf.getvalue()


def results_table(results) -> str:
    """Plain-text table with one mean row per variant and its folds beneath."""
    rows = []
    for r in results:
        rows.append((VARIANT_LABELS.get(r.variant, r.variant), f"{r.mean:.2f}"))
        if len(r.fold_bleus) > 1:
            rows.extend((f"  FOLD {f}", f"{b:.2f}") for f, b in enumerate(r.fold_bleus, 1))
    width = max([len("Model")] + [len(a) for a, _ in rows])
    lines = [f"{'Model':<{width}} | BLEU Score", f"{'-' * width}-+-----------"]
    lines += [f"{a:<{width}} | {b:>10}" for a, b in rows]
    return "\n".join(lines) + "\n"
