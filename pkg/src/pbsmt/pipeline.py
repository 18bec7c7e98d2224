"""End-to-end training of a phrase-based system from a parallel corpus."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .alignment import AlignmentModels, align_corpus, train_bidirectional
from .corpus import Corpus
from .decoder import DecoderParams, FeatureWeights, Translation, decode_corpus
from .lm import NGramModel, train_lm
from .phrases import PhraseTable, build_phrase_table
from .tuning import tune_weights

log = logging.getLogger(__name__)


@dataclass
class SystemSettings:
    em_iterations: int = 10
    use_null: bool = True
    model2_iterations: int = 0
    heuristic: str = "grow-diag-final"
    max_phrase_len: int = 7
    lm_order: int = 5
    lm_discount: str = "fixed"
    discount: float = 0.75
    decoder: DecoderParams = field(default_factory=DecoderParams)
    weights: FeatureWeights = field(default_factory=FeatureWeights)
    tune: bool = False
    tune_size: int = 0
    tune_iterations: int = 3
    nbest_size: int = 100
    seed: int = 0
    threads: int = 1

    def snapshot(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k not in ("decoder", "weights")}
        d["decoder"] = asdict(self.decoder)
        d["weights"] = self.weights.as_dict()
        return d


@dataclass
class TranslationSystem:
    ptable: PhraseTable
    lm: NGramModel
    weights: FeatureWeights
    params: DecoderParams
    alignment: AlignmentModels | None = None

    def translate(self, sentences: Sequence[Sequence[str]], threads: int = 1) -> list[Translation]:
        return decode_corpus(sentences, self.ptable, self.lm, self.weights, self.params, threads)


def train_system(train: Corpus, settings: SystemSettings | None = None,
                 lm_text: Sequence[Sequence[str]] | None = None,
                 tune: Corpus | None = None) -> TranslationSystem:
    """Align, extract and score phrases, build the LM, optionally tune.

    The LM is trained on ``lm_text`` when given, otherwise on the target side
    of ``train``.
    """
    s = settings or SystemSettings()
    models = train_bidirectional(train, s.em_iterations, s.use_null, s.model2_iterations)
    alignments = align_corpus(train, models, s.heuristic)
    ptable = build_phrase_table(train, alignments, models.forward, models.reverse, s.max_phrase_len)
    log.info("phrase table: %d entries", len(ptable))
    lm = train_lm(lm_text if lm_text is not None else train.targets(), s.lm_order, s.lm_discount, s.discount)
    weights = s.weights
    if s.tune and tune is not None and len(tune):
        weights = tune_weights(
            tune.sources(), tune.targets(), ptable, lm, s.decoder, weights,
            s.tune_iterations, s.nbest_size, s.seed,
        )
    return TranslationSystem(ptable, lm, weights, s.decoder, models)
