"""``pbsmt`` command-line entry point.

Every subcommand accepts ``--config FILE`` plus one flag per config key;
flags override the file. Exit codes: 0 success, 2 missing file, 3 invalid
input or settings, 4 decoding/tuning failure. Errors are reported as one
line on stderr: ``pbsmt: error code=<n> kind=<kind>: <message>``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from ._accel import resolve_threads
from .config import OPTIONS, OPTION_BY_KEY, build_config, load_config
from .errors import PbsmtError, ValidationError

log = logging.getLogger("pbsmt")

# subcommand -> (help, required keys, input-file keys that must exist)
COMMANDS = {
    "preprocess": ("clean, tokenize and deduplicate raw parallel text", ("src", "tgt", "out_src", "out_tgt"), ("src", "tgt", "scores", "cleaning_rules")),
    "filter": ("keep pairs whose similarity score reaches the threshold", ("src", "tgt", "scores", "out_src", "out_tgt"), ("src", "tgt", "scores")),
    "analyze-lengths": ("histogram of source/target length differences", ("src", "tgt"), ("src", "tgt")),
    "romanize": ("transliterate both sides with a grapheme table", ("src", "tgt", "translit_table", "out_src", "out_tgt"), ("src", "tgt", "translit_table")),
    "invert": ("reverse the source token order", ("src", "tgt", "out_src", "out_tgt"), ("src", "tgt")),
    "bpe-train": ("learn BPE merges from tokenized text", ("input", "bpe_model"), ("input",)),
    "bpe-apply": ("segment tokenized text with a BPE model", ("bpe_model", "input"), ("bpe_model", "input")),
    "align": ("train IBM models both ways and write symmetrized alignments", ("src", "tgt", "alignment"), ("src", "tgt")),
    "extract-phrases": ("extract and score a phrase table", ("src", "tgt", "alignment", "ttable", "ttable_rev", "phrase_table"), ("src", "tgt", "alignment", "ttable", "ttable_rev")),
    "train-lm": ("train a Kneser-Ney language model and write ARPA", ("lm",), ("lm_text", "input")),
    "translate": ("decode sentences with a phrase table and LM", ("phrase_table", "lm", "input"), ("phrase_table", "lm", "input", "weights")),
    "tune": ("tune feature weights on a tune set (--src / --tgt)", ("phrase_table", "lm", "src", "tgt", "weights_out"), ("phrase_table", "lm", "src", "tgt", "weights")),
    "bleu": ("corpus BLEU of --hyp against --ref", ("hyp", "ref"), ("hyp", "ref")),
    "crossval": ("k-fold cross-validated BLEU of the baseline system", ("src", "tgt"), ("src", "tgt", "lm_text")),
    "experiment": ("run baseline / romanized / inverted experiments", ("src", "tgt"), ("src", "tgt", "translit_table", "lm_text")),
}


def _option_help(opt) -> str:
    default = "" if opt.default is None else f" (default: {opt.default})"
    return f"{opt.help}{default} [config: {opt.section}.{opt.key}]"


class _Parser(argparse.ArgumentParser):
    """Usage errors become validation errors (exit 3, one-line message)."""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="config file with [section] key = value lines")
    groups = {}
    for opt in OPTIONS:
        if opt.section not in groups:
            groups[opt.section] = common.add_argument_group(f"[{opt.section}] options")
        metavar = "PATH" if opt.is_path else opt.key.upper()
        groups[opt.section].add_argument(opt.flag, dest=opt.key, default=None, metavar=metavar, help=_option_help(opt))
    parser = _Parser(prog="pbsmt", description="Phrase-based statistical machine translation toolkit.")
    parser.add_argument("--version", action="version", version=f"pbsmt {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, (help_text, required, _) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text,
                           description=f"{help_text}. Requires: {', '.join('--' + k.replace('_', '-') for k in required)}.")
        p.set_defaults(command=name)
    return parser


def _setup(args):
    file_values = load_config(args.config) if args.config else {}
    flags = {opt.key: getattr(args, opt.key) for opt in OPTIONS}
    cfg = build_config(file_values, flags)
    _, required, inputs = COMMANDS[args.command]
    missing = [k for k in required if getattr(cfg, k) is None]
    if args.command == "train-lm" and cfg.lm_text is None and cfg.input is None:
        missing.append("lm_text")
    if missing:
        raise ValidationError("missing required setting(s): " + ", ".join(OPTION_BY_KEY[k].flag for k in missing))
    for k in inputs:
        p = getattr(cfg, k)
        if p is not None and not Path(p).exists():
            raise FileNotFoundError(f"{OPTION_BY_KEY[k].flag}: no such file: {p}")
    level = getattr(logging, str(cfg.log_level).upper(), None)
    if not isinstance(level, int):
        raise ValidationError(f"unknown log level {cfg.log_level!r}")
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    cfg.threads = resolve_threads(cfg.threads)
    return cfg


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _emit(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _token_lines(path, tokenize_flag: bool):
    from .corpus import read_lines, tokenize

    lines = read_lines(path)
    if tokenize_flag:
        return [list(tokenize(s)) for s in lines]
    return [s.split() for s in lines]


def _parallel(cfg):
    from .corpus import Corpus, SentencePair, read_raw_parallel, tokenize

    pairs = []
    for k, (s, t) in enumerate(read_raw_parallel(cfg.src, cfg.tgt), 1):
        src = tokenize(s) if cfg.tokenize else s.split()
        tgt = tokenize(t) if cfg.tokenize else t.split()
        if not src or not tgt:
            raise ValidationError(f"line {k}: empty side; run 'pbsmt preprocess' first")
        pairs.append(SentencePair(src, tgt))
    return Corpus(tuple(pairs))


def _decoder_params(cfg):
    from .decoder import DecoderParams

    return DecoderParams(
        stack_size=cfg.stack_size or None,
        beam_threshold=cfg.beam_threshold or None,
        distortion_limit=None if cfg.distortion_limit < 0 else cfg.distortion_limit,
        max_phrase_len=cfg.max_phrase_len,
        oov_penalty=cfg.oov_penalty,
        ttable_limit=cfg.ttable_limit or None,
    )


def _weights(cfg):
    from .decoder import FeatureWeights

    return FeatureWeights.load(cfg.weights) if cfg.weights else FeatureWeights()


def _system_settings(cfg):
    from .pipeline import SystemSettings

    return SystemSettings(
        em_iterations=cfg.em_iterations, use_null=cfg.use_null, model2_iterations=cfg.model2_iterations,
        heuristic=cfg.heuristic, max_phrase_len=cfg.max_phrase_len, lm_order=cfg.lm_order,
        lm_discount=cfg.lm_discount, discount=cfg.discount, decoder=_decoder_params(cfg),
        weights=_weights(cfg), tune=cfg.tune, tune_size=cfg.tune_size,
        tune_iterations=cfg.tune_iterations, nbest_size=cfg.nbest_size, seed=cfg.seed, threads=cfg.threads,
    )


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_preprocess(cfg):
    from .corpus import (
        clean_pair, dedup, load_cleaning_rules, read_raw_parallel, read_scores, tokenize, write_lines,
        write_parallel, Corpus, SentencePair,
    )

    rules = load_cleaning_rules(cfg.cleaning_rules)
    raw = read_raw_parallel(cfg.src, cfg.tgt)
    scores = read_scores(cfg.scores) if cfg.scores else [None] * len(raw)
    if len(scores) != len(raw):
        raise ValidationError(f"{len(scores)} scores for {len(raw)} pairs")
    kept = []
    for (s, t), sc in zip(raw, scores):
        if cfg.tokenize:
            s, t = " ".join(tokenize(s)), " ".join(tokenize(t))
        p = clean_pair((s, t, sc), rules)
        if p is not None:
            kept.append(p)
    corpus = dedup(Corpus(tuple(kept)))
    write_parallel(corpus, cfg.out_src, cfg.out_tgt)
    if cfg.out_scores and cfg.scores:
        write_lines(cfg.out_scores, (repr(p.similarity) for p in corpus))
    log.info("preprocess: kept %d of %d pairs", len(corpus), len(raw))
    print(f"kept {len(corpus)} of {len(raw)} pairs")


def cmd_filter(cfg):
    from .corpus import read_scores, similarity_filter, write_parallel

    corpus = _parallel(cfg)
    kept = similarity_filter(corpus, read_scores(cfg.scores), cfg.threshold)
    write_parallel(kept, cfg.out_src, cfg.out_tgt)
    print(f"kept {len(kept)} of {len(corpus)} pairs at threshold {cfg.threshold}")


def cmd_analyze_lengths(cfg):
    from .corpus import LENGTH_CATEGORIES, length_diff_histogram

    hist = length_diff_histogram(_parallel(cfg))
    if cfg.report:
        _emit(cfg.report, hist.to_csv())
        for cat in LENGTH_CATEGORIES:
            print(f"{cat}: {hist.counts[cat]} ({hist.percent(cat):.2f}%)")
    else:
        sys.stdout.write(hist.to_csv())
    print(f"under 3 tokens: {hist.under_three} of {hist.total} ({hist.under_three_percent:.2f}%)",
          file=sys.stderr if not cfg.report else sys.stdout)


def cmd_romanize(cfg):
    from .corpus import TransliterationTable, romanize, write_parallel

    table = TransliterationTable.load(cfg.translit_table)
    corpus = _parallel(cfg)
    write_parallel(corpus.replace(romanize(p, table) for p in corpus), cfg.out_src, cfg.out_tgt)


def cmd_invert(cfg):
    from .corpus import invert_source, write_parallel

    corpus = _parallel(cfg)
    write_parallel(corpus.replace(invert_source(p) for p in corpus), cfg.out_src, cfg.out_tgt)


def cmd_bpe_train(cfg):
    from .bpe import bpe_train

    model = bpe_train(_token_lines(cfg.input, cfg.tokenize), cfg.bpe_merges)
    model.save(cfg.bpe_model)
    print(f"learned {model.merge_count} merges")


def cmd_bpe_apply(cfg):
    from .bpe import BpeModel, encode_sentence

    model = BpeModel.load(cfg.bpe_model)
    lines = [" ".join(encode_sentence(model, toks)) for toks in _token_lines(cfg.input, cfg.tokenize)]
    _emit(cfg.output, "".join(line + "\n" for line in lines))


def cmd_align(cfg):
    from .alignment import align_corpus, train_bidirectional, write_pharaoh

    corpus = _parallel(cfg)
    models = train_bidirectional(corpus, cfg.em_iterations, cfg.use_null, cfg.model2_iterations)
    write_pharaoh(cfg.alignment, align_corpus(corpus, models, cfg.heuristic))
    if cfg.ttable:
        models.forward.save(cfg.ttable)
    if cfg.ttable_rev:
        models.reverse.save(cfg.ttable_rev)


def cmd_extract_phrases(cfg):
    from .alignment import TranslationTable, read_pharaoh
    from .phrases import build_phrase_table

    corpus = _parallel(cfg)
    alignments = read_pharaoh(cfg.alignment, corpus)
    table = build_phrase_table(
        corpus, alignments, TranslationTable.load(cfg.ttable), TranslationTable.load(cfg.ttable_rev), cfg.max_phrase_len
    )
    table.save(cfg.phrase_table)
    print(f"{len(table)} phrase pairs")


def cmd_train_lm(cfg):
    from .lm import train_lm

    text = _token_lines(cfg.lm_text or cfg.input, cfg.tokenize)
    train_lm(text, cfg.lm_order, cfg.lm_discount, cfg.discount).write_arpa(cfg.lm)


def cmd_translate(cfg):
    from .decoder import decode_corpus, nbest, write_nbest
    from .lm import NGramModel
    from .phrases import PhraseTable

    ptable = PhraseTable.load(cfg.phrase_table)
    lm = NGramModel.read_arpa(cfg.lm)
    weights, params = _weights(cfg), _decoder_params(cfg)
    sentences = _token_lines(cfg.input, cfg.tokenize)
    results = decode_corpus(sentences, ptable, lm, weights, params, cfg.threads)
    _emit(cfg.output, "".join(" ".join(r.tokens) + "\n" for r in results))
    if cfg.nbest:
        lists = [nbest(s, ptable, lm, weights, params, cfg.nbest_size, sentence_id=k + 1) for k, s in enumerate(sentences)]
        write_nbest(cfg.nbest, lists)


def cmd_tune(cfg):
    from .lm import NGramModel
    from .phrases import PhraseTable
    from .tuning import tune_weights

    corpus = _parallel(cfg)
    w = tune_weights(
        corpus.sources(), corpus.targets(), PhraseTable.load(cfg.phrase_table), NGramModel.read_arpa(cfg.lm),
        _decoder_params(cfg), _weights(cfg), cfg.tune_iterations, cfg.nbest_size, cfg.seed,
    )
    w.save(cfg.weights_out)


def cmd_bleu(cfg):
    from .bleu import bleu

    report = bleu(_token_lines(cfg.hyp, cfg.tokenize), _token_lines(cfg.ref, cfg.tokenize))
    print(f"{report.bleu:.2f}")
    log.info(report.summary())


def _experiments(cfg, variants):
    from .corpus import TransliterationTable
    from .evaluation import ExperimentSettings, results_csv, results_table, run_experiment

    corpus = _parallel(cfg)
    table = TransliterationTable.load(cfg.translit_table) if cfg.translit_table else None
    lm_text = _token_lines(cfg.lm_text, cfg.tokenize) if cfg.lm_text else None
    settings = ExperimentSettings(
        _system_settings(cfg), cfg.folds, cfg.test_size, cfg.seed, cfg.threads, table, lm_text
    )
    results = [run_experiment(v, corpus, settings) for v in variants]
    if cfg.report:
        _emit(cfg.report, results_csv(results))
        sys.stdout.write(results_table(results))
    else:
        sys.stdout.write(results_csv(results))
        sys.stderr.write(results_table(results))


def cmd_crossval(cfg):
    _experiments(cfg, ["baseline"])


def cmd_experiment(cfg):
    from .evaluation import VARIANTS

    variants = [v.strip() for v in cfg.variant.split(",") if v.strip()]
    if "all" in variants:
        variants = list(VARIANTS)
    bad = [v for v in variants if v not in VARIANTS]
    if bad or not variants:
        raise ValidationError(f"unknown variant(s) {bad}; expected {', '.join(VARIANTS)}")
    _experiments(cfg, variants)


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def _fail(code: int, kind: str, message) -> int:
    msg = " ".join(str(message).split())
    print(f"pbsmt: error code={code} kind={kind}: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _setup(args)
        HANDLERS[args.command](cfg)
    except FileNotFoundError as exc:
        return _fail(2, "missing-file", exc)
    except PbsmtError as exc:
        return _fail(exc.exit_code, exc.kind, exc)
    except OSError as exc:
        return _fail(2, "io", exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
