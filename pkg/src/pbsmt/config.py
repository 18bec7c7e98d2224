"""Pipeline configuration: one registry drives both the config file and the flags.

The file format is INI-style ``key = value`` under section headers. Every key
has exactly one command-line flag (``--key-name``) and vice versa.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

from .errors import ValidationError


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Option:
    key: str
    section: str
    kind: Callable[[str], Any]
    default: Any
    help: str
    is_path: bool = False
    lo: float | None = None
    hi: float | None = None

    @property
    def flag(self) -> str:
        return "--" + self.key.replace("_", "-")


def _path(text):
    return str(text)


OPTIONS: tuple[Option, ...] = (
    # data
    Option("src", "data", _path, None, "source-side text, one sentence per line", True),
    Option("tgt", "data", _path, None, "target-side text, line-aligned with --src", True),
    Option("out_src", "data", _path, None, "output source-side file", True),
    Option("out_tgt", "data", _path, None, "output target-side file", True),
    Option("out_scores", "data", _path, None, "output similarity sidecar kept in step with the pairs", True),
    Option("scores", "data", _path, None, "similarity sidecar, one score in [0,1] per line", True),
    Option("translit_table", "data", _path, None, "transliteration table, 'grapheme<TAB>replacement' lines", True),
    Option("cleaning_rules", "data", _path, None, "cleaning rules file (defaults to the packaged rules)", True),
    Option("lm_text", "data", _path, None, "monolingual target text for the language model", True),
    Option("input", "data", _path, None, "input text file", True),
    Option("output", "data", _path, None, "output text file (stdout when omitted)", True),
    Option("hyp", "data", _path, None, "hypothesis file for BLEU", True),
    Option("ref", "data", _path, None, "reference file for BLEU", True),
    Option("report", "data", _path, None, "CSV report path (stdout when omitted)", True),
    Option("bpe_model", "data", _path, None, "BPE model file", True),
    Option("alignment", "data", _path, None, "word alignment file in Pharaoh format", True),
    Option("ttable", "data", _path, None, "lexical table t(target|source)", True),
    Option("ttable_rev", "data", _path, None, "lexical table t(source|target)", True),
    Option("phrase_table", "data", _path, None, "phrase table file", True),
    Option("lm", "data", _path, None, "ARPA language model file", True),
    Option("weights", "data", _path, None, "feature weights file ('name = value' lines)", True),
    Option("weights_out", "data", _path, None, "where tuned weights are written", True),
    Option("nbest", "data", _path, None, "n-best list output file", True),
    # corpus
    Option("threshold", "corpus", float, 0.9, "minimum similarity score kept by the filter", lo=0.0, hi=1.0),
    Option("tokenize", "corpus", _bool, False, "split leading/trailing punctuation into tokens before use"),
    Option("bpe_merges", "corpus", int, 32000, "number of BPE merge operations", lo=0),
    # model
    Option("em_iterations", "model", int, 10, "IBM Model 1 EM iterations", lo=0),
    Option("model2_iterations", "model", int, 0, "IBM Model 2 refinement iterations (0 disables)", lo=0),
    Option("use_null", "model", _bool, True, "allow alignment to the NULL source word"),
    Option("heuristic", "model", str, "grow-diag-final", "symmetrization heuristic"),
    Option("max_phrase_len", "model", int, 7, "maximum phrase length", lo=1),
    Option("lm_order", "model", int, 5, "language model order", lo=1),
    Option("lm_discount", "model", str, "fixed", "discount policy: fixed or count-of-counts"),
    Option("discount", "model", float, 0.75, "Kneser-Ney absolute discount", lo=0.0, hi=1.0),
    # decoder
    Option("stack_size", "decoder", int, 100, "hypotheses kept per stack (0 = unlimited)", lo=0),
    Option("beam_threshold", "decoder", float, 1e-5, "relative beam threshold (0 disables)", lo=0.0, hi=1.0),
    Option("distortion_limit", "decoder", int, 6, "maximum reordering jump (-1 = unlimited)", lo=-1),
    Option("ttable_limit", "decoder", int, 20, "translation options per source span (0 = unlimited)", lo=0),
    Option("oov_penalty", "decoder", float, -10.0, "fixed log10 cost of copying an unknown word"),
    Option("nbest_size", "decoder", int, 100, "entries per sentence in n-best lists", lo=1),
    # tuning
    Option("tune", "tuning", _bool, False, "tune weights on a held-out slice of the training data"),
    Option("tune_size", "tuning", int, 0, "pairs held out for tuning in experiments", lo=0),
    Option("tune_iterations", "tuning", int, 3, "decode/optimize rounds", lo=1),
    # experiment
    Option("variant", "experiment", str, "baseline", "comma-separated variants: baseline, romanized, inverted"),
    Option("folds", "experiment", int, 4, "cross-validation folds", lo=2),
    Option("test_size", "experiment", int, 0, "single hold-out test size instead of k-fold (0 = k-fold)", lo=0),
    Option("seed", "experiment", int, 0, "seed for every random choice"),
    Option("threads", "experiment", int, 0, "worker threads (0 = PBSMT_THREADS or 1)", lo=0),
    Option("log_level", "experiment", str, "warning", "logging level"),
)

OPTION_BY_KEY = {o.key: o for o in OPTIONS}


def _make_config_class():
    ns = {"__annotations__": {}}
    for o in OPTIONS:
        ns["__annotations__"][o.key] = Any
        ns[o.key] = field(default=o.default)
    return dataclass(type("PipelineConfig", (), ns))


PipelineConfig = _make_config_class()
PipelineConfig.__doc__ = "Every tunable of the pipeline; field names equal config keys."


def _convert(opt: Option, value, origin: str):
    if value is None:
        return None
    try:
        v = opt.kind(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{origin}: bad value for {opt.key}: {exc}") from None
    if opt.lo is not None and v < opt.lo or opt.hi is not None and v > opt.hi:
        raise ValidationError(f"{origin}: {opt.key} = {v} outside [{opt.lo}, {opt.hi}]")
    return v


def load_config(path) -> dict[str, Any]:
    """Parse a config file into ``{key: value}``; paths resolve relative to it."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}".replace("\n", " ")) from None
    values: dict[str, Any] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            opt = OPTION_BY_KEY.get(key)
            if opt is None:
                raise ValidationError(f"{path}: unknown key {key!r} in [{section}]")
            if opt.section != section:
                raise ValidationError(f"{path}: key {key!r} belongs in [{opt.section}], not [{section}]")
            raw = raw.strip()
            if raw == "":
                continue
            if opt.is_path:
                p = Path(raw).expanduser()
                raw = str(p if p.is_absolute() else (path.parent / p))
            values[key] = _convert(opt, raw, str(path))
    return values


def build_config(file_values: dict | None = None, flag_values: dict | None = None):
    """Defaults, overridden by config-file values, overridden by flags."""
    merged = {o.key: o.default for o in OPTIONS}
    merged.update(file_values or {})
    for k, v in (flag_values or {}).items():
        if v is not None:
            merged[k] = _convert(OPTION_BY_KEY[k], v, "command line")
    return PipelineConfig(**merged)


def dump_config(cfg) -> str:
    """Render a config back into the file format (unset keys omitted)."""
    out = []
    for section in dict.fromkeys(o.section for o in OPTIONS):
        rows = []
        for o in OPTIONS:
            if o.section != section:
                continue
            v = getattr(cfg, o.key)
            if v is None:
                continue
            rows.append(f"{o.key} = {str(v).lower() if isinstance(v, bool) else v}")
        if rows:
            out.append(f"[{section}]")
            out.extend(rows)
            out.append("")
    return "\n".join(out)


def config_keys() -> list[str]:
    return [f.name for f in fields(PipelineConfig)]
