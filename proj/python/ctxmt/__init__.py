"""Context-aware machine translation toolkit (CXMI, CoWord dropout, contrastive evaluation)."""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    Corpus,
    DataError,
    Example,
    Model,
    NumericalError,
    Tokenizer,
    bleu,
    coword_dropout,
    load_checkpoint,
    make_pronoun_corpus,
    pronoun_task_words,
)

MASK = 5

__all__ = [
    "ConfigError", "Corpus", "DataError", "Example", "Model", "NumericalError", "Tokenizer", "MASK",
    "bleu", "corpus_cxmi", "coword_dropout", "cxmi_sweep", "enumeration_model", "evaluate_contrastive",
    "load_checkpoint", "make_pronoun_corpus", "point_biserial", "pronoun_task_words", "run_cli", "true_cmi",
]


def corpus_cxmi(model, corpus, tokenizer, side="target", k=1, per_word=False, threads=1):
    """Corpus CXMI report as a dict (corpus_cxmi, std_error, per_sample, ...)."""
    return _json.loads(_core.corpus_cxmi(model, corpus, tokenizer, side, k, per_word, threads))


def cxmi_sweep(model, corpus, tokenizer, side="target", k_max=4, threads=1):
    return _json.loads(_core.cxmi_sweep(model, corpus, tokenizer, side, k_max, threads))


def evaluate_contrastive(model, tokenizer, path, format="simple-json", side="target", k=1):
    return _json.loads(_core.evaluate_contrastive(model, tokenizer, str(path), format, side, k))


def point_biserial(values, labels):
    return _json.loads(_core.point_biserial(list(values), [int(x) for x in labels]))


def enumeration_model(channel):
    """Exact model of a channel given as a dict (context/source/target symbols, joint)."""
    return _core.enumeration_model(_json.dumps(channel))


def true_cmi(channel):
    return _core.true_cmi(_json.dumps(channel))


def run_cli(*args):
    """Runs a ctxmt command in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
