"""Log ingestion: tokenization, vocabulary, encoding, dedup, splits and synthetic corpora."""

from .dataset import dedup, split, split_sizes
from .io import load_encoded, read_corpus, save_encoded, write_corpus
from .records import (
    PAD_ID,
    UNK_ID,
    EncodedLog,
    Label,
    LogRecord,
    Origin,
    ids_matrix,
    label_counts,
)
from .synth import synth_corpus
from .tokenizer import NUM_TOKEN, tokenize
from .vocab import Vocabulary, build_vocab, decode, encode

__all__ = [
    "PAD_ID",
    "UNK_ID",
    "NUM_TOKEN",
    "Label",
    "Origin",
    "LogRecord",
    "EncodedLog",
    "Vocabulary",
    "ids_matrix",
    "label_counts",
    "tokenize",
    "build_vocab",
    "encode",
    "decode",
    "dedup",
    "split",
    "split_sizes",
    "synth_corpus",
    "read_corpus",
    "write_corpus",
    "save_encoded",
    "load_encoded",
]
