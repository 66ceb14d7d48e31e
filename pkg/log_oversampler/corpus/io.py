"""Readers and writers for corpus text files and the encoded dataset cache."""

import logging
import struct
from pathlib import Path

import numpy as np

from ..errors import CorpusFormatError
from .records import EncodedLog, Label, LogRecord, Origin

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"LBDS"
DATASET_VERSION = 1
_DATASET_HEADER = struct.Struct("<4sIIII")


def read_corpus(path: str | Path) -> list[LogRecord]:
    """
    Read ``label<TAB>message`` lines; label is 1 (positive) or 0 (negative).

    Blank lines are ignored; anything else malformed raises CorpusFormatError.
    """
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            raw_label, sep, text = line.partition("\t")
            if not sep or raw_label not in ("0", "1") or not text.strip():
                raise CorpusFormatError(
                    f"{path}:{number}: expected 'label<TAB>message' with label 0 or 1"
                )
            records.append(LogRecord(Label(int(raw_label)), text))
    logger.info(f"Read {len(records)} records from {path}")
    return records


def write_corpus(records: list[LogRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(f"{int(record.label)}\t{record.text}\n")


def save_encoded(
    records: list[EncodedLog], vocab_size: int, length: int, path: str | Path
) -> None:
    """Write the LBDS cache: header, then per record a label byte and L uint32 ids."""
    body = bytearray()
    for record in records:
        if len(record.ids) != length:
            raise CorpusFormatError(f"Record of length {len(record.ids)} in a cache of length {length}")
        body.append(int(record.label))
        body.extend(np.asarray(record.ids, dtype="<u4").tobytes())
    header = _DATASET_HEADER.pack(
        DATASET_MAGIC, DATASET_VERSION, vocab_size, length, len(records)
    )
    Path(path).write_bytes(header + bytes(body))


def load_encoded(path: str | Path) -> tuple[list[EncodedLog], int, int]:
    """
    Read an LBDS cache.

    Returns:
        (records, vocab_size, length)
    """
    data = Path(path).read_bytes()
    if len(data) < _DATASET_HEADER.size:
        raise CorpusFormatError(f"{path}: truncated header")
    magic, version, vocab_size, length, count = _DATASET_HEADER.unpack_from(data)
    if magic != DATASET_MAGIC or version != DATASET_VERSION:
        raise CorpusFormatError(f"{path}: not an encoded dataset (magic {magic!r}, version {version})")
    stride = 1 + 4 * length
    if len(data) != _DATASET_HEADER.size + count * stride:
        raise CorpusFormatError(f"{path}: expected {count} records of {stride} bytes")

    records = []
    offset = _DATASET_HEADER.size
    for _ in range(count):
        label = Label(data[offset])
        ids = np.frombuffer(data, dtype="<u4", count=length, offset=offset + 1)
        records.append(EncodedLog(tuple(int(i) for i in ids), label, Origin.REAL))
        offset += stride
    return records, vocab_size, length
