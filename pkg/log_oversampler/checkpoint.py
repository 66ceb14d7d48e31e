"""LBAL checkpoint container: named sections of named float32 matrices."""

import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from .errors import CorpusFormatError, ShapeError
from .nn import Matrix, ParamTensor, decode_matrix, encode_matrix

CHECKPOINT_MAGIC = b"LBAL"
CHECKPOINT_VERSION = 1

_HEADER = struct.Struct("<4sII")
_NAME = struct.Struct("<H")
_SECTION = struct.Struct("<QI")

Section = dict[str, Matrix]


def _encode_name(name: str) -> bytes:
    raw = name.encode("utf-8")
    return _NAME.pack(len(raw)) + raw


def _decode_name(data: bytes, offset: int) -> tuple[str, int]:
    if offset + _NAME.size > len(data):
        raise CorpusFormatError("Checkpoint truncated inside a name")
    (size,) = _NAME.unpack_from(data, offset)
    offset += _NAME.size
    if offset + size > len(data):
        raise CorpusFormatError("Checkpoint truncated inside a name")
    return data[offset : offset + size].decode("utf-8"), offset + size


def encode_checkpoint(sections: Mapping[str, Mapping[str, Matrix]]) -> bytes:
    """
    Serialize sections in insertion order.

    Layout: magic, version, section count; per section its name, payload byte
    length and matrix count, then per matrix its name and ``encode_matrix`` bytes.
    """
    out = bytearray(_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(sections)))
    for section_name, matrices in sections.items():
        payload = bytearray()
        for name, matrix in matrices.items():
            payload += _encode_name(name)
            payload += encode_matrix(matrix)
        out += _encode_name(section_name)
        out += _SECTION.pack(len(payload), len(matrices))
        out += payload
    return bytes(out)


def decode_checkpoint(data: bytes) -> dict[str, Section]:
    if len(data) < _HEADER.size:
        raise CorpusFormatError("Checkpoint shorter than its header")
    magic, version, count = _HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC or version != CHECKPOINT_VERSION:
        raise CorpusFormatError(f"Not a checkpoint (magic {magic!r}, version {version})")

    sections: dict[str, Section] = {}
    offset = _HEADER.size
    for _ in range(count):
        section_name, offset = _decode_name(data, offset)
        if offset + _SECTION.size > len(data):
            raise CorpusFormatError(f"Checkpoint truncated in section '{section_name}'")
        length, n_matrices = _SECTION.unpack_from(data, offset)
        offset += _SECTION.size
        end = offset + length
        if end > len(data):
            raise CorpusFormatError(f"Section '{section_name}' runs past the end of the file")
        matrices: Section = {}
        for _ in range(n_matrices):
            name, offset = _decode_name(data, offset)
            matrices[name], offset = decode_matrix(data, offset)
        if offset != end:
            raise CorpusFormatError(f"Section '{section_name}' length does not match its matrices")
        sections[section_name] = matrices
    if offset != len(data):
        raise CorpusFormatError("Trailing bytes after the last checkpoint section")
    return sections


def save_checkpoint(path: str | Path, sections: Mapping[str, Mapping[str, Matrix]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(sections))


def load_checkpoint(path: str | Path) -> dict[str, Section]:
    return decode_checkpoint(Path(path).read_bytes())


def params_section(tensors: Mapping[str, ParamTensor]) -> Section:
    """Snapshot parameter values as a section."""
    return {name: np.asarray(p.value) for name, p in tensors.items()}


def restore_params(tensors: Mapping[str, ParamTensor], section: Mapping[str, Matrix]) -> None:
    """Load a section back into existing parameters of the same shapes."""
    mismatched = set(tensors) ^ set(section)
    if mismatched:
        raise CorpusFormatError(f"Checkpoint section does not match parameters: {sorted(mismatched)}")
    for name, p in tensors.items():
        if section[name].shape != p.shape:
            raise ShapeError(f"Checkpoint tensor '{name}' has the wrong shape", section[name].shape, p.shape)
        p.value = section[name].astype(p.value.dtype)
        p.zero_grad()
