"""Trainable parameter container and matrix serialization."""

import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError, CorpusFormatError, ShapeError

DEFAULT_DTYPE = np.float32

# 2-D array, row-major
Matrix = np.ndarray

_MATRIX_HEADER = struct.Struct("<II")


@dataclass
class ParamTensor:
    """A trainable matrix together with its accumulated gradient."""

    value: Matrix
    name: str = ""
    grad: Matrix = field(init=False, repr=False)

    def __post_init__(self):
        self.value = np.asarray(self.value)
        if self.value.ndim != 2:
            raise ShapeError(
                f"Parameter '{self.name}' must be 2-D", self.value.shape
            )
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def zero_grad(self) -> None:
        """Reset the accumulated gradient to zeros."""
        self.grad = np.zeros_like(self.value)

    def accumulate(self, grad: Matrix) -> None:
        """Add ``grad`` into the accumulated gradient."""
        if grad.shape != self.value.shape:
            raise ShapeError(
                f"Gradient for '{self.name}' has the wrong shape",
                grad.shape,
                self.value.shape,
            )
        self.grad = self.grad + grad

    def copy(self) -> "ParamTensor":
        return ParamTensor(self.value.copy(), name=self.name)

    @classmethod
    def zeros(
        cls, rows: int, cols: int, name: str = "", dtype=DEFAULT_DTYPE
    ) -> "ParamTensor":
        return cls(np.zeros((rows, cols), dtype=dtype), name=name)

    @classmethod
    def glorot(
        cls,
        rows: int,
        cols: int,
        rng: np.random.Generator,
        name: str = "",
        dtype=DEFAULT_DTYPE,
    ) -> "ParamTensor":
        return cls(glorot_uniform(rows, cols, rng, dtype), name=name)


def glorot_uniform(
    fan_in: int, fan_out: int, rng: np.random.Generator, dtype=DEFAULT_DTYPE
) -> Matrix:
    """Uniform init in +/- sqrt(6 / (fan_in + fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ArgumentError(f"Fan sizes must be positive, got {fan_in}x{fan_out}")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


def encode_matrix(matrix: Matrix) -> bytes:
    """Serialize a matrix: (rows, cols) as little-endian uint32, then float32 values."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ShapeError("Only 2-D matrices can be serialized", matrix.shape)
    rows, cols = matrix.shape
    payload = np.ascontiguousarray(matrix, dtype="<f4").tobytes()
    return _MATRIX_HEADER.pack(rows, cols) + payload


def decode_matrix(data: bytes, offset: int = 0) -> tuple[Matrix, int]:
    """
    Decode one matrix written by ``encode_matrix``.

    Returns:
        The matrix (float32) and the offset just past it
    """
    if len(data) - offset < _MATRIX_HEADER.size:
        raise CorpusFormatError("Truncated matrix header")
    rows, cols = _MATRIX_HEADER.unpack_from(data, offset)
    offset += _MATRIX_HEADER.size
    size = rows * cols * 4
    if len(data) - offset < size:
        raise CorpusFormatError(
            f"Truncated matrix payload: expected {size} bytes for {rows}x{cols}"
        )
    values = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=offset)
    return values.reshape(rows, cols).astype(np.float32), offset + size
