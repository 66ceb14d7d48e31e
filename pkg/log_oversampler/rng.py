"""Named random substreams derived from one root seed."""

import zlib

import numpy as np


def _key(part: str | int) -> int:
    if isinstance(part, int):
        return part
    return zlib.crc32(part.encode("utf-8"))


def substream(seed: int, *names: str | int) -> np.random.Generator:
    """
    Create a generator for the substream identified by ``names``.

    The same (seed, names) pair always yields the same stream, independent of how
    many other streams were created before it.

    Args:
        seed: Root seed of the run
        names: Path of the stream, e.g. ``("gan", "chunk", 3)``

    Returns:
        A fresh numpy Generator
    """
    sequence = np.random.SeedSequence(
        entropy=seed, spawn_key=tuple(_key(n) for n in names)
    )
    return np.random.default_rng(sequence)


def child_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit seed from ``rng`` for handing to a nested component."""
    return int(rng.integers(0, 2**63 - 1))
