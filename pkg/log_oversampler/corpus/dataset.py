"""Deduplication and train/validation/test splitting."""

import logging
import math
from collections.abc import Sequence
from fractions import Fraction
from typing import TypeVar

import numpy as np

from ..config.models import SplitSpec
from ..errors import ArgumentError

logger = logging.getLogger(__name__)

T = TypeVar("T")


def dedup(records: Sequence[T]) -> list[T]:
    """
    Drop repeated records, keeping the first occurrence.

    Records are compared by their (ids, label) pair; the origin tag is ignored.
    """
    seen: set = set()
    kept = []
    for record in records:
        key = (record.ids, int(record.label))
        if key in seen:
            continue
        seen.add(key)
        kept.append(record)
    return kept


def _complement(fraction: float) -> Fraction:
    # decimal reading of the float so 0.95 is exactly 19/20
    return 1 - Fraction(repr(fraction))


def split_sizes(total: int, spec: SplitSpec) -> tuple[int, int, int]:
    """
    Sizes of (train, validation, test) for ``total`` records.

    The training pool is ``floor(total * (1 - test_fraction))`` and the train part is
    ``floor(pool * (1 - val_fraction_of_train))``.
    """
    pool = math.floor(total * _complement(spec.test_fraction))
    n_train = math.floor(pool * _complement(spec.val_fraction_of_train))
    sizes = (n_train, pool - n_train, total - pool)
    if min(sizes) < 1:
        raise ArgumentError(
            f"Split of {total} records leaves an empty part: train/val/test = {sizes}"
        )
    return sizes


def split(records: Sequence[T], spec: SplitSpec) -> tuple[list[T], list[T], list[T]]:
    """
    Partition records into (train, validation, test).

    With ``spec.shuffle`` the order is a permutation drawn from ``spec.seed``.
    """
    n_train, n_val, _ = split_sizes(len(records), spec)
    if spec.shuffle:
        order = np.random.default_rng(spec.seed).permutation(len(records))
    else:
        order = np.arange(len(records))
    shuffled = [records[i] for i in order]
    train = shuffled[:n_train]
    val = shuffled[n_train : n_train + n_val]
    test = shuffled[n_train + n_val :]
    logger.info(f"Split {len(records)} records into {len(train)}/{len(val)}/{len(test)}")
    return train, val, test
