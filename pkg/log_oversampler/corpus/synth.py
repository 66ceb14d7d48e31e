"""Synthetic imbalanced log corpora for desk-scale runs."""

import math

import numpy as np

from ..errors import ArgumentError
from .records import Label, LogRecord

_SERVICES = ["scheduler", "gateway", "storage", "auth", "metadata", "compute", "network", "billing"]
_HOSTS = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"]
_USERS = ["admin", "svc", "nova", "glance", "cinder", "keystone"]
_RACKS = ["east", "west", "north", "south"]

_POSITIVE_TEMPLATES = [
    "service {service} started on {host} rack {rack} in {ms} ms",
    "heartbeat received from {host} by {service} latency {ms} ms",
    "instance {n} spawned successfully on host {host} for {user}",
    "user {user} logged in to {service} from {host}",
    "request GET {service} by {user} returned ok in {ms} ms",
    "cache refresh completed for {service} on {host} entries {n}",
    "scheduled job {service} finished on {host} status ok",
    "connection pool for {service} on {rack} resized to {n}",
    "checkpoint written for volume {n} on {host} rack {rack}",
    "health check passed for {service} on {host}",
]

_NEGATIVE_TEMPLATES = [
    "error failed to connect to {host} from {service} code {n}",
    "kernel panic fatal exception in {service} on {host}",
    "machine check interrupt on {host} rack {rack} uncorrectable",
    "timeout waiting for {service} lock held by {user} after {ms} seconds",
    "disk failure detected on {host} rack {rack} sector {n} unreadable",
    "segmentation fault in {service} worker on {host} core dumped",
    "authentication failure for {user} on {service} denied",
    "rts panic stopping execution on {host} rack {rack}",
    "parity error in {service} cache on {host} fatal",
    "critical link down {host} lost connection to {service}",
]


def _templates(pool: list[str], count: int) -> list[str]:
    # reuse the pool with a variant marker once it is exhausted
    return [
        pool[i % len(pool)] + ("" if i < len(pool) else f" variant {_ordinal(i // len(pool))}")
        for i in range(count)
    ]


def _ordinal(k: int) -> str:
    words = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"]
    return "-".join(words[int(d)] for d in str(k))


def _fill(template: str, rng: np.random.Generator) -> str:
    return template.format(
        service=rng.choice(_SERVICES),
        host=f"{rng.choice(_HOSTS)}-{rng.choice(_HOSTS)}",
        user=rng.choice(_USERS),
        n=int(rng.integers(0, 10_000)),
        ms=int(rng.integers(1, 5_000)),
        rack=rng.choice(_RACKS),
    )


def synth_corpus(
    n_total: int, negative_fraction: float, n_templates: int, seed: int
) -> list[LogRecord]:
    """
    Generate a templated corpus with ``round(n_total * negative_fraction)`` negatives.

    Positive templates read like normal service chatter; negative templates use
    error and failure phrasing. Half of ``n_templates`` (rounded up) are positive.
    """
    if n_templates < 2:
        raise ArgumentError(f"Need at least two templates, got {n_templates}")
    if not 0 < negative_fraction < 1:
        raise ArgumentError(f"negative_fraction must be in (0, 1), got {negative_fraction}")
    if n_total < 1:
        raise ArgumentError(f"n_total must be positive, got {n_total}")

    rng = np.random.default_rng(seed)
    positive = _templates(_POSITIVE_TEMPLATES, math.ceil(n_templates / 2))
    negative = _templates(_NEGATIVE_TEMPLATES, n_templates // 2)
    n_negative = math.floor(n_total * negative_fraction + 0.5)

    labels = np.full(n_total, int(Label.POSITIVE))
    labels[rng.permutation(n_total)[:n_negative]] = int(Label.NEGATIVE)

    records = []
    for label in labels:
        pool = negative if label == Label.NEGATIVE else positive
        template = pool[int(rng.integers(0, len(pool)))]
        records.append(LogRecord(Label(int(label)), _fill(template, rng)))
    return records
