"""Random stream derivation.

Every sampler takes a seed and derives independent child streams from it
through :class:`numpy.random.SeedSequence` spawn keys.  Work is split into
fixed-size blocks, each with its own stream, so results depend only on the
seed and the sample count, never on how many threads did the work.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar, Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, None]

BLOCK_SIZE = 2048

T = TypeVar("T")


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def child(seed: SeedLike, *key: int) -> np.random.SeedSequence:
    """Child seed sequence addressed by ``key`` (stable, order independent)."""
    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(key))


def stream(seed: SeedLike, *key: int) -> np.random.Generator:
    """Generator for the child stream ``key`` of ``seed``."""
    return np.random.Generator(np.random.PCG64(child(seed, *key)))


def generator(seed: Union[SeedLike, np.random.Generator]) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(as_seed_sequence(seed)))


def blocks(size: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    return [(lo, min(lo + block_size, size)) for lo in range(0, size, block_size)]


def run_blocks(
    fn: Callable[[np.random.Generator, int, int], T],
    size: int,
    seed: SeedLike,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> list[T]:
    """Call ``fn(gen, lo, hi)`` for every block and return results in block order.

    Block ``b`` always gets ``stream(seed, b)``; ``threads`` only caps the
    number of workers.
    """
    spans = blocks(size, block_size)
    gens = [stream(seed, b) for b in range(len(spans))]
    if threads <= 1 or len(spans) <= 1:
        return [fn(g, lo, hi) for g, (lo, hi) in zip(gens, spans)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futures = [ex.submit(fn, g, lo, hi) for g, (lo, hi) in zip(gens, spans)]
        return [f.result() for f in futures]


def entropy_seed() -> int:
    """Fresh 64-bit seed from OS entropy, for runs without an explicit seed."""
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)
