"""Counter-based random streams.

Every draw is addressed by ``(seed, stream, block)``: a Philox generator keyed on
the seed and block number, with the stream tag in the high counter word. Work is
split into fixed-size blocks of paths, so path ``i`` always sees the same numbers
no matter how many threads run or how the blocks are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

BLOCK = 4096
_MASK64 = (1 << 64) - 1

# stream tags
NOISE = 1
BROWNIAN = 2
LIPSCHITZ = 3
DIAGNOSTIC = 4

T = TypeVar("T")


def block_generator(seed: int, block: int, stream: int = NOISE) -> np.random.Generator:
    key = (int(seed) & _MASK64) | ((int(block) & _MASK64) << 64)
    counter = np.array([0, 0, 0, int(stream) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def block_ranges(count: int, block: int = BLOCK) -> list[tuple[int, int, int]]:
    """``(block_id, start, stop)`` triples covering ``range(count)``."""
    return [(b, s, min(s + block, count)) for b, s in enumerate(range(0, count, block))]


def map_blocks(fn: Callable[[int, int, int], T], count: int, threads: int = 1,
               block: int = BLOCK) -> list[T]:
    """Apply ``fn(block_id, start, stop)`` to every block; results in block order."""
    ranges = block_ranges(count, block)
    if threads <= 1 or len(ranges) <= 1:
        return [fn(*r) for r in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))
