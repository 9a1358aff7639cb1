"""Counter-based random substreams.

Every random draw comes from a Philox generator keyed by (seed, task ids), so
results never depend on how work is split across threads.
"""
from __future__ import annotations

import numpy as np

BLOCK = 8192


def substream(seed: int, *task: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(t) for t in task))
    return np.random.Generator(np.random.Philox(ss))


def blocks(n: int, block: int = BLOCK):
    """Yield (block_index, start, stop) covering range(n)."""
    for b, start in enumerate(range(0, n, block)):
        yield b, start, min(n, start + block)
