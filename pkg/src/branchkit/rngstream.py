"""Deterministic seed derivation for replicate streams.

Every stochastic routine in the package takes a single integer seed.  When a
routine runs many replicates, each replicate gets its own substream whose
seed is a hash of (master seed, a short routine tag, replicate index).  The
result is reproducible regardless of execution order, so ensembles can be
evaluated serially, chunked, or in parallel without changing any number.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "derive_seeds", "generator"]

# 63 bits so derived seeds stay representable as int64 (numba kernel arg)
_MASK = 0x7FFFFFFFFFFFFFFF


def derive_seed(master_seed: int, tag: str, index: int = 0) -> int:
    """Return a 63-bit seed derived from (master_seed, tag, index)."""
    payload = f"{int(master_seed)}:{tag}:{int(index)}".encode()
    digest = hashlib.sha256(payload).digest()
    value = int.from_bytes(digest[:8], "little") & _MASK
    # 0 is a degenerate state for xorshift-family generators
    return value if value != 0 else 1

def derive_seeds(master_seed: int, tag: str, count: int) -> np.ndarray:
    """Vector of per-replicate seeds, dtype uint64."""
    out = np.empty(count, dtype=np.uint64)
    for i in range(count):
        out[i] = derive_seed(master_seed, tag, i)
    return out

def generator(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """NumPy generator on the derived stream."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, tag, index)))
