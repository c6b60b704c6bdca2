"""Bitmask helpers shared by the masking/interaction machinery.

Subsets of the variable index set {1..n} are encoded as integer bitmasks:
bit i of the mask set means variable i+1 is in the subset, and coordinate i
of an input vector is the variable it refers to. Tables indexed "per subset"
are flat arrays of length 2**n whose position equals the bitmask.
"""

from __future__ import annotations

import numpy as np

# Hard cap: per-subset tables and transforms are Theta(2**n).
MAX_VARS = 16


def full_mask(n: int) -> int:
    return (1 << n) - 1


def popcount(mask: int) -> int:
    return int(mask).bit_count()


def popcounts(n: int) -> np.ndarray:
    """Popcount of every mask in [0, 2**n) as an int array."""
    out = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        out[(np.arange(1 << n) >> i) & 1 == 1] += 1
    return out


def bit_matrix(n: int) -> np.ndarray:
    """Boolean matrix of shape (2**n, n); row m column i is bit i of mask m."""
    masks = np.arange(1 << n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)


def members(mask: int, n: int) -> tuple[int, ...]:
    """Zero-based coordinate indices contained in the mask."""
    return tuple(i for i in range(n) if mask >> i & 1)


def table_order(size: int) -> int:
    """Number of variables n for a per-subset table of length 2**n."""
    n = int(size).bit_length() - 1
    if size <= 0 or (1 << n) != size:
        raise ValueError(f"table length {size} is not a power of two")
    if n > MAX_VARS:
        raise ValueError(f"table for n={n} variables exceeds the n <= {MAX_VARS} limit")
    return n


def check_num_vars(n: int) -> int:
    if n < 0:
        raise ValueError(f"number of variables must be non-negative, got {n}")
    if n > MAX_VARS:
        raise ValueError(
            f"n={n} input variables exceeds the n <= {MAX_VARS} limit "
            f"(per-subset tables grow as 2**n)"
        )
    return n
