"""Exact AND-OR interaction decomposition of a masked-output table.

The table value at each subset splits into an AND channel and an OR channel,
controlled by a per-subset shift vector:

    and_channel[S] = 0.5 * table[S] + shift[S]
    or_channel[S]  = 0.5 * table[S] - shift[S]

AND effects are the alternating subset sums (the Mobius transform over the
subset lattice) of the AND channel; OR effects are the negated transform of
the complement-indexed OR channel:

    and_effects[T] =  sum_{L subset of T} (-1)^(|T|-|L|) * and_channel[L]
    or_effects[T]  = -sum_{L subset of T} (-1)^(|T|-|L|) * or_channel[N\\L]

The empty subset carries no interaction: its slots are stored as 0 and the
constant is the table's fully-masked value. Under this convention the effects
reconstruct the table exactly at every mask, for every shift vector:

    table[S] = bias + sum_{T subset of S, T nonempty} and_effects[T]
                    + sum_{T intersecting S}          or_effects[T]

Fast transforms are the standard in-place butterflies, O(n * 2**n). The
literal double-loop implementations are kept as independent test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bits
from .fileio import atomic_write_json
from .masking import MaskedOutputTable, mask_bits

# The literal per-subset double loop costs O(3**n); cap it.
BRUTEFORCE_MAX_VARS = 12


@dataclass
class InteractionDecomposition:
    """AND/OR interaction effects of one masked-output table.

    and_effects/or_effects are length-2**n arrays indexed by subset bitmask;
    the entries at mask 0 are unused and fixed at 0. bias is the table value
    on the fully masked input. shift is the channel-shift vector the
    decomposition was computed at.
    """

    n: int
    and_effects: np.ndarray
    or_effects: np.ndarray
    bias: float
    shift: np.ndarray
    source_table_id: str | None = None

    def __post_init__(self) -> None:
        bits.check_num_vars(self.n)
        size = 1 << self.n
        for name in ("and_effects", "or_effects", "shift"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (size,):
                raise ValueError(f"{name} must have shape ({size},), got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            setattr(self, name, arr)


def _as_values(table: "MaskedOutputTable | np.ndarray") -> np.ndarray:
    if isinstance(table, MaskedOutputTable):
        return table.values
    return np.asarray(table, dtype=np.float64)


def split_outputs(
    table: "MaskedOutputTable | np.ndarray", shift: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Split table values into AND and OR channels; their sum is the table."""
    values = _as_values(table)
    shift = np.asarray(shift, dtype=np.float64)
    if shift.shape != values.shape:
        raise ValueError(f"shift shape {shift.shape} does not match table shape {values.shape}")
    half = 0.5 * values
    return half + shift, half - shift


def mobius_subset(values: np.ndarray) -> np.ndarray:
    """Alternating subset-sum transform: out[T] = sum_{L<=T} (-1)^(|T|-|L|) v[L]."""
    out = np.array(values, dtype=np.float64)
    n = bits.table_order(out.size)
    for i in range(n):
        half = 1 << i
        pairs = out.reshape(-1, 2 * half)
        pairs[:, half:] -= pairs[:, :half]
    return out


def zeta_subset(values: np.ndarray) -> np.ndarray:
    """Subset-sum transform, the inverse of mobius_subset: out[S] = sum_{T<=S} v[T]."""
    out = np.array(values, dtype=np.float64)
    n = bits.table_order(out.size)
    for i in range(n):
        half = 1 << i
        pairs = out.reshape(-1, 2 * half)
        pairs[:, half:] += pairs[:, :half]
    return out


def mobius_and(and_channel: np.ndarray) -> np.ndarray:
    """AND interaction effects of the AND channel; empty-set slot stored as 0."""
    out = mobius_subset(and_channel)
    out[0] = 0.0
    return out


def mobius_or(or_channel: np.ndarray) -> np.ndarray:
    """OR interaction effects of the OR channel; empty-set slot stored as 0.

    Complement indexing (or_channel read at N\\L) is a plain reversal of the
    flat array, since mask and complement sum to 2**n - 1.
    """
    arr = np.asarray(or_channel, dtype=np.float64)
    out = -mobius_subset(arr[::-1])
    out[0] = 0.0
    return out


def mobius_and_bruteforce(and_channel: np.ndarray) -> np.ndarray:
    """Literal double loop over T and its subsets L. Test oracle only."""
    arr = np.asarray(and_channel, dtype=np.float64)
    n = bits.table_order(arr.size)
    if n > BRUTEFORCE_MAX_VARS:
        raise ValueError(f"brute-force transform limited to n <= {BRUTEFORCE_MAX_VARS}")
    out = np.zeros_like(arr)
    for t in range(1, arr.size):
        order_t = t.bit_count()
        acc = 0.0
        sub = t
        while True:
            sign = -1.0 if (order_t - sub.bit_count()) & 1 else 1.0
            acc += sign * arr[sub]
            if sub == 0:
                break
            sub = (sub - 1) & t
        out[t] = acc
    return out


def mobius_or_bruteforce(or_channel: np.ndarray) -> np.ndarray:
    """Literal complement-indexed alternating sum. Test oracle only."""
    arr = np.asarray(or_channel, dtype=np.float64)
    n = bits.table_order(arr.size)
    if n > BRUTEFORCE_MAX_VARS:
        raise ValueError(f"brute-force transform limited to n <= {BRUTEFORCE_MAX_VARS}")
    full = arr.size - 1
    out = np.zeros_like(arr)
    for t in range(1, arr.size):
        order_t = t.bit_count()
        acc = 0.0
        sub = t
        while True:
            sign = -1.0 if (order_t - sub.bit_count()) & 1 else 1.0
            acc += sign * arr[full ^ sub]
            if sub == 0:
                break
            sub = (sub - 1) & t
        out[t] = -acc
    return out


def decompose(
    table: "MaskedOutputTable | np.ndarray", shift: np.ndarray | None = None
) -> InteractionDecomposition:
    """Full decomposition of a table at the given channel shift (default 0)."""
    values = _as_values(table)
    n = bits.table_order(values.size)
    if shift is None:
        shift = np.zeros_like(values)
    and_channel, or_channel = split_outputs(values, shift)
    return InteractionDecomposition(
        n=n,
        and_effects=mobius_and(and_channel),
        or_effects=mobius_or(or_channel),
        bias=float(values[0]),
        shift=np.array(shift, dtype=np.float64),
        source_table_id=table.sample_id if isinstance(table, MaskedOutputTable) else None,
    )


def reconstruct(decomp: InteractionDecomposition, mask) -> float:
    """Predicted table value at one mask from bias plus triggered effects.

    An AND effect for subset T fires when T is fully kept (T subset of S);
    an OR effect fires when any member of T is kept (T intersects S).
    """
    s = mask_bits(mask, decomp.n)
    total = decomp.bias
    sub = s
    while sub:  # nonempty subsets of S
        total += decomp.and_effects[sub]
        sub = (sub - 1) & s
    # OR side: all effects minus those whose subset avoids S entirely.
    total += float(decomp.or_effects.sum())
    comp = bits.full_mask(decomp.n) ^ s
    sub = comp
    while sub:
        total -= decomp.or_effects[sub]
        sub = (sub - 1) & comp
    return float(total)


def reconstruct_all(decomp: InteractionDecomposition) -> np.ndarray:
    """Predicted table values at every mask, via two subset-sum transforms."""
    and_part = zeta_subset(decomp.and_effects)
    or_cum = zeta_subset(decomp.or_effects)
    # sum over T intersecting S = total - sum over T inside the complement of S
    or_part = or_cum[-1] - or_cum[::-1]
    return decomp.bias + and_part + or_part


def save_decomposition(decomp: InteractionDecomposition, path) -> None:
    """Dump a decomposition as JSON."""
    atomic_write_json(
        path,
        {
            "sample_id": decomp.source_table_id,
            "n": decomp.n,
            "b": decomp.bias,
            "gamma": decomp.shift.tolist(),
            "I_and": decomp.and_effects.tolist(),
            "I_or": decomp.or_effects.tolist(),
        },
    )
