"""Baseline values, masked inputs, and the full per-subset output table.

Masking variable i means replacing coordinate i with its baseline value (the
per-coordinate mean of the training data). For a sample x and a subset S of
kept variables, x_S keeps x's coordinates inside S and substitutes the
baseline outside S. The masked-output table stores the model's log-odds score
on x_S for every one of the 2**n subsets, indexed by bitmask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bits
from .fileio import atomic_write_json
from .model import Dataset, Model, score_batch


@dataclass(frozen=True)
class SubsetMask:
    """A subset of the n input variables, encoded as a bitmask."""

    mask: int
    n: int

    def __post_init__(self) -> None:
        bits.check_num_vars(self.n)
        if not 0 <= self.mask < (1 << self.n):
            raise ValueError(f"mask {self.mask:#x} out of range for n={self.n}")

    @property
    def order(self) -> int:
        return bits.popcount(self.mask)

    def complement(self) -> "SubsetMask":
        return SubsetMask(bits.full_mask(self.n) ^ self.mask, self.n)

    def members(self) -> tuple[int, ...]:
        return bits.members(self.mask, self.n)


def mask_bits(mask: "SubsetMask | int", n: int) -> int:
    """Accept a SubsetMask or a raw bitmask int; return the validated int."""
    if isinstance(mask, SubsetMask):
        if mask.n != n:
            raise ValueError(f"mask is over n={mask.n} variables, expected n={n}")
        return mask.mask
    m = int(mask)
    if not 0 <= m < (1 << n):
        raise ValueError(f"mask {m:#x} out of range for n={n}")
    return m


@dataclass
class MaskedOutputTable:
    """Model scores on every masked variant of one sample.

    values[mask] is the log-odds score on x_S for S = mask; values[0] is the
    score on the fully masked input and serves as the constant term of the
    interaction decomposition.
    """

    n: int
    values: np.ndarray
    label: int
    sample_id: str | None = None

    def __post_init__(self) -> None:
        bits.check_num_vars(self.n)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (1 << self.n,):
            raise ValueError(
                f"table must have exactly 2**n = {1 << self.n} entries, "
                f"got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("table entries must all be finite")


def compute_baseline(data: Dataset) -> np.ndarray:
    """Per-coordinate arithmetic mean over all samples."""
    return data.X.mean(axis=0)


def mask_input(x: np.ndarray, mask: SubsetMask | int, baseline: np.ndarray) -> np.ndarray:
    """Keep x's coordinates inside the subset, substitute the baseline outside."""
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    if x.shape != baseline.shape or x.ndim != 1:
        raise ValueError(f"x {x.shape} and baseline {baseline.shape} must be equal-length vectors")
    m = mask_bits(mask, x.size)
    keep = (m >> np.arange(x.size)) & 1
    return np.where(keep.astype(bool), x, baseline)


def masked_output_table(
    model: Model,
    x: np.ndarray,
    label: int,
    baseline: np.ndarray,
    sample_id: str | None = None,
) -> MaskedOutputTable:
    """Evaluate the model's score on all 2**n masked variants of x.

    Pure in (model weights, x, label, baseline); rejects n > 16 since the
    table grows as 2**n.
    """
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    n = model.spec.input_dim
    bits.check_num_vars(n)
    if x.shape != (n,) or baseline.shape != (n,):
        raise ValueError(f"x and baseline must both have shape ({n},)")
    keep = bits.bit_matrix(n)
    masked = np.where(keep, x[None, :], baseline[None, :])
    values = score_batch(model, masked, label)
    return MaskedOutputTable(n=n, values=values, label=label, sample_id=sample_id)


def save_table(table: MaskedOutputTable, path) -> None:
    """Dump a table as JSON for offline inspection."""
    atomic_write_json(
        path,
        {
            "sample_id": table.sample_id,
            "label": table.label,
            "n": table.n,
            "values": table.values.tolist(),
        },
    )
