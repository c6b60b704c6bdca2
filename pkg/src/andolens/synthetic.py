"""Planted AND-OR labeling functions and the datasets they generate.

A planted task fixes a handful of AND/OR terms over n binary presence bits.
Its score function is the ground truth the decomposition pipeline should
recover, and datasets drawn from it give small learnable classification
problems: presence bits become features at 0 or the presence offset, and
labels are Bernoulli draws whose log-odds equal the planted score (plus
optional noise), so a perfect classifier's confidence score reproduces the
planted structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bits
from .fileio import atomic_write_json
from .model import Dataset
from .saliency import KIND_AND, KIND_OR

# Feature value of a present variable; absent variables sit at 0.
PRESENCE_OFFSET = 1.0

# Planted coefficients below this are ambiguous against saliency thresholds.
MIN_COEFFICIENT = 0.5


@dataclass(frozen=True)
class PlantedTerm:
    mask: int
    kind: str  # KIND_AND or KIND_OR
    coefficient: float


@dataclass
class PlantedSpec:
    n: int
    planted: list[PlantedTerm] = field(default_factory=list)
    bias: float = 0.0
    noise_std: float = 0.0
    num_train: int = 256
    num_test: int = 256
    seed: int = 0

    def __post_init__(self) -> None:
        bits.check_num_vars(self.n)
        if self.n < 1:
            raise ValueError("planted tasks need n >= 1")
        for term in self.planted:
            if not 0 < term.mask < (1 << self.n):
                raise ValueError(f"planted mask {term.mask:#x} must be nonempty and < 2**n")
            if term.kind not in (KIND_AND, KIND_OR):
                raise ValueError(f"planted kind must be AND or OR, got {term.kind!r}")
            if abs(term.coefficient) < MIN_COEFFICIENT:
                raise ValueError(
                    f"|coefficient| must be >= {MIN_COEFFICIENT} so planted terms "
                    f"stand out against saliency thresholds"
                )
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.num_train < 1:
            raise ValueError("num_train must be >= 1")
        if self.num_test < 1:
            raise ValueError("num_test must be >= 1")


def planted_score(spec: PlantedSpec, pattern: int) -> float:
    """Score of one presence pattern: bias plus triggered term coefficients.

    AND terms fire when every member variable is present; OR terms fire when
    at least one member is.
    """
    if not 0 <= pattern < (1 << spec.n):
        raise ValueError(f"pattern {pattern:#x} out of range for n={spec.n}")
    total = spec.bias
    for term in spec.planted:
        if term.kind == KIND_AND:
            if pattern & term.mask == term.mask:
                total += term.coefficient
        elif pattern & term.mask:
            total += term.coefficient
    return total


def planted_score_batch(spec: PlantedSpec, patterns: np.ndarray) -> np.ndarray:
    patterns = np.asarray(patterns, dtype=np.int64)
    total = np.full(patterns.shape, spec.bias)
    for term in spec.planted:
        if term.kind == KIND_AND:
            total += term.coefficient * ((patterns & term.mask) == term.mask)
        else:
            total += term.coefficient * ((patterns & term.mask) != 0)
    return total


def planted_table(spec: PlantedSpec) -> np.ndarray:
    """Scores at all 2**n presence patterns; the analytic masked-output table."""
    return planted_score_batch(spec, np.arange(1 << spec.n))


def random_planted_spec(
    n: int,
    num_and: int,
    num_or: int = 0,
    coeff_range: tuple[float, float] = (0.5, 2.0),
    bias: float = 0.0,
    noise_std: float = 0.0,
    num_train: int = 256,
    num_test: int = 256,
    seed: int = 0,
) -> PlantedSpec:
    """Distinct random nonempty masks with coefficients in coeff_range."""
    total = num_and + num_or
    if total < 1:
        raise ValueError("need at least one planted term")
    if total > (1 << n) - 1:
        raise ValueError(f"cannot plant {total} distinct terms over n={n} variables")
    rng = np.random.default_rng([seed, 2])
    masks = rng.choice(np.arange(1, 1 << n), size=total, replace=False)
    coeffs = rng.uniform(coeff_range[0], coeff_range[1], size=total)
    planted = [
        PlantedTerm(int(m), KIND_AND if i < num_and else KIND_OR, float(c))
        for i, (m, c) in enumerate(zip(masks, coeffs))
    ]
    return PlantedSpec(
        n=n,
        planted=planted,
        bias=bias,
        noise_std=noise_std,
        num_train=num_train,
        num_test=num_test,
        seed=seed,
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def gen_dataset(spec: PlantedSpec) -> tuple[Dataset, Dataset, PlantedSpec]:
    """Deterministic train/test draw from the planted task.

    Presence bits are uniform coin flips; features are PRESENCE_OFFSET times
    the bit; labels are Bernoulli with log-odds planted_score(pattern) plus
    Gaussian noise of noise_std. Train and test are disjoint segments of one
    seeded stream.
    """
    rng = np.random.default_rng([spec.seed, 3])
    total = spec.num_train + spec.num_test
    z = rng.integers(0, 2, size=(total, spec.n))
    patterns = z @ (1 << np.arange(spec.n, dtype=np.int64))
    logodds = planted_score_batch(spec, patterns)
    if spec.noise_std > 0:
        logodds = logodds + rng.normal(0.0, spec.noise_std, size=total)
    labels = (rng.random(total) < _sigmoid(logodds)).astype(np.int64)
    X = PRESENCE_OFFSET * z.astype(np.float64)
    train = Dataset(X=X[: spec.num_train], labels=labels[: spec.num_train], role="train")
    test = Dataset(X=X[spec.num_train :], labels=labels[spec.num_train :], role="test")
    return train, test, spec


def save_truth(spec: PlantedSpec, path) -> None:
    """Dump the planted ground truth as JSON."""
    atomic_write_json(
        path,
        {
            "n": spec.n,
            "bias": spec.bias,
            "noise_std": spec.noise_std,
            "num_train": spec.num_train,
            "num_test": spec.num_test,
            "seed": spec.seed,
            "planted": [
                {"mask": t.mask, "kind": t.kind, "coefficient": t.coefficient}
                for t in spec.planted
            ],
        },
    )
