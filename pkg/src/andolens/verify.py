"""Self-contained invariant suite behind the `verify` CLI subcommand.

Each check returns a pass/fail plus a one-line detail. The suite covers the
decomposition engine (exact reconstruction for arbitrary shifts, transform
equivalence against the literal alternating sums, the partial-sum identities)
and the sparsifier (reconstruction preserved, never worse than the symmetric
split, determinism, planted recovery, the hand-worked two-variable fixture).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .interactions import (
    decompose,
    mobius_and,
    mobius_and_bruteforce,
    mobius_or,
    mobius_or_bruteforce,
    reconstruct_all,
    zeta_subset,
)
from .masking import compute_baseline, masked_output_table
from .model import Dataset, ModelSpec, init_model
from .sparsify import SparsifyConfig, objective, sparsify
from .synthetic import planted_table, random_planted_spec

RECONSTRUCTION_TOL = 1e-8
ORACLE_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_mlp_table(rng: np.random.Generator, n: int) -> np.ndarray:
    spec = ModelSpec(
        input_dim=n,
        hidden_dims=(8, 8),
        num_classes=2,
        seed=int(rng.integers(0, 2**31)),
        activation="relu" if rng.integers(0, 2) else "tanh",
    )
    model = init_model(spec)
    x = rng.normal(0.0, 1.0, size=n)
    data = Dataset(X=rng.normal(0.0, 1.0, size=(16, n)), labels=np.zeros(16, dtype=int), role="train")
    baseline = compute_baseline(data)
    return masked_output_table(model, x, 0, baseline).values


def check_exact_reconstruction(n: int, trials: int, seed: int = 0) -> CheckResult:
    """Reconstruction equals the table at every mask, for arbitrary shifts."""
    rng = np.random.default_rng([seed, 10])
    worst = 0.0
    for trial in range(trials):
        if trial % 3 == 2:
            values = _random_mlp_table(rng, n)
        else:
            values = rng.normal(0.0, 3.0, size=1 << n)
        shifts = [np.zeros(values.size), rng.normal(0.0, 2.0, size=values.size)]
        for shift in shifts:
            d = decompose(values, shift)
            worst = max(worst, float(np.abs(reconstruct_all(d) - values).max()))
    return CheckResult(
        "exact-reconstruction",
        worst < RECONSTRUCTION_TOL,
        f"max abs error {worst:.3e} over {trials} tables (tol {RECONSTRUCTION_TOL:.0e})",
    )


def check_transform_oracle(n: int, trials: int, seed: int = 0) -> CheckResult:
    """Fast butterfly transforms match the literal double-loop sums."""
    rng = np.random.default_rng([seed, 11])
    worst = 0.0
    top = min(n, 10)
    per_n = max(1, trials // top)
    for nn in range(1, top + 1):
        for _ in range(per_n):
            v = rng.normal(0.0, 2.0, size=1 << nn)
            worst = max(worst, float(np.abs(mobius_and(v) - mobius_and_bruteforce(v)).max()))
            worst = max(worst, float(np.abs(mobius_or(v) - mobius_or_bruteforce(v)).max()))
    return CheckResult(
        "transform-oracle-equivalence",
        worst < ORACLE_TOL,
        f"max abs diff {worst:.3e} on n in 1..{top} (tol {ORACLE_TOL:.0e})",
    )


def check_partial_sums(n: int, trials: int, seed: int = 0) -> CheckResult:
    """Subset sums of the effects recover the channel offsets.

    sum of AND effects inside S equals and_channel[S] - and_channel[empty];
    sum of OR effects meeting S equals or_channel[S] - or_channel[empty].
    """
    rng = np.random.default_rng([seed, 12])
    worst = 0.0
    from .interactions import split_outputs

    for _ in range(max(1, trials // 4)):
        values = rng.normal(0.0, 3.0, size=1 << n)
        shift = rng.normal(0.0, 1.0, size=1 << n)
        d = decompose(values, shift)
        and_channel, or_channel = split_outputs(values, shift)
        got_and = zeta_subset(d.and_effects)
        want_and = and_channel - and_channel[0]
        or_cum = zeta_subset(d.or_effects)
        got_or = or_cum[-1] - or_cum[::-1]
        want_or = or_channel - or_channel[0]
        worst = max(worst, float(np.abs(got_and - want_and).max()))
        worst = max(worst, float(np.abs(got_or - want_or).max()))
    return CheckResult(
        "partial-sum-identities",
        worst < RECONSTRUCTION_TOL,
        f"max abs error {worst:.3e} (tol {RECONSTRUCTION_TOL:.0e})",
    )


def check_sparsify_preserves_reconstruction(n: int, trials: int, seed: int = 0) -> CheckResult:
    """The optimized shift still reconstructs exactly and never hurts the L1 mass."""
    rng = np.random.default_rng([seed, 13])
    config = SparsifyConfig(max_iters=200)
    worst = 0.0
    regressions = 0
    for _ in range(max(1, trials // 10)):
        values = rng.normal(0.0, 2.0, size=1 << n)
        start = objective(values, np.zeros(values.size))
        res = sparsify(values, config)
        d = decompose(values, res.shift)
        worst = max(worst, float(np.abs(reconstruct_all(d) - values).max()))
        if res.final_objective > start + 1e-12:
            regressions += 1
    return CheckResult(
        "sparsify-preserves-reconstruction",
        worst < RECONSTRUCTION_TOL and regressions == 0,
        f"max abs error {worst:.3e}, objective regressions {regressions}",
    )


def check_sparsify_determinism(n: int, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng([seed, 14])
    values = rng.normal(0.0, 2.0, size=1 << n)
    r1 = sparsify(values)
    r2 = sparsify(values)
    same = np.array_equal(r1.shift, r2.shift) and r1.final_objective == r2.final_objective
    return CheckResult(
        "sparsify-determinism",
        same,
        "two runs bit-identical" if same else "runs diverged",
    )


def check_planted_recovery(seed: int = 0) -> CheckResult:
    """Five planted AND terms at n=8 come back as the top AND effects."""
    spec = random_planted_spec(n=8, num_and=5, seed=seed, bias=0.3)
    values = planted_table(spec)
    res = sparsify(values)
    d = decompose(values, res.shift)
    planted_masks = {t.mask for t in spec.planted}
    top = set(int(i) for i in np.argsort(-np.abs(d.and_effects))[:5])
    peak = max(np.abs(d.and_effects).max(), np.abs(d.or_effects).max())
    rest = np.concatenate(
        [np.delete(np.abs(d.and_effects), sorted(planted_masks)), np.abs(d.or_effects)]
    )
    signs_ok = all(
        d.and_effects[t.mask] * t.coefficient > 0 for t in spec.planted
    )
    ok = top == planted_masks and signs_ok and float(rest.max()) < 0.05 * peak
    return CheckResult(
        "planted-recovery",
        ok,
        f"top-5 match {top == planted_masks}, signs {signs_ok}, "
        f"max non-planted {rest.max():.2e} vs threshold {0.05 * peak:.2e}",
    )


def check_two_variable_fixture() -> CheckResult:
    """Hand-worked table [0,1,1,3]: known effects and exact reconstruction."""
    values = np.array([0.0, 1.0, 1.0, 3.0])
    d = decompose(values)
    ok = (
        d.bias == 0.0
        and np.array_equal(d.and_effects, [0.0, 0.5, 0.5, 0.5])
        and np.array_equal(d.or_effects, [0.0, 1.0, 1.0, -0.5])
        and np.array_equal(reconstruct_all(d), values)
    )
    return CheckResult(
        "two-variable-fixture",
        ok,
        "effects and reconstruction exact" if ok else "fixture mismatch",
    )


def run_all(n: int = 8, trials: int = 100, seed: int = 0) -> list[CheckResult]:
    return [
        check_exact_reconstruction(n, trials, seed),
        check_transform_oracle(n, trials, seed),
        check_partial_sums(n, trials, seed),
        check_sparsify_preserves_reconstruction(n, trials, seed),
        check_sparsify_determinism(n, seed),
        check_planted_recovery(seed),
        check_two_variable_fixture(),
    ]
