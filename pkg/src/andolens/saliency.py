"""Salient interaction extraction and generalization-by-transfer matching.

An interaction is salient when its absolute effect clears a threshold; the
threshold is either absolute or relative to the largest effect in the
decomposition (relative keeps saliency meaningful across checkpoints whose
score scale grows during training).

A salient interaction of the analyzed model transfers to the baseline model
when the baseline's effect on the same subset and of the same kind is itself
salient and has the same sign. The transfer bit g, its mean over salient
interactions, and the salient count are the per-sample generalization
summary; order-level aggregates track how complex the transferring
interactions are.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bits
from .fileio import atomic_write_json
from .interactions import InteractionDecomposition
from .masking import MaskedOutputTable

KIND_AND = "AND"
KIND_OR = "OR"
_KIND_SORT = {KIND_AND: 0, KIND_OR: 1}


@dataclass(frozen=True)
class SalientInteraction:
    mask: int
    kind: str  # KIND_AND or KIND_OR
    effect: float
    order: int


@dataclass(frozen=True)
class ThresholdPolicy:
    """Saliency threshold: relative (alpha * max |effect|) or absolute."""

    mode: str = "relative"
    alpha: float = 0.05
    absolute_tau: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("relative", "absolute"):
            raise ValueError(f"mode must be 'relative' or 'absolute', got {self.mode!r}")
        if self.mode == "relative" and self.alpha <= 0:
            raise ValueError("relative mode requires alpha > 0")
        if self.mode == "absolute" and self.absolute_tau <= 0:
            raise ValueError("absolute mode requires absolute_tau > 0")

    def tau_for(self, decomp: InteractionDecomposition) -> float:
        if self.mode == "absolute":
            return self.absolute_tau
        peak = 0.0
        if decomp.and_effects.size > 1:
            peak = max(
                float(np.abs(decomp.and_effects[1:]).max()),
                float(np.abs(decomp.or_effects[1:]).max()),
            )
        return self.alpha * peak


@dataclass(frozen=True)
class MatchedInteraction:
    """One salient interaction of the analyzed model next to its baseline twin."""

    interaction: SalientInteraction
    effect_base: float
    g: int  # 1 iff the baseline effect is salient and has the same sign


@dataclass
class GeneralizationReport:
    """Per-sample transfer summary of the salient interactions."""

    per_interaction: list[MatchedInteraction]
    h_bar: float | None  # mean transfer bit; None when nothing is salient
    n_bar: float  # salient interaction count of this sample
    per_order: dict[int, tuple[int, float]]  # order -> (count, mean g)
    sample_id: str | None = None
    tau_v: float | None = None
    tau_base: float | None = None


@dataclass
class OrderAggregate:
    """Aggregates over many per-sample reports."""

    per_order: dict[int, tuple[int, float]]
    h_bar: float | None  # mean g over all salient interactions, all samples
    n_bar: float  # mean salient count per sample


def extract_salient(
    decomp: InteractionDecomposition, policy: ThresholdPolicy
) -> tuple[list[SalientInteraction], float]:
    """All interactions with |effect| strictly above the threshold.

    Sorted by descending |effect|, ties broken by mask value then kind, which
    makes the order deterministic. Returns (salient list, threshold used).
    """
    tau = policy.tau_for(decomp)
    found: list[SalientInteraction] = []
    for kind, effects in ((KIND_AND, decomp.and_effects), (KIND_OR, decomp.or_effects)):
        hot = np.nonzero(np.abs(effects) > tau)[0]
        for mask in hot:
            if mask == 0:
                continue
            found.append(
                SalientInteraction(
                    mask=int(mask),
                    kind=kind,
                    effect=float(effects[mask]),
                    order=bits.popcount(int(mask)),
                )
            )
    found.sort(key=lambda s: (-abs(s.effect), s.mask, _KIND_SORT[s.kind]))
    return found, float(tau)


def salient_approximation_error(
    decomp: InteractionDecomposition,
    salient: list[SalientInteraction],
    table: "MaskedOutputTable | np.ndarray",
) -> float:
    """Worst-case gap between the salient-only surrogate and the table.

    The surrogate keeps only the salient effects plus the constant; the gap
    is bounded by the total absolute mass of the discarded effects.
    """
    values = table.values if isinstance(table, MaskedOutputTable) else np.asarray(table, float)
    if values.shape != (1 << decomp.n,):
        raise ValueError("table length does not match the decomposition")
    masks = np.arange(values.size)
    approx = np.full(values.size, decomp.bias)
    for s in salient:
        if s.kind == KIND_AND:
            approx[(masks & s.mask) == s.mask] += s.effect
        else:
            approx[(masks & s.mask) != 0] += s.effect
    return float(np.abs(approx - values).max())


def match_generalization(
    salient_v: list[SalientInteraction],
    decomp_base: InteractionDecomposition,
    tau_base: float,
    sample_id: str | None = None,
    tau_v: float | None = None,
) -> GeneralizationReport:
    """Transfer bits of the analyzed model's salient interactions.

    Both decompositions must come from the same sample and the same baseline
    vector; g = 1 iff the baseline's same-kind effect on the same subset has
    magnitude strictly above tau_base and the same sign.
    """
    for s in salient_v:
        if s.mask >= (1 << decomp_base.n):
            raise ValueError(
                f"salient mask {s.mask:#x} out of range for baseline n={decomp_base.n}"
            )
    matched: list[MatchedInteraction] = []
    for s in salient_v:
        base_effects = decomp_base.and_effects if s.kind == KIND_AND else decomp_base.or_effects
        effect_base = float(base_effects[s.mask])
        g = int(abs(effect_base) > tau_base and s.effect * effect_base > 0)
        matched.append(MatchedInteraction(interaction=s, effect_base=effect_base, g=g))
    return GeneralizationReport(
        per_interaction=matched,
        h_bar=_mean_g(matched),
        n_bar=float(len(matched)),
        per_order=_order_stats(matched),
        sample_id=sample_id,
        tau_v=tau_v,
        tau_base=tau_base,
    )


def _mean_g(matched: list[MatchedInteraction]) -> float | None:
    if not matched:
        return None
    return float(np.mean([m.g for m in matched]))


def _order_stats(matched: list[MatchedInteraction]) -> dict[int, tuple[int, float]]:
    stats: dict[int, tuple[int, float]] = {}
    orders = sorted({m.interaction.order for m in matched})
    for k in orders:
        gs = [m.g for m in matched if m.interaction.order == k]
        stats[k] = (len(gs), float(np.mean(gs)))
    return stats


def aggregate_orders(reports: list[GeneralizationReport]) -> OrderAggregate:
    """Pool per-sample reports: per-order counts and mean g, overall means."""
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    all_matched = [m for r in reports for m in r.per_interaction]
    return OrderAggregate(
        per_order=_order_stats(all_matched),
        h_bar=_mean_g(all_matched),
        n_bar=float(len(all_matched)) / len(reports),
    )


def save_report(report: GeneralizationReport, path) -> None:
    """Dump a per-sample report as JSON."""
    atomic_write_json(
        path,
        {
            "sample_id": report.sample_id,
            "tau_v": report.tau_v,
            "tau_base": report.tau_base,
            "interactions": [
                {
                    "mask": m.interaction.mask,
                    "kind": m.interaction.kind,
                    "order": m.interaction.order,
                    "effect_v": m.interaction.effect,
                    "effect_base": m.effect_base,
                    "g": m.g,
                }
                for m in report.per_interaction
            ],
            "H_bar": report.h_bar,
            "N_bar": report.n_bar,
        },
    )
