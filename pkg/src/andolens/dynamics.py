"""Checkpoint sweeps: loss gap and interaction metrics across training.

One sweep fixes a set of analysis samples from the test split, decomposes the
baseline model on them once, then walks the checkpoints and computes, per
epoch: train/test loss and their gap, the mean salient-interaction count
(N_bar), the mean transfer bit over all salient interactions (H_bar), and the
salient order histogram. Per-checkpoint work items are independent, so the
walk can run on a joblib worker pool; records are assembled in checkpoint
order regardless of completion order, keeping output deterministic.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .charts import svg_line_chart
from .fileio import atomic_write_text
from .interactions import InteractionDecomposition, decompose
from .masking import compute_baseline, masked_output_table
from .model import CheckpointFormatError, Dataset, Model, cross_entropy, load_checkpoint
from .saliency import (
    GeneralizationReport,
    ThresholdPolicy,
    aggregate_orders,
    extract_salient,
    match_generalization,
)
from .sparsify import SparsifyConfig, sparsify

log = logging.getLogger(__name__)

CSV_BASE_COLUMNS = ["epoch", "train_loss", "test_loss", "loss_gap", "N_bar", "H_bar", "mean_order"]


@dataclass
class DynamicsRecord:
    epoch: int
    train_loss: float
    test_loss: float
    loss_gap: float  # test_loss - train_loss, exactly
    n_bar: float
    h_bar: float | None
    order_hist: dict[int, int]
    mean_order: float | None
    n: int  # analyzed input dimension; fixes the order_1..order_n columns


@dataclass
class SweepConfig:
    baseline_ckpt: str | Path
    num_samples: int = 20
    policy: ThresholdPolicy = field(default_factory=ThresholdPolicy)
    sparsify: SparsifyConfig = field(default_factory=SparsifyConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")


@dataclass
class AnalysisSample:
    x: np.ndarray
    label: int
    sample_id: str


def loss_gap(model: Model, train: Dataset, test: Dataset) -> tuple[float, float, float]:
    """Mean cross-entropy on each split and their difference (test - train)."""
    train_loss = cross_entropy(model, train)
    test_loss = cross_entropy(model, test)
    return train_loss, test_loss, test_loss - train_loss


def select_samples(test: Dataset, num_samples: int, seed: int) -> list[AnalysisSample]:
    """Fixed analysis samples drawn from the test split by seed."""
    if num_samples > len(test):
        raise ValueError(f"requested {num_samples} samples from a test split of {len(test)}")
    rng = np.random.default_rng([seed, 4])
    idx = np.sort(rng.choice(len(test), size=num_samples, replace=False))
    return [
        AnalysisSample(x=test.X[i], label=int(test.labels[i]), sample_id=f"test_{int(i):04d}")
        for i in idx
    ]


def decompose_sample(
    model: Model,
    sample: AnalysisSample,
    baseline: np.ndarray,
    config: SparsifyConfig,
) -> InteractionDecomposition:
    """Single-sample pipeline: masked table, sparsify, decompose."""
    table = masked_output_table(model, sample.x, sample.label, baseline, sample.sample_id)
    result = sparsify(table, config)
    return decompose(table, result.shift)


def baseline_decompositions(
    base_model: Model,
    samples: list[AnalysisSample],
    baseline: np.ndarray,
    config: "SweepConfig",
) -> list[tuple[InteractionDecomposition, float]]:
    """Baseline decomposition and its own saliency threshold per sample."""
    out = []
    for sample in samples:
        decomp = decompose_sample(base_model, sample, baseline, config.sparsify)
        out.append((decomp, config.policy.tau_for(decomp)))
    return out


def checkpoint_reports(
    model: Model,
    samples: list[AnalysisSample],
    baseline: np.ndarray,
    config: "SweepConfig",
    base_decomps: list[tuple[InteractionDecomposition, float]],
) -> list[GeneralizationReport]:
    reports = []
    for sample, (base_decomp, tau_base) in zip(samples, base_decomps):
        decomp = decompose_sample(model, sample, baseline, config.sparsify)
        salient, tau_v = extract_salient(decomp, config.policy)
        reports.append(
            match_generalization(salient, base_decomp, tau_base, sample.sample_id, tau_v)
        )
    return reports


def record_from_reports(
    epoch: int,
    train_loss: float,
    test_loss: float,
    reports: list[GeneralizationReport],
    n: int,
) -> DynamicsRecord:
    agg = aggregate_orders(reports)
    hist = {k: count for k, (count, _) in agg.per_order.items()}
    total = sum(hist.values())
    mean_order = (
        sum(k * c for k, c in hist.items()) / total if total else None
    )
    return DynamicsRecord(
        epoch=epoch,
        train_loss=train_loss,
        test_loss=test_loss,
        loss_gap=test_loss - train_loss,
        n_bar=agg.n_bar,
        h_bar=agg.h_bar,
        order_hist=hist,
        mean_order=mean_order,
        n=n,
    )


def _process_checkpoint(
    path: str | Path,
    samples: list[AnalysisSample],
    baseline: np.ndarray,
    config: SweepConfig,
    base_decomps: list[tuple[InteractionDecomposition, float]],
    data_train: Dataset,
    data_test: Dataset,
) -> DynamicsRecord | None:
    try:
        model = load_checkpoint(path)
    except CheckpointFormatError as exc:
        log.warning("skipping checkpoint %s: %s", path, exc)
        return None
    train_loss, test_loss, _ = loss_gap(model, data_train, data_test)
    reports = checkpoint_reports(model, samples, baseline, config, base_decomps)
    return record_from_reports(model.epoch, train_loss, test_loss, reports, model.spec.input_dim)


def sweep(
    checkpoints: list[str | Path],
    config: SweepConfig,
    data_train: Dataset,
    data_test: Dataset,
    jobs: int = 1,
) -> list[DynamicsRecord]:
    """Analyze every checkpoint against the fixed baseline and samples.

    The baseline vector comes from the training split and is shared by the
    analyzed and baseline models, so interaction subsets are comparable.
    Corrupt or missing checkpoints are skipped with a warning, leaving a gap
    in the epoch sequence.
    """
    if not checkpoints:
        raise ValueError("no checkpoints to sweep")
    base_model = load_checkpoint(config.baseline_ckpt)
    baseline = compute_baseline(data_train)
    samples = select_samples(data_test, config.num_samples, config.seed)
    base_decomps = baseline_decompositions(base_model, samples, baseline, config)

    worker = delayed(_process_checkpoint)
    results = Parallel(n_jobs=jobs)(
        worker(path, samples, baseline, config, base_decomps, data_train, data_test)
        for path in checkpoints
    )
    records = [r for r in results if r is not None]
    epochs = [r.epoch for r in records]
    if any(b <= a for a, b in zip(epochs, epochs[1:])):
        raise ValueError(f"checkpoints must be sorted by strictly increasing epoch, got {epochs}")
    return records


def _csv_cell(value: "float | None") -> str:
    if value is None:
        return ""
    return repr(float(value))


def records_to_csv(records: list[DynamicsRecord]) -> str:
    n = records[0].n
    header = CSV_BASE_COLUMNS + [f"order_{k}" for k in range(1, n + 1)]
    lines = [",".join(header)]
    for r in records:
        if r.n != n:
            raise ValueError("records mix different input dimensions")
        row = [
            str(r.epoch),
            _csv_cell(r.train_loss),
            _csv_cell(r.test_loss),
            _csv_cell(r.loss_gap),
            _csv_cell(r.n_bar),
            _csv_cell(r.h_bar),
            _csv_cell(r.mean_order),
        ]
        row += [str(r.order_hist.get(k, 0)) for k in range(1, n + 1)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def records_to_json(records: list[DynamicsRecord]) -> str:
    payload = {
        "records": [
            {
                "epoch": r.epoch,
                "train_loss": r.train_loss,
                "test_loss": r.test_loss,
                "loss_gap": r.loss_gap,
                "N_bar": r.n_bar,
                "H_bar": r.h_bar,
                "mean_order": r.mean_order,
                "order_hist": {str(k): v for k, v in sorted(r.order_hist.items())},
            }
            for r in records
        ]
    }
    return json.dumps(payload, indent=2) + "\n"


def emit(records: list[DynamicsRecord], out_dir: str | Path) -> list[Path]:
    """Write dynamics.csv, dynamics.json, and the four SVG curve charts."""
    if not records:
        raise ValueError("no records to emit")
    out = Path(out_dir)
    epochs = [float(r.epoch) for r in records]
    charts = {
        "losses.svg": svg_line_chart(
            "Train/test loss and gap",
            [
                ("train", epochs, [r.train_loss for r in records]),
                ("test", epochs, [r.test_loss for r in records]),
                ("gap", epochs, [r.loss_gap for r in records]),
            ],
            x_label="epoch",
            y_label="cross-entropy",
        ),
        "n_bar.svg": svg_line_chart(
            "Mean salient interaction count",
            [("N_bar", epochs, [r.n_bar for r in records])],
            x_label="epoch",
            y_label="N_bar",
        ),
        "h_bar.svg": svg_line_chart(
            "Mean transfer rate of salient interactions",
            [("H_bar", epochs, [r.h_bar for r in records])],
            x_label="epoch",
            y_label="H_bar",
        ),
        "mean_order.svg": svg_line_chart(
            "Mean salient interaction order",
            [("mean order", epochs, [r.mean_order for r in records])],
            x_label="epoch",
            y_label="order",
        ),
    }
    paths = [
        atomic_write_text(out / "dynamics.csv", records_to_csv(records)),
        atomic_write_text(out / "dynamics.json", records_to_json(records)),
    ]
    for name, svg in charts.items():
        paths.append(atomic_write_text(out / name, svg))
    return paths
