"""Checkpoint sweeps: loss gap, record assembly, emitted artifacts."""

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from andolens.dynamics import (
    DynamicsRecord,
    SweepConfig,
    baseline_decompositions,
    checkpoint_reports,
    emit,
    loss_gap,
    record_from_reports,
    records_to_csv,
    select_samples,
    sweep,
)
from andolens.masking import compute_baseline
from andolens.model import Dataset, ModelSpec, init_model, load_checkpoint, save_checkpoint, train
from andolens.saliency import ThresholdPolicy
from andolens.sparsify import SparsifyConfig
from andolens.synthetic import gen_dataset, random_planted_spec

FAST_SPARSIFY = SparsifyConfig(max_iters=60)


@pytest.fixture(scope="module")
def tiny_world(tmp_path_factory):
    """Synthetic task, trained analyzed model with checkpoints, baseline model."""
    root = tmp_path_factory.mktemp("world")
    spec = random_planted_spec(
        n=4, num_and=2, seed=31, noise_std=0.4, num_train=96, num_test=64
    )
    data_train, data_test, _ = gen_dataset(spec)
    arch = ModelSpec(input_dim=4, hidden_dims=(12,), num_classes=2, seed=5)
    model = init_model(arch)
    ckpts = train(model, data_train, epochs=20, lr=0.1, checkpoint_every=10, out_dir=root / "ck")
    base_arch = ModelSpec(input_dim=4, hidden_dims=(12,), num_classes=2, seed=6)
    base = init_model(base_arch)
    base_data = Dataset(X=data_test.X, labels=data_test.labels, role="train")
    train(base, base_data, epochs=20, lr=0.1, out_dir=None)
    base_path = root / "base.json"
    save_checkpoint(base, base_path)
    return {
        "train": data_train,
        "test": data_test,
        "ckpts": ckpts,
        "base_path": base_path,
    }


def make_config(world, num_samples=4):
    return SweepConfig(
        baseline_ckpt=world["base_path"],
        num_samples=num_samples,
        policy=ThresholdPolicy(alpha=0.05),
        sparsify=FAST_SPARSIFY,
        seed=7,
    )


class TestLossGap:
    def test_identical_splits_have_zero_gap(self, rng):
        model = init_model(ModelSpec(input_dim=3, hidden_dims=(4,), num_classes=2, seed=0))
        X = rng.normal(size=(20, 3))
        y = rng.integers(0, 2, 20)
        a = Dataset(X=X, labels=y, role="train")
        b = Dataset(X=X.copy(), labels=y.copy(), role="test")
        train_loss, test_loss, gap = loss_gap(model, a, b)
        assert gap == 0.0 and train_loss == test_loss

    def test_swapping_splits_negates_gap(self, rng):
        model = init_model(ModelSpec(input_dim=3, hidden_dims=(4,), num_classes=2, seed=0))
        a = Dataset(X=rng.normal(size=(16, 3)), labels=rng.integers(0, 2, 16), role="train")
        b = Dataset(X=rng.normal(size=(16, 3)), labels=rng.integers(0, 2, 16), role="test")
        _, _, gap_ab = loss_gap(model, a, b)
        _, _, gap_ba = loss_gap(
            model,
            Dataset(X=b.X, labels=b.labels, role="train"),
            Dataset(X=a.X, labels=a.labels, role="test"),
        )
        assert gap_ab == pytest.approx(-gap_ba, abs=1e-15)

    def test_memorizing_model_has_positive_gap(self, rng):
        # random labels on random points: anything learned on train cannot
        # transfer, so test loss exceeds train loss after enough epochs
        X_train = rng.normal(size=(24, 3))
        X_test = rng.normal(size=(24, 3))
        train_set = Dataset(X=X_train, labels=rng.integers(0, 2, 24), role="train")
        test_set = Dataset(X=X_test, labels=rng.integers(0, 2, 24), role="test")
        model = init_model(ModelSpec(input_dim=3, hidden_dims=(32, 32), num_classes=2, seed=1))
        train(model, train_set, epochs=150, lr=0.1)
        train_loss, test_loss, gap = loss_gap(model, train_set, test_set)
        assert train_loss < 0.3
        assert gap > 0


class TestSelectSamples:
    def test_deterministic_and_within_bounds(self, rng):
        data = Dataset(X=rng.normal(size=(30, 2)), labels=rng.integers(0, 2, 30), role="test")
        s1 = select_samples(data, 5, seed=3)
        s2 = select_samples(data, 5, seed=3)
        assert [s.sample_id for s in s1] == [s.sample_id for s in s2]
        assert len({s.sample_id for s in s1}) == 5

    def test_too_many_samples_rejected(self, rng):
        data = Dataset(X=rng.normal(size=(4, 2)), labels=rng.integers(0, 2, 4), role="test")
        with pytest.raises(ValueError, match="test split"):
            select_samples(data, 5, seed=0)


class TestSweep:
    def test_single_checkpoint_single_record(self, tiny_world):
        config = make_config(tiny_world)
        records = sweep(tiny_world["ckpts"][:1], config, tiny_world["train"], tiny_world["test"])
        assert len(records) == 1
        assert records[0].epoch == 0

    def test_records_strictly_increasing_and_consistent(self, tiny_world):
        config = make_config(tiny_world)
        records = sweep(tiny_world["ckpts"], config, tiny_world["train"], tiny_world["test"])
        epochs = [r.epoch for r in records]
        assert epochs == sorted(epochs) and len(set(epochs)) == len(epochs)
        n = records[0].n
        for r in records:
            assert r.loss_gap == r.test_loss - r.train_loss
            assert r.h_bar is None or 0.0 <= r.h_bar <= 1.0
            assert r.n_bar <= 2 * ((1 << n) - 1)
            assert sum(r.order_hist.values()) == pytest.approx(r.n_bar * config.num_samples)

    def test_deterministic_csv_bytes(self, tiny_world):
        config = make_config(tiny_world)
        args = (tiny_world["ckpts"], config, tiny_world["train"], tiny_world["test"])
        csv1 = records_to_csv(sweep(*args))
        csv2 = records_to_csv(sweep(*args))
        assert csv1 == csv2

    def test_parallel_matches_serial(self, tiny_world):
        config = make_config(tiny_world, num_samples=2)
        args = (tiny_world["ckpts"], config, tiny_world["train"], tiny_world["test"])
        serial = records_to_csv(sweep(*args, jobs=1))
        parallel = records_to_csv(sweep(*args, jobs=2))
        assert serial == parallel

    def test_corrupt_checkpoint_skipped_with_warning(self, tiny_world, tmp_path, caplog):
        bad = tmp_path / "ckpt_00005.json"
        bad.write_text("{ not json")
        paths = [tiny_world["ckpts"][0], bad, tiny_world["ckpts"][-1]]
        config = make_config(tiny_world, num_samples=2)
        with caplog.at_level("WARNING"):
            records = sweep(paths, config, tiny_world["train"], tiny_world["test"])
        assert len(records) == 2
        assert any("skipping checkpoint" in m for m in caplog.messages)

    def test_matches_manual_single_checkpoint_pipeline(self, tiny_world):
        """Sweep rows equal the metrics computed checkpoint-by-checkpoint."""
        config = make_config(tiny_world, num_samples=3)
        records = sweep(tiny_world["ckpts"], config, tiny_world["train"], tiny_world["test"])

        baseline = compute_baseline(tiny_world["train"])
        samples = select_samples(tiny_world["test"], 3, config.seed)
        base_model = load_checkpoint(tiny_world["base_path"])
        base_decomps = baseline_decompositions(base_model, samples, baseline, config)
        target = records[-1]
        model = load_checkpoint(tiny_world["ckpts"][-1])
        reports = checkpoint_reports(model, samples, baseline, config, base_decomps)
        train_loss, test_loss, _ = loss_gap(model, tiny_world["train"], tiny_world["test"])
        manual = record_from_reports(model.epoch, train_loss, test_loss, reports, 4)
        assert manual == target


class TestEmit:
    def _records(self):
        return [
            DynamicsRecord(
                epoch=e,
                train_loss=0.5 - 0.1 * e,
                test_loss=0.6 - 0.05 * e,
                loss_gap=(0.6 - 0.05 * e) - (0.5 - 0.1 * e),
                n_bar=float(2 + e),
                h_bar=None if e == 2 else 0.5,
                order_hist={1: 2 + e},
                mean_order=None if e == 2 else 1.0,
                n=3,
            )
            for e in range(4)
        ]

    def test_csv_layout(self, tmp_path):
        emit(self._records(), tmp_path)
        lines = (tmp_path / "dynamics.csv").read_text().splitlines()
        assert lines[0] == (
            "epoch,train_loss,test_loss,loss_gap,N_bar,H_bar,mean_order,order_1,order_2,order_3"
        )
        assert len(lines) == 5

    def test_missing_values_are_empty_cells_and_nulls(self, tmp_path):
        emit(self._records(), tmp_path)
        lines = (tmp_path / "dynamics.csv").read_text().splitlines()
        cells = lines[3].split(",")  # epoch 2 row
        assert cells[5] == "" and cells[6] == ""
        doc = json.loads((tmp_path / "dynamics.json").read_text())
        assert doc["records"][2]["H_bar"] is None

    def test_svgs_are_well_formed_xml(self, tmp_path):
        emit(self._records(), tmp_path)
        for name in ("losses.svg", "n_bar.svg", "h_bar.svg", "mean_order.svg"):
            root = ET.fromstring((tmp_path / name).read_text())
            assert root.tag.endswith("svg")

    def test_empty_records_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit([], tmp_path)

    def test_gap_column_is_exact_difference(self, tmp_path):
        records = self._records()
        emit(records, tmp_path)
        lines = (tmp_path / "dynamics.csv").read_text().splitlines()[1:]
        for line, rec in zip(lines, records):
            cells = line.split(",")
            assert float(cells[3]) == float(cells[2]) - float(cells[1])
            assert float(cells[3]) == rec.loss_gap
