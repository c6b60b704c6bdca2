"""Sparsifier: objective fixtures, optimizer contracts, planted recovery."""

import numpy as np
import pytest

from andolens.interactions import decompose, reconstruct_all
from andolens.saliency import ThresholdPolicy, extract_salient
from andolens.sparsify import SparsifyConfig, objective, sparsify
from andolens.synthetic import planted_table, random_planted_spec

from oracles import grid_search_shift


class TestObjective:
    def test_pure_and_split_is_single_interaction(self):
        v = np.array([0.0, 0.0, 0.0, 1.0])
        assert objective(v, 0.5 * v) == pytest.approx(1.0, abs=0)

    def test_symmetric_split_of_and_table(self):
        v = np.array([0.0, 0.0, 0.0, 1.0])
        # AND channel gives 0.5 on {1,2}; OR channel gives 0.5, 0.5, -0.5
        assert objective(v, np.zeros(4)) == pytest.approx(2.0, abs=0)

    def test_constant_table_is_zero(self):
        assert objective(np.full(8, 1.7), np.zeros(8)) == 0.0


class TestSparsifyFixtures:
    def test_and_fixture_reaches_optimum(self):
        v = np.array([0.0, 0.0, 0.0, 1.0])
        res = sparsify(v)
        assert res.final_objective <= 1.0 + 1e-3
        salient, _ = extract_salient(
            decompose(v, res.shift), ThresholdPolicy(mode="absolute", absolute_tau=0.1)
        )
        assert [(s.mask, s.kind) for s in salient] == [(0b11, "AND")]
        assert salient[0].effect == pytest.approx(1.0, abs=1e-3)

    def test_constant_table_converges_immediately(self):
        res = sparsify(np.full(4, 2.0))
        np.testing.assert_array_equal(res.shift, np.zeros(4))
        assert res.final_objective == 0.0
        assert res.converged

    def test_or_fixture_dominated_by_single_or(self):
        v = np.array([0.0, 1.0, 1.0, 1.0])
        res = sparsify(v)
        d = decompose(v, res.shift)
        assert res.final_objective <= 1.0 + 1e-3
        assert d.or_effects[0b11] == pytest.approx(1.0, abs=1e-3)
        others = np.concatenate([np.abs(d.and_effects), np.abs(d.or_effects[:3])])
        assert others.max() < 0.05

    def test_trivial_single_entry_table(self):
        res = sparsify(np.array([3.0]))
        assert res.final_objective == 0.0 and res.converged


class TestSparsifyContracts:
    def test_reconstruction_preserved(self, rng):
        for _ in range(5):
            v = rng.normal(0, 2, size=32)
            res = sparsify(v, SparsifyConfig(max_iters=150))
            d = decompose(v, res.shift)
            assert np.abs(reconstruct_all(d) - v).max() < 1e-8

    def test_never_worse_than_symmetric_split(self, rng):
        for _ in range(5):
            v = rng.normal(0, 3, size=16)
            res = sparsify(v, SparsifyConfig(max_iters=120))
            assert res.final_objective <= objective(v, np.zeros(16)) + 1e-12

    def test_deterministic(self, rng):
        v = rng.normal(0, 2, size=64)
        r1, r2 = sparsify(v), sparsify(v)
        np.testing.assert_array_equal(r1.shift, r2.shift)
        assert r1.final_objective == r2.final_objective
        assert r1.objective_trace == r2.objective_trace

    def test_running_best_is_monotone(self, rng):
        v = rng.normal(0, 2, size=32)
        res = sparsify(v, SparsifyConfig(max_iters=200))
        running = np.minimum.accumulate(res.objective_trace)
        assert all(b <= a + 1e-12 for a, b in zip(running, running[1:]))
        assert res.final_objective <= running[-1] + 1e-12
        assert res.final_objective >= 0.0

    def test_nonfinite_table_rejected(self):
        with pytest.raises(FloatingPointError):
            sparsify(np.array([0.0, np.nan, 0.0, 0.0]))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SparsifyConfig(max_iters=0)
        with pytest.raises(ValueError):
            SparsifyConfig(step_size=0.0)
        with pytest.raises(ValueError):
            SparsifyConfig(tol=-1.0)


class TestPlantedRecovery:
    """Tables built from planted AND terms come back exactly."""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_recovers_planted_and_terms(self, seed):
        spec = random_planted_spec(n=8, num_and=5, seed=seed, bias=0.25)
        v = planted_table(spec)
        res = sparsify(v)
        d = decompose(v, res.shift)
        planted_masks = {t.mask for t in spec.planted}
        top = set(int(i) for i in np.argsort(-np.abs(d.and_effects))[:5])
        assert top == planted_masks
        for t in spec.planted:
            assert d.and_effects[t.mask] * t.coefficient > 0
        peak = max(np.abs(d.and_effects).max(), np.abs(d.or_effects).max())
        rest = np.concatenate(
            [np.delete(np.abs(d.and_effects), sorted(planted_masks)), np.abs(d.or_effects)]
        )
        assert rest.max() < 0.05 * peak

    def test_mixed_shifts_still_reconstruct(self):
        spec = random_planted_spec(n=6, num_and=3, num_or=2, seed=3)
        v = planted_table(spec)
        res = sparsify(v)
        d = decompose(v, res.shift)
        assert np.abs(reconstruct_all(d) - v).max() < 1e-8


class TestAgainstGridSearch:
    def test_random_two_variable_tables(self, rng):
        grid = np.linspace(-1.5, 1.5, 25)
        for _ in range(3):
            v = rng.normal(0, 1, size=4)
            oracle, _ = grid_search_shift(v, grid)
            res = sparsify(v)
            assert res.final_objective <= oracle + 1e-3

    def test_three_variable_pure_fixtures(self):
        grid = np.linspace(-0.5, 0.5, 5)
        v_and = np.zeros(8)
        v_and[7] = 1.0
        v_or = np.ones(8)
        v_or[0] = 0.0
        for v in (v_and, v_or):
            oracle, _ = grid_search_shift(v, grid)
            assert oracle == pytest.approx(1.0, abs=1e-12)
            assert abs(sparsify(v).final_objective - oracle) <= 1e-3
