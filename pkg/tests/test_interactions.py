"""Decomposition engine: transforms, fixtures, and the exact-reconstruction law."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from andolens.interactions import (
    InteractionDecomposition,
    decompose,
    mobius_and,
    mobius_and_bruteforce,
    mobius_or,
    mobius_or_bruteforce,
    mobius_subset,
    reconstruct,
    reconstruct_all,
    split_outputs,
    zeta_subset,
)

from oracles import mobius_and_reference, mobius_or_reference, reconstruct_reference


def tables(max_n=6, elements=None):
    elements = elements or st.floats(-10, 10, allow_nan=False)
    return st.integers(0, max_n).flatmap(
        lambda n: st.lists(elements, min_size=1 << n, max_size=1 << n).map(np.asarray)
    )


class TestSplitOutputs:
    def test_zero_shift_is_symmetric(self):
        v = np.array([0.0, 1.0, 1.0, 3.0])
        a, o = split_outputs(v, np.zeros(4))
        np.testing.assert_array_equal(a, v / 2)
        np.testing.assert_array_equal(o, v / 2)

    def test_half_table_shift_moves_everything_to_and(self):
        v = np.array([0.0, 0.0, 0.0, 1.0])
        a, o = split_outputs(v, 0.5 * v)
        np.testing.assert_array_equal(a, v)
        np.testing.assert_array_equal(o, np.zeros(4))

    @given(tables())
    def test_channels_sum_to_table(self, v):
        shift = np.sin(np.arange(v.size))  # arbitrary but deterministic
        a, o = split_outputs(v, shift)
        # identity up to one rounding of each addition
        np.testing.assert_allclose(a + o, v, rtol=1e-14, atol=1e-14)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            split_outputs(np.zeros(4), np.zeros(8))


class TestMobiusAnd:
    def test_pure_and_pattern(self):
        np.testing.assert_array_equal(mobius_and(np.array([0.0, 0, 0, 1])), [0, 0, 0, 1])

    def test_constant_has_no_interactions(self):
        np.testing.assert_array_equal(mobius_and(np.full(8, 3.25)), np.zeros(8))

    def test_worked_two_variable_example(self):
        got = mobius_and(np.array([0.0, 0.5, 0.5, 1.5]))
        np.testing.assert_allclose(got, [0.0, 0.5, 0.5, 0.5], atol=0)

    @given(tables(max_n=5))
    def test_matches_literal_definition(self, v):
        np.testing.assert_allclose(mobius_and(v), mobius_and_reference(v), atol=1e-9)


class TestMobiusOr:
    def test_pure_or_pattern(self):
        np.testing.assert_allclose(mobius_or(np.array([0.0, 1, 1, 1])), [0, 0, 0, 1], atol=0)

    def test_constant_has_no_interactions(self):
        np.testing.assert_allclose(mobius_or(np.full(8, -1.5)), np.zeros(8), atol=0)

    def test_worked_two_variable_example(self):
        got = mobius_or(np.array([0.0, 0.5, 0.5, 1.5]))
        np.testing.assert_allclose(got, [0.0, 1.0, 1.0, -0.5], atol=0)

    @given(tables(max_n=5))
    def test_matches_literal_definition(self, v):
        np.testing.assert_allclose(mobius_or(v), mobius_or_reference(v), atol=1e-9)


class TestBruteforceOracles:
    def test_single_variable(self):
        a, b = 0.7, -0.3
        got = mobius_and_bruteforce(np.array([a, b]))
        np.testing.assert_allclose(got, [0.0, b - a], atol=0)

    def test_zero_variable_edge(self):
        np.testing.assert_array_equal(mobius_and_bruteforce(np.array([4.2])), [0.0])
        np.testing.assert_array_equal(mobius_or_bruteforce(np.array([4.2])), [0.0])

    def test_agrees_with_fast_transform_on_random_tables(self, rng):
        worst = 0.0
        for n in range(1, 11):
            for _ in range(20):
                v = rng.normal(0, 3, size=1 << n)
                worst = max(worst, np.abs(mobius_and(v) - mobius_and_bruteforce(v)).max())
                worst = max(worst, np.abs(mobius_or(v) - mobius_or_bruteforce(v)).max())
        assert worst < 1e-9

    def test_size_limit(self):
        with pytest.raises(ValueError, match="n <= 12"):
            mobius_and_bruteforce(np.zeros(1 << 13))

    @given(tables(max_n=4))
    def test_triple_agreement_with_independent_reference(self, v):
        np.testing.assert_allclose(mobius_and_bruteforce(v), mobius_and_reference(v), atol=1e-9)
        np.testing.assert_allclose(mobius_or_bruteforce(v), mobius_or_reference(v), atol=1e-9)


class TestDecompose:
    def test_worked_fixture(self):
        d = decompose(np.array([0.0, 1.0, 1.0, 3.0]))
        assert d.bias == 0.0
        np.testing.assert_array_equal(d.and_effects, [0.0, 0.5, 0.5, 0.5])
        np.testing.assert_array_equal(d.or_effects, [0.0, 1.0, 1.0, -0.5])

    def test_constant_table(self):
        d = decompose(np.full(8, 2.5))
        assert d.bias == 2.5
        np.testing.assert_array_equal(d.and_effects, np.zeros(8))
        np.testing.assert_array_equal(d.or_effects, np.zeros(8))

    @given(tables(max_n=4), st.floats(-4, 4, allow_nan=False))
    def test_linear_in_table_at_zero_shift(self, v, alpha):
        base = decompose(v)
        scaled = decompose(alpha * v)
        np.testing.assert_allclose(scaled.and_effects, alpha * base.and_effects, atol=1e-9)
        np.testing.assert_allclose(scaled.or_effects, alpha * base.or_effects, atol=1e-9)


class TestReconstruct:
    def test_empty_mask_returns_bias(self):
        d = decompose(np.array([1.5, 2.0, 0.5, 3.0]))
        assert reconstruct(d, 0) == pytest.approx(1.5, abs=0)

    def test_worked_fixture_masks(self):
        d = decompose(np.array([0.0, 1.0, 1.0, 3.0]))
        assert reconstruct(d, 0b01) == pytest.approx(1.0, abs=1e-12)
        assert reconstruct(d, 0b11) == pytest.approx(3.0, abs=1e-12)

    def test_matches_vectorized_and_literal_reference(self, rng):
        for _ in range(5):
            v = rng.normal(0, 2, size=16)
            shift = rng.normal(0, 1, size=16)
            d = decompose(v, shift)
            full = reconstruct_all(d)
            for mask in range(16):
                single = reconstruct(d, mask)
                literal = reconstruct_reference(d.bias, d.and_effects, d.or_effects, mask, 4)
                assert single == pytest.approx(full[mask], abs=1e-10)
                assert single == pytest.approx(literal, abs=1e-10)


class TestExactReconstruction:
    """The decomposition reproduces the table at every mask, for any shift."""

    @given(tables(), st.integers(0, 2**32 - 1))
    def test_holds_for_random_shifts(self, v, seed):
        shift = np.random.default_rng(seed).normal(0, 3, size=v.size)
        for s in (np.zeros(v.size), shift):
            d = decompose(v, s)
            np.testing.assert_allclose(reconstruct_all(d), v, atol=1e-8)

    def test_partial_sum_identities(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 7))
            v = rng.normal(0, 3, size=1 << n)
            shift = rng.normal(0, 2, size=1 << n)
            d = decompose(v, shift)
            and_channel, or_channel = split_outputs(v, shift)
            np.testing.assert_allclose(
                zeta_subset(d.and_effects), and_channel - and_channel[0], atol=1e-9
            )
            or_cum = zeta_subset(d.or_effects)
            np.testing.assert_allclose(
                or_cum[-1] - or_cum[::-1], or_channel - or_channel[0], atol=1e-9
            )

    def test_zeta_inverts_mobius(self, rng):
        for n in (1, 3, 6):
            v = rng.normal(0, 2, size=1 << n)
            np.testing.assert_allclose(zeta_subset(mobius_subset(v)), v, atol=1e-9)
            np.testing.assert_allclose(mobius_subset(zeta_subset(v)), v, atol=1e-9)


class TestValidation:
    def test_table_length_must_be_power_of_two(self):
        with pytest.raises(ValueError, match="power of two"):
            mobius_subset(np.zeros(6))

    def test_decomposition_rejects_bad_shapes(self):
        with pytest.raises(ValueError, match="shape"):
            InteractionDecomposition(
                n=2,
                and_effects=np.zeros(3),
                or_effects=np.zeros(4),
                bias=0.0,
                shift=np.zeros(4),
            )

    def test_decomposition_rejects_nonfinite(self):
        bad = np.array([0.0, np.nan, 0.0, 0.0])
        with pytest.raises(ValueError, match="finite"):
            InteractionDecomposition(
                n=2, and_effects=bad, or_effects=np.zeros(4), bias=0.0, shift=np.zeros(4)
            )
