import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracscalar.drift import (
    DRIFT_TAGS,
    DriftSpec,
    check_screened_positivity,
    div_drift,
    drift_symbols,
    eval_drift,
)
from fracscalar.errors import NegativeInput
from fracscalar.grid import get_grid
from fracscalar.operators import divergence, inv_one_plus_lambda_beta

from conftest import band_limited, mesh, positive_field

ALL = sorted(DRIFT_TAGS)


class TestDriftSpec:
    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            DriftSpec("nope")

    def test_screened_beta_positive(self):
        with pytest.raises(ValueError):
            DriftSpec("ks_screened", beta=0.0)

    def test_aggregation_kernel_must_be_even(self):
        with pytest.raises(ValueError):
            DriftSpec("aggregation", kernel_symbol=lambda k1, k2: k1 + 0.0 * k2)

    def test_aggregation_kernel_must_be_real(self):
        with pytest.raises(ValueError):
            DriftSpec("aggregation", kernel_symbol=lambda k1, k2: 1j * (k1 * k1 + k2 * k2))

    @pytest.mark.parametrize("variant", [v for v in ALL if v != "aggregation"] + ["aggregation"])
    def test_dict_roundtrip(self, variant):
        spec = DriftSpec(variant, beta=1.5) if variant == "ks_screened" else DriftSpec(variant)
        assert DriftSpec.from_dict(spec.to_dict()) == spec


class TestEvalDrift:
    def test_poisson_unit_mode(self):
        X1, _ = mesh(32)
        b1, b2 = eval_drift(np.cos(X1), DriftSpec("ks_poisson"))
        np.testing.assert_allclose(b1, np.sin(X1), atol=1e-13)
        np.testing.assert_allclose(b2, 0.0, atol=1e-13)

    def test_euler_unit_mode(self):
        X1, _ = mesh(32)
        b1, b2 = eval_drift(np.cos(X1), DriftSpec("euler"))
        np.testing.assert_allclose(b1, 0.0, atol=1e-13)
        np.testing.assert_allclose(b2, -np.sin(X1), atol=1e-13)
        np.testing.assert_allclose(divergence(b1, b2), 0.0, atol=1e-13)

    def test_screened_unit_mode(self):
        X1, _ = mesh(32)
        b1, b2 = eval_drift(np.cos(X1), DriftSpec("ks_screened", beta=2.0))
        np.testing.assert_allclose(b1, 0.5 * np.sin(X1), atol=1e-13)
        np.testing.assert_allclose(b2, 0.0, atol=1e-13)

    def test_sqg_is_perp_gradient_of_inverse_lambda(self):
        X1, X2 = mesh(32)
        u = np.cos(2 * X1 + X2)
        b1, b2 = eval_drift(u, DriftSpec("sqg"))
        psi = np.cos(2 * X1 + X2) / np.sqrt(5)
        # (-d2, d1) psi
        np.testing.assert_allclose(b1, np.sin(2 * X1 + X2) / np.sqrt(5), atol=1e-13)
        np.testing.assert_allclose(b2, -2 * np.sin(2 * X1 + X2) / np.sqrt(5), atol=1e-13)
        assert psi.shape == u.shape

    def test_constants_give_no_drift(self):
        for v in ALL:
            b1, b2 = eval_drift(np.full((16, 16), 3.0), DriftSpec(v))
            assert np.max(np.abs(b1)) + np.max(np.abs(b2)) < 1e-13

    @pytest.mark.parametrize("variant", ALL)
    def test_real_output_and_symbol_symmetry(self, variant):
        g = get_grid(16)
        k1, k2 = g.full_k
        for m in drift_symbols(DriftSpec(variant), k1, k2, 16):
            flipped = np.roll(np.flip(m, axis=(0, 1)), 1, axis=(0, 1))
            np.testing.assert_allclose(flipped, np.conj(m), atol=1e-14)

    def test_aggregation_newtonian_is_poisson_like(self):
        u = band_limited(32, 5)
        b = eval_drift(u, DriftSpec("aggregation", kernel_symbol=lambda k1, k2: np.where(
            k1 * k1 + k2 * k2 == 0, 0.0, -1.0 / np.where(k1 * k1 + k2 * k2 == 0, 1, k1 * k1 + k2 * k2))))
        ref = eval_drift(u, DriftSpec("ks_poisson"))
        np.testing.assert_allclose(b[0], ref[0], atol=1e-12)
        np.testing.assert_allclose(b[1], ref[1], atol=1e-12)


class TestDivDrift:
    def test_poisson(self):
        X1, _ = mesh(32)
        np.testing.assert_allclose(div_drift(np.cos(X1), DriftSpec("ks_poisson")), np.cos(X1), atol=1e-14)

    def test_sqg_zero(self):
        u = band_limited(32, 1)
        assert np.max(np.abs(div_drift(u, DriftSpec("sqg")))) < 1e-12

    def test_screened_example(self):
        X1, _ = mesh(32)
        out = div_drift(1 + 0.5 * np.cos(X1), DriftSpec("ks_screened", beta=2.0))
        np.testing.assert_allclose(out, 0.25 * np.cos(X1), atol=1e-14)

    @pytest.mark.parametrize("variant", ALL)
    def test_matches_spectral_divergence(self, variant):
        u = band_limited(32, 11)
        b1, b2 = eval_drift(u, DriftSpec(variant))
        np.testing.assert_allclose(div_drift(u, DriftSpec(variant)), divergence(b1, b2), atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), beta=st.sampled_from([0.5, 1.0, 2.0]))
    def test_screened_div_below_u(self, seed, beta):
        u = positive_field(32, seed)
        assert np.max(div_drift(u, DriftSpec("ks_screened", beta=beta)) - u) <= 1e-8


class TestScreenedPositivity:
    def test_constant(self):
        rep = check_screened_positivity(np.ones((16, 16)), 2.0)
        assert rep.ok and rep.min_v == pytest.approx(1.0)

    def test_example(self):
        X1, _ = mesh(32)
        rep = check_screened_positivity(1 + np.cos(X1), 2.0)
        assert rep.ok
        assert rep.min_v == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(inv_one_plus_lambda_beta(1 + np.cos(X1), 2.0), 1 + 0.5 * np.cos(X1), atol=1e-14)

    def test_negative_input(self):
        with pytest.raises(NegativeInput):
            check_screened_positivity(-np.ones((8, 8)), 1.0)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), beta=st.sampled_from([0.5, 1.0, 2.0]))
    def test_random_positive_fields(self, seed, beta):
        rep = check_screened_positivity(positive_field(32, seed), beta)
        assert rep.ok and rep.min_v >= -1e-8
