"""Basis construction, transforms, ladder operators and norms.

Expected values are either structural (orthonormality, counts) or frozen
from independent oracles: high-node Gauss-Hermite quadrature and centered
finite differences.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.hermite_e import hermegauss

from knudsenlab.spectral import (
    TWO_PI,
    apply_spectral_operator,
    build_basis,
    inner_or_norm,
    mode_product,
    modes_to_values,
    psi_values,
    random_field,
    unit_field,
    values_to_modes,
    velocity_transform,
    zero_field,
)


def quad_oracle_1d(f, n_nodes=80):
    """int f(v) dv by high-order Gauss-Hermite against weight exp(-v^2/2)."""
    x, w = hermegauss(n_nodes)
    return float(np.sum(w * f(x) * np.exp(x**2 / 2.0)))


class TestBuildBasis:
    def test_1d_order4_gram_identity(self):
        basis = build_basis(1, 4)
        x, w = hermegauss(64)
        psi = psi_values(4, x)
        gram = (psi * w * np.exp(x**2 / 2.0)) @ psi.T
        assert psi.shape[0] == 5
        assert np.max(np.abs(gram - np.eye(5))) < 1e-12

    def test_2d_order8_tensor_count(self):
        basis = build_basis(2, 8)
        assert basis.size == 81
        assert len(basis.multi_indices()) == 81

    def test_order16_top_function_normalized(self):
        # oracle: quadrature with 4x nodes
        build_basis(1, 16)  # construction itself must succeed
        val = quad_oracle_1d(lambda x: psi_values(16, x)[16] ** 2, n_nodes=4 * 17)
        assert abs(val - 1.0) < 1e-10

    def test_rejects_low_order(self):
        with pytest.raises(ValueError):
            build_basis(1, 1)

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            build_basis(3, 4)

    def test_quadrature_weights_positive(self):
        basis = build_basis(2, 6)
        assert np.all(basis.quad_weights > 0)


class TestVelocityTransform:
    def test_round_trip_on_unit_vectors(self):
        basis = build_basis(1, 6)
        for k in range(7):
            e = np.zeros(7)
            e[k] = 1.0
            nodes = velocity_transform(e, basis, "inverse")
            back = velocity_transform(nodes, basis, "forward")
            assert np.max(np.abs(back - e)) < 1e-12

    def test_forward_of_sqrt_maxwellian_is_e0(self):
        basis = build_basis(1, 8)
        vals = psi_values(0, basis.quad_nodes)[0]  # psi_0 = M^{1/2}
        c = velocity_transform(vals, basis, "forward")
        expect = np.zeros(9)
        expect[0] = 1.0
        assert np.max(np.abs(c - expect)) < 1e-12

    def test_forward_of_v1_sqrtM_2d(self):
        # oracle: the projection integral by independent quadrature gives
        # <v_1 M^{1/2}, psi_(1,0)> = 1 and 0 elsewhere
        basis = build_basis(2, 4)
        v1 = basis.quad_nodes[:, None]
        m_half = psi_values(0, basis.quad_nodes)[0]
        vals = v1 * m_half[:, None] * m_half[None, :]
        c = velocity_transform(vals, basis, "forward")
        oracle = quad_oracle_1d(lambda x: x * psi_values(1, x)[0] * psi_values(1, x)[1])
        assert abs(c[1, 0] - oracle) < 1e-12
        assert abs(c[1, 0] - 1.0) < 1e-12
        c[1, 0] = 0.0
        assert np.max(np.abs(c)) < 1e-12

    def test_shape_mismatch_raises(self):
        basis = build_basis(1, 4)
        with pytest.raises(ValueError):
            velocity_transform(np.zeros(3), basis, "forward")
        with pytest.raises(ValueError):
            velocity_transform(np.zeros(4), basis, "inverse")


class TestSpectralOperators:
    def test_ddx_fourier_factor(self):
        basis = build_basis(2, 4)
        f = unit_field(basis, 2, (1, 0), (0, 0))  # e^{i x_1} psi_0 direction
        df = apply_spectral_operator(f, "ddx", 0)
        assert np.allclose(df.coeffs, 1j * f.coeffs)

    def test_mulv_on_psi0(self):
        # oracle: quadrature of int v psi_0 psi_1 dv = 1
        basis = build_basis(1, 6)
        f = unit_field(basis, 0, (0,), (0,))
        vf = apply_spectral_operator(f, "mulv", 0)
        oracle = quad_oracle_1d(lambda x: x * psi_values(1, x)[0] * psi_values(1, x)[1])
        assert abs(vf.coeffs[0, 1] - oracle) < 1e-12

    def test_ddv_matches_finite_differences(self):
        # centered finite differences of psi_1 node values, K=16
        basis = build_basis(1, 16)
        f = unit_field(basis, 0, (0,), (1,))
        df = apply_spectral_operator(f, "ddv", 0)
        vgrid = np.linspace(-6, 6, 12001)
        h = vgrid[1] - vgrid[0]
        vals = psi_values(1, vgrid)[1]
        fd = (vals[2:] - vals[:-2]) / (2 * h)
        spectral_vals = psi_values(16, vgrid).T @ df.coeffs[0].real
        assert np.max(np.abs(spectral_vals[1:-1] - fd)) < 1e-6

    def test_truncation_loss_reported(self):
        basis = build_basis(1, 4)
        f = unit_field(basis, 0, (0,), (4,))  # top degree
        vf = apply_spectral_operator(f, "mulv", 0)
        assert vf.truncation_loss == pytest.approx(np.sqrt(5.0))
        df = apply_spectral_operator(f, "ddv", 0)
        assert df.truncation_loss == pytest.approx(np.sqrt(5.0) / 2.0)

    def test_bad_axis(self):
        basis = build_basis(1, 4)
        f = zero_field(basis, 1)
        with pytest.raises(ValueError):
            apply_spectral_operator(f, "ddx", 1)


class TestNorms:
    def test_zero_field_all_kinds(self):
        basis = build_basis(2, 4)
        f = zero_field(basis, 2)
        for kind in ("L2", "Hk", "HkxL2", "Hk_eps"):
            assert inner_or_norm(f, kind=kind, k=1, eps=0.5) == 0.0

    def test_unit_coefficient_l2(self):
        basis = build_basis(2, 4)
        f = unit_field(basis, 2, (0, 0), (0, 0))
        assert inner_or_norm(f, kind="L2") == pytest.approx(1.0)

    def test_h1_of_plane_wave(self):
        # f = e^{i x_1} psi_0 has coefficient (2pi)^{N/2} on the orthonormal
        # mode, so ||f||^2 + ||d_x f||^2 = 2 (2pi)^N.  The full H^1 norm adds
        # the v-derivatives of psi_0; oracle: int (psi_0')^2 dv = 1/4 per axis
        # by high-node quadrature.
        basis = build_basis(2, 4)
        f = unit_field(basis, 2, (1, 0), (0, 0))
        f.coeffs *= TWO_PI  # (2pi)^{N/2} with N = 2
        val_x = inner_or_norm(f, kind="HkxL2", k=1)
        assert val_x == pytest.approx(2.0 * TWO_PI**2, rel=1e-12)
        dpsi0_sq = quad_oracle_1d(
            lambda x: (-x / 2.0 * psi_values(0, x)[0]) ** 2
        )
        assert dpsi0_sq == pytest.approx(0.25, abs=1e-12)
        val = inner_or_norm(f, kind="Hk", k=1)
        assert val == pytest.approx((2.0 + 2 * dpsi0_sq) * TWO_PI**2, rel=1e-12)

    def test_hk_eps_unit_coefficients_reduce_to_hk(self):
        basis = build_basis(2, 3)
        rng = np.random.default_rng(0)
        f = random_field(basis, 2, rng)
        hk = inner_or_norm(f, kind="Hk", k=2)
        hk_eps = inner_or_norm(f, kind="Hk_eps", k=2, eps=1.0)
        assert hk_eps == pytest.approx(hk, rel=1e-12)

    def test_lambda_requires_model(self):
        basis = build_basis(1, 4)
        f = zero_field(basis, 1)
        with pytest.raises(ValueError):
            inner_or_norm(f, kind="Lambda")


class TestStructuralProperties:
    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_parseval_round_trip(self, seed):
        basis = build_basis(1, 8)
        rng = np.random.default_rng(seed)
        coef = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        nodes = velocity_transform(coef, basis, "inverse")
        back = velocity_transform(nodes, basis, "forward")
        assert np.max(np.abs(back - coef)) <= 1e-12 * max(1.0, np.max(np.abs(coef)))

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=15, deadline=None)
    def test_ddx_skew_symmetric_on_real_fields(self, seed):
        basis = build_basis(2, 3)
        rng = np.random.default_rng(seed)
        f = random_field(basis, 2, rng)
        df = apply_spectral_operator(f, "ddx", 0)
        val = inner_or_norm(df, f, kind="L2")
        assert abs(val.real) <= 1e-12 * inner_or_norm(f, kind="L2")

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=15, deadline=None)
    def test_mulv_self_adjoint_below_top_degree(self, seed):
        basis = build_basis(1, 8)
        rng = np.random.default_rng(seed)
        f = random_field(basis, 1, rng)
        g = random_field(basis, 1, rng)
        f.coeffs[..., -1] = 0.0  # restrict to degree <= K-1
        g.coeffs[..., -1] = 0.0
        vf = apply_spectral_operator(f, "mulv", 0)
        vg = apply_spectral_operator(g, "mulv", 0)
        lhs = inner_or_norm(vf, g, kind="L2")
        rhs = inner_or_norm(f, vg, kind="L2")
        scale = np.sqrt(inner_or_norm(f, kind="L2") * inner_or_norm(g, kind="L2"))
        assert abs(lhs - rhs) <= 1e-12 * max(scale, 1e-30)


class TestXGridAndProducts:
    def test_modes_values_round_trip(self):
        rng = np.random.default_rng(3)
        hat = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
        vals = modes_to_values(hat, 3, 2)
        back = values_to_modes(vals, 3, 2)
        assert np.max(np.abs(back - hat)) < 1e-12

    def test_mode_product_matches_pointwise(self):
        # product of two low-mode fields computed on a fine grid
        rng = np.random.default_rng(4)
        mx = 4
        a = np.zeros((2 * mx + 1,) * 2, dtype=complex)
        b = np.zeros_like(a)
        a[mx - 1 : mx + 2, mx - 1 : mx + 2] = rng.standard_normal((3, 3))
        b[mx - 1 : mx + 2, mx - 1 : mx + 2] = rng.standard_normal((3, 3))
        prod = mode_product(a, b, mx)
        va = modes_to_values(a, mx, 2)
        vb = modes_to_values(b, mx, 2)
        direct = values_to_modes(va * vb, mx, 2)
        # all product modes fit inside |n| <= 4 here, so collocation is exact
        assert np.max(np.abs(prod - direct)) < 1e-12
