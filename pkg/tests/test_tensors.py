import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from plateplast import tensors as tn


def finite_vec(n):
    return arrays(np.float64, (n,), elements=st.floats(-50, 50))


def test_dev3_identity_is_zero():
    assert np.allclose(tn.dev3(tn.EYE3), 0.0)


def test_dev3_diag_123():
    v = tn.sym3_to_vec(np.diag([1.0, 2.0, 3.0]))
    expect = tn.sym3_to_vec(np.diag([-1.0, 0.0, 1.0]))
    np.testing.assert_allclose(tn.dev3(v), expect)


@given(finite_vec(6))
def test_dev3_tracefree_and_decomposition(v):
    d = tn.dev3(v)
    scale = max(tn.norm(v), 1.0)
    assert abs(tn.tr3(d)) <= 1e-14 * scale
    recon = d + (tn.tr3(v) / 3.0) * tn.EYE3
    np.testing.assert_allclose(recon, v, atol=1e-13 * scale)


def test_dev3_fixed_point_on_tracefree():
    v = np.array([1.0, -2.0, 1.0, 0.3, -0.4, 0.5])
    np.testing.assert_allclose(tn.dev3(v), v)


def test_sym_outer_orthogonal_unit_vectors():
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0])
    m = tn.vec_to_sym3(tn.sym_outer(a, b))
    assert m[0, 1] == pytest.approx(0.5)
    assert m[1, 0] == pytest.approx(0.5)
    assert np.count_nonzero(m) == 2
    assert tn.norm(tn.sym_outer(a, b)) == pytest.approx(1.0 / np.sqrt(2.0))


def test_sym_outer_parallel_and_zero():
    e1 = np.array([1.0, 0.0, 0.0])
    m = tn.vec_to_sym3(tn.sym_outer(e1, e1))
    np.testing.assert_allclose(m, np.outer([1, 0, 0], [1, 0, 0]))
    assert tn.norm(tn.sym_outer(e1, e1)) == pytest.approx(1.0)
    assert np.all(tn.sym_outer(np.zeros(3), e1) == 0.0)


@given(finite_vec(3), finite_vec(3))
def test_sym_outer_norm_bounds(a, b):
    lo = np.linalg.norm(a) * np.linalg.norm(b) / np.sqrt(2.0)
    hi = np.linalg.norm(a) * np.linalg.norm(b)
    val = tn.norm(tn.sym_outer(a, b))
    assert lo - 1e-9 * (1 + hi) <= val <= hi + 1e-9 * (1 + hi)


def test_lambda_h_identity_and_entries():
    v = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    np.testing.assert_allclose(tn.lambda_h(v, 1.0), v)

    xi = tn.sym3_to_vec(np.array([[0, 0, 1.0], [0, 0, 0], [1.0, 0, 0]]))
    out = tn.vec_to_sym3(tn.lambda_h(xi, 0.5))
    assert out[0, 2] == pytest.approx(2.0)

    out = tn.vec_to_sym3(tn.lambda_h(tn.EYE3, 0.5))
    np.testing.assert_allclose(out, np.diag([1.0, 1.0, 4.0]))


@given(finite_vec(6), finite_vec(6), st.floats(0.01, 10), st.floats(-3, 3),
       st.floats(-3, 3))
def test_lambda_h_linear(x, y, h, a, b):
    left = tn.lambda_h(a * x + b * y, h)
    right = a * tn.lambda_h(x, h) + b * tn.lambda_h(y, h)
    np.testing.assert_allclose(left, right, atol=1e-9)


def test_lambda_h_rejects_nonpositive_h():
    with pytest.raises(ValueError):
        tn.lambda_h(tn.EYE3, 0.0)
    with pytest.raises(ValueError):
        tn.lambda_h_inv(tn.EYE3, -1.0)


def test_lambda_h_inverse_roundtrip():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(4, 6))
    np.testing.assert_allclose(tn.lambda_h_inv(tn.lambda_h(v, 0.3), 0.3), v)


def test_minor_embed_roundtrip():
    np.testing.assert_allclose(tn.minor2(tn.EYE3), tn.EYE2)
    np.testing.assert_allclose(tn.vec_to_sym3(tn.embed2to3(tn.EYE2)),
                               np.diag([1.0, 1.0, 0.0]))
    rng = np.random.default_rng(1)
    b = rng.normal(size=(5, 3))
    np.testing.assert_allclose(tn.minor2(tn.embed2to3(b)), b)


@given(finite_vec(6), finite_vec(6))
def test_mandel_inner_product_is_frobenius(a, b):
    ma, mb = tn.vec_to_sym3(a), tn.vec_to_sym3(b)
    np.testing.assert_allclose(tn.inner(a, b), np.sum(ma * mb), atol=1e-9)


@given(finite_vec(6))
def test_inner_product_positive_definite(a):
    assert tn.inner(a, a) >= 0.0
    if np.linalg.norm(a) > 1e-6:
        assert tn.inner(a, a) > 0.0


class TestScaledSymGradient:
    spac = (0.1, 0.1, 0.05)

    def grid(self, n=(6, 5, 7)):
        x = [np.arange(ni) * di for ni, di in zip(n, self.spac)]
        return np.meshgrid(*x, indexing="ij")

    def test_constant_field(self):
        X1, X2, X3 = self.grid()
        v = np.stack([np.ones_like(X1), 2 * np.ones_like(X1),
                      -np.ones_like(X1)], axis=-1)
        e = tn.scaled_sym_gradient(v, self.spac, h=0.3)
        assert np.max(np.abs(e)) < 1e-13

    def test_transverse_stretch(self):
        X1, X2, X3 = self.grid()
        v = np.stack([np.zeros_like(X1), np.zeros_like(X1), X3], axis=-1)
        e = tn.scaled_sym_gradient(v, self.spac, h=0.1)
        np.testing.assert_allclose(e[..., 2], 10.0, atol=1e-10)
        e[..., 2] = 0.0
        assert np.max(np.abs(e)) < 1e-10

    def test_in_plane_shear(self):
        X1, X2, X3 = self.grid()
        v = np.stack([X2, X1, np.zeros_like(X1)], axis=-1)
        e = tn.scaled_sym_gradient(v, self.spac, h=0.4)
        # E12 = 1 means Mandel component sqrt(2)
        np.testing.assert_allclose(e[..., 3], np.sqrt(2.0), atol=1e-10)
        e[..., 3] = 0.0
        assert np.max(np.abs(e)) < 1e-10

    def test_exact_on_random_affine(self):
        rng = np.random.default_rng(7)
        A = rng.normal(size=(3, 3))
        c = rng.normal(size=3)
        X1, X2, X3 = self.grid()
        pts = np.stack([X1, X2, X3], axis=-1)
        v = pts @ A.T + c
        h = 0.25
        e = tn.scaled_sym_gradient(v, self.spac, h)
        Ascaled = A @ np.diag([1.0, 1.0, 1.0 / h])
        expect = tn.sym3_to_vec(0.5 * (Ascaled + Ascaled.T))
        err = np.abs(e - expect).max()
        assert err < 1e-12 * max(1.0, np.abs(expect).max())

    def test_rejects_tiny_grid(self):
        v = np.zeros((1, 4, 4, 3))
        with pytest.raises(ValueError):
            tn.scaled_sym_gradient(v, self.spac, 0.5)


@settings(deadline=None)
@given(finite_vec(3), finite_vec(3))
def test_sym_outer_2d_matches_matrix_form(a2, b2):
    a, b = a2[:2], b2[:2]
    m = tn.vec_to_sym2(tn.sym_outer(a, b))
    expect = 0.5 * (np.outer(a, b) + np.outer(b, a))
    np.testing.assert_allclose(m, expect, atol=1e-9)
