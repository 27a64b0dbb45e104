"""Small symmetric-tensor algebra in an orthonormal (Mandel) vector basis.

Symmetric 3x3 matrices are stored as 6-vectors in the component order
(11, 22, 33, 12, 13, 23) with the off-diagonal entries scaled by sqrt(2);
symmetric 2x2 matrices as 3-vectors (11, 22, 12), same scaling. With this
convention the Frobenius inner product A:B is the plain dot product of the
stored vectors, and SPD operators become ordinary SPD matrices.

All functions broadcast over leading axes: a "field" of Sym3 values is any
ndarray of shape (..., 6).
"""
from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)

# Mandel component order for Sym3: (11, 22, 33, 12, 13, 23).
IDX3 = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
# Mandel component order for Sym2: (11, 22, 12).
IDX2 = ((0, 0), (1, 1), (0, 1))

#: Identity matrices in vector form.
EYE3 = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
EYE2 = np.array([1.0, 1.0, 0.0])


def sym3_to_vec(a: np.ndarray) -> np.ndarray:
    """Convert (..., 3, 3) symmetric matrices to (..., 6) Mandel vectors."""
    a = np.asarray(a, dtype=float)
    return np.stack(
        [a[..., 0, 0], a[..., 1, 1], a[..., 2, 2],
         SQRT2 * a[..., 0, 1], SQRT2 * a[..., 0, 2], SQRT2 * a[..., 1, 2]],
        axis=-1,
    )


def vec_to_sym3(v: np.ndarray) -> np.ndarray:
    """Convert (..., 6) Mandel vectors back to (..., 3, 3) matrices."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 0] = v[..., 0]
    out[..., 1, 1] = v[..., 1]
    out[..., 2, 2] = v[..., 2]
    out[..., 0, 1] = out[..., 1, 0] = v[..., 3] / SQRT2
    out[..., 0, 2] = out[..., 2, 0] = v[..., 4] / SQRT2
    out[..., 1, 2] = out[..., 2, 1] = v[..., 5] / SQRT2
    return out


def sym2_to_vec(a: np.ndarray) -> np.ndarray:
    """Convert (..., 2, 2) symmetric matrices to (..., 3) Mandel vectors."""
    a = np.asarray(a, dtype=float)
    return np.stack([a[..., 0, 0], a[..., 1, 1], SQRT2 * a[..., 0, 1]], axis=-1)


def vec_to_sym2(v: np.ndarray) -> np.ndarray:
    """Convert (..., 3) Mandel vectors back to (..., 2, 2) matrices."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (2, 2))
    out[..., 0, 0] = v[..., 0]
    out[..., 1, 1] = v[..., 1]
    out[..., 0, 1] = out[..., 1, 0] = v[..., 2] / SQRT2
    return out


def tr3(v: np.ndarray) -> np.ndarray:
    """Trace of Sym3 vectors (..., 6) -> (...)."""
    v = np.asarray(v)
    return v[..., 0] + v[..., 1] + v[..., 2]


def tr2(v: np.ndarray) -> np.ndarray:
    """Trace of Sym2 vectors (..., 3) -> (...)."""
    v = np.asarray(v)
    return v[..., 0] + v[..., 1]


def dev3(v: np.ndarray) -> np.ndarray:
    """Deviatoric part A - (tr A / 3) I of Sym3 vectors."""
    v = np.asarray(v, dtype=float)
    out = v.copy()
    t = tr3(v) / 3.0
    out[..., 0] -= t
    out[..., 1] -= t
    out[..., 2] -= t
    return out


def norm(v: np.ndarray) -> np.ndarray:
    """Frobenius norm; plain euclidean norm of the Mandel vector."""
    return np.linalg.norm(np.asarray(v, dtype=float), axis=-1)


def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Frobenius inner product A:B; plain dot product of Mandel vectors."""
    return np.einsum("...i,...i->...", np.asarray(a, dtype=float),
                     np.asarray(b, dtype=float))


def sym_outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Symmetrized tensor product (a_i b_j + a_j b_i)/2 in Mandel form.

    Accepts 2- or 3-vectors (matching dimensions, broadcastable leading
    axes) and returns Sym2/Sym3 vectors. The Frobenius norm satisfies
    |a||b|/sqrt(2) <= |a (.) b| <= |a||b|.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError("sym_outer requires equal vector dimensions")
    d = a.shape[-1]
    if d == 2:
        return np.stack(
            [a[..., 0] * b[..., 0], a[..., 1] * b[..., 1],
             (a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0]) / SQRT2],
            axis=-1,
        )
    if d == 3:
        return np.stack(
            [a[..., 0] * b[..., 0], a[..., 1] * b[..., 1], a[..., 2] * b[..., 2],
             (a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0]) / SQRT2,
             (a[..., 0] * b[..., 2] + a[..., 2] * b[..., 0]) / SQRT2,
             (a[..., 1] * b[..., 2] + a[..., 2] * b[..., 1]) / SQRT2],
            axis=-1,
        )
    raise ValueError("sym_outer supports dimensions 2 and 3")


def lambda_h(v: np.ndarray, h: float) -> np.ndarray:
    """Anisotropic rescaling: (i,3) entries scaled by 1/h, (3,3) by 1/h^2.

    Linear in its tensor argument; identity for h=1.
    """
    if h <= 0:
        raise ValueError("thickness parameter h must be positive")
    v = np.asarray(v, dtype=float)
    out = v.copy()
    out[..., 2] /= h * h
    out[..., 4] /= h
    out[..., 5] /= h
    return out


def lambda_h_inv(v: np.ndarray, h: float) -> np.ndarray:
    """Inverse of :func:`lambda_h`."""
    if h <= 0:
        raise ValueError("thickness parameter h must be positive")
    v = np.asarray(v, dtype=float)
    out = v.copy()
    out[..., 2] *= h * h
    out[..., 4] *= h
    out[..., 5] *= h
    return out


def minor2(v: np.ndarray) -> np.ndarray:
    """Upper-left 2x2 minor of Sym3 vectors: (..., 6) -> (..., 3)."""
    v = np.asarray(v, dtype=float)
    return v[..., [0, 1, 3]].copy()


def embed2to3(v: np.ndarray) -> np.ndarray:
    """Embed Sym2 vectors into Sym3 (upper-left block, zeros elsewhere)."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (6,))
    out[..., 0] = v[..., 0]
    out[..., 1] = v[..., 1]
    out[..., 3] = v[..., 2]
    return out


def _d1(f: np.ndarray, axis: int, dx: float) -> np.ndarray:
    """First derivative: centered in the interior, one-sided at the ends."""
    f = np.asarray(f, dtype=float)
    if f.shape[axis] < 2:
        raise ValueError("need at least 2 nodes per axis")
    out = np.gradient(f, dx, axis=axis, edge_order=1)
    return out


def scaled_sym_gradient(v: np.ndarray, spacings: tuple[float, float, float],
                        h: float) -> np.ndarray:
    """Discrete scaled symmetrized gradient sym[grad_x' v | (1/h) d_3 v].

    `v` is a vector field of shape (n1, n2, n3, 3) on a structured grid of
    the rescaled plate; `spacings` are the grid steps. Centered second-order
    differences in the interior, first-order one-sided at boundaries; exact
    on affine fields. Returns a Sym3 Mandel field of shape (n1, n2, n3, 6).
    """
    if h <= 0:
        raise ValueError("thickness parameter h must be positive")
    v = np.asarray(v, dtype=float)
    if v.ndim != 4 or v.shape[-1] != 3:
        raise ValueError("expected field of shape (n1, n2, n3, 3)")
    dx1, dx2, dx3 = spacings
    g = np.empty(v.shape[:-1] + (3, 3))
    for comp in range(3):
        g[..., comp, 0] = _d1(v[..., comp], 0, dx1)
        g[..., comp, 1] = _d1(v[..., comp], 1, dx2)
        g[..., comp, 2] = _d1(v[..., comp], 2, dx3) / h
    sym = 0.5 * (g + np.swapaxes(g, -1, -2))
    return sym3_to_vec(sym)
