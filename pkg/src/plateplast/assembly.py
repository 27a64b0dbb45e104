"""Shared pieces of the elastic solvers: pointwise material matrices,
preconditioned conjugate gradients, and cached sparse factorizations."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def pointwise_material(cmats: np.ndarray, weights: np.ndarray) -> sp.csr_matrix:
    """Sparse matrix applying a weighted c x c material law at every point.

    Strain vectors are stored component-major, flat index = comp * npts +
    point; cmats has shape (npts, c, c) and weights (npts,). The result is
    the block operator with entries W[i*npts+p, j*npts+p] = w_p * c_p[i, j].
    """
    npts, c, _ = cmats.shape
    pts = np.arange(npts)
    rows = np.concatenate([i * npts + pts for i in range(c) for _ in range(c)])
    cols = np.concatenate([j * npts + pts for _ in range(c) for j in range(c)])
    vals = np.concatenate([weights * cmats[:, i, j]
                           for i in range(c) for j in range(c)])
    n = c * npts
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


class CountedOperator(spla.LinearOperator):
    """LinearOperator wrapper that counts applications."""

    def __init__(self, n, apply_fn):
        super().__init__(dtype=float, shape=(n, n))
        self.apply_fn = apply_fn
        self.count = 0

    def _matvec(self, x):
        self.count += 1
        return self.apply_fn(np.asarray(x, dtype=float).ravel())


def pcg(apply_h, b: np.ndarray, precond=None, tol: float = 1e-10,
        max_iter: int = 5000, x0: np.ndarray | None = None):
    """Preconditioned conjugate gradients on an SPD operator.

    Returns (x, iterations, relative_residual). Raises RuntimeError on
    non-convergence, which for these assemblies signals an indefinite
    operator (a bug) rather than a hard problem.
    """
    b = np.asarray(b, dtype=float).ravel()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    A = CountedOperator(len(b), apply_h)
    M = None
    if precond is not None:
        M = spla.LinearOperator(dtype=float, shape=(len(b), len(b)),
                                matvec=lambda r: precond(np.asarray(r).ravel()))
    x, info = spla.cg(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter, M=M)
    if info > 0:
        raise RuntimeError(f"conjugate gradients did not converge in "
                           f"{max_iter} iterations (indefinite assembly?)")
    rel = float(np.linalg.norm(b - apply_h(x)) / bnorm)
    return x, A.count, rel


class CholeskyBlocks:
    """Dense Cholesky of one SPD block reused across a batch of solves."""

    def __init__(self, mat: np.ndarray):
        import scipy.linalg as sla
        self._chol = sla.cho_factor((mat + mat.T) / 2.0)
        self._sla = sla

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._sla.cho_solve(self._chol, rhs)


def sparse_lu(mat: sp.spmatrix):
    return spla.splu(mat.tocsc())
