"""Sparse difference operators for the macro, transverse, and cell grids.

Macro fields live on padded arrays with a data frame of width two: the
inner q x q block holds the unknown nodes and the two surrounding rings
carry the boundary datum. Strains are collocated at the inner nodes plus
the first ring, all with centered stencils, so (i) a state equal to the
datum everywhere is an exact discrete equilibrium for affine/quadratic
data (the stencil coefficients telescope at every free node under uniform
quadrature weights), and (ii) a displacement mismatch with the datum
appears as strain on the two outermost strain rows with total weight equal
to the edge measure, pricing boundary plastic slip exactly.

Cell (torus) operators use forward differences with periodic wrap-around,
whose transposes are exact backward-difference divergences (summation by
parts holds to machine precision).

All operators are scipy.sparse matrices acting on flattened fields;
component-major layout throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

SQ2 = np.sqrt(2.0)

PAD = 2  # data frame width


def _eye(n):
    return sp.identity(n, format="csr")


def d1_points(q: int, dx: float) -> sp.csr_matrix:
    """Centered first derivative at the q+2 strain points of a padded axis.

    Point p (p = 0..q+1) sits at padded index p+1; the row reads padded
    p and p+2.
    """
    n = q + 2
    rows = np.repeat(np.arange(n), 2)
    cols = np.empty(2 * n, dtype=int)
    cols[0::2] = np.arange(n)
    cols[1::2] = np.arange(n) + 2
    vals = np.tile([-1.0 / (2 * dx), 1.0 / (2 * dx)], n)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, q + 4))


def d2_points(q: int, dx: float) -> sp.csr_matrix:
    """Three-point second derivative at the q+2 strain points."""
    n = q + 2
    rows = np.repeat(np.arange(n), 3)
    cols = (np.arange(n)[:, None] + np.array([0, 1, 2])[None, :]).ravel()
    vals = np.tile(np.array([1.0, -2.0, 1.0]) / dx**2, n)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, q + 4))


def restrict_points(q: int) -> sp.csr_matrix:
    """Pick the q+2 strain points (padded indices 1..q+2)."""
    n = q + 2
    rows = np.arange(n)
    return sp.csr_matrix((np.ones(n), (rows, rows + 1)), shape=(n, q + 4))


def d1_onesided(n: int, dx: float) -> sp.csr_matrix:
    """Centered first derivative, first-order one-sided at the two ends.

    Square (no ghosts); used along the free thickness direction.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    mat = sp.lil_matrix((n, n))
    mat[0, 0], mat[0, 1] = -1.0 / dx, 1.0 / dx
    mat[n - 1, n - 2], mat[n - 1, n - 1] = -1.0 / dx, 1.0 / dx
    for i in range(1, n - 1):
        mat[i, i - 1] = -1.0 / (2 * dx)
        mat[i, i + 1] = 1.0 / (2 * dx)
    return mat.tocsr()


def pd1_forward(n: int, dy: float) -> sp.csr_matrix:
    """Periodic forward difference on an n-node circle."""
    rows = np.repeat(np.arange(n), 2)
    cols = np.empty(2 * n, dtype=int)
    cols[0::2] = np.arange(n)
    cols[1::2] = (np.arange(n) + 1) % n
    vals = np.tile([-1.0 / dy, 1.0 / dy], n)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def padded_index_sets(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices of the free inner block and the width-2 data frame."""
    npad = q + 4
    grid = np.arange(npad * npad).reshape(npad, npad)
    free = grid[PAD:-PAD, PAD:-PAD].ravel()
    mask = np.ones((npad, npad), dtype=bool)
    mask[PAD:-PAD, PAD:-PAD] = False
    ghost = grid[mask].ravel()
    return free, ghost


def split_columns(op: sp.spmatrix, free: np.ndarray, ghost: np.ndarray,
                  ncomp: int, block: int):
    """Split an operator on padded component-major fields into free/data parts."""
    op = op.tocsc()
    f_idx = np.concatenate([free + c * block for c in range(ncomp)])
    g_idx = np.concatenate([ghost + c * block for c in range(ncomp)])
    return op[:, f_idx].tocsr(), op[:, g_idx].tocsr()


@dataclass
class MacroOps:
    """Mid-plane operators: membrane strain and deflection Hessian."""
    q: int            # unknown nodes per side
    dx: float
    dy: float

    def __post_init__(self):
        q, dx, dy = self.q, self.dx, self.dy
        npad = q + 4
        R = restrict_points(q)
        Dx = sp.kron(d1_points(q, dx), R, format="csr")
        Dy = sp.kron(R, d1_points(q, dy), format="csr")
        self.npts_side = q + 2
        npts = self.npts_side**2
        Z = sp.csr_matrix((npts, npad * npad))
        # membrane strain rows (Mandel): E11, E22, (d1 u2 + d2 u1)/sqrt2
        self.Ebar_pad = sp.vstack([
            sp.hstack([Dx, Z]),
            sp.hstack([Z, Dy]),
            sp.hstack([Dy / SQ2, Dx / SQ2]),
        ]).tocsr()
        # deflection Hessian rows (Mandel): d11, d22, sqrt2*d12
        D11 = sp.kron(d2_points(q, dx), R, format="csr")
        D22 = sp.kron(R, d2_points(q, dy), format="csr")
        D12 = sp.kron(d1_points(q, dx), d1_points(q, dy), format="csr")
        self.Hess_pad = sp.vstack([D11, D22, SQ2 * D12]).tocsr()

        self.free, self.ghost = padded_index_sets(q)
        self.block = npad * npad
        self.Ebar_f, self.Ebar_g = split_columns(self.Ebar_pad, self.free,
                                                 self.ghost, 2, self.block)
        self.Hess_f, self.Hess_g = split_columns(self.Hess_pad, self.free,
                                                 self.ghost, 1, self.block)
        self.npts = npts
        self.ndof_ubar = 2 * q * q
        self.ndof_u3 = q * q


@dataclass
class MicroOps:
    """Periodic cell operators: strain, gradient, Hessian, divergences."""
    m: int

    def __post_init__(self):
        m = self.m
        hy = 1.0 / m
        P1 = sp.kron(pd1_forward(m, hy), _eye(m), format="csr")
        P2 = sp.kron(_eye(m), pd1_forward(m, hy), format="csr")
        self.P1, self.P2 = P1, P2
        npts = m * m
        Z = sp.csr_matrix((npts, npts))
        self.Ey = sp.vstack([
            sp.hstack([P1, Z]),
            sp.hstack([Z, P2]),
            sp.hstack([P2 / SQ2, P1 / SQ2]),
        ]).tocsr()
        # scalar Hessian: 3-point second differences, forward-forward cross
        D11 = (-P1.T @ P1).tocsr()
        D22 = (-P2.T @ P2).tocsr()
        D12 = (P1 @ P2).tocsr()
        self.D2y = sp.vstack([D11, D22, SQ2 * D12]).tocsr()
        self.Dy = sp.vstack([P1, P2]).tocsr()
        self.npts = npts

    def mean_rows(self, ncomp: int) -> sp.csr_matrix:
        """Rows computing the cell means of each of ncomp stacked scalars."""
        one = sp.csr_matrix(np.full((1, self.npts), 1.0 / self.npts))
        return sp.block_diag([one] * ncomp).tocsr()


@dataclass
class Ops3D:
    """Scaled symmetrized gradient of the rescaled plate displacement.

    Maps padded 3-vector fields (width-2 data frame laterally; the
    thickness direction is free) to Sym3 Mandel strains at all lateral
    strain points and thickness nodes, with the thickness derivatives
    carrying the 1/h and 1/h^2 factors.
    """
    q: int
    nz: int
    dx: float
    dy: float
    dz: float
    h: float

    def __post_init__(self):
        q, nz = self.q, self.nz
        npad = q + 4
        R = restrict_points(q)
        Iz = _eye(nz)
        Dx = sp.kron(sp.kron(d1_points(q, self.dx), R), Iz, format="csr")
        Dy = sp.kron(sp.kron(R, d1_points(q, self.dy)), Iz, format="csr")
        Dz = sp.kron(sp.kron(R, R), d1_onesided(nz, self.dz), format="csr")
        self.npts_side = q + 2
        npts = self.npts_side**2 * nz
        Z = sp.csr_matrix((npts, npad * npad * nz))
        h = self.h
        rows = [
            [Dx, Z, Z],                                  # 11
            [Z, Dy, Z],                                  # 22
            [Z, Z, Dz / h**2],                           # 33
            [Dy / SQ2, Dx / SQ2, Z],                     # sqrt2 * 12
            [Dz / (SQ2 * h), Z, Dx / (SQ2 * h)],         # sqrt2 * (1/h) 13
            [Z, Dz / (SQ2 * h), Dy / (SQ2 * h)],         # sqrt2 * (1/h) 23
        ]
        self.B_pad = sp.vstack([sp.hstack(r) for r in rows]).tocsr()
        free2d, ghost2d = padded_index_sets(q)
        self.free = (free2d[:, None] * nz + np.arange(nz)[None, :]).ravel()
        self.ghost = (ghost2d[:, None] * nz + np.arange(nz)[None, :]).ravel()
        self.block = npad * npad * nz
        self.B_f, self.B_g = split_columns(self.B_pad, self.free, self.ghost,
                                           3, self.block)
        self.npts = npts
        self.ndof = 3 * q * q * nz
