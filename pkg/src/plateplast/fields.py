"""Discrete fields on the plate, the periodicity cell, and product grids.

Conventions
-----------
* Mid-plane: nodes x = (i*dx, j*dy), i,j = 0..cells, on a rectangle; the
  transverse interval (-1/2, 1/2) carries an N-point quadrature rule
  (Gauss-Legendre by default, uniform Simpson optionally), weights summing
  to one.
* Periodicity cell: an N_Y x N_Y grid of nodes y = (r/N_Y, s/N_Y) with
  periodic wrap-around; cell integrals are plain node averages.
* Transverse moments split a field into bar + x3*hat + perp, orthogonal in
  the transverse L2 product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def transverse_rule(n: int, rule: str = "gauss") -> tuple[np.ndarray, np.ndarray]:
    """Quadrature points and weights on (-1/2, 1/2); weights sum to 1."""
    if n < 3:
        raise ValueError("need at least 3 transverse quadrature points")
    if rule == "gauss":
        z, w = np.polynomial.legendre.leggauss(n)
        return 0.5 * z, 0.5 * w
    if rule == "simpson":
        if n % 2 == 0:
            raise ValueError("simpson rule needs an odd point count")
        z = np.linspace(-0.5, 0.5, n)
        hw = 1.0 / (n - 1)
        w = np.full(n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        return z, w * hw / 3.0
    raise ValueError(f"unknown transverse rule {rule!r}")


@dataclass
class PlateGrid:
    """Structured grids for the mid-plane, thickness, and periodicity cell."""
    lx: float = 1.0
    ly: float = 1.0
    cells: int = 16
    n_transverse: int = 4
    rule: str = "gauss"
    micro: int = 8

    def __post_init__(self):
        if self.cells < 2:
            raise ValueError("need at least 2 cells per side")
        self.dx = self.lx / self.cells
        self.dy = self.ly / self.cells
        self.nodes = self.cells + 1
        self.x1 = np.arange(self.nodes) * self.dx
        self.x2 = np.arange(self.nodes) * self.dy
        self.z, self.wz = transverse_rule(self.n_transverse, self.rule)
        self.y = np.arange(self.micro) / self.micro
        # uniform node weights: boundary nodes carry the boundary band, so
        # their full weight prices edge plastic densities exactly
        self.wxy = np.full((self.nodes, self.nodes), self.dx * self.dy)

    def macro_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")


@dataclass
class MomentTriple:
    """Transverse decomposition f = bar + x3*hat + perp."""
    bar: np.ndarray
    hat: np.ndarray
    perp: np.ndarray
    z: np.ndarray
    axis: int

    def reconstruct(self) -> np.ndarray:
        zshape = [1] * self.perp.ndim
        zshape[self.axis] = len(self.z)
        z = self.z.reshape(zshape)
        bar = np.expand_dims(self.bar, self.axis)
        hat = np.expand_dims(self.hat, self.axis)
        return bar + z * hat + self.perp


def moments(f: np.ndarray, z: np.ndarray, wz: np.ndarray,
            axis: int = -1) -> MomentTriple:
    """Zero-th and first transverse moments plus the orthogonal remainder.

    bar = integral of f over the thickness, hat = 12 * integral of x3*f
    (the factor 12 comes from the second moment of the unit thickness,
    so hat recovers g exactly when f = x3*g).
    """
    f = np.asarray(f, dtype=float)
    axis = axis % f.ndim
    bar = np.tensordot(f, wz, axes=([axis], [0]))
    hat = 12.0 * np.tensordot(f, wz * z, axes=([axis], [0]))
    zshape = [1] * f.ndim
    zshape[axis] = len(z)
    zz = z.reshape(zshape)
    perp = f - np.expand_dims(bar, axis) - zz * np.expand_dims(hat, axis)
    return MomentTriple(bar=bar, hat=hat, perp=perp, z=z, axis=axis)


def periodic_interp(F: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bilinear periodic interpolation of cell data at points y in [0,1)^2.

    `F` holds node values on the grid y = (r/N, s/N); trailing axes of F
    beyond the first two are carried along.
    """
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    y = np.asarray(y, dtype=float)
    t = (y % 1.0) * n
    i0 = np.floor(t[..., 0]).astype(int) % n
    j0 = np.floor(t[..., 1]).astype(int) % n
    fi = t[..., 0] - np.floor(t[..., 0])
    fj = t[..., 1] - np.floor(t[..., 1])
    i1 = (i0 + 1) % n
    j1 = (j0 + 1) % n
    extra = (1,) * (F.ndim - 2)
    fi = fi.reshape(fi.shape + extra)
    fj = fj.reshape(fj.shape + extra)
    return ((1 - fi) * (1 - fj) * F[i0, j0] + fi * (1 - fj) * F[i1, j0]
            + (1 - fi) * fj * F[i0, j1] + fi * fj * F[i1, j1])


def periodic_sample(F: np.ndarray, eps: float, x: np.ndarray) -> np.ndarray:
    """Evaluate the eps-periodic extension of a cell field at points x.

    The value is F at the fractional part of x/eps, interpolated
    bilinearly on the periodic raster; exactly 1-periodic in x/eps.
    """
    if eps <= 0:
        raise ValueError("period eps must be positive")
    x = np.asarray(x, dtype=float)
    return periodic_interp(F, (x / eps) % 1.0)


def unfold(f: np.ndarray, eps: float, dx: float, micro: int,
           x0: float = 0.0) -> np.ndarray:
    """Periodic unfolding of a mid-plane node field onto cell variables.

    `f` has macro node axes first (values at x = x0 + i*dx along both
    axes); the result has shape (periods1, periods2, micro, micro) + rest,
    holding f evaluated at eps*floor(x/eps) + eps*y for y on the cell grid.
    Exact (pure indexing) when eps is an integer multiple of dx and the
    cell grid matches the nodes-per-period; interpolated otherwise.
    """
    if eps <= 0:
        raise ValueError("period eps must be positive")
    f = np.asarray(f, dtype=float)
    n1, n2 = f.shape[:2]
    m = eps / dx
    per1 = int(np.floor(((n1 - 1) * dx + x0) / eps + 1e-12))
    per2 = int(np.floor(((n2 - 1) * dx + x0) / eps + 1e-12))
    aligned = (abs(m - round(m)) < 1e-9 * max(1.0, m)
               and round(m) == micro and abs(x0) < 1e-12)
    if aligned:
        m = int(round(m))
        out = np.empty((per1, per2, micro, micro) + f.shape[2:])
        for r in range(micro):
            for s in range(micro):
                out[:, :, r, s] = f[r:per1 * m:m, s:per2 * m:m]
        return out
    # general path: anchor + eps*y, bilinear on the macro grid
    ys = np.arange(micro) / micro
    out = np.empty((per1, per2, micro, micro) + f.shape[2:])
    for a in range(per1):
        for b in range(per2):
            xs = (a * eps + eps * ys - x0) / dx
            xt = (b * eps + eps * ys - x0) / dx
            i0 = np.clip(np.floor(xs).astype(int), 0, n1 - 2)
            j0 = np.clip(np.floor(xt).astype(int), 0, n2 - 2)
            fi = (xs - i0)[:, None]
            fj = (xt - j0)[None, :]
            extra = (1,) * (f.ndim - 2)
            fi = fi.reshape(fi.shape + extra)
            fj = fj.reshape(fj.shape + extra)
            out[a, b] = ((1 - fi) * (1 - fj) * f[np.ix_(i0, j0)]
                         + fi * (1 - fj) * f[np.ix_(i0 + 1, j0)]
                         + (1 - fi) * fj * f[np.ix_(i0, j0 + 1)]
                         + fi * fj * f[np.ix_(i0 + 1, j0 + 1)])
    return out


def two_scale_error(f_h: np.ndarray, eps: float, F: np.ndarray, dx: float,
                    weights: np.ndarray | None = None) -> float:
    """Weighted L2 distance between an oscillating field and a two-scale one.

    `f_h` has macro node axes first (nodes at x = i*dx); `F` shares those
    macro axes, followed by two cell axes (N_YF x N_YF node grid on the
    cell) and then the component axes of f_h. F is sampled at the cell
    point frac(x/eps) of each macro node (periodic bilinear), and the
    pointwise difference is accumulated with `weights` over the macro axes
    (uniform if omitted).
    """
    f_h = np.asarray(f_h, dtype=float)
    F = np.asarray(F, dtype=float)
    n1, n2 = f_h.shape[:2]
    if F.shape[:2] != (n1, n2):
        raise ValueError("macro axes of F must match f_h")
    x1 = (np.arange(n1) * dx / eps) % 1.0
    x2 = (np.arange(n2) * dx / eps) % 1.0
    nY = F.shape[2]
    t1 = x1 * nY
    t2 = x2 * nY
    i0 = np.floor(t1 + 1e-9).astype(int) % nY
    j0 = np.floor(t2 + 1e-9).astype(int) % nY
    fi = t1 - np.floor(t1 + 1e-9)
    fj = t2 - np.floor(t2 + 1e-9)
    i1 = (i0 + 1) % nY
    j1 = (j0 + 1) % nY
    Ia, Ib = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    rest = (1,) * (F.ndim - 4)
    wfi = fi[Ia].reshape(Ia.shape + rest)
    wfj = fj[Ib].reshape(Ib.shape + rest)
    G = ((1 - wfi) * (1 - wfj) * F[Ia, Ib, i0[Ia], j0[Ib]]
         + wfi * (1 - wfj) * F[Ia, Ib, i1[Ia], j0[Ib]]
         + (1 - wfi) * wfj * F[Ia, Ib, i0[Ia], j1[Ib]]
         + wfi * wfj * F[Ia, Ib, i1[Ia], j1[Ib]])
    diff2 = np.sum((f_h - G) ** 2, axis=tuple(range(2, f_h.ndim)))
    if weights is None:
        weights = np.full((n1, n2), dx * dx)
    return float(np.sqrt(np.sum(weights * diff2)))


def field_norm(f: np.ndarray, weights: np.ndarray) -> float:
    """Weighted L2 norm with weights over the two leading macro axes."""
    f = np.asarray(f, dtype=float)
    sq = np.sum(f * f, axis=tuple(range(2, f.ndim)))
    return float(np.sqrt(np.sum(weights * sq)))


def write_field_csv(path, array: np.ndarray, name: str = "value"):
    """Flatten a field to CSV in C order; the header documents the shape."""
    array = np.asarray(array)
    flat = array.reshape(-1)
    with open(path, "w") as f:
        f.write(f"# shape={array.shape} order=C field={name}\n")
        f.write("flat_index,%s\n" % name)
        for i, v in enumerate(flat):
            f.write("%d,%.17g\n" % (i, v))


def write_vtk_structured_points(path, fields: dict[str, np.ndarray],
                                spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
    """Legacy ASCII VTK structured-points writer for 2-d or 3-d scalars."""
    first = next(iter(fields.values()))
    dims = first.shape + (1,) * (3 - first.ndim)
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\nplateplast field\nASCII\n")
        f.write("DATASET STRUCTURED_POINTS\n")
        f.write("DIMENSIONS %d %d %d\n" % dims)
        f.write("ORIGIN %g %g %g\n" % tuple(origin))
        f.write("SPACING %g %g %g\n" % tuple(spacing))
        f.write("POINT_DATA %d\n" % int(np.prod(dims)))
        for name, arr in fields.items():
            if arr.shape != first.shape:
                raise ValueError("all VTK fields must share one grid")
            f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in arr.reshape(-1, order="F"):
                f.write("%.17g\n" % v)
