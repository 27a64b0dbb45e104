"""Kirchhoff-Love states, boundary data, and admissibility residuals.

States store padded arrays: the ghost frame of a mid-plane field carries the
boundary datum, and strain stencils at boundary nodes read it, so the
mismatch between datum and displacement appears as strain concentrated at
the boundary nodes (the conforming-grid stand-in for plastic slip on the
lateral boundary).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensors as tn
from .ops import MacroOps, MicroOps, SQ2

_MONOS = ("1", "x", "y", "xx", "xy", "yy")


def _mono_eval(name, X1, X2, dx1=0, dx2=0):
    """Evaluate a monomial or one of its derivatives."""
    one = np.ones_like(X1)
    table = {
        (0, 0): {"1": one, "x": X1, "y": X2, "xx": X1 * X1, "xy": X1 * X2,
                 "yy": X2 * X2},
        (1, 0): {"1": 0, "x": one, "y": 0, "xx": 2 * X1, "xy": X2, "yy": 0},
        (0, 1): {"1": 0, "x": 0, "y": one, "xx": 0, "xy": X1, "yy": 2 * X2},
        (2, 0): {"1": 0, "x": 0, "y": 0, "xx": 2 * one, "xy": 0, "yy": 0},
        (1, 1): {"1": 0, "x": 0, "y": 0, "xx": 0, "xy": one, "yy": 0},
        (0, 2): {"1": 0, "x": 0, "y": 0, "xx": 0, "xy": 0, "yy": 2 * one},
    }
    val = table[(dx1, dx2)][name]
    return val if isinstance(val, np.ndarray) else val * one


@dataclass(frozen=True)
class LoadTerm:
    field: str                      # one of w1, w2, w3
    poly: dict                      # monomial -> coefficient
    time: tuple                     # piecewise-linear (t, scale) breakpoints

    def __post_init__(self):
        if self.field not in ("w1", "w2", "w3"):
            raise ValueError(f"unknown datum field {self.field!r}")
        for m in self.poly:
            if m not in _MONOS:
                raise ValueError(f"unknown monomial {m!r}")
        ts = [p[0] for p in self.time]
        if sorted(ts) != ts:
            raise ValueError("time table must be sorted")

    def scale(self, t: float) -> float:
        ts = np.array([p[0] for p in self.time])
        ss = np.array([p[1] for p in self.time])
        return float(np.interp(t, ts, ss))


class BoundaryDatum:
    """Time-parametrized Kirchhoff-Love boundary datum with analytic derivatives.

    Spatial parts are quadratic polynomials per component; time dependence is
    piecewise linear (absolutely continuous), evaluated per time step.
    """

    def __init__(self, terms: list[LoadTerm]):
        self.terms = list(terms)

    @staticmethod
    def from_json(spec: list[dict]) -> "BoundaryDatum":
        terms = [LoadTerm(field=o["field"], poly=dict(o["poly"]),
                          time=tuple((float(a), float(b)) for a, b in o["time"]))
                 for o in spec]
        return BoundaryDatum(terms)

    def _component(self, name, t, X1, X2, dx1=0, dx2=0):
        out = np.zeros_like(np.asarray(X1, dtype=float))
        for term in self.terms:
            if term.field != name:
                continue
            s = term.scale(t)
            if s == 0.0:
                continue
            for mono, coef in term.poly.items():
                out += s * coef * _mono_eval(mono, X1, X2, dx1, dx2)
        return out

    def wbar(self, t, X1, X2):
        return np.stack([self._component("w1", t, X1, X2),
                         self._component("w2", t, X1, X2)], axis=-1)

    def Ewbar(self, t, X1, X2):
        e11 = self._component("w1", t, X1, X2, 1, 0)
        e22 = self._component("w2", t, X1, X2, 0, 1)
        mix = (self._component("w2", t, X1, X2, 1, 0)
               + self._component("w1", t, X1, X2, 0, 1)) / SQ2
        return np.stack([e11, e22, mix], axis=-1)

    def w3(self, t, X1, X2):
        return self._component("w3", t, X1, X2)

    def grad_w3(self, t, X1, X2):
        return np.stack([self._component("w3", t, X1, X2, 1, 0),
                         self._component("w3", t, X1, X2, 0, 1)], axis=-1)

    def hess_w3(self, t, X1, X2):
        return np.stack([self._component("w3", t, X1, X2, 2, 0),
                         self._component("w3", t, X1, X2, 0, 2),
                         SQ2 * self._component("w3", t, X1, X2, 1, 1)], axis=-1)

    def kl_strain(self, t, X1, X2, z):
        """In-plane strain of the datum, E wbar - x3 D^2 w3 (Sym2 Mandel)."""
        e = self.Ewbar(t, X1, X2)[..., None, :]
        h = self.hess_w3(t, X1, X2)[..., None, :]
        z = np.asarray(z, dtype=float)[:, None]
        return e - z * h

    def kl_displacement(self, t, X1, X2, z):
        """Rescaled plate point values (wbar' - x3 grad w3, w3)."""
        wb = self.wbar(t, X1, X2)[..., None, :]
        g3 = self.grad_w3(t, X1, X2)[..., None, :]
        z = np.asarray(z, dtype=float)[:, None]
        inplane = wb - z * g3
        w3 = np.broadcast_to(self.w3(t, X1, X2)[..., None],
                             inplane.shape[:-1]).copy()
        return np.concatenate([inplane, w3[..., None]], axis=-1)


@dataclass
class KLState:
    """Mid-plane displacement on the padded grid (width-2 data frame)."""
    ubar_pad: np.ndarray            # (2, q+4, q+4)
    u3_pad: np.ndarray              # (q+4, q+4)

    @property
    def q(self) -> int:
        return self.u3_pad.shape[0] - 4

    def inner_ubar(self) -> np.ndarray:
        return np.moveaxis(self.ubar_pad[:, 2:-2, 2:-2], 0, -1)

    def inner_u3(self) -> np.ndarray:
        return self.u3_pad[2:-2, 2:-2]


def kl_strain(state: KLState, mops: MacroOps) -> tuple[np.ndarray, np.ndarray]:
    """Membrane strain and bending strain of a Kirchhoff-Love state.

    Returns (bar, hat) where bar is the discrete symmetric gradient of the
    in-plane field and hat = -D^2 u3, both Sym2 Mandel fields of shape
    (q+2, q+2, 3) at the strain points. Exact on affine in-plane fields
    and quadratic deflections.
    """
    s = mops.npts_side
    bar = (mops.Ebar_pad @ state.ubar_pad.ravel()).reshape(3, s, s)
    hat = -(mops.Hess_pad @ state.u3_pad.ravel()).reshape(3, s, s)
    return np.moveaxis(bar, 0, -1), np.moveaxis(hat, 0, -1)


@dataclass
class TwoScaleState:
    """Unknowns of a limit model on the macro x cell product grid.

    Vanishing-ratio regime: correctors mu (2M, N), kappa (M, N) per macro
    node; plastic field P (N, G, M, 3), in-plane Mandel. Diverging-ratio
    regime: correctors per (macro node, transverse point): mu (2M, N*G),
    kappa (M, N*G), zeta (N*G, 3); plastic P (N, G, M, 6), deviatoric.
    N = macro nodes, G = transverse points, M = cell nodes.
    """
    regime: str
    u: KLState
    mu: np.ndarray
    kappa: np.ndarray
    P: np.ndarray
    zeta: np.ndarray | None = None
    E: np.ndarray | None = None


def corrector_mean_residual(state: TwoScaleState) -> float:
    """Max cell-mean magnitude of the correctors (must vanish)."""
    res = max(np.abs(state.mu.reshape(2, -1, state.mu.shape[-1]).mean(axis=1)).max(),
              np.abs(state.kappa.mean(axis=0)).max())
    return float(res)


def project_mean_zero(state: TwoScaleState) -> None:
    """Remove the cell means of the correctors in place."""
    m2 = state.kappa.shape[0]
    mu = state.mu.reshape(2, m2, -1)
    mu -= mu.mean(axis=1, keepdims=True)
    state.kappa -= state.kappa.mean(axis=0, keepdims=True)


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------

def _boundary_mask(n: int) -> np.ndarray:
    """Strain points of the boundary band (two outermost rows per side)."""
    mask = np.zeros((n, n), dtype=bool)
    mask[:2, :] = mask[-2:, :] = True
    mask[:, :2] = mask[:, -2:] = True
    return mask


def admissibility_residual_h(u_pad: np.ndarray, e: np.ndarray, p: np.ndarray,
                             ghost_datum: np.ndarray, ops3d) -> dict:
    """Residuals of the rescaled admissibility conditions (scaled variables).

    `e` and `p` are the scaled elastic and plastic Sym3 Mandel fields at
    the strain points, shape (npts, 6); `p` is the scaled plastic field, so
    its trace residual expresses p11 + p22 + p33/h^2 = 0 of the unscaled
    one. The strain decomposition is checked at interior points and, in the
    same stencil convention, on the boundary band where it encodes the
    surface density (w - u) sym nu; `ghost_datum` holds the datum values on
    the data frame for the direct boundary-condition check.
    """
    n, nz = ops3d.npts_side, ops3d.nz
    total = (ops3d.B_pad @ u_pad.ravel()).reshape(6, n, n, nz)
    diff = total - (e + p).reshape(n, n, nz, 6).transpose(3, 0, 1, 2)
    bmask = _boundary_mask(n)
    interior = np.abs(diff[:, ~bmask, :]).max() if (~bmask).any() else 0.0
    boundary = np.abs(diff[:, bmask, :]).max()
    trace = np.abs(tn.tr3(p)).max()
    gvals = u_pad.reshape(3, -1)[:, ops3d.ghost]
    ghost_res = np.abs(gvals - ghost_datum.reshape(3, -1)).max()
    return {"interior": float(interior), "boundary": float(boundary),
            "trace": float(trace), "ghost_datum": float(ghost_res)}


def admissibility_residual_kl(state: KLState, e_bar, e_hat, p_bar, p_hat,
                              mops: MacroOps, perp_pair=None) -> dict:
    """Residuals of the moment form of Kirchhoff-Love admissibility.

    e_*/p_* are (n, n, 3) Mandel moment fields. Items: (i) membrane
    decomposition, (ii) bending decomposition (interior and boundary rows
    separately; boundary rows encode the edge densities through the ghost
    stencils), (iii) the perp pair if provided (p_perp + e_perp must
    vanish; structural when the state never carries independent perps).
    """
    bar, hat = kl_strain(state, mops)
    d_bar = bar - (e_bar + p_bar)
    d_hat = hat - (e_hat + p_hat)
    bmask = _boundary_mask(mops.npts_side)
    rep = {
        "membrane_interior": float(np.abs(d_bar[~bmask]).max()),
        "membrane_boundary": float(np.abs(d_bar[bmask]).max()),
        "bending_interior": float(np.abs(d_hat[~bmask]).max()),
        "bending_boundary": float(np.abs(d_hat[bmask]).max()),
    }
    if perp_pair is not None:
        e_perp, p_perp = perp_pair
        rep["perp"] = float(np.abs(e_perp + p_perp).max())
    else:
        rep["perp"] = 0.0
    return rep


def twoscale_residual(state: TwoScaleState, mops: MacroOps, micro: MicroOps,
                      z: np.ndarray) -> dict:
    """Constraint residual of the admissible two-scale configuration.

    Checks that the macro Kirchhoff-Love strain plus the cell corrector
    strain equals E + P at every (macro node, transverse point, cell node),
    that corrector cell means vanish, and (diverging-ratio regime) that P
    is deviatoric.
    """
    bar, hat = kl_strain(state.u, mops)
    N = bar.shape[0] * bar.shape[1]
    G = len(z)
    M = micro.npts
    A = bar.reshape(N, 3)
    B = hat.reshape(N, 3)
    if state.regime == "gamma0":
        ey = (micro.Ey @ state.mu).reshape(3, M, N)
        d2 = (micro.D2y @ state.kappa).reshape(3, M, N)
        tot = (A[:, None, None, :] + z[None, :, None, None] * B[:, None, None, :]
               + ey.transpose(2, 1, 0)[:, None, :, :]
               - z[None, :, None, None] * d2.transpose(2, 1, 0)[:, None, :, :])
        resid = np.abs(tot - state.E - state.P).max()
        dev_res = 0.0
    elif state.regime == "gammainf":
        NG = N * G
        ey = (micro.Ey @ state.mu).reshape(3, M, NG)
        dk = (micro.Dy @ state.kappa).reshape(2, M, NG)
        corr = np.zeros((NG, M, 6))
        corr[..., 0] = ey[0].T
        corr[..., 1] = ey[1].T
        corr[..., 3] = ey[2].T
        corr[..., 2] = state.zeta[:, None, 2]
        corr[..., 4] = SQ2 * (state.zeta[:, None, 0] + dk[0].T)
        corr[..., 5] = SQ2 * (state.zeta[:, None, 1] + dk[1].T)
        kl = A[:, None, :] + z[None, :, None] * B[:, None, :]
        kl6 = np.zeros((N, G, 6))
        kl6[..., 0] = kl[..., 0]
        kl6[..., 1] = kl[..., 1]
        kl6[..., 3] = kl[..., 2]
        tot = kl6.reshape(NG, 1, 6) + corr
        resid = np.abs(tot.reshape(N, G, M, 6) - state.E - state.P).max()
        dev_res = float(np.abs(tn.tr3(state.P)).max())
    else:
        raise ValueError(f"unknown regime {state.regime!r}")
    return {"constraint": float(resid),
            "corrector_mean": corrector_mean_residual(state),
            "deviatoric": dev_res}
