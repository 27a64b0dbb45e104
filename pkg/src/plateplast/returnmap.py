"""Pointwise plastic updates: exact proximal maps of support functions.

Each quadrature point solves

    min over dP of  (1/2) (xi - dP) : C (xi - dP) + H(dP)

where H is the support function of a convex set K (a ball or an ellipsoid).
The minimizer projects the trial stress C xi onto K in the C^{-1} metric:
radial return for the isotropic von Mises case, otherwise a one-parameter
family sigma(a) = (I + a C M)^{-1} sigma_trial with the multiplier found by
a scalar Newton iteration on the yield residual. All routines are
vectorized over leading point axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensors as tn


class ReturnMappingError(RuntimeError):
    """Newton failure at one or more quadrature points."""

    def __init__(self, indices, residuals):
        self.indices = indices
        self.residuals = residuals
        super().__init__(f"return mapping did not converge at points "
                         f"{indices[:8]!r} (|g| up to {residuals.max():g})")


def radial_return(trial_dev: np.ndarray, mu: float, sigma_y: float):
    """Isotropic von Mises update on the deviator.

    trial_dev holds deviatoric Sym3 Mandel vectors (points, 6). Returns
    (dP, sigma_dev) with sigma_dev = 2 mu (trial_dev - dP) inside or on the
    yield ball.
    """
    trial_dev = np.asarray(trial_dev, dtype=float)
    s_trial = 2.0 * mu * trial_dev
    nrm = tn.norm(s_trial)
    over = np.maximum(nrm - sigma_y, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = over / (2.0 * mu * nrm)
    scale = np.where(nrm > 0, scale, 0.0)
    dP = scale[..., None] * s_trial
    return dP, 2.0 * mu * (trial_dev - dP)


@dataclass
class EllipsoidReturn:
    """Prox of the support function of {s : s:M s <= 1} in the C metric.

    C and M are SPD on the working space (the full Sym2 space, or the
    deviatoric subspace in reduced coordinates). Factorizations are cached;
    apply() is vectorized over points.
    """
    C: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        M = np.asarray(self.M, dtype=float)
        wc, vc = np.linalg.eigh((C + C.T) / 2.0)
        if wc.min() <= 0:
            raise ValueError("elastic operator must be SPD")
        self._C = C
        self._Chalf = (vc * np.sqrt(wc)) @ vc.T
        self._Chalf_inv = (vc / np.sqrt(wc)) @ vc.T
        S = self._Chalf @ ((M + M.T) / 2.0) @ self._Chalf
        d, V = np.linalg.eigh((S + S.T) / 2.0)
        if d.min() <= 0:
            raise ValueError("yield form must be SPD")
        self._d = d
        self._V = V

    def apply(self, trial: np.ndarray, tol: float = 1e-12,
              max_iter: int = 100):
        """Return (dP, sigma) for trial strains of shape (..., dim)."""
        trial = np.asarray(trial, dtype=float)
        shape = trial.shape
        x = trial.reshape(-1, shape[-1])
        sigma_tr = x @ self._C.T
        zeta = (sigma_tr @ self._Chalf_inv.T) @ self._V
        q0 = np.einsum("pi,i,pi->p", zeta, self._d, zeta)
        outside = q0 > 1.0
        alpha = np.zeros(len(x))
        if np.any(outside):
            z2 = zeta[outside] ** 2
            d = self._d
            a = np.zeros(z2.shape[0])
            g = np.ones_like(a)
            for _ in range(max_iter):
                den = 1.0 + np.outer(a, d)
                g = np.sum(d * z2 / den**2, axis=1) - 1.0
                if np.all(np.abs(g) <= tol):
                    break
                gp = -2.0 * np.sum(d**2 * z2 / den**3, axis=1)
                a = a - g / gp
            bad = np.abs(g) > tol
            if np.any(bad):
                raise ReturnMappingError(np.nonzero(outside)[0][bad],
                                         np.abs(g[bad]))
            alpha[outside] = a
        den = 1.0 + alpha[:, None] * self._d[None, :]
        sigma = ((zeta / den) @ self._V.T) @ self._Chalf.T
        dP = alpha[:, None] * (sigma @ self.M.T)
        return dP.reshape(shape), sigma.reshape(shape)
