"""Dimension-reduced constitutive law for the vanishing-ratio regime.

For a phase with stress law C, the reduction operator augments an in-plane
strain with the transverse entries (l1, l2, l3) that minimize the elastic
energy of the augmented 3x3 matrix. The minimizer solves a 3x3 SPD
stationarity system, so the operator is linear and is cached as a 6x3
Mandel matrix per phase. Derived objects:

* reduced energy  Q_r(xi) = Q(A xi), an SPD quadratic form on Sym2;
* reduced stress  C_r xi = C A xi, with vanishing (i,3) components;
* reduced yield set  K_r = {s : embed(s) - (tr s / 3) I in K}, an ellipsoid
  whenever K is;
* reduced dissipation  H_r = support function of K_r, in closed form via
  the inverse Gram form of the embedding map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensors as tn
from .materials import DEV_PROJ, Ellipsoid, MaterialPhase, VonMises

# Transverse strain structures (Mandel): 2*(e1 sym e3), 2*(e2 sym e3), e3 x e3.
_T = np.zeros((6, 3))
_T[4, 0] = tn.SQRT2
_T[5, 1] = tn.SQRT2
_T[2, 2] = 1.0

# Injection of Sym2 Mandel vectors into Sym3 (upper-left block).
_EMBED = np.zeros((6, 3))
_EMBED[0, 0] = 1.0
_EMBED[1, 1] = 1.0
_EMBED[3, 2] = 1.0

# K_r embedding: L s = embed(s) - (tr s / 3) I, always trace-free.
_LMAP = _EMBED.copy()
for _j in range(3):
    _tr = _EMBED[0, _j] + _EMBED[1, _j]
    _LMAP[:3, _j] -= _tr / 3.0


@dataclass
class ReducedLaw:
    """Cached reduced law for one material phase."""
    phase: MaterialPhase

    def __post_init__(self):
        C = self.phase.stiffness_matrix()
        S = _T.T @ C @ _T
        try:
            rhs = -np.linalg.solve(S, _T.T @ C @ _EMBED)
        except np.linalg.LinAlgError as exc:
            raise ValueError("singular transverse stationarity system; "
                             "corrupted phase data") from exc
        self.lambda_op = rhs                      # (3, 3): xi2 -> (l1, l2, l3)
        self.A_op = _EMBED + _T @ rhs             # (6, 3): xi2 -> A xi
        self.C_r3 = C @ self.A_op                 # (6, 3): xi2 -> stress
        self.C_r2 = self.A_op.T @ C @ self.A_op   # (3, 3): Q_r Hessian
        self.C_r2 = (self.C_r2 + self.C_r2.T) / 2.0

        m6 = self._yield_form6()
        self.M_Kr = _LMAP.T @ m6 @ _LMAP          # (3, 3): K_r ellipsoid form
        self.M_Kr = (self.M_Kr + self.M_Kr.T) / 2.0
        try:
            self._hr_gram_inv = np.linalg.inv(self.M_Kr)
        except np.linalg.LinAlgError as exc:
            raise ValueError("ill-conditioned yield form") from exc
        w = np.linalg.eigvalsh(self.M_Kr)
        if w.min() <= 0:
            raise ValueError("ill-conditioned yield form")
        self.r_H = 1.0 / np.sqrt(w.max())
        self.R_H = 1.0 / np.sqrt(w.min())

    def _yield_form6(self) -> np.ndarray:
        ys = self.phase.yield_set
        if isinstance(ys, VonMises):
            return DEV_PROJ / ys.sigma_y**2
        if isinstance(ys, Ellipsoid):
            return ys.matrix
        raise TypeError(f"unsupported yield set {type(ys).__name__}")

    # -- operators ---------------------------------------------------------

    def reduction_operator(self, xi: np.ndarray) -> np.ndarray:
        """Augmented matrix A xi as Sym3 Mandel vectors (broadcasting)."""
        return np.einsum("ij,...j->...i", self.A_op, np.asarray(xi, float))

    def transverse_components(self, xi: np.ndarray) -> np.ndarray:
        """The minimizing triple (l1, l2, l3) for an in-plane strain."""
        return np.einsum("ij,...j->...i", self.lambda_op, np.asarray(xi, float))

    def reduced_energy(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, float)
        return 0.5 * np.einsum("...i,ij,...j->...", xi, self.C_r2, xi)

    def reduced_tensor_apply(self, xi: np.ndarray) -> np.ndarray:
        """Reduced stress C_r xi as Sym3 Mandel vectors; (i,3) entries vanish."""
        return np.einsum("ij,...j->...i", self.C_r3, np.asarray(xi, float))

    def in_plane_stress(self, xi: np.ndarray) -> np.ndarray:
        """2x2 minor of the reduced stress as Sym2 Mandel vectors."""
        return np.einsum("ij,...j->...i", self.C_r2, np.asarray(xi, float))

    # -- reduced yield set and dissipation ----------------------------------

    def reduced_yield_contains(self, sigma: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Membership in K_r, checked through the 3d embedding."""
        sigma = np.asarray(sigma, float)
        lifted = np.einsum("ij,...j->...i", _LMAP, sigma)
        return self.phase.yield_set.contains(lifted, tol=tol)

    def reduced_dissipation(self, xi: np.ndarray) -> np.ndarray:
        """Support function of K_r: sqrt(xi : M_Kr^{-1} xi)."""
        xi = np.asarray(xi, float)
        q = np.einsum("...i,ij,...j->...", xi, self._hr_gram_inv, xi)
        return np.sqrt(np.maximum(q, 0.0))

    def reduced_dissipation_argmax(self, xi: np.ndarray) -> np.ndarray:
        """The maximizer in K_r attaining H_r(xi); zero maps to zero."""
        xi = np.asarray(xi, float)
        val = self.reduced_dissipation(xi)
        num = np.einsum("ij,...j->...i", self._hr_gram_inv, xi)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = num / val[..., None]
        return np.where(val[..., None] > 0, out, 0.0)


def reduced_laws(phases) -> list[ReducedLaw]:
    return [ReducedLaw(p) for p in phases]
