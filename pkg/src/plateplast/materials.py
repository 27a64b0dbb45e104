"""Per-phase constitutive laws and the multiphase periodicity cell.

A phase owns a deviatoric elasticity operator (isotropic 2*mu or a full SPD
operator on the 5-dimensional deviatoric space), a bulk coefficient k, and a
convex yield set given either as a von Mises ball of radius sigma_y or as an
ellipsoid {xi : xi:M xi <= 1} on deviatoric matrices. The stress law is

    C(y) xi = C_dev(y) xi_dev + k(y) tr(xi) I

and the dissipation density is the support function of the yield set, with
the minimum rule at raster cells flagged as interface cells.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import tensors as tn

# Orthonormal basis of the deviatoric subspace {v in R^6 : v1+v2+v3 = 0}.
_DEV_BASIS = np.zeros((6, 5))
_DEV_BASIS[:3, 0] = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
_DEV_BASIS[:3, 1] = np.array([1.0, 1.0, -2.0]) / np.sqrt(6.0)
_DEV_BASIS[3, 2] = 1.0
_DEV_BASIS[4, 3] = 1.0
_DEV_BASIS[5, 4] = 1.0

#: Orthonormal basis and projector of the deviatoric subspace (Mandel).
DEV_BASIS = _DEV_BASIS
DEV_PROJ = _DEV_BASIS @ _DEV_BASIS.T


def _check_spd(mat: np.ndarray, what: str) -> np.ndarray:
    w = np.linalg.eigvalsh(mat)
    if w.min() <= 0:
        raise ValueError(f"{what} must be symmetric positive definite "
                         f"(min eigenvalue {w.min():g})")
    return w


@dataclass(frozen=True)
class VonMises:
    """Ball of radius sigma_y in deviatoric matrices."""
    sigma_y: float

    def __post_init__(self):
        if self.sigma_y <= 0:
            raise ValueError("sigma_y must be positive")

    def form_reduced(self) -> np.ndarray:
        """Quadratic form on the deviatoric subspace (level set = 1)."""
        return np.eye(5) / self.sigma_y**2

    def contains(self, dev: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return tn.norm(dev) <= self.sigma_y * (1.0 + tol) + tol

    def support(self, xi: np.ndarray) -> np.ndarray:
        return self.sigma_y * tn.norm(xi)

    def boundary_point(self, direction: np.ndarray) -> np.ndarray:
        d = tn.dev3(direction)
        return self.sigma_y * d / tn.norm(d)

    def to_json(self) -> dict:
        return {"type": "von_mises", "sigma_y": self.sigma_y}


@dataclass(frozen=True)
class Ellipsoid:
    """Set {xi deviatoric : xi : M xi <= 1} for an SPD form M (Mandel 6x6)."""
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (6, 6):
            raise ValueError("ellipsoid form must be a 6x6 Mandel matrix")
        m = DEV_PROJ @ ((m + m.T) / 2.0) @ DEV_PROJ
        object.__setattr__(self, "matrix", m)
        _check_spd(self.form_reduced(), "ellipsoid yield form (on deviators)")

    def form_reduced(self) -> np.ndarray:
        return _DEV_BASIS.T @ self.matrix @ _DEV_BASIS

    def _reduced_inv(self) -> np.ndarray:
        return np.linalg.inv(self.form_reduced())

    def contains(self, dev: np.ndarray, tol: float = 0.0) -> np.ndarray:
        q = np.einsum("...i,ij,...j->...", dev, self.matrix, dev)
        return q <= 1.0 + tol

    def support(self, xi: np.ndarray) -> np.ndarray:
        z = np.einsum("ki,...k->...i", _DEV_BASIS, xi)
        q = np.einsum("...i,ij,...j->...", z, self._reduced_inv(), z)
        return np.sqrt(np.maximum(q, 0.0))

    def boundary_point(self, direction: np.ndarray) -> np.ndarray:
        d = tn.dev3(direction)
        q = float(np.einsum("i,ij,j->", d, self.matrix, d))
        return d / np.sqrt(q)

    def to_json(self) -> dict:
        return {"type": "ellipsoid", "matrix": self.matrix.tolist()}


def yield_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "von_mises":
        return VonMises(float(obj["sigma_y"]))
    if kind == "ellipsoid":
        return Ellipsoid(np.asarray(obj["matrix"], dtype=float))
    raise ValueError(f"unknown yield type {kind!r}")


def _nested(a, b) -> tuple[bool, bool]:
    """Return (a subset of b, b subset of a) for two yield sets."""
    ma, mb = a.form_reduced(), b.form_reduced()
    # K_a subset K_b  iff  xi:mb xi <= xi:ma xi on deviators.
    ga = scipy.linalg.eigh(mb, ma, eigvals_only=True)
    gb = scipy.linalg.eigh(ma, mb, eigvals_only=True)
    tol = 1e-12
    return bool(ga.max() <= 1.0 + tol), bool(gb.max() <= 1.0 + tol)


@dataclass(frozen=True)
class MaterialPhase:
    """One material phase: deviatoric elasticity, bulk coefficient, yield set."""
    mu: float | None = None
    c_dev: np.ndarray | None = None
    k: float = 1.0
    yield_set: VonMises | Ellipsoid = field(default_factory=lambda: VonMises(1.0))

    def __post_init__(self):
        if (self.mu is None) == (self.c_dev is None):
            raise ValueError("specify exactly one of mu or c_dev")
        if self.k <= 0:
            raise ValueError("bulk coefficient k must be positive")
        if self.mu is not None and self.mu <= 0:
            raise ValueError("shear coefficient mu must be positive")
        if self.c_dev is not None:
            c = np.asarray(self.c_dev, dtype=float)
            if c.shape != (6, 6):
                raise ValueError("c_dev must be a 6x6 Mandel matrix")
            c = DEV_PROJ @ ((c + c.T) / 2.0) @ DEV_PROJ
            object.__setattr__(self, "c_dev", c)
            _check_spd(_DEV_BASIS.T @ c @ _DEV_BASIS,
                       "deviatoric elasticity operator")

    def cdev_matrix(self) -> np.ndarray:
        """Deviatoric operator as a 6x6 Mandel matrix (zero on traces)."""
        if self.mu is not None:
            return 2.0 * self.mu * DEV_PROJ
        return self.c_dev

    def cdev_eig_bounds(self) -> tuple[float, float]:
        w = np.linalg.eigvalsh(_DEV_BASIS.T @ self.cdev_matrix() @ _DEV_BASIS)
        return float(w.min()), float(w.max())

    def stiffness_matrix(self) -> np.ndarray:
        """Full stress law as a 6x6 Mandel matrix: C xi = C_dev xi_dev + k tr(xi) I."""
        t = np.zeros((6, 6))
        t[:3, :3] = self.k
        return self.cdev_matrix() @ DEV_PROJ + t

    def elasticity_apply(self, xi: np.ndarray) -> np.ndarray:
        """Apply the stress law to Sym3 Mandel vectors (broadcasting)."""
        return np.einsum("ij,...j->...i", self.stiffness_matrix(),
                         np.asarray(xi, dtype=float))

    def quadratic_energy(self, xi: np.ndarray) -> np.ndarray:
        """Elastic energy density Q(xi) = (1/2) C xi : xi >= 0."""
        return 0.5 * tn.inner(self.elasticity_apply(xi), xi)

    def yield_contains(self, sigma_dev: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Membership of a deviatoric stress in the yield set.

        Rejects inputs whose trace exceeds 1e-10 times their norm.
        """
        sigma_dev = np.asarray(sigma_dev, dtype=float)
        bad = np.abs(tn.tr3(sigma_dev)) > 1e-10 * np.maximum(tn.norm(sigma_dev), 1e-300)
        if np.any(bad):
            raise ValueError("yield_contains expects deviatoric stresses")
        return self.yield_set.contains(sigma_dev, tol=tol)

    def support(self, xi: np.ndarray) -> np.ndarray:
        """Dissipation density H_i(xi) = sup over the yield set of tau : xi."""
        return self.yield_set.support(xi)

    def to_json(self) -> dict:
        out = {"k": self.k, "yield": self.yield_set.to_json()}
        if self.mu is not None:
            out["mu"] = self.mu
        else:
            out["c_dev"] = self.c_dev.tolist()
        return out

    @staticmethod
    def from_json(obj: dict) -> "MaterialPhase":
        kwargs = {"k": float(obj.get("k", 1.0)),
                  "yield_set": yield_from_json(obj["yield"])}
        if "mu" in obj:
            kwargs["mu"] = float(obj["mu"])
        if "c_dev" in obj:
            kwargs["c_dev"] = np.asarray(obj["c_dev"], dtype=float)
        return MaterialPhase(**kwargs)


class TorusGeometry:
    """Rasterized phase map on the unit periodicity cell.

    The cell is sampled on an N x N periodic grid of nodes y = (r/N, s/N);
    `raster[r, s]` is the phase id at node (r, s). Cells whose periodic
    4-neighborhood contains another phase are flagged as interface cells,
    where the dissipation takes the minimum of the adjacent phases.
    """

    def __init__(self, raster: np.ndarray, phases: list[MaterialPhase]):
        raster = np.asarray(raster, dtype=int)
        if raster.ndim != 2 or raster.shape[0] != raster.shape[1]:
            raise ValueError("raster must be a square 2-d integer array")
        if raster.min() < 0 or raster.max() >= len(phases):
            raise ValueError("raster contains invalid phase ids")
        self.raster = raster
        self.phases = list(phases)
        self.resolution = raster.shape[0]
        self._build_interfaces()

    def _build_interfaces(self):
        r = self.raster
        n = self.resolution
        neighbors = [np.roll(r, 1, 0), np.roll(r, -1, 0),
                     np.roll(r, 1, 1), np.roll(r, -1, 1)]
        self.interface_mask = np.zeros_like(r, dtype=bool)
        for nb in neighbors:
            self.interface_mask |= nb != r
        pairs = set()
        for nb in neighbors:
            diff = nb != r
            pairs.update(zip(r[diff].tolist(), nb[diff].tolist()))
        self.adjacent_pairs = sorted({tuple(sorted(p)) for p in pairs})

        # yield_ids: phase whose yield set governs dissipation at each cell;
        # at interface cells, the smallest nested set among the adjacent ones.
        self.yield_ids = r.copy()
        for rr, ss in zip(*np.nonzero(self.interface_mask)):
            cands = {int(r[rr, ss])}
            for dr, ds in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                cands.add(int(r[(rr + dr) % n, (ss + ds) % n]))
            best = int(r[rr, ss])
            for c in cands:
                if c != best and _nested(self.phases[c].yield_set,
                                         self.phases[best].yield_set)[0]:
                    best = c
            self.yield_ids[rr, ss] = best

    @property
    def area_fractions(self) -> np.ndarray:
        counts = np.bincount(self.raster.ravel(), minlength=len(self.phases))
        return counts / self.raster.size

    def phase_at(self, y: np.ndarray) -> np.ndarray:
        """Raster phase id at points y in [0,1)^2 (nearest node, periodic)."""
        y = np.asarray(y, dtype=float)
        n = self.resolution
        idx = np.rint(y * n).astype(int) % n
        return self.raster[idx[..., 0], idx[..., 1]]

    def coercivity_bounds(self) -> dict:
        """Uniform bounds r_c, R_c on elasticity and r_k, R_k on dissipation."""
        lo, hi, rk, Rk = np.inf, -np.inf, np.inf, -np.inf
        for p in self.phases:
            a, b = p.cdev_eig_bounds()
            lo, hi = min(lo, a / 2, p.k), max(hi, b / 2, p.k)
            w = np.linalg.eigvalsh(p.yield_set.form_reduced())
            rk = min(rk, 1.0 / np.sqrt(w.max()))
            Rk = max(Rk, 1.0 / np.sqrt(w.min()))
        return {"r_c": lo, "R_c": hi, "r_k": rk, "R_k": Rk}

    def dissipation_density(self, y: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Dissipation H(y, xi) at a point of the cell (interface min rule)."""
        xi = np.asarray(xi, dtype=float)
        bad = np.abs(tn.tr3(xi)) > 1e-10 * np.maximum(tn.norm(xi), 1e-300)
        if np.any(bad):
            raise ValueError("dissipation expects deviatoric arguments")
        y = np.asarray(y, dtype=float)
        n = self.resolution
        idx = np.rint(y * n).astype(int) % n
        r, s = idx[..., 0], idx[..., 1]
        if self.interface_mask[r, s]:
            cands = {int(self.raster[r, s])}
            for dr, ds in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                cands.add(int(self.raster[(r + dr) % n, (s + ds) % n]))
            return np.min([self.phases[i].support(xi) for i in cands], axis=0)
        return self.phases[int(self.raster[r, s])].support(xi)

    def check_phase_ordering(self) -> dict:
        """Verify yield-set nesting for every adjacent phase pair."""
        violations = []
        for i, j in self.adjacent_pairs:
            ij, ji = _nested(self.phases[i].yield_set, self.phases[j].yield_set)
            if not (ij or ji):
                violations.append((i, j))
        return {"ok": not violations, "violations": violations,
                "pairs": self.adjacent_pairs}

    def to_json(self) -> dict:
        return {"resolution": self.resolution,
                "phases": [p.to_json() for p in self.phases],
                "raster": self.raster.ravel().tolist()}

    @staticmethod
    def from_json(obj: dict) -> "TorusGeometry":
        n = int(obj["resolution"])
        phases = [MaterialPhase.from_json(p) for p in obj["phases"]]
        raster = np.asarray(obj["raster"], dtype=int)
        if raster.ndim == 1:
            raster = raster.reshape(n, n)
        return TorusGeometry(raster, phases)

    @staticmethod
    def load(path) -> "TorusGeometry":
        with open(path) as f:
            return TorusGeometry.from_json(json.load(f))


def single_phase(mu=1.0, k=1.0, sigma_y=1.0, resolution=4) -> TorusGeometry:
    """Convenience: homogeneous cell with one isotropic von Mises phase."""
    ph = MaterialPhase(mu=mu, k=k, yield_set=VonMises(sigma_y))
    return TorusGeometry(np.zeros((resolution, resolution), dtype=int), [ph])
