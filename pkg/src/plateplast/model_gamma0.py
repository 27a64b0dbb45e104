"""Two-scale limit model for the vanishing thickness-to-period ratio.

Unknowns: mid-plane displacement (in-plane field and deflection), cell
correctors mu (in-plane, mean-zero) and kappa (deflection-like, mean-zero)
per macro node, and an in-plane plastic field at every (macro node,
transverse point, cell node). The elastic energy density is the reduced
quadratic form of each cell node's phase; dissipation is the reduced
support function with the interface minimum rule.

The elastic step minimizes the quadratic energy at fixed plastic field by
preconditioned conjugate gradients whose preconditioner is an exact block
factorization: the cell problem has the same matrix at every macro node
(one dense Cholesky), and condensing it yields a constant effective
membrane/bending tensor whose sparse macro matrix is factorized once.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .assembly import CholeskyBlocks, pcg, pointwise_material, sparse_lu
from .fields import PlateGrid, moments
from .kinematics import (BoundaryDatum, KLState, TwoScaleState,
                         admissibility_residual_kl, project_mean_zero,
                         twoscale_residual)
from .materials import TorusGeometry
from .ops import MacroOps, MicroOps
from .reduction import ReducedLaw
from .returnmap import EllipsoidReturn


class ModelGamma0:
    regime = "gamma0"

    def __init__(self, geometry: TorusGeometry, grid: PlateGrid):
        if grid.micro != geometry.resolution:
            raise ValueError("grid.micro must match the geometry raster")
        order = geometry.check_phase_ordering()
        if not order["ok"]:
            raise ValueError(f"phase ordering violated: {order['violations']}")
        self.geom = geometry
        self.grid = grid
        self.n = grid.nodes
        self.N = self.n * self.n
        self.m = geometry.resolution
        self.M = self.m * self.m
        self.mops = MacroOps(self.n, grid.dx, grid.dy)
        self.micro = MicroOps(self.m)
        self.z, self.wz = grid.z, grid.wz
        self.G = len(self.z)
        if abs(np.dot(self.wz, self.z)) > 1e-13 or \
           abs(np.dot(self.wz, self.z**2) - 1.0 / 12.0) > 1e-13:
            raise ValueError("transverse rule must integrate x3 and x3^2 "
                             "exactly with symmetric points")
        self.laws = [ReducedLaw(p) for p in geometry.phases]
        pc = geometry.raster.ravel()
        yc = geometry.yield_ids.ravel()
        self.phase_cells, self.yield_cells = pc, yc
        self.C2 = np.array([self.laws[p].C_r2 for p in pc])      # (M,3,3)
        self.C3 = np.array([self.laws[p].C_r3 for p in pc])      # (M,6,3)
        self.wx = grid.wxy.ravel()
        self.groups = []
        for e, y in sorted({(int(a), int(b)) for a, b in zip(pc, yc)}):
            cells = np.nonzero((pc == e) & (yc == y))[0]
            ret = EllipsoidReturn(self.laws[e].C_r2, self.laws[y].M_Kr)
            self.groups.append((cells, ret, self.laws[y]))
        self._build_solver()

    # ------------------------------------------------------------------
    # assembly
    # ------------------------------------------------------------------

    def _build_solver(self):
        M, N, n = self.M, self.N, self.n
        Wc = pointwise_material(self.C2, np.full(M, 1.0 / M))
        Hmu = (self.micro.Ey.T @ Wc @ self.micro.Ey).toarray()
        Hka = (self.micro.D2y.T @ Wc @ self.micro.D2y).toarray() / 12.0
        D0 = np.zeros((3 * M, 3 * M))
        D0[:2 * M, :2 * M] = Hmu
        D0[2 * M:, 2 * M:] = Hka
        rho = np.trace(D0) / (3 * M)
        means = np.zeros((3, 3 * M))
        means[0, :M] = 1.0 / M
        means[1, M:2 * M] = 1.0 / M
        means[2, 2 * M:] = 1.0 / M
        D0 += rho * means.T @ means
        self._d0 = CholeskyBlocks(D0)

        # constant effective membrane/bending tensor by condensation
        cbar = self.C2.mean(axis=0)
        J = np.zeros((3 * M, 6))
        for i in range(3):
            unit = np.repeat(np.eye(3)[i], M)     # component-major unit strain
            tvec = Wc @ unit                      # weighted stress of it
            J[:2 * M, i] = self.micro.Ey.T @ tvec
            J[2 * M:, 3 + i] = -(self.micro.D2y.T @ tvec) / 12.0
        kbar = np.zeros((6, 6))
        kbar[:3, :3] = cbar
        kbar[3:, 3:] = cbar / 12.0
        self.C_eff = kbar - J.T @ self._d0.solve(J)

        # sparse macro matrix from the effective tensor
        L = sp.bmat([[self.mops.Ebar_f, None],
                     [None, -self.mops.Hess_f]]).tocsr()
        Weff = pointwise_material(np.broadcast_to(self.C_eff, (N, 6, 6)),
                                  self.wx)
        self._schur_lu = sparse_lu((L.T @ Weff @ L).tocsc())
        self.ndof_macro = 3 * n * n
        self.ndof = self.ndof_macro + 3 * M * N
        self._frame = np.zeros((n + 2, n + 2), dtype=bool)
        self._frame[0, :] = self._frame[-1, :] = True
        self._frame[:, 0] = self._frame[:, -1] = True
        xp = (np.arange(n + 2) - 1.0) * self.grid.dx
        yp = (np.arange(n + 2) - 1.0) * self.grid.dy
        self._Xpad = np.meshgrid(xp, yp, indexing="ij")
        # verify the factorization inverts the true operator on its range
        # (cell means are in the kernel; probing with r = H x avoids them)
        rng = np.random.default_rng(0)
        r = self._apply_h(rng.normal(size=self.ndof))
        err = np.linalg.norm(self._apply_h(self._precond(r)) - r)
        if err > 1e-6 * np.linalg.norm(r):
            raise AssertionError("block factorization inconsistent with "
                                 "assembled operator")

    # ------------------------------------------------------------------
    # field pipelines
    # ------------------------------------------------------------------

    def _unpack(self, x):
        n, M, N = self.n, self.M, self.N
        ub = x[:2 * n * n].reshape(2, n, n)
        u3 = x[2 * n * n:3 * n * n].reshape(n, n)
        mu = x[3 * n * n:3 * n * n + 2 * M * N].reshape(2 * M, N)
        ka = x[3 * n * n + 2 * M * N:].reshape(M, N)
        return ub, u3, mu, ka

    def _macro_strains(self, ubar_pad, u3_pad):
        A = (self.mops.Ebar_pad @ ubar_pad.ravel()).reshape(3, self.N).T
        B = -(self.mops.Hess_pad @ u3_pad.ravel()).reshape(3, self.N).T
        return A, B

    def _corr_strains(self, mu, ka):
        EY = (self.micro.Ey @ mu).reshape(3, self.M, self.N).transpose(2, 1, 0)
        DK = (self.micro.D2y @ ka).reshape(3, self.M, self.N).transpose(2, 1, 0)
        return EY, DK

    def _compose(self, A, B, EY, DK):
        z = self.z
        return (A[:, None, None, :] + z[None, :, None, None] * B[:, None, None, :]
                + EY[:, None, :, :] - z[None, :, None, None] * DK[:, None, :, :])

    def total_strain(self, state: TwoScaleState) -> np.ndarray:
        A, B = self._macro_strains(state.u.ubar_pad, state.u.u3_pad)
        EY, DK = self._corr_strains(state.mu, state.kappa)
        return self._compose(A, B, EY, DK)

    def stress2(self, E: np.ndarray) -> np.ndarray:
        return np.einsum("cij,ngcj->ngci", self.C2, E)

    def stress3(self, E: np.ndarray) -> np.ndarray:
        """Reduced stress as Sym3 Mandel vectors ((i,3) components vanish)."""
        return np.einsum("cij,ngcj->ngci", self.C3, E)

    def _gradient(self, sig) -> np.ndarray:
        """Adjoint of the strain pipeline applied to a weighted stress."""
        wgz = self.wz * self.z
        T0 = np.einsum("ngci,g,n->nci", sig, self.wz, self.wx) / self.M
        T1 = np.einsum("ngci,g,n->nci", sig, wgz, self.wx) / self.M
        g_mu = self.micro.Ey.T @ T0.transpose(2, 1, 0).reshape(3 * self.M, self.N)
        g_ka = -(self.micro.D2y.T @ T1.transpose(2, 1, 0).reshape(3 * self.M,
                                                                  self.N))
        g_ub = self.mops.Ebar_f.T @ T0.sum(axis=1).T.ravel()
        g_u3 = -(self.mops.Hess_f.T @ T1.sum(axis=1).T.ravel())
        return np.concatenate([g_ub, g_u3, g_mu.ravel(), g_ka.ravel()])

    def _apply_h(self, x):
        ub, u3, mu, ka = self._unpack(x)
        n = self.n
        ub_pad = np.zeros((2, n + 2, n + 2))
        ub_pad[:, 1:-1, 1:-1] = ub
        u3_pad = np.zeros((n + 2, n + 2))
        u3_pad[1:-1, 1:-1] = u3
        A, B = self._macro_strains(ub_pad, u3_pad)
        EY, DK = self._corr_strains(mu, ka)
        return self._gradient(self.stress2(self._compose(A, B, EY, DK)))

    def _precond(self, r):
        rm = r[:self.ndof_macro]
        _, _, r_mu, r_ka = self._unpack(r)
        rc = np.vstack([r_mu, r_ka])
        y_c = self._d0.solve(rc / self.wx[None, :])
        EY, DK = self._corr_strains(y_c[:2 * self.M], y_c[2 * self.M:])
        sig = self.stress2(self._compose(np.zeros((self.N, 3)),
                                         np.zeros((self.N, 3)), EY, DK))
        coupled = self._gradient(sig)[:self.ndof_macro]
        x_m = self._schur_lu.solve(rm - coupled)
        ub, u3, _, _ = self._unpack(np.concatenate([x_m,
                                                    np.zeros(3 * self.M * self.N)]))
        n = self.n
        ub_pad = np.zeros((2, n + 2, n + 2))
        ub_pad[:, 1:-1, 1:-1] = ub
        u3_pad = np.zeros((n + 2, n + 2))
        u3_pad[1:-1, 1:-1] = u3
        A, B = self._macro_strains(ub_pad, u3_pad)
        sig_m = self.stress2(self._compose(A, B, np.zeros((self.N, self.M, 3)),
                                           np.zeros((self.N, self.M, 3))))
        g_full = self._gradient(sig_m)
        _, _, gm_mu, gm_ka = self._unpack(g_full)
        gc = np.vstack([gm_mu, gm_ka])
        x_c = y_c - self._d0.solve(gc / self.wx[None, :])
        return np.concatenate([x_m, x_c[:2 * self.M].ravel(),
                               x_c[2 * self.M:].ravel()])

    # ------------------------------------------------------------------
    # model interface used by the incremental solver
    # ------------------------------------------------------------------

    def initial_state(self, datum: BoundaryDatum, t0: float) -> TwoScaleState:
        X1, X2 = self._Xpad
        wb = np.moveaxis(datum.wbar(t0, X1, X2), -1, 0)
        w3 = datum.w3(t0, X1, X2)
        u = KLState(ubar_pad=wb, u3_pad=w3)
        st = TwoScaleState(regime="gamma0", u=u,
                           mu=np.zeros((2 * self.M, self.N)),
                           kappa=np.zeros((self.M, self.N)),
                           P=np.zeros((self.N, self.G, self.M, 3)))
        st.E = self.total_strain(st) - st.P
        return st

    def set_ghosts(self, state: TwoScaleState, datum: BoundaryDatum, t: float):
        X1, X2 = self._Xpad
        wb = np.moveaxis(datum.wbar(t, X1, X2), -1, 0)
        w3 = datum.w3(t, X1, X2)
        state.u.ubar_pad[:, self._frame] = wb[:, self._frame]
        state.u.u3_pad[self._frame] = w3[self._frame]

    def dofs(self, state: TwoScaleState) -> np.ndarray:
        return np.concatenate([
            state.u.ubar_pad[:, 1:-1, 1:-1].ravel(),
            state.u.u3_pad[1:-1, 1:-1].ravel(),
            state.mu.ravel(), state.kappa.ravel()])

    def put_dofs(self, state: TwoScaleState, x: np.ndarray):
        ub, u3, mu, ka = self._unpack(x)
        state.u.ubar_pad[:, 1:-1, 1:-1] = ub
        state.u.u3_pad[1:-1, 1:-1] = u3
        state.mu = mu
        state.kappa = ka
        project_mean_zero(state)

    def elastic_step(self, state: TwoScaleState, datum: BoundaryDatum,
                     t: float, cg_tol: float, cg_max_iter: int):
        """Minimize the elastic energy at fixed plastic field."""
        self.set_ghosts(state, datum, t)
        n = self.n
        ub_pad = state.u.ubar_pad.copy()
        u3_pad = state.u.u3_pad.copy()
        ub_pad[:, 1:-1, 1:-1] = 0.0
        u3_pad[1:-1, 1:-1] = 0.0
        A_g, B_g = self._macro_strains(ub_pad, u3_pad)
        s0 = self._compose(A_g, B_g, np.zeros((self.N, self.M, 3)),
                           np.zeros((self.N, self.M, 3))) - state.P
        b = -self._gradient(self.stress2(s0))
        x, iters, rel = pcg(self._apply_h, b, precond=self._precond,
                            tol=cg_tol, max_iter=cg_max_iter,
                            x0=self.dofs(state))
        self.put_dofs(state, x)
        state.E = self.total_strain(state) - state.P
        return iters, rel

    def plastic_step(self, state: TwoScaleState, P_start: np.ndarray,
                     newton_tol: float = 1e-12) -> np.ndarray:
        """Pointwise prox centered at the step-start plastic field."""
        S = self.total_strain(state)
        trial = S - P_start
        Pnew = np.empty_like(P_start)
        for cells, ret, _ in self.groups:
            dp, _ = ret.apply(trial[:, :, cells, :].reshape(-1, 3),
                              tol=newton_tol)
            Pnew[:, :, cells, :] = (P_start[:, :, cells, :]
                                    + dp.reshape(self.N, self.G, len(cells), 3))
        state.P = Pnew
        state.E = S - Pnew
        return Pnew

    def energy(self, state: TwoScaleState) -> float:
        sig = self.stress2(state.E)
        return 0.5 * float(np.einsum("ngci,ngci,n,g->", sig, state.E,
                                     self.wx, self.wz)) / self.M

    def dissipation(self, dP: np.ndarray) -> float:
        total = 0.0
        for cells, _, law in self.groups:
            h = law.reduced_dissipation(dP[:, :, cells, :])
            total += float(np.einsum("ngc,n,g->", h, self.wx, self.wz))
        return total / self.M

    def datum_strain(self, datum: BoundaryDatum, t: float) -> np.ndarray:
        """Kirchhoff-Love strain of the datum at the quadrature points."""
        X1, X2 = self._Xpad
        ew = datum.kl_strain(t, X1[1:-1, 1:-1], X2[1:-1, 1:-1], self.z)
        return ew.reshape(self.N, self.G, 3)

    def work_pairing(self, state: TwoScaleState, dEw: np.ndarray) -> float:
        """Integral of stress : datum strain increment."""
        sig = self.stress2(state.E)
        return float(np.einsum("ngci,ngi,n,g->", sig, dEw, self.wx,
                               self.wz)) / self.M

    def yield_gauge_excess(self, state: TwoScaleState) -> float:
        """Max distance (in stress units) of the stress outside its yield set."""
        sig = self.stress2(state.E)
        worst = 0.0
        for cells, _, law in self.groups:
            s = sig[:, :, cells, :]
            q = np.sqrt(np.maximum(np.einsum(
                "ngci,ij,ngcj->ngc", s, law.M_Kr, s), 0.0))
            worst = max(worst, float((q - 1.0).max()) * law.R_H)
        return max(worst, 0.0)

    def residual_report(self, state: TwoScaleState, datum: BoundaryDatum,
                        t: float) -> dict:
        rep = twoscale_residual(state, self.mops, self.micro, self.z)
        e_cell = state.E.mean(axis=2)
        p_cell = state.P.mean(axis=2)
        em = moments(e_cell, self.z, self.wz, axis=1)
        pm = moments(p_cell, self.z, self.wz, axis=1)
        n = self.n
        klrep = admissibility_residual_kl(
            state.u, em.bar.reshape(n, n, 3), em.hat.reshape(n, n, 3),
            pm.bar.reshape(n, n, 3), pm.hat.reshape(n, n, 3), self.mops)
        rep["kl_membrane"] = max(klrep["membrane_interior"],
                                 klrep["membrane_boundary"])
        rep["kl_bending"] = max(klrep["bending_interior"],
                                klrep["bending_boundary"])
        return rep
