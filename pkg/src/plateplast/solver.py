"""Time-incremental quasistatic evolution by alternating minimization.

Each time step minimizes elastic energy plus dissipation of the plastic
increment over admissible states: a linear elastic solve at fixed plastic
field alternates with the pointwise plastic prox centered at the step-start
plastic field. Both blocks are exact, so the incremental objective
decreases monotonically; the sweep stops when the energy decrease and the
pointwise plastic movement are below tolerance, and a final elastic polish
leaves the state in equilibrium at the converged plastic field.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class EvolutionConfig:
    times: np.ndarray
    am_tol: float = 1e-10           # relative energy decrease per sweep
    plastic_tol: float = 1e-10      # max pointwise plastic movement per sweep
    am_max_iter: int = 500
    cg_tol: float = 1e-10
    cg_max_iter: int = 50_000
    newton_tol: float = 1e-12
    check_initial_stability: bool = True

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("need an increasing time partition with >= 2 points")
        self.times = t
        if self.am_tol <= 0 or self.cg_tol <= 0 or self.newton_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class StepRecord:
    t: float
    energy: float
    h_inc: float
    d_cum: float
    w_cum: float
    balance: float
    stability: float
    equilibrium: float
    iterations: int
    converged: bool
    yield_excess: float
    residuals: dict = field(default_factory=dict)


@dataclass
class EvolutionTrace:
    records: list

    COLUMNS = ("t", "Q", "H_inc", "D_cum", "W_cum", "balance_residual",
               "stability_residual", "equilibrium_residual", "iterations")

    def rows(self):
        for r in self.records:
            yield (r.t, r.energy, r.h_inc, r.d_cum, r.w_cum, r.balance,
                   r.stability, r.equilibrium, r.iterations)

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(self.COLUMNS)
            for row in self.rows():
                writer.writerow(["%.17g" % v if isinstance(v, float) else v
                                 for v in row])

    def energy_scale(self) -> float:
        return max(max(r.energy + r.d_cum for r in self.records), 1e-300)

    def max_relative_balance(self) -> float:
        return max(abs(r.balance) for r in self.records) / self.energy_scale()

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.records)


def incremental_solve(model, state, datum, t: float, cfg: EvolutionConfig):
    """One incremental minimization; returns (iterations, info dict)."""
    P_start = state.P.copy()
    J_prev = None
    eq_res = 0.0
    stability = 1.0
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.am_max_iter + 1):
        _, eq_res = model.elastic_step(state, datum, t, cfg.cg_tol,
                                       cfg.cg_max_iter)
        P_before = state.P
        model.plastic_step(state, P_start, cfg.newton_tol)
        dp_sweep = float(np.abs(state.P - P_before).max())
        J = model.energy(state) + model.dissipation(state.P - P_start)
        if J_prev is not None:
            decrease = J_prev - J
            scale = max(abs(J), abs(J_prev), 1e-300)
            if decrease < -1e-9 * scale:
                raise AssertionError(
                    f"alternating minimization increased the objective by "
                    f"{-decrease:g} at t={t:g}")
            stability = max(decrease, 0.0) / scale
            if stability <= cfg.am_tol and dp_sweep <= cfg.plastic_tol:
                converged = True
                break
        J_prev = J
    # final polish: equilibrium at the converged plastic field
    _, eq_res = model.elastic_step(state, datum, t, cfg.cg_tol,
                                   cfg.cg_max_iter)
    info = {
        "iterations": sweeps,
        "converged": converged,
        "stability": float(stability),
        "equilibrium": float(eq_res),
    }
    return info


def check_initial_stability(model, state, datum, t0: float,
                            cfg: EvolutionConfig, tol: float = 1e-8):
    """The initial triple must not admit an energy-decreasing sweep."""
    import copy
    probe = copy.deepcopy(state)
    J0 = model.energy(probe)
    model.elastic_step(probe, datum, t0, cfg.cg_tol, cfg.cg_max_iter)
    model.plastic_step(probe, probe.P.copy(), cfg.newton_tol)
    J1 = model.energy(probe) + model.dissipation(probe.P - state.P)
    scale = max(abs(J0), 1.0e-300)
    if (J0 - J1) > tol * max(scale, 1.0):
        raise ValueError(
            f"initial state is not globally stable (sweep lowers the "
            f"incremental energy by {J0 - J1:g}); start the datum at zero "
            f"or supply a stable state")


def run_evolution(model, datum, cfg: EvolutionConfig, state=None,
                  snapshot_hook=None) -> tuple[EvolutionTrace, object]:
    """Execute all time steps; returns the trace and the final state."""
    times = cfg.times
    if state is None:
        state = model.initial_state(datum, times[0])
    if cfg.check_initial_stability:
        check_initial_stability(model, state, datum, times[0], cfg)
    q0 = model.energy(state)
    d_cum = 0.0
    w_cum = 0.0
    ew_prev = model.datum_strain(datum, times[0])
    records = [StepRecord(t=times[0], energy=q0, h_inc=0.0, d_cum=0.0,
                          w_cum=0.0, balance=0.0, stability=0.0,
                          equilibrium=0.0, iterations=0, converged=True,
                          yield_excess=model.yield_gauge_excess(state),
                          residuals=model.residual_report(state, datum,
                                                          times[0]))]
    if snapshot_hook is not None:
        snapshot_hook(0, times[0], state)
    for k, t in enumerate(times[1:], start=1):
        P_prev = state.P.copy()
        ew_now = model.datum_strain(datum, t)
        d_ew = ew_now - ew_prev
        w_inc = 0.5 * model.work_pairing(state, d_ew)
        info = incremental_solve(model, state, datum, t, cfg)
        w_inc += 0.5 * model.work_pairing(state, d_ew)
        w_cum += w_inc
        h_inc = model.dissipation(state.P - P_prev)
        d_cum += h_inc
        q = model.energy(state)
        records.append(StepRecord(
            t=t, energy=q, h_inc=h_inc, d_cum=d_cum, w_cum=w_cum,
            balance=q + d_cum - q0 - w_cum,
            stability=info["stability"], equilibrium=info["equilibrium"],
            iterations=info["iterations"], converged=info["converged"],
            yield_excess=model.yield_gauge_excess(state),
            residuals=model.residual_report(state, datum, t)))
        ew_prev = ew_now
        if snapshot_hook is not None:
            snapshot_hook(k, t, state)
    return EvolutionTrace(records), state
