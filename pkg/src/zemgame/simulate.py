"""Playout and verification machinery for the reduced and full dynamics.

The reduced dynamics have a state-independent right-hand side, so the
classical one-step method collapses to Simpson panels over the control and
kernel samples; the full-state playout integrates the stacked player blocks
and reconstructs the miss variables through the transition rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .engagement import EngagementScenario, build_game_ss
from .errors import AssertionFailure, ProbeFailure
from .numerics import TimeGrid, ode_playout
from .reduction import ControlLaw, GameCoefficients, Kernels, KernelSet, Sampled, sample_control

if TYPE_CHECKING:  # pragma: no cover
    from .solver import SaddleSolution

_PROBE_BASIS_SIZE = 8


@dataclass(frozen=True)
class Playout:
    """Trajectories of the reduced state under a pair of control laws."""

    grid: TimeGrid
    z_traj: np.ndarray
    w_traj: np.ndarray
    z_f: float
    w_f: float
    up_samples: np.ndarray
    ue_samples: np.ndarray


@dataclass(frozen=True)
class CostBreakdown:
    terminal: float
    pursuer_effort: float
    evader_effort: float
    total: float


@dataclass(frozen=True)
class TerminalCheck:
    """Outcome of the terminal-constraint comparison; margin is
    bound - |w_f| (negative when violated)."""

    satisfied: bool
    margin: float

    @property
    def excess(self) -> float:
        return -self.margin


@dataclass(frozen=True)
class FullPlayout:
    grid: TimeGrid
    x_traj: np.ndarray
    z_traj: np.ndarray
    w_traj: np.ndarray
    z_f: float
    w_f: float
    miss: float


def _default_grid(scenario: EngagementScenario, grid: Optional[TimeGrid]) -> TimeGrid:
    return grid if grid is not None else TimeGrid.uniform(0.0, scenario.t_f)


def _simpson_panels(node_vals: np.ndarray, mid_vals: np.ndarray, steps: np.ndarray) -> np.ndarray:
    return steps / 6.0 * (node_vals[:-1] + 4.0 * mid_vals + node_vals[1:])


def _sample_on(grid: TimeGrid, kernels: KernelSet, u_p: ControlLaw, u_e: ControlLaw):
    ts, mids = grid.nodes, grid.midpoints
    hp_n, he_n = kernels.sample_engagement(ts)
    hp_m, he_m = kernels.sample_engagement(mids)
    ge_n = kernels.sample_target(ts)
    ge_m = kernels.sample_target(mids)
    up_n = sample_control(u_p, kernels, ts)
    up_m = sample_control(u_p, kernels, mids)
    ue_n = sample_control(u_e, kernels, ts)
    ue_m = sample_control(u_e, kernels, mids)
    return (hp_n, he_n, ge_n, up_n, ue_n), (hp_m, he_m, ge_m, up_m, ue_m)


def playout_reduced(scenario: EngagementScenario, kernels: Optional[KernelSet],
                    u_p: ControlLaw, u_e: ControlLaw,
                    grid: Optional[TimeGrid] = None) -> Playout:
    """Integrate dz = h_p u_p + h_e u_e, dw = g_e u_e from (z0, w0).

    The right-hand sides do not depend on the state, so the classical
    one-step update equals a Simpson panel per step; the cumulative sums
    below are exactly that method.
    """
    k = kernels if kernels is not None else Kernels(scenario)
    grid = _default_grid(scenario, grid)
    (hp_n, he_n, ge_n, up_n, ue_n), (hp_m, he_m, ge_m, up_m, ue_m) = \
        _sample_on(grid, k, u_p, u_e)
    steps = np.diff(grid.nodes)

    fz_n = hp_n * up_n + he_n * ue_n
    fz_m = hp_m * up_m + he_m * ue_m
    fw_n = ge_n * ue_n
    fw_m = ge_m * ue_m
    if not (np.isfinite(fz_n).all() and np.isfinite(fz_m).all()
            and np.isfinite(fw_n).all() and np.isfinite(fw_m).all()):
        raise ValueError("non-finite integrand in reduced playout")

    z = np.empty(grid.nodes.size)
    w = np.empty(grid.nodes.size)
    z[0], w[0] = scenario.z0, scenario.w0
    z[1:] = scenario.z0 + np.cumsum(_simpson_panels(fz_n, fz_m, steps))
    w[1:] = scenario.w0 + np.cumsum(_simpson_panels(fw_n, fw_m, steps))
    return Playout(grid=grid, z_traj=z, w_traj=w, z_f=float(z[-1]), w_f=float(w[-1]),
                   up_samples=up_n, ue_samples=ue_n)


def evaluate_cost(scenario: EngagementScenario, kernels: Optional[KernelSet],
                  u_p: ControlLaw, u_e: ControlLaw,
                  grid: Optional[TimeGrid] = None) -> CostBreakdown:
    """Terminal miss squared plus weighted control efforts,
    J = z_f^2 + alpha int u_p^2 - beta int u_e^2."""
    k = kernels if kernels is not None else Kernels(scenario)
    grid = _default_grid(scenario, grid)
    play = playout_reduced(scenario, k, u_p, u_e, grid)
    steps = np.diff(grid.nodes)
    mids = grid.midpoints
    up_m = sample_control(u_p, k, mids)
    ue_m = sample_control(u_e, k, mids)
    pursuer = scenario.alpha * float(np.sum(_simpson_panels(play.up_samples ** 2, up_m ** 2, steps)))
    evader = scenario.beta * float(np.sum(_simpson_panels(play.ue_samples ** 2, ue_m ** 2, steps)))
    terminal = play.z_f ** 2
    return CostBreakdown(terminal=terminal, pursuer_effort=pursuer,
                         evader_effort=evader, total=terminal + pursuer - evader)


def check_terminal(w_f: float, coeffs: GameCoefficients) -> TerminalCheck:
    """Compare |w_f| against the reachable bound with a 1e-9 relative band."""
    bound = coeffs.bound
    tol = 1e-9 * max(1.0, bound)
    margin = bound - abs(w_f)
    return TerminalCheck(satisfied=margin >= -tol, margin=margin)


def _initial_full_state(scenario: EngagementScenario) -> np.ndarray:
    n_p = scenario.pursuer.order + 2
    n_e = scenario.evader.order + 2
    x0 = np.zeros(n_p + n_e)
    if scenario.geometry is not None:
        geo = scenario.geometry
        x0[1] = geo.Vp * geo.phi_p0
        x0[n_p + 1] = geo.Ve * geo.phi_e0
    else:
        # invert the zero-effort-miss map: only lateral velocities are free
        ve = scenario.w0 / (scenario.t_f + scenario.t_c)
        x0[n_p + 1] = ve
        x0[1] = ve - scenario.z0 / scenario.t_f
    return x0


def playout_full(scenario: EngagementScenario, u_p: ControlLaw, u_e: ControlLaw,
                 grid: Optional[TimeGrid] = None,
                 kernels: Optional[Kernels] = None) -> FullPlayout:
    """Integrate the stacked player blocks and reconstruct z(t), w(t).

    The reconstruction applies the transition rows to the relative and
    evader sub-states, so at the horizon z equals the achieved miss
    y_e - y_p exactly.
    """
    k = kernels if kernels is not None else Kernels(scenario)
    grid = _default_grid(scenario, grid)
    ss = build_game_ss(scenario.pursuer, scenario.evader)
    ts_ref = grid.refined()
    up_ref = sample_control(u_p, k, ts_ref)
    ue_ref = sample_control(u_e, k, ts_ref)

    def rhs(t, x):
        i = int(np.searchsorted(ts_ref, t))
        if i == ts_ref.size or (i > 0 and abs(ts_ref[i - 1] - t) <= abs(ts_ref[i] - t)):
            i -= 1
        if abs(ts_ref[i] - t) > 1e-9 * max(1.0, scenario.t_f):
            raise AssertionFailure("full playout queried off the refined grid at t=%g" % t)
        return ss.A @ x + ss.B * up_ref[i] + ss.C * ue_ref[i]

    x_traj = ode_playout(rhs, _initial_full_state(scenario), grid)

    n_p = scenario.pursuer.order + 2
    x_p = x_traj[:, :n_p]
    x_e = x_traj[:, n_p:]
    x_ep = np.hstack([
        (x_e[:, :2] - x_p[:, :2]),
        x_p[:, 2:],
        x_e[:, 2:],
    ])
    rows_ep = k.rows_engagement(grid.nodes)
    rows_e = k.rows_target(grid.nodes)
    z = np.einsum("ij,ij->i", rows_ep, x_ep)
    w = np.einsum("ij,ij->i", rows_e, x_e)

    miss = float(x_e[-1, 0] - x_p[-1, 0])
    if abs(z[-1] - miss) > 1e-9 * max(1.0, abs(miss)):
        raise AssertionFailure("terminal miss reconstruction mismatch")
    return FullPlayout(grid=grid, x_traj=x_traj, z_traj=z, w_traj=w,
                       z_f=float(z[-1]), w_f=float(w[-1]), miss=miss)


def cross_play(scenario: EngagementScenario, u_p_choice: ControlLaw, u_e_choice: ControlLaw,
               kernels: Optional[KernelSet] = None,
               grid: Optional[TimeGrid] = None) -> CostBreakdown:
    """Cost of an arbitrary pairing of control laws (typically one player's
    branch optimum against the other branch's)."""
    return evaluate_cost(scenario, kernels, u_p_choice, u_e_choice, grid)


@dataclass(frozen=True)
class ProbeReport:
    n_trials: int
    evader_worst: float
    pursuer_worst: float
    slack: float
    passed: bool


def _legendre_basis(ts: np.ndarray, t_f: float) -> np.ndarray:
    x = 2.0 * ts / t_f - 1.0
    return np.vstack([
        np.polynomial.legendre.Legendre.basis(j)(x) for j in range(_PROBE_BASIS_SIZE)
    ])


def admissible_evader_perturbation(delta: np.ndarray, ge_n: np.ndarray, ge_m: np.ndarray,
                                   steps: np.ndarray) -> np.ndarray:
    """Project a perturbation onto the class that leaves the terminal w
    unchanged (discrete version of int g_e delta = 0, in the same panel
    quadrature the playout uses)."""
    d_n, d_m = delta[0::2], delta[1::2]
    num = float(np.sum(_simpson_panels(ge_n * d_n, ge_m * d_m, steps)))
    den = float(np.sum(_simpson_panels(ge_n ** 2, ge_m ** 2, steps)))
    out = delta.copy()
    out[0::2] -= (num / den) * ge_n
    out[1::2] -= (num / den) * ge_m
    return out


def saddle_probe(scenario: EngagementScenario, solution: "SaddleSolution",
                 n_trials: int = 100, seed: int = 0,
                 kernels: Optional[KernelSet] = None,
                 grid: Optional[TimeGrid] = None,
                 rel_amplitude: float = 0.2) -> ProbeReport:
    """Empirical saddle check around a solved pair.

    Random smooth perturbations (a low-order orthogonal-polynomial basis)
    are applied to each side separately; evader perturbations are projected
    into the admissible class of the active region first. Every trial must
    keep J(u_p*, u_e* + d) <= J* <= J(u_p* + d, u_e*) up to a 1e-9 slack.
    """
    from .solver import RegionLabel

    k = kernels if kernels is not None else Kernels(scenario)
    grid = _default_grid(scenario, grid)
    ts_ref = grid.refined()
    steps = np.diff(grid.nodes)
    ge_n = k.sample_target(grid.nodes)
    ge_m = k.sample_target(grid.midpoints)
    up_ref = sample_control(solution.u_p, k, ts_ref)
    ue_ref = sample_control(solution.u_e, k, ts_ref)
    basis = _legendre_basis(ts_ref, scenario.t_f)
    in_strip = solution.region.label is RegionLabel.OMEGA

    j_star = solution.value
    slack = 1e-9 * max(1.0, abs(j_star))
    amp_p = rel_amplitude * max(1.0, float(np.abs(up_ref).max()))
    amp_e = rel_amplitude * max(1.0, float(np.abs(ue_ref).max()))

    seeds = np.random.SeedSequence(seed).spawn(n_trials)
    evader_worst = -np.inf
    pursuer_worst = np.inf
    for trial, seq in enumerate(seeds):
        rng = np.random.default_rng(seq)

        raw = rng.standard_normal(_PROBE_BASIS_SIZE) @ basis
        delta_e = raw * (amp_e / np.abs(raw).max())
        if in_strip:
            # keep the perturbed terminal inside the strip: the room to the
            # nearest wall is -margin, so cap the terminal shift below it
            dw = float(np.sum(_simpson_panels(ge_n * delta_e[0::2], ge_m * delta_e[1::2], steps)))
            room = -solution.region.margin
            if abs(dw) > 0.9 * room:
                delta_e = delta_e * (0.9 * room / abs(dw))
        else:
            delta_e = admissible_evader_perturbation(delta_e, ge_n, ge_m, steps)
        u_e_pert = Sampled(ts_ref, ue_ref + delta_e)
        j_e = evaluate_cost(scenario, k, solution.u_p, u_e_pert, grid).total

        raw_p = rng.standard_normal(_PROBE_BASIS_SIZE) @ basis
        delta_p = raw_p * (amp_p / np.abs(raw_p).max())
        u_p_pert = Sampled(ts_ref, up_ref + delta_p)
        j_p = evaluate_cost(scenario, k, u_p_pert, solution.u_e, grid).total

        evader_worst = max(evader_worst, j_e - j_star)
        pursuer_worst = min(pursuer_worst, j_p - j_star)
        if j_e > j_star + slack:
            raise ProbeFailure(
                "evader perturbation raised the cost: %g > %g" % (j_e, j_star),
                trial=trial, coefficients=raw,
            )
        if j_p < j_star - slack:
            raise ProbeFailure(
                "pursuer perturbation lowered the cost: %g < %g" % (j_p, j_star),
                trial=trial, coefficients=raw_p,
            )
    return ProbeReport(n_trials=n_trials, evader_worst=float(evader_worst),
                       pursuer_worst=float(pursuer_worst), slack=slack, passed=True)
