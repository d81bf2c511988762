"""Reduced-game kernels, integral coefficients, and control laws.

The two-state reduction replaces the full engagement state with the two
zero-effort-miss variables z (pursuer-evader) and w (evader-target). Their
dynamics are driven by three scalar kernels,

    h_p(t) = D_ep exp(A_ep (t_f - t)) B_ep
    h_e(t) = D_ep exp(A_ep (t_f - t)) C_ep
    g_e(t) = D_e  exp(A_e (t_f + t_c - t)) B_e

and every game quantity is an integral of products of these kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .engagement import EngagementScenario, build_evader_ss, build_relative_ss, first_order_scenario
from .errors import AssertionFailure, SolvabilityError
from .numerics import TimeGrid, mat_exp, psi, quad_adaptive

_INTEGRAL_TOL = 1e-10


def _transition_rows(D: np.ndarray, A: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Rows D exp(A delta) for an ascending array of nonnegative deltas.

    Computed incrementally: one matrix exponential per distinct gap, then a
    row-vector product per point. Exact for each point because the gaps add.
    """
    deltas = np.asarray(deltas, dtype=float)
    rows = np.empty((deltas.size, A.shape[0]))
    if deltas.size == 0:
        return rows
    r = D @ mat_exp(A, deltas[0]) if deltas[0] != 0.0 else D.copy()
    rows[0] = r
    cache: dict[float, np.ndarray] = {}
    for i in range(1, deltas.size):
        gap = deltas[i] - deltas[i - 1]
        E = cache.get(gap)
        if E is None:
            E = mat_exp(A, gap)
            cache[gap] = E
        r = r @ E
        rows[i] = r
    return rows


class Kernels:
    """Kernel functions of a scenario, backed by transition-matrix rows.

    Values on the build grid (nodes and panel midpoints) are precomputed at
    construction; any other query evaluates the matrix exponential directly,
    so the object stays immutable and freely shareable.
    """

    def __init__(self, scenario: EngagementScenario, grid: Optional[TimeGrid] = None):
        self.scenario = scenario
        self.t_f = scenario.t_f
        self.t_c = scenario.t_c
        self.grid = grid if grid is not None else TimeGrid.uniform(0.0, scenario.t_f)

        rel = build_relative_ss(scenario.pursuer, scenario.evader)
        ev = build_evader_ss(scenario.evader)
        self._A_ep, self._B_ep, self._C_ep, self._D_ep = rel.A, rel.B, rel.C, rel.D_row
        self._A_e, self._B_e, self._D_e = ev.A, ev.B, ev.D_row

        ts = self.grid.refined()
        self._memo_t = ts
        self._memo_rows_ep = self._rows_ep_direct(ts)
        self._memo_rows_e = self._rows_e_direct(ts)
        self._memo_tol = 1e-12 * max(1.0, self.t_f)

    # -- direct evaluation -------------------------------------------------

    def _rows_ep_direct(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        order = np.argsort(-ts)  # ascending delta = t_f - t
        rows = _transition_rows(self._D_ep, self._A_ep, self.t_f - ts[order])
        out = np.empty_like(rows)
        out[order] = rows
        return out

    def _rows_e_direct(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        order = np.argsort(-ts)
        rows = _transition_rows(self._D_e, self._A_e, self.t_f + self.t_c - ts[order])
        out = np.empty_like(rows)
        out[order] = rows
        return out

    def _memo_indices(self, ts: np.ndarray) -> Optional[np.ndarray]:
        idx = np.searchsorted(self._memo_t, ts)
        idx = np.clip(idx, 0, self._memo_t.size - 1)
        left = np.clip(idx - 1, 0, self._memo_t.size - 1)
        take_left = np.abs(self._memo_t[left] - ts) < np.abs(self._memo_t[idx] - ts)
        idx = np.where(take_left, left, idx)
        if np.abs(self._memo_t[idx] - ts).max() <= self._memo_tol:
            return idx
        return None

    def rows_engagement(self, ts) -> np.ndarray:
        """D_ep exp(A_ep (t_f - t)) for each t; memoized on the build grid."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        idx = self._memo_indices(ts)
        if idx is not None:
            return self._memo_rows_ep[idx]
        return self._rows_ep_direct(ts)

    def rows_target(self, ts) -> np.ndarray:
        """D_e exp(A_e (t_f + t_c - t)) for each t; memoized on the build grid."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        idx = self._memo_indices(ts)
        if idx is not None:
            return self._memo_rows_e[idx]
        return self._rows_e_direct(ts)

    # -- kernel values -----------------------------------------------------

    def sample_engagement(self, ts) -> tuple[np.ndarray, np.ndarray]:
        rows = self.rows_engagement(ts)
        return rows @ self._B_ep, rows @ self._C_ep

    def sample_target(self, ts) -> np.ndarray:
        return self.rows_target(ts) @ self._B_e

    def h_p(self, t: float) -> float:
        return float(self.sample_engagement(t)[0][0])

    def h_e(self, t: float) -> float:
        return float(self.sample_engagement(t)[1][0])

    def g_e(self, t: float) -> float:
        """Valid on [0, t_f + t_c]; the tail beyond t_f feeds the
        reachability weight integral."""
        return float(self.sample_target(t)[0])


class FirstOrderKernels:
    """Closed-form kernels for strictly proper first-order lags on both sides.

    Same evaluation interface as Kernels, built on psi instead of matrix
    exponentials; serves as an independent path for cross-checks.
    """

    def __init__(self, tau_p: float, tau_e: float, t_f: float, t_c: float):
        if tau_p <= 0 or tau_e <= 0:
            raise ValueError("time constants must be positive")
        self.tau_p = tau_p
        self.tau_e = tau_e
        self.t_f = t_f
        self.t_c = t_c

    def sample_engagement(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        hp = -self.tau_p * psi((self.t_f - ts) / self.tau_p)
        he = self.tau_e * psi((self.t_f - ts) / self.tau_e)
        return np.atleast_1d(hp), np.atleast_1d(he)

    def sample_target(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.atleast_1d(self.tau_e * psi((self.t_f + self.t_c - ts) / self.tau_e))

    def h_p(self, t: float) -> float:
        return float(self.sample_engagement(t)[0][0])

    def h_e(self, t: float) -> float:
        return float(self.sample_engagement(t)[1][0])

    def g_e(self, t: float) -> float:
        return float(self.sample_target(t)[0])


KernelSet = Union[Kernels, FirstOrderKernels]


# -- control laws ----------------------------------------------------------


@dataclass(frozen=True)
class KernelCombo:
    """Linear combination of the three kernels.

    Pursuer laws use hp_coef only; evader laws use he_coef and ge_coef.
    """

    hp_coef: float = 0.0
    he_coef: float = 0.0
    ge_coef: float = 0.0


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class AffineInTime:
    slope: float
    intercept: float


@dataclass(frozen=True)
class Sampled:
    """Values on a time grid, linearly interpolated between nodes."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be matching 1-d arrays")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


ControlLaw = Union[KernelCombo, Constant, AffineInTime, Sampled]


def _check_in_horizon(ts: np.ndarray, t_f: float):
    tol = 1e-9 * max(1.0, t_f)
    if ts.min() < -tol or ts.max() > t_f + tol:
        raise ValueError("control evaluated outside [0, %g]" % t_f)


def sample_control(law: ControlLaw, kernels: KernelSet, ts) -> np.ndarray:
    """Evaluate a control law at an array of times in [0, t_f]."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    _check_in_horizon(ts, kernels.t_f)
    if isinstance(law, KernelCombo):
        out = np.zeros_like(ts)
        if law.hp_coef != 0.0 or law.he_coef != 0.0:
            hp, he = kernels.sample_engagement(ts)
            out += law.hp_coef * hp + law.he_coef * he
        if law.ge_coef != 0.0:
            out += law.ge_coef * kernels.sample_target(ts)
        return out
    if isinstance(law, Constant):
        return np.full(ts.shape, float(law.value))
    if isinstance(law, AffineInTime):
        return law.slope * ts + law.intercept
    if isinstance(law, Sampled):
        return np.interp(ts, law.times, law.values)
    raise TypeError("unknown control law %r" % (law,))


def eval_control(law: ControlLaw, kernels: KernelSet, t: float) -> float:
    """Evaluate a control law at a single time in [0, t_f]."""
    return float(sample_control(law, kernels, t)[0])


# -- game coefficients -----------------------------------------------------


@dataclass(frozen=True)
class GameCoefficients:
    """All reduced-game scalars and 2x2 matrices.

    s        1 + int(h_p^2)/alpha - int(h_e^2)/beta
    nu_p     int(h_p^2)/alpha
    nu_e     int(h_e^2)/beta
    G1..G3   s, int(h_e g_e)/beta, int(g_e^2)/beta
    a        slope of the terminal w against z0 under the unconstrained
             saddle play, equal to G2/G1
    d        nu_p G2^2 / (G1 det F), in (0, 1) whenever solvable
    mu_e     reachability weight int |g_e| over the tail [t_f, t_f + t_c]
    beta_star  the solvability threshold int(h_e^2)
    G, G_tilde, G_bar, F, F_bar   the 2x2 system matrices and the matching
             value-form matrices diag(1,-1) G and (X^-1)' diag(1,-1)
    """

    s: float
    nu_p: float
    nu_e: float
    G1: float
    G2: float
    G3: float
    a: float
    d: float
    mu_e: float
    det_G: float
    det_F: float
    beta_star: float
    G: np.ndarray
    G_tilde: np.ndarray
    G_bar: np.ndarray
    F: np.ndarray
    F_bar: np.ndarray
    condition33: bool
    alpha: float
    beta: float
    ae_max: float
    t_f: float
    t_c: float
    kernels: KernelSet = field(repr=False)
    scenario: EngagementScenario = field(repr=False)

    @property
    def bound(self) -> float:
        """Largest reachable terminal correction mu_e * ae_max."""
        return self.mu_e * self.ae_max

    @property
    def constraint_degenerate(self) -> bool:
        """True when the terminal constraint collapses to an equality w(t_f) = 0."""
        return self.bound == 0.0

    def __post_init__(self):
        checks = (
            ("s > 0", self.s > 0),
            ("det G > 0", self.det_G > 0),
            ("det F > 0", self.det_F > 0),
            ("0 <= d < 1", 0.0 <= self.d < 1.0),
            ("G1 - nu_p == 1 - nu_e", abs((self.G1 - self.nu_p) - (1.0 - self.nu_e))
             <= 1e-10 * max(1.0, abs(1.0 - self.nu_e))),
        )
        for label, ok in checks:
            if not ok:
                raise AssertionFailure("coefficient consistency check failed: %s" % label)


def solvability_threshold(kernels: KernelSet, tol: float = _INTEGRAL_TOL) -> float:
    """Integral of the squared evader kernel over the game horizon; the
    evader effort weight must strictly exceed it."""
    return quad_adaptive(lambda t: kernels.h_e(t) ** 2, 0.0, kernels.t_f, tol)


def _assemble(int_hp2: float, int_he2: float, int_hege: float, int_ge2: float,
              mu: float, scenario: EngagementScenario, kernels: KernelSet) -> GameCoefficients:
    alpha, beta = scenario.alpha, scenario.beta
    if beta <= int_he2:
        raise SolvabilityError(beta, int_he2)
    nu_p = int_hp2 / alpha
    nu_e = int_he2 / beta
    s = 1.0 + nu_p - nu_e
    G1, G2, G3 = s, int_hege / beta, int_ge2 / beta
    det_G = G1 * G3 + G2 * G2
    det_F = (G1 - nu_p) * G3 + G2 * G2
    d = nu_p * G2 * G2 / (G1 * det_F)
    sign_flip = np.diag([1.0, -1.0])
    G = np.array([[G1, G2], [-G2, G3]])
    F = np.array([[G1 - nu_p, G2], [-G2, G3]])
    return GameCoefficients(
        s=s, nu_p=nu_p, nu_e=nu_e, G1=G1, G2=G2, G3=G3,
        a=G2 / G1, d=d, mu_e=mu, det_G=det_G, det_F=det_F,
        beta_star=int_he2,
        G=G, G_tilde=sign_flip @ G, G_bar=np.linalg.inv(G).T @ sign_flip,
        F=F, F_bar=np.linalg.inv(F).T @ sign_flip,
        condition33=True,
        alpha=alpha, beta=beta, ae_max=scenario.ae_max,
        t_f=scenario.t_f, t_c=scenario.t_c,
        kernels=kernels, scenario=scenario,
    )


def mu_e(scenario: EngagementScenario, kernels: Optional[KernelSet] = None,
         tol: float = _INTEGRAL_TOL) -> float:
    """Reachability weight: how much terminal correction the evader can
    accumulate on the tail [t_f, t_f + t_c] under its acceleration bound."""
    k = kernels if kernels is not None else Kernels(scenario)
    if scenario.t_c == 0.0:
        return 0.0
    return quad_adaptive(lambda t: abs(k.g_e(t)), scenario.t_f,
                         scenario.t_f + scenario.t_c, tol)


def kernels(scenario: EngagementScenario, grid: Optional[TimeGrid] = None) -> Kernels:
    """Build the kernel functions of a scenario."""
    return Kernels(scenario, grid)


def coefficients(scenario: EngagementScenario, kernels: Optional[KernelSet] = None,
                 tol: float = _INTEGRAL_TOL) -> GameCoefficients:
    """All game coefficients by adaptive quadrature over the kernels.

    A single shared tolerance keeps the algebraic identities among the
    coefficients near round-off. Raises SolvabilityError when the evader
    effort weight does not exceed the squared-kernel integral.
    """
    k = kernels if kernels is not None else Kernels(scenario)
    t_f = scenario.t_f

    cache: dict[float, tuple[float, float, float]] = {}

    def triple(t: float) -> tuple[float, float, float]:
        v = cache.get(t)
        if v is None:
            (hp, he), ge = k.sample_engagement(t), k.sample_target(t)
            v = (float(hp[0]), float(he[0]), float(ge[0]))
            cache[t] = v
        return v

    int_hp2 = quad_adaptive(lambda t: triple(t)[0] ** 2, 0.0, t_f, tol)
    int_he2 = quad_adaptive(lambda t: triple(t)[1] ** 2, 0.0, t_f, tol)
    int_hege = quad_adaptive(lambda t: triple(t)[1] * triple(t)[2], 0.0, t_f, tol)
    int_ge2 = quad_adaptive(lambda t: triple(t)[2] ** 2, 0.0, t_f, tol)
    mu = mu_e(scenario, k, tol)
    return _assemble(int_hp2, int_he2, int_hege, int_ge2, mu, scenario, k)


# -- closed forms for the first-order special case ---------------------------


def _psi_integral(x: float) -> float:
    """int_0^x psi(u) du = x^2/2 - psi(x)."""
    return 0.5 * x * x - psi(x)


def _psi_sq_integral(x: float) -> float:
    """int_0^x psi(u)^2 du."""
    return x * (x * x - 3.0 * x + 3.0) / 3.0 - 2.0 * x * math.exp(-x) \
        - 0.5 * math.expm1(-2.0 * x)


def _psi_cross_integral(x: float, s: float) -> float:
    """int_0^x psi(u) psi(u + s) du for s >= 0."""
    ex = math.exp(-x)
    return (math.exp(-s) * (-0.5) * math.expm1(-2.0 * x)
            + 0.5 * s
            + 0.5 * s * (x - 1.0) ** 2
            - (x + s) * ex
            - x * ex * math.exp(-s)
            + x * (x * x - 3.0 * x + 3.0) / 3.0)


def first_order_coefficients(tau_p: float, tau_e: float, t_f: float, t_c: float,
                             alpha: float, beta: float, ae_max: float) -> GameCoefficients:
    """Game coefficients for first-order controllers from analytic
    antiderivatives of the psi kernels.

    Independent of the matrix-exponential path; agrees with it to better
    than 1e-8 relative on non-degenerate scenarios.
    """
    xe = t_f / tau_e
    sigma = t_c / tau_e
    int_hp2 = tau_p ** 3 * _psi_sq_integral(t_f / tau_p)
    int_he2 = tau_e ** 3 * _psi_sq_integral(xe)
    int_hege = tau_e ** 3 * _psi_cross_integral(xe, sigma)
    int_ge2 = tau_e ** 3 * (_psi_sq_integral(xe + sigma) - _psi_sq_integral(sigma))
    mu = tau_e ** 2 * _psi_integral(sigma)
    scenario = first_order_scenario(tau_p, tau_e, t_f, t_c, alpha, beta, ae_max)
    k = FirstOrderKernels(tau_p, tau_e, t_f, t_c)
    return _assemble(int_hp2, int_he2, int_hege, int_ge2, mu, scenario, k)
