"""Shared test helpers: frozen oracle values and random scenario factories.

The ORACLE constants were computed with an independent pipeline
(scipy.integrate.quad over the closed-form psi kernels plus plain numpy
linear algebra) and are frozen here; the library must reproduce them through
its own matrix-exponential and adaptive-quadrature path.
"""

import dataclasses
from types import SimpleNamespace

import numpy as np

import zemgame as z

ORACLE = SimpleNamespace(
    beta_star=0.243832425334,
    mu_e=0.324998765902,
    bound=32.4998765902,
    nu_p=3.535882319474,
    nu_e=0.812774751112,
    s=3.723107568361,
    G2=2.041108441278,
    G3=5.911118515015,
    a=0.548227093577,
    det_G=26.1738537498,
    det_F=5.272834304236,
    d=0.750378275125,
    G_bar=np.array([[0.22584059, -0.07798273], [-0.07798273, -0.14224530]]),
    int_ge=1.3000012340,
    # branch data at (100, -100)
    omega_plus=np.array([32.91676023, -11.04921163]),
    omega_minus=np.array([27.84790234, -1.80330251]),
    value_plus=1827.656845,
    value_minus=2663.067092,
    # unconstrained play from z0 = 100
    urg_z_f=26.859283048868,
    urg_value=2685.928304887,
    urg_w_f_a=4.82270936,     # from (100, -50)
    urg_w_f_b=-45.17729064,   # from (100, -100)
    # cross checks at (100, -100)
    ue_bar=101.92288524,
    j_const=1359.77861380,
    j_ramp=2378.31918439,
    # penalized solve at eps = 1, sign +
    upg_eps1_omega=np.array([32.1624147, -9.6732389]),
    upg_eps1_value=1934.538509,
    # fixed-pursuer auxiliary problems at (100, -100)
    aux_plus_omega1=np.array([7.75542626, -8.74123185]),
    aux_plus_J=3114.030787,
    aux_minus_omega1=np.array([53.00923631, -4.11128229]),
    aux_minus_J=2278.620540,
    rho=300.718242,
    # interior-case candidates at (100, -100)
    zbar_f1=-87.540493,
    w_interior_1=-278.679638,
    zbar_f2=8.188503,
    w_interior_2=-83.286378,
    # cross-play table values
    table_plus={("+", "+"): 1941.90117889, ("+", "-"): 415.61705297,
                ("-", "+"): 2353.97954118},
    table_minus={("-", "-"): 2431.13537701, ("-", "+"): 1459.60579810,
                 ("+", "-"): 2843.21373930},
)

# Reference values printed by the source study (kept at their own coarser
# tolerances in the acceptance suite).
STUDY_POSITION_PLUS = (100.0, 50.0)
STUDY_POSITION_MINUS = (-100.0, -20.0)


def psi_ref(t):
    """Reference psi built on expm1 only; adequate for t not tiny."""
    return np.expm1(-np.asarray(t, dtype=float)) + t


def random_controller(rng, order):
    if order == 0:
        return z.ControllerModel.zero_order(feed=float(rng.uniform(0.5, 1.5)))
    A = -np.diag(rng.uniform(0.8, 4.0, order)) + 0.3 * rng.standard_normal((order, order))
    shift = max(0.0, float(np.linalg.eigvals(A).real.max()))
    A = A - (shift + 0.2) * np.eye(order)
    feed = 0.0 if rng.uniform() < 0.7 else float(rng.uniform(0.2, 0.8))
    return z.ControllerModel(order=order, sys=A, inp=rng.uniform(0.5, 2.0, order),
                             out=rng.uniform(0.5, 2.0, order), feed=feed)


def random_scenario(rng, max_order=3):
    """A random solvable scenario: beta is set a safe factor above the
    solvability threshold computed from the realized kernels."""
    pursuer = random_controller(rng, int(rng.integers(0, max_order + 1)))
    evader = random_controller(rng, int(rng.integers(0, max_order + 1)))
    base = z.EngagementScenario(
        pursuer=pursuer, evader=evader,
        t_f=float(rng.uniform(0.6, 1.8)), t_c=float(rng.uniform(0.3, 1.2)),
        alpha=float(rng.uniform(0.03, 0.4)), beta=1.0,
        ae_max=float(rng.uniform(20.0, 150.0)),
        z0=float(rng.uniform(-150.0, 150.0)), w0=float(rng.uniform(-150.0, 150.0)),
    )
    kernels = z.Kernels(base)
    threshold = z.solvability_threshold(kernels)
    scenario = dataclasses.replace(base, beta=threshold * float(rng.uniform(1.4, 3.0)))
    return scenario, z.Kernels(scenario)


def random_first_order(rng):
    tau_p = float(rng.uniform(0.08, 0.5))
    tau_e = float(rng.uniform(0.05, 0.3))
    t_f = float(rng.uniform(0.6, 2.0))
    t_c = float(rng.uniform(0.2, 1.2))
    alpha = float(rng.uniform(0.02, 0.3))
    ae_max = float(rng.uniform(30.0, 150.0))
    probe = z.first_order_coefficients(tau_p, tau_e, t_f, t_c, alpha,
                                       beta=1e9, ae_max=ae_max)
    beta = probe.beta_star * float(rng.uniform(1.3, 3.0))
    return dict(tau_p=tau_p, tau_e=tau_e, t_f=t_f, t_c=t_c, alpha=alpha,
                beta=beta, ae_max=ae_max)
