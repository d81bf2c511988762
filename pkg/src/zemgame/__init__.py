"""Open-loop saddle-point solver for a pursuit-evasion game with a terminal
constraint on the evader, reduced to two zero-effort-miss states."""

from .engagement import (
    ControllerModel,
    EngagementGeometry,
    EngagementScenario,
    StateSpace,
    build_evader_ss,
    build_game_ss,
    build_player_ss,
    build_relative_ss,
    first_order_scenario,
    initial_zem,
    resolve_horizons,
)
from .errors import (
    AssertionFailure,
    NearSingularError,
    NotInConstrainedRegion,
    ProbeFailure,
    ScenarioFormatError,
    SolvabilityError,
    ZemGameError,
)
from .numerics import TimeGrid, mat_exp, ode_playout, psi, quad_adaptive, solve2
from .reduction import (
    AffineInTime,
    Constant,
    ControlLaw,
    FirstOrderKernels,
    GameCoefficients,
    KernelCombo,
    Kernels,
    Sampled,
    coefficients,
    eval_control,
    first_order_coefficients,
    kernels,
    mu_e,
    sample_control,
    solvability_threshold,
)
from .simulate import (
    CostBreakdown,
    FullPlayout,
    Playout,
    ProbeReport,
    TerminalCheck,
    check_terminal,
    cross_play,
    evaluate_cost,
    playout_full,
    playout_reduced,
    saddle_probe,
)
from .solver import (
    AuxCrossSolution,
    BranchSolution,
    CaseIiiDiagnostic,
    PenaltyRecord,
    Region,
    RegionLabel,
    SaddleSolution,
    UpgSolution,
    UrgSolution,
    aux_cross,
    case_iii_positions,
    check_case_iii_infeasible,
    classify,
    penalty_sweep,
    solve_erg,
    solve_erg_branch,
    solve_rg,
    solve_upg,
    solve_urg,
)

__version__ = "0.1.0"
