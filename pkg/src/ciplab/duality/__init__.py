from .lagrangian import (
    Multiplier,
    default_config,
    dual_function,
    lagrangian,
    lagrangian_batch,
    polish,
)
from .solvers import (
    DualConfig,
    DualReport,
    Witnesses,
    solve_D,
    solve_D0,
    solve_D1,
    solve_primal,
    sup_dual_function,
    sup_lagrangian_batch,
)
from .values import (
    SweepResult,
    geometric_schedule,
    limiting_value,
    lsc_hull_v,
    lsc_hull_value,
    value_v,
    value_v1,
)
from .certify import (
    CHAIN_SLACK,
    SOLVER_TOL,
    AuditReport,
    ChainViolation,
    MinimaxGap,
    MinimaxVerdict,
    NoSlaterCertificate,
    SlaterCertificate,
    StrongDualityVerdict,
    StrongDualityViolation,
    compute_chain,
    finite_minimax_check,
    karney_gap,
    make_certificate,
    strong_duality_check,
    strong_duality_verdict,
    strong_slater,
    weak_duality_audit,
)
