from .expr import (
    AbsOf,
    Affine,
    Const,
    ConvexityRejected,
    Coord,
    DimensionMismatch,
    DomainRestrict,
    ExpOf,
    Expr,
    MaxOf,
    PosScale,
    SquareOf,
    Sum,
    Verdict,
    as_affine,
    has_restriction,
    certify,
    is_affine,
    is_convex,
)
from .problem import (
    FiniteFamily,
    eval_formula,
    in_M_batch,
    ParametricFamily,
    Problem,
    SetTag,
    member,
    member_batch,
    sup_batch,
    sup_eval,
    truncated_sup_batch,
)
from .io import (
    SchemaError,
    expr_from_node,
    expr_to_node,
    load_problem,
    parse_problem,
    problem_from_dict,
    problem_to_dict,
    save_problem,
    serialize_problem,
)
