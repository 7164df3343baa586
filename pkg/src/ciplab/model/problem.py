"""Constraint index families, the Problem record and set membership."""
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
import ast
import json
import math
import operator

import numpy as np

from .expr import (
    ConvexityRejected,
    DimensionMismatch,
    Expr,
    certify,
    has_restriction,
)

MAX_DIM = 8


class SetTag(Enum):
    ALL_X = "AllX"
    M = "M"
    DELTA = "Delta"
    DELTA1 = "Delta1"
    E = "E"


# -- t-formulas used by parametric templates --------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def eval_formula(text, t):
    """Evaluate an arithmetic formula in the integer parameter ``t``."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "t":
            return t
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](walk(node.operand))
        raise ValueError(f"unsupported formula syntax in {text!r}")

    return float(walk(ast.parse(text, mode="eval")))


def _substitute(node, t):
    if isinstance(node, str):
        return eval_formula(node, t)
    if isinstance(node, list):
        return [_substitute(v, t) for v in node]
    if isinstance(node, dict):
        return {k: (v if k == "op" else _substitute(v, t)) for k, v in node.items()}
    return node


@lru_cache(maxsize=65536)
def _instantiate(template, t):
    from .io import expr_from_node

    node = _substitute(json.loads(template), t)
    return certify(expr_from_node(node, f"$.builder[t={t}]"), f"$.builder[t={t}]")


# -- index families ----------------------------------------------------------

@dataclass(frozen=True)
class FiniteFamily:
    items: tuple  # ((label, Expr), ...)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple((str(k), e) for k, e in self.items))
        if not self.items:
            raise ValueError("a finite family must be non-empty")
        labels = [k for k, _ in self.items]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate constraint labels")

    is_finite = True

    @property
    def labels(self):
        return [k for k, _ in self.items]

    def expr_at(self, label):
        for k, e in self.items:
            if k == str(label):
                return e
        raise KeyError(label)

    def members(self, N=None):
        return list(self.items)

    def pool(self, size=None):
        return self.labels

    @property
    def real_valued(self):
        return not any(has_restriction(e) for _, e in self.items)


@dataclass(frozen=True)
class ParametricFamily:
    """f_t for integer t >= start (t <= stop when bounded).

    ``template`` is a JSON expression node whose numeric fields may be
    formulas in t, e.g. ``{"op": "affine", "a": ["1/t", -1], "b": 0}``;
    ``special`` overrides individual indices.
    """

    start: int
    template: str
    stop: int = None
    special: tuple = ()
    sup_expr: Expr = None

    def __post_init__(self):
        tpl = self.template
        if not isinstance(tpl, str):
            tpl = json.dumps(tpl, sort_keys=True)
        else:
            tpl = json.dumps(json.loads(tpl), sort_keys=True)
        object.__setattr__(self, "template", tpl)
        object.__setattr__(self, "special", tuple(sorted((int(t), e) for t, e in self.special)))
        if self.stop is not None and self.stop < self.start:
            raise ValueError("empty parametric range")

    is_finite = False

    def expr_at(self, t):
        t = int(t)
        if t < self.start or (self.stop is not None and t > self.stop):
            raise KeyError(t)
        for k, e in self.special:
            if k == t:
                return e
        return _instantiate(self.template, t)

    def indices(self, N):
        hi = N if self.stop is None else min(N, self.stop)
        return range(self.start, hi + 1)

    def members(self, N):
        return [(t, self.expr_at(t)) for t in self.indices(N)]

    def pool(self, size=50):
        return list(self.indices(self.start + size - 1))

    @property
    def labels(self):
        return None

    @property
    def real_valued(self):
        if any(has_restriction(e) for _, e in self.special):
            return False
        return not has_restriction(self.expr_at(self._first_generic()))

    def _first_generic(self):
        taken = {k for k, _ in self.special}
        t = self.start
        while t in taken:
            t += 1
        if self.stop is not None and t > self.stop:
            return self.start
        return t


def _box_tuple(box, n):
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if len(box) != n:
        raise DimensionMismatch(f"box has {len(box)} intervals for dimension {n}")
    for lo, hi in box:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"bad box interval [{lo}, {hi}]")
    return box


@dataclass(frozen=True)
class Problem:
    name: str
    dim: int
    objective: Expr
    family: object
    box: tuple = None
    truncation: int = 100
    max_dim: int = field(default=MAX_DIM, compare=False, repr=False)

    def __post_init__(self):
        n = int(self.dim)
        if not 1 <= n <= self.max_dim:
            raise DimensionMismatch(f"dimension {n} outside 1..{self.max_dim}")
        box = self.box if self.box is not None else [(-10.0, 10.0)] * n
        object.__setattr__(self, "box", _box_tuple(box, n))
        if int(self.truncation) < 1:
            raise ValueError("truncation must be >= 1")
        certify(self.objective, "$.objective")
        self.objective.check_dim(n)
        fam = self.family
        if fam.is_finite:
            for k, e in fam.items:
                certify(e, f"$.constraints[{k}]")
                e.check_dim(n)
        else:
            for t, e in fam.special:
                certify(e, f"$.constraints.special[{t}]")
                e.check_dim(n)
            stop = fam.start + 4 if fam.stop is None else min(fam.stop, fam.start + 4)
            for t in range(fam.start, stop + 1):
                fam.expr_at(t).check_dim(n)
            if fam.sup_expr is not None:
                certify(fam.sup_expr, "$.constraints.supExpr")
                fam.sup_expr.check_dim(n)
        grid = _probe_grid(self.box, 9)
        if not np.isfinite(self.objective.batch(grid)).any():
            raise ValueError(f"objective of {self.name!r} is +inf on the whole probe grid")

    @property
    def n(self):
        return self.dim

    def pool(self, size=50):
        return self.family.pool(size)

    def constraint(self, label):
        return self.family.expr_at(label)

    def with_family(self, family, name=None):
        return Problem(name or self.name, self.dim, self.objective, family,
                       self.box, self.truncation)


def _probe_grid(box, k):
    axes = [np.linspace(lo, hi, k) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


# -- sup-function and membership --------------------------------------------

def _points(p, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != p.dim:
        raise DimensionMismatch(f"point of dimension {X.shape[1]} for problem of dimension {p.dim}")
    return X, single


def sup_batch(p, X, N=None):
    """h over a batch of points; returns (values, exact)."""
    X, _ = _points(p, X)
    fam = p.family
    if fam.is_finite:
        out = None
        for _, e in fam.items:
            v = e.batch(X)
            out = v if out is None else np.maximum(out, v)
        return out, True
    if fam.sup_expr is not None:
        return fam.sup_expr.batch(X), True
    N = p.truncation if N is None else int(N)
    if N < 1:
        raise ValueError("truncation level must be >= 1")
    out = None
    for _, e in fam.members(N):
        v = e.batch(X)
        out = v if out is None else np.maximum(out, v)
    exact = fam.stop is not None and fam.stop <= N
    if out is None:
        raise ValueError("truncation level below the first index")
    return out, exact


def sup_eval(p, x, N=None):
    """(h(x), exact) for a single point."""
    vals, exact = sup_batch(p, x, N)
    return float(vals[0]), exact


def truncated_sup_batch(p, X, N):
    """max over t <= N of f_t, ignoring any closed-form sup expression."""
    X, _ = _points(p, X)
    fam = p.family
    members = fam.members() if fam.is_finite else fam.members(N)
    out = None
    for _, e in members:
        v = e.batch(X)
        out = v if out is None else np.maximum(out, v)
    return out


def in_M_batch(p, X, N=None):
    """Membership in M = intersection of dom f_t; returns (mask, exact)."""
    X, _ = _points(p, X)
    fam = p.family
    if fam.real_valued:
        return np.ones(X.shape[0], dtype=bool), True
    if fam.is_finite:
        return np.isfinite(sup_batch(p, X)[0]), True
    if fam.sup_expr is not None:
        return np.isfinite(fam.sup_expr.batch(X)), True
    N = p.truncation if N is None else int(N)
    vals = truncated_sup_batch(p, X, N)
    return np.isfinite(vals), fam.stop is not None and fam.stop <= N


def member_batch(p, X, tag, N=None, tol=0.0):
    """Vectorised :func:`member`; returns (mask, exact)."""
    X, _ = _points(p, X)
    tag = SetTag(tag) if not isinstance(tag, SetTag) else tag
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if tag is SetTag.ALL_X:
        return np.ones(X.shape[0], dtype=bool), True
    if tag is SetTag.M:
        return in_M_batch(p, X, N)
    if tag is SetTag.DELTA:
        m, exact = in_M_batch(p, X, N)
        return m & np.isfinite(p.objective.batch(X)), exact
    h, exact = sup_batch(p, X, N)
    if tag is SetTag.DELTA1:
        return np.isfinite(h) & np.isfinite(p.objective.batch(X)), exact
    return h <= tol, exact


def member(p, x, tag, N=None, tol=0.0):
    mask, _ = member_batch(p, x, tag, N, tol)
    return bool(mask[0])


__all__ = [
    "SetTag",
    "FiniteFamily",
    "ParametricFamily",
    "Problem",
    "ConvexityRejected",
    "DimensionMismatch",
    "eval_formula",
    "sup_batch",
    "sup_eval",
    "truncated_sup_batch",
    "member",
    "member_batch",
    "in_M_batch",
]
