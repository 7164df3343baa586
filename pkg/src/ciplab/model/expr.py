"""Convexity-certified expression trees over R^n.

Every node evaluates a point (or a batch of points) to an extended real.
Coordinates are 1-based, matching x1, x2, ... in problem files.

Two evaluation routes exist on purpose: ``expr(x)`` walks the tree with the
guarded scalar arithmetic of :mod:`ciplab.extreal`, while ``expr.batch(X)``
is the vectorised numpy path the solvers use.  Tests cross-check them.
"""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from ..extreal import (
    PLUS_INF,
    IndeterminateSum,
    ext_add,
    ext_scale_pos,
    ext_sup,
    ext_sum,
)


class DimensionMismatch(ValueError):
    pass


class ConvexityRejected(ValueError):
    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


def _as_batch(X, n=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if n is not None and X.shape[1] != n:
        raise DimensionMismatch(f"expected points of dimension {n}, got {X.shape[1]}")
    return X


class Expr:
    """Base class; subclasses are frozen dataclasses."""

    def batch(self, X):
        X = _as_batch(X)
        self.check_dim(X.shape[1])
        with np.errstate(over="ignore", invalid="ignore"):
            out = self._batch(X)
        if np.isnan(out).any():
            raise IndeterminateSum(f"NaN while evaluating {self}")
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float).ravel()
        self.check_dim(x.size)
        return self._scalar(x)

    def check_dim(self, n):
        need = self.min_dim
        if need > n:
            raise DimensionMismatch(f"expression uses coordinate {need} but point has dimension {n}")
        fixed = self.fixed_dim
        if fixed is not None and fixed != n:
            raise DimensionMismatch(f"affine data of length {fixed} applied to dimension {n}")

    @property
    def children(self):
        return ()

    @cached_property
    def min_dim(self):
        return max((c.min_dim for c in self.children), default=0)

    @cached_property
    def fixed_dim(self):
        dims = {c.fixed_dim for c in self.children} - {None}
        if len(dims) > 1:
            raise DimensionMismatch(f"mixed affine lengths {sorted(dims)}")
        return dims.pop() if dims else None

    def __add__(self, other):
        return Sum((self, other))


@dataclass(frozen=True)
class Const(Expr):
    c: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ValueError("Const takes a finite real")

    def _batch(self, X):
        return np.full(X.shape[0], float(self.c))

    def _scalar(self, x):
        return float(self.c)


@dataclass(frozen=True)
class Coord(Expr):
    i: int

    def __post_init__(self):
        if int(self.i) < 1:
            raise ValueError("coordinates are 1-based")

    @cached_property
    def min_dim(self):
        return int(self.i)

    def _batch(self, X):
        return X[:, self.i - 1].copy()

    def _scalar(self, x):
        return float(x[self.i - 1])


@dataclass(frozen=True)
class Affine(Expr):
    a: tuple
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", float(self.b))
        if not all(math.isfinite(v) for v in self.a + (self.b,)):
            raise ValueError("Affine coefficients must be finite")

    @cached_property
    def min_dim(self):
        return 0

    @cached_property
    def fixed_dim(self):
        return len(self.a)

    @cached_property
    def _vec(self):
        return np.array(self.a)

    def _batch(self, X):
        return X @ self._vec + self.b

    def _scalar(self, x):
        return float(np.dot(self._vec, x) + self.b)


@dataclass(frozen=True)
class Sum(Expr):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("Sum needs at least one term")

    @property
    def children(self):
        return self.args

    def _batch(self, X):
        out = self.args[0]._batch(X)
        for a in self.args[1:]:
            out = out + a._batch(X)
        return out

    def _scalar(self, x):
        return ext_sum(a._scalar(x) for a in self.args)


@dataclass(frozen=True)
class PosScale(Expr):
    c: float
    arg: Expr

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ConvexityRejected("scale", f"PosScale requires c > 0, got {self.c}")

    @property
    def children(self):
        return (self.arg,)

    def _batch(self, X):
        return self.c * self.arg._batch(X)

    def _scalar(self, x):
        return ext_scale_pos(self.c, self.arg._scalar(x))


@dataclass(frozen=True)
class MaxOf(Expr):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("MaxOf needs at least one term")

    @property
    def children(self):
        return self.args

    def _batch(self, X):
        out = self.args[0]._batch(X)
        for a in self.args[1:]:
            out = np.maximum(out, a._batch(X))
        return out

    def _scalar(self, x):
        return ext_sup([a._scalar(x) for a in self.args])


@dataclass(frozen=True)
class ExpOf(Expr):
    arg: Expr

    @property
    def children(self):
        return (self.arg,)

    def _batch(self, X):
        return np.exp(self.arg._batch(X))

    def _scalar(self, x):
        v = self.arg._scalar(x)
        if v == PLUS_INF:
            return PLUS_INF
        try:
            return math.exp(v)
        except OverflowError:
            return PLUS_INF


@dataclass(frozen=True)
class AbsOf(Expr):
    arg: Expr

    @property
    def children(self):
        return (self.arg,)

    def _batch(self, X):
        return np.abs(self.arg._batch(X))

    def _scalar(self, x):
        return abs(self.arg._scalar(x))


@dataclass(frozen=True)
class SquareOf(Expr):
    """(affine)^2; the only smooth curvature atom besides exp."""

    arg: Expr

    @property
    def children(self):
        return (self.arg,)

    def _batch(self, X):
        v = self.arg._batch(X)
        return v * v

    def _scalar(self, x):
        v = self.arg._scalar(x)
        if not math.isfinite(v):
            return PLUS_INF
        try:
            return v * v
        except OverflowError:
            return PLUS_INF


@dataclass(frozen=True)
class DomainRestrict(Expr):
    """``arg`` on the polyhedron {g_j(x) <= 0}, +inf elsewhere."""

    arg: Expr
    where: tuple

    def __post_init__(self):
        object.__setattr__(self, "where", tuple(self.where))

    @property
    def children(self):
        return (self.arg,) + self.where

    def _batch(self, X):
        out = self.arg._batch(X)
        outside = np.zeros(X.shape[0], dtype=bool)
        for g in self.where:
            outside |= g._batch(X) > 0
        return np.where(outside, np.inf, out)

    def _scalar(self, x):
        if any(g._scalar(x) > 0 for g in self.where):
            return PLUS_INF
        return self.arg._scalar(x)


# -- affine reduction -------------------------------------------------------

def as_affine(e, n):
    """Return (a, b) with e(x) = a.x + b, or None if e is not affine."""
    if isinstance(e, Const):
        return np.zeros(n), float(e.c)
    if isinstance(e, Coord):
        if e.i > n:
            raise DimensionMismatch(f"coordinate {e.i} in dimension {n}")
        a = np.zeros(n)
        a[e.i - 1] = 1.0
        return a, 0.0
    if isinstance(e, Affine):
        if len(e.a) != n:
            raise DimensionMismatch(f"affine data of length {len(e.a)} in dimension {n}")
        return np.array(e.a), e.b
    if isinstance(e, PosScale):
        inner = as_affine(e.arg, n)
        if inner is None:
            return None
        return e.c * inner[0], e.c * inner[1]
    if isinstance(e, Sum):
        a, b = np.zeros(n), 0.0
        for term in e.args:
            part = as_affine(term, n)
            if part is None:
                return None
            a, b = a + part[0], b + part[1]
        return a, b
    return None


def is_affine(e):
    if isinstance(e, (Const, Coord, Affine)):
        return True
    if isinstance(e, PosScale):
        return is_affine(e.arg)
    if isinstance(e, Sum):
        return all(is_affine(a) for a in e.args)
    return False


def has_restriction(e):
    if isinstance(e, DomainRestrict):
        return True
    return any(has_restriction(c) for c in e.children)


# -- convexity certification ------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    certified: bool
    path: str = ""
    reason: str = ""

    def __bool__(self):
        return self.certified


CERTIFIED = Verdict(True)


def is_convex(e, path="$"):
    """Structural convexity check.

    Rules: atoms are convex; Sum, PosScale and MaxOf preserve convexity;
    exp of a convex expression is convex (exp is convex nondecreasing);
    abs and square only of affine arguments; a domain restriction needs a
    convex body and affine cuts.
    """
    if isinstance(e, (Const, Coord, Affine)):
        return CERTIFIED
    if isinstance(e, PosScale):
        if not e.c > 0:
            return Verdict(False, path, "non-positive scale")
        return is_convex(e.arg, path + ".arg")
    if isinstance(e, (Sum, MaxOf)):
        for k, a in enumerate(e.args):
            v = is_convex(a, f"{path}.args[{k}]")
            if not v:
                return v
        return CERTIFIED
    if isinstance(e, ExpOf):
        return is_convex(e.arg, path + ".arg")
    if isinstance(e, (AbsOf, SquareOf)):
        if not is_affine(e.arg):
            name = "abs" if isinstance(e, AbsOf) else "square"
            return Verdict(False, path + ".arg", f"{name} of a non-affine expression")
        return CERTIFIED
    if isinstance(e, DomainRestrict):
        for k, g in enumerate(e.where):
            if not is_affine(g):
                return Verdict(False, f"{path}.where[{k}]", "restriction cut is not affine")
        return is_convex(e.arg, path + ".arg")
    if isinstance(e, Expr):
        return Verdict(False, path, f"unknown node {type(e).__name__}")
    return Verdict(False, path, f"not an expression: {e!r}")


def certify(e, path="$"):
    v = is_convex(e, path)
    if not v:
        raise ConvexityRejected(v.path, v.reason)
    return e
