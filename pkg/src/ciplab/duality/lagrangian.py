"""Finite-support multipliers, the ordinary and conic Lagrangians, and
dual-function evaluation."""
from dataclasses import replace
import math

import numpy as np

from ..extreal import MINUS_INF, PLUS_INF, ext_scale_pos, ext_sum
from ..minimize import MinConfig, Status, minimize
from ..model import SetTag, in_M_batch, sup_batch


class Multiplier:
    """Nonnegative weights on finitely many constraint indices.

    Zero weights are dropped on construction, so they are never stored and
    never multiply anything; the empty multiplier is lambda = 0.
    """

    __slots__ = ("_items",)

    def __init__(self, weights=None):
        items = {}
        for t, w in dict(weights or {}).items():
            w = float(w)
            if math.isnan(w) or w < 0 or math.isinf(w):
                raise ValueError(f"multiplier weight for {t!r} must be finite and >= 0, got {w}")
            if w > 0:
                items[t] = w
        self._items = tuple(sorted(items.items(), key=lambda kv: (str(type(kv[0])), kv[0])))

    @property
    def support(self):
        return [t for t, _ in self._items]

    def items(self):
        return list(self._items)

    def weight(self, t):
        for k, w in self._items:
            if k == t:
                return w
        return 0.0

    def total(self):
        return float(sum(w for _, w in self._items))

    def with_weight(self, t, w):
        d = dict(self._items)
        d[t] = w
        return Multiplier(d)

    def __len__(self):
        return len(self._items)

    def __eq__(self, other):
        return isinstance(other, Multiplier) and self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        inner = ", ".join(f"{t!r}: {w:g}" for t, w in self._items)
        return f"Multiplier({{{inner}}})"

    def to_dict(self):
        return {str(t): w for t, w in self._items}

    @classmethod
    def from_dict(cls, d, parametric=False):
        return cls({(int(k) if parametric else str(k)): v for k, v in d.items()})


def _scope(scope):
    scope = scope if isinstance(scope, SetTag) else SetTag(scope)
    if scope not in (SetTag.ALL_X, SetTag.M):
        raise ValueError(f"Lagrangian scope must be AllX or M, got {scope.value}")
    return scope


def lagrangian(p, lam, x, scope=SetTag.ALL_X):
    """L0(x, lam) (scope AllX) or the conic L(x, lam) (scope M), pointwise."""
    scope = _scope(scope)
    x = np.asarray(x, dtype=float).ravel()
    if scope is SetTag.M:
        inside, _ = in_M_batch(p, x[None, :])
        if not inside[0]:
            return PLUS_INF
    terms = [p.objective(x)]
    terms += [ext_scale_pos(w, p.constraint(t)(x)) for t, w in lam.items()]
    return ext_sum(terms)


def lagrangian_batch(p, lam, X, scope=SetTag.ALL_X, N=None):
    scope = _scope(scope)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = p.objective.batch(X)
    for t, w in lam.items():
        out = out + w * p.constraint(t).batch(X)
    if scope is SetTag.M:
        inside, _ = in_M_batch(p, X, N)
        out = np.where(inside, out, np.inf)
    return out


def default_config(p, **kw):
    return MinConfig(box=p.box, **kw)


def polish(res, oracle, points):
    """Lower ``res`` to the best of ``points`` under ``oracle``.

    The inner infimum is at most the oracle value at any point, so this
    can only tighten the estimate.
    """
    if points is None or len(points) == 0 or res.value == MINUS_INF:
        return res
    P = np.atleast_2d(np.asarray(points, dtype=float))
    V = oracle(P)
    j = int(np.argmin(V))
    if V[j] < res.value:
        res.value = float(V[j])
        res.witness = P[j].copy()
        if res.status is Status.INFEASIBLE:
            res.status = Status.ATTAINED
        if res.value == MINUS_INF:
            res.status = Status.UNBOUNDED
    return res


def level_minimize(p, oracle, level, cfg, N=None, phase_one=None):
    """Minimise ``oracle``, whose domain is {h <= level}.

    When the coarse grid misses a thin feasible set, h itself is minimised
    first (phase one) and its minimiser seeds the constrained search.
    ``phase_one`` replaces h when the domain is some other sublevel set.
    """
    res = minimize(oracle, cfg)
    if res.status is not Status.INFEASIBLE:
        return res
    if phase_one is None:
        phase_one = lambda X: sup_batch(p, X, N)[0]  # noqa: E731
    ph1 = minimize(phase_one, cfg.fixed())
    if ph1.witness is None or not ph1.value <= level:
        return res
    # thin sets tend to have narrow corners, which need more poll directions
    cfg = replace(cfg, rotations=max(cfg.rotations, 6))
    return minimize(oracle, cfg, seeds=ph1.witness[None, :])


def dual_function(p, lam, scope=SetTag.ALL_X, cfg=None, N=None, points=None):
    """inf over x of the (ordinary or conic) Lagrangian at ``lam``."""
    cfg = cfg or default_config(p)

    def oracle(X):
        return lagrangian_batch(p, lam, X, scope, N)

    return polish(minimize(oracle, cfg), oracle, points)
