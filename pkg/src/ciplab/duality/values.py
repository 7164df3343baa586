"""Value functions v and v1, the epsilon sweep and the lsc-hull value."""
from dataclasses import dataclass, field
import math
from numbers import Real

import numpy as np

from ..extreal import to_token
from ..minimize import minimize
from ..model import in_M_batch, sup_batch
from .lagrangian import default_config, level_minimize, polish


def v1_oracle(p, r, N=None):
    def oracle(X):
        h, _ = sup_batch(p, X, N)
        return np.where(h <= r, p.objective.batch(X), np.inf)

    return oracle


def v1_result(p, r, cfg=None, N=None, points=None):
    """MinResult for inf{f : h <= r}."""
    cfg = cfg or default_config(p)
    oracle = v1_oracle(p, r, N)
    return polish(level_minimize(p, oracle, r, cfg, N), oracle, points)


def value_v1(p, r, cfg=None, N=None, points=None):
    """v1(r) = inf{f(x) : h(x) <= r}."""
    return v1_result(p, r, cfg, N, points).value


def value_v(p, y, cfg=None, N=None, points=None):
    """v(y) = inf{f(x) : f_t(x) <= y_t for all t}, y_t = 0 off the given map.

    ``y`` is a number (uniform deviation, handled through h) or a finite map
    from indices to deviations.
    """
    if isinstance(y, Real):
        return value_v1(p, float(y), cfg, N, points)
    y = {k: float(v) for k, v in dict(y).items()}
    cfg = cfg or default_config(p)
    fam = p.family
    if all(v <= 0 for v in y.values()) or fam.is_finite:
        # the listed rows only tighten (or, for finite T, replace) rows of h <= 0
        rest = None
        if fam.is_finite:
            rest = [(k, e) for k, e in fam.items if k not in y]

        def oracle(X):
            f = p.objective.batch(X)
            ok = np.ones(X.shape[0], dtype=bool)
            if rest is None:
                ok &= sup_batch(p, X, N)[0] <= 0
            else:
                for _, e in rest:
                    ok &= e.batch(X) <= 0
            for t, yt in y.items():
                ok &= p.constraint(t).batch(X) <= yt
            return np.where(ok, f, np.inf)
    else:
        # rows outside the map are checked up to the truncation level
        level = p.truncation if N is None else int(N)
        rows = [(t, e) for t, e in fam.members(level) if t not in y]

        def oracle(X):
            f = p.objective.batch(X)
            ok = np.ones(X.shape[0], dtype=bool)
            for _, e in rows:
                ok &= e.batch(X) <= 0
            for t, yt in y.items():
                ok &= p.constraint(t).batch(X) <= yt
            return np.where(ok, f, np.inf)

    return polish(minimize(oracle, cfg), oracle, points).value


def geometric_schedule(eps0=1.0, ratio=0.5, count=20):
    if not (eps0 > 0 and math.isfinite(eps0)):
        raise ValueError("eps0 must be a positive real")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    if int(count) < 1:
        raise ValueError("count must be >= 1")
    return tuple(eps0 * ratio ** k for k in range(int(count)))


@dataclass
class SweepResult:
    epsilons: list
    values: list
    monotone: bool
    limit_estimate: float
    converged: bool
    exact: bool = True
    witnesses: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {"epsilons": list(self.epsilons), "values": [to_token(v) for v in self.values],
                "estimate": to_token(self.limit_estimate), "converged": bool(self.converged),
                "monotone": bool(self.monotone), "exact": bool(self.exact)}


def _check_schedule(schedule):
    eps = [float(e) for e in schedule]
    if not eps:
        raise ValueError("empty epsilon schedule")
    if any(not e > 0 for e in eps):
        raise ValueError("epsilons must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    return eps


def limiting_value(p, schedule=None, cfg=None, N=None, points=None):
    """Sweep v1 along a decreasing epsilon schedule toward 0.

    Points are solved from the smallest epsilon up and each solve also
    tries the previous witnesses, which are feasible for every larger
    epsilon; the computed sweep is therefore monotone like v1 itself.
    """
    eps = _check_schedule(schedule if schedule is not None else geometric_schedule())
    cfg = cfg or default_config(p)
    pts = [] if points is None else [np.asarray(x, dtype=float) for x in np.atleast_2d(points)]
    values, wits = [None] * len(eps), [None] * len(eps)
    for i in reversed(range(len(eps))):
        res = v1_result(p, eps[i], cfg, N, np.array(pts) if pts else None)
        values[i], wits[i] = res.value, res.witness
        if res.witness is not None:
            pts.append(np.asarray(res.witness, dtype=float))
    monotone = all(b >= a for a, b in zip(values, values[1:]))
    last = values[-1]
    converged = False
    if len(values) >= 2:
        prev = values[-2]
        if math.isfinite(last) and math.isfinite(prev):
            converged = abs(last - prev) < 1e-4 * (1 + abs(last))
        else:
            converged = last == prev
    exact = sup_batch(p, np.zeros((1, p.dim)), N)[1]
    return SweepResult(eps, values, monotone, last, converged, exact, wits)


def default_hchain(p, size=50):
    pool = p.pool(size)
    return [pool[:k] for k in range(1, len(pool) + 1)]


def lsc_hull_value(p, schedule=None, hchain=None, cfg=None, N=None, points=None):
    """(value, exact) of the double sup over epsilon and finite H of
    inf{f(x) : x in M, f_t(x) <= epsilon for t in H}.

    The inner value is non-increasing in epsilon and nondecreasing in H,
    so the sup sits at the smallest epsilon and the largest H.
    """
    eps = _check_schedule(schedule if schedule is not None else geometric_schedule())
    hchain = hchain if hchain is not None else default_hchain(p)
    if not hchain:
        raise ValueError("empty H chain")
    for a, b in zip(hchain, hchain[1:]):
        if not set(a) <= set(b):
            raise ValueError("H chain must be increasing")
    H, e = list(hchain[-1]), eps[-1]
    rows = [p.constraint(t) for t in H]
    cfg = cfg or default_config(p)

    def oracle(X):
        ok, _ = in_M_batch(p, X, N)
        for g in rows:
            ok = ok & (g.batch(X) <= e)
        return np.where(ok, p.objective.batch(X), np.inf)

    def worst_row(X):
        ok, _ = in_M_batch(p, X, N)
        g = np.max([r.batch(X) for r in rows], axis=0)
        return np.where(ok, g, np.inf)

    value = polish(level_minimize(p, oracle, e, cfg, N, phase_one=worst_row), oracle, points).value
    return value, in_M_batch(p, np.zeros((1, p.dim)), N)[1]


def lsc_hull_v(p, schedule=None, hchain=None, cfg=None, N=None, points=None):
    return lsc_hull_value(p, schedule, hchain, cfg, N, points)[0]


__all__ = [
    "v1_oracle",
    "v1_result",
    "value_v1",
    "value_v",
    "geometric_schedule",
    "SweepResult",
    "limiting_value",
    "default_hchain",
    "lsc_hull_value",
    "lsc_hull_v",
]
