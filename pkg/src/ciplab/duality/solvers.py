"""inf(P), sup(D0), sup(D) and sup(D1).

Every inner infimum is estimated from above (the minimiser returns a point
it found), so two estimates that should satisfy a <= b can cross by solver
noise.  A shared :class:`Witnesses` pool fixes that: each dual function is
also evaluated at every point any solver has found, which is still a valid
(upper) estimate of that infimum and makes the computed chain
D0 <= D <= D1 <= P hold whenever the inequalities hold pointwise.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from ..extreal import MINUS_INF, PLUS_INF, to_token
from ..minimize import AllMinusInf, LineConfig, Status, maximize_concave_1d, minimize
from ..model import SetTag, in_M_batch, sup_batch
from .lagrangian import (Multiplier, default_config, dual_function, lagrangian_batch,
                         level_minimize, polish)


@dataclass(frozen=True)
class DualConfig:
    pool_size: int = 50
    support_cap: int = 4
    sweeps: int = 2
    columns: int = 2
    confirm: int = 5
    line: LineConfig = LineConfig(samples=9, tol=1e-5)
    haar_pool: int = 200
    use_haar: bool = True


@dataclass
class DualReport:
    problem: str
    which: str  # Primal | D0 | D | D1
    value: float
    attained: bool
    exact: bool
    multiplier: Multiplier = None
    s_star: float = None
    witness: np.ndarray = None
    status: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def label(self):
        return ("min" if self.which == "Primal" else "max") if self.attained else (
            "inf" if self.which == "Primal" else "sup")

    def to_dict(self):
        d = {"value": to_token(self.value), "attained": bool(self.attained),
             "exact": bool(self.exact)}
        if self.multiplier is not None:
            d["multiplier"] = self.multiplier.to_dict()
        if self.s_star is not None:
            d["sStar"] = self.s_star
        if self.witness is not None:
            d["witness"] = [float(v) for v in self.witness]
        if self.status:
            d["status"] = self.status
        return d


class Witnesses:
    """Points found by any inner minimisation, shared across solvers."""

    def __init__(self, points=()):
        self._pts = []
        for x in points:
            self.add(x)

    def add(self, x):
        if x is None:
            return
        x = np.asarray(x, dtype=float).ravel()
        if not np.isfinite(x).all():
            return
        for y in self._pts:
            if y.shape == x.shape and np.array_equal(x, y):
                return
        self._pts.append(x.copy())

    def points(self):
        return np.array(self._pts) if self._pts else None

    def __len__(self):
        return len(self._pts)


def _sup_exact(p, N):
    return sup_batch(p, np.zeros((1, p.dim)), N)[1]


def _M_exact(p, N):
    return in_M_batch(p, np.zeros((1, p.dim)), N)[1]


# -- primal --------------------------------------------------------------------

def primal_oracle(p, N=None, feas_tol=0.0):
    def oracle(X):
        h, _ = sup_batch(p, X, N)
        return np.where(h <= feas_tol, p.objective.batch(X), np.inf)

    return oracle


def solve_primal(p, cfg=None, N=None, feas_tol=0.0, witnesses=None):
    """inf f over the feasible set {h <= feas_tol}."""
    cfg = cfg or default_config(p)
    oracle = primal_oracle(p, N, feas_tol)
    res = level_minimize(p, oracle, feas_tol, cfg, N)
    if witnesses is not None:
        polish(res, oracle, witnesses.points())
        witnesses.add(res.witness)
    return DualReport(p.name, "Primal", res.value, res.status is Status.ATTAINED,
                      _sup_exact(p, N), witness=res.witness, status=res.status.value,
                      diagnostics={"evaluations": res.evaluations})


# -- one-dimensional searches --------------------------------------------------

def _line_search(phi_box, phi, dcfg, extra=()):
    """Maximise a concave s -> phi(s) over s >= 0.

    The golden-section search runs on ``phi_box`` (inner infimum over the
    fixed search box, finite and concave); the best few of its points are
    then re-evaluated with the full ``phi``, which can see -inf.  Dual
    functions can jump at s = 0 (a term leaves the sum) or be finite at a
    single s only, so the confirmation step matters.
    """
    seen = {}

    def fb(s):
        if s not in seen:
            seen[s] = phi_box(s)
        return seen[s]

    s_box = None
    try:
        s_box, _, _ = maximize_concave_1d(fb, dcfg.line)
    except AllMinusInf:
        pass
    order = sorted(seen, key=lambda s: (-seen[s], s))
    cands = []
    for s in ([s_box] if s_box is not None else []) + order:
        if s not in cands:
            cands.append(s)
        if len(cands) >= dcfg.confirm:
            break
    for s in extra:
        if s is not None and s >= 0 and s not in cands:
            cands.append(float(s))
    results = [(s, phi(s)) for s in cands]
    s_best, r_best = max(results, key=lambda sr: (sr[1].value, -sr[0]))
    at_cap = s_best >= dcfg.line.s_cap * (1 - 1e-9)
    return s_best, r_best, not at_cap, results


# -- Lagrangian duals ----------------------------------------------------------

def _haar_report(p, which, dcfg):
    from ..haar import HaarStatus, detect_linear, haar_dual

    lin = detect_linear(p)
    if lin is None:
        return None
    pool = None if lin.is_finite else lin.default_pool(dcfg.haar_pool)
    sol = haar_dual(lin, pool)
    attained = sol.status is HaarStatus.OPTIMAL
    return DualReport(p.name, which, sol.value, attained, sol.exact, multiplier=sol.multiplier,
                      status=sol.status.value,
                      diagnostics={"method": "haar", "basis": [str(t) for t in sol.basis],
                                   "pivots": sol.pivots, "residual": sol.residual})


def _lagrange_dual(p, scope, cfg, N, dcfg, witnesses, extra_multipliers=(), ceiling=None):
    which = "D0" if scope is SetTag.ALL_X else "D"
    cfg = cfg or default_config(p)
    dcfg = dcfg or DualConfig()
    wit = witnesses if witnesses is not None else Witnesses()
    if dcfg.use_haar:
        rep = _haar_report(p, which, dcfg)
        if rep is not None:
            return rep
    fixed = replace(cfg.fixed(), refine_rounds=25, coarse_grid=17)
    evals = [0]

    def phi(lam):
        evals[0] += 1
        r = dual_function(p, lam, scope, cfg, N, wit.points())
        wit.add(r.witness)
        return r

    def phi_box(lam):
        evals[0] += 1
        r = minimize(lambda X: lagrangian_batch(p, lam, X, scope, N), fixed)
        return r.value

    # weak duality caps every dual value at inf(P); an estimate of it from
    # above lets the search stop once nothing is left to gain
    cap = PLUS_INF if ceiling is None else ceiling - 1e-9 * (1 + abs(ceiling))

    best_lam = Multiplier()
    best = phi(best_lam)
    best_attained = True
    for lam in extra_multipliers:
        if lam is None:
            continue
        r = phi(lam)
        if r.value > best.value:
            best_lam, best = lam, r

    pool = p.pool(dcfg.pool_size)

    def priced(x, skip=()):
        # f_t(x) at a Lagrangian minimiser x is a supergradient coordinate
        if x is None:
            return []
        out = []
        for t in pool:
            if t in skip:
                continue
            v = float(p.constraint(t).batch(x[None, :])[0])
            if v > 0:
                out.append((v, t))
        return [t for _, t in sorted(out, key=lambda vt: -vt[0])]

    cands = priced(best.witness)[:dcfg.support_cap]

    def line(base, t):
        s, r, att, _ = _line_search(lambda s: phi_box(base.with_weight(t, s)),
                                    lambda s: phi(base.with_weight(t, s)), dcfg)
        return base.with_weight(t, s), r, att

    def take(lam, r, att):
        nonlocal best_lam, best, best_attained
        if r.value > best.value:
            best_lam, best, best_attained = lam, r, att
            return True
        return False

    def line_dir(base, delta):
        # base + s delta for 0 <= s <= s_lim, the range keeping weights >= 0
        neg = [-base.weight(t) / d for t, d in delta.items() if d < 0]
        s_lim = min(neg) if neg else dcfg.line.s_cap
        if not s_lim > 0:
            return None
        lcfg = replace(dcfg.line, s_max=min(1.0, s_lim), s_cap=s_lim)

        def at(s):
            return Multiplier({t: max(0.0, base.weight(t) + s * delta.get(t, 0.0))
                               for t in set(base.support) | set(delta)})

        s, r, att, _ = _line_search(lambda s: phi_box(at(s)), lambda s: phi(at(s)),
                                    replace(dcfg, line=lcfg))
        return at(s), r, True

    def ascend(support):
        # coordinate ascent; each sweep ends with a line search along the
        # sweep's net move, which damps the zigzag of correlated coordinates
        for _ in range(dcfg.sweeps):
            before, lam0 = best.value, best_lam
            for t in support:
                if best.value >= cap:
                    return
                take(*line(best_lam, t))
            if not best.value > before + 1e-9 * (1 + abs(before)):
                return
            delta = {t: best_lam.weight(t) - lam0.weight(t)
                     for t in set(best_lam.support) | set(lam0.support)}
            if best.value < cap and len([d for d in delta.values() if d]) >= 2:
                res = line_dir(best_lam, delta)
                if res is not None:
                    take(*res)

    scores = []
    for t in cands:
        if best.value >= cap:
            break
        lam, r, att = line(Multiplier(), t)
        if math.isfinite(r.value):
            scores.append((r.value, t))
        take(lam, r, att)
    support = [t for _, t in sorted(scores, key=lambda vt: -vt[0])]
    support = list(dict.fromkeys(best_lam.support + support))[:dcfg.support_cap]
    if len(support) >= 2:
        ascend(support)

    # column generation: price at the current minimiser, add the most
    # violated index, re-balance the support by coordinate ascent
    added = []
    for _ in range(dcfg.columns):
        if best.value >= cap:
            break
        new = priced(best.witness, skip=set(best_lam.support))[:2]
        for t in new:
            if take(*line(best_lam, t)):
                added.append(t)
                break
        else:
            break
        support = list(dict.fromkeys([added[-1]] + sorted(best_lam.support, key=best_lam.weight,
                                                          reverse=True)))[:dcfg.support_cap]
        if len(support) >= 2:
            ascend(support)

    fam = p.family
    exact = fam.is_finite and (scope is SetTag.ALL_X or _M_exact(p, N))
    return DualReport(p.name, which, best.value, best_attained and best.value > MINUS_INF,
                      exact, multiplier=best_lam, witness=best.witness, status=best.status.value,
                      diagnostics={"method": "line-search", "candidates": [str(t) for t in cands],
                                   "added": [str(t) for t in added],
                                   "dualEvaluations": evals[0]})


def solve_D0(p, cfg=None, N=None, dcfg=None, witnesses=None, extra_multipliers=(), ceiling=None):
    """sup over finite-support lam >= 0 of inf over all x of L0.

    ``ceiling`` is an upper estimate of inf(P); the search stops on reaching it.
    """
    return _lagrange_dual(p, SetTag.ALL_X, cfg, N, dcfg, witnesses, extra_multipliers, ceiling)


def solve_D(p, cfg=None, N=None, dcfg=None, witnesses=None, extra_multipliers=(), ceiling=None):
    """sup over finite-support lam >= 0 of inf over M of L."""
    return _lagrange_dual(p, SetTag.M, cfg, N, dcfg, witnesses, extra_multipliers, ceiling)


# -- sup-dual ------------------------------------------------------------------

def sup_lagrangian_batch(p, s, X, N=None):
    """f + s h on Delta1 (dom f and dom h), +inf elsewhere; s = 0 keeps Delta1."""
    h, _ = sup_batch(p, X, N)
    f = p.objective.batch(X)
    inside = np.isfinite(h) & np.isfinite(f)
    val = f + s * np.where(inside, h, 0.0) if s > 0 else f
    return np.where(inside, val, np.inf)


def sup_dual_function(p, s, cfg=None, N=None, points=None):
    if not s >= 0:
        raise ValueError(f"s must be >= 0, got {s}")
    cfg = cfg or default_config(p)

    def oracle(X):
        return sup_lagrangian_batch(p, s, X, N)

    return polish(minimize(oracle, cfg), oracle, points)


def solve_D1(p, cfg=None, N=None, dcfg=None, witnesses=None, extra_s=()):
    """sup over s >= 0 of inf over Delta1 of f + s h."""
    cfg = cfg or default_config(p)
    dcfg = dcfg or DualConfig()
    wit = witnesses if witnesses is not None else Witnesses()
    fixed = cfg.fixed()

    def phi(s):
        r = sup_dual_function(p, s, cfg, N, wit.points())
        wit.add(r.witness)
        return r

    def phi_box(s):
        return minimize(lambda X: sup_lagrangian_batch(p, s, X, N), fixed).value

    s, r, attained, results = _line_search(phi_box, phi, dcfg, extra_s)
    if r.value == MINUS_INF:
        attained = False
    return DualReport(p.name, "D1", r.value, attained, _sup_exact(p, N), s_star=float(s),
                      witness=r.witness, status=r.status.value,
                      diagnostics={"candidates": [[float(a), to_token(b.value)] for a, b in results]})


def pooled_value(oracle, witnesses, value):
    """min(value, oracle over the witness pool)."""
    pts = witnesses.points() if witnesses is not None else None
    if pts is None or value == MINUS_INF:
        return value
    return min(value, float(np.min(oracle(pts))))


__all__ = [
    "DualConfig",
    "DualReport",
    "Witnesses",
    "primal_oracle",
    "solve_primal",
    "solve_D0",
    "solve_D",
    "sup_lagrangian_batch",
    "sup_dual_function",
    "solve_D1",
    "pooled_value",
]
