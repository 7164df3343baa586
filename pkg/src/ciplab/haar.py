"""Haar dual of a linear semi-infinite program.

For ``inf c.x + c0  s.t.  a_t.x <= b_t`` the Haar dual is

    max  c0 - sum_t lam_t b_t   s.t.  sum_t lam_t (-a_t) = c,  lam >= 0,

a linear program in finitely many equality rows and one column per index.
It is solved exactly in rational arithmetic by a two-phase primal simplex
whose entering column is priced over the candidate pool (Bland's rule), so
only basic columns are ever materialised.
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import warnings

import numpy as np

from .duality.lagrangian import Multiplier
from .extreal import MINUS_INF, PLUS_INF
from .model import as_affine, is_affine


class HaarStatus(Enum):
    OPTIMAL = "Optimal"
    DUAL_INFEASIBLE = "DualInfeasible"
    UNBOUNDED = "Unbounded"


class CyclingDetected(RuntimeError):
    pass


class PoolExhaustedInexact(UserWarning):
    """Columns beyond the pool still price in; the value may be too low."""


@dataclass(frozen=True)
class LinearSIP:
    c: tuple
    c0: float = 0.0
    rows: tuple = ()  # finite rows: ((label, a, b), ...)
    row_at: object = None  # parametric: t -> (a, b)
    start: int = None
    stop: int = None

    @property
    def n(self):
        return len(self.c)

    @property
    def is_finite(self):
        return self.row_at is None

    def row(self, label):
        if self.is_finite:
            for k, a, b in self.rows:
                if k == label:
                    return a, b
            raise KeyError(label)
        return self.row_at(label)

    def default_pool(self, size=200):
        if self.is_finite:
            return [k for k, _, _ in self.rows]
        hi = self.start + size - 1
        if self.stop is not None:
            hi = min(hi, self.stop)
        return list(range(self.start, hi + 1))


@dataclass
class HaarSolution:
    value: float
    multiplier: Multiplier
    basis: list
    status: HaarStatus
    exact: bool = True
    pivots: int = 0
    residual: float = 0.0
    lam_exact: dict = field(default_factory=dict, repr=False)


def detect_linear(p):
    """The LinearSIP form of ``p`` when every expression is affine, else None."""
    n = p.dim
    if not is_affine(p.objective):
        return None
    c, c0 = as_affine(p.objective, n)
    fam = p.family
    if fam.is_finite:
        rows = []
        for k, e in fam.items:
            if not is_affine(e):
                return None
            a, beta = as_affine(e, n)
            rows.append((k, tuple(float(v) for v in a), -float(beta)))
        return LinearSIP(tuple(float(v) for v in c), float(c0), tuple(rows))
    if any(not is_affine(e) for _, e in fam.special):
        return None
    if not is_affine(fam.expr_at(fam._first_generic())):
        return None

    def row_at(t):
        a, beta = as_affine(fam.expr_at(t), n)
        return tuple(float(v) for v in a), -float(beta)

    return LinearSIP(tuple(float(v) for v in c), float(c0), (), row_at, fam.start, fam.stop)


def _frac(v):
    return Fraction(v) if not isinstance(v, Fraction) else v


class _Simplex:
    """Tableau-free revised simplex on ``max w.lam  s.t. A lam = c, lam >= 0``.

    Columns are produced on demand by ``column(j)``; the basis inverse is
    kept explicitly in exact rationals (m <= 8 rows).
    """

    def __init__(self, m, column, ncols, max_pivots):
        self.m = m
        self.column = column
        self.ncols = ncols
        self.max_pivots = max_pivots
        self.pivots = 0

    def run(self, basis, Binv, xB, costs_of):
        """Iterate to optimality; returns ('optimal'|'unbounded', basis, Binv, xB)."""
        m = self.m
        seen = set()
        while True:
            key = tuple(basis)
            if key in seen and self.pivots > 0:
                raise CyclingDetected(f"basis {key} revisited")
            seen.add(key)
            cB = [costs_of(j) for j in basis]
            y = [sum(cB[i] * Binv[i][k] for i in range(m)) for k in range(m)]
            entering = None
            for j in range(self.ncols):  # Bland: first improving column
                if j in basis:
                    continue
                col = self.column(j)
                if col is None:
                    continue
                rc = costs_of(j) - sum(y[k] * col[k] for k in range(m))
                if rc > 0:
                    entering, ecol = j, col
                    break
            if entering is None:
                return "optimal", basis, Binv, xB
            d = [sum(Binv[i][k] * ecol[k] for k in range(m)) for i in range(m)]
            ratios = [(xB[i] / d[i], basis[i], i) for i in range(m) if d[i] > 0]
            if not ratios:
                return "unbounded", basis, Binv, xB
            _, _, r = min(ratios)  # ties broken by smallest basic index
            piv = d[r]
            theta = xB[r] / piv
            for i in range(m):
                if i != r:
                    xB[i] -= theta * d[i]
            xB[r] = theta
            prow = [v / piv for v in Binv[r]]
            for i in range(m):
                if i != r and d[i] != 0:
                    Binv[i] = [Binv[i][k] - d[i] * prow[k] for k in range(m)]
            Binv[r] = prow
            basis[r] = entering
            self.pivots += 1
            if self.pivots > self.max_pivots:
                raise CyclingDetected("pivot limit exceeded")


def haar_dual(L, pool=None, max_pivots=10000, probe=True):
    """Solve the Haar dual of ``L`` exactly over the index ``pool``."""
    pool = list(L.default_pool() if pool is None else pool)
    if not pool:
        raise ValueError("empty candidate pool")
    m = L.n
    cols, costs = [], []
    for t in pool:
        a, b = L.row(t)
        cols.append([-_frac(v) for v in a])
        costs.append(-_frac(b))
    rhs = [_frac(v) for v in L.c]
    sign = [(-1 if v < 0 else 1) for v in rhs]
    # rows with negative right-hand side are negated so artificials start feasible
    cols = [[sign[i] * col[i] for i in range(m)] for col in cols]
    rhs = [sign[i] * rhs[i] for i in range(m)]
    npool = len(pool)
    art = list(range(npool, npool + m))

    def column(j):
        if j < npool:
            return cols[j]
        e = [Fraction(0)] * m
        e[j - npool] = Fraction(1)
        return e

    # phase one: maximise -sum(artificials)
    ph1 = _Simplex(m, column, npool + m, max_pivots)
    basis = list(art)
    Binv = [[Fraction(int(i == k)) for k in range(m)] for i in range(m)]
    xB = list(rhs)
    status, basis, Binv, xB = ph1.run(basis, Binv, xB, lambda j: Fraction(-1) if j >= npool else Fraction(0))
    infeas = sum(xB[i] for i in range(m) if basis[i] >= npool)
    if infeas > 0:
        return HaarSolution(MINUS_INF, Multiplier(), [], HaarStatus.DUAL_INFEASIBLE,
                            pivots=ph1.pivots)

    # drive zero-level artificials out of the basis where possible
    for r in range(m):
        if basis[r] < npool:
            continue
        for j in range(npool):
            if j in basis:
                continue
            d_r = sum(Binv[r][k] * cols[j][k] for k in range(m))
            if d_r != 0:
                d = [sum(Binv[i][k] * cols[j][k] for k in range(m)) for i in range(m)]
                prow = [v / d_r for v in Binv[r]]
                for i in range(m):
                    if i != r and d[i] != 0:
                        Binv[i] = [Binv[i][k] - d[i] * prow[k] for k in range(m)]
                Binv[r] = prow
                basis[r] = j
                break
    # artificials left in the basis sit on redundant rows at level zero; they
    # are kept but barred from re-entering
    ph2 = _Simplex(m, lambda j: cols[j] if j < npool else None, npool, max_pivots)
    ph2.pivots = ph1.pivots
    status, basis, Binv, xB = ph2.run(basis, Binv, xB,
                                      lambda j: costs[j] if j < npool else Fraction(0))
    if status == "unbounded":
        return HaarSolution(PLUS_INF, Multiplier(), [pool[j] for j in basis if j < npool],
                            HaarStatus.UNBOUNDED, pivots=ph2.pivots)

    lam = {pool[basis[i]]: xB[i] for i in range(m) if basis[i] < npool and xB[i] != 0}
    value = _frac(L.c0) + sum(costs[pool.index(t)] * w for t, w in lam.items())
    mult = Multiplier({t: float(w) for t, w in lam.items()})
    res = np.array(L.c, dtype=float)
    for t, w in mult.items():
        res += w * np.array(L.row(t)[0])
    sol = HaarSolution(float(value), mult, [pool[j] for j in basis if j < npool],
                       HaarStatus.OPTIMAL, pivots=ph2.pivots,
                       residual=float(np.max(np.abs(res))) if res.size else 0.0,
                       lam_exact=lam)
    if probe and not L.is_finite and (L.stop is None or L.stop > max(pool)):
        # a degenerate basis can price in columns beyond the pool without
        # any gain, so re-solve with a few far indices and compare values
        last = max(pool)
        probes = [last + 1, 2 * last, 10 * last, 1000 * last]
        if L.stop is not None:
            probes = [t for t in probes if t <= L.stop]
        wider = haar_dual(L, pool + [t for t in probes if t not in pool], max_pivots, probe=False)
        if wider.status is not HaarStatus.OPTIMAL or wider.value > sol.value:
            sol.exact = False
            warnings.warn(f"indices beyond {last} raise the Haar value to {wider.value}",
                          PoolExhaustedInexact)
    return sol
