"""Derivative-free minimisation of extended-real convex functions.

``minimize`` runs a coarse grid, then a direct search from the best grid
points, then re-runs on growing boxes to tell attained minima from
unattained infima and from (suspected) unboundedness.  Oracles are
*batch* callables: an ``(m, n)`` array of points in, ``m`` extended reals
out, with ``+inf`` marking points outside the domain.  Wrap a pointwise
function with :func:`pointwise`.

The poll directions are the coordinate directions plus Householder
rotations of them driven by a Halton sequence, so over many polls the
directions become dense.  Fixed-direction compass search stalls on the
kinks of max-type functions and on slanted domain boundaries.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
import math

import numpy as np

from .extreal import MINUS_INF, PLUS_INF

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19)


class Status(Enum):
    ATTAINED = "Attained"
    UNBOUNDED = "UnboundedBelowSuspected"
    INFEASIBLE = "Infeasible"
    TOLERANCE = "ToleranceReached"


class AllMinusInf(ArithmeticError):
    pass


@dataclass(frozen=True)
class MinConfig:
    box: tuple
    coarse_grid: int = 33
    refine_rounds: int = 40
    shrink: float = 0.5
    box_growth_rounds: int = 6
    growth_factor: float = 4.0
    unbounded_drop_threshold: float = 1e3
    tol: float = 1e-8
    starts: int = 5
    rotations: int = 3
    max_grid_points: int = 20000

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        object.__setattr__(self, "box", box)
        if not box or any(not lo < hi for lo, hi in box):
            raise ValueError("box must be a non-empty list of intervals lo < hi")
        if min(self.coarse_grid, self.refine_rounds, self.starts) < 1 or self.box_growth_rounds < 0:
            raise ValueError("counts must be >= 1")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not self.growth_factor > 1:
            raise ValueError("growth_factor must be > 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")

    @property
    def n(self):
        return len(self.box)

    def fixed(self):
        """Same settings without box growth: the minimum over ``box`` itself."""
        return replace(self, box_growth_rounds=0)

    def with_box(self, box):
        return replace(self, box=tuple(box))


@dataclass
class MinResult:
    value: float
    witness: np.ndarray = None
    status: Status = Status.ATTAINED
    evaluations: int = 0
    history: list = field(default_factory=list)

    @property
    def finite(self):
        return math.isfinite(self.value)


def pointwise(fn):
    """Lift ``fn(x) -> float`` to a batch oracle."""

    def oracle(X):
        return np.array([float(fn(x)) for x in np.atleast_2d(X)], dtype=float)

    return oracle


def _radical_inverse(i, base):
    inv, f = 0.0, 1.0 / base
    while i > 0:
        i, d = divmod(i, base)
        inv += d * f
        f /= base
    return inv


@lru_cache(maxsize=4096)
def _directions(n, it, rotations):
    eye = np.eye(n)
    dirs = [eye, -eye]
    if n > 1:
        for r in range(rotations):
            idx = it * rotations + r + 1
            v = np.array([_radical_inverse(idx, _PRIMES[j]) for j in range(n)]) * 2 - 1
            nv = v @ v
            if nv < 1e-12:
                continue
            H = eye - 2.0 * np.outer(v, v) / nv
            dirs += [H, -H]
    D = np.vstack(dirs)
    D.flags.writeable = False
    return D


def _grid_size(n, cfg):
    k = min(cfg.coarse_grid, int(math.floor(cfg.max_grid_points ** (1.0 / n) + 1e-9)))
    k = max(k, 3)
    return k if k % 2 else k - 1


def _grid(lo, hi, k):
    axes = [np.linspace(a, b, k) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


class _Search:
    """Holds the oracle, evaluation count and best point seen so far."""

    def __init__(self, oracle, n):
        self.oracle = oracle
        self.n = n
        self.evaluations = 0
        self.best_value = PLUS_INF
        self.best_x = None
        self.saw_minus_inf = False

    def __call__(self, X):
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        v = np.asarray(self.oracle(X), dtype=float).reshape(-1)
        if v.shape[0] != X.shape[0]:
            raise ValueError("oracle returned the wrong number of values")
        if np.isnan(v).any():
            raise ValueError("oracle produced NaN")
        self.evaluations += X.shape[0]
        if v.size:
            j = int(np.argmin(v))
            if v[j] == MINUS_INF:
                self.saw_minus_inf = True
            if v[j] < self.best_value:
                self.best_value = float(v[j])
                self.best_x = X[j].copy()
        return v


def _pick_starts(P, V, k):
    finite = np.flatnonzero(np.isfinite(V))
    if finite.size == 0:
        return P[:0]
    order = finite[np.argsort(V[finite], kind="stable")]
    return P[order[:k]]


def _project_to_domain(search, P, Z, rounds=4, k=16):
    """Last finite point on each segment Z[i] -> P[i] (Z feasible, P not).

    The finite part of a segment is an interval starting at Z, so each round
    samples ``k`` points of the current bracket in one batch; ``rounds``
    rounds resolve the crossing to k**-rounds of the segment.
    """
    m = P.shape[0]
    a = np.zeros(m)
    w = 1.0
    grid = np.arange(1, k + 1) / k
    for _ in range(rounds):
        T = a[:, None] + w * grid[None, :]
        Q = Z[:, None, :] + T[:, :, None] * (P - Z)[:, None, :]
        V = search(Q.reshape(-1, P.shape[1])).reshape(m, k)
        ok = np.isfinite(V)
        # number of leading finite samples (the finite set is an interval)
        lead = np.where(ok.all(axis=1), k, np.argmin(ok, axis=1))
        a = a + w * lead / k
        w /= k
    Q = Z + a[:, None] * (P - Z)
    return Q, search(Q)


def _refine(search, X, lo, hi, spacing, cfg, anchor=None):
    """Direct search from each row of X, clipped to [lo, hi].

    Poll points that fall outside the domain are pulled back radially onto
    it (from a point nudged from the iterate toward ``anchor``, an interior
    point of the domain), which lets iterates slide along slanted domain
    boundaries.
    """
    if X.shape[0] == 0:
        return
    n = search.n
    F = search(X)
    keep = np.isfinite(F)
    X, F = X[keep].copy(), F[keep].copy()
    if X.shape[0] == 0:
        return
    step = np.ones(X.shape[0])
    min_step = cfg.shrink ** cfg.refine_rounds
    max_step = 16.0
    max_iter = 40 * cfg.refine_rounds
    # running average of successful moves (in spacing units); along a kinked
    # valley the zigzag moves average out to the valley direction
    memo = np.zeros_like(X)
    for it in range(max_iter):
        active = np.flatnonzero((step > min_step) & np.isfinite(F))
        if active.size == 0:
            break
        D = _directions(n, it, cfg.rotations)
        nd = D.shape[0]
        m = memo[active]
        nm = np.sqrt(np.einsum("ij,ij->i", m, m))[:, None]
        u = m / np.where(nm > 0, nm, 1.0)
        Dx = np.empty((active.size, nd + 2, n))
        Dx[:, :nd] = D
        Dx[:, nd] = u
        Dx[:, nd + 1] = 2.0 * u
        P = X[active, None, :] + (step[active, None, None] * spacing) * Dx
        P = np.clip(P, lo, hi)
        V = search(P.reshape(-1, n)).reshape(active.size, Dx.shape[1])
        j = np.argmin(V, axis=1)
        cand = V[np.arange(active.size), j]
        better = cand < F[active]
        if anchor is not None and not better.all():
            stuck = np.flatnonzero(~better)
            rows, cols = np.nonzero(np.isposinf(V[stuck]))
            if rows.size:
                r_act = active[stuck[rows]]
                Pi = P[stuck[rows], cols]
                nudge = np.minimum(1.0, 4.0 * step[r_act] * np.linalg.norm(spacing)
                                   / np.maximum(np.linalg.norm(anchor - X[r_act], axis=1), 1e-300))
                Z = X[r_act] + nudge[:, None] * (anchor - X[r_act])
                Q, VQ = _project_to_domain(search, Pi, Z)
                for k in np.argsort(VQ, kind="stable"):
                    i = stuck[rows[k]]
                    if VQ[k] < cand[i]:
                        cand[i] = VQ[k]
                        P[i, cols[k]] = Q[k]
                        j[i] = cols[k]
                better = cand < F[active]
        moved = active[better]
        dx = (P[better, j[better]] - X[moved]) / spacing
        dn = np.sqrt(np.einsum("ij,ij->i", dx, dx))[:, None]
        memo[moved] = 0.5 * memo[moved] + dx / np.maximum(dn, 1e-300)
        X[moved] = P[better, j[better]]
        F[moved] = cand[better]
        step[moved] = np.minimum(step[moved] * 2.0, max_step)
        step[active[~better]] *= cfg.shrink
        if search.saw_minus_inf:
            break


def _run_box(search, lo, hi, cfg, extra_starts, force_refine):
    k = _grid_size(search.n, cfg)
    P = _grid(lo, hi, k)
    before = search.best_value
    V = search(P)
    if search.saw_minus_inf:
        return
    if not force_refine and not search.best_value < before:
        return
    starts = _pick_starts(P, V, cfg.starts)
    if extra_starts is not None and len(extra_starts):
        starts = np.vstack([starts, np.clip(extra_starts, lo, hi)])
    spacing = (hi - lo) / (k - 1)
    finite = np.isfinite(V)
    anchor = P[finite].mean(axis=0) if finite.any() and not finite.all() else None
    if not finite.any() and extra_starts is not None and len(extra_starts):
        # the grid missed a thin domain; warm starts are the only interior points
        anchor = np.clip(extra_starts, lo, hi)[0]
    _refine(search, starts, lo, hi, spacing, cfg, anchor)


def _on_wall(x, lo, hi, rel=1e-6):
    width = hi - lo
    return (np.abs(x - lo) <= rel * width) | (np.abs(x - hi) <= rel * width)


def _diverging(history, cfg):
    if len(history) < 3:
        return False
    h = np.array(history)
    drops = h[:-1] - h[1:]
    last = drops[-2:]
    noise = 1e-12 * (1.0 + abs(h[-1]))
    # still dropping by more than the threshold at the end of the growth phase
    if len(drops) >= 2 and (last > cfg.unbounded_drop_threshold).all():
        return True
    # linear divergence: drops scale with the box size
    if len(drops) >= 3:
        d = drops[-3:]
        ratio = cfg.growth_factor / 2.0
        if (d > noise).all() and d[1] >= ratio * d[0] and d[2] >= ratio * d[1]:
            return True
    return False


def minimize(oracle, cfg, seeds=None):
    """Minimise a batch oracle over R^n starting from ``cfg.box``.

    ``seeds`` are extra start points (e.g. warm starts); they are evaluated
    and refined like grid points, so the result is never worse than the
    best seed.
    """
    lo0 = np.array([b[0] for b in cfg.box])
    hi0 = np.array([b[1] for b in cfg.box])
    n = lo0.size
    search = _Search(oracle, n)
    seeds = None if seeds is None else np.atleast_2d(np.asarray(seeds, dtype=float))
    if seeds is not None and seeds.size:
        lo0 = np.minimum(lo0, seeds.min(axis=0))
        hi0 = np.maximum(hi0, seeds.max(axis=0))
        search(seeds)
    center = (lo0 + hi0) / 2
    half = (hi0 - lo0) / 2

    _run_box(search, lo0, hi0, cfg, seeds, force_refine=True)
    history = [search.best_value]
    lo, hi = lo0, hi0
    plo, phi = lo0, hi0
    for g in range(1, cfg.box_growth_rounds + 1):
        if search.saw_minus_inf:
            break
        scale = cfg.growth_factor ** g
        glo, ghi = center - half * scale, center + half * scale
        prev = search.best_x[None, :] if search.best_x is not None else None
        # an incumbent pinned to the last box's wall means the wall was binding,
        # so refine from it even when the coarse grid brings no gain
        pinned = prev is not None and bool(_on_wall(prev[0], plo, phi).any())
        _run_box(search, glo, ghi, cfg, prev, force_refine=pinned)
        plo, phi = glo, ghi
        if search.best_value < history[-1]:
            lo, hi = glo, ghi  # box of the last improving round
        history.append(search.best_value)

    res = MinResult(search.best_value, search.best_x, Status.ATTAINED, search.evaluations, history)
    if search.saw_minus_inf:
        res.value, res.status = MINUS_INF, Status.UNBOUNDED
    elif search.best_x is None or not math.isfinite(search.best_value):
        res.value, res.witness, res.status = PLUS_INF, None, Status.INFEASIBLE
    elif cfg.box_growth_rounds and _diverging(history, cfg):
        res.value, res.status = MINUS_INF, Status.UNBOUNDED
    elif cfg.box_growth_rounds and history[0] > history[-1]:
        # the infimum kept moving out with the box: an attained minimum would
        # have been found strictly inside some box
        if _on_wall(res.witness, lo, hi).any() or history[-2] - history[-1] > cfg.tol * (1.0 + abs(history[-1])):
            res.status = Status.TOLERANCE
    return res


# -- outer one-dimensional concave maximisation -----------------------------

INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class LineConfig:
    s_max: float = 1.0
    s_cap: float = 2.0 ** 16
    samples: int = 17
    tol: float = 1e-10
    max_iter: int = 200


def maximize_concave_1d(oracle, cfg=None):
    """Maximise a concave ``oracle(s)`` over s >= 0.

    -inf values are legal and simply lose every comparison.  The upper end
    of the search interval doubles (up to ``s_cap``) while the best sample
    sits on it.  Returns ``(s_star, value, attained)``.
    """
    cfg = cfg or LineConfig()
    cache = {}

    def f(s):
        s = float(s)
        if s not in cache:
            v = float(oracle(s))
            if math.isnan(v):
                raise ValueError("oracle produced NaN")
            cache[s] = v
        return cache[s]

    def best():
        # largest value; ties go to the smallest s
        return min(cache.items(), key=lambda kv: (-kv[1], kv[0]))

    s_max = cfg.s_max
    while True:
        S = np.linspace(0.0, s_max, cfg.samples)
        V = np.array([f(s) for s in S])
        if not np.isfinite(V).any() and np.all(V == MINUS_INF):
            if s_max >= cfg.s_cap:
                raise AllMinusInf("dual function is -inf on every sampled point")
            s_max *= 2
            continue
        i = int(np.argmax(V))
        if V[i] == PLUS_INF:
            return float(S[i]), PLUS_INF, True
        if i == len(S) - 1 and s_max < cfg.s_cap:
            s_max *= 2
            continue
        break

    a = S[max(i - 1, 0)]
    b = S[min(i + 1, len(S) - 1)]
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(cfg.max_iter):
        if b - a <= cfg.tol * (1.0 + abs(a) + abs(b)):
            break
        if fc > fd or (fc == fd and best()[0] <= c):
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)

    s_star, value = best()
    attained = math.isfinite(value) and not (s_star >= cfg.s_cap * (1 - 1e-12) and i == len(S) - 1)
    return s_star, value, attained
