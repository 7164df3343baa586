"""Slater certificates and the audits of the duality relations."""
from dataclasses import dataclass, field
import itertools
import math

import numpy as np

from ..extreal import MINUS_INF, fmt
from ..minimize import minimize
from ..model import sup_batch
from .lagrangian import Multiplier, default_config, lagrangian_batch
from .solvers import (
    DualConfig,
    Witnesses,
    pooled_value,
    solve_D,
    solve_D0,
    solve_D1,
    solve_primal,
    sup_lagrangian_batch,
)
from .values import limiting_value

CHAIN_SLACK = 1e-6
SOLVER_TOL = 1e-3


class ChainViolation(ArithmeticError):
    def __init__(self, left, right, a, b):
        super().__init__(f"{left} = {a!r} exceeds {right} = {b!r}")
        self.pair = (left, right)
        self.values = (a, b)


class NoSlaterCertificate(ValueError):
    pass


class StrongDualityViolation(ArithmeticError):
    pass


class MinimaxGap(ArithmeticError):
    pass


# -- strong Slater -------------------------------------------------------------

@dataclass(frozen=True)
class SlaterCertificate:
    a: tuple
    alpha: float
    h_value: float
    exact: bool = True

    def to_dict(self):
        return {"found": True, "a": list(self.a), "alpha": self.alpha, "exact": self.exact}


def make_certificate(p, a, alpha, N=None):
    """Build a certificate after checking f(a) < +inf and h(a) <= -alpha."""
    a = np.asarray(a, dtype=float).ravel()
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    h, exact = sup_batch(p, a[None, :], N)
    f = p.objective.batch(a[None, :])[0]
    if not math.isfinite(f) or not h[0] <= -alpha:
        raise ValueError(f"not a strong Slater point: f(a) = {f}, h(a) = {h[0]}, alpha = {alpha}")
    return SlaterCertificate(tuple(float(v) for v in a), float(alpha), float(h[0]), exact)


def strong_slater(p, cfg=None, N=None):
    """Search dom f for a point with h <= -alpha < 0; None when not found.

    h is minimised over the search box only (h is often unbounded below,
    and any point with negative h will do).
    """
    cfg = (cfg or default_config(p)).fixed()

    def oracle(X):
        f = p.objective.batch(X)
        h, _ = sup_batch(p, X, N)
        return np.where(np.isfinite(f), h, np.inf)

    res = minimize(oracle, cfg)
    if res.witness is None or not res.value < 0:
        return None
    alpha = -res.value / 2 if math.isfinite(res.value) else 1.0
    try:
        return make_certificate(p, res.witness, alpha, N)
    except ValueError:
        return None


# -- the weak-duality chain ----------------------------------------------------

CHAIN = ("d0", "d", "d1", "primal")
_NAMES = {"d0": "sup(D0)", "d": "sup(D)", "d1": "sup(D1)", "primal": "inf(P)"}


def _le(a, b, slack):
    if a == b:
        return True
    if math.isinf(a) or math.isinf(b):
        return a < b
    return a <= b + slack * (1 + abs(a) + abs(b))


def _close(a, b, tol):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


@dataclass
class AuditReport:
    problem: str
    reports: dict
    chain_ok: bool
    violation: tuple = None
    limit: object = None
    slater: object = None
    karney_gap: bool = False
    timings: dict = field(default_factory=dict)

    def values(self):
        return {k: self.reports[k].value for k in CHAIN}

    def chain_line(self, tol=SOLVER_TOL):
        """e.g. '-1 = sup(D0) = sup(D) < sup(D1) = 0 = inf(P)'.

        Values equal within ``tol`` share a group.  Each group is written
        value first, except that a pair after the first group reads
        'name = value = name'.
        """
        vals = [self.reports[k].value for k in CHAIN]
        groups = [[0]]
        for i in range(1, len(vals)):
            if _close(vals[i - 1], vals[i], tol):
                groups[-1].append(i)
            else:
                groups.append([i])
        out = ""
        for gi, g in enumerate(groups):
            names = [_NAMES[CHAIN[i]] for i in g]
            v = fmt(vals[g[0]], 4)
            if gi > 0 and len(names) == 2:
                text = f"{names[0]} = {v} = {names[1]}"
            else:
                text = " = ".join([v] + names)
            if gi:
                out += " < " if vals[groups[gi - 1][-1]] < vals[g[0]] else " > "
            out += text
        return out


def _check_chain(reports, slack):
    for left, right in zip(CHAIN, CHAIN[1:]):
        a, b = reports[left].value, reports[right].value
        if not _le(a, b, slack):
            return False, (left, right, a, b)
    return True, None


def compute_chain(p, cfg=None, N=None, dcfg=None, witnesses=None):
    """inf(P), sup(D0), sup(D), sup(D1) with a shared witness pool."""
    cfg = cfg or default_config(p)
    dcfg = dcfg or DualConfig()
    wit = witnesses if witnesses is not None else Witnesses()
    P = solve_primal(p, cfg, N, witnesses=wit)
    D0 = solve_D0(p, cfg, N, dcfg, wit, ceiling=P.value)
    if p.family.real_valued:
        # M is the whole space, so L and L0 coincide
        D = _relabel(D0, "D")
    else:
        D = solve_D(p, cfg, N, dcfg, wit, extra_multipliers=[D0.multiplier], ceiling=P.value)
    s_extra = [r.multiplier.total() for r in (D0, D) if r.multiplier is not None]
    D1 = solve_D1(p, cfg, N, dcfg, wit, extra_s=s_extra)
    _repool(p, N, wit, P, D0, D, D1)
    return {"primal": P, "d0": D0, "d": D, "d1": D1}


def _relabel(rep, which):
    from dataclasses import replace

    return replace(rep, which=which, diagnostics=dict(rep.diagnostics, sharedWith="D0"))


def _repool(p, N, wit, P, D0, D, D1):
    """Re-evaluate every estimate over the final witness pool."""
    from .solvers import primal_oracle

    P.value = pooled_value(primal_oracle(p, N), wit, P.value)
    if D0.diagnostics.get("method") != "haar":
        D0.value = pooled_value(lambda X: lagrangian_batch(p, D0.multiplier, X, "AllX", N),
                                wit, D0.value)
    if D.diagnostics.get("method") != "haar":
        cands = [D.multiplier] + ([D0.multiplier] if D0.multiplier is not None else [])
        vals = []
        for lam in cands:
            if lam != D.multiplier and len(wit) == 0:
                continue
            vals.append(pooled_value(lambda X, lam=lam: lagrangian_batch(p, lam, X, "M", N), wit,
                                     D.value if lam == D.multiplier else math.inf))
        j = int(np.argmax(vals))
        D.value, D.multiplier = vals[j], cands[j]
        if D.diagnostics.get("sharedWith") == "D0":
            D0.value = min(D0.value, D.value)
    s_cands = [D1.s_star] + [r.multiplier.total() for r in (D0, D) if r.multiplier is not None]
    best = None
    for s in dict.fromkeys(s_cands):
        if s != D1.s_star and len(wit) == 0:
            continue
        start = D1.value if s == D1.s_star else math.inf
        v = pooled_value(lambda X, s=s: sup_lagrangian_batch(p, s, X, N), wit, start)
        if best is None or v > best[1]:
            best = (s, v)
    D1.s_star, D1.value = best


def weak_duality_audit(p, cfg=None, N=None, dcfg=None, slack=CHAIN_SLACK, raise_on_violation=True,
                       witnesses=None):
    """Compute the four values and check sup(D0) <= sup(D) <= sup(D1) <= inf(P)."""
    reports = compute_chain(p, cfg, N, dcfg, witnesses)
    ok, bad = _check_chain(reports, slack)
    if not ok and raise_on_violation:
        raise ChainViolation(_NAMES[bad[0]], _NAMES[bad[1]], bad[2], bad[3])
    return AuditReport(p.name, reports, ok, bad)


def karney_gap(d_value, limit_value, tol=SOLVER_TOL):
    """True when sup(D) falls strictly below the limiting value."""
    if limit_value == MINUS_INF:
        return False
    if math.isinf(d_value) or math.isinf(limit_value):
        return d_value < limit_value
    return limit_value - d_value > tol


# -- strong duality and the finite minimax ---------------------------------------

@dataclass
class StrongDualityVerdict:
    holds: bool
    primal: float
    d1: float
    limit: float
    s_star: float
    attained: bool
    certificate: SlaterCertificate
    sweep: object = field(default=None, repr=False)


def strong_duality_check(p, cfg=None, N=None, dcfg=None, certificate=None, tol=SOLVER_TOL,
                         schedule=None):
    """inf(P) = max(D1) = limiting value under a strong Slater certificate."""
    cert = certificate or strong_slater(p, cfg, N)
    if cert is None:
        raise NoSlaterCertificate(f"{p.name}: no strong Slater point found")
    wit = Witnesses()
    P = solve_primal(p, cfg, N, witnesses=wit)
    D1 = solve_D1(p, cfg, N, dcfg, wit)
    D1.value = pooled_value(lambda X: sup_lagrangian_batch(p, D1.s_star, X, N), wit, D1.value)
    sweep = limiting_value(p, schedule, cfg, N, points=wit.points())
    verdict = strong_duality_verdict(P, D1, sweep, cert, tol)
    if not verdict.holds:
        raise StrongDualityViolation(
            f"{p.name}: inf(P) = {P.value}, max(D1) = {D1.value} (attained {D1.attained}), "
            f"limit = {sweep.limit_estimate}")
    return verdict


def strong_duality_verdict(P, D1, sweep, cert, tol=SOLVER_TOL):
    """The verdict of :func:`strong_duality_check` from values already computed."""
    holds = (_close(P.value, D1.value, tol) and _close(P.value, sweep.limit_estimate, tol)
             and D1.attained)
    return StrongDualityVerdict(holds, P.value, D1.value, sweep.limit_estimate, D1.s_star,
                                D1.attained, cert, sweep)


@dataclass
class MinimaxVerdict:
    holds: bool
    primal: float
    s_bar: float
    mu: dict
    value: float
    evaluations: int


def _lattice(k, steps):
    for c in itertools.product(range(steps + 1), repeat=k - 1):
        if sum(c) <= steps:
            yield tuple(c) + (steps - sum(c),)


def finite_minimax_check(p, cfg=None, N=None, dcfg=None, tol=SOLVER_TOL, steps=16,
                         certificate=None):
    """Find mu on the unit simplex (lattice step 1/steps) with
    inf over Delta1 of f + s_bar sum_t mu_t f_t >= inf(P) - tol.

    The lattice is searched coarse to fine: every point of the 1/4 lattice,
    then pairwise 1/steps transfers from the best point while they improve.
    """
    fam = p.family
    if not fam.is_finite:
        raise ValueError("finite_minimax_check needs a finite constraint family")
    labels = fam.labels
    if len(labels) > 4:
        raise ValueError("lattice search is limited to |T| <= 4")
    cert = certificate or strong_slater(p, cfg, N)
    if cert is None:
        raise NoSlaterCertificate(f"{p.name}: no Slater point found")
    cfg = cfg or default_config(p)
    wit = Witnesses()
    P = solve_primal(p, cfg, N, witnesses=wit)
    D1 = solve_D1(p, cfg, N, dcfg, wit)
    s_bar = D1.s_star
    target = P.value - tol
    cache = {}

    def psi(c):
        if c not in cache:
            lam = Multiplier({t: s_bar * ci / steps for t, ci in zip(labels, c)})
            oracle = lambda X: np.where(np.isfinite(sup_batch(p, X, N)[0]),
                                        lagrangian_batch(p, lam, X, "AllX", N), np.inf)
            cache[c] = minimize(oracle, cfg).value
        return cache[c]

    k = len(labels)
    coarse = 4 if steps % 4 == 0 else steps
    best = None
    for c in _lattice(k, coarse):
        c = tuple(ci * (steps // coarse) for ci in c)
        v = psi(c)
        if best is None or v > best[1]:
            best = (c, v)
        if v >= target:
            break
    while best[1] < target:
        c0, improved = best[0], False
        for i, j in itertools.permutations(range(k), 2):
            if c0[i] == 0:
                continue
            c = list(c0)
            c[i] -= 1
            c[j] += 1
            c = tuple(c)
            v = psi(c)
            if v > best[1]:
                best, improved = (c, v), True
        if not improved:
            break
    c, v = best
    mu = {t: ci / steps for t, ci in zip(labels, c) if ci}
    verdict = MinimaxVerdict(v >= target, P.value, s_bar, mu, v, len(cache))
    if not verdict.holds:
        raise MinimaxGap(f"{p.name}: best lattice value {v} < inf(P) - tol = {target}")
    return verdict


__all__ = [
    "CHAIN_SLACK",
    "SOLVER_TOL",
    "ChainViolation",
    "NoSlaterCertificate",
    "StrongDualityViolation",
    "MinimaxGap",
    "SlaterCertificate",
    "make_certificate",
    "strong_slater",
    "AuditReport",
    "compute_chain",
    "weak_duality_audit",
    "karney_gap",
    "StrongDualityVerdict",
    "strong_duality_check",
    "strong_duality_verdict",
    "MinimaxVerdict",
    "finite_minimax_check",
]
