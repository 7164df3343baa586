"""Built-in instances with ground truth.

``example1`` and ``example2`` are the two classical counterexamples to the
limiting formula for the Lagrangian dual value.  ``slater_family`` and
``finite_qp`` are seeded constructions whose optimum, multipliers and
Slater point are known by design:

* pick a minimiser x*, active affine constraints through x* and
  multipliers lam_t > 0;
* centre a separable convex quadratic so that KKT holds at x*, i.e.
  2 w (x* - c) = -sum_t lam_t a_t;
* then inf(P) = f(x*) and every dual reaches it at lam.

Seeds go through numpy's ``default_rng`` (PCG64 behind a SeedSequence), so
instances are reproducible across platforms.
"""
from dataclasses import dataclass, field
from importlib import resources
import math

import numpy as np

from .extreal import from_token, to_token
from .model import (
    Affine,
    Const,
    Coord,
    DomainRestrict,
    ExpOf,
    FiniteFamily,
    MaxOf,
    ParametricFamily,
    PosScale,
    Problem,
    SquareOf,
    Sum,
    load_problem,
    save_problem,
)

VALUE_KEYS = ("primal", "d0", "d", "d1", "limiting")
REFERENCE = "reference"


class UnknownInstance(KeyError):
    pass


@dataclass
class GroundTruth:
    primal: float
    d0: float
    d: float
    d1: float
    limiting: float
    slater: bool
    provenance: dict = field(default_factory=dict)
    multiplier: dict = None
    slater_point: tuple = None
    alpha: float = None
    minimizer: tuple = None

    def values(self):
        return {k: getattr(self, k) for k in VALUE_KEYS}

    def chain_ok(self, slack=0.0):
        v = [self.d0, self.d, self.d1, self.primal]
        return all(a <= b + slack * (1 + abs(a) + abs(b)) for a, b in zip(v, v[1:]))

    def to_dict(self):
        out = {k: to_token(v) for k, v in self.values().items()}
        out.update(slater=self.slater, provenance=dict(self.provenance))
        if self.multiplier is not None:
            out["multiplier"] = {str(k): v for k, v in self.multiplier.items()}
        if self.slater_point is not None:
            out["slaterPoint"] = list(self.slater_point)
            out["alpha"] = self.alpha
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(*(from_token(d[k]) for k in VALUE_KEYS), slater=bool(d["slater"]),
                   provenance=dict(d.get("provenance", {})))


def _rng(seed):
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


def _separable_quadratic(w, c):
    n = len(c)
    terms = []
    for i in range(n):
        e = [0.0] * n
        e[i] = 1.0
        terms.append(PosScale(float(w[i]), SquareOf(Affine(tuple(e), -float(c[i])))))
    return Sum(tuple(terms))


# -- the two counterexamples ---------------------------------------------------

def example1():
    """inf e^{x2} s.t. f1 <= 0 with f1 = x1 on {x2 >= 0}, +inf elsewhere."""
    f = ExpOf(Coord(2))
    f1 = DomainRestrict(Coord(1), (Affine((0.0, -1.0), 0.0),))
    p = Problem("karney-example-1", 2, f, FiniteFamily((("t1", f1),)))
    truth = GroundTruth(primal=1.0, d0=0.0, d=1.0, d1=1.0, limiting=1.0, slater=True,
                        provenance={k: REFERENCE for k in VALUE_KEYS + ("slater",)},
                        multiplier={}, slater_point=(-1.0, 0.0), alpha=0.5,
                        minimizer=(0.0, 0.0))
    return p, truth


def example2_sup_expr():
    """Closed form of sup_t f_t for the second counterexample."""
    return MaxOf((
        Coord(1),
        Affine((0.0, -1.0), -1.0),
        Sum((MaxOf((PosScale(1.0 / 3.0, Coord(1)), Const(0.0))), Affine((0.0, -1.0), 0.0))),
    ))


def example2(with_sup=True):
    """inf x2 s.t. x1 <= 0, -x2 <= 1, x1/t - x2 <= 0 (t >= 3)."""
    fam = ParametricFamily(
        start=1,
        template={"op": "affine", "a": ["1/t", -1], "b": 0},
        special=((1, Affine((1.0, 0.0), 0.0)), (2, Affine((0.0, -1.0), -1.0))),
        sup_expr=example2_sup_expr() if with_sup else None,
    )
    name = "karney-example-2" if with_sup else "karney-example-2-truncated"
    p = Problem(name, 2, Coord(2), fam)
    truth = GroundTruth(primal=0.0, d0=-1.0, d=-1.0, d1=0.0, limiting=0.0, slater=False,
                        provenance={k: REFERENCE for k in VALUE_KEYS + ("slater",)},
                        multiplier={2: 1.0}, minimizer=(0.0, 0.0))
    return p, truth


# -- seeded constructions ------------------------------------------------------

def slater_family(seed):
    """Affine rows a_t = a + d/t (t >= 1) tending to a limit row a.

    With y = x - x*, f_t(x) = a.y + (d.y)/t, so sup_t f_t = a.y + max(d.y, 0).
    Row t1 carries the multiplier; the Slater point x* - tau a/|a| keeps the
    margin tau |a| uniformly in t because d.a >= 0.
    """
    rng = _rng(seed)
    xs = rng.uniform(-1.0, 1.0, 2)
    ang = rng.uniform(0.0, 2 * math.pi)
    a = rng.uniform(0.5, 1.5) * np.array([math.cos(ang), math.sin(ang)])
    d = rng.normal(size=2)
    if d @ a < 0:
        d = -d
    d *= rng.uniform(0.5, 2.0) / np.linalg.norm(d)
    t1 = int(rng.integers(2, 7))
    mu = rng.uniform(0.5, 2.0)
    w = rng.uniform(0.5, 2.0, 2)
    tau = rng.uniform(0.5, 1.0)

    g = a + d / t1
    c = xs + mu * g / (2 * w)
    f = _separable_quadratic(w, c)
    ax, dx = float(a @ xs), float(d @ xs)
    a0, a1, d0, d1 = (float(v) for v in (*a, *d))
    template = {"op": "affine",
                "a": [f"{a0!r} + {d0!r}/t", f"{a1!r} + {d1!r}/t"],
                "b": f"{-ax!r} - {dx!r}/t"}
    sup = Sum((Affine(tuple(a), -ax), MaxOf((Affine(tuple(d), -dx), Const(0.0)))))
    fam = ParametricFamily(start=1, template=template, sup_expr=sup)
    p = Problem(f"slater-family-{seed}", 2, f, fam)

    primal = float(np.sum(w * (xs - c) ** 2))
    slater_pt = xs - tau * a / np.linalg.norm(a)
    alpha = float(tau * np.linalg.norm(a))
    how = "derived: KKT at the constructed minimiser"
    truth = GroundTruth(primal, primal, primal, primal, primal, True,
                        provenance={**{k: how for k in VALUE_KEYS},
                                    "slater": "derived: margin tau*|a| at x* - tau*a/|a|"},
                        multiplier={t1: float(mu)}, slater_point=tuple(slater_pt),
                        alpha=alpha, minimizer=tuple(xs))
    return p, truth


def finite_qp(seed):
    """Two to four affine rows, one or two of them active at x*.

    Active multipliers are S*k_t/16 with integers k_t summing to 16, so the
    normalised multiplier lies on the 1/16 lattice of the unit simplex.
    """
    rng = _rng(seed)
    k = 2 + int(rng.integers(0, 3))
    n_active = 1 + int(rng.integers(0, 2))
    xs = rng.uniform(-1.0, 1.0, 2)
    while True:
        A = rng.normal(size=(k, 2))
        A /= np.linalg.norm(A, axis=1, keepdims=True) / rng.uniform(0.5, 1.5, (k, 1))
        if n_active == 1 or abs(np.linalg.det(A[:2])) > 0.3:
            break
    S = rng.uniform(0.5, 3.0)
    if n_active == 1:
        ks = [16]
    else:
        k0 = int(rng.integers(1, 16))
        ks = [k0, 16 - k0]
    lam = np.zeros(k)
    lam[:n_active] = S * np.array(ks) / 16.0
    w = rng.uniform(0.5, 2.0, 2)
    c = xs + (lam @ A) / (2 * w)

    # Slater direction u with a_t.u = 1 on the active rows
    Aa = A[:n_active]
    u = np.linalg.lstsq(Aa, np.ones(n_active), rcond=None)[0]
    tau = min(1.0, 0.5 / np.linalg.norm(u))
    slack = np.zeros(k)
    slack[n_active:] = 0.5 * np.linalg.norm(A[n_active:], axis=1) + rng.uniform(0.25, 1.0, k - n_active)

    items = []
    for t in range(k):
        b = -float(A[t] @ xs) - float(slack[t])
        items.append((f"t{t + 1}", Affine(tuple(A[t]), b)))
    p = Problem(f"finite-qp-{seed}", 2, _separable_quadratic(w, c), FiniteFamily(tuple(items)))

    a_pt = xs - tau * u
    margins = -(A @ (a_pt - xs) - slack)
    primal = float(np.sum(w * (xs - c) ** 2))
    how = "derived: KKT at the constructed minimiser"
    truth = GroundTruth(primal, primal, primal, primal, primal, True,
                        provenance={**{k_: how for k_ in VALUE_KEYS},
                                    "slater": "derived: margins at x* - tau*u"},
                        multiplier={f"t{t + 1}": float(lam[t]) for t in range(n_active)},
                        slater_point=tuple(a_pt), alpha=float(margins.min()),
                        minimizer=tuple(xs))
    return p, truth


# -- registry ------------------------------------------------------------------

_NAMED = {"example1": example1, "example2": example2}
_SEEDED = {"slater_family": slater_family, "finite_qp": finite_qp}
DEFAULT_RUN = ("example1", "example2", "slater_family:1", "finite_qp:7")


def names():
    return list(_NAMED) + [f"{k}:<seed>" for k in _SEEDED]


def get(name):
    """Look up ``example1``, ``example2``, ``slater_family:<seed>`` or ``finite_qp:<seed>``."""
    if name in _NAMED:
        return _NAMED[name]()
    base, _, seed = name.partition(":")
    if base in _SEEDED:
        try:
            return _SEEDED[base](int(seed) if seed else 1)
        except ValueError:
            raise UnknownInstance(name) from None
    raise UnknownInstance(name)


def seeded_instances(count, start=0):
    """``count`` instances alternating between the two seeded families."""
    out = []
    for i in range(count):
        seed = start + i // 2
        out.append(slater_family(seed) if i % 2 == 0 else finite_qp(seed))
    return out


SHIPPED = {
    "example1": lambda: example1()[0],
    "example2": lambda: example2()[0],
    "example2_truncated": lambda: example2(with_sup=False)[0],
    "slater_family_1": lambda: slater_family(1)[0],
    "finite_qp_7": lambda: finite_qp(7)[0],
}


def export_all(directory):
    """Write every shipped instance as ``<name>.cip`` into ``directory``."""
    from pathlib import Path

    out = []
    for name, build in SHIPPED.items():
        path = Path(directory) / f"{name}.cip"
        save_problem(build(), path)
        out.append(path)
    return out


def problem_file(name):
    """Path of a shipped ``.cip`` file, e.g. ``problem_file("example1")``."""
    return resources.files("ciplab") / "problems" / f"{name}.cip"


def load_shipped(name):
    return load_problem(problem_file(name))
