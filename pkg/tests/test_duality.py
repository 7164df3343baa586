import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ciplab import corpus
from ciplab.duality import (
    MinimaxGap,
    Multiplier,
    NoSlaterCertificate,
    SlaterCertificate,
    Witnesses,
    dual_function,
    finite_minimax_check,
    karney_gap,
    lagrangian,
    lagrangian_batch,
    limiting_value,
    lsc_hull_v,
    make_certificate,
    solve_D,
    solve_D0,
    solve_D1,
    solve_primal,
    strong_duality_check,
    strong_slater,
    sup_dual_function,
    value_v,
    value_v1,
    weak_duality_audit,
)
from ciplab.duality.values import geometric_schedule
from ciplab.extreal import MINUS_INF, PLUS_INF
from ciplab.minimize import Status
from ciplab.model import Affine, Const, Coord, SetTag, SquareOf, sup_batch

from conftest import finite_problem
from oracles import example2_h, example2_v1


@pytest.fixture(scope="module")
def quad_with_cut():
    # inf (x1 - 2)^2 s.t. x1 - 1 <= 0: minimiser 1, multiplier 2
    return finite_problem(SquareOf(Affine((1.0,), -2.0)), Affine((1.0,), -1.0), name="quad-cut")


@pytest.fixture(scope="module")
def quad_inactive():
    # f = x^2, f1 = x - 1: the unconstrained minimiser is feasible
    return finite_problem(SquareOf(Coord(1)), Affine((1.0,), -1.0), name="quad-inactive")


@pytest.fixture(scope="module")
def infeasible():
    return finite_problem(SquareOf(Coord(1)), Const(1.0), dim=1, name="infeasible")


# -- multipliers and Lagrangians -------------------------------------------------

def test_multiplier_drops_zero_weights():
    assert Multiplier({"t1": 0.0}) == Multiplier()
    assert Multiplier({"t1": 0.0, "t2": 1.5}).support == ["t2"]
    assert len(Multiplier({3: 1.0}).with_weight(3, 0.0)) == 0
    for bad in (-1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            Multiplier({"t1": bad})


def test_multiplier_dict_round_trip():
    lam = Multiplier({2: 1.0, 7: 0.25})
    assert Multiplier.from_dict(lam.to_dict(), parametric=True) == lam


def test_lagrangian_examples(ex1):
    p, _ = ex1
    assert lagrangian(p, Multiplier(), (0, -1), SetTag.ALL_X) == pytest.approx(math.exp(-1))
    assert lagrangian(p, Multiplier(), (0, -1), SetTag.M) == PLUS_INF
    assert lagrangian(p, Multiplier({"t1": 2}), (1, 0), SetTag.ALL_X) == 3.0
    with pytest.raises(ValueError):
        lagrangian(p, Multiplier(), (0, 0), SetTag.E)


def test_lagrangian_batch_agrees(ex1, ex2):
    rng = np.random.default_rng(1)
    X = rng.uniform(-3, 3, (30, 2))
    for p, lam in ((ex1[0], Multiplier({"t1": 0.7})), (ex2[0], Multiplier({1: 0.5, 2: 1.0, 9: 2.0}))):
        for scope in (SetTag.ALL_X, SetTag.M):
            np.testing.assert_allclose(lagrangian_batch(p, lam, X, scope),
                                       [lagrangian(p, lam, x, scope) for x in X])


def test_dual_function_examples(ex1):
    p, _ = ex1
    r = dual_function(p, Multiplier(), SetTag.M)
    assert r.value == pytest.approx(1.0, abs=1e-9) and r.status is Status.ATTAINED
    r = dual_function(p, Multiplier({"t1": 0.5}), SetTag.M)
    assert r.value == MINUS_INF
    assert lagrangian(p, Multiplier({"t1": 0.5}), (-1e7, 0), SetTag.M) < -1e6
    r = dual_function(p, Multiplier(), SetTag.ALL_X)
    assert r.value == pytest.approx(0.0, abs=1e-3)


# -- primal ------------------------------------------------------------------------

def test_primal_examples(ex1, ex2, infeasible):
    r = solve_primal(ex1[0])
    assert r.value == pytest.approx(1.0, abs=1e-9) and r.attained
    assert r.witness[1] == pytest.approx(0.0, abs=1e-6) and r.witness[0] <= 0
    r = solve_primal(ex2[0])
    assert r.value == pytest.approx(0.0, abs=1e-9) and r.attained and r.exact
    r = solve_primal(infeasible)
    assert r.value == PLUS_INF and r.status == "Infeasible"


def test_primal_thin_feasible_set():
    # finite_qp(0) has a narrow feasible wedge; phase one has to find it
    p, truth = corpus.finite_qp(0)
    assert solve_primal(p).value == pytest.approx(truth.primal, abs=1e-6)


def test_primal_truncated(ex2_truncated):
    r = solve_primal(ex2_truncated[0], N=100)
    assert r.value <= -1 + 1e-3 and not r.exact


# -- Lagrangian duals ---------------------------------------------------------------

def test_D0_example2_by_haar(ex2):
    r = solve_D0(ex2[0])
    assert r.value == -1.0 and r.attained
    assert r.multiplier == Multiplier({2: 1.0})
    assert r.diagnostics["method"] == "haar"


def test_D_example1(ex1):
    r = solve_D(ex1[0])
    assert r.value == pytest.approx(1.0, abs=1e-6)
    assert r.multiplier == Multiplier()


def test_D0_example1(ex1):
    assert solve_D0(ex1[0]).value == pytest.approx(0.0, abs=1e-3)


def _brute_force_dual_1d(f, g, lam_grid, x_grid):
    F, G = f(x_grid), g(x_grid)
    return max(float(np.min(F + lam * G)) for lam in lam_grid)


def test_inactive_constraint_duals(quad_inactive):
    want = _brute_force_dual_1d(lambda x: x ** 2, lambda x: x - 1,
                                np.arange(0, 10.005, 1e-2), np.arange(-10, 10.0005, 1e-3))
    assert want == pytest.approx(0.0, abs=1e-12)
    for solve in (solve_D0, solve_D):
        r = solve(quad_inactive)
        assert r.value == pytest.approx(want, abs=1e-6)
        assert r.multiplier.total() <= 1e-3


def test_active_constraint_dual(quad_with_cut):
    want = _brute_force_dual_1d(lambda x: (x - 2) ** 2, lambda x: x - 1,
                                np.arange(0, 10.005, 1e-2), np.arange(-10, 10.0005, 1e-3))
    assert want == pytest.approx(1.0, abs=1e-6)
    r = solve_D(quad_with_cut)
    assert r.value == pytest.approx(1.0, abs=1e-6)
    assert r.multiplier.weight("t1") == pytest.approx(2.0, abs=1e-3)


def test_D0_never_exceeds_ceiling_estimate():
    p, truth = corpus.slater_family(2)
    P = solve_primal(p)
    r = solve_D0(p, ceiling=P.value)
    assert r.value <= P.value + 1e-9
    assert r.value == pytest.approx(truth.d0, abs=1e-6)


# -- sup-dual ---------------------------------------------------------------------

def _grid_sup_lagrangian_example2(s, step=0.01, lim=10.0):
    ax = np.arange(-lim, lim + step / 2, step)
    h = np.vectorize(example2_h)
    best = math.inf
    for x1 in ax:
        best = min(best, float(np.min(ax + s * h(x1, ax))))
    return best


def test_sup_dual_function_example2_at_one(ex2):
    # x2 + h(x) = max(x1 + x2, -1, max(x1/3, 0)) >= 0, with equality at the origin
    want = _grid_sup_lagrangian_example2(1.0, step=0.05)
    assert want == pytest.approx(0.0, abs=1e-12)
    assert sup_dual_function(ex2[0], 1.0).value == pytest.approx(0.0, abs=1e-6)


def test_sup_dual_function_examples(ex1, ex2):
    assert sup_dual_function(ex1[0], 0.0).value == pytest.approx(1.0, abs=1e-9)
    assert sup_dual_function(ex2[0], 0.0).value == MINUS_INF
    with pytest.raises(ValueError):
        sup_dual_function(ex1[0], -1.0)


def test_D1_examples(ex1, ex2):
    r = solve_D1(ex2[0])
    assert r.value == pytest.approx(0.0, abs=1e-3)
    r = solve_D1(ex1[0])
    assert r.value == pytest.approx(1.0, abs=1e-6) and r.attained and r.s_star == 0.0


def test_D1_inactive_constant_constraint():
    p = finite_problem(SquareOf(Coord(1)), Const(-1.0), dim=1)
    r = solve_D1(p)
    assert r.value == pytest.approx(0.0, abs=1e-8) and r.s_star == 0.0 and r.attained


# -- value functions --------------------------------------------------------------

def test_value_v_examples(ex1, ex2, quad_with_cut):
    for p in (ex1[0], ex2[0], quad_with_cut):
        assert value_v(p, {}) == pytest.approx(solve_primal(p).value, abs=1e-9)
    assert value_v(ex2[0], 0.1) == pytest.approx(-0.1, abs=1e-6)
    assert value_v(ex1[0], {"t1": -10.0}) == pytest.approx(1.0, abs=1e-9)


def test_value_v_finite_map_on_parametric(ex2):
    # -x2 - 1 <= -1.5 forces x2 >= 0.5, above the bound x2 >= 0 from the other rows
    assert value_v(ex2[0], {2: -1.5}) == pytest.approx(0.5, abs=1e-6)
    assert value_v(ex2[0], {2: -0.5}) == pytest.approx(0.0, abs=1e-6)


def test_value_v1_examples(ex1, ex2):
    assert value_v1(ex2[0], 0.5) == pytest.approx(example2_v1(0.5), abs=1e-6)
    assert value_v1(ex1[0], 0.25) == pytest.approx(1.0, abs=1e-9)
    # dom h = {x2 >= 0} whatever the level
    assert value_v1(ex1[0], 1e6) == pytest.approx(1.0, abs=1e-9)


def test_limiting_value_examples(ex1, ex2, infeasible):
    sched = geometric_schedule(1.0, 0.5, 8)
    s = limiting_value(ex2[0], sched)
    np.testing.assert_allclose(s.values, [-e for e in sched], atol=1e-6)
    assert s.limit_estimate == pytest.approx(0.0, abs=1e-2) and s.monotone and s.exact
    s = limiting_value(ex1[0], sched)
    np.testing.assert_allclose(s.values, 1.0, atol=1e-9)
    assert s.converged
    s = limiting_value(infeasible, geometric_schedule(0.5, 0.5, 4))
    assert s.values == [PLUS_INF] * 4 and s.limit_estimate == PLUS_INF


def test_schedule_validation(ex1):
    for args in ((0.0, 0.5, 3), (1.0, 1.0, 3), (1.0, 0.5, 0)):
        with pytest.raises(ValueError):
            geometric_schedule(*args)
    with pytest.raises(ValueError):
        limiting_value(ex1[0], [0.1, 0.2])


def test_lsc_hull_examples(ex1, ex2):
    assert lsc_hull_v(ex2[0]) == pytest.approx(-1.0, abs=1e-3)
    assert lsc_hull_v(ex1[0]) == pytest.approx(1.0, abs=1e-9)


def test_lsc_hull_equals_limit_for_finite_family():
    p, _ = corpus.finite_qp(3)
    sweep = limiting_value(p)
    assert lsc_hull_v(p) == pytest.approx(sweep.limit_estimate, abs=1e-3)


def test_lsc_hull_finds_thin_sets():
    # two active rows: at eps ~ 2e-6 the H-feasible set is a sliver the
    # coarse grid misses, so this goes through the phase-one fallback
    p, truth = corpus.finite_qp(0)
    assert lsc_hull_v(p) == pytest.approx(truth.primal, abs=1e-4)


# -- certificates and audits --------------------------------------------------------

def test_slater_example1(ex1):
    cert = strong_slater(ex1[0])
    assert isinstance(cert, SlaterCertificate) and cert.alpha >= 0.5
    assert cert.h_value <= -cert.alpha
    cert = make_certificate(ex1[0], (-1.0, 0.0), 0.5)
    assert cert.h_value == -1.0
    with pytest.raises(ValueError):
        make_certificate(ex1[0], (1.0, 0.0), 0.5)


def test_slater_constant_constraint():
    p = finite_problem(SquareOf(Coord(1)), Const(-5.0), dim=1)
    assert strong_slater(p).alpha >= 2.5


def test_example2_has_a_strict_point(ex2):
    # h(-1, 1) = max(-1, -2, -1) = -1: a uniform margin exists
    assert example2_h(-1.0, 1.0) == -1.0
    cert = strong_slater(ex2[0])
    assert cert is not None
    assert example2_h(*cert.a) <= -cert.alpha < 0


def test_no_slater_point():
    # x1 <= 0 and -x1 <= 0 leave only x1 = 0, so h >= 0 everywhere
    p = finite_problem(SquareOf(Coord(1)), Coord(1), Affine((-1.0,), 0.0), dim=1)
    assert strong_slater(p) is None
    with pytest.raises(NoSlaterCertificate):
        strong_duality_check(p)


def test_audit_examples(ex1, ex2, infeasible):
    a = weak_duality_audit(ex1[0])
    assert a.chain_ok
    np.testing.assert_allclose([a.values()[k] for k in ("d0", "d", "d1", "primal")],
                               [0, 1, 1, 1], atol=1e-3)
    assert a.chain_line() == "0 = sup(D0) < 1 = sup(D) = sup(D1) = inf(P)"
    a = weak_duality_audit(ex2[0])
    assert a.chain_ok
    np.testing.assert_allclose([a.values()[k] for k in ("d0", "d", "d1", "primal")],
                               [-1, -1, 0, 0], atol=1e-3)
    assert a.chain_line() == "-1 = sup(D0) = sup(D) < sup(D1) = 0 = inf(P)"
    a = weak_duality_audit(infeasible)
    assert a.chain_ok and a.values()["primal"] == PLUS_INF


def test_karney_gap_flag():
    assert karney_gap(-1.0, 0.0)
    assert not karney_gap(1.0, 1.0)
    assert not karney_gap(0.0, 0.0005)
    assert karney_gap(MINUS_INF, 0.0)
    assert not karney_gap(MINUS_INF, MINUS_INF)


def test_strong_duality_examples(ex1):
    v = strong_duality_check(ex1[0])
    assert v.holds and v.primal == pytest.approx(1.0, abs=1e-3)
    assert v.d1 == pytest.approx(1.0, abs=1e-3) and v.limit == pytest.approx(1.0, abs=1e-3)
    p, truth = corpus.slater_family(1)
    v = strong_duality_check(p)
    assert v.holds and abs(v.d1 - truth.primal) <= 1e-3


def test_strong_duality_runs_on_example2(ex2):
    # a certificate exists, and indeed inf(P) = max(D1) = limit = 0
    v = strong_duality_check(ex2[0])
    assert v.holds
    assert abs(v.primal) <= 1e-3 and abs(v.d1) <= 1e-3


def test_finite_minimax(quad_with_cut, quad_inactive):
    v = finite_minimax_check(quad_with_cut)
    assert v.holds and v.primal == pytest.approx(1.0, abs=1e-6)
    v = finite_minimax_check(quad_inactive)
    assert v.holds and v.s_bar == pytest.approx(0.0, abs=1e-6)
    p, truth = corpus.finite_qp(7)
    v = finite_minimax_check(p)
    assert v.holds and v.value >= truth.primal - 1e-3


def test_finite_minimax_rejects_parametric(ex2):
    with pytest.raises(ValueError):
        finite_minimax_check(ex2[0])


def test_minimax_gap_on_unreachable_target(quad_with_cut):
    # a negative tolerance asks for more than inf(P), which no mu can give
    with pytest.raises(MinimaxGap):
        finite_minimax_check(quad_with_cut, tol=-0.5)


# -- properties ---------------------------------------------------------------------

points = st.tuples(st.floats(-5, 5), st.floats(-5, 5))
wts = st.floats(0.0, 4.0)


@settings(max_examples=60, deadline=None)
@given(points, wts, st.integers(1, 40), wts)
def test_support_convention(x, w, t, w_extra):
    p, _ = corpus.example2()
    lam = Multiplier({t: w})
    padded = Multiplier({t: w, t + 1000: 0.0})
    assert padded == lam
    assert lagrangian(p, lam, x) == lagrangian(p, padded, x)


@settings(max_examples=60, deadline=None)
@given(points, wts)
def test_scope_ordering(x, w):
    p, _ = corpus.example1()
    lam = Multiplier({"t1": w})
    assert lagrangian(p, lam, x, SetTag.M) >= lagrangian(p, lam, x, SetTag.ALL_X)


@settings(max_examples=8, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_v1_monotone(r, r2):
    lo, hi = sorted((r, r2))
    for name in ("example2", "slater_family:3"):
        p, _ = corpus.get(name)
        assert value_v1(p, lo) >= value_v1(p, hi) - 1e-9


def test_dual_function_concave_on_segment():
    p, truth = corpus.finite_qp(5)
    labels = p.family.labels[:2]
    a = Multiplier({labels[0]: 0.3, labels[1]: 1.7})
    b = Multiplier({labels[0]: 2.1, labels[1]: 0.2})
    ga = dual_function(p, a).value
    gb = dual_function(p, b).value
    for th in (0.25, 0.5, 0.75):
        mid = Multiplier({t: th * a.weight(t) + (1 - th) * b.weight(t) for t in labels})
        assert dual_function(p, mid).value >= th * ga + (1 - th) * gb - 1e-6


def test_witness_pool_keeps_distinct_finite_points():
    w = Witnesses([(0.0, 1.0), (0.0, 1.0), (np.inf, 0.0)])
    w.add(None)
    assert len(w) == 1
    assert w.points().shape == (1, 2)


def test_sup_batch_consistent_with_oracle(ex2):
    X = np.random.default_rng(0).uniform(-4, 4, (50, 2))
    h, exact = sup_batch(ex2[0], X)
    assert exact
    np.testing.assert_allclose(h, [example2_h(*x) for x in X], atol=1e-12)
