import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ciplab.extreal import MINUS_INF
from ciplab.minimize import (
    AllMinusInf,
    LineConfig,
    MinConfig,
    Status,
    maximize_concave_1d,
    minimize,
    pointwise,
)

from conftest import parts_to_expr
from oracles import grid_min, random_convex_2d

BOX = ((-10.0, 10.0), (-10.0, 10.0))

# raw numpy oracles overflow to +inf on the grown boxes, which is the intended value
pytestmark = pytest.mark.filterwarnings("ignore:overflow encountered:RuntimeWarning")


def test_exp_infimum_not_attained():
    res = minimize(lambda X: np.exp(X[:, 1]), MinConfig(BOX))
    assert res.value == pytest.approx(0.0, abs=1e-3)
    assert res.status is Status.TOLERANCE
    assert res.witness[1] < -5


def test_unbounded_on_half_plane():
    # e^{x2} + x1 on x2 >= 0: the D0 inner problem at lambda = 1
    def oracle(X):
        return np.where(X[:, 1] >= 0, np.exp(X[:, 1]) + X[:, 0], np.inf)

    res = minimize(oracle, MinConfig(BOX))
    assert res.value == MINUS_INF
    assert res.status is Status.UNBOUNDED


def test_quadratic_attained():
    res = minimize(lambda X: (X[:, 0] - 1) ** 2 + (X[:, 1] + 2) ** 2, MinConfig(BOX))
    assert res.status is Status.ATTAINED
    assert res.value == pytest.approx(0.0, abs=1e-8)
    np.testing.assert_allclose(res.witness, [1, -2], atol=1e-4)


def test_minus_inf_value_is_unbounded():
    res = minimize(lambda X: np.where(X[:, 0] < -3, -np.inf, X[:, 0]), MinConfig(BOX))
    assert res.value == MINUS_INF and res.status is Status.UNBOUNDED


def test_infeasible():
    res = minimize(lambda X: np.full(X.shape[0], np.inf), MinConfig(BOX))
    assert res.value == math.inf and res.status is Status.INFEASIBLE
    assert res.witness is None


def test_narrow_domain_edge():
    # strip of width 1e-2; the minimum sits on its left edge
    def oracle(X):
        ok = np.abs(X[:, 0] - 0.1234) <= 5e-3
        return np.where(ok, X[:, 1] ** 2 + X[:, 0], np.inf)

    res = minimize(oracle, MinConfig(((-1.0, 1.0), (-1.0, 1.0)), box_growth_rounds=0))
    assert res.status is Status.ATTAINED
    assert res.value == pytest.approx(0.1184, abs=1e-6)


def test_seeds_never_worse():
    f = lambda X: np.abs(X[:, 0] - 7.77) + np.abs(X[:, 1] + 3.3)
    seed = np.array([[7.77, -3.3]])
    res = minimize(f, MinConfig(BOX, coarse_grid=5, refine_rounds=1), seeds=seed)
    assert res.value == 0.0


def test_deterministic():
    f = lambda X: np.abs(X[:, 0]) + (X[:, 1] - 0.3) ** 2 + np.exp(0.1 * (X[:, 0] - X[:, 1]))
    a = minimize(f, MinConfig(BOX))
    b = minimize(f, MinConfig(BOX))
    assert a.value == b.value
    np.testing.assert_array_equal(a.witness, b.witness)
    assert a.evaluations == b.evaluations


def test_pointwise_wrapper():
    res = minimize(pointwise(lambda x: (x[0] - 2) ** 2), MinConfig(((-5.0, 5.0),)))
    assert res.value == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("kw", [dict(box=()), dict(box=((1.0, 0.0),)), dict(box=BOX, shrink=1.0),
                                dict(box=BOX, growth_factor=1.0), dict(box=BOX, tol=0.0),
                                dict(box=BOX, starts=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        MinConfig(**kw)


class Recorder:
    def __init__(self, fn):
        self.fn = fn
        self.best = math.inf

    def __call__(self, X):
        V = self.fn(X)
        self.best = min(self.best, float(np.min(V)))
        return V


@settings(max_examples=25, deadline=None)
@given(st.floats(-8, 8), st.floats(-8, 8), st.floats(0.1, 5), st.sampled_from(["abs", "sq", "max"]))
def test_reported_value_was_evaluated(c1, c2, w, kind):
    if kind == "abs":
        fn = lambda X: w * np.abs(X[:, 0] - c1) + np.abs(X[:, 1] - c2)
    elif kind == "sq":
        fn = lambda X: w * (X[:, 0] - c1) ** 2 + (X[:, 1] - c2) ** 2
    else:
        fn = lambda X: np.maximum(w * (X[:, 0] - c1), X[:, 1] - c2) + 0.1 * (X[:, 0] ** 2 + X[:, 1] ** 2)
    rec = Recorder(fn)
    res = minimize(rec, MinConfig(BOX, box_growth_rounds=1))
    # the returned value is one the oracle produced, and no lower value was seen
    assert res.value == rec.best
    assert fn(res.witness[None, :])[0] == res.value


def test_matches_grid_on_a_few_convex_oracles():
    rng = np.random.default_rng(11)
    for _ in range(3):
        fn, parts = random_convex_2d(rng)
        want, _ = grid_min(fn, step=2e-3)
        got = minimize(parts_to_expr(parts).batch, MinConfig(BOX)).value
        assert got <= want + 1e-9
        assert want - got <= 2e-3 * (1 + abs(want))


# -- one-dimensional concave maximisation ------------------------------------------

def test_line_example_one():
    s, v, attained = maximize_concave_1d(lambda s: 1.0 if s == 0 else MINUS_INF)
    assert (s, v, attained) == (0.0, 1.0, True)


def test_line_quadratic():
    s, v, attained = maximize_concave_1d(lambda s: -(s - 3) ** 2)
    assert s == pytest.approx(3, abs=1e-4)
    assert v == pytest.approx(0, abs=1e-6)
    assert attained


def test_line_boundary():
    s, v, attained = maximize_concave_1d(lambda s: -s)
    assert s == 0.0 and v == 0.0


def test_line_doubles_interval():
    s, v, _ = maximize_concave_1d(lambda s: -(s - 37.5) ** 2)
    assert s == pytest.approx(37.5, abs=1e-3)


def test_line_unattained_at_cap():
    s, v, attained = maximize_concave_1d(lambda s: -math.exp(-s), LineConfig(s_cap=64.0))
    assert s == 64.0 and not attained


def test_line_all_minus_inf():
    with pytest.raises(AllMinusInf):
        maximize_concave_1d(lambda s: MINUS_INF, LineConfig(s_cap=4.0))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 50), st.floats(0.1, 10))
def test_line_finds_vertex(c, k):
    # piecewise-linear concave function with its peak at c
    s, v, _ = maximize_concave_1d(lambda s: -k * abs(s - c))
    assert v >= -k * 1e-6 * (1 + c)
