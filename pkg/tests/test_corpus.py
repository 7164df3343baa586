import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ciplab import corpus
from ciplab.corpus import GroundTruth, UnknownInstance
from ciplab.duality import value_v1


def test_example1_truth(ex1):
    _, t = ex1
    assert (t.primal, t.d0, t.d, t.d1, t.limiting) == (1.0, 0.0, 1.0, 1.0, 1.0)
    assert t.slater and t.provenance["primal"] == "reference"


def test_example2_truth(ex2):
    p, t = ex2
    assert t.d0 == -1.0 and t.d1 == 0.0 and t.primal == 0.0
    assert value_v1(p, 0.1) == pytest.approx(-0.1, abs=1e-6)


def test_finite_qp7_by_grid():
    p, t = corpus.finite_qp(7)
    assert t.primal == t.d
    xs = np.array(t.minimizer)
    ax1 = np.arange(xs[0] - 0.5, xs[0] + 0.5 + 5e-4, 1e-3)
    ax2 = np.arange(xs[1] - 0.5, xs[1] + 0.5 + 5e-4, 1e-3)
    X1, X2 = np.meshgrid(ax1, ax2, indexing="ij")
    X = np.stack([X1.ravel(), X2.ravel()], axis=1)
    ok = np.ones(X.shape[0], dtype=bool)
    for _, e in p.family.items:
        ok &= e.batch(X) <= 0
    F = np.where(ok, p.objective.batch(X), np.inf)
    j = int(np.argmin(F))
    # the grid minimum is interior to the window, so by convexity it is global
    assert 0 < j % ax2.size < ax2.size - 1 and 0 < j // ax2.size < ax1.size - 1
    assert t.primal <= F[j] + 1e-12
    assert F[j] - t.primal <= 5e-3


def _grad(e, x, h=1e-6):
    g = np.zeros(x.size)
    for i in range(x.size):
        d = np.zeros(x.size)
        d[i] = h
        g[i] = (e.batch((x + d)[None, :])[0] - e.batch((x - d)[None, :])[0]) / (2 * h)
    return g


@pytest.mark.parametrize("seed", range(6))
def test_finite_qp_kkt(seed):
    p, t = corpus.finite_qp(seed)
    x = np.array(t.minimizer)
    g = _grad(p.objective, x)
    for label, w in t.multiplier.items():
        row = p.constraint(label)
        assert row.batch(x[None, :])[0] == pytest.approx(0.0, abs=1e-12)
        g += w * _grad(row, x)
    np.testing.assert_allclose(g, 0.0, atol=1e-6)
    for label in p.family.labels:
        assert p.constraint(label).batch(x[None, :])[0] <= 1e-12
    lam = np.array([t.multiplier.get(k, 0.0) for k in p.family.labels])
    S = lam.sum()
    assert np.allclose(16 * lam / S, np.round(16 * lam / S))


@pytest.mark.parametrize("seed", range(4))
def test_slater_family_kkt(seed):
    p, t = corpus.slater_family(seed)
    x = np.array(t.minimizer)
    (t1, mu), = t.multiplier.items()
    g = _grad(p.objective, x) + mu * _grad(p.constraint(t1), x)
    np.testing.assert_allclose(g, 0.0, atol=1e-6)
    # sup_t f_t(x*) = 0 and the active row attains it
    assert p.family.sup_expr.batch(x[None, :])[0] == pytest.approx(0.0, abs=1e-12)
    assert p.constraint(t1).batch(x[None, :])[0] == pytest.approx(0.0, abs=1e-12)


def test_slater_family1_margin():
    p, t = corpus.slater_family(1)
    assert t.slater
    a = np.array(t.slater_point)[None, :]
    worst = max(p.constraint(k).batch(a)[0] for k in range(1, 10**4 + 1))
    assert worst <= -t.alpha + 1e-12
    assert p.family.sup_expr.batch(a)[0] <= -t.alpha + 1e-12


def test_finite_qp_slater_point():
    for seed in range(5):
        p, t = corpus.finite_qp(seed)
        a = np.array(t.slater_point)[None, :]
        assert t.alpha > 0
        assert max(e.batch(a)[0] for _, e in p.family.items) == pytest.approx(-t.alpha, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["slater_family", "finite_qp"]))
def test_truth_chain_holds(seed, fam):
    p, t = getattr(corpus, fam)(seed)
    assert t.chain_ok()
    assert p.objective.batch(np.array(t.minimizer)[None, :])[0] == pytest.approx(t.primal)


def test_seeded_reproducible():
    a, b = corpus.slater_family(9), corpus.slater_family(9)
    assert a[0] == b[0] and a[1].values() == b[1].values()
    assert corpus.finite_qp(3)[0] != corpus.finite_qp(4)[0]


def test_truth_dict_round_trip(ex2):
    t = ex2[1]
    back = GroundTruth.from_dict(t.to_dict())
    assert back.values() == t.values() and back.slater == t.slater
    assert back.provenance == t.provenance


def test_lookup():
    assert corpus.get("example1")[0].name == "karney-example-1"
    assert corpus.get("finite_qp:7")[0].name == "finite-qp-7"
    for bad in ("nope", "finite_qp:x", "example3"):
        with pytest.raises(UnknownInstance):
            corpus.get(bad)
    assert "slater_family:<seed>" in corpus.names()


def test_seeded_instances_alternate():
    inst = corpus.seeded_instances(4, start=2)
    assert [p.name for p, _ in inst] == ["slater-family-2", "finite-qp-2", "slater-family-3", "finite-qp-3"]


def test_shipped_files_match_constructors():
    for name, build in corpus.SHIPPED.items():
        assert corpus.load_shipped(name) == build()
