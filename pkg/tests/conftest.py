import numpy as np
import pytest

from ciplab.model import (
    AbsOf,
    Affine,
    Const,
    Coord,
    ExpOf,
    FiniteFamily,
    MaxOf,
    PosScale,
    Problem,
    SquareOf,
    Sum,
)

# filled by test_acceptance: criterion number -> (passed, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def parts_to_expr(parts):
    """Expression tree for the description returned by oracles.random_convex_2d."""
    terms = []
    for kind, prm in parts:
        if kind == "bowl":
            w, c = prm
            terms.append(PosScale(float(w[0]), SquareOf(Affine((1.0, 0.0), -float(c[0])))))
            terms.append(PosScale(float(w[1]), SquareOf(Affine((0.0, 1.0), -float(c[1])))))
        elif kind == "abs":
            a, b = prm
            terms.append(AbsOf(Affine(tuple(map(float, a)), b)))
        elif kind == "max":
            terms.append(MaxOf(tuple(Affine(tuple(map(float, a)), b) for a, b in prm)))
        else:
            s, a, b = prm
            terms.append(PosScale(s, ExpOf(Affine(tuple(map(float, a)), b))))
    return Sum(tuple(terms))


def finite_problem(objective, *constraints, dim=None, name="toy"):
    dim = dim or max(max(e.min_dim, e.fixed_dim or 0) for e in (objective,) + constraints)
    items = tuple((f"t{k + 1}", e) for k, e in enumerate(constraints))
    return Problem(name, dim, objective, FiniteFamily(items))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ex1():
    from ciplab import corpus
    return corpus.example1()


@pytest.fixture(scope="session")
def ex2():
    from ciplab import corpus
    return corpus.example2()


@pytest.fixture(scope="session")
def ex2_truncated():
    from ciplab import corpus
    return corpus.example2(with_sup=False)


__all__ = ["ACCEPTANCE", "parts_to_expr", "finite_problem", "Const", "Coord"]
