"""Extended reals: plain floats in [-inf, +inf], never NaN.

Values are ordinary Python floats so they interoperate with numpy; the
functions here add the guards that keep Lagrangian sums well defined.
"""
import math

PLUS_INF = math.inf
MINUS_INF = -math.inf


class IndeterminateSum(ArithmeticError):
    """(+inf) + (-inf) was requested; a proper-function model never does this."""


class NonPositiveScale(ValueError):
    """A weight <= 0 reached scaling; zero weights must be dropped beforehand."""


class EmptySequence(ValueError):
    pass


def ext(value):
    """Coerce to an extended real, rejecting NaN."""
    v = float(value)
    if math.isnan(v):
        raise ValueError("NaN is not an extended real")
    return v


def is_finite(a):
    return -math.inf < a < math.inf


def ext_add(a, b):
    a, b = ext(a), ext(b)
    if (a == PLUS_INF and b == MINUS_INF) or (a == MINUS_INF and b == PLUS_INF):
        raise IndeterminateSum(f"{a} + {b}")
    return a + b


def ext_sum(values):
    """Left fold of ext_add; the empty sum is 0."""
    total = 0.0
    for v in values:
        total = ext_add(total, v)
    return total


def ext_scale_pos(c, a):
    c = float(c)
    if not c > 0:
        raise NonPositiveScale(f"scale factor must be > 0, got {c}")
    a = ext(a)
    if not is_finite(a):
        return a
    return c * a


def ext_sup(values):
    values = [ext(v) for v in values]
    if not values:
        raise EmptySequence("sup of an empty sequence")
    return max(values)


def to_token(a):
    """JSON token: a number, "+inf" or "-inf"."""
    a = ext(a)
    if a == PLUS_INF:
        return "+inf"
    if a == MINUS_INF:
        return "-inf"
    return a


def from_token(tok):
    if isinstance(tok, str):
        s = tok.strip().lower()
        if s in ("+inf", "inf", "infinity", "+infinity"):
            return PLUS_INF
        if s in ("-inf", "-infinity"):
            return MINUS_INF
        raise ValueError(f"bad extended-real token {tok!r}")
    if isinstance(tok, bool) or tok is None:
        raise ValueError(f"bad extended-real token {tok!r}")
    return ext(tok)


def fmt(a, digits=6):
    """Short human form used in chain lines and tables."""
    a = ext(a)
    if a == PLUS_INF:
        return "+inf"
    if a == MINUS_INF:
        return "-inf"
    r = round(a, digits)
    if r == 0:
        r = 0.0
    return f"{r:g}"
