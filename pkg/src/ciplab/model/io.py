"""Problem-definition files (``.cip``): JSON documents.

Layout::

    {"name": ..., "dim": 2,
     "objective": <node>,
     "constraints": {"kind": "finite", "items": [{"label": "t1", "expr": <node>}, ...]}
                  | {"kind": "parametric", "start": 1, "stop": null,
                     "special": {"1": <node>, ...}, "builder": <template node>,
                     "supExpr": <node>?},
     "box": [[lo, hi], ...], "truncation": 100}

Nodes are tagged objects such as ``{"op": "exp", "arg": {"op": "coord", "i": 2}}``.
"""
import json
import math
from pathlib import Path

from .expr import (
    AbsOf,
    Affine,
    Const,
    ConvexityRejected,
    Coord,
    DimensionMismatch,
    DomainRestrict,
    ExpOf,
    Expr,
    MaxOf,
    PosScale,
    SquareOf,
    Sum,
    certify,
)
from .problem import FiniteFamily, ParametricFamily, Problem


class SchemaError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _num(node, key, path):
    if key not in node:
        raise SchemaError(f"{path}.{key}", "missing")
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{path}.{key}", f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise SchemaError(f"{path}.{key}", "must be finite")
    return float(v)


def _child(node, key, path):
    if key not in node:
        raise SchemaError(f"{path}.{key}", "missing")
    return expr_from_node(node[key], f"{path}.{key}")


def _children(node, key, path):
    seq = node.get(key)
    if not isinstance(seq, list) or not seq:
        raise SchemaError(f"{path}.{key}", "expected a non-empty list")
    return tuple(expr_from_node(v, f"{path}.{key}[{k}]") for k, v in enumerate(seq))


def expr_from_node(node, path="$"):
    if not isinstance(node, dict) or "op" not in node:
        raise SchemaError(path, "expected an expression node with an 'op' field")
    op = node["op"]
    try:
        if op == "const":
            return Const(_num(node, "c", path))
        if op == "coord":
            i = node.get("i")
            if isinstance(i, bool) or not isinstance(i, int) or i < 1:
                raise SchemaError(f"{path}.i", "expected a 1-based integer")
            return Coord(i)
        if op == "affine":
            a = node.get("a")
            if not isinstance(a, list) or not a:
                raise SchemaError(f"{path}.a", "expected a non-empty list of numbers")
            for k, v in enumerate(a):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise SchemaError(f"{path}.a[{k}]", f"expected a number, got {v!r}")
            b = _num(node, "b", path) if "b" in node else 0.0
            return Affine(tuple(a), b)
        if op == "sum":
            return Sum(_children(node, "args", path))
        if op == "scale":
            c = _num(node, "c", path)
            arg = _child(node, "arg", path)
            if not c > 0:
                raise ConvexityRejected(f"{path}.c", f"scale weight must be > 0, got {c}")
            return PosScale(c, arg)
        if op == "max":
            return MaxOf(_children(node, "args", path))
        if op == "exp":
            return ExpOf(_child(node, "arg", path))
        if op == "abs":
            return AbsOf(_child(node, "arg", path))
        if op == "square":
            return SquareOf(_child(node, "arg", path))
        if op == "restrict":
            return DomainRestrict(_child(node, "arg", path), _children(node, "where", path))
    except ConvexityRejected as exc:
        if exc.path.startswith("$"):
            raise
        raise ConvexityRejected(path, exc.reason) from None
    except (SchemaError, DimensionMismatch):
        raise
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None
    raise SchemaError(f"{path}.op", f"unknown op {op!r}")


def expr_to_node(e):
    if isinstance(e, Const):
        return {"op": "const", "c": e.c}
    if isinstance(e, Coord):
        return {"op": "coord", "i": e.i}
    if isinstance(e, Affine):
        return {"op": "affine", "a": list(e.a), "b": e.b}
    if isinstance(e, Sum):
        return {"op": "sum", "args": [expr_to_node(a) for a in e.args]}
    if isinstance(e, PosScale):
        return {"op": "scale", "c": e.c, "arg": expr_to_node(e.arg)}
    if isinstance(e, MaxOf):
        return {"op": "max", "args": [expr_to_node(a) for a in e.args]}
    if isinstance(e, ExpOf):
        return {"op": "exp", "arg": expr_to_node(e.arg)}
    if isinstance(e, AbsOf):
        return {"op": "abs", "arg": expr_to_node(e.arg)}
    if isinstance(e, SquareOf):
        return {"op": "square", "arg": expr_to_node(e.arg)}
    if isinstance(e, DomainRestrict):
        return {"op": "restrict", "arg": expr_to_node(e.arg),
                "where": [expr_to_node(g) for g in e.where]}
    raise TypeError(f"cannot serialise {e!r}")


def _certified(node, path):
    return certify(expr_from_node(node, path), path)


def _family_from_node(node, path):
    if not isinstance(node, dict):
        raise SchemaError(path, "expected an object")
    kind = node.get("kind")
    if kind == "finite":
        items = node.get("items")
        if not isinstance(items, list) or not items:
            raise SchemaError(f"{path}.items", "expected a non-empty list")
        out = []
        for k, item in enumerate(items):
            ipath = f"{path}.items[{k}]"
            if not isinstance(item, dict) or "expr" not in item:
                raise SchemaError(ipath, "expected {label, expr}")
            label = str(item.get("label", f"t{k + 1}"))
            out.append((label, _certified(item["expr"], f"{ipath}.expr")))
        try:
            return FiniteFamily(tuple(out))
        except ValueError as exc:
            raise SchemaError(f"{path}.items", str(exc)) from None
    if kind == "parametric":
        start = node.get("start", 1)
        stop = node.get("stop")
        if isinstance(start, bool) or not isinstance(start, int):
            raise SchemaError(f"{path}.start", "expected an integer")
        if stop is not None and (isinstance(stop, bool) or not isinstance(stop, int)):
            raise SchemaError(f"{path}.stop", "expected an integer or null")
        if "builder" not in node:
            raise SchemaError(f"{path}.builder", "missing")
        special = []
        for key, sub in (node.get("special") or {}).items():
            try:
                t = int(key)
            except ValueError:
                raise SchemaError(f"{path}.special", f"index {key!r} is not an integer") from None
            special.append((t, _certified(sub, f"{path}.special[{key}]")))
        sup_expr = None
        if node.get("supExpr") is not None:
            sup_expr = _certified(node["supExpr"], f"{path}.supExpr")
        try:
            fam = ParametricFamily(start, json.dumps(node["builder"], sort_keys=True),
                                   stop, tuple(special), sup_expr)
            fam.expr_at(fam._first_generic())
        except (SchemaError, ConvexityRejected, DimensionMismatch):
            raise
        except ValueError as exc:
            raise SchemaError(f"{path}.builder", str(exc)) from None
        return fam
    raise SchemaError(f"{path}.kind", f"expected 'finite' or 'parametric', got {kind!r}")


def problem_from_dict(doc):
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected a JSON object")
    for key in ("name", "dim", "objective", "constraints"):
        if key not in doc:
            raise SchemaError(f"$.{key}", "missing")
    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int):
        raise SchemaError("$.dim", "expected an integer")
    objective = _certified(doc["objective"], "$.objective")
    family = _family_from_node(doc["constraints"], "$.constraints")
    box = doc.get("box")
    if box is not None:
        if not isinstance(box, list) or not all(isinstance(b, list) and len(b) == 2 for b in box):
            raise SchemaError("$.box", "expected a list of [lo, hi] pairs")
    truncation = doc.get("truncation", 100)
    if isinstance(truncation, bool) or not isinstance(truncation, int):
        raise SchemaError("$.truncation", "expected an integer")
    try:
        return Problem(str(doc["name"]), dim, objective, family, box, truncation)
    except (ConvexityRejected, DimensionMismatch):
        raise
    except ValueError as exc:
        raise SchemaError("$", str(exc)) from None


def parse_problem(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return problem_from_dict(doc)


def problem_to_dict(p):
    fam = p.family
    if fam.is_finite:
        cons = {"kind": "finite",
                "items": [{"label": k, "expr": expr_to_node(e)} for k, e in fam.items]}
    else:
        cons = {"kind": "parametric", "start": fam.start, "stop": fam.stop,
                "special": {str(t): expr_to_node(e) for t, e in fam.special},
                "builder": json.loads(fam.template)}
        if fam.sup_expr is not None:
            cons["supExpr"] = expr_to_node(fam.sup_expr)
    return {"name": p.name, "dim": p.dim, "objective": expr_to_node(p.objective),
            "constraints": cons, "box": [list(b) for b in p.box],
            "truncation": p.truncation}


def serialize_problem(p):
    return json.dumps(problem_to_dict(p), indent=2)


def load_problem(path):
    return parse_problem(Path(path).read_text())


def save_problem(p, path):
    Path(path).write_text(serialize_problem(p) + "\n")
