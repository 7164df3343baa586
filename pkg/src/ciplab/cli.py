"""ciplab command line.

    ciplab analyze <file> [--trunc N] [--json]
    ciplab sweep <file> [--eps0 F --ratio F --count K --csv PATH --svg PATH]
    ciplab slater <file>
    ciplab duals <file> [--which d0|d|d1|all]
    ciplab corpus list|run <name>|run-all

Exit codes: 0 ok, 2 chain violation or corpus mismatch, 3 input error,
4 internal solver anomaly.
"""
import argparse
from dataclasses import dataclass, field
import json
import math
import sys
import time

from . import __version__, corpus
from .duality import (
    CHAIN_SLACK,
    SOLVER_TOL,
    DualConfig,
    StrongDualityViolation,
    Witnesses,
    geometric_schedule,
    karney_gap,
    limiting_value,
    solve_D,
    solve_D0,
    solve_D1,
    solve_primal,
    strong_duality_verdict,
    strong_slater,
    weak_duality_audit,
)
from .extreal import fmt, from_token, to_token
from .model import ConvexityRejected, DimensionMismatch, SchemaError, load_problem

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_INPUT = 3
EXIT_ANOMALY = 4


class InputError(Exception):
    pass


# -- reports -------------------------------------------------------------------

def _dual_entry(rep, which):
    d = {"value": to_token(rep.value), "attained": bool(rep.attained), "exact": bool(rep.exact)}
    if which == "d1":
        d["sStar"] = rep.s_star
    elif which != "primal" and rep.multiplier is not None:
        d["multiplier"] = rep.multiplier.to_dict()
    return d


def _slater_entry(cert):
    if cert is None:
        return {"found": False, "a": None, "alpha": None}
    return {"found": True, "a": list(cert.a), "alpha": cert.alpha, "exact": bool(cert.exact)}


def _limit_entry(sweep):
    return {"epsilons": list(sweep.epsilons), "values": [to_token(v) for v in sweep.values],
            "estimate": to_token(sweep.limit_estimate), "converged": bool(sweep.converged),
            "monotone": bool(sweep.monotone), "exact": bool(sweep.exact)}


@dataclass
class RunReport:
    problem: str
    version: str
    config: dict
    results: dict
    chain_ok: bool
    chain: str = ""
    karney_gap: bool = False
    caveats: list = field(default_factory=list)
    timings: dict = None

    def to_dict(self):
        d = {"problem": self.problem, "version": self.version, "config": self.config,
             "results": self.results, "chainOk": self.chain_ok, "chain": self.chain,
             "karneyGap": self.karney_gap, "caveats": list(self.caveats)}
        if self.timings is not None:
            d["timings"] = self.timings
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["problem"], d["version"], d.get("config", {}), d["results"], d["chainOk"],
                   d.get("chain", ""), d.get("karneyGap", False), list(d.get("caveats", [])),
                   d.get("timings"))

    def emit(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def parse(cls, text):
        return cls.from_dict(json.loads(text))


def _caveats(results):
    out = []
    for k in ("primal", "d0", "d", "d1"):
        r = results.get(k)
        if r is not None and not r["exact"]:
            out.append(f"{k}: value computed on a truncated or pooled index set")
    lim = results.get("limit")
    if lim is not None and not lim["converged"]:
        out.append("limit: sweep not converged at the last epsilon")
    return out


def _load(path):
    try:
        return load_problem(path)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None
    except (SchemaError, ConvexityRejected, DimensionMismatch) as exc:
        raise InputError(f"{path}: {exc}") from None


def analyze(p, N=None, schedule=None, timings=False):
    """Primal, the three duals, the Slater search and the limiting sweep."""
    clock = {}
    wit = Witnesses()
    t0 = time.perf_counter()
    audit = weak_duality_audit(p, N=N, raise_on_violation=False, witnesses=wit)
    clock["chain"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    cert = strong_slater(p, N=N)
    clock["slater"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    sweep = limiting_value(p, schedule, N=N, points=wit.points())
    clock["limit"] = time.perf_counter() - t0

    reps = audit.reports
    results = {k: _dual_entry(reps[k], k) for k in ("primal", "d0", "d", "d1")}
    results["slater"] = _slater_entry(cert)
    results["limit"] = _limit_entry(sweep)
    if cert is not None:
        v = strong_duality_verdict(reps["primal"], reps["d1"], sweep, cert)
        results["strongDuality"] = {"holds": bool(v.holds), "primal": to_token(v.primal),
                                    "d1": to_token(v.d1), "limit": to_token(v.limit)}
    gap = karney_gap(reps["d"].value, sweep.limit_estimate)
    eps = list(sweep.epsilons)
    config = {"trunc": N, "eps0": eps[0], "count": len(eps),
              "ratio": eps[1] / eps[0] if len(eps) > 1 else None,
              "chainSlack": CHAIN_SLACK, "tol": SOLVER_TOL}
    return RunReport(p.name, __version__, config, results, bool(audit.chain_ok),
                     audit.chain_line(), bool(gap), _caveats(results),
                     {k: round(v, 3) for k, v in clock.items()} if timings else None)


def format_report(r):
    lines = [f"problem  {r.problem}"]
    labels = {"primal": "inf(P)", "d0": "sup(D0)", "d": "sup(D)", "d1": "sup(D1)"}
    for k, name in labels.items():
        e = r.results[k]
        att = "attained" if e["attained"] else "not attained"
        extra = f"  s* = {fmt(e['sStar'])}" if k == "d1" and e.get("sStar") is not None else ""
        if "multiplier" in e and e["multiplier"]:
            extra = "  lambda = " + ", ".join(f"{t}: {fmt(w)}" for t, w in e["multiplier"].items())
        lines.append(f"{name:<9}{fmt(from_token(e['value'])):>12}  {att:<13}"
                     f"{'exact' if e['exact'] else 'inexact':<8}{extra}")
    s = r.results["slater"]
    if s["found"]:
        a = ", ".join(fmt(v, 4) for v in s["a"])
        lines.append(f"slater   found a = ({a}), alpha = {fmt(s['alpha'])}")
    else:
        lines.append("slater   NotFound")
    lim = r.results["limit"]
    lines.append(f"limit    {fmt(from_token(lim['estimate']))} at eps = {lim['epsilons'][-1]:.3g}"
                 f" ({'converged' if lim['converged'] else 'not converged'})")
    if "strongDuality" in r.results:
        lines.append(f"strong duality  {'holds' if r.results['strongDuality']['holds'] else 'FAILS'}")
    lines.append(f"chain    {r.chain}")
    lines.append(f"chain ok {r.chain_ok}")
    if r.karney_gap:
        lines.append("gap      sup(D) < limiting value: the limiting formula does not give sup(D)")
    for c in r.caveats:
        lines.append(f"caveat   {c}")
    if r.timings:
        lines.append("time     " + ", ".join(f"{k} {v:.2f}s" for k, v in r.timings.items()))
    return "\n".join(lines)


# -- sweep output --------------------------------------------------------------

def sweep_csv(sweep):
    rows = ["epsilon,value,exact"]
    exact = str(bool(sweep.exact)).lower()
    for e, v in zip(sweep.epsilons, sweep.values):
        rows.append(f"{e!r},{to_token(v)},{exact}")
    return "\n".join(rows) + "\n"


def sweep_svg(sweep, width=480, height=320, pad=48):
    """Line chart of value against log10(epsilon); infinite values are skipped."""
    pts = [(math.log10(e), v) for e, v in zip(sweep.epsilons, sweep.values) if math.isfinite(v)]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    x0, y0, x1, y1 = pad, height - pad, width - pad / 2, pad / 2
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    out.append(f'<text x="{(x0 + x1) / 2}" y="{height - 10}" text-anchor="middle" '
               f'font-size="12">log10(epsilon)</text>')
    out.append(f'<text x="12" y="{(y0 + y1) / 2}" font-size="12" '
               f'transform="rotate(-90 12 {(y0 + y1) / 2})" text-anchor="middle">value</text>')
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        xlo, xhi = min(xs), max(xs)
        ylo, yhi = min(ys), max(ys)
        if xhi == xlo:
            xlo, xhi = xlo - 1, xhi + 1
        if yhi == ylo:
            ylo, yhi = ylo - 1, yhi + 1

        def sx(x):
            return x0 + (x - xlo) / (xhi - xlo) * (x1 - x0)

        def sy(y):
            return y0 - (y - ylo) / (yhi - ylo) * (y0 - y1)

        poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{poly}" fill="none" stroke="steelblue" stroke-width="2"/>')
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="steelblue"/>')
        for v, label in ((xlo, f"{xlo:.2g}"), (xhi, f"{xhi:.2g}")):
            out.append(f'<text x="{sx(v):.2f}" y="{y0 + 16}" font-size="10" '
                       f'text-anchor="middle">{label}</text>')
        for v, label in ((ylo, f"{ylo:.3g}"), (yhi, f"{yhi:.3g}")):
            out.append(f'<text x="{x0 - 4}" y="{sy(v):.2f}" font-size="10" '
                       f'text-anchor="end">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- corpus --------------------------------------------------------------------

def corpus_diff(name, tol=SOLVER_TOL, instance=None):
    """Recompute the five values of a corpus instance and compare with its truth."""
    p, truth = instance if instance is not None else corpus.get(name)
    wit = Witnesses()
    audit = weak_duality_audit(p, raise_on_violation=False, witnesses=wit)
    sweep = limiting_value(p, points=wit.points())
    got = dict(audit.values(), limiting=sweep.limit_estimate)
    rows = []
    for k in corpus.VALUE_KEYS:
        want, have = truth.values()[k], got[k]
        if math.isinf(want) or math.isinf(have):
            ok = want == have
        else:
            ok = abs(want - have) <= tol
        rows.append((k, want, have, ok, truth.provenance.get(k, "")))
    return rows, audit.chain_ok


def _print_diff(name, rows, chain_ok, out):
    print(f"{name}", file=out)
    for k, want, have, ok, prov in rows:
        print(f"  {k:<9}{fmt(want):>12}{fmt(have):>14}  {'ok' if ok else 'MISMATCH':<9}{prov}",
              file=out)
    print(f"  chain ok {chain_ok}", file=out)


# -- commands ------------------------------------------------------------------

def cmd_analyze(args, out):
    p = _load(args.file)
    r = analyze(p, N=args.trunc, timings=args.timings)
    print(r.emit() if args.json else format_report(r), file=out)
    return EXIT_OK if r.chain_ok else EXIT_VIOLATION


def cmd_sweep(args, out):
    try:
        schedule = geometric_schedule(args.eps0, args.ratio, args.count)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    p = _load(args.file)
    sweep = limiting_value(p, schedule, N=args.trunc)
    text = sweep_csv(sweep)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(sweep_svg(sweep))
    print(f"limitEstimate {to_token(sweep.limit_estimate)} converged {str(sweep.converged).lower()}"
          f" monotone {str(sweep.monotone).lower()}", file=out)
    return EXIT_OK


def cmd_slater(args, out):
    p = _load(args.file)
    cert = strong_slater(p, N=args.trunc)
    if args.json:
        print(json.dumps({"problem": p.name, "slater": _slater_entry(cert)}, indent=2), file=out)
    elif cert is None:
        print("NotFound", file=out)
    else:
        print(f"found a = ({', '.join(repr(v) for v in cert.a)}) alpha = {cert.alpha!r} "
              f"h(a) = {cert.h_value!r} exact = {str(cert.exact).lower()}", file=out)
    return EXIT_OK


def cmd_duals(args, out):
    p = _load(args.file)
    which = ("d0", "d", "d1") if args.which == "all" else (args.which,)
    wit = Witnesses()
    dcfg = DualConfig()
    P = solve_primal(p, N=args.trunc, witnesses=wit)
    results = {}
    for k in which:
        if k == "d0":
            rep = solve_D0(p, N=args.trunc, dcfg=dcfg, witnesses=wit, ceiling=P.value)
        elif k == "d":
            rep = solve_D(p, N=args.trunc, dcfg=dcfg, witnesses=wit, ceiling=P.value)
        else:
            rep = solve_D1(p, N=args.trunc, dcfg=dcfg, witnesses=wit)
        results[k] = _dual_entry(rep, k)
        results[k]["label"] = rep.label
    if args.json:
        print(json.dumps({"problem": p.name, "results": results}, indent=2), file=out)
    else:
        names = {"d0": "D0", "d": "D", "d1": "D1"}
        for k, e in results.items():
            extra = f"  s* = {fmt(e['sStar'])}" if k == "d1" else ""
            if e.get("multiplier"):
                extra = "  lambda = " + ", ".join(f"{t}: {fmt(w)}" for t, w in e["multiplier"].items())
            print(f"{e['label']}({names[k]}) = {fmt(from_token(e['value']))}"
                  f"  {'exact' if e['exact'] else 'inexact'}{extra}", file=out)
    return EXIT_OK


def cmd_corpus(args, out):
    if args.action == "list":
        for name in corpus.names():
            if name.endswith("<seed>"):
                print(f"{name:<22}seeded construction, truth derived from KKT", file=out)
                continue
            _, t = corpus.get(name)
            vals = ", ".join(f"{k} {fmt(v)}" for k, v in t.values().items())
            print(f"{name:<22}{vals}, slater {str(t.slater).lower()}", file=out)
        return EXIT_OK
    if args.action == "run":
        if not args.name:
            raise InputError("corpus run needs an instance name")
        names = [args.name]
    else:
        names = list(corpus.DEFAULT_RUN)
    bad = False
    for name in names:
        try:
            rows, chain_ok = corpus_diff(name, args.tol)
        except corpus.UnknownInstance:
            raise InputError(f"unknown corpus instance {name!r}") from None
        _print_diff(name, rows, chain_ok, out)
        bad |= not all(r[3] for r in rows) or not chain_ok
    return EXIT_VIOLATION if bad else EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="ciplab", description="duality analysis of convex "
                                 "semi-infinite programs")
    ap.add_argument("--version", action="version", version=f"ciplab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="primal, D0, D, D1, Slater check and limiting sweep")
    a.add_argument("file")
    a.add_argument("--trunc", type=int, default=None, help="truncation level for parametric families")
    a.add_argument("--json", action="store_true")
    a.add_argument("--timings", action="store_true", help="include wall-clock times")
    a.set_defaults(run=cmd_analyze)

    s = sub.add_parser("sweep", help="v1 along a geometric epsilon schedule")
    s.add_argument("file")
    s.add_argument("--eps0", type=float, default=1.0)
    s.add_argument("--ratio", type=float, default=0.5)
    s.add_argument("--count", type=int, default=20)
    s.add_argument("--csv", default=None)
    s.add_argument("--svg", default=None)
    s.add_argument("--trunc", type=int, default=None)
    s.set_defaults(run=cmd_sweep)

    sl = sub.add_parser("slater", help="search for a strong Slater point")
    sl.add_argument("file")
    sl.add_argument("--trunc", type=int, default=None)
    sl.add_argument("--json", action="store_true")
    sl.set_defaults(run=cmd_slater)

    d = sub.add_parser("duals", help="dual values only")
    d.add_argument("file")
    d.add_argument("--which", choices=("d0", "d", "d1", "all"), default="all")
    d.add_argument("--trunc", type=int, default=None)
    d.add_argument("--json", action="store_true")
    d.set_defaults(run=cmd_duals)

    c = sub.add_parser("corpus", help="built-in instances with ground truth")
    c.add_argument("action", choices=("list", "run", "run-all"))
    c.add_argument("name", nargs="?")
    c.add_argument("--tol", type=float, default=SOLVER_TOL)
    c.set_defaults(run=cmd_corpus)
    return ap


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.run(args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StrongDualityViolation, ArithmeticError, RuntimeError) as exc:
        print(f"solver anomaly: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ANOMALY


if __name__ == "__main__":
    sys.exit(main())
