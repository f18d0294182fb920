"""Command-line entry point.

Every command prints a report (JSON by default, sorted keys, no timestamps)
and exits with 0 when every check passes, 1 on a residual or contract
failure, 2 on a parse or schema error and 3 on a domain error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import expr as ex
from . import lorentz3 as l3
from . import nsns
from .algebra import Signature, StructuralError
from .checks import Check, Report
from .documents import Document, DocumentError, coframe_document, dumps, load
from .lorentz3 import Sampling
from .spinors import ContractError
from . import spinors
from .verify import algebra_suite, isotropy_suite, parse_signature, reconstruction_suite

EXIT_PASS, EXIT_FAIL, EXIT_SCHEMA, EXIT_DOMAIN = 0, 1, 2, 3

_CONTRACT_ERRORS = (
    ContractError,
    spinors.PreconditionError,
    l3.PreconditionError,
    l3.InconsistencyError,
    nsns.InvariantViolation,
    nsns.PreconditionError,
)
_SCHEMA_ERRORS = (DocumentError, ex.ParseError, StructuralError)


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# check batteries shared by the commands
# ---------------------------------------------------------------------------


def _kappa_for(doc: Document, f, s: Sampling) -> tuple[l3.FormField, Report]:
    if doc.kappa is not None:
        return doc.kappa, Report("kappa (given)")
    sol = l3.solve_kappa(doc.coframe, f, doc.free_v, s)
    return sol.kappa, sol.report


def coframe_battery(doc: Document, s: Sampling) -> list[Report]:
    c, f = doc.coframe, doc.f
    out = [l3.coframe_validity(c, s), l3.dual_hodge_report(c, s)]
    kappa, krep = _kappa_for(doc, f, s)
    out.append(krep)
    out.append(l3.check_exterior_system(c, f, kappa, s))
    out.append(l3.check_covariant_system(c, f, kappa, s))
    out.append(l3.integrability_check(c, f, kappa, s))
    gv = Report("godbillon-vey")
    diff = l3.godbillon_vey_rep(c, f, kappa) - l3.godbillon_vey_definition(c, f)
    gv.add(l3.check_exprs("4f^2 n^u^(fv+kappa) - 4f n^d(fn)", diff.comps, c.chart, s))
    out.append(gv)
    return out


def curvature_battery(doc: Document, s: Sampling, which: str = "both") -> tuple[list[Report], dict[str, Any]]:
    c, f = doc.coframe, doc.f
    c.metric.check(min(s.n_points, 50), s.seed)
    kappa, _ = _kappa_for(doc, f, s)
    rep = Report("curvature")
    data: dict[str, Any] = {}
    oracle = formula = None
    if which in ("both", "oracle"):
        curv = l3.christoffel_curvature(c.metric)
        oracle = (curv.ricci, curv.scalar)
    if which in ("both", "formula"):
        formula = (l3.ricci_from_formula(c, f, kappa), l3.scalar_curvature_formula(c, f))
    if oracle and formula:
        rep.add(l3.check_exprs("Ricci formula - Christoffel Ricci", (formula[0] - oracle[0]).flat(), c.chart, s))
        rep.add(l3.check_exprs("scalar formula - Christoffel scalar", [formula[1] - oracle[1]], c.chart, s))
    else:
        ric, scal = oracle or formula
        name = "christoffel" if oracle else "formula"
        env = c.chart.sample(min(s.n_points, 5), s.seed)
        vals = ex.evaluate_batch(ric.flat() + [scal], env)
        pts = [{k: float(v[i]) for k, v in env.items()} for i in range(len(vals[0]))]
        data = {
            "source": name,
            "points": pts,
            "ricci": np.stack(vals[:9], axis=1).reshape(-1, 3, 3).tolist(),
            "scalar": vals[9].tolist(),
        }
        rep.add(Check(f"{name} curvature evaluated", "skipped", 0.0, 0.0, len(pts), s.seed,
                      "single route requested; no comparison made"))
    return [rep], data


def nsns_battery(doc: Document, s: Sampling) -> list[Report]:
    if doc.dilaton is None:
        raise DocumentError("NS-NS checks need a dilaton", "$.dilaton")
    cfg = nsns.NSNSConfig(doc.coframe, doc.f, doc.dilaton)
    return [nsns.check_nsns(cfg, s), nsns.flux_dichotomy_check(cfg, s)]


def susy_battery(doc: Document, s: Sampling) -> list[Report]:
    if doc.dilaton is None or doc.K is None:
        raise DocumentError("supersymmetry checks need 'dilaton' and 'K'", "$")
    cfg = nsns.NSNSConfig(doc.coframe, doc.f, doc.dilaton)
    sd = nsns.SusyData(cfg, doc.K, doc.free_v, doc.b_field)
    out = [nsns.full_solution_report(sd, s), nsns.flux_dichotomy_check(cfg, s)]
    if doc.kappa is not None:
        out.append(l3.check_exterior_system(doc.coframe, doc.f, doc.kappa, s))
    return out


def document_battery(doc: Document, s: Sampling) -> list[Report]:
    if doc.mode == "coframe":
        reports = coframe_battery(doc, s)
        reports += curvature_battery(doc, s)[0]
        return reports
    if doc.mode == "nsns":
        return nsns_battery(doc, s)
    return susy_battery(doc, s)


def builtin_battery(s: Sampling) -> list[Report]:
    """Reduced-size run of the algebraic suites plus the reference geometries."""
    out = []
    for sig in (Signature(2, 1), Signature(3, 2)):
        out.append(algebra_suite(sig, 200, s.seed))
        out.append(reconstruction_suite(sig, 100, s.seed))
    out.append(isotropy_suite(200, s.seed))
    flat = ex.Chart(("x", "y", "z"), [(0.0, 1.0)] * 3)
    c0 = l3.constant_coframe(flat)
    rep = l3.check_exterior_system(c0, ex.ZERO, l3.FormField.zero(1, flat), s)
    rep.title = "flat coframe"
    out.append(rep)
    sl2 = ex.Chart(("x", "t", "y"), [(-1.0, 1.0)] * 3)
    c1 = l3.sl2_coframe(sl2, 1)
    rep = l3.check_exterior_system(c1, ex.ONE, c1.v, s)
    rep.title = "constant f = 1"
    curv = l3.christoffel_curvature(c1.metric)
    rep.add(l3.check_exprs("scalar curvature + 6", [curv.scalar + 6], sl2, s))
    out.append(rep)
    sd = nsns.generate_local_solution("x_u", "1", [(1.0, 2.0), (0.0, 1.0), (0.0, 1.0)], s)
    out.append(nsns.full_solution_report(sd, s))
    return out


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _envelope(command: str, s: Sampling | None, reports: list[Report], data: dict | None = None,
              error: dict | None = None, code: int | None = None) -> dict[str, Any]:
    passed = all(r.passed for r in reports)
    if code is None:
        code = EXIT_PASS if passed else EXIT_FAIL
    out: dict[str, Any] = {
        "command": command,
        "exit_code": code,
        "status": "pass" if code == EXIT_PASS else ("fail" if code == EXIT_FAIL else "error"),
        "reports": [r.to_dict() for r in reports],
    }
    if s is not None:
        out["sampling"] = {"points": s.n_points, "seed": s.seed, "tol": s.tol}
    if data:
        out["data"] = data
    if error:
        out["error"] = error
    return out


def render_text(env: dict[str, Any]) -> str:
    lines = [f"{env['command']}: {env['status'].upper()} (exit {env['exit_code']})"]
    for rep in env["reports"]:
        lines.append(f"== {rep['title']}: {rep['status']}")
        for c in rep["checks"]:
            extra = f"  [{c['note']}]" if c.get("note") else ""
            lines.append(
                f"  {c['status'].upper():7s} {c['name']}  max={c['max_residual']:.3e}"
                f" rel={c['max_relative_residual']:.3e} n={c['samples']}{extra}"
            )
        for note in rep["notes"]:
            lines.append(f"  note: {note}")
    if "error" in env:
        err = env["error"]
        lines.append(f"error ({err['type']}): {err['message']}")
    return "\n".join(lines) + "\n"


def _emit(env: dict[str, Any], fmt: str, stream) -> None:
    stream.write(dumps(env) if fmt == "json" else render_text(env))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _sampling(args) -> Sampling:
    return Sampling(args.points, args.tol, args.seed)


def cmd_verify_algebra(args):
    sig = parse_signature(args.signature)
    return [algebra_suite(sig, args.trials, args.seed)], None


def cmd_verify_reconstruction(args):
    sig = parse_signature(args.signature)
    reports = [reconstruction_suite(sig, args.trials, args.seed, args.tol)]
    if sig == Signature(2, 1):
        reports.append(isotropy_suite(args.trials, args.seed))
    return reports, None


def cmd_check_coframe(args):
    return coframe_battery(load(args.file), _sampling(args)), None


def cmd_curvature(args):
    which = "oracle" if args.oracle_only else "formula" if args.formula_only else "both"
    return curvature_battery(load(args.file), _sampling(args), which)


def cmd_check_nsns(args):
    return nsns_battery(load(args.file), _sampling(args)), None


def cmd_check_susy(args):
    doc = load(args.file)
    if doc.mode != "susy":
        raise DocumentError("check-susy expects mode 'susy'", "$.mode")
    return susy_battery(doc, _sampling(args)), None


def parse_box(spec: str, coords: Sequence[str] = l3.LOCAL_COORDS,
              default: dict[str, tuple[float, float]] | None = None) -> list[tuple[float, float]]:
    """'x_u=1:2,z=0:1' -> one interval per coordinate; x_v defaults to [0, 1]."""
    found = dict(default or {"x_v": (0.0, 1.0)})
    for part in filter(None, (p.strip() for p in spec.split(","))):
        try:
            name, rng = part.split("=")
            lo, hi = (float(x) for x in rng.split(":"))
        except ValueError as exc:
            raise UsageError(f"bad box entry {part!r}; expected NAME=LO:HI") from exc
        name = name.strip()
        if name not in coords:
            raise UsageError(f"unknown coordinate {name!r} in box; use {', '.join(coords)}")
        if not lo <= hi:
            raise UsageError(f"empty interval for {name}")
        found[name] = (lo, hi)
    missing = [c for c in coords if c not in found]
    if missing:
        raise UsageError(f"box is missing {missing}")
    return [found[c] for c in coords]


def _parse_x_u(text: str, name: str) -> ex.Expr:
    e = ex.parse(text)
    if not ex.free_vars(e) <= {"x_u"}:
        raise UsageError(f"--{name} may depend on x_u only")
    return e


def solution_document(sd: nsns.SusyData) -> dict[str, Any]:
    cfg = sd.config
    a, l = sd.extras["a"], sd.extras["l"]
    desc = (f"supersymmetric NS-NS flux solution generated from a(x_u) = {ex.to_text(a)}, "
            f"l(x_u) = {ex.to_text(l)}; f is the flux function f_b and b_field lists the "
            "x_u^x_v, x_u^z, x_v^z components of a potential with db = -2 f_b vol")
    return coframe_document(cfg.coframe, cfg.f_b, "susy", description=desc, dilaton=cfg.phi, K=sd.K,
                            b_field=sd.b_field)


def cmd_gen_solution(args):
    s = _sampling(args)
    box = parse_box(args.box)
    sd = nsns.generate_local_solution(_parse_x_u(args.a, "a"), _parse_x_u(args.l, "l"), box, s)
    doc = solution_document(sd)
    if args.out:
        Path(args.out).write_text(dumps(doc))
    rep = nsns.full_solution_report(sd, s)
    data = {"document": doc} if not args.out else {"written": str(args.out)}
    return [rep], data


def cmd_report(args):
    s = _sampling(args)
    if not args.files:
        return builtin_battery(s), None
    reports = []
    for path in args.files:
        for rep in document_battery(load(path), s):
            rep.title = f"{path}: {rep.title}"
            reports.append(rep)
    return reports, None


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    common.add_argument("--points", type=int, default=100, help="sample points per check (default 100)")
    common.add_argument("--tol", type=float, default=None, help="relative residual tolerance")
    common.add_argument("--format", choices=("json", "text"), default="json")

    parser = argparse.ArgumentParser(prog="kundtkit", description="Spinor squares and Lorentzian 3-manifold checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Callable, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    for name, func, help_ in (
        ("verify-algebra", cmd_verify_algebra, "exact identities of the geometric and truncated products"),
        ("verify-reconstruction", cmd_verify_reconstruction, "spinor square characterisation and reconstruction"),
    ):
        p = add(name, func, help_)
        p.add_argument("--signature", required=True, metavar="P,Q")
        p.add_argument("--trials", type=int, default=500)
    add("check-coframe", cmd_check_coframe, "null coframe and skew-torsion systems").add_argument("file")
    p = add("curvature", cmd_curvature, "Ricci tensor: closed formula versus Christoffel oracle")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--oracle-only", action="store_true")
    g.add_argument("--formula-only", action="store_true")
    add("check-nsns", cmd_check_nsns, "NS-NS supergravity residuals").add_argument("file")
    add("check-susy", cmd_check_susy, "supersymmetric flux solution system").add_argument("file")
    p = add("gen-solution", cmd_gen_solution, "generate a local supersymmetric NS-NS solution")
    p.add_argument("--a", required=True, metavar="EXPR", help="a(x_u)")
    p.add_argument("--l", required=True, metavar="EXPR", help="l(x_u)")
    p.add_argument("--box", required=True, metavar="SPEC", help="e.g. x_u=1:2,z=0:1 (x_v defaults to 0:1)")
    p.add_argument("--out", metavar="FILE")
    add("report", cmd_report, "run documents (or the built-in battery) and print a combined report") \
        .add_argument("files", nargs="*")
    return parser


def _default_tol(command: str) -> float:
    return 1e-10 if command == "verify-reconstruction" else 1e-8


def main(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol is None:
        args.tol = _default_tol(args.command)
    if args.command == "gen-solution":
        # generated solutions are always checked on at least 200 points
        args.points = max(args.points, 200)
    s = Sampling(args.points, args.tol, args.seed) if args.command not in ("verify-algebra",) else None
    try:
        if getattr(args, "trials", 1) < 1 or args.points < 1:
            raise UsageError("--trials and --points must be positive")
        reports, data = args.func(args)
        env = _envelope(args.command, s, reports, data)
    except (UsageError, *_SCHEMA_ERRORS) as exc:
        env = _envelope(args.command, s, [], error=_error(exc), code=EXIT_SCHEMA)
    except ex.DomainError as exc:
        env = _envelope(args.command, s, [], error=_error(exc), code=EXIT_DOMAIN)
    except _CONTRACT_ERRORS as exc:
        env = _envelope(args.command, s, [], error=_error(exc), code=EXIT_FAIL)
    except (OSError, ValueError) as exc:
        env = _envelope(args.command, s, [], error=_error(exc), code=EXIT_SCHEMA)
    _emit(env, args.format, stdout)
    return env["exit_code"]


def _error(exc: Exception) -> dict[str, Any]:
    out = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, DocumentError):
        out["path"] = exc.path
    if isinstance(exc, ex.DomainError) and exc.point:
        out["point"] = exc.point
    return out


if __name__ == "__main__":
    sys.exit(main())
