"""Command-line front end.

Every command writes a JSON report ``{"schema": 1, "command", "config", "result"}``
(or CSV rows ``epsilon,value,err`` with ``--format csv``).  Exit codes: 0 on
success, 2 on usage errors, 3 on numerical failure (a diagnostic JSON is still
written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import asymptotics as A
from . import gfunc as G
from . import serialize
from .casestudies import coulomb, shock
from .errors import ColombeauError, NumericFailure
from .mollifier import KINDS, BumpProfile, Mollifier, build_mollifier, constants, moment

SCHEMA = 1


class UsageError(Exception):
    pass


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, grid: bool = False, mollifier: bool = True) -> None:
    p.add_argument("--config", type=Path, help="JSON file whose keys override flag defaults")
    p.add_argument("--output", "-o", type=Path, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--csv", type=Path, help="also write the eps sweep as CSV to this path")
    if mollifier:
        p.add_argument("--kind", choices=KINDS, default="standard-bump")
        p.add_argument("--q", type=int, default=2, help="number of vanishing moments")
        p.add_argument("--half-width", type=float, default=1.0)
        p.add_argument("--base-shift", type=float, default=0.0, help="shift of the base bump")
        p.add_argument("--power", type=int, default=8, help="exponent for cosine-power bumps")
        p.add_argument("--mollifier", type=Path, help="JSON mollifier file (overrides the flags)")
    if grid:
        p.add_argument("--eps-max", type=float, default=1e-2)
        p.add_argument("--ratio", type=float, default=0.5)
        p.add_argument("--count", type=int, default=8)


def _add_expr(p: argparse.ArgumentParser, name: str = "--expr", required: bool = True) -> None:
    p.add_argument(name, required=required,
                   help="expression document: inline JSON or @path to a JSON file")


def _add_test(p: argparse.ArgumentParser) -> None:
    p.add_argument("--test", action="append", default=None, metavar="CENTRE,HALF_WIDTH",
                   help="test bump (repeatable); default is the three-bump battery")
    p.add_argument("--measure", choices=A.MEASURES, default="line")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="colombeau", description="Generalized-function calculus engine")
    sub = ap.add_subparsers(dest="command", required=True)

    mol = sub.add_parser("mollifier", help="build or check a vanishing-moment mollifier")
    msub = mol.add_subparsers(dest="action", required=True)
    _add_common(msub.add_parser("build", help="construct a mollifier and report its moments"))
    _add_common(msub.add_parser("check", help="recompute moments of a stored mollifier"))

    p = sub.add_parser("eval", help="evaluate a representative on points")
    _add_common(p)
    _add_expr(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--x", type=float, nargs="+", required=True)

    p = sub.add_parser("pair", help="eps sweep of <g, T> with extrapolated limit")
    _add_common(p, grid=True)
    _add_expr(p)
    _add_test(p)

    p = sub.add_parser("associate", help="test g ~ h on a battery of test functions")
    _add_common(p, grid=True)
    _add_expr(p)
    _add_expr(p, "--expr2", required=False)
    _add_test(p)
    p.add_argument("--tol", type=float, default=A.DEFAULT_ASSOC_TOL)

    p = sub.add_parser("classify", help="moderateness order or negligibility of g")
    _add_common(p, grid=True)
    _add_expr(p)
    p.add_argument("--mode", choices=("moderate", "negligible"), default="moderate")
    p.add_argument("--probe", type=float, nargs="+", default=[0.0])
    p.add_argument("--q-max", type=float, default=3.0)
    p.add_argument("--dps", type=int, default=None, help="mpmath digits for tiny remainders")

    p = sub.add_parser("verify-ups", help="check the cut-off integration formulas")
    _add_common(p)
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=1e-3)

    demo = sub.add_parser("demo", help="case-study reproductions")
    dsub = demo.add_subparsers(dest="which", required=True)
    for name in ("coulomb", "self-energy"):
        d = dsub.add_parser(name)
        _add_common(d)
        d.add_argument("--a", type=float, default=0.1)
        d.add_argument("--eps", type=float, default=1e-3)
        d.add_argument("--e", type=float, default=1.0)
    d = dsub.add_parser("burgers")
    _add_common(d, grid=True)
    d.add_argument("--u1", type=float, default=0.0)
    d.add_argument("--u2", type=float, default=1.0)
    d = dsub.add_parser("alpha")
    _add_common(d, grid=True)
    d.add_argument("--shift1", type=float, default=0.0)
    d.add_argument("--shift2", type=float, default=0.0)
    return ap


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None):
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        for k, v in data.items():
            key = k.replace("-", "_")
            if not hasattr(args, key):
                raise UsageError(f"unknown config key {k!r}")
            setattr(args, key, v)
    return args


def _mollifier(args) -> Mollifier:
    if getattr(args, "mollifier", None):
        src = args.mollifier
        try:
            data = json.loads(Path(src).read_text()) if not isinstance(src, dict) else src
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read mollifier {src}: {exc}") from exc
        # accept a bare mollifier, an expression document, or a `mollifier build` report
        for key in ("result", "mollifier"):
            if isinstance(data.get(key), dict):
                data = data[key]
        if "q" not in data:
            raise UsageError(f"{src} does not describe a mollifier")
        return Mollifier.from_dict(data)
    try:
        base = BumpProfile(args.kind, float(args.half_width), float(args.base_shift), int(args.power))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return build_mollifier(base, int(args.q))


def _grid(args) -> A.EpsGrid:
    try:
        return A.EpsGrid(float(args.eps_max), float(args.ratio), int(args.count))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _expr(text: str | dict, m: Mollifier) -> G.GFunc:
    try:
        if isinstance(text, dict):
            doc = text
        elif text.startswith("@"):
            doc = json.loads(Path(text[1:]).read_text())
        else:
            doc = json.loads(text)
        if "expr" not in doc:
            doc = {"schema": SCHEMA, "expr": doc}
        stored = "mollifier" in doc
        return serialize.from_document(doc, None if stored else m)
    except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad expression: {exc}") from exc


def _tests(args) -> tuple[G.TestFunction, ...]:
    if not args.test:
        return G.default_battery()
    out = []
    for i, spec in enumerate(args.test):
        try:
            c, w = (float(v) for v in str(spec).split(","))
            out.append(G.TestFunction.bump(c, w, f"T{i}"))
        except ValueError as exc:
            raise UsageError(f"bad --test {spec!r}; expected CENTRE,HALF_WIDTH") from exc
    return tuple(out)


def _config(args) -> dict:
    skip = {"config", "output", "format", "csv"}
    out = {}
    for k, v in vars(args).items():
        if k in skip:
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


# ---------------------------------------------------------------------------
# commands: each returns (result dict, sweep rows)
# ---------------------------------------------------------------------------


def _mollifier_report(m: Mollifier) -> dict:
    moms = [moment(m, n) for n in range(m.q + 1)]
    errs = [abs(moms[0] - 1.0)] + [abs(v) for v in moms[1:]]
    k = constants(m)
    return {"mollifier": m.to_dict(), "moments": moms, "max_moment_err": max(errs),
            "within_tolerance": bool(errs[0] < 1e-10 and max(errs[1:], default=0.0) < 1e-8),
            "constants": {"c0": k.c0, "c1": k.c1}}


def cmd_mollifier(args):
    m = _mollifier(args)
    return _mollifier_report(m), []


def cmd_eval(args):
    m = _mollifier(args)
    g = _expr(args.expr, m)
    vals = G.evaluate(g, float(args.eps), np.asarray(args.x, dtype=float))
    return {"x": list(map(float, args.x)), "values": list(map(float, np.atleast_1d(vals)))}, []


def cmd_pair(args):
    m = _mollifier(args)
    g = _expr(args.expr, m)
    grid = _grid(args)
    results, rows = [], []
    for T in _tests(args):
        r = A.pairing_sweep(g, T, grid, measure=args.measure, on_divergence="flag")
        results.append({"test": T.name, **r.to_dict()})
        rows += [(e, v, q) for (e, v), q in zip(r.values, r.errors)]
    return {"per_test": results}, rows


def cmd_associate(args):
    m = _mollifier(args)
    g = _expr(args.expr, m)
    h = _expr(args.expr2, m) if args.expr2 else 0.0
    r = A.associate(g, h, _tests(args), _grid(args), assoc_tol=float(args.tol), measure=args.measure)
    return r.to_dict(), []


def cmd_classify(args):
    m = _mollifier(args)
    g = _expr(args.expr, m)
    grid = _grid(args)
    probe = np.asarray(args.probe, dtype=float)
    if args.mode == "moderate":
        fit = A.moderateness_order(g, probe, grid)
        return {"mode": "moderate", "N": fit.order, "fit": fit.to_dict()}, []
    r = A.negligibility_check(g, float(args.q_max), probe, grid, dps=args.dps)
    return {"mode": "negligible", **r.to_dict()}, [(e, v, 0.0) for e, v in r.values]


def cmd_verify_ups(args):
    m = _mollifier(args)
    r = A.verify_ups_formulas(m, float(args.a), float(args.eps))
    return r.to_dict(), []


def _coulomb_cfg(args) -> coulomb.CoulombConfig:
    try:
        return coulomb.CoulombConfig(float(args.e), float(args.a), float(args.eps), mollifier=_mollifier(args))
    except (ValueError, ColombeauError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_demo_coulomb(args):
    cfg = _coulomb_cfg(args)
    m = cfg.mollifier
    ratio = cfg.eps / cfg.a
    a_vals = tuple(cfg.a * f for f in (2.0, 1.0, 0.5, 0.25))
    sweep = coulomb.total_charge(cfg.e, a_vals, ratio, mollifier=m)
    gauss = coulomb.gauss_check(cfg)
    Er = coulomb.coulomb_field(cfg)
    result = {
        "config": cfg.to_dict(),
        "field_shadow": str(G.shadow_simplify(Er)),
        "density": repr(coulomb.charge_density(cfg)),
        "total_charge": sweep.to_dict(),
        "gauss": gauss,
    }
    rows = [(a * ratio, v, abs(v - sweep.expected)) for a, v in sweep.values]
    return result, rows


def cmd_demo_self_energy(args):
    cfg = _coulomb_cfg(args)
    s = coulomb.self_energy(cfg)
    rows = []
    for f in (1.0, 0.5, 0.25):
        c = coulomb.CoulombConfig(cfg.e, cfg.a, cfg.eps * f, mollifier=cfg.mollifier)
        sf = coulomb.self_energy(c)
        rows.append((c.eps, sf.value, abs(sf.value - sf.expected)))
    return {"config": cfg.to_dict(), **s.to_dict()}, rows


def cmd_demo_burgers(args):
    cfg = shock.ShockConfig(float(args.u1), float(args.u2),
                            (shock.Profile(_mollifier(args)),) * 2, grid=_grid(args))
    if cfg.u1 == cfg.u2:
        raise UsageError("u1 and u2 must differ")
    speed = shock.burgers_jump_speed(cfg)
    resid = shock.multiplied_equation_residual(cfg)
    u = cfg.state()
    du = u.derivative()
    rc = G.add(G.scale(-speed.c, du), G.multiply(u, du))
    sweep = A.pairing_sweep(rc, G.default_battery()[0], cfg.grid)
    rows = [(e, v, q) for (e, v), q in zip(sweep.values, sweep.errors)]
    return {"config": cfg.to_dict(), "c": speed.c, "jump_speed": speed.to_dict(),
            "multiplied_residual": resid.to_dict()}, rows


def cmd_demo_alpha(args):
    m = _mollifier(args)
    p1, p2 = shock.Profile(m, float(args.shift1)), shock.Profile(m, float(args.shift2))
    grid = _grid(args)
    r = shock.alpha_product(p1, p2, grid)
    rev = shock.alpha_product(p2, p1, grid)
    rows = [(e, v, r.limit_err) for e, v in r.values]
    return {"alpha": r.alpha, "alpha_reversed": rev.alpha, "complement_sum": r.alpha + rev.alpha,
            **{k: v for k, v in r.to_dict().items() if k != "alpha"}}, rows


def _dispatch_table(args):
    if args.command == "mollifier":
        return cmd_mollifier, f"mollifier {args.action}"
    if args.command == "demo":
        fn = {"coulomb": cmd_demo_coulomb, "self-energy": cmd_demo_self_energy,
              "burgers": cmd_demo_burgers, "alpha": cmd_demo_alpha}[args.which]
        return fn, f"demo {args.which}"
    fn = {"eval": cmd_eval, "pair": cmd_pair, "associate": cmd_associate,
          "classify": cmd_classify, "verify-ups": cmd_verify_ups}[args.command]
    return fn, args.command


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "value", "err"])
    for e, v, q in rows:
        w.writerow([repr(float(e)), repr(float(v)), repr(float(q))])
    return buf.getvalue()


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.command
    try:
        args = _resolve(args)
        fn, command = _dispatch_table(args)
        result, rows = fn(args)
    except UsageError as exc:
        print(f"colombeau: error: {exc}", file=sys.stderr)
        return 2
    except (NumericFailure, ColombeauError) as exc:
        diag = {"schema": SCHEMA, "command": command, "config": _jsonable(_config(args)),
                "error": {"type": type(exc).__name__, "message": str(exc),
                          "details": _jsonable({k: v for k, v in vars(exc).items()
                                                if isinstance(v, (int, float, str))})}}
        _emit(json.dumps(diag, indent=2) + "\n", getattr(args, "output", None))
        print(f"colombeau: numeric failure: {exc}", file=sys.stderr)
        return 3
    report = {"schema": SCHEMA, "command": command, "config": _config(args), "result": result}
    if args.format == "csv":
        _emit(_csv_text(rows), args.output)
    else:
        _emit(json.dumps(_jsonable(report), indent=2) + "\n", args.output)
    if args.csv:
        Path(args.csv).write_text(_csv_text(rows))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
