"""Command-line interface.

Exit status is 0 on success, 1 on a domain error (for instance a model that
is not a class member) and 2 when an input file is missing or malformed.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from datetime import datetime, timezone

import numpy as np

from nlsvar import __version__
from nlsvar.dynamics import GaussianShocks, GivenShocks, PathResult, simulate
from nlsvar.errors import NlsvarError
from nlsvar.fileio import InputError, columns, load_model, read_csv, read_json, write_csv
from nlsvar.gjrt import decompose
from nlsvar.jsr import jsr_bounds
from nlsvar.longrun import (
    TransitoryConfig,
    attractor_points,
    longrun_multipliers,
    lr_identify_check,
    lr_identify_construct,
    transitory_direction_curve,
)
from nlsvar.membership import MEMBER, check_membership, require_member

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _header(args) -> str | None:
    if args.reproducible:
        return None
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"nlsvar {__version__} | {shlex.join(['nlsvar', *args.argv])} | {stamp}"


def _member_report(model, args):
    report = check_membership(model, args.rho_bar, args.depth)
    require_member(report)
    return report


def _cmd_check(args) -> int:
    model = load_model(args.model)
    report = check_membership(model, args.rho_bar, args.depth)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.verdict == MEMBER else EXIT_DOMAIN


def _read_window(path, model) -> np.ndarray:
    cols, data = read_csv(path)
    if "t" not in cols:
        raise InputError(f"{path}: missing column t")
    t = data[:, cols.index("t")]
    z = columns(path, cols, data, "z", model.p)
    order = np.argsort(-t)  # most recent first
    if data.shape[0] != model.k:
        raise InputError(f"{path}: need exactly k = {model.k} rows, got {data.shape[0]}")
    return z[order]


def _cmd_simulate(args) -> int:
    model = load_model(args.model)
    window0 = _read_window(args.init, model)
    if args.shocks:
        cols, data = read_csv(args.shocks)
        plan = GivenShocks(columns(args.shocks, cols, data, "u", model.p))
    else:
        if args.T is None or args.seed is None:
            raise InputError("--gaussian needs --T and --seed")
        doc = read_json(args.gaussian)
        sigma = doc.get("sigma") if isinstance(doc, dict) else doc
        try:
            sigma = np.asarray(sigma, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InputError(f"{args.gaussian}: sigma must be a numeric matrix") from exc
        if sigma.shape != (model.p, model.p):
            raise InputError(f"{args.gaussian}: sigma must be {model.p}x{model.p}")
        plan = GaussianShocks(sigma, args.seed, args.T)
    res = simulate(model, window0, plan)
    p, k = model.p, model.k
    rows = []
    for j, z in enumerate(res.window0[::-1]):
        rows.append([j - k + 1, *z, *np.zeros(p)])
    for t, (z, u) in enumerate(zip(res.path, res.shocks), start=1):
        rows.append([t, *z, *u])
    cols = ["t"] + [f"z_{j}" for j in range(1, p + 1)] + [f"u_{j}" for j in range(1, p + 1)]
    write_csv(args.out, cols, rows, _header(args))
    return EXIT_OK


def _read_path(path, model) -> PathResult:
    cols, data = read_csv(path)
    if "t" not in cols:
        raise InputError(f"{path}: missing column t")
    t = data[:, cols.index("t")]
    order = np.argsort(t, kind="stable")
    t, data = t[order], data[order]
    z = columns(path, cols, data, "z", model.p)
    u = columns(path, cols, data, "u", model.p)
    pre = t <= 0
    if pre.sum() != model.k or (~pre).sum() < 1:
        raise InputError(f"{path}: need k = {model.k} rows with t <= 0 and at least one with t > 0")
    return PathResult(z[~pre], z[pre][::-1].copy(), u[~pre])


def _cmd_decompose(args) -> int:
    model = load_model(args.model)
    res = _read_path(args.path, model)
    report = _member_report(model, args)
    dec = decompose(model, report, res)
    q, r = report.q, report.r
    nxi = dec.xi.shape[1]
    cols = (["t"] + [f"psi_{j}" for j in range(1, q + 1)] + [f"theta_{j}" for j in range(1, r + 1)]
            + [f"xi_{j}" for j in range(1, nxi + 1)] + ["residual"])
    rows = [[t + 1, *dec.chi_path[t], *dec.xi[t + 1], dec.residual[t]] for t in range(res.path.shape[0])]
    write_csv(args.out, cols, rows, _header(args))
    return EXIT_OK


def _cmd_attractor(args) -> int:
    model = load_model(args.model)
    report = _member_report(model, args)
    cols, data = read_csv(args.grid)
    grid = columns(args.grid, cols, data, "w", report.q)
    sample = attractor_points(model, report, grid)
    out_cols = [f"w_{j}" for j in range(1, report.q + 1)] + [f"z_{j}" for j in range(1, model.p + 1)]
    write_csv(args.out, out_cols, np.hstack([sample.grid, sample.points]), _header(args))
    return EXIT_OK


def _cmd_multipliers(args) -> int:
    model = load_model(args.model)
    report = _member_report(model, args)
    cols, data = read_csv(args.at)
    pts = columns(args.at, cols, data, "z", model.p)
    rows = []
    for n, z in enumerate(pts, start=1):
        mr = longrun_multipliers(model, report, z)
        for i in range(model.p):
            rows.append([n, mr.differentiable, mr.rank, i + 1, *mr.theta_inf[i]])
    out_cols = ["point", "differentiable", "rank", "row"] + [f"c_{j}" for j in range(1, model.p + 1)]
    write_csv(args.out, out_cols, rows, _header(args))
    return EXIT_OK


def _cmd_identify(args) -> int:
    model = load_model(args.model)
    report = _member_report(model, args)
    ups = lr_identify_construct(report, args.m)
    ok, res = lr_identify_check(report, ups, args.m)
    write_csv(args.out, [f"c_{j}" for j in range(1, model.p + 1)], ups, _header(args))
    print(json.dumps({"m": args.m, "residual": res, "ok": ok}))
    return EXIT_OK if ok else EXIT_DOMAIN


def _magnitudes(spec) -> np.ndarray:
    if isinstance(spec, dict):
        try:
            return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError("magnitudes must be a list or {start, stop, num}") from exc
    try:
        return np.asarray(spec, dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise InputError("magnitudes must be a list of numbers") from exc


def _cmd_transitory(args) -> int:
    doc = read_json(args.config)
    if not isinstance(doc, dict):
        raise InputError(f"{args.config}: expected a JSON object")
    missing = [k for k in ("alpha_tilde", "alpha", "beta", "magnitudes") if k not in doc]
    if missing:
        raise InputError(f"{args.config}: missing key(s) {', '.join('$.' + m for m in missing)}")
    if doc.get("lambda", "gauss_abs") != "gauss_abs":
        raise InputError(f"{args.config}: $.lambda must be 'gauss_abs'")
    try:
        cfg = TransitoryConfig(*(np.asarray(doc[k], dtype=float) for k in ("alpha_tilde", "alpha", "beta")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValueError) and "unit circle" in str(exc):
            raise NlsvarError(str(exc)) from exc
        raise InputError(f"{args.config}: {exc}") from exc
    curve = transitory_direction_curve(
        cfg, _magnitudes(doc["magnitudes"]), int(doc.get("horizon", 100_000)), float(doc.get("tol", 1e-9))
    )
    rows = zip(curve.magnitudes, curve.ratios, curve.iterations, curve.converged)
    write_csv(args.out, ["magnitude", "ratio", "iterations", "converged"], rows, _header(args))
    return EXIT_OK if curve.converged.all() else EXIT_DOMAIN


def _cmd_jsr(args) -> int:
    doc = read_json(args.matrices)
    mats = doc.get("matrices") if isinstance(doc, dict) else doc
    try:
        arrs = [np.asarray(m, dtype=float) for m in mats]
    except (TypeError, ValueError) as exc:
        raise InputError(f"{args.matrices}: $.matrices must be a list of numeric matrices") from exc
    try:
        br = jsr_bounds(arrs, depth=args.depth)
    except ValueError as exc:
        raise InputError(f"{args.matrices}: {exc}") from exc
    print(json.dumps(br.to_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nlsvar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nlsvar {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--reproducible", action="store_true", help="omit the provenance header from outputs")
    member = argparse.ArgumentParser(add_help=False)
    member.add_argument("--rho-bar", type=float, default=1.0, help="JSR threshold for membership")
    member.add_argument("--depth", type=int, default=12, help="JSR search depth")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common, member], help="decide class membership")
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("simulate", parents=[common], help="simulate a path")
    p.add_argument("--model", required=True)
    p.add_argument("--init", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--shocks")
    g.add_argument("--gaussian")
    p.add_argument("--T", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("decompose", parents=[common, member], help="common-trend decomposition of a path")
    p.add_argument("--model", required=True)
    p.add_argument("--path", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("attractor", parents=[common, member], help="steady states on a grid")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_attractor)

    p = sub.add_parser("multipliers", parents=[common, member], help="long-run multipliers")
    p.add_argument("--model", required=True)
    p.add_argument("--at", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_multipliers)

    p = sub.add_parser("identify", parents=[common, member], help="rotation with m transitory shocks")
    p.add_argument("--model", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("transitory", parents=[common], help="transitory shock directions by size")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_transitory)

    p = sub.add_parser("jsr", parents=[common], help="joint spectral radius bracket")
    p.add_argument("--matrices", required=True)
    p.add_argument("--depth", type=int, default=12)
    p.set_defaults(func=_cmd_jsr)
    return parser


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except InputError as exc:
        print(f"nlsvar: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"nlsvar: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NlsvarError, ValueError) as exc:
        print(f"nlsvar: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
