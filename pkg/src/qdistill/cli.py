"""qdistill command line.

Exit codes: 0 = violation found, 1 = no violation found, 2 = bad input,
3 = I/O failure. ``gen`` exits 0 on success.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from . import __version__
from .distill import n_distillable, named_map_prepass, reduction_witness_value
from .errors import QDistillError
from .maps import NAMED_MAPS, is_k_positive, load_map, named_map, s_map_from_state
from .operators import BipartiteOperator, herm_eig, partial_transpose, schmidt
from .search import SearchParams, Verdict
from .states import (
    DensityMatrix,
    is_density,
    isotropic,
    load_state,
    max_entangled,
    maximally_mixed,
    min_pt_eigenvalue,
    operator_to_json,
    random_density,
    werner,
)

EXIT_VIOLATION, EXIT_NONE, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3
SCHEMA = 1
FAMILIES = ("werner", "isotropic", "maxent", "maxmixed", "random")


class InputError(QDistillError):
    pass


def _params(args) -> SearchParams:
    return SearchParams(
        restarts=args.restarts,
        max_iters=args.max_iters,
        neg_tol=args.tol,
        conv_tol=min(1e-10, args.tol / 10),
        seed=args.seed,
    )


def _digest(op: BipartiteOperator) -> dict:
    return {
        "dims": [op.dim_a, op.dim_b],
        "trace": float(op.trace().real),
        "min_pt_eig": min_pt_eigenvalue(op),
    }


def _report(command: str, args, **fields) -> dict:
    echo = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "schema": SCHEMA,
        "tool": "qdistill",
        "version": __version__,
        "command": command,
        "args": echo,
        "seed": getattr(args, "seed", None),
        **fields,
    }


def _emit(report: dict, args, started: float) -> None:
    report["timing"] = {"seconds": time.perf_counter() - started}
    text = json.dumps(report, indent=2, allow_nan=False)
    if getattr(args, "report", None):
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _load_density(path) -> DensityMatrix:
    op = load_state(path)
    try:
        return DensityMatrix.from_operator(op)
    except QDistillError as exc:
        raise InputError(f"{path}: not a valid density matrix ({exc})") from exc


def _family_state(family: str, d: int, param, d_b=None, rank=None, seed=0) -> DensityMatrix:
    if family == "werner":
        if param is None:
            raise InputError("werner needs --alpha")
        return werner(d, param)
    if family == "isotropic":
        if param is None:
            raise InputError("isotropic needs --fidelity")
        return isotropic(d, param)
    if family == "maxent":
        return DensityMatrix.from_operator(max_entangled(d))
    if family == "maxmixed":
        return maximally_mixed(d, d_b)
    if family == "random":
        return random_density(d, d_b or d, rank, seed)
    raise InputError(f"unknown family {family!r}")


def _schmidt_summary(v: Verdict) -> dict | None:
    if v.certificate is None:
        return None
    return {"coefficients": [float(c) for c in schmidt(v.certificate).coefficients[:2]]}


# -- subcommands -------------------------------------------------------------

def cmd_gen(args) -> int:
    param = args.alpha if args.family == "werner" else args.fidelity
    if param is None:
        param = args.param
    rho = _family_state(args.family, args.d, param, args.d_b, args.rank, args.seed)
    doc = operator_to_json(rho)
    text = json.dumps(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.family} state ({rho.dim_a}x{rho.dim_b}) to {args.out}", file=sys.stderr)
    else:
        print(text)
    return 0


def cmd_distill(args) -> int:
    started = time.perf_counter()
    rho = _load_density(args.state)
    p = _params(args)
    screen = named_map_prepass(rho) if args.prepass else []
    v = n_distillable(rho, args.copies, p, prepass=args.prepass)
    report = _report(
        "distill",
        args,
        inputs=_digest(rho),
        prepass=[r.to_dict() for r in screen],
        verdicts=[v.to_dict()],
        certificate_schmidt=_schmidt_summary(v),
    )
    _emit(report, args, started)
    print(f"{v.kind.value}: value {v.value:.12g} ({args.copies} cop{'y' if args.copies == 1 else 'ies'})", file=sys.stderr)
    return EXIT_VIOLATION if v.violation else EXIT_NONE


def _resolve_map(args):
    given = [x for x in (args.map, args.operator, args.from_state) if x]
    if len(given) != 1:
        raise InputError("give exactly one of --map, --operator, --from-state")
    if args.map:
        if args.d is None:
            raise InputError("--map needs --d")
        tag = "Lambda" + args.map.lower().removeprefix("lambda")
        m, _ = named_map(tag, args.d)
        return m, {"map": tag, "d": args.d}
    if args.operator:
        m = load_map(args.operator)
        return m, {"operator": args.operator, "d": m.d_in}
    rho = _load_density(args.from_state)
    _, ts = s_map_from_state(rho)
    return ts, {"from_state": args.from_state, "d": rho.dim_a, "inputs": _digest(rho)}


def cmd_kpos(args) -> int:
    started = time.perf_counter()
    m, info = _resolve_map(args)
    v = is_k_positive(m, args.k, _params(args))
    report = _report("kpos", args, map=info, verdicts=[v.to_dict()])
    _emit(report, args, started)
    label = "not k-positive" if v.violation else "no violation found (heuristic)"
    print(f"{v.kind.value}: value {v.value:.12g}, k={args.k}: {label}", file=sys.stderr)
    return EXIT_VIOLATION if v.violation else EXIT_NONE


SWEEP_HEADER = ["param", "min_pt_eig", "reduction_value", "rank2_min_value", "verdict"]


def sweep_rows(family: str, d: int, start: float, stop: float, steps: int, copies: int, params: SearchParams):
    if steps < 1:
        raise InputError("--steps must be >= 1")
    if family not in ("werner", "isotropic"):
        raise InputError("sweep supports the werner and isotropic families")
    grid = np.linspace(start, stop, steps) if steps > 1 else np.array([start])
    rows = []
    for x in grid:
        rho = _family_state(family, d, float(x))
        v = n_distillable(rho, copies, params)
        rows.append([float(x), min_pt_eigenvalue(rho), reduction_witness_value(rho), v.value, v.kind.value])
    return rows


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    rows = sweep_rows(args.family, args.d, args.start, args.stop, args.steps, args.copies, _params(args))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow([repr(r[0]), repr(r[1]), repr(r[2]), repr(r[3]), r[4]])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    any_violation = any(r[4] == "ViolationFound" for r in rows)
    if args.out:
        report = _report("sweep", args, rows=len(rows), violations=sum(r[4] == "ViolationFound" for r in rows))
        _emit(report, args, started)
    return EXIT_VIOLATION if any_violation else EXIT_NONE


def cmd_check(args) -> int:
    started = time.perf_counter()
    op = load_state(args.state)
    herm = op.is_hermitian()
    checks = {
        "hermitian": herm,
        "unit_trace": op.has_unit_trace(),
        "trace": [float(op.trace().real), float(op.trace().imag)],
    }
    if not herm:
        checks["psd"] = False
        report = _report("check", args, dims=[op.dim_a, op.dim_b], checks=checks, valid=False)
        _emit(report, args, started)
        print("invalid state: not Hermitian", file=sys.stderr)
        return EXIT_INPUT
    checks["min_eig"] = float(herm_eig(op)[0][0])
    checks["psd"] = checks["min_eig"] >= -1e-9
    valid = is_density(op)
    fields = {"dims": [op.dim_a, op.dim_b], "checks": checks, "valid": valid}
    if not valid:
        _emit(_report("check", args, **fields), args, started)
        print("invalid state: failed density-matrix invariants", file=sys.stderr)
        return EXIT_INPUT
    fields["min_pt_eig"] = float(herm_eig(partial_transpose(op, "B"))[0][0])
    screen = named_map_prepass(op)
    fields["named_maps"] = [r.to_dict() for r in screen]
    fields["witness_values"] = {r.tag: r.witness_value for r in screen if r.witness_value is not None}
    _emit(_report("check", args, **fields), args, started)
    flagged = any(r.map_min_eig < -1e-9 for r in screen) or any(
        v < -1e-9 for v in fields["witness_values"].values()
    )
    return EXIT_VIOLATION if flagged else EXIT_NONE


# -- parser ------------------------------------------------------------------

def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-9, help="negativity threshold for a violation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="also write the JSON report to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdistill", description="Distillability tests for bipartite states.")
    parser.add_argument("--version", action="version", version=f"qdistill {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a state file")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--d-b", type=int, default=None, help="B dimension for random/maxmixed (default: d)")
    g.add_argument("--alpha", type=float)
    g.add_argument("--fidelity", type=float)
    g.add_argument("--param", type=float, help="family parameter (alias of --alpha/--fidelity)")
    g.add_argument("--rank", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", "-o")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("distill", help="search for one- or n-copy distillability")
    d.add_argument("state")
    d.add_argument("--copies", type=int, default=1)
    d.add_argument("--no-prepass", dest="prepass", action="store_false")
    _search_flags(d)
    d.set_defaults(func=cmd_distill)

    k = sub.add_parser("kpos", help="search for a k-positivity violation of a map")
    k.add_argument("--map", choices=[t.lower() for t in NAMED_MAPS])
    k.add_argument("--d", type=int)
    k.add_argument("--operator", help="map file (Jamiolkowski operator + jamiolkowski_scale)")
    k.add_argument("--from-state", help="state file; tests T o S with rho = (1 x S) P+")
    k.add_argument("--k", type=int, default=2)
    _search_flags(k)
    k.set_defaults(func=cmd_kpos)

    s = sub.add_parser("sweep", help="distillability along a state family, as CSV")
    s.add_argument("family", choices=("werner", "isotropic"))
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--start", type=float, required=True)
    s.add_argument("--stop", type=float, required=True)
    s.add_argument("--steps", type=int, default=11)
    s.add_argument("--copies", type=int, default=1)
    s.add_argument("--out", "-o")
    _search_flags(s)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check", help="validate a state file and evaluate the named witnesses")
    c.add_argument("state")
    c.add_argument("--report")
    c.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"qdistill: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QDistillError as exc:
        print(f"qdistill: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
