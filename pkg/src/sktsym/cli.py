"""Command-line front end: catalog validation, determining-equation
generation, invariance and commutator checks, solution verification, group
orbits, symmetry reduction, flux checks, and finite-difference simulation.

Exit codes: 0 all verdicts pass, 1 verification failure, 2 usage error,
3 file not found.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys

import sympy as sp

from . import expr as ex
from . import invariance as inv
from . import simulator as sim
from . import solutions as so
from .catalog import Catalog, CatalogError
from .jet import VectorField

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NOFILE = 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers

def _parse_bindings(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise UsageError(f"--bind expects k=v, got {item!r}")
        k, _, v = item.partition("=")
        try:
            out[k.strip()] = sp.nsimplify(sp.sympify(v), rational=False)
        except (sp.SympifyError, TypeError):
            raise UsageError(f"cannot parse binding value {v!r}")
    return out


def _float_bindings(bindings):
    out = {}
    for k, v in bindings.items():
        try:
            out[k] = float(v)
        except TypeError:
            raise UsageError(f"binding {k} = {v} must be numeric here")
    return out


def _emit(lines, output):
    text = "\n".join(lines) + "\n"
    if output:
        try:
            with open(output, "w") as fh:
                fh.write(text)
        except FileNotFoundError:
            raise
    else:
        sys.stdout.write(text)


def _family(args):
    fid = args.family
    try:
        if getattr(args, "file", None):
            with open(args.file) as fh:
                sol = so.parse_solution_file(fh.read())
        else:
            sol = so.builtin_family(fid, branch=getattr(args, "branch", "upper"),
                                    system_id=getattr(args, "system", None))
    except so.SolutionError as exc:
        raise UsageError(str(exc))
    return sol


def _entry(cat, args):
    if args.table is None or args.case is None:
        raise UsageError("--table and --case are required")
    try:
        return cat.entry(args.table, args.case)
    except CatalogError as exc:
        raise UsageError(str(exc))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_validate(args):
    cat = Catalog.load(args.catalog)
    if args.all:
        keys = None
    else:
        if args.table is None:
            raise UsageError("validate needs --all or --table [--case]")
        keys = [(t, c) for (t, c) in sorted(cat.entries)
                if t == args.table and (args.case is None or c == args.case)]
        if not keys:
            raise UsageError(f"no catalog entries match table {args.table}")
    rep = cat.validate_all(keys=keys)
    rows = sorted(rep.rows, key=lambda r: (r.table, r.case_id, r.operator))
    if args.format == "csv":
        lines = ["table,case,operator,invariant,witnesses"]
        lines += [f"{r.table},{r.case_id},{r.operator},"
                  f"{str(r.invariant).lower()},{r.witness_count}" for r in rows]
    else:
        lines = [f"command: validate {'--all' if args.all else ''}".rstrip()]
        for r in rows:
            verdict = "pass" if r.invariant else "FAIL"
            lines.append(f"table {r.table} case {r.case_id:>2}  "
                         f"{r.operator:<10} {verdict}")
        for note in rep.notes:
            lines.append(f"note: {note}")
        n_ent = len({(r.table, r.case_id) for r in rows})
        lines.append(f"entries: {n_ent}  checks: {len(rows)}  "
                     f"verdict: {'pass' if rep.ok else 'FAIL'}")
    _emit(lines, args.output)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _cmd_determining(args):
    if args.generic:
        system = inv.SKTSystem.generic()
    else:
        cat = Catalog.load(args.catalog)
        system = _entry(cat, args).system
    ds = inv.generate_determining(system, full_deps=False)
    deps = ("Derivative(xi0(t,x,u,v), x) = Derivative(xi0(t,x,u,v), u) = "
            "Derivative(xi0(t,x,u,v), v) = Derivative(xi1(t,x,u,v), u) = "
            "Derivative(xi1(t,x,u,v), v) = 0")
    eqs = sorted((ex.render(e) for e in ds.equations), key=lambda s: (len(s), s))
    lines = [f"determining equations ({len(eqs) + 1}):", f"  (1) {deps}"]
    lines += [f"  ({i + 2}) {s} = 0" for i, s in enumerate(eqs)]
    _emit(lines, args.output)
    return EXIT_OK


def _cmd_check(args):
    cat = Catalog.load(args.catalog)
    entry = _entry(cat, args)
    names = [args.operator] if args.operator else list(entry.operators)
    lines = []
    ok = True
    for name in names:
        if name not in entry.operators:
            raise UsageError(f"operator {name} not listed for this entry")
        verdict = inv.check_invariance(entry.system, cat.operator(name))
        ok = ok and verdict.invariant
        lines.append(f"{name:<10} {'pass' if verdict.invariant else 'FAIL'}"
                     + (f"  witnesses: {len(verdict.witnesses)}"
                        if not verdict.invariant else ""))
    lines.append(f"verdict: {'pass' if ok else 'FAIL'}")
    _emit(lines, args.output)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_commutators(args):
    cat = Catalog.load(args.catalog)
    entry = _entry(cat, args)
    ops = [cat.operator(n) for n in entry.operators]
    rep = inv.closure_check(ops)
    lines = [f"algebra: {', '.join(entry.operators)}  "
             f"(dimension {len(ops)})"]
    for (i, j), coeffs in sorted(rep.constants.items()):
        terms = [f"{sp.sstr(c)}*{entry.operators[k]}"
                 for k, c in enumerate(coeffs) if c != 0]
        rhs = " + ".join(terms) if terms else "0"
        lines.append(f"[{entry.operators[i]}, {entry.operators[j]}] = {rhs}")
    for f in rep.failures:
        lines.append(f"not in span: {f}")
    lines.append(f"closes: {'yes' if rep.closes else 'NO'}")
    _emit(lines, args.output)
    return EXIT_OK if rep.closes else EXIT_FAIL


def _cmd_verify_solution(args):
    sol = _family(args)
    system = sol.system()
    r1, r2 = so.residual(system, sol)
    symbolic_ok = r1.is_zero and r2.is_zero
    bindings = _parse_bindings(args.bind)
    rows = []
    max_res = 0.0
    numeric_note = "skipped (no bindings)"
    if bindings:
        worst, npts = so.residual_numeric(system, sol, _float_bindings(bindings),
                                          points=args.points, seed=args.seed)
        max_res = worst
        numeric_note = f"max |residual| {worst:.3e} over {npts} points"
        numeric_ok = worst < args.tol
    else:
        numeric_ok = True
    ok = symbolic_ok and numeric_ok
    rows.append((sol.name, sol.system_id, max_res, args.points if bindings else 0,
                 "pass" if ok else "FAIL"))
    if args.format == "csv":
        lines = so.verification_csv(rows).rstrip("\n").split("\n")
    else:
        lines = [f"family: {sol.name}  system: {sol.system_id}  "
                 f"branch: {sol.branch}",
                 f"symbolic residual: "
                 f"{'0' if symbolic_ok else 'NONZERO'}",
                 f"numeric check: {numeric_note}",
                 f"verdict: {'pass' if ok else 'FAIL'}"]
    _emit(lines, args.output)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_orbit(args):
    sol = _family(args)
    bindings = _parse_bindings(args.bind)
    p = bindings.get("p", ex.parameter("p"))
    lam1 = bindings.get("lambda1")
    lam2 = bindings.get("lambda2")
    try:
        orb = so.group_orbit(sol, p, lam1, lam2, generator=args.generator)
    except so.SolutionError as exc:
        raise UsageError(str(exc))
    r1, r2 = so.residual(orb.system(), orb)
    ok = r1.is_zero and r2.is_zero
    lines = [f"orbit of {sol.name} under {args.generator}:",
             f"u = {ex.render(orb.u_expr)}",
             f"v = {ex.render(orb.v_expr)}",
             f"residual on {orb.system_id}: {'0' if ok else 'NONZERO'}",
             f"verdict: {'pass' if ok else 'FAIL'}"]
    _emit(lines, args.output)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_reduce(args):
    system = so.target_system(args.system or so.PLUS)
    Xf = VectorField.make(
        "0", "1",
        "(lambda1*cos(x)+lambda2*sin(x))/(u-v)",
        "-(lambda1*cos(x)+lambda2*sin(x))/(u-v)", name="reduction-op")
    try:
        red = so.reduce_ansatz(system, Xf)
    except so.SolutionError as exc:
        raise UsageError(str(exc))
    lines = [f"ansatz u = {ex.render(red.ansatz_u)}",
             f"ansatz v = {ex.render(red.ansatz_v)}",
             "reduced ODE system:"]
    lines += [f"  {ex.render(o)} = 0" for o in red.reduced]
    lines.append("integrated form (beta = first integral constant):")
    lines += [f"  {ex.render(i)} = 0" for i in red.integrated]
    ok = True
    for name, (f1, f2) in sorted(so.reduction_solutions().items()):
        good = so.check_reduction(red, f1, f2)
        ok = ok and good
        lines.append(f"branch {name}: phi1 = {sp.sstr(f1)}, "
                     f"phi2 = {sp.sstr(sp.simplify(f2))} -> "
                     f"{'satisfies ODEs' if good else 'FAILS'}")
    lines.append(f"verdict: {'pass' if ok else 'FAIL'}")
    _emit(lines, args.output)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_flux_check(args):
    sol = _family(args)
    bindings = _parse_bindings(args.bind)
    if bindings:
        sol = sol.subs({ex.parameter(k): v for k, v in bindings.items()})
    try:
        x0 = sp.sympify(args.x0)
        x1 = sp.sympify(args.x1)
    except sp.SympifyError:
        raise UsageError("cannot parse --x0/--x1")
    rep = so.flux_check(sol, x0, x1)
    lines = [f"flux check for {sol.name} on ({sp.sstr(x0)}, {sp.sstr(x1)}):"]
    for (pt, ux, vx) in rep.endpoint_values:
        lines.append(f"  x = {ex.render(pt)}: u_x = {ex.render(ux)}, "
                     f"v_x = {ex.render(vx)}")
    lines.append(f"verdict: {'pass' if rep.passed else 'FAIL'}")
    _emit(lines, args.output)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _cmd_simulate(args):
    cp = configparser.ConfigParser()
    try:
        with open(args.config) as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise
    if "simulate" not in cp:
        raise UsageError("config file needs a [simulate] section")
    sec = cp["simulate"]
    try:
        grid = sim.Grid1D(sec.getfloat("grid.x0", 0.0),
                          sec.getfloat("grid.x1", math.pi),
                          sec.getint("grid.n", 64))
        t_end = sec.getfloat("t_end")
        cfl = sec.getfloat("cfl", 0.2)
        bc_kind = sec.get("bc", sim.ZERO_NEUMANN)
        init = sec.get("init")
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad [simulate] config: {exc}")
    if t_end is None or init is None:
        raise UsageError("[simulate] needs t_end and init")
    bindings = {k.split(".", 1)[1]: float(v) for k, v in sec.items()
                if k.startswith("bind.")}
    try:
        sol = so.builtin_family(init)
    except so.SolutionError:
        raise UsageError(f"unknown init family {init!r}")
    if sec.get("system"):
        system = so.target_system(sec.get("system"))
    else:
        system = sol.system()
    eval_u, eval_v = sim.field_functions(sol, bindings)
    xs = grid.centers()
    bc = (sim.BCSpec(bc_kind, family=sol, bindings=bindings)
          if bc_kind == sim.EXACT_DIRICHLET else sim.BCSpec(bc_kind))
    config = sim.SolverConfig(t_end=t_end, cfl_factor=cfl,
                              output_stride=sec.getint("output_stride", 1))
    traj = sim.run(system, grid, (eval_u(0.0, xs), eval_v(0.0, xs)), bc,
                   config, bindings=bindings)
    _emit(traj.to_csv().rstrip("\n").split("\n"), args.output)
    if traj.aborted:
        sys.stderr.write(f"aborted at step {traj.abort_step}\n")
        return EXIT_FAIL
    return EXIT_OK


def _cmd_convergence(args):
    sol = _family(args)
    bindings = _float_bindings(_parse_bindings(args.bind))
    if bindings:
        # bound parameters stay in the exact fields; pass them through
        pass
    sizes = [int(s) for s in args.sizes.split(",")]
    if len(sizes) < 2:
        raise UsageError("--sizes needs at least two grid sizes")
    system = sol.system()
    try:
        res = sim.convergence_study(system, sol, sizes, args.t_end,
                                    bindings=bindings,
                                    first_order=args.first_order)
    except sim.SimulatorError as exc:
        raise UsageError(str(exc))
    expected = 1.0 if args.first_order else 2.0
    ok = all(abs(o - expected) <= 0.2 for o in res.orders)
    if args.format == "csv":
        lines = ["n,error,order"]
        for i, n in enumerate(res.sizes):
            o = f"{res.orders[i - 1]:.4f}" if i else ""
            lines.append(f"{n},{res.errors[i]:.6e},{o}")
        lines.append(f"verdict,{'pass' if ok else 'FAIL'},")
    else:
        lines = [f"convergence of {sol.name} on {sol.system_id} "
                 f"(expected order {expected:g}):"]
        for i, n in enumerate(res.sizes):
            tail = f"  order {res.orders[i - 1]:.4f}" if i else ""
            lines.append(f"  n = {n:>5}: error {res.errors[i]:.6e}{tail}")
        lines.append(f"verdict: {'pass' if ok else 'FAIL'}")
    _emit(lines, args.output)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_catalog(args):
    cat = Catalog.load(args.catalog)
    if args.action == "list":
        lines = ["table,case,operators,substitutions"] \
            if args.format == "csv" else []
        for (t, c) in sorted(cat.entries):
            e = cat.entry(t, c)
            if args.format == "csv":
                lines.append(f"{t},{c},{'|'.join(e.operators)},"
                             f"{'|'.join(e.substitutions)}")
            else:
                lines.append(f"table {t} case {c:>2}: "
                             f"{', '.join(e.operators)}")
        _emit(lines, args.output)
        return EXIT_OK
    entry = _entry(cat, args)
    lines = [f"table {entry.table} case {entry.case_id}", "parameters:"]
    for k, v in sorted(entry.system.params().items()):
        lines.append(f"  {k} = {ex.render(v)}")
    if entry.restrictions:
        lines.append("restrictions (each must be nonzero): "
                     + ", ".join(ex.render(r) for r in entry.restrictions))
    lines.append("operators:")
    for name in entry.operators:
        op = cat.operator(name)
        lines.append(f"  {name}: xi0 = {ex.render(op.xi0)}, "
                     f"xi1 = {ex.render(op.xi1)}, "
                     f"eta1 = {ex.render(op.eta1)}, "
                     f"eta2 = {ex.render(op.eta2)}")
    if entry.substitutions:
        lines.append("substitutions: " + ", ".join(entry.substitutions))
    _emit(lines, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _build_parser():
    ap = argparse.ArgumentParser(
        prog="sktsym",
        description="Symmetry analysis and verification toolkit for a "
                    "two-species cross-diffusion system")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt=True):
        p.add_argument("--output", help="write the report to this path")
        p.add_argument("--catalog", default=None,
                       help="catalog file (default: packaged data or "
                            "SYMKIT_CATALOG)")
        if fmt:
            p.add_argument("--format", choices=("text", "csv"),
                           default="text")

    p = sub.add_parser("validate", help="check catalog entries for invariance")
    p.add_argument("--all", action="store_true")
    p.add_argument("--table", type=int)
    p.add_argument("--case", type=int)
    common(p)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("determining",
                       help="generate the determining-equation system")
    p.add_argument("--generic", action="store_true",
                   help="use fully symbolic coefficients")
    p.add_argument("--table", type=int)
    p.add_argument("--case", type=int)
    common(p, fmt=False)
    p.set_defaults(fn=_cmd_determining)

    p = sub.add_parser("check", help="check one entry (optionally one operator)")
    p.add_argument("--table", type=int, required=True)
    p.add_argument("--case", type=int, required=True)
    p.add_argument("--operator")
    common(p, fmt=False)
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("commutators",
                       help="commutator table and closure for an entry")
    p.add_argument("--table", type=int, required=True)
    p.add_argument("--case", type=int, required=True)
    common(p, fmt=False)
    p.set_defaults(fn=_cmd_commutators)

    p = sub.add_parser("verify-solution",
                       help="residual check for a solution family")
    p.add_argument("--family", required=True)
    p.add_argument("--system")
    p.add_argument("--branch", choices=("upper", "lower"), default="upper")
    p.add_argument("--file", help="load the family from a solution file")
    p.add_argument("--bind", action="append", metavar="k=v")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(fn=_cmd_verify_solution)

    p = sub.add_parser("orbit", help="one-parameter group action on a family")
    p.add_argument("--family", required=True)
    p.add_argument("--system")
    p.add_argument("--branch", choices=("upper", "lower"), default="upper")
    p.add_argument("--generator", choices=("X1", "X2"), default="X1")
    p.add_argument("--bind", action="append", metavar="k=v")
    common(p, fmt=False)
    p.set_defaults(fn=_cmd_orbit)

    p = sub.add_parser("reduce",
                       help="symmetry reduction to an ODE system in time")
    p.add_argument("--system")
    common(p, fmt=False)
    p.set_defaults(fn=_cmd_reduce)

    p = sub.add_parser("flux-check",
                       help="zero-gradient check at interval endpoints")
    p.add_argument("--family", required=True)
    p.add_argument("--system")
    p.add_argument("--branch", choices=("upper", "lower"), default="upper")
    p.add_argument("--bind", action="append", metavar="k=v")
    p.add_argument("--x0", default="0")
    p.add_argument("--x1", default="pi")
    common(p, fmt=False)
    p.set_defaults(fn=_cmd_flux_check)

    p = sub.add_parser("simulate", help="finite-difference run from a config")
    p.add_argument("--config", required=True)
    common(p, fmt=False)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("convergence", help="grid-refinement error ladder")
    p.add_argument("--family", required=True)
    p.add_argument("--system")
    p.add_argument("--branch", choices=("upper", "lower"), default="upper")
    p.add_argument("--bind", action="append", metavar="k=v")
    p.add_argument("--sizes", default="64,128,256")
    p.add_argument("--t-end", type=float, default=0.2, dest="t_end")
    p.add_argument("--first-order", action="store_true",
                   help="use the deliberately first-order stencil")
    common(p)
    p.set_defaults(fn=_cmd_convergence)

    p = sub.add_parser("catalog", help="list or show catalog entries")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("--table", type=int)
    p.add_argument("--case", type=int)
    common(p)
    p.set_defaults(fn=_cmd_catalog)

    return ap


def main(argv=None):
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: file not found: {exc.filename}\n")
        return EXIT_NOFILE
    except (ex.ExprError, inv.TransformError, CatalogError,
            so.SolutionError, sim.SimulatorError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
