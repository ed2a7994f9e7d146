"""Command-line front end: ``pain2 {verify, integrate, recover, catalog}``.

Exit status is 0 when everything requested passed, 1 when a check or a run
failed, and 2 on usage errors.  Every subcommand accepts ``--config PATH``,
a file of ``key=value`` lines whose keys are the long option names; options
given on the command line win over the file.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from fractions import Fraction

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    """Malformed option value (reported with exit status 2)."""


def parse_number(text: str):
    """``Fraction`` for rationals such as ``-1/2``, else a complex (``i`` or ``j`` suffix)."""
    text = text.strip().replace(" ", "")
    try:
        return Fraction(text)
    except ValueError:
        pass
    try:
        return complex(text.replace("i", "j"))
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def parse_assignments(text: str) -> dict:
    """``"x=0,y=1"`` -> ``{"x": Fraction(0), "y": Fraction(1)}``."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"expected name=value, got {item!r}")
        out[name.strip()] = parse_number(value)
    return out


def parse_path(text: str) -> list:
    """``"0 -> 3+2i -> 3"`` -> list of complex time nodes."""
    nodes = [parse_number(p) for p in text.split("->")]
    if len(nodes) < 2:
        raise UsageError("a path needs at least two nodes separated by '->'")
    return [complex(n) for n in nodes]


def read_config(path: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_string("[pain2]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in cp["pain2"].items()}


def _truthy(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


# ----- subcommands ----------------------------------------------------------


def cmd_verify(args) -> int:
    from .io.report import reports_to_json, run_suite

    def show(rep):
        if not args.quiet:
            line = f"{rep.status.upper():5} {rep.id}"
            if rep.residual:
                line += f"  {rep.residual[:200]}"
            print(line, flush=True)

    reports = run_suite(args.suite, progress=show)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(reports_to_json(reports) + "\n")
    counts = {s: sum(r.status == s for r in reports) for s in ("pass", "fail", "error")}
    print(f"{len(reports)} checks: {counts['pass']} passed, {counts['fail']} failed, {counts['error']} errors")
    return EXIT_OK if counts["pass"] == len(reports) else EXIT_FAIL


def cmd_integrate(args) -> int:
    from .numerics import (
        ContinuationError,
        NumParams,
        StepLimitExceeded,
        StepSizeUnderflow,
        continue_through_pole,
        integrate,
    )
    from .systems import build_system

    S = build_system(args.system)
    relation = S.params.relation
    consts = tuple(parse_assignments(args.constants).items()) if args.constants else ()
    alpha1 = parse_number(args.alpha1) if args.alpha1 is not None else None
    if relation is None and alpha1 is None:
        raise UsageError(f"system {args.system} has no parameter relation; --alpha1 is required")
    p = NumParams(parse_number(args.alpha2), parse_number(args.alpha3), relation, alpha1, consts)
    init = parse_assignments(args.init)
    path = parse_path(args.path)
    try:
        if args.chart_switch:
            traj = continue_through_pole(S, p, init, path, tol=args.tol, threshold=args.threshold)
        else:
            traj = integrate(S, p, init, path, tol=args.tol)
    except (StepSizeUnderflow, StepLimitExceeded, ContinuationError) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(traj.to_json_lines())
    end = traj.final
    print(f"{len(traj.samples)} samples, {len(traj.switches)} chart switches, max local error {traj.max_error():.2e}")
    print(f"t = {end.t:.6g} (chart {end.chart})")
    for name, v in zip(traj.coords, traj.states[-1]):
        print(f"  {name} = {v:.12g}")
    return EXIT_OK


def cmd_recover(args) -> int:
    from .holomorphy import THEOREM2_CHARTS, HamAnsatz, recover_hamiltonian
    from .io.expr import print_expr

    charts = []
    for c in filter(None, (s.strip() for s in args.charts.split(","))):
        if c.isdigit():
            k = int(c)
            if not 1 <= k <= len(THEOREM2_CHARTS):
                raise UsageError(f"chart number {k} out of range 1..{len(THEOREM2_CHARTS)}")
            c = THEOREM2_CHARTS[k - 1]
        charts.append(c)
    rec = recover_hamiltonian(charts, HamAnsatz(degree=args.degree))
    out = {
        "degree": args.degree,
        "charts": list(rec.charts),
        "unknowns": len(rec.ansatz.unknowns()),
        "equations": rec.n_equations,
        "dimension": rec.dimension,
        "particular": print_expr(rec.particular),
        "kernel": [print_expr(k) for k in rec.kernel],
    }
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(out, fh, indent=2)
            fh.write("\n")
    print(f"{out['unknowns']} unknowns, {out['equations']} equations, solution space dimension {out['dimension']}")
    if out["dimension"] <= 8:
        print(f"particular: {out['particular']}")
        for k in out["kernel"]:
            print(f"kernel:     {k}")
    return EXIT_OK


def cmd_catalog(args) -> int:
    from .holomorphy import CHART_IDS, build_chart
    from .systems import SYSTEM_IDS, build_system
    from .transforms import MAP_IDS, build_map

    if args.id is None:
        print("systems: " + " ".join(SYSTEM_IDS))
        print("maps:    " + " ".join(MAP_IDS))
        print("charts:  " + " ".join(CHART_IDS))
        return EXIT_OK
    if args.id in SYSTEM_IDS:
        S = build_system(args.id)
        print(f"{S.id}: {S.anchor}")
        if S.params.relation is not None:
            print(f"relation: 2*alpha1 + 2*alpha2 + alpha3 = {S.params.relation} (alpha1 eliminated)")
        if S.hamiltonian is not None:
            print(f"H = {S.hamiltonian}")
        print(S.vector_field)
    elif args.id in MAP_IDS:
        M = build_map(args.id)
        print(f"{M.id}: {M.anchor}")
        for c, f in zip(M.coords, M.eliminated):
            print(f"{c} -> {f}")
        for n, e in M.param_action:
            print(f"{n} -> {e}")
    elif args.id in CHART_IDS:
        C = build_chart(args.id)
        print(f"{C.id}: {C.anchor}")
        for n, f in zip(C.new, C.forward):
            print(f"{n} = {f}")
        print(f"correction: {C.correction}")
    else:
        raise UsageError(f"unknown catalog id {args.id!r}")
    return EXIT_OK


# ----- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pain2",
        description="Exact and numerical verification for coupled Painleve II Hamiltonian systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="{verify,integrate,recover,catalog}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key=value file with option defaults")

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", default="all", choices=("all", "symmetry", "holomorphy", "structures", "two-time"))
    v.add_argument("--json", metavar="PATH", help="write the report array as JSON")
    v.add_argument("--quiet", action="store_true", help="only print the summary line")
    v.set_defaults(func=cmd_verify)

    i = sub.add_parser("integrate", parents=[common], help="integrate a system in complex time")
    i.add_argument("--system", default="main")
    i.add_argument("--alpha1", default=None, help="only for systems without a parameter relation")
    i.add_argument("--alpha2", default="1/2")
    i.add_argument("--alpha3", default="1/4")
    i.add_argument("--constants", default=None, help='family constants, e.g. "a=-3,a1=2,a2=1/4,a3=-1"')
    i.add_argument("--init", required=True, help='initial state, e.g. "x=0,y=1,z=0,w=1"')
    i.add_argument("--path", required=True, help='complex time polyline, e.g. "0 -> 3+2i"')
    i.add_argument("--tol", type=float, default=1e-10)
    i.add_argument("--chart-switch", action="store_true", help="continue through poles by switching charts")
    i.add_argument("--threshold", type=float, default=1e3, help="coordinate size that triggers a switch")
    i.add_argument("--json", metavar="PATH", help="write the trajectory as JSON lines")
    i.set_defaults(func=cmd_integrate)

    r = sub.add_parser("recover", parents=[common], help="recover the Hamiltonian from chart conditions")
    r.add_argument("--degree", type=int, default=5)
    r.add_argument("--charts", default="1,2,3", help="chart numbers or chart ids, comma separated")
    r.add_argument("--json", metavar="PATH")
    r.set_defaults(func=cmd_recover)

    c = sub.add_parser("catalog", parents=[common], help="print a catalog entry")
    c.add_argument("--id", default=None, help="system, map or chart id (omit to list all)")
    c.set_defaults(func=cmd_catalog)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    command = next((a for a in rest if not a.startswith("-")), None)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    target = sub.choices.get(command)
    if target is None:
        return
    dests = {a.dest: a for a in target._actions}
    for k, val in values.items():
        if k not in dests or k in ("help", "config", "func"):
            raise UsageError(f"unknown config key {k!r} for {command}")
        if isinstance(dests[k], argparse._StoreTrueAction):
            val = _truthy(val)
        dests[k].required = False
        target.set_defaults(**{k: val})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pain2: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, KeyError, ValueError) as exc:
        print(f"pain2 {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run_cli(argv) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
