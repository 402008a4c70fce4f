"""Command-line entry point: ``sosfrac {check,solve,certify,kkt,oracle} PROBLEM``."""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import verify
from .cct import CctPoint, SolveConfig, Status, assemble_D, assemble_Q, solve_fractional
from .fileio import (
    SCHEMA_VERSION,
    ParseError,
    ValidationError,
    dumps,
    load_problem,
    report_to_dict,
)
from .sdp import SolverSettings, write_sdpa
from .sos import GramCertificate, Verdict, hessian_form, is_sos_convex

EXIT_USAGE = 64
EXIT_PARSE = 65
EXIT_NOINPUT = 66
EXIT_VALIDATION = 67

STATUS_EXIT = {
    Status.SOLVED: 0,
    Status.SOLVED_VALUE_ONLY: 2,
    Status.INFEASIBLE: 3,
    Status.ASSUMPTION_VIOLATED: 4,
    Status.NUMERICAL_TROUBLE: 5,
    Status.UNBOUNDED: 6,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _numbers(text: str) -> list[float]:
    """Comma-separated reals; fractions such as ``37/3`` are accepted."""
    try:
        return [float(Fraction(tok.strip())) for tok in text.split(",") if tok.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}: {exc}") from None


def _box(text: str) -> list[list[float]]:
    """``lo,hi`` for every variable, or ``lo1,hi1;lo2,hi2;...``."""
    parts = [_numbers(p) for p in text.split(";") if p.strip()]
    if any(len(p) != 2 for p in parts):
        raise argparse.ArgumentTypeError(f"box must be 'lo,hi' pairs separated by ';', got {text!r}")
    return parts


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", type=Path, help="problem JSON file")
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    common.add_argument("--psd-tol", type=float, default=1e-8)
    common.add_argument("--gram-tol", type=float, default=1e-7)
    common.add_argument("--gap-tol", type=float, default=1e-5)
    common.add_argument("--attainment-tol", type=float, default=1e-6)
    common.add_argument("--feas-tol", type=float, default=1e-6)
    common.add_argument("--kkt-tol", type=float, default=1e-7)
    common.add_argument(
        "--solvers", default="CVXOPT,CLARABEL", help="comma-separated backend order (default: %(default)s)"
    )
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="sosfrac", description="SOS-convex fractional programs via the Charnes-Cooper transformation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("check", parents=[common], help="SOS-convexity screening of f, g and every h_i")
    for name, text in [("solve", "solve and verify"), ("certify", "solve and emit certificates and moments")]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--no-screen", action="store_true", help="skip SOS-convexity screening")
        p.add_argument("--oracle", choices=["auto", "on", "off"], default="auto")
        p.add_argument("--box", type=_box, help="oracle box")
        p.add_argument("--steps", type=int, help="oracle grid steps per dimension")
        p.add_argument("--dump-sdp", type=Path, help="write the moment program here (SOS program to <stem>.D<suffix>)")
    p = sub.add_parser("kkt", parents=[common], help="KKT residuals of the perspective reformulation")
    p.add_argument("--point", type=_numbers, required=True, help="s_1,...,s_n,t")
    p.add_argument("--multipliers", type=_numbers, required=True, help="lambda_1,...,lambda_m,lambda_(m+1)")
    p.add_argument(
        "--uncleared",
        action="store_true",
        help="use t*h(s/t) rows as written instead of multiplying by t^(deg-1)",
    )
    p = sub.add_parser("oracle", parents=[common], help="brute-force grid minimum of f/(-g)")
    p.add_argument("--box", type=_box, help="lo,hi or lo1,hi1;lo2,hi2 (default [-10, 10]^n); write --box=-2,2 when lo is negative")
    p.add_argument("--steps", type=int, help="grid points per dimension")
    return parser


def _config(args) -> SolveConfig:
    oracle = getattr(args, "oracle", "auto")
    return SolveConfig(
        psd_tol=args.psd_tol,
        gram_tol=args.gram_tol,
        gap_tol=args.gap_tol,
        attainment_tol=args.attainment_tol,
        feas_tol=args.feas_tol,
        kkt_tol=args.kkt_tol,
        screen=not getattr(args, "no_screen", False),
        oracle=None if oracle == "auto" else oracle == "on",
        oracle_box=getattr(args, "box", None),
        oracle_steps=getattr(args, "steps", None),
        solver=SolverSettings(solvers=tuple(s.strip().upper() for s in args.solvers.split(",") if s.strip())),
    )


def _cmd_check(fp, cfg):
    named = {"f": fp.f, "g": fp.g}
    if not fp.sentinel:
        named.update({f"h{i + 1}": h for i, h in enumerate(fp.h)})
    results, verdicts = {}, []
    for name, p in named.items():
        res = is_sos_convex(p, cfg.psd_tol, cfg.gram_tol, cfg.solver)
        entry = {"verdict": res.verdict.value}
        if isinstance(res, GramCertificate):
            entry["min_eigenvalue"] = res.min_eigenvalue
            entry["coefficient_residual"] = verify.gram_residual(hessian_form(p), res)
        else:
            entry["reason"] = res.reason
        results[name] = entry
        verdicts.append(res.verdict)
    if Verdict.REFUTED in verdicts:
        overall, code = Verdict.REFUTED, 4
    elif Verdict.INDETERMINATE in verdicts:
        overall, code = Verdict.INDETERMINATE, 5
    else:
        overall, code = Verdict.CERTIFIED, 0
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "check",
        "status": overall.value,
        "results": results,
        "config_echo": cfg.echo(),
    }
    return doc, code


def _cmd_solve(fp, cfg, args):
    if args.dump_sdp:
        path = args.dump_sdp
        write_sdpa(assemble_Q(fp), path)
        write_sdpa(assemble_D(fp), path.with_name(f"{path.stem}.D{path.suffix}"))
    report = solve_fractional(fp, cfg)
    full = args.command == "certify"
    doc = report_to_dict(report, args.command, certificates=full, moments=full)
    return doc, STATUS_EXIT[report.status]


def _cmd_kkt(fp, cfg, args):
    pt = args.point
    if len(pt) != fp.n + 1:
        raise ValidationError(f"--point needs n + 1 = {fp.n + 1} numbers, got {len(pt)}")
    if len(args.multipliers) != fp.m + 1:
        raise ValidationError(f"--multipliers needs m + 1 = {fp.m + 1} numbers, got {len(args.multipliers)}")
    if not pt[-1] > 0:
        raise ValidationError("t must be positive")
    point = CctPoint(np.array(pt[:-1]), pt[-1])
    stat, comp = verify.kkt_residual_pcct(fp, point, args.multipliers, clear_denominators=not args.uncleared)
    ok = stat <= cfg.kkt_tol and comp <= cfg.kkt_tol
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "kkt",
        "status": "Pass" if ok else "Fail",
        "stationarity": stat,
        "complementarity": comp,
        "point": list(pt),
        "multipliers": list(args.multipliers),
        "clear_denominators": not args.uncleared,
        "config_echo": cfg.echo(),
    }
    return doc, 0 if ok else 1


def _cmd_oracle(fp, cfg, args):
    box = args.box or verify.default_box(None, fp.n)
    if len(box) == 1 and fp.n > 1:
        box = box * fp.n
    steps = args.steps or verify.default_steps(fp.n)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "oracle",
        "box": box,
        "steps": [steps] * fp.n,
        "config_echo": cfg.echo(),
    }
    try:
        res = verify.grid_oracle(fp, box, steps)
    except verify.EmptyFeasibleGrid:
        doc.update(status="EmptyFeasibleGrid", value=None, argmin=None, feasible_count=0)
        return doc, 3
    doc.update(
        status="Feasible",
        value=res.value,
        argmin=res.argmin.tolist(),
        feasible_count=res.feasible_count,
        spacing=res.spacing.tolist(),
        slack=res.slack,
    )
    return doc, 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    cfg = _config(args)
    try:
        fp = load_problem(args.problem)
        if args.command == "check":
            doc, code = _cmd_check(fp, cfg)
        elif args.command in ("solve", "certify"):
            doc, code = _cmd_solve(fp, cfg, args)
        elif args.command == "kkt":
            doc, code = _cmd_kkt(fp, cfg, args)
        else:
            doc, code = _cmd_oracle(fp, cfg, args)
    except FileNotFoundError as exc:
        print(f"sosfrac: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except ParseError as exc:
        print(f"sosfrac: malformed JSON: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, ValueError) as exc:
        print(f"sosfrac: invalid problem: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    text = dumps(doc) + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
