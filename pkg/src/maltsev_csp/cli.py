"""Command-line entry point.

Exit status: 0 for SAT / ACCEPT / success, 1 for UNSAT / REJECT, 2 for usage
and validation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .algebra import AlgebraError, OperationTable, load_algebra, validate_gmm, validate_maltsev
from .certificate import RejectAtStep, check_certificate, emit_certificate
from .gmm import solve_gmm
from .instance import InstanceError, parse_instance
from .maltsev import SolverError, solve
from .oracle import DEFAULT_BUDGET, FAMILIES, BudgetExceeded, GeneratorSpec, ParameterError, brute_signature, enumerate_solutions, generate

EXIT_OK, EXIT_NO, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _read(path: str | None, what: str) -> str:
    if path is None:
        raise UsageError(f"--{what} is required")
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path}: {exc.strerror}") from exc


def _load_instance(args):
    try:
        return parse_instance(_read(args.instance, "instance"))
    except InstanceError as exc:
        raise UsageError(f"bad instance: {exc}") from exc


def _load_algebra(args) -> OperationTable:
    try:
        return load_algebra(_read(args.algebra, "algebra"))
    except AlgebraError as exc:
        raise UsageError(f"bad algebra: {exc}") from exc


def cmd_solve(args, out) -> int:
    inst = _load_instance(args)
    op = _load_algebra(args)
    try:
        outcome = solve_gmm(inst, op) if args.gmm else solve(inst, op)
    except SolverError as exc:
        raise UsageError(str(exc)) from exc
    if outcome.sat:
        if args.json:
            print(_dump({"verdict": "sat", "witness": list(outcome.witness)}), file=out)
        else:
            print("SAT", file=out)
            print(_dump(list(outcome.witness)), file=out)
        return EXIT_OK
    total = sum(rep.size() for rep in outcome.reps)
    if args.cert:
        Path(args.cert).write_text(emit_certificate(outcome))
    if args.json:
        print(_dump({"verdict": "unsat", "m": inst.m, "witnesses": total, "certificate": args.cert}), file=out)
    else:
        print(f"UNSAT m={inst.m} witnesses={total}", file=out)
        if args.cert:
            print(f"certificate written to {args.cert}", file=out)
    return EXIT_NO


def cmd_check(args, out) -> int:
    inst = _load_instance(args)
    op = _load_algebra(args)
    text = _read(args.cert, "cert")
    try:
        check_certificate(inst, op, text)
    except RejectAtStep as exc:
        if args.json:
            print(_dump({"verdict": "reject", "step": exc.step, "reason": exc.reason}), file=out)
        else:
            where = "header" if exc.step is None else f"step {exc.step}"
            print(f"REJECT {where}: {exc.reason}", file=out)
        return EXIT_NO
    print(_dump({"verdict": "accept"}) if args.json else "ACCEPT", file=out)
    return EXIT_OK


def cmd_gen(args, out) -> int:
    spec = GeneratorSpec(
        family=args.family,
        n=args.n,
        m=args.m,
        seed=args.seed,
        satisfiable=not args.unsat,
        p=args.p,
        group=args.group,
        q=args.q,
        budget=args.budget,
    )
    try:
        g = generate(spec)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    dest = Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "instance.json").write_text(g.instance.dumps() + "\n")
    (dest / "algebra.json").write_text(g.algebra.dumps() + "\n")
    manifest = {
        "family": spec.family,
        "n": spec.n,
        "m": spec.m,
        "p": spec.p,
        "q": spec.q,
        "group": spec.group,
        "seed": spec.seed,
        "satisfiable": spec.satisfiable,
        "planted": None if g.planted is None else list(g.planted),
        "instance_digest": g.instance.digest(),
        "algebra_digest": g.algebra.digest(),
    }
    (dest / "manifest.json").write_text(_dump(manifest) + "\n")
    print(_dump({"out": str(dest), "m": g.instance.m}) if args.json else f"wrote {dest}", file=out)
    return EXIT_OK


def cmd_validate(args, out) -> int:
    op = _load_algebra(args)
    report: dict = {"q": op.q, "arity": op.arity}
    try:
        verdict = validate_maltsev(op)
        report["maltsev"] = bool(verdict)
        if not verdict:
            report["maltsev_violation"] = list(verdict.witness)
    except AlgebraError as exc:
        report["maltsev"] = False
        report["maltsev_violation"] = str(exc)
    try:
        kinds = validate_gmm(op)
        report["gmm"] = True
        report["pairs"] = [[a, b, kind.value] for (a, b), kind in sorted(kinds.items())]
    except AlgebraError as exc:
        report["gmm"] = False
        report["gmm_violation"] = str(exc)
    ok = report["gmm"] if args.gmm else report["maltsev"]
    if args.json:
        print(_dump(report), file=out)
    else:
        print(f"maltsev: {'yes' if report['maltsev'] else 'no'}", file=out)
        if "maltsev_violation" in report:
            print(f"  violation: {report['maltsev_violation']}", file=out)
        print(f"gmm: {'yes' if report['gmm'] else 'no'}", file=out)
        for a, b, kind in report.get("pairs", []):
            print(f"  {{{a},{b}}} {kind}", file=out)
        if "gmm_violation" in report:
            print(f"  violation: {report['gmm_violation']}", file=out)
    return EXIT_OK if ok else EXIT_USAGE


def cmd_oracle(args, out) -> int:
    inst = _load_instance(args)
    try:
        sols = enumerate_solutions(inst, args.budget)
    except BudgetExceeded as exc:
        raise UsageError(str(exc)) from exc
    sig = sorted(brute_signature(inst, args.budget, solutions=sols))
    if args.json:
        print(_dump({"solutions": len(sols), "signature": [list(t) for t in sig]}), file=out)
    else:
        print(f"solutions {len(sols)}", file=out)
        print("signature " + " ".join(f"({i},{a},{b})" for i, a, b in sig), file=out)
    return EXIT_OK if sols else EXIT_NO


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", metavar="PATH")
    common.add_argument("--algebra", metavar="PATH")
    common.add_argument("--gmm", action="store_true", help="use the GMM solver")
    common.add_argument("--cert", metavar="PATH")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, metavar="N")
    common.add_argument("--seed", type=int, default=0, metavar="N")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    parser = argparse.ArgumentParser(prog="maltsev-csp", description="Binary CSP solving with Mal'tsev and GMM polymorphisms.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve an instance").set_defaults(fn=cmd_solve)
    sub.add_parser("check", parents=[common], help="check an unsatisfiability certificate").set_defaults(fn=cmd_check)
    gen = sub.add_parser("gen", parents=[common], help="generate a seeded instance")
    gen.add_argument("--family", choices=FAMILIES, required=True)
    gen.add_argument("--n", type=int, default=4)
    gen.add_argument("--m", type=int, default=6)
    gen.add_argument("--p", type=int, default=2, help="field size (lin_p) or cyclic group order (coset)")
    gen.add_argument("--q", type=int, default=3, help="domain size (random_invariant)")
    gen.add_argument("--group", choices=("cyclic", "s3"), default="cyclic")
    gen.add_argument("--unsat", action="store_true")
    gen.add_argument("--out", required=True, metavar="DIR")
    gen.set_defaults(fn=cmd_gen)
    sub.add_parser("validate-algebra", parents=[common], help="check the Mal'tsev / GMM identities").set_defaults(fn=cmd_validate)
    sub.add_parser("oracle", parents=[common], help="brute-force solution count and signature").set_defaults(fn=cmd_oracle)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
