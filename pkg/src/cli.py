"""
Command-line entry point.

Exit codes: 0 success, 1 a verification or decoding check failed,
2 invalid input.
"""

import argparse
import asyncio
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from src import logging
from src import instance as instance_io
from src import schedules
from src.asymptotics import ZParams, sweep, vp_inequality_grid, z_value, z_value_inverse_form
from src.coding import simulate_with_retries
from src.config import FIELD_BITS, MAX_RETRIES
from src.duality import check_witness, construct_witness_general, construct_witness_m1, to_dump
from src.errors import ClosedFormRegimeError, InputError
from src.lp_core import build_lp, check_feasible, solve_exact
from src.models import LpFamily, Provenance, SweepRow, WitnessKind, format_fraction
from src.quantities import derive_params

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(output).write_text(text)
        logger.info(f"Wrote {output}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen(args: argparse.Namespace) -> int:
    inst = instance_io.generate_random(args.clients, args.unreliable, args.packets, args.alpha, args.seed)
    _emit(instance_io.dumps(inst), args.output)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    inst = instance_io.load(args.input)
    method = Provenance(args.method)
    if method is Provenance.LP_EXACT:
        schedule, _ = schedules.lp_schedule(inst, args.which)
    elif method is Provenance.CLOSED_GENERAL:
        schedule = schedules.closed_form_general(inst)
    elif method is Provenance.CLOSED_M1:
        schedule = schedules.closed_form_m1(inst)
    elif method is Provenance.CLOSED_M0:
        schedule = schedules.closed_form_m0(inst)
    else:
        raise InputError(f"'{args.method}' is not a solve method", field="method")
    logger.info(f"Schedule {method.value}: total {schedules.total(schedule)}")
    _emit(schedules.dumps(schedule), args.output)
    return EXIT_OK


def cmd_lp(args: argparse.Namespace) -> int:
    inst = instance_io.load(args.input)
    lp, relabeling = build_lp(inst, args.which)
    if args.dump:
        _emit(lp.dumps(), args.output)
        return EXIT_OK

    solution = solve_exact(lp, pivot=args.pivot)
    payload = {
        "which": LpFamily(args.which).value,
        "constraints": len(lp),
        "optimum": format_fraction(solution.value),
        "r": [format_fraction(v) for v in relabeling.to_original(list(solution.r))],
        "relabeling": list(relabeling.order),
        "pivots": solution.pivots,
    }
    _emit(json.dumps(payload, indent=2), args.output)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    inst = instance_io.load(args.input)
    schedule = schedules.load(args.schedule)
    if len(schedule.values) != inst.n_clients:
        raise InputError(
            f"schedule has {len(schedule.values)} entries for {inst.n_clients} clients", field="counts"
        )
    lp, relabeling = build_lp(inst, args.against)
    violations = check_feasible(lp, relabeling.to_relabeled(list(schedule.values)))

    lines = []
    for v in violations:
        clients = sorted(relabeling.original(c) for c in v.clients)
        lines.append(f"violated: sum over {clients} = {v.lhs} < {v.rhs} (slack {v.slack})")
    lines.append(f"{len(violations)} violated constraint(s) of {len(lp)}; total {schedules.total(schedule)}")
    _emit("\n".join(lines), args.output)
    return EXIT_FAILED if violations else EXIT_OK


def cmd_dual(args: argparse.Namespace) -> int:
    inst = instance_io.load(args.input)
    params = derive_params(inst.n_clients, inst.n_unreliable)
    kind = WitnessKind(args.which)
    if kind is WitnessKind.GENERAL:
        lp, _ = build_lp(inst, LpFamily.OVER_GENERAL)
        witness = construct_witness_general(params)
        closed = schedules.closed_form_general_values(inst)
    else:
        lp, _ = build_lp(inst, LpFamily.M1_OVER)
        witness = construct_witness_m1(params)
        closed = schedules.closed_form_m1_values(inst)

    check = check_witness(lp, witness)
    dump = to_dump(witness, check, closed_total=closed.total)
    _emit(dump.model_dump_json(indent=2), args.output)
    return EXIT_OK if check.dual_feasible and check.objective == closed.total else EXIT_FAILED


def cmd_simulate(args: argparse.Namespace) -> int:
    inst = instance_io.load(args.input)
    schedule = schedules.load(args.schedule)
    report = simulate_with_retries(inst, schedule, field_bits=args.field_bits, max_retries=args.retries, seed=args.seed)
    _emit(report.model_dump_json(indent=2), args.output)
    return EXIT_FAILED if report.persistent_failure else EXIT_OK


def cmd_asymptotics(args: argparse.Namespace) -> int:
    N, M, alpha = args.clients, args.unreliable, args.alpha
    P = N - M - 1
    if P < 1:
        raise InputError(f"degenerate instance: N={N} < M+2={M + 2}", field="clients")

    lines = ["V,Z,Z_inverse_form,V/P"]
    for V in range(1, P + 1):
        params = ZParams(M, V, N, alpha)
        lines.append(f"{V},{z_value(params):.12g},{z_value_inverse_form(params):.12g},{V / P:.12g}")
    violations = vp_inequality_grid(alphas=[alpha], max_p=P, max_n=N)
    lines.append(f"# V/P inequality violations at alpha={alpha}: {len(violations)}")
    _emit("\n".join(lines), args.output)
    return EXIT_FAILED if violations else EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    seeds = list(range(args.seed, args.seed + args.trials))
    if args.redis:
        rows = asyncio.run(_sweep_redis(args, seeds))
    else:
        rows = sweep(args.clients, args.unreliable, args.alpha, args.packets, seeds, workers=args.workers)

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(SweepRow.model_fields))
    writer.writeheader()
    for row in rows:
        writer.writerow(row.model_dump())
    _emit(buffer.getvalue(), args.output)

    infeasible = sum(1 for r in rows if not r.feasible_for_full)
    gaps = [Fraction(r.closed_total) - Fraction(r.lp_opt) for r in rows]
    logger.info(f"Sweep done: {len(rows)} rows, {infeasible} infeasible for full, {gaps.count(0)} with zero gap")
    return EXIT_OK


async def _sweep_redis(args: argparse.Namespace, seeds: list[int]) -> list[SweepRow]:
    from src.queue import close_pool, enqueue_sweep_trials, init_pool

    await init_pool()
    try:
        return await enqueue_sweep_trials(args.clients, args.unreliable, args.alpha, args.packets, seeds)
    finally:
        await close_pool()


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdx", description="Robust cooperative data exchange toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output(p: argparse.ArgumentParser) -> None:
        p.add_argument("-o", "--output", default=None, help="output file (default stdout)")

    def add_shape(p: argparse.ArgumentParser, packets: bool = True) -> None:
        p.add_argument("--clients", type=int, required=True, help="N")
        p.add_argument("--unreliable", type=int, default=0, help="M")
        p.add_argument("--alpha", type=float, default=0.5)
        if packets:
            p.add_argument("--packets", type=int, required=True, help="K")

    p = sub.add_parser("gen", help="generate a random instance")
    add_shape(p)
    p.add_argument("--seed", type=int, default=0)
    add_output(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="compute a schedule")
    p.add_argument("-i", "--input", required=True)
    p.add_argument(
        "--method",
        choices=[m.value for m in Provenance if m is not Provenance.GRID],
        default=Provenance.LP_EXACT.value,
    )
    p.add_argument("--which", choices=[f.value for f in LpFamily], default=LpFamily.FULL.value)
    add_output(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("lp", help="solve or dump an LP family")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--which", choices=[f.value for f in LpFamily], default=LpFamily.FULL.value)
    p.add_argument("--pivot", choices=["bland", "bland-reverse"], default="bland")
    p.add_argument("--dump", action="store_true", help="print the constraints instead of solving")
    add_output(p)
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("verify", help="check a schedule against an LP family")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-s", "--schedule", required=True)
    p.add_argument("--against", "--which", choices=[f.value for f in LpFamily], default=LpFamily.FULL.value)
    add_output(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("dual", help="construct and check a dual witness")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--which", choices=[k.value for k in WitnessKind], default=WitnessKind.GENERAL.value)
    add_output(p)
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("simulate", help="simulate coded broadcast of a schedule")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-s", "--schedule", required=True)
    p.add_argument("--field-bits", type=int, choices=[8, 16], default=FIELD_BITS)
    p.add_argument("--retries", type=int, default=MAX_RETRIES)
    p.add_argument("--seed", type=int, default=0)
    add_output(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("asymptotics", help="print limiting demand fractions")
    add_shape(p, packets=False)
    add_output(p)
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("sweep", help="closed form vs exact optimum over K and seeds")
    p.add_argument("--clients", type=int, required=True)
    p.add_argument("--unreliable", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--packets", type=int, nargs="+", required=True, help="list of K values")
    p.add_argument("--trials", type=int, default=30, help="seeds per K")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--redis", action="store_true", help="fan out through the ARQ queue")
    add_output(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT

    try:
        return args.func(args)
    except InputError as e:
        where = f" ({e.field})" if e.field else ""
        logger.error(f"Invalid input{where}: {e}")
        return EXIT_INPUT
    except ClosedFormRegimeError as e:
        logger.error(str(e))
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
