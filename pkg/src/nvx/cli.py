"""``nvx`` command line: gen -> plan -> synth -> simulate -> report.

Exit codes: 0 success / clean run, 2 divergence alert, 3 invalid input,
4 infeasible or oversized partitioning problem, 5 lock-replay stall.
"""

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import partition, profile, trace
from .engine import Mode, SimulationConfig, run_simulation
from .errors import NvxError, PartitionError, StallError
from .report import dump_report, format_report, parse_report

EXIT_OK, EXIT_ALERT, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_STALL = 0, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors, which would read as an alert
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    variants: list
    plan: object = None
    mode: str = "strict"
    ring: int = 64
    handshake: int = 1
    selected: str = "iow"
    seed: int = 0
    out: object = None

    def check(self):
        if len(self.variants) < 2:
            raise NvxError("CONFIG", "simulate needs at least two variant traces")
        for path in list(self.variants) + ([self.plan] if self.plan else []):
            if not Path(path).is_file():
                raise NvxError("CONFIG", f"no such file: {path}")


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise NvxError("IO", f"cannot read {path}: {exc.strerror}")


def _write(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_gen(args):
    vulns = tuple(v for item in args.vuln for v in item.split(",") if v)
    spec = trace.WorkloadSpec(
        unit_count=args.units, event_count=args.events, syscall_ratio=args.syscall_ratio,
        lock_ratio=args.lock_ratio,
        cost_distribution=trace.CostDistribution.HEAVY_TAIL if args.heavy_tail else trace.CostDistribution.UNIFORM,
        vuln_units=vulns, seed=args.seed, threads=args.threads)
    generated = trace.generate_trace(spec)
    _write(args.out, trace.dump_trace(generated))
    if args.profile_out:
        implied = trace.profile_from_trace(generated, trace.unit_ids(args.units))
        _write(args.profile_out, profile.dump_profile(implied))
    return EXIT_OK


def cmd_plan(args):
    units = profile.load_units(_read(args.input))
    conflicts = units.conflict_set() if args.conflicts and hasattr(units, "conflict_set") else None
    plan = partition.plan_partition(units, args.n, conflicts)
    score = partition.evaluate_plan(plan, units)
    out = args.out or str(Path(args.input).with_suffix(".plan"))
    _write(out, partition.dump_plan(plan))
    if plan.has_empty_variants:
        print(f"warning: variants {plan.empty_variants} received no units", file=sys.stderr)
    print(f"n {plan.n}")
    print("loads " + " ".join(str(x) for x in plan.loads))
    print(f"objective {score.objective}")
    print(f"makespan {score.makespan}")
    print(f"target {score.target}")
    if args.oracle:
        best = partition.oracle_partition(units, args.n, conflicts)
        oscore = partition.evaluate_plan(best, units)
        print(f"oracle-objective {oscore.objective}")
        print(f"oracle-makespan {oscore.makespan}")
        if oscore.makespan:
            print(f"ratio {Fraction(score.makespan, oscore.makespan)}")
    return EXIT_OK


def cmd_synth(args):
    base = trace.parse_trace(_read(args.trace))
    plan = partition.parse_plan(_read(args.plan))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for v in range(plan.n):
        variant = trace.synthesize_variant(base, plan, v, args.report_cost)
        (outdir / f"variant-{v}.trace").write_text(trace.dump_trace(variant), encoding="utf-8")
    return EXIT_OK


def _manifest(args):
    data = {}
    base = Path(".")
    if args.manifest:
        base = Path(args.manifest).parent
        try:
            data = json.loads(_read(args.manifest))
        except json.JSONDecodeError as exc:
            raise NvxError("CONFIG", f"manifest is not valid JSON: {exc}")

    def pick(name, default):
        value = getattr(args, name)
        if value is not None:
            return value
        return data.get(name, default)

    def rel(p):
        return p if p is None or Path(p).is_absolute() else str(base / p)

    variants = args.variants or [rel(p) for p in data.get("variants", [])]
    plan = args.plan if args.plan is not None else rel(data.get("plan"))
    out = args.out if args.out is not None else rel(data.get("out"))
    return RunManifest(variants, plan, pick("mode", "strict"), pick("ring", 64), pick("handshake", 1),
                       pick("selected", "iow"), pick("seed", 0), out)


def cmd_simulate(args):
    m = _manifest(args)
    m.check()
    try:
        mode = Mode(m.mode)
        classes = frozenset(trace.SyscallClass(tok) for tok in m.selected.split(",") if tok)
    except ValueError as exc:
        raise NvxError("CONFIG", str(exc))
    config = SimulationConfig(mode, int(m.ring), int(m.handshake), classes, int(m.seed))
    variants = [trace.parse_trace(_read(p)) for p in m.variants]
    units = list(partition.parse_plan(_read(m.plan)).assignment) if m.plan else None
    report = run_simulation(variants, config, units)
    _write(m.out, dump_report(report))
    return EXIT_OK if report.clean else EXIT_ALERT


def cmd_report(args):
    sys.stdout.write(format_report(parse_report(_read(args.path))))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="nvx", description="Plan sanitizer distribution and simulate N-version execution.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a seeded synthetic trace")
    g.add_argument("--units", type=int, default=10)
    g.add_argument("--events", type=int, default=100)
    g.add_argument("--syscall-ratio", type=float, default=0.2)
    g.add_argument("--lock-ratio", type=float, default=0.0)
    g.add_argument("--threads", type=int, default=0, help="number of forked child traces")
    g.add_argument("--heavy-tail", action="store_true", help="concentrate >= 95%% of check cost in one unit")
    g.add_argument("--vuln", action="append", default=[], metavar="UNIT", help="vulnerable unit (repeatable)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="trace path (default stdout)")
    g.add_argument("--profile-out", help="also write the overhead profile implied by the trace")
    g.set_defaults(func=cmd_gen)

    pl = sub.add_parser("plan", help="partition a profile or catalog across N variants")
    pl.add_argument("input")
    pl.add_argument("--n", type=int, required=True)
    pl.add_argument("--conflicts", action="store_true", help="honor catalog conflict pairs")
    pl.add_argument("--oracle", action="store_true", help="also report the exhaustive optimum")
    pl.add_argument("--seed", type=int, default=0, help="accepted for uniformity; planning is deterministic")
    pl.add_argument("--out", help="plan path (default: input with .plan suffix)")
    pl.set_defaults(func=cmd_plan)

    s = sub.add_parser("synth", help="synthesize variant traces from a base trace and a plan")
    s.add_argument("trace")
    s.add_argument("--plan", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--report-cost", type=int, default=1)
    s.set_defaults(func=cmd_synth)

    sim = sub.add_parser("simulate", help="run the N-version engine over variant traces")
    sim.add_argument("variants", nargs="*")
    sim.add_argument("--manifest", help="JSON run manifest; explicit flags take precedence")
    sim.add_argument("--mode", choices=[m.value for m in Mode])
    sim.add_argument("--ring", type=int)
    sim.add_argument("--handshake", type=int)
    sim.add_argument("--selected", help="comma list of lockstepped classes, e.g. iow,ioo")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--plan", help="plan file, used to name the unit behind a report write")
    sim.add_argument("--out", help="report path (default stdout)")
    sim.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="pretty-print a report file")
    r.add_argument("path")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code
    try:
        return args.func(args)
    except StallError as exc:
        print(f"nvx: {exc}", file=sys.stderr)
        return EXIT_STALL
    except PartitionError as exc:
        print(f"nvx: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE if exc.code in ("INFEASIBLE", "TOO_LARGE") else EXIT_INVALID
    except NvxError as exc:
        print(f"nvx: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
