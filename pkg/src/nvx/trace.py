"""Annotated event traces: the stand-in for a running program.

A trace is a set of named sections.  The first section is the root process;
``fork`` events start the named section as a child process.  Variants are
synthesized from one base trace by stripping the sanity-check events of
units that a partition plan assigns elsewhere.
"""

import enum
from dataclasses import dataclass, replace

from .errors import TraceError
from .profile import OverheadProfile, ProtectionUnit
from .rng import MASK64, SplitMix64
from .textio import expect_header, join_lines, parse_uint, tokenized_lines

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x00000100000001B3

REPORT_WRITE_NUM = 1
REPORT_PREFIX = b"report:"


def digest_args(data):
    """64-bit FNV-1a over ``data``."""
    h = FNV_OFFSET
    for octet in data:
        h = ((h ^ octet) * FNV_PRIME) & MASK64
    return h


def report_digest(unit_id):
    return digest_args(REPORT_PREFIX + unit_id.encode("utf-8"))


class SyscallClass(enum.Enum):
    IO_WRITE = "iow"
    IO_OTHER = "ioo"
    MEM_MGMT = "mem"
    VIRTUAL = "virt"


class LockOp(enum.Enum):
    MUTEX_LOCK = "mutex-lock"
    MUTEX_UNLOCK = "mutex-unlock"
    COND_WAIT = "cond-wait"
    COND_SIGNAL = "cond-signal"
    BARRIER = "barrier"


class CostDistribution(enum.Enum):
    UNIFORM = "uniform"
    HEAVY_TAIL = "heavy-tail"


@dataclass(frozen=True)
class Compute:
    cost: int

    def render(self):
        return f"compute {self.cost}"


@dataclass(frozen=True)
class Check:
    unit: str
    cost: int

    def render(self):
        return f"check {self.unit} {self.cost}"


@dataclass(frozen=True)
class Syscall:
    number: int
    cls: SyscallClass
    arg: int
    result: int
    cost: int

    def render(self):
        return f"syscall {self.number} {self.cls.value} {self.arg:016x} {self.result:016x} {self.cost}"

    @property
    def is_report(self):
        return self.number == REPORT_WRITE_NUM and self.cls is SyscallClass.IO_WRITE


@dataclass(frozen=True)
class Lock:
    lock_id: str
    op: LockOp
    cost: int

    def render(self):
        return f"lock {self.lock_id} {self.op.value} {self.cost}"


@dataclass(frozen=True)
class Fork:
    child: str

    def render(self):
        return f"fork {self.child}"


@dataclass(frozen=True)
class MainEnter:
    def render(self):
        return "main-enter"


@dataclass(frozen=True)
class ExitBegin:
    def render(self):
        return "exit-begin"


@dataclass(frozen=True)
class Vuln:
    unit: str

    def render(self):
        return f"vuln {self.unit}"


MAIN_ENTER = MainEnter()
EXIT_BEGIN = ExitBegin()


@dataclass(frozen=True)
class Trace:
    """A base trace, or a variant trace when ``variant`` is set.

    ``sections`` maps trace id to its event tuple; ``root`` names the first
    process.  Every other section is the target of some ``fork``.
    """

    root: str
    sections: dict
    variant: object = None

    @property
    def events(self):
        return self.sections[self.root]

    def child_ids(self):
        return [tid for tid in self.sections if tid != self.root]

    def all_events(self):
        for events in self.sections.values():
            yield from events

    def check_units(self):
        """Unit ids referenced by CHECK and VULN events, in first-seen order."""
        seen = {}
        for ev in self.all_events():
            if isinstance(ev, (Check, Vuln)):
                seen.setdefault(ev.unit, None)
        return list(seen)


def _digest_token(tok, lineno):
    if len(tok) != 16 or any(c not in "0123456789abcdef" for c in tok):
        raise TraceError("SYNTAX", f"digest must be 16 lowercase hex digits, got {tok!r}", lineno)
    return int(tok, 16)


_CLASSES = {c.value: c for c in SyscallClass}
_LOCK_OPS = {op.value: op for op in LockOp}


def _parse_event(toks, lineno):
    kw, args = toks[0], toks[1:]

    def uint(tok):
        return parse_uint(tok, lineno, TraceError)

    if kw == "compute" and len(args) == 1:
        return Compute(uint(args[0]))
    if kw == "check" and len(args) == 2:
        return Check(args[0], uint(args[1]))
    if kw == "syscall" and len(args) == 5:
        if args[1] not in _CLASSES:
            raise TraceError("SYNTAX", f"unknown syscall class {args[1]!r}", lineno)
        return Syscall(uint(args[0]), _CLASSES[args[1]], _digest_token(args[2], lineno),
                       _digest_token(args[3], lineno), uint(args[4]))
    if kw == "lock" and len(args) == 3:
        if args[1] not in _LOCK_OPS:
            raise TraceError("SYNTAX", f"unknown lock op {args[1]!r}", lineno)
        return Lock(args[0], _LOCK_OPS[args[1]], uint(args[2]))
    if kw == "fork" and len(args) == 1:
        return Fork(args[0])
    if kw == "main-enter" and not args:
        return MAIN_ENTER
    if kw == "exit-begin" and not args:
        return EXIT_BEGIN
    if kw == "vuln" and len(args) == 1:
        return Vuln(args[0])
    raise TraceError("SYNTAX", f"unrecognized event {' '.join(toks)!r}", lineno)


def parse_trace(text):
    lines = tokenized_lines(text)
    expect_header(lines, "trace-version", 1, TraceError)
    sections = {}
    current = None
    for lineno, toks in lines:
        if toks[0] == "trace":
            if len(toks) != 2:
                raise TraceError("SYNTAX", "section header is 'trace <id>'", lineno)
            if toks[1] in sections:
                raise TraceError("SYNTAX", f"trace {toks[1]} defined twice", lineno)
            current = sections[toks[1]] = []
            continue
        if current is None:
            raise TraceError("SYNTAX", "event before the first 'trace <id>' header", lineno)
        current.append(_parse_event(toks, lineno))
    if not sections:
        raise TraceError("SYNTAX", "trace document has no sections")
    trace = Trace(next(iter(sections)), {tid: tuple(evs) for tid, evs in sections.items()})
    validate_trace(trace)
    return trace


def validate_trace(trace):
    for tid, events in trace.sections.items():
        for ev in events:
            if isinstance(ev, Fork) and ev.child not in trace.sections:
                raise TraceError("DANGLING_FORK", f"trace {tid} forks unknown trace {ev.child}")
            if isinstance(ev, Fork) and ev.child == trace.root:
                raise TraceError("FORK_CYCLE", f"trace {tid} forks the root trace")
    _check_acyclic(trace)
    for tid, events in trace.sections.items():
        _check_window(tid, events, is_root=tid == trace.root)


def _check_acyclic(trace):
    state = {}

    def visit(tid):
        state[tid] = "open"
        for ev in trace.sections[tid]:
            if isinstance(ev, Fork):
                if state.get(ev.child) == "open":
                    raise TraceError("FORK_CYCLE", f"fork cycle through trace {ev.child}")
                if ev.child not in state:
                    visit(ev.child)
        state[tid] = "done"

    for tid in trace.sections:
        if tid not in state:
            visit(tid)


def _check_window(tid, events, is_root):
    enters = [i for i, ev in enumerate(events) if isinstance(ev, MainEnter)]
    exits = [i for i, ev in enumerate(events) if isinstance(ev, ExitBegin)]
    if len(exits) > 1:
        raise TraceError("WINDOW_VIOLATION", f"trace {tid} has more than one exit-begin")
    if not is_root:
        if enters:
            raise TraceError("WINDOW_VIOLATION", f"forked trace {tid} may not contain main-enter")
        return
    if len(enters) != 1:
        raise TraceError("WINDOW_VIOLATION", f"root trace {tid} needs exactly one main-enter")
    start = enters[0]
    end = exits[0] if exits else len(events)
    if exits and exits[0] < start:
        raise TraceError("WINDOW_VIOLATION", "exit-begin precedes main-enter")
    for i, ev in enumerate(events):
        if isinstance(ev, Vuln) and not start < i < end:
            raise TraceError("WINDOW_VIOLATION", f"vuln {ev.unit} outside the main-enter/exit-begin window")


def dump_trace(trace):
    out = ["trace-version 1"]
    for tid, events in trace.sections.items():
        out.append(f"trace {tid}")
        out += [ev.render() for ev in events]
    return join_lines(out)


def synthesize_variant(base, plan, variant, report_cost=1):
    """Variant ``variant`` of ``base`` under ``plan``.

    CHECK events survive only for units the plan assigns to this variant.  A
    VULN for one of this variant's units becomes a report write and ends the
    process there (the sanitizer aborts); VULNs owned elsewhere vanish.
    """
    if not 0 <= variant < plan.n:
        raise TraceError("BAD_VARIANT", f"variant {variant} outside plan with n={plan.n}")
    uncovered = [u for u in base.check_units() if u not in plan.assignment]
    if uncovered:
        raise TraceError("UNCOVERED_UNIT", f"plan does not cover units {', '.join(uncovered)}")
    sections = {}
    for tid, events in base.sections.items():
        out = []
        for ev in events:
            if isinstance(ev, Check):
                if plan.assignment[ev.unit] == variant:
                    out.append(ev)
            elif isinstance(ev, Vuln):
                if plan.assignment[ev.unit] == variant:
                    out.append(Syscall(REPORT_WRITE_NUM, SyscallClass.IO_WRITE,
                                       report_digest(ev.unit), 0, report_cost))
                    break
            else:
                out.append(ev)
        sections[tid] = tuple(out)
    return Trace(base.root, sections, variant)


def strip_vulns(trace):
    """Copy of ``trace`` with every VULN event removed."""
    sections = {tid: tuple(ev for ev in evs if not isinstance(ev, Vuln)) for tid, evs in trace.sections.items()}
    return replace(trace, sections=sections)


@dataclass(frozen=True)
class WorkloadSpec:
    unit_count: int = 10
    event_count: int = 100
    syscall_ratio: float = 0.2
    lock_ratio: float = 0.0
    cost_distribution: CostDistribution = CostDistribution.UNIFORM
    vuln_units: tuple = ()
    seed: int = 0
    threads: int = 0
    pre_main: int = 2
    post_exit: int = 1


# representative x86-64 numbers per class
_SYSCALL_NUMBERS = {
    SyscallClass.IO_WRITE: (1, 18, 20, 44),
    SyscallClass.IO_OTHER: (0, 2, 3, 4, 45),
    SyscallClass.MEM_MGMT: (9, 11, 12, 28),
    SyscallClass.VIRTUAL: (96, 201, 228),
}
_CLASS_WEIGHTS = ((SyscallClass.IO_WRITE, 3), (SyscallClass.IO_OTHER, 4),
                  (SyscallClass.MEM_MGMT, 2), (SyscallClass.VIRTUAL, 1))
HEAVY_SHARE = 19  # heavy unit gets >= 19x the rest, i.e. >= 95% of check cost


def unit_ids(count):
    return [f"u{i}" for i in range(1, count + 1)]


def _random_syscall(rng, cls=None):
    if cls is None:
        pick = rng.below(sum(w for _, w in _CLASS_WEIGHTS))
        for cls, w in _CLASS_WEIGHTS:
            if pick < w:
                break
            pick -= w
    number = rng.choice(_SYSCALL_NUMBERS[cls])
    arg = digest_args(rng.next_u64().to_bytes(8, "little"))
    return Syscall(number, cls, arg, rng.next_u64(), rng.between(0, 3))


def generate_trace(spec):
    """Seeded synthetic workload.

    Identical specs give identical traces on every platform.  Each requested
    vulnerable unit gets one input read followed by its VULN event in the
    root body, so two triggers are always separated by a synchronized syscall.
    """
    _check_spec(spec)
    rng = SplitMix64(spec.seed)
    units = unit_ids(spec.unit_count)
    heavy = units[0] if spec.cost_distribution is CostDistribution.HEAVY_TAIL else None
    child_ids = [f"t{i}" for i in range(1, spec.threads + 1)]
    per_child = spec.event_count // (spec.threads + 1)
    sizes = [spec.event_count - per_child * spec.threads] + [per_child] * spec.threads

    bodies = []
    for size in sizes:
        body = []
        for _ in range(size):
            r = rng.random()
            if r < spec.syscall_ratio:
                body.append(_random_syscall(rng))
            elif r < spec.syscall_ratio + spec.lock_ratio:
                body.append(Lock(f"m{rng.below(4)}", rng.choice(list(LockOp)), rng.between(0, 2)))
            elif rng.below(2):
                body.append(Compute(rng.between(1, 20)))
            else:
                if heavy is not None and (len(units) == 1 or rng.below(2)):
                    unit = heavy
                else:
                    others = units[1:] if heavy is not None else units
                    unit = rng.choice(others)
                body.append(Check(unit, rng.between(1, 10)))
        bodies.append(body)

    if heavy is not None:
        _concentrate(bodies, heavy)

    root = bodies[0]
    for cid in child_ids:
        root.insert(rng.below(len(root) + 1), Fork(cid))
    vulns = rng.shuffle(list(spec.vuln_units))
    slots = sorted(rng.below(len(root) + 1) for _ in vulns)
    for pos, unit in reversed(list(zip(slots, vulns))):
        root[pos:pos] = [_random_syscall(rng, SyscallClass.IO_OTHER), Vuln(unit)]

    pre = [_random_syscall(rng, SyscallClass.IO_OTHER) for _ in range(spec.pre_main)]
    post = [_random_syscall(rng, SyscallClass.IO_WRITE) for _ in range(spec.post_exit)]
    sections = {"main": tuple(pre + [MAIN_ENTER] + root + [EXIT_BEGIN] + post)}
    for cid, body in zip(child_ids, bodies[1:]):
        sections[cid] = tuple(body)
    trace = Trace("main", sections)
    validate_trace(trace)
    return trace


def _check_spec(spec):
    problems = []
    if spec.unit_count < 1:
        problems.append("unit_count must be >= 1")
    if spec.event_count < 0 or spec.threads < 0 or spec.pre_main < 0 or spec.post_exit < 0:
        problems.append("counts must be non-negative")
    for name in ("syscall_ratio", "lock_ratio"):
        if not 0.0 <= getattr(spec, name) <= 1.0:
            problems.append(f"{name} must lie in [0, 1]")
    if spec.syscall_ratio + spec.lock_ratio > 1.0:
        problems.append("syscall_ratio + lock_ratio must not exceed 1")
    known = set(unit_ids(spec.unit_count))
    for unit in spec.vuln_units:
        if unit not in known:
            problems.append(f"vuln unit {unit} is not one of u1..u{spec.unit_count}")
    if len(set(spec.vuln_units)) != len(spec.vuln_units):
        problems.append("vuln units must be distinct")
    if problems:
        raise TraceError("BAD_PARAMS", "; ".join(problems))


def _concentrate(bodies, heavy):
    """Scale the heavy unit's checks up to at least HEAVY_SHARE times all other check cost."""
    spots = [(b, i) for b in bodies for i, ev in enumerate(b) if isinstance(ev, Check) and ev.unit == heavy]
    rest = sum(ev.cost for b in bodies for ev in b if isinstance(ev, Check) and ev.unit != heavy)
    if not spots:
        bodies[0].append(Check(heavy, 1))
        spots = [(bodies[0], len(bodies[0]) - 1)]
    need = HEAVY_SHARE * rest
    have = sum(b[i].cost for b, i in spots)
    if have >= need:
        return
    each, extra = divmod(need, len(spots))
    for k, (b, i) in enumerate(spots):
        b[i] = Check(heavy, each + (1 if k < extra else 0))


def profile_from_trace(trace, units=None):
    """Overhead profile implied by a trace: summed CHECK cost per unit, no residual."""
    ids = list(units) if units is not None else trace.check_units()
    cost = {uid: 0 for uid in ids}
    for ev in trace.all_events():
        if isinstance(ev, Check):
            cost[ev.unit] = cost.get(ev.unit, 0) + ev.cost
    return OverheadProfile(tuple((ProtectionUnit(uid), c) for uid, c in cost.items()), 0)
