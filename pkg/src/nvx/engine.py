"""Virtual-time simulation of leader/follower N-version execution.

Variant 0 leads.  At every synchronized syscall the leader publishes
``(number, class, argument digest)`` and executes; followers compare their
own next synchronized syscall against it and adopt the leader's result
instead of executing.  Any mismatch aborts every variant.

Two lockstep disciplines are modeled:

* strict: the leader executes only after every follower has arrived at the
  same slot and agreed;
* selective: selected classes (I/O writes by default) stay in lockstep, the
  rest stream through a bounded ring the followers drain at their own pace.

Each process keeps two clocks.  ``clock`` is virtual time including blocked
intervals and drives the scheduler; ``busy`` excludes them and becomes the
variant's finish time.  Blocked time and per-slot handshakes are summed
into the synchronization overhead, so ``o_overall = max(finish) + o_sync``
holds by construction.
"""

import enum
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import SimulationError, StallError
from .rng import MASK64, mix64
from .trace import (Check, Compute, ExitBegin, Fork, Lock, MainEnter, Syscall, SyscallClass,
                    Vuln, report_digest)


class Mode(enum.Enum):
    STRICT = "strict"
    SELECTIVE = "selective"


class Action(enum.Enum):
    LOCKSTEP_SYNC = "lockstep"
    BUFFERED_SYNC = "buffered"
    IGNORE = "ignore"
    OUT_OF_WINDOW = "out-of-window"


class Divergence(enum.Enum):
    SEQUENCE = "sequence"
    ARGUMENT = "argument"


class Decision(enum.Enum):
    PROCEED = "proceed"
    DEFER = "defer"


class SlotState(enum.Enum):
    EMPTY = 0
    ARGS_CHECKED_IN = 1
    RESULTS_TURNED_IN = 2


@dataclass(frozen=True)
class SimulationConfig:
    mode: Mode = Mode.STRICT
    ring_capacity: int = 64
    handshake_cost: int = 1
    selected_classes: frozenset = frozenset({SyscallClass.IO_WRITE})
    scheduler_seed: int = 0

    def validate(self):
        if not isinstance(self.mode, Mode):
            raise SimulationError("CONFIG", f"unknown mode {self.mode!r}")
        if self.mode is Mode.SELECTIVE and self.ring_capacity < 1:
            raise SimulationError("CONFIG", "selective mode needs ring capacity >= 1")
        if self.handshake_cost < 0:
            raise SimulationError("CONFIG", "handshake cost must be non-negative")
        if any(not isinstance(c, SyscallClass) for c in self.selected_classes):
            raise SimulationError("CONFIG", "selected classes must be syscall classes")


def classify_event(event, in_window, config):
    """How the engine treats ``event``; non-syscall events are IGNORE."""
    if not isinstance(event, Syscall):
        return Action.IGNORE
    if not in_window:
        return Action.OUT_OF_WINDOW
    if event.cls is SyscallClass.MEM_MGMT:
        return Action.IGNORE
    if config.mode is Mode.STRICT or event.cls in config.selected_classes:
        return Action.LOCKSTEP_SYNC
    return Action.BUFFERED_SYNC


class SyncSlot:
    """Single rendezvous slot for lockstepped syscalls of one execution group."""

    _NEXT = {SlotState.EMPTY: SlotState.ARGS_CHECKED_IN,
             SlotState.ARGS_CHECKED_IN: SlotState.RESULTS_TURNED_IN,
             SlotState.RESULTS_TURNED_IN: SlotState.EMPTY}

    def __init__(self):
        self.state = SlotState.EMPTY
        self.ordinal = 0
        self.event = None
        self.arrival = 0
        self.progress = 0
        self.agreement = {}  # follower variant -> arrival time

    def _advance(self, target):
        if self._NEXT[self.state] is not target:
            raise AssertionError(f"illegal slot transition {self.state} -> {target}")
        self.state = target

    def check_in(self, ordinal, event, arrival, progress):
        self._advance(SlotState.ARGS_CHECKED_IN)
        self.ordinal, self.event, self.arrival, self.progress = ordinal, event, arrival, progress
        self.agreement = {}

    def turn_in(self):
        self._advance(SlotState.RESULTS_TURNED_IN)

    def clear(self):
        self._advance(SlotState.EMPTY)
        self.event = None
        self.agreement = {}

    @property
    def syscall_number(self):
        return self.event.number if self.event else None

    @property
    def arg_digest(self):
        return self.event.arg if self.event else None

    @property
    def result_digest(self):
        return self.event.result if self.event else None


@dataclass(frozen=True)
class _Record:
    ordinal: int
    event: Syscall
    avail: int  # virtual time the result is turned in
    lockstep: bool
    progress: int


class EventRing:
    """Completed slot records of one group plus per-follower consume cursors.

    Every record is retained so divergence reports can name the leader side,
    but the producer may run at most ``capacity`` records ahead of the
    slowest follower.
    """

    def __init__(self, capacity, followers):
        self.capacity = capacity
        self.entries = []
        self._avail = []
        self.cursors = {v: 0 for v in followers}

    @property
    def produced(self):
        return len(self.entries)

    def lag(self):
        return self.produced - min(self.cursors.values(), default=self.produced)

    def full(self):
        return self.capacity is not None and self.lag() >= self.capacity

    def push(self, record):
        if self.full():
            raise AssertionError("ring overrun")
        self.entries.append(record)
        self._avail.append(record.avail)

    def consume(self, variant):
        self.cursors[variant] += 1
        return self.cursors[variant]

    def produced_by(self, t):
        """Records whose results were turned in at or before virtual time ``t``."""
        return bisect_right(self._avail, t)


class OrderLog:
    """Total order of the leader's lock acquisitions, as execution-group ids."""

    def __init__(self, followers):
        self.sequence = []
        self.times = []
        self.cursors = {v: 0 for v in followers}

    def append(self, egid, time=0):
        self.sequence.append(egid)
        self.times.append(time)

    def head(self, variant):
        pos = self.cursors[variant]
        return self.sequence[pos] if pos < len(self.sequence) else None

    def consume(self, variant):
        self.cursors[variant] += 1

    def consumed(self, variant):
        return self.sequence[:self.cursors[variant]]


def enforce_lock_order(log, variant, egid, op=None, time=0):
    """Admit or defer a locking primitive.

    Leader threads always proceed and append their group id.  A follower
    thread proceeds only when the next unconsumed entry for its variant is
    its own group id, consuming that entry.
    """
    if variant == 0:
        log.append(egid, time)
        return Decision.PROCEED
    if log.head(variant) == egid:
        log.consume(variant)
        return Decision.PROCEED
    return Decision.DEFER


@dataclass(frozen=True)
class Alert:
    kind: Divergence
    variant: int
    ordinal: int
    unit: object = None
    egid: int = field(default=0, compare=False)


@dataclass(frozen=True)
class GapSample:
    variant: int
    egid: int
    ordinal: int
    cls: SyscallClass
    gap: int


@dataclass
class ExecutionRecord:
    """Everything one simulation run observed, before metric reduction."""

    n: int
    alert: object
    finish: list
    waited: int
    handshakes: int
    gaps: list
    locks_replayed: int
    order_log: list
    consumed: dict
    log: list
    executed: list  # (egid, ordinal, leader syscall, lockstepped) in execution order
    ring_capacity: object


@dataclass
class ExecutionGroup:
    egid: int
    parent: object
    slot: SyncSlot
    ring: EventRing
    procs: dict = field(default_factory=dict)
    pending: dict = field(default_factory=dict)
    done: set = field(default_factory=set)
    ring_waiter: object = None


READY, BLOCKED, DONE = "ready", "blocked", "done"


class _Process:
    def __init__(self, variant, egid, trace, section, clock, busy, in_window, rank):
        self.variant = variant
        self.egid = egid
        self.trace = trace
        self.events = trace.sections[section]
        self.pc = 0
        self.clock = clock
        self.busy = busy
        self.in_window = in_window
        self.synced = 0
        self.forks = 0
        self.progress = 0
        self.state = READY
        self.blocked_on = None
        self.blocked_since = 0
        self.rank = rank

    def advance(self):
        self.pc += 1
        self.progress += 1

    def block(self, reason):
        self.state = BLOCKED
        self.blocked_on = reason
        self.blocked_since = self.clock

    def wake(self, at, sim):
        if at > self.clock:
            sim.waited += at - self.clock
            self.clock = at
        self.state = READY
        self.blocked_on = None


@dataclass(frozen=True)
class _Pending:
    ordinal: int
    event: Syscall
    arrival: int
    progress: int


class _Simulator:
    def __init__(self, variants, config, units):
        config.validate()
        if len(variants) < 2:
            raise SimulationError("CONFIG", "need at least two variants (one leader, one follower)")
        self.config = config
        self.variants = list(variants)
        self.n = len(self.variants)
        self.followers = list(range(1, self.n))
        self.hs = config.handshake_cost
        self.capacity = config.ring_capacity if config.mode is Mode.SELECTIVE else None
        ids = set(units or ())
        for trace in self.variants:
            ids.update(ev.unit for ev in trace.all_events() if isinstance(ev, (Check, Vuln)))
        self.report_units = {report_digest(uid): uid for uid in sorted(ids)}

        self.groups = {}
        self.procs = []
        self.fork_map = {}
        self.order = OrderLog(self.followers)
        self.last_lock = {v: 0 for v in self.followers}
        self.deferred = []
        self.locks_replayed = 0
        self.waited = 0
        self.handshakes = 0
        self.gaps = []
        self.log = []
        self.executed = []
        self.alert = None
        self.now = 0

        root = self._group(None)
        for v, trace in enumerate(self.variants):
            self._spawn(v, root, trace, trace.root, 0, 0, False)

    # -- setup helpers ----------------------------------------------------

    def _group(self, parent):
        egid = len(self.groups)
        g = ExecutionGroup(egid, parent, SyncSlot(), EventRing(self.capacity, self.followers))
        self.groups[egid] = g
        return g

    def _spawn(self, variant, group, trace, section, clock, busy, in_window):
        rank = mix64((self.config.scheduler_seed ^ (variant << 40) ^ group.egid) & MASK64)
        p = _Process(variant, group.egid, trace, section, clock, busy, in_window, rank)
        group.procs[variant] = p
        self.procs.append(p)
        return p

    # -- main loop --------------------------------------------------------

    def run(self):
        while self.alert is None:
            ready = [p for p in self.procs if p.state == READY]
            if ready:
                p = min(ready, key=lambda q: (q.clock, q.rank, q.variant, q.egid))
                self.now = p.clock
                self._step(p)
                continue
            if all(p.state == DONE for p in self.procs):
                self._final_checks()
                break
            self._quiesce()
        if self.alert is not None:
            for p in self.procs:
                if p.state == BLOCKED and self.now > p.blocked_since:
                    self.waited += self.now - p.blocked_since
        finish = [0] * self.n
        for p in self.procs:
            finish[p.variant] = max(finish[p.variant], p.busy)
        return ExecutionRecord(
            n=self.n, alert=self.alert, finish=finish, waited=self.waited,
            handshakes=self.handshakes, gaps=self.gaps, locks_replayed=self.locks_replayed,
            order_log=list(self.order.sequence),
            consumed={v: self.order.consumed(v) for v in self.followers},
            log=self.log, executed=self.executed, ring_capacity=self.capacity)

    def _step(self, p):
        if p.pc >= len(p.events):
            self._finish(p)
            return
        ev = p.events[p.pc]
        if isinstance(ev, (Compute, Check)):
            p.clock += ev.cost
            p.busy += ev.cost
            p.pc += 1
            if isinstance(ev, Compute):
                p.progress += 1
        elif isinstance(ev, MainEnter):
            p.in_window = True
            p.advance()
        elif isinstance(ev, ExitBegin):
            p.in_window = False
            p.advance()
        elif isinstance(ev, Vuln):
            p.pc += 1
        elif isinstance(ev, Fork):
            self._fork(p, ev)
        elif isinstance(ev, Lock):
            self._lock(p, ev)
        elif isinstance(ev, Syscall):
            action = classify_event(ev, p.in_window, self.config)
            if action in (Action.IGNORE, Action.OUT_OF_WINDOW):
                p.clock += ev.cost
                p.busy += ev.cost
                p.advance()
            elif p.variant == 0:
                self._leader_sync(p, ev, action)
            else:
                self._follower_sync(p, ev)
        else:
            raise SimulationError("CONFIG", f"unknown event {ev!r}")

    # -- syscall protocol -------------------------------------------------

    def _leader_sync(self, p, ev, action):
        g = self.groups[p.egid]
        k = p.synced + 1
        if action is Action.LOCKSTEP_SYNC:
            g.slot.check_in(k, ev, p.clock, p.progress)
            p.block("slot")
            self.log.append(("checkin", g.egid, k, 0))
            for v in self.followers:
                self._offer_slot(g, v)
                if self.alert:
                    return
            self._try_commit(g)
        elif g.ring.full():
            p.block("ring")
            g.ring_waiter = ev
        else:
            self._leader_buffer(p, g, ev)

    def _offer_slot(self, g, v):
        slot = g.slot
        pend = g.pending.get(v)
        if pend is not None and pend.ordinal == slot.ordinal:
            if self._compare(g, v, slot.ordinal, slot.event, slot.progress, pend, max(slot.arrival, pend.arrival)):
                slot.agreement[v] = pend.arrival
                self.log.append(("agree", g.egid, slot.ordinal, v))
        elif v in g.done:
            self._diverge(g, v, slot.ordinal, slot.event, slot.progress, None, 0, slot.arrival)

    def _try_commit(self, g):
        slot = g.slot
        if slot.state is not SlotState.ARGS_CHECKED_IN or len(slot.agreement) != len(self.followers):
            return
        leader = g.procs[0]
        t_star = max([slot.arrival] + list(slot.agreement.values()))
        ev = slot.event
        leader.wake(t_star, self)
        avail = t_star + ev.cost
        leader.clock = avail + self.hs
        leader.busy += ev.cost + self.hs
        leader.synced = slot.ordinal
        leader.advance()
        rec = _Record(slot.ordinal, ev, avail, True, slot.progress)
        g.ring.push(rec)
        self.handshakes += self.hs
        self.log.append(("exec", g.egid, slot.ordinal, 0))
        self.executed.append((g.egid, slot.ordinal, ev, True))
        slot.turn_in()
        for v in self.followers:
            self._consume(g, v, rec)
        slot.clear()

    def _leader_buffer(self, p, g, ev):
        k = p.synced + 1
        for v in self.followers:
            if v in g.done:
                self._diverge(g, v, k, ev, p.progress, None, 0, p.clock)
                return
        avail = p.clock + ev.cost
        p.clock = avail + self.hs
        p.busy += ev.cost + self.hs
        p.synced = k
        rec = _Record(k, ev, avail, False, p.progress)
        p.advance()
        g.ring.push(rec)
        self.handshakes += self.hs
        self.log.append(("exec", g.egid, k, 0))
        self.executed.append((g.egid, k, ev, False))
        for v in self.followers:
            pend = g.pending.get(v)
            if pend is not None and pend.ordinal == k:
                self._follower_arrived(g, v)
                if self.alert:
                    return

    def _follower_sync(self, p, ev):
        g = self.groups[p.egid]
        g.pending[p.variant] = _Pending(p.synced + 1, ev, p.clock, p.progress)
        p.block("sync")
        self._follower_arrived(g, p.variant)

    def _follower_arrived(self, g, v):
        pend = g.pending[v]
        k = pend.ordinal
        if k <= g.ring.produced:
            rec = g.ring.entries[k - 1]
            t = max(pend.arrival, rec.avail)
            if self._compare(g, v, k, rec.event, rec.progress, pend, t):
                self.log.append(("agree", g.egid, k, v))
                self._consume(g, v, rec)
        elif g.slot.state is SlotState.ARGS_CHECKED_IN and g.slot.ordinal == k:
            self._offer_slot(g, v)
            if not self.alert:
                self._try_commit(g)
        elif 0 in g.done:
            self._diverge(g, v, k, None, 0, pend.event, pend.progress, pend.arrival)

    def _consume(self, g, v, rec):
        f = g.procs[v]
        pend = g.pending.pop(v)
        t_c = max(pend.arrival, rec.avail)
        f.wake(t_c, self)
        f.clock = t_c + self.hs
        f.busy += self.hs
        f.synced = rec.ordinal
        f.advance()
        g.ring.consume(v)
        self.gaps.append(GapSample(v, g.egid, rec.ordinal, rec.event.cls,
                                   g.ring.produced_by(t_c) - rec.ordinal))
        self.log.append(("consume", g.egid, rec.ordinal, v))
        if g.ring_waiter is not None and not g.ring.full():
            leader = g.procs[0]
            ev, g.ring_waiter = g.ring_waiter, None
            leader.wake(t_c, self)
            self._leader_buffer(leader, g, ev)

    def _compare(self, g, v, k, lead_ev, lead_progress, pend, t):
        ours = pend.event
        if (ours.number, ours.cls) != (lead_ev.number, lead_ev.cls) or ours.arg != lead_ev.arg:
            self._diverge(g, v, k, lead_ev, lead_progress, ours, pend.progress, t)
            return False
        return True

    def _report_unit(self, ev):
        if ev is not None and ev.is_report:
            return self.report_units.get(ev.arg)
        return None

    def _diverge(self, g, v, k, lead_ev, lead_progress, ours, our_progress, t):
        if lead_ev is None or ours is None or (lead_ev.number, lead_ev.cls) != (ours.number, ours.cls):
            kind = Divergence.SEQUENCE
        else:
            kind = Divergence.ARGUMENT
        lead_unit = self._report_unit(lead_ev)
        our_unit = self._report_unit(ours)
        # when both sides reached a sanitizer report, the one earlier in
        # program order (fewer shared events executed) fired first
        if our_unit is not None and (lead_unit is None or our_progress < lead_progress):
            variant, unit = v, our_unit
        elif lead_unit is not None:
            variant, unit = 0, lead_unit
        else:
            variant, unit = v, None
        self.now = max(self.now, t)
        self.alert = Alert(kind, variant, k, unit, g.egid)
        self.log.append(("alert", g.egid, k, v))

    # -- process lifecycle ------------------------------------------------

    def _finish(self, p):
        p.state = DONE
        g = self.groups[p.egid]
        g.done.add(p.variant)
        if p.variant == 0:
            for v in self.followers:
                pend = g.pending.get(v)
                if pend is not None and pend.ordinal > g.ring.produced:
                    self._diverge(g, v, pend.ordinal, None, 0, pend.event, pend.progress,
                                  max(p.clock, pend.arrival))
                    return
            return
        c = g.ring.cursors[p.variant]
        if g.slot.state is SlotState.ARGS_CHECKED_IN and g.slot.ordinal == c + 1:
            self._diverge(g, p.variant, c + 1, g.slot.event, g.slot.progress, None, 0,
                          max(p.clock, g.slot.arrival))
        elif g.ring.produced > c:
            rec = g.ring.entries[c]
            self._diverge(g, p.variant, c + 1, rec.event, rec.progress, None, 0, max(p.clock, rec.avail))
        elif g.ring_waiter is not None:
            leader = g.procs[0]
            self._diverge(g, p.variant, c + 1, g.ring_waiter, leader.progress, None, 0,
                          max(p.clock, leader.blocked_since))

    def _fork(self, p, ev):
        key = (p.egid, p.forks)
        p.forks += 1
        p.advance()
        egid = self.fork_map.get(key)
        if egid is None:
            g = self._group(p.egid)
            self.fork_map[key] = g.egid
        else:
            g = self.groups[egid]
        self._spawn(p.variant, g, p.trace, ev.child, p.clock, p.busy, p.in_window)

    def _lock(self, p, ev):
        if p.variant == 0:
            enforce_lock_order(self.order, 0, p.egid, ev.op, p.clock)
            p.clock += ev.cost
            p.busy += ev.cost
            p.advance()
            self._retry_deferred()
            return
        if self._try_lock(p, ev):
            self._retry_deferred()
        else:
            p.block("lock")
            self.deferred.append(p)

    def _try_lock(self, p, ev):
        pos = self.order.cursors[p.variant]
        if enforce_lock_order(self.order, p.variant, p.egid, ev.op) is Decision.DEFER:
            return False
        t = max(p.clock, self.order.times[pos], self.last_lock[p.variant])
        p.wake(t, self)
        self.last_lock[p.variant] = t
        self.locks_replayed += 1
        p.clock += ev.cost
        p.busy += ev.cost
        p.advance()
        return True

    def _retry_deferred(self):
        progressed = True
        while progressed and self.deferred:
            progressed = False
            for p in sorted(self.deferred, key=lambda q: (q.variant, q.egid)):
                if self._try_lock(p, p.events[p.pc]):
                    self.deferred.remove(p)
                    progressed = True
                    break

    def _can_appear(self, variant, g):
        """Whether ``variant`` may still fork a process into group ``g``."""
        if g.parent is None:
            return True
        parent = self.groups[g.parent]
        proc = parent.procs.get(variant)
        if proc is not None:
            return proc.state != DONE
        return self._can_appear(variant, parent)

    def _quiesce(self):
        blocked = sorted((p for p in self.procs if p.state == BLOCKED), key=lambda q: (q.variant, q.egid))
        for p in blocked:
            g = self.groups[p.egid]
            if p.variant != 0 and p.blocked_on == "sync" and 0 not in g.procs and not self._can_appear(0, g):
                pend = g.pending[p.variant]
                self._diverge(g, p.variant, pend.ordinal, None, 0, pend.event, pend.progress, pend.arrival)
                return
            if p.variant == 0 and p.blocked_on in ("slot", "ring"):
                for v in self.followers:
                    if v not in g.procs and not self._can_appear(v, g):
                        if p.blocked_on == "slot":
                            self._diverge(g, v, g.slot.ordinal, g.slot.event, g.slot.progress, None, 0, p.clock)
                        else:
                            self._diverge(g, v, g.ring.cursors[v] + 1, g.ring_waiter, p.progress, None, 0, p.clock)
                        return
        for p in blocked:
            if p.variant != 0 and p.blocked_on == "lock" and self._lock_behind_leader(p):
                return
        raise StallError([(p.variant, p.egid, p.blocked_on) for p in blocked])

    def _lock_behind_leader(self, p):
        # A follower parked on a lock while its leader already moved on to a
        # syscall the follower never reached took a different path: the lock
        # sits where the leader has a synchronized syscall.
        g = self.groups[p.egid]
        leader = g.procs.get(0)
        if leader is None:
            return False
        c = g.ring.cursors[p.variant]
        unread = g.ring.entries[c:]
        if leader.state == BLOCKED and leader.blocked_on == "slot":
            k, ev, progress = g.slot.ordinal, g.slot.event, g.slot.progress
        elif unread and (leader.state == DONE or leader.blocked_on == "ring"):
            rec = next((r for r in unread if r.event.is_report), unread[0])
            k, ev, progress = rec.ordinal, rec.event, rec.progress
        else:
            return False
        # reports earlier in the ring win over the slot, as they fired first
        report = next((r for r in unread if r.event.is_report and r.ordinal < k), None)
        if report is not None:
            k, ev, progress = report.ordinal, report.event, report.progress
        self._diverge(g, p.variant, k, ev, progress, None, 0, max(p.blocked_since, leader.clock))
        return True

    def _final_checks(self):
        for g in self.groups.values():
            if 0 not in g.procs or not g.ring.produced:
                continue
            for v in self.followers:
                if v not in g.procs:
                    rec = g.ring.entries[0]
                    self._diverge(g, v, 1, rec.event, rec.progress, None, 0, self.now)
                    return


def execute(variants, config=None, units=None):
    """Run the simulation and return the raw :class:`ExecutionRecord`."""
    return _Simulator(variants, config or SimulationConfig(), units).run()


@dataclass(frozen=True)
class GapStats:
    variant: int
    max: int
    mean: Fraction


@dataclass(frozen=True)
class SimulationReport:
    alert: object  # Alert, or None for a clean run
    finish: tuple
    o_overall: int
    o_sync: int
    gaps: tuple
    locks_replayed: int

    def __post_init__(self):
        if self.o_overall != max(self.finish) + self.o_sync:
            raise AssertionError("o_overall must equal max(finish) + o_sync")

    @property
    def clean(self):
        return self.alert is None

    def gap(self, variant):
        for g in self.gaps:
            if g.variant == variant:
                return g
        raise KeyError(variant)


def compute_metrics(record):
    """Reduce an execution record to report fields.

    ``o_sync`` is handshake cost summed per synchronized slot plus every
    interval a process spent blocked on a slot, the ring or the order log.
    Gap samples are taken at each follower consumption as leader records
    turned in by that instant minus the follower's cursor.
    """
    o_sync = record.handshakes + record.waited
    gaps = []
    for v in range(1, record.n):
        samples = [s.gap for s in record.gaps if s.variant == v]
        mean = Fraction(sum(samples), len(samples)) if samples else Fraction(0)
        gaps.append(GapStats(v, max(samples, default=0), mean))
    return SimulationReport(record.alert, tuple(record.finish), max(record.finish) + o_sync, o_sync,
                            tuple(gaps), record.locks_replayed)


def run_simulation(variants, config=None, units=None):
    """Simulate ``variants`` (index 0 leads) and return a :class:`SimulationReport`.

    ``units`` lists protection-unit ids used to recognize sanitizer report
    writes; ids appearing in CHECK events are picked up automatically.
    """
    return compute_metrics(execute(variants, config, units))
