"""Distribute protection units across N variants.

:func:`plan_partition` is the production path: Longest-Processing-Time
greedy with fixed tie-breaking and conflict-aware bin selection.
:func:`oracle_partition` is exhaustive ground truth for small instances and
minimizes the fairness objective

    sum_i | load_i - total / N |

exactly (rational arithmetic), which for N = 2 coincides with minimizing the
makespan but can rank plans differently for N > 2.
"""

import logging
import time
from dataclasses import dataclass
from fractions import Fraction

from .errors import PartitionError
from .textio import expect_header, join_lines, parse_uint, tokenized_lines

log = logging.getLogger(__name__)

ORACLE_LIMIT = 15


@dataclass(frozen=True)
class PartitionPlan:
    n: int
    assignment: dict  # unit id -> variant index, in input order
    loads: tuple

    @property
    def empty_variants(self):
        used = set(self.assignment.values())
        return [i for i in range(self.n) if i not in used]

    @property
    def has_empty_variants(self):
        return bool(self.empty_variants)

    def members(self, variant):
        return [uid for uid, v in self.assignment.items() if v == variant]


@dataclass(frozen=True)
class PlanScore:
    objective: Fraction
    makespan: int
    target: Fraction


@dataclass(frozen=True)
class Violation:
    kind: str  # COVERAGE | UNKNOWN | RANGE | LOAD | CONFLICT
    units: tuple
    detail: str = ""


def _pairs(units):
    if hasattr(units, "pairs"):
        units = units.pairs()
    return [(str(uid), int(cost)) for uid, cost in units]


def _conflict_map(pairs, conflicts):
    ids = {uid for uid, _ in pairs}
    neighbors = {uid: set() for uid in ids}
    for pair in conflicts or ():
        a, b = tuple(pair)
        for x in (a, b):
            if x not in ids:
                raise PartitionError("UNKNOWN_UNIT", f"conflict names unit {x} that is not being partitioned")
        neighbors[a].add(b)
        neighbors[b].add(a)
    return neighbors


def _loads(pairs, assignment, n):
    loads = [0] * n
    for uid, cost in pairs:
        loads[assignment[uid]] += cost
    return tuple(loads)


def plan_partition(units, n, conflicts=None):
    """LPT greedy: largest unit first, each into the least-loaded feasible variant.

    Ties: equal costs are taken in ascending id order; equal loads go to the
    lowest variant index.  A variant is feasible for a unit when it holds
    none of the unit's conflict partners.
    """
    if n < 1:
        raise PartitionError("BAD_N", f"need at least one variant, got {n}")
    plan = _lpt(_pairs(units), n, conflicts)
    if plan.has_empty_variants:
        log.warning("plan leaves variants %s empty", plan.empty_variants)
    return plan


def _lpt(pairs, n, conflicts):
    neighbors = _conflict_map(pairs, conflicts)
    seen = set()
    for uid, cost in pairs:
        if uid in seen:
            raise PartitionError("DUPLICATE_UNIT", f"unit {uid} listed twice")
        if cost < 0:
            raise PartitionError("NEGATIVE_COST", f"unit {uid} has negative cost")
        seen.add(uid)

    loads = [0] * n
    residents = [set() for _ in range(n)]
    placed = {}
    for uid, cost in sorted(pairs, key=lambda p: (-p[1], p[0])):
        best = None
        for v in range(n):
            if residents[v] & neighbors[uid]:
                continue
            if best is None or loads[v] < loads[best]:
                best = v
        if best is None:
            raise PartitionError("INFEASIBLE", f"no conflict-free variant left for unit {uid}")
        placed[uid] = best
        loads[best] += cost
        residents[best].add(uid)

    return PartitionPlan(n, {uid: placed[uid] for uid, _ in pairs}, tuple(loads))


def _scaled_objective(loads, n, total):
    # n * objective, kept integral
    return sum(abs(n * load - total) for load in loads)


class _Done(Exception):
    pass


def oracle_partition(units, n, conflicts=None, limit=ORACLE_LIMIT, deadline=None):
    """Exact minimizer of the fairness objective by branch and bound.

    Among optimal plans the lexicographically smallest assignment vector (in
    input unit order) wins.  Only canonical vectors are explored (a unit may
    open at most the next unused variant), which is result-equivalent since
    the canonical member of a relabeling class is also its lexicographic
    minimum.  ``deadline`` (seconds) aborts a runaway search with TIMEOUT.
    """
    if n < 1:
        raise PartitionError("BAD_N", f"need at least one variant, got {n}")
    pairs = _pairs(units)
    if len(pairs) > limit:
        raise PartitionError("TOO_LARGE", f"{len(pairs)} units exceeds the exhaustive-search limit of {limit}")
    neighbors = _conflict_map(pairs, conflicts)
    ids = [uid for uid, _ in pairs]
    index = {uid: i for i, uid in enumerate(ids)}
    costs = [cost for _, cost in pairs]
    conflict_idx = [sorted(index[x] for x in neighbors[uid] if index[x] < i) for i, uid in enumerate(ids)]
    total = sum(costs)
    k = len(costs)
    # largest cost among units i.. (for the lookahead bound)
    suffix_max = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        suffix_max[i] = max(costs[i], suffix_max[i + 1])

    try:
        seed = _lpt(pairs, n, conflicts)
        best = [_scaled_objective(seed.loads, n, total) + 1]
    except PartitionError:
        best = [None]
    best_vec = [None]
    stop_at = None if deadline is None else time.monotonic() + deadline
    nodes = [0]
    loads = [0] * n
    vec = [0] * k

    # no integer loads can beat r variants at q+1 and the rest at q (q, r = divmod(total, n))
    floor = 2 * (total % n) * (n - total % n)

    def over(load):
        return max(0, n * load - total)

    def search(i, used, excess):
        # excess = sum over variants of max(0, n*load - total); objective = 2 * excess
        if best[0] is not None and 2 * excess >= best[0]:
            return
        nodes[0] += 1
        if stop_at is not None and nodes[0] % 4096 == 0 and time.monotonic() > stop_at:
            raise PartitionError("TIMEOUT", f"exhaustive search exceeded {deadline} s")
        if i == k:
            best[0] = 2 * excess
            best_vec[0] = list(vec)
            if best[0] == floor:
                raise _Done
            return
        p = suffix_max[i]
        if p and best[0] is not None:
            bump = min(over(load + p) - over(load) for load in loads)
            if 2 * (excess + bump) >= best[0]:
                return
        cost = costs[i]
        for v in range(min(used + 1, n)):
            if any(vec[j] == v for j in conflict_idx[i]):
                continue
            before = over(loads[v])
            loads[v] += cost
            vec[i] = v
            search(i + 1, max(used, v + 1), excess - before + over(loads[v]))
            loads[v] -= cost

    try:
        search(0, 0, 0)
    except _Done:
        pass
    if best_vec[0] is None:
        raise PartitionError("INFEASIBLE", "no conflict-free assignment exists")
    assignment = {uid: best_vec[0][i] for i, uid in enumerate(ids)}
    return PartitionPlan(n, assignment, _loads(pairs, assignment, n))


def evaluate_plan(plan, units):
    pairs = _pairs(units)
    if set(plan.assignment) != {uid for uid, _ in pairs}:
        raise PartitionError("PLAN_MISMATCH", "plan and unit list cover different unit sets")
    loads = _loads(pairs, plan.assignment, plan.n)
    total = sum(cost for _, cost in pairs)
    target = Fraction(total, plan.n)
    objective = sum((abs(load - target) for load in loads), Fraction(0))
    return PlanScore(objective, max(loads) if loads else 0, target)


def validate_plan(plan, units, conflicts=None):
    """Every violation of coverage, range, load conservation and conflicts; ``[]`` means OK."""
    pairs = _pairs(units)
    ids = [uid for uid, _ in pairs]
    idset = set(ids)
    violations = []
    missing = tuple(uid for uid in ids if uid not in plan.assignment)
    if missing:
        violations.append(Violation("COVERAGE", missing, "units not assigned to any variant"))
    extra = tuple(uid for uid in plan.assignment if uid not in idset)
    if extra:
        violations.append(Violation("UNKNOWN", extra, "assigned units absent from the input"))
    bad = tuple(uid for uid, v in plan.assignment.items() if not 0 <= v < plan.n)
    if bad:
        violations.append(Violation("RANGE", bad, f"variant index outside [0, {plan.n})"))
    if not missing and not bad:
        expected = _loads(pairs, plan.assignment, plan.n)
        if tuple(plan.loads) != expected:
            violations.append(Violation("LOAD", (), f"loads {list(plan.loads)} != recomputed {list(expected)}"))
    if sum(plan.loads) != sum(cost for _, cost in pairs):
        violations.append(Violation("LOAD", (), "variant loads do not sum to the total overhead"))
    for pair in conflicts or ():
        a, b = sorted(pair)
        if a in plan.assignment and b in plan.assignment and plan.assignment[a] == plan.assignment[b]:
            violations.append(Violation("CONFLICT", (a, b), f"both in variant {plan.assignment[a]}"))
    return violations


def dump_plan(plan):
    out = ["plan-version 1", f"n {plan.n}"]
    out += [f"assign {uid} {v}" for uid, v in plan.assignment.items()]
    out += [f"load {i} {load}" for i, load in enumerate(plan.loads)]
    return join_lines(out)


def parse_plan(text):
    lines = tokenized_lines(text)
    expect_header(lines, "plan-version", 1, PartitionError)
    n = None
    assignment = {}
    loads = {}
    for lineno, toks in lines:
        if toks[0] == "n" and len(toks) == 2 and n is None:
            n = parse_uint(toks[1], lineno, PartitionError)
        elif toks[0] == "assign" and len(toks) == 3:
            if toks[1] in assignment:
                raise PartitionError("DUPLICATE_UNIT", f"unit {toks[1]} assigned twice", lineno)
            assignment[toks[1]] = parse_uint(toks[2], lineno, PartitionError)
        elif toks[0] == "load" and len(toks) == 3:
            idx = parse_uint(toks[1], lineno, PartitionError)
            if idx in loads:
                raise PartitionError("SYNTAX", f"load for variant {idx} given twice", lineno)
            loads[idx] = parse_uint(toks[2], lineno, PartitionError)
        else:
            raise PartitionError("SYNTAX", f"unrecognized line {' '.join(toks)!r}", lineno)
    if n is None or n < 1:
        raise PartitionError("SYNTAX", "plan needs an 'n' line with n >= 1")
    if sorted(loads) != list(range(n)):
        raise PartitionError("SYNTAX", f"plan must give exactly one load line per variant 0..{n - 1}")
    return PartitionPlan(n, assignment, tuple(loads[i] for i in range(n)))
