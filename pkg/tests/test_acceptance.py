"""Acceptance gate: ten end-to-end criteria at their stated sizes and tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import time

from nvx.engine import Mode, SimulationConfig, compute_metrics, execute
from nvx.errors import PartitionError
from nvx.partition import PartitionPlan, evaluate_plan, oracle_partition, plan_partition, validate_plan
from nvx.profile import synthetic_catalog, synthetic_profile
from nvx.report import dump_report
from nvx.rng import SplitMix64
from nvx.trace import (EXIT_BEGIN, MAIN_ENTER, Check, Compute, CostDistribution, Syscall, SyscallClass, Trace,
                       Vuln, WorkloadSpec, digest_args, generate_trace, profile_from_trace, report_digest,
                       strip_vulns, unit_ids)

from scenarios import first_vuln, random_scenario, variants_of

STRICT = SimulationConfig()
SELECTIVE = SimulationConfig(Mode.SELECTIVE, 64)


def run(base, plan, config):
    return execute(variants_of(base, plan), config, list(plan.assignment))


def test_1_greedy_against_oracle(verdict):
    rng = SplitMix64(1)
    worst = 0.0
    bad = []
    start = time.perf_counter()
    for i in range(200):
        n = rng.between(2, 4)
        units = [(f"u{k}", rng.between(1, 100)) for k in range(rng.between(1, 12))]
        greedy = max(plan_partition(units, n).loads)
        best = max(oracle_partition(units, n).loads)
        # greedy <= (4/3 - 1/(3n)) * best, in integers
        if 3 * n * greedy > (4 * n - 1) * best:
            bad.append(i)
        worst = max(worst, greedy / best)
    elapsed = time.perf_counter() - start
    ok = verdict(1, not bad and elapsed < 10.0,
                 f"200 instances, violations={len(bad)}, worst ratio={worst:.4f}, runtime={elapsed:.2f}s (< 10s)")
    assert ok, bad


def test_2_plans_validate(verdict):
    rng = SplitMix64(2)
    outputs = violations = infeasible = 0
    while outputs < 1000:
        count = rng.between(1, 30)
        units = [(f"p{k}", rng.between(0, 500)) for k in range(count)]
        ids = [u for u, _ in units]
        conflicts = []
        if count >= 2:
            for _ in range(rng.below(count)):
                a, b = rng.sample(ids, 2)
                conflicts.append((a, b))
        n = rng.between(1, 6)
        try:
            plan = plan_partition(units, n, conflicts)
        except PartitionError as exc:
            assert exc.code == "INFEASIBLE"
            infeasible += 1
            continue
        outputs += 1
        problems = validate_plan(plan, units, conflicts)
        violations += len(problems)
        if sum(plan.loads) != sum(c for _, c in units):
            violations += 1
    ok = verdict(2, violations == 0,
                 f"1000 plans, violations={violations} (infeasible inputs skipped: {infeasible})")
    assert ok


def test_3_moderate_skew_shape(verdict):
    bounds = {2: (53.5, 61.5), 3: (35.7, 41.1)}
    seen = {2: [], 3: []}
    for seed in range(20):
        prof = synthetic_profile(107, 60, skew=0.5, seed=seed)
        assert prof.o_total() == 107 and len(prof.units) >= 50
        for n in (2, 3):
            seen[n].append(max(plan_partition(prof, n).loads))
    ok = all(lo <= x <= hi for n, (lo, hi) in bounds.items() for x in seen[n])
    verdict(3, ok, f"20 profiles of 107 ticks over 60 units: N=2 max load {min(seen[2])}..{max(seen[2])} "
                   f"in [53.5, 61.5], N=3 {min(seen[3])}..{max(seen[3])} in [35.7, 41.1]")
    assert ok, seen


def test_4_heavy_tail_gives_no_benefit(verdict):
    worst = 1.0
    failures = 0
    for seed in range(20):
        base = generate_trace(WorkloadSpec(unit_count=50, event_count=300, seed=seed,
                                           cost_distribution=CostDistribution.HEAVY_TAIL))
        prof = profile_from_trace(base, unit_ids(50))
        for n in range(1, 9):
            share = max(plan_partition(prof, n).loads) / prof.o_total()
            worst = min(worst, share)
            failures += share < 0.95
    ok = verdict(4, failures == 0, f"20 heavy-tail profiles x N=1..8, min max-load share={worst:.4f} (>= 0.95)")
    assert ok


def test_5_nineteen_unit_catalogs(verdict):
    failures = []
    fallbacks = 0
    worst = 0.0
    slowest = 0.0
    for seed in range(20):
        cat = synthetic_catalog(19, 40, seed=seed, conflict_pairs=seed % 6)
        conflicts = cat.conflict_set()
        plan = plan_partition(cat, 3, conflicts)
        if validate_plan(plan, cat, conflicts):
            failures.append((seed, "invalid"))
            continue
        units = cat.pairs()
        start = time.perf_counter()
        try:
            best = oracle_partition(units, 3, conflicts, limit=19, deadline=60.0)
        except PartitionError as exc:
            assert exc.code == "TIMEOUT"
            fallbacks += 1
            units = sorted(units, key=lambda p: (-p[1], p[0]))[:12]
            keep = {u for u, _ in units}
            conflicts = [tuple(c) for c in conflicts if set(c) <= keep]
            plan = plan_partition(units, 3, conflicts)
            best = oracle_partition(units, 3, conflicts)
        slowest = max(slowest, time.perf_counter() - start)
        greedy = evaluate_plan(plan, units).makespan
        optimum = evaluate_plan(best, units).makespan
        worst = max(worst, greedy / optimum)
        if 3 * greedy > 4 * optimum:
            failures.append((seed, greedy, optimum))
    ok = verdict(5, not failures, f"20 catalogs, N=3: worst greedy/oracle makespan={worst:.4f} (<= 4/3), "
                                  f"slowest oracle {slowest:.2f}s, 12-unit fallbacks={fallbacks}")
    assert ok, failures


def test_6_detection_completeness(verdict):
    missed = []
    false_alerts = []
    for seed in range(500):
        base, plan = random_scenario(6000 + seed, threads=seed % 3, lock_ratio=0.05 * (seed % 2))
        first = first_vuln(base)
        alert = run(base, plan, STRICT).alert
        if alert is None or alert.unit != first or alert.variant != plan.assignment[first]:
            missed.append((seed, first, alert))
        if run(strip_vulns(base), plan, STRICT).alert is not None:
            false_alerts.append(seed)
    ok = verdict(6, not missed and not false_alerts,
                 f"500 strict scenarios: detected {500 - len(missed)}/500 with the first trigger's unit and owner, "
                 f"false alerts after removing triggers={len(false_alerts)}")
    assert ok, (missed[:5], false_alerts[:5])


def _follower_heavy(seed):
    """Long runs of buffered reads with every check on the last variant, so the ring fills up."""
    rng = SplitMix64(seed)
    units = unit_ids(4)
    body = []
    for i in range(rng.between(300, 900)):
        r = rng.below(100)
        if r < 60:
            body.append(Syscall(0, SyscallClass.IO_OTHER, digest_args(b"r%d" % i), 0, rng.below(2)))
        elif r < 95:
            body.append(Check(rng.choice(units), rng.between(1, 5)))
        elif r < 99:
            body.append(Compute(rng.between(1, 3)))
        else:
            body.append(Syscall(18, SyscallClass.IO_WRITE, digest_args(b"w%d" % i), 0, 1))
    for unit in rng.sample(units, rng.below(3)):
        pos = rng.below(len(body) + 1)
        body[pos:pos] = [Syscall(0, SyscallClass.IO_OTHER, digest_args(unit.encode()), 0, 0), Vuln(unit)]
    base = Trace("main", {"main": (MAIN_ENTER, *body, EXIT_BEGIN)})
    n = rng.between(2, 3)
    return base, PartitionPlan(n, {u: n - 1 for u in units}, (0,) * n)


def test_7_selective_guarantees(verdict):
    max_gap = 0
    problems = []
    detected = with_vulns = 0
    for seed in range(200):
        if seed % 2:
            base, plan = random_scenario(7000 + seed, threads=seed % 3, lock_ratio=0.05, vulns=(0, 2))
        else:
            base, plan = _follower_heavy(7000 + seed)
        rec = run(base, plan, SELECTIVE)
        for s in rec.gaps:
            max_gap = max(max_gap, s.gap)
            if s.gap > 64 or (s.cls is SyscallClass.IO_WRITE and s.gap != 0):
                problems.append((seed, s))
        reports = {report_digest(u) for u in plan.assignment}
        if any(ev.is_report and ev.arg in reports for _, _, ev, _ in rec.executed):
            problems.append((seed, "leader executed a report write"))
        if first_vuln(base) is not None:
            with_vulns += 1
            a = rec.alert
            if a is None or a.unit is None or a.variant != plan.assignment[a.unit]:
                problems.append((seed, a))
                continue
            # buffered syscalls may run ahead, but no write leaves at or after the report's slot
            if any(g == a.egid and k >= a.ordinal and ev.cls is SyscallClass.IO_WRITE
                   for g, k, ev, _ in rec.executed):
                problems.append((seed, "write executed at or after the report slot"))
                continue
            detected += 1
        elif rec.alert is not None:
            problems.append((seed, "false alert", rec.alert))
    ok = verdict(7, not problems, f"200 selective runs (capacity 64): max gap={max_gap}, IO_WRITE gaps all 0, "
                                  f"reports caught before execution {detected}/{with_vulns}")
    assert ok, problems[:5]


def test_8_weak_determinism(verdict):
    mismatches = []
    acquisitions = 0
    for seed in range(100):
        rng = SplitMix64(8000 + seed)
        base, plan = random_scenario(8000 + seed, threads=rng.between(1, 4),
                                     lock_ratio=0.1 + 0.2 * rng.random(), vulns=(0, 0))
        config = STRICT if seed % 2 == 0 else SELECTIVE
        rec = run(base, plan, config)
        acquisitions += len(rec.order_log)
        if rec.alert is not None:
            mismatches.append((seed, rec.alert))
        for v in range(1, plan.n):
            if rec.consumed[v] != rec.order_log:
                mismatches.append((seed, v))
    ok = verdict(8, not mismatches, f"100 multi-group traces, {acquisitions} leader lock acquisitions replayed "
                                    f"in identical order by every follower; mismatches={len(mismatches)}")
    assert ok, mismatches[:5]


def _noise(rng, cls, tag):
    return Syscall(rng.choice((0, 9, 18, 96)) if cls is None else {SyscallClass.MEM_MGMT: 9,
                   SyscallClass.IO_WRITE: 18, SyscallClass.IO_OTHER: 0}[cls],
                   cls or SyscallClass.IO_OTHER, digest_args(f"{tag}".encode()), 0, rng.between(0, 3))


def _perturb(events, kind, rng):
    """Alter only pre-main, post-exit or memory-management syscalls of a root event list."""
    events = list(events)
    enter = events.index(MAIN_ENTER)
    leave = events.index(EXIT_BEGIN)
    if kind == 0:
        pre = [_noise(rng, SyscallClass.IO_OTHER, f"pre{rng.next_u64()}") for _ in range(rng.between(0, 4))]
        return pre + events[enter:]
    if kind == 1:
        post = [_noise(rng, SyscallClass.IO_WRITE, f"post{rng.next_u64()}") for _ in range(rng.between(1, 4))]
        return events[:leave + 1] + post
    body = []
    for ev in events[enter + 1:leave]:
        if isinstance(ev, Syscall) and ev.cls is SyscallClass.MEM_MGMT and rng.below(2):
            continue  # drop an existing allocation
        body.append(ev)
        if rng.below(4) == 0:
            body.append(_noise(rng, SyscallClass.MEM_MGMT, f"mem{rng.next_u64()}"))
    return events[:enter + 1] + body + events[leave:]


def test_9_exempt_syscalls(verdict):
    alerts = []
    for case in range(50):
        rng = SplitMix64(9000 + case)
        base, plan = random_scenario(9000 + case, vulns=(0, 0))
        variants = variants_of(base, plan)
        victim = rng.between(1, plan.n - 1)
        v = variants[victim]
        changed = _perturb(v.events, case % 3, rng)
        assert changed != list(v.events) or case % 3 == 0
        variants[victim] = Trace(v.root, dict(v.sections, **{v.root: tuple(changed)}), v.variant)
        for config in (STRICT, SELECTIVE):
            rec = execute(variants, config, list(plan.assignment))
            if rec.alert is not None:
                alerts.append((case, config.mode, rec.alert))
    ok = verdict(9, not alerts, f"50 cases (pre-main / post-exit / memory-management differences), "
                                f"strict and selective: alerts={len(alerts)}")
    assert ok, alerts[:5]


def test_10_determinism_and_identity(verdict):
    differing = []
    broken = []
    runs = 0
    for seed in range(60):
        base, plan = random_scenario(10_000 + seed, threads=seed % 4, lock_ratio=0.1 * (seed % 3),
                                     vulns=(0, 2))
        for config in (STRICT, SELECTIVE, SimulationConfig(Mode.SELECTIVE, 2, 3, scheduler_seed=seed)):
            first = compute_metrics(run(base, plan, config))
            second = compute_metrics(run(base, plan, config))
            runs += 1
            if dump_report(first) != dump_report(second):
                differing.append((seed, config))
            if first.o_overall != max(first.finish) + first.o_sync:
                broken.append((seed, config))
    ok = verdict(10, not differing and not broken, f"{runs} simulations run twice: non-identical reports="
                                                   f"{len(differing)}, identity violations={len(broken)}")
    assert ok
