"""Overhead profiles and sanitizer catalogs.

A profile lists the slowdown each protection unit adds (in abstract integer
ticks) plus a residual that no partition can spread out.  Profiles are
either written by hand, produced by ``gen --profile-out``, or derived from a
baseline/instrumented pair of profiling runs with :func:`derive_overhead`.
"""

import enum
from dataclasses import dataclass

from .errors import ProfileError
from .rng import SplitMix64
from .textio import expect_header, join_lines, parse_int, parse_uint, tokenized_lines


class UnitKind(enum.Enum):
    CODE_UNIT = "code"
    SANITIZER = "sanitizer"


@dataclass(frozen=True)
class ProtectionUnit:
    id: str
    kind: UnitKind = UnitKind.CODE_UNIT

    def __post_init__(self):
        if not self.id:
            raise ProfileError("SYNTAX", "protection unit id must be non-empty")


@dataclass(frozen=True)
class ProfileRun:
    """Per-unit costs measured by one profiling run, plus the run's total."""

    entries: dict
    total: int

    def __post_init__(self):
        for uid, cost in self.entries.items():
            if cost < 0:
                raise ProfileError("NEGATIVE_COST", f"unit {uid} has negative cost {cost}")
        if self.total < sum(self.entries.values()):
            raise ProfileError("SYNTAX", f"total {self.total} is below the sum of unit costs")


@dataclass(frozen=True)
class OverheadProfile:
    units: tuple  # of (ProtectionUnit, overhead)
    residual: int = 0

    def __post_init__(self):
        seen = set()
        for unit, cost in self.units:
            if unit.id in seen:
                raise ProfileError("DUPLICATE_UNIT", f"unit {unit.id} listed twice")
            seen.add(unit.id)
            if cost < 0:
                raise ProfileError("NEGATIVE_COST", f"unit {unit.id} has negative cost {cost}")
        if self.residual < 0:
            raise ProfileError("NEGATIVE_COST", f"negative residual {self.residual}")

    def o_total(self):
        """Distributable overhead; the residual is reported separately."""
        return sum(cost for _, cost in self.units)

    def pairs(self):
        return [(unit.id, cost) for unit, cost in self.units]


@dataclass(frozen=True)
class SanitizerCatalog:
    sanitizers: tuple  # of (ProtectionUnit, overhead)
    conflicts: tuple = ()  # of (id, id) in listing order
    synergy: int = 0

    def __post_init__(self):
        ids = set()
        for unit, cost in self.sanitizers:
            if unit.id in ids:
                raise ProfileError("DUPLICATE_UNIT", f"sanitizer {unit.id} listed twice")
            ids.add(unit.id)
            if cost < 0:
                raise ProfileError("NEGATIVE_COST", f"sanitizer {unit.id} has negative cost")
        for a, b in self.conflicts:
            if a == b:
                raise ProfileError("SELF_CONFLICT", f"sanitizer {a} conflicts with itself")
            for x in (a, b):
                if x not in ids:
                    raise ProfileError("UNKNOWN_ID_IN_CONFLICT", f"conflict names unknown sanitizer {x}")

    def o_total(self):
        return sum(cost for _, cost in self.sanitizers)

    def pairs(self):
        return [(unit.id, cost) for unit, cost in self.sanitizers]

    def conflict_set(self):
        return {frozenset(pair) for pair in self.conflicts}


def _parse_units(text, header, allow_total):
    lines = tokenized_lines(text)
    expect_header(lines, header, 1, ProfileError)
    entries = {}
    residual = None
    total = None
    for lineno, toks in lines:
        if toks[0] == "unit" and len(toks) == 4 and toks[2] == "cost":
            uid = toks[1]
            cost = parse_uint(toks[3], lineno, ProfileError, "NEGATIVE_COST")
            if uid in entries:
                raise ProfileError("DUPLICATE_UNIT", f"unit {uid} listed twice", lineno)
            entries[uid] = cost
        elif toks[0] == "residual" and len(toks) == 2 and not allow_total and residual is None:
            residual = parse_uint(toks[1], lineno, ProfileError, "NEGATIVE_COST")
        elif toks[0] == "total" and len(toks) == 2 and allow_total and total is None:
            total = parse_uint(toks[1], lineno, ProfileError, "NEGATIVE_COST")
        else:
            raise ProfileError("SYNTAX", f"unrecognized line {' '.join(toks)!r}", lineno)
    return entries, residual, total


def load_profile(text):
    entries, residual, _ = _parse_units(text, "profile-version", allow_total=False)
    units = tuple((ProtectionUnit(uid), cost) for uid, cost in entries.items())
    return OverheadProfile(units, residual or 0)


def load_profile_run(text):
    """Parse the ProfileRun form of the profile grammar (``total`` instead of ``residual``)."""
    entries, _, total = _parse_units(text, "profile-version", allow_total=True)
    if total is None:
        raise ProfileError("SYNTAX", "profile run is missing its 'total' line")
    return ProfileRun(entries, total)


def dump_profile(profile):
    out = ["profile-version 1"]
    out += [f"unit {unit.id} cost {cost}" for unit, cost in profile.units]
    out.append(f"residual {profile.residual}")
    return join_lines(out)


def dump_profile_run(run):
    out = ["profile-version 1"]
    out += [f"unit {uid} cost {cost}" for uid, cost in run.entries.items()]
    out.append(f"total {run.total}")
    return join_lines(out)


def derive_overhead(baseline, instrumented):
    """Per-unit overhead of the instrumented run relative to the baseline.

    Units present only in the instrumented run count at full cost.  Negative
    deltas (profiling noise) clamp to zero; the residual is the part of the
    total slowdown that no unit accounts for.
    """
    missing = [uid for uid in baseline.entries if uid not in instrumented.entries]
    if missing:
        raise ProfileError("MISSING_UNIT", f"baseline units absent from instrumented run: {', '.join(missing)}")
    overheads = {}
    for uid, cost in baseline.entries.items():
        overheads[uid] = max(0, instrumented.entries[uid] - cost)
    for uid, cost in instrumented.entries.items():
        if uid not in overheads:
            overheads[uid] = cost
    slowdown = instrumented.total - baseline.total
    residual = max(0, slowdown - sum(overheads.values()))
    units = tuple((ProtectionUnit(uid), cost) for uid, cost in overheads.items())
    return OverheadProfile(units, residual)


def load_catalog(text):
    lines = tokenized_lines(text)
    expect_header(lines, "catalog-version", 1, ProfileError)
    sanitizers = {}
    conflicts = []
    synergy = None
    for lineno, toks in lines:
        if toks[0] == "san" and len(toks) == 4 and toks[2] == "cost":
            sid = toks[1]
            if sid in sanitizers:
                raise ProfileError("DUPLICATE_UNIT", f"sanitizer {sid} listed twice", lineno)
            sanitizers[sid] = parse_uint(toks[3], lineno, ProfileError, "NEGATIVE_COST")
        elif toks[0] == "conflict" and len(toks) == 3:
            if toks[1] == toks[2]:
                raise ProfileError("SELF_CONFLICT", f"sanitizer {toks[1]} conflicts with itself", lineno)
            conflicts.append((lineno, toks[1], toks[2]))
        elif toks[0] == "synergy" and len(toks) == 2 and synergy is None:
            synergy = parse_int(toks[1], lineno, ProfileError)
        else:
            raise ProfileError("SYNTAX", f"unrecognized line {' '.join(toks)!r}", lineno)
    for lineno, a, b in conflicts:
        for x in (a, b):
            if x not in sanitizers:
                raise ProfileError("UNKNOWN_ID_IN_CONFLICT", f"conflict names unknown sanitizer {x}", lineno)
    units = tuple((ProtectionUnit(sid, UnitKind.SANITIZER), cost) for sid, cost in sanitizers.items())
    return SanitizerCatalog(units, tuple((a, b) for _, a, b in conflicts), synergy or 0)


def dump_catalog(catalog):
    out = ["catalog-version 1"]
    out += [f"san {unit.id} cost {cost}" for unit, cost in catalog.sanitizers]
    out += [f"conflict {a} {b}" for a, b in catalog.conflicts]
    out.append(f"synergy {catalog.synergy}")
    return join_lines(out)


def load_units(text):
    """Load either a profile or a catalog, dispatching on the header line."""
    for _, toks in tokenized_lines(text):
        if toks[0] == "catalog-version":
            return load_catalog(text)
        break
    return load_profile(text)


def synthetic_profile(total, unit_count, skew=0.5, seed=0, prefix="f"):
    """Profile with exactly ``total`` ticks spread over ``unit_count`` units.

    Unit weights follow a power law ``rank ** -skew`` with multiplicative
    jitter in [0.5, 1.5); ticks are apportioned by largest remainder so the
    total is hit exactly.  ``skew=0`` gives a near-uniform spread.
    """
    if unit_count < 1 or total < 0:
        raise ProfileError("SYNTAX", "synthetic profile needs unit_count >= 1 and total >= 0")
    rng = SplitMix64(seed)
    weights = [(rank + 1) ** -skew * (0.5 + rng.random()) for rank in range(unit_count)]
    scale = total / sum(weights)
    exact = [w * scale for w in weights]
    ticks = [int(x) for x in exact]
    short = total - sum(ticks)
    by_remainder = sorted(range(unit_count), key=lambda i: (ticks[i] - exact[i], i))
    for i in by_remainder[:short]:
        ticks[i] += 1
    order = rng.shuffle(list(range(unit_count)))
    units = tuple((ProtectionUnit(f"{prefix}{i + 1}"), ticks[j]) for i, j in enumerate(order))
    return OverheadProfile(units, 0)


def synthetic_catalog(count, max_cost, seed=0, conflict_pairs=0):
    """Catalog of ``count`` sanitizers with costs in ``[1, max_cost]``.

    Conflicts, when requested, form a matching (no sanitizer appears in two
    pairs), so any N >= 2 admits a conflict-free grouping.
    """
    rng = SplitMix64(seed)
    ids = [f"s{i + 1}" for i in range(count)]
    units = tuple((ProtectionUnit(sid, UnitKind.SANITIZER), rng.between(1, max_cost)) for sid in ids)
    shuffled = rng.shuffle(list(ids))
    pairs = [(shuffled[2 * k], shuffled[2 * k + 1]) for k in range(min(conflict_pairs, count // 2))]
    return SanitizerCatalog(units, tuple(pairs), 0)
