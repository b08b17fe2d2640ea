"""Text form of simulation reports."""

from fractions import Fraction

from .engine import Alert, Divergence, GapStats, SimulationReport
from .errors import SimulationError
from .textio import expect_header, join_lines, parse_uint, tokenized_lines

OVERALL_KEY = "o-bunshin"  # keyword fixed by the report grammar


def _rational(value):
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def dump_report(report):
    out = ["report-version 1"]
    a = report.alert
    if a is None:
        out.append("verdict clean")
    else:
        line = f"verdict alert kind={a.kind.value} variant={a.variant} ordinal={a.ordinal}"
        if a.unit is not None:
            line += f" unit={a.unit}"
        out.append(line)
    out += [f"finish {v} {t}" for v, t in enumerate(report.finish)]
    out.append(f"{OVERALL_KEY} {report.o_overall}")
    out.append(f"o-sync {report.o_sync}")
    out += [f"gap {g.variant} max={g.max} mean={_rational(g.mean)}" for g in report.gaps]
    out.append(f"locks-replayed {report.locks_replayed}")
    return join_lines(out)


def _fields(tokens, lineno, allowed):
    fields = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or key not in allowed or key in fields:
            raise SimulationError("SYNTAX", f"bad field {tok!r}", lineno)
        fields[key] = value
    return fields


def parse_report(text):
    lines = tokenized_lines(text)
    expect_header(lines, "report-version", 1, SimulationError)
    alert = clean = None
    finish = {}
    gaps = []
    o_overall = o_sync = locks = None

    def uint(tok, lineno):
        return parse_uint(tok, lineno, SimulationError)

    for lineno, toks in lines:
        kw = toks[0]
        if kw == "verdict" and toks[1:] == ["clean"]:
            clean = True
        elif kw == "verdict" and len(toks) >= 2 and toks[1] == "alert":
            f = _fields(toks[2:], lineno, {"kind", "variant", "ordinal", "unit"})
            try:
                kind = Divergence(f["kind"])
                alert = Alert(kind, uint(f["variant"], lineno), uint(f["ordinal"], lineno), f.get("unit"))
            except (KeyError, ValueError):
                raise SimulationError("SYNTAX", "alert verdict needs kind, variant and ordinal", lineno)
        elif kw == "finish" and len(toks) == 3:
            finish[uint(toks[1], lineno)] = uint(toks[2], lineno)
        elif kw == OVERALL_KEY and len(toks) == 2:
            o_overall = uint(toks[1], lineno)
        elif kw == "o-sync" and len(toks) == 2:
            o_sync = uint(toks[1], lineno)
        elif kw == "gap" and len(toks) == 4:
            f = _fields(toks[2:], lineno, {"max", "mean"})
            try:
                mean = Fraction(f["mean"])
            except (KeyError, ValueError, ZeroDivisionError):
                raise SimulationError("SYNTAX", "gap line needs max= and a rational mean=", lineno)
            gaps.append(GapStats(uint(toks[1], lineno), uint(f.get("max", "x"), lineno), mean))
        elif kw == "locks-replayed" and len(toks) == 2:
            locks = uint(toks[1], lineno)
        else:
            raise SimulationError("SYNTAX", f"unrecognized line {' '.join(toks)!r}", lineno)
    if (clean is None) == (alert is None) or o_overall is None or o_sync is None or locks is None:
        raise SimulationError("SYNTAX", f"report needs one verdict, {OVERALL_KEY}, o-sync and locks-replayed")
    if sorted(finish) != list(range(len(finish))) or not finish:
        raise SimulationError("SYNTAX", "finish lines must cover variants 0..N-1")
    try:
        return SimulationReport(alert, tuple(finish[v] for v in range(len(finish))), o_overall, o_sync,
                                tuple(gaps), locks)
    except AssertionError as exc:
        raise SimulationError("SYNTAX", str(exc))


def format_report(report):
    """Human-oriented rendering for the ``report`` subcommand."""
    lines = []
    if report.alert is None:
        lines.append("verdict: CLEAN (all variants reached end of trace)")
    else:
        a = report.alert
        lines.append(f"verdict: ALERT, {a.kind.value} divergence in variant {a.variant} "
                     f"at synchronized syscall #{a.ordinal}")
        if a.unit is not None:
            lines.append(f"  detected by protection unit {a.unit}")
    lines.append("")
    lines.append(f"{'variant':>8} {'role':>9} {'finish':>10} {'gap max':>8} {'gap mean':>10}")
    gaps = {g.variant: g for g in report.gaps}
    for v, t in enumerate(report.finish):
        g = gaps.get(v)
        role = "leader" if v == 0 else "follower"
        gmax = str(g.max) if g else "-"
        gmean = f"{float(g.mean):.3f}" if g else "-"
        lines.append(f"{v:>8} {role:>9} {t:>10} {gmax:>8} {gmean:>10}")
    lines.append("")
    slowest = max(report.finish)
    lines.append(f"overall = {report.o_overall} = slowest variant {slowest} + o_sync {report.o_sync}")
    lines.append(f"lock acquisitions replayed: {report.locks_replayed}")
    return "\n".join(lines) + "\n"
