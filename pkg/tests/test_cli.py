import json
from fractions import Fraction

import pytest

from nvx.cli import main
from nvx.engine import Alert, Divergence, GapStats, SimulationReport
from nvx.errors import SimulationError
from nvx.trace import report_digest
from nvx.report import OVERALL_KEY, dump_report, format_report, parse_report

FIVE = "profile-version 1\nunit a cost 5\nunit b cost 4\nunit c cost 3\nunit d cost 2\nunit e cost 1\n"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def pipeline(tmp_path, capsys):
    """gen -> plan -> synth for a small workload with one vulnerable unit."""
    def build(vuln=("u3",), seed=5, n=2, name="w"):
        d = tmp_path / name
        d.mkdir()
        args = ["gen", "--units", 6, "--events", 120, "--seed", seed, "--out", d / "base.trace",
                "--profile-out", d / "base.prof"]
        for v in vuln:
            args += ["--vuln", v]
        assert run(capsys, *args)[0] == 0
        assert run(capsys, "plan", d / "base.prof", "--n", n, "--out", d / "base.plan")[0] == 0
        assert run(capsys, "synth", d / "base.trace", "--plan", d / "base.plan", "--out", d / "v")[0] == 0
        return d
    return build


def test_report_roundtrip():
    rep = SimulationReport(Alert(Divergence.SEQUENCE, 1, 6, "u3"), (197, 180, 150), 215, 18,
                           (GapStats(1, 2, Fraction(3, 7)), GapStats(2, 0, Fraction(0))), 4)
    text = dump_report(rep)
    assert text.splitlines()[1] == "verdict alert kind=sequence variant=1 ordinal=6 unit=u3"
    assert "gap 1 max=2 mean=3/7" in text
    assert parse_report(text) == rep
    assert dump_report(parse_report(text)) == text
    assert "ALERT" in format_report(rep) and "u3" in format_report(rep)


def test_report_rejects_broken_identity_and_junk():
    good = dump_report(SimulationReport(None, (5, 4), 7, 2, (GapStats(1, 0, Fraction(0)),), 0))
    with pytest.raises(SimulationError):
        parse_report(good.replace(f"{OVERALL_KEY} 7", f"{OVERALL_KEY} 8"))
    with pytest.raises(SimulationError):
        parse_report(good + "bogus line\n")
    with pytest.raises(SimulationError):
        parse_report(good.replace("verdict clean\n", ""))


def test_plan_example(tmp_path, capsys):
    prof = tmp_path / "five.prof"
    prof.write_text(FIVE)
    code, out, _ = run(capsys, "plan", prof, "--n", 2, "--oracle")
    assert code == 0
    assert "loads 8 7" in out and "objective 1" in out.splitlines()
    assert "oracle-objective 1" in out
    plan = (tmp_path / "five.plan").read_text()
    assert "assign a 0" in plan and "load 1 7" in plan


def test_plan_single_variant(tmp_path, capsys):
    prof = tmp_path / "five.prof"
    prof.write_text(FIVE)
    code, out, _ = run(capsys, "plan", prof, "--n", 1, "--out", tmp_path / "one.plan")
    assert code == 0 and "objective 0" in out.splitlines()


def test_plan_infeasible_exit_4(tmp_path, capsys):
    cat = tmp_path / "clique.cat"
    cat.write_text("catalog-version 1\nsan x cost 1\nsan y cost 1\nsan z cost 1\n"
                   "conflict x y\nconflict y z\nconflict x z\n")
    assert run(capsys, "plan", cat, "--n", 2, "--conflicts")[0] == 4
    assert run(capsys, "plan", cat, "--n", 2)[0] == 0  # conflicts only apply on request


def test_plan_invalid_input_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.prof"
    bad.write_text("profile-version 1\nunit a cost 1\nunit a cost 2\n")
    assert run(capsys, "plan", bad, "--n", 2)[0] == 3
    assert run(capsys, "plan", tmp_path / "missing.prof", "--n", 2)[0] == 3
    assert run(capsys, "plan")[0] == 3  # usage error


def test_oracle_too_large_exit_4(tmp_path, capsys):
    prof = tmp_path / "big.prof"
    prof.write_text("profile-version 1\n" + "".join(f"unit f{i} cost {i + 1}\n" for i in range(16)))
    assert run(capsys, "plan", prof, "--n", 2, "--oracle")[0] == 4


def test_gen_determinism_and_flags(tmp_path, capsys):
    a, b = tmp_path / "a.trace", tmp_path / "b.trace"
    for path in (a, b):
        assert run(capsys, "gen", "--seed", 9, "--vuln", "u7", "--out", path)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert "vuln u7" in a.read_text()
    prof = tmp_path / "h.prof"
    assert run(capsys, "gen", "--units", 50, "--events", 300, "--heavy-tail", "--out", tmp_path / "h.trace",
               "--profile-out", prof)[0] == 0
    costs = [int(line.split()[3]) for line in prof.read_text().splitlines() if line.startswith("unit ")]
    assert 20 * max(costs) >= 19 * sum(costs)
    assert run(capsys, "gen", "--vuln", "u99")[0] == 3


def test_synth_outputs(pipeline):
    d = pipeline()
    files = sorted(p.name for p in (d / "v").iterdir())
    assert files == ["variant-0.trace", "variant-1.trace"]
    plan = (d / "base.plan").read_text()
    owner = int(next(line.split()[2] for line in plan.splitlines() if line.startswith("assign u3 ")))
    report_line = f"syscall 1 iow {report_digest('u3'):016x} 0000000000000000 1"
    for i in (0, 1):
        text = (d / "v" / f"variant-{i}.trace").read_text()
        assert (report_line in text) == (i == owner)
        assert "vuln" not in text


def test_synth_rejects_incomplete_plan(pipeline, capsys):
    d = pipeline(name="x")
    plan = d / "base.plan"
    plan.write_text("".join(line + "\n" for line in plan.read_text().splitlines() if not line.startswith("assign u2 ")))
    assert run(capsys, "synth", d / "base.trace", "--plan", plan, "--out", d / "bad")[0] == 3


def test_simulate_alert_and_clean(pipeline, capsys):
    d = pipeline()
    v = d / "v"
    code, _, _ = run(capsys, "simulate", v / "variant-0.trace", v / "variant-1.trace", "--plan", d / "base.plan",
                     "--out", d / "r.report")
    assert code == 2
    text = (d / "r.report").read_text()
    assert "unit=u3" in text
    code, out, _ = run(capsys, "report", d / "r.report")
    assert code == 0 and "u3" in out

    code, out, _ = run(capsys, "simulate", v / "variant-0.trace", v / "variant-0.trace")
    assert code == 0 and "verdict clean" in out


def test_selective_capacity_reported(pipeline, capsys):
    d = pipeline(vuln=(), name="sel")
    v = d / "v"
    code, out, _ = run(capsys, "simulate", v / "variant-0.trace", v / "variant-1.trace", "--mode", "selective",
                       "--ring", 4)
    assert code == 0
    gap = next(line for line in out.splitlines() if line.startswith("gap 1 "))
    assert int(gap.split()[2].removeprefix("max=")) <= 4


def test_manifest_and_override(pipeline, capsys):
    d = pipeline(vuln=(), name="man")
    manifest = d / "run.json"
    manifest.write_text(json.dumps({"variants": ["v/variant-0.trace", "v/variant-1.trace"],
                                    "mode": "selective", "ring": 2, "out": "m.report"}))
    assert run(capsys, "simulate", "--manifest", manifest)[0] == 0
    assert (d / "m.report").exists()
    assert run(capsys, "simulate", "--manifest", manifest, "--mode", "bogus")[0] == 3
    assert run(capsys, "simulate", "--manifest", manifest, "--ring", 0)[0] == 3


def test_simulate_invalid_exit_3(tmp_path, capsys):
    one = tmp_path / "one.trace"
    one.write_text("trace-version 1\ntrace main\nmain-enter\n")
    assert run(capsys, "simulate", one)[0] == 3
    assert run(capsys, "simulate", one, tmp_path / "nope.trace")[0] == 3


def test_simulate_stall_exit_5(tmp_path, capsys):
    lead = tmp_path / "a.trace"
    follow = tmp_path / "b.trace"
    lead.write_text("trace-version 1\ntrace main\nmain-enter\nfork t1\nexit-begin\ntrace t1\ncompute 1\n")
    follow.write_text("trace-version 1\ntrace main\nmain-enter\nfork t1\nexit-begin\ntrace t1\n"
                      "lock m0 mutex-lock 0\n")
    assert run(capsys, "simulate", lead, follow)[0] == 5


def test_end_to_end_is_byte_identical(tmp_path, capsys):
    outputs = []
    for name in ("one", "two"):
        d = tmp_path / name
        d.mkdir()
        run(capsys, "gen", "--units", 5, "--events", 150, "--threads", 2, "--lock-ratio", 0.1,
            "--vuln", "u2", "--seed", 11, "--out", d / "t", "--profile-out", d / "p")
        run(capsys, "plan", d / "p", "--n", 3, "--out", d / "plan")
        run(capsys, "synth", d / "t", "--plan", d / "plan", "--out", d / "v")
        code, _, _ = run(capsys, "simulate", *sorted((d / "v").iterdir()), "--plan", d / "plan",
                         "--out", d / "r")
        outputs.append((code, [p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()]))
    assert outputs[0] == outputs[1]
    assert outputs[0][0] == 2
