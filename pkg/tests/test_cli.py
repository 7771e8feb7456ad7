from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest

from gazekit.classify import OutcomeClass
from gazekit.cli import main
from gazekit.session_io import FRAMES_NAME, read_session, sessions_under


def tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def simulate(tmp_path, name, *extra):
    out = tmp_path / name
    rc = main(
        [
            "simulate",
            "--seed", "3",
            "--subjects", "2",
            "--out", str(out),
            "--rounds", "2",
            "--landing-error-sd", "8",
            *extra,
        ]
    )
    assert rc == 0
    return out


def test_simulate_creates_one_dir_per_cell(tmp_path, capsys):
    out = simulate(tmp_path, "a", "--condition", "all")
    dirs = sessions_under(out)
    assert len(dirs) == 2 * 4
    assert {d.parent.name for d in dirs} == {"sub00", "sub01"}
    printed = capsys.readouterr().out
    assert printed.count("wrote ") == 8
    assert "18 selections" in printed


def test_simulate_is_deterministic_across_runs(tmp_path):
    a = simulate(tmp_path, "a", "--condition", "all")
    b = simulate(tmp_path, "b", "--condition", "all")
    assert tree_digest(a) == tree_digest(b)


def test_simulate_early_bias_produces_raw_early_triggers(tmp_path):
    out = simulate(tmp_path, "m", "--condition", "magnetic", "--pinch-offset-mean", "-120")
    total_early = 0
    for d in sessions_under(out):
        _, _, selections = read_session(d)
        total_early += sum(1 for r in selections if r.outcome_raw is OutcomeClass.EARLY_TRIGGER)
    assert total_early > 0


def test_validate_exit_codes(tmp_path, capsys):
    out = simulate(tmp_path, "v", "--condition", "none")
    assert main(["validate", str(out)]) == 0
    # Tamper one file: exit 1 and the finding names file/line/field.
    session = sessions_under(out)[0]
    lines = (session / FRAMES_NAME).read_text().splitlines()
    row = json.loads(lines[4])
    row["t_ms"] = -1.0
    lines[4] = json.dumps(row, separators=(",", ":"))
    (session / FRAMES_NAME).write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["validate", str(out)]) == 1
    printed = capsys.readouterr().out
    assert "frames.jsonl:5" in printed and "t_ms" in printed
    # Unreadable path: exit 2.
    assert main(["validate", str(tmp_path / "missing")]) == 2


def test_validate_replay_flag(tmp_path):
    out = simulate(tmp_path, "r", "--condition", "sticky_magnetic")
    assert main(["validate", str(out), "--replay"]) == 0


def test_classify_check_against_stored(tmp_path, capsys):
    out = simulate(tmp_path, "c", "--condition", "sticky")
    session = sessions_under(out)[0]
    capsys.readouterr()
    assert main(["classify", "--in", str(session), "--check"]) == 0
    printed = capsys.readouterr().out
    assert len(printed.strip().splitlines()) == 18  # one JSONL record per selection


def test_classify_writes_file(tmp_path):
    out = simulate(tmp_path, "cw", "--condition", "none")
    session = sessions_under(out)[0]
    dest = tmp_path / "records.jsonl"
    assert main(["classify", "--in", str(session), "--out", str(dest)]) == 0
    assert len(dest.read_text().splitlines()) == 18


def test_analyze_emits_csv(tmp_path, capsys):
    out = simulate(tmp_path, "an", "--condition", "all")
    capsys.readouterr()
    assert main(["analyze", "--in", str(out)]) == 0
    printed = capsys.readouterr().out
    lines = printed.strip().splitlines()
    assert lines[0].startswith("subject,condition,block,throughput_bps")
    assert len(lines) == 1 + 8


def test_report_writes_tables(tmp_path):
    out = simulate(tmp_path, "rep", "--condition", "all")
    assert main(["report", "--in", str(out), "--out", str(tmp_path / "repout")]) == 0
    anova = (tmp_path / "repout" / "anova.csv").read_text().splitlines()
    assert len(anova) == 1 + 6


def test_report_unbalanced_exits_1(tmp_path, capsys):
    out = simulate(tmp_path, "u", "--condition", "all")
    victim = sessions_under(out)[0]
    import shutil

    shutil.rmtree(victim)
    capsys.readouterr()
    assert main(["report", "--in", str(out)]) == 1
    err = capsys.readouterr().err
    assert "missing cells" in err and "sub00" in err


def test_gazekit_out_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("GAZEKIT_OUT", str(tmp_path / "envout"))
    rc = main(["simulate", "--seed", "1", "--subjects", "1", "--condition", "none", "--rounds", "1"])
    assert rc == 0
    assert sessions_under(tmp_path / "envout")


def test_help_per_subcommand():
    for sub in ("simulate", "classify", "analyze", "report", "validate", "serve"):
        with pytest.raises(SystemExit) as e:
            main([sub, "--help"])
        assert e.value.code == 0


def test_bad_flags_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["simulate", "--condition", "bogus"])
    assert e.value.code == 2
