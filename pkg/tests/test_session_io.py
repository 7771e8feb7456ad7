from __future__ import annotations

import json
from pathlib import Path

import pytest

import gazekit as gz
from gazekit.session_io import (
    FRAMES_NAME,
    MANIFEST_NAME,
    SELECTIONS_NAME,
    Finding,
    MissingSessionFileError,
    SchemaError,
    read_session,
    validate_session,
    write_session,
)

from conftest import flat_ring, quiet_sim


@pytest.fixture(scope="module")
def noisy_session():
    blk = gz.BlockConfig(condition=gz.Condition.STICKY_MAGNETIC, ring=flat_ring(rounds=3))
    sim = gz.SimConfig(seed=99, pinch_offset_mean_ms=-80.0, pinch_offset_sd_ms=120.0, dropout_rate=0.01)
    data, _ = gz.simulate_session(blk, sim)
    return data


def test_write_read_round_trip(tmp_path, noisy_session):
    d = write_session(noisy_session.manifest, noisy_session.frames, noisy_session.selections, tmp_path / "s")
    manifest, frames, selections = read_session(d)
    assert manifest == noisy_session.manifest
    assert frames == noisy_session.frames
    assert selections == noisy_session.selections


def test_rewrite_is_byte_identical(tmp_path, noisy_session):
    d1 = write_session(noisy_session.manifest, noisy_session.frames, noisy_session.selections, tmp_path / "a")
    d2 = write_session(*read_session(d1), tmp_path / "b")
    for name in (MANIFEST_NAME, FRAMES_NAME, SELECTIONS_NAME):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_selection_line_count_matches_block(tmp_path):
    data, _ = gz.simulate_session(gz.BlockConfig(), quiet_sim())
    d = write_session(data.manifest, data.frames, data.selections, tmp_path / "s")
    lines = (d / SELECTIONS_NAME).read_text().splitlines()
    assert len(lines) == 90


def test_aborted_session_with_no_selections_is_valid(tmp_path, noisy_session):
    d = write_session(noisy_session.manifest, noisy_session.frames[:50], [], tmp_path / "s")
    manifest, frames, selections = read_session(d)
    assert len(frames) == 50
    assert selections == []
    assert validate_session(d) == []


def test_tampered_time_regression_names_line(tmp_path, noisy_session):
    d = write_session(noisy_session.manifest, noisy_session.frames, noisy_session.selections, tmp_path / "s")
    lines = (d / FRAMES_NAME).read_text().splitlines()
    row = json.loads(lines[6])
    row["t_ms"] = 0.0
    lines[6] = json.dumps(row, separators=(",", ":"))
    (d / FRAMES_NAME).write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError) as e:
        read_session(d)
    assert e.value.line == 7
    assert e.value.field == "t_ms"
    assert FRAMES_NAME in str(e.value)


def test_missing_selections_file_is_distinct_error(tmp_path, noisy_session):
    d = write_session(noisy_session.manifest, noisy_session.frames, noisy_session.selections, tmp_path / "s")
    (d / SELECTIONS_NAME).unlink()
    with pytest.raises(MissingSessionFileError):
        read_session(d)


def test_unknown_schema_version_rejected(tmp_path, noisy_session):
    d = write_session(noisy_session.manifest, noisy_session.frames, noisy_session.selections, tmp_path / "s")
    obj = json.loads((d / MANIFEST_NAME).read_text())
    obj["schema_version"] = 2
    (d / MANIFEST_NAME).write_text(json.dumps(obj))
    with pytest.raises(SchemaError) as e:
        read_session(d)
    assert e.value.field == "schema_version"


def test_condition_flag_mismatch_rejected(tmp_path, noisy_session):
    d = write_session(noisy_session.manifest, noisy_session.frames, noisy_session.selections, tmp_path / "s")
    obj = json.loads((d / MANIFEST_NAME).read_text())
    obj["heuristics"]["sticky_enabled"] = False
    (d / MANIFEST_NAME).write_text(json.dumps(obj))
    with pytest.raises(SchemaError) as e:
        read_session(d)
    assert e.value.field == "heuristics"


def test_validate_lists_all_seeded_violations(tmp_path, noisy_session):
    d = write_session(noisy_session.manifest, noisy_session.frames, noisy_session.selections, tmp_path / "s")
    frame_lines = (d / FRAMES_NAME).read_text().splitlines()
    r3 = json.loads(frame_lines[3])
    r3["raw_target"] = 99  # violation 1: id out of range
    frame_lines[3] = json.dumps(r3, separators=(",", ":"))
    r9 = json.loads(frame_lines[9])
    r9["valid"] = "yes"  # violation 2: non-boolean
    frame_lines[9] = json.dumps(r9, separators=(",", ":"))
    (d / FRAMES_NAME).write_text("\n".join(frame_lines) + "\n")
    sel_lines = (d / SELECTIONS_NAME).read_text().splitlines()
    s0 = json.loads(sel_lines[0])
    s0["outcome_effective"] = "banana"  # violation 3: unknown outcome
    sel_lines[0] = json.dumps(s0, separators=(",", ":"))
    (d / SELECTIONS_NAME).write_text("\n".join(sel_lines) + "\n")

    findings = validate_session(d)
    assert len(findings) == 3
    assert {f.line for f in findings if f.file == FRAMES_NAME} == {4, 10}
    assert [f.line for f in findings if f.file == SELECTIONS_NAME] == [1]


def test_validate_missing_dir_raises(tmp_path):
    with pytest.raises(MissingSessionFileError):
        validate_session(tmp_path / "nope")


def test_write_refuses_invalid_rows(tmp_path, noisy_session):
    import dataclasses

    bad = list(noisy_session.frames)
    bad[5] = dataclasses.replace(bad[5], raw_target=42)
    with pytest.raises(SchemaError):
        write_session(noisy_session.manifest, bad, noisy_session.selections, tmp_path / "s")


def test_finding_str_is_clickable():
    f = Finding("frames.jsonl", 7, "t_ms", "must strictly increase")
    assert str(f) == "frames.jsonl:7: t_ms: must strictly increase"


def test_sessions_under_discovers_tree(tmp_path, noisy_session):
    write_session(noisy_session.manifest, noisy_session.frames, noisy_session.selections, tmp_path / "x" / "a")
    write_session(noisy_session.manifest, noisy_session.frames, noisy_session.selections, tmp_path / "x" / "b")
    found = gz.session_io.sessions_under(tmp_path)
    assert [p.name for p in found] == ["a", "b"]
    assert gz.session_io.sessions_under(tmp_path / "x" / "a") == [tmp_path / "x" / "a"]
