"""Session log schemas, persistence, and validation.

A session is a directory with three files:

* ``manifest.json``  — who/what/how: subject, condition, geometry, heuristics.
* ``frames.jsonl``   — one JSON object per gaze frame, engine-annotated.
* ``selections.jsonl`` — one JSON object per selection (flat SelectionRecord).

Streams are JSON Lines so live capture can append one complete line per event
and survive a crash mid-session. Target-id fields use -1 for "no target" to
keep rows fixed-schema; optional timestamps serialize as null. Numbers are
written with shortest round-trip precision, which makes read(write(x)) == x
and rewrite byte-identical — bit-exact replay depends on it.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .classify import OutcomeClass, SelectionRecord
from .reticle import GazeSample, HeuristicConfig
from .task import Condition, RingSpec, condition_matches

SCHEMA_VERSION = 1

MANIFEST_NAME = "manifest.json"
FRAMES_NAME = "frames.jsonl"
SELECTIONS_NAME = "selections.jsonl"

FRAME_FIELDS = (
    "t_ms",
    "gaze_x_m",
    "gaze_y_m",
    "valid",
    "raw_target",
    "effective_target",
    "snapped",
    "stuck",
    "pinch_down",
)

SELECTION_FIELDS = (
    "round",
    "trial",
    "condition",
    "highlighted",
    "selected_effective",
    "selected_raw",
    "highlight_onset_t",
    "first_entry_t",
    "last_exit_before_pinch_t",
    "first_entry_after_pinch_t",
    "pinch_t",
    "outcome_effective",
    "outcome_raw",
    "corrected_by_heuristic",
)


class SchemaError(ValueError):
    """A session file violates the schema. Carries file/line/field context."""

    def __init__(self, file: str, line: int | None, fieldname: str | None, message: str):
        self.file = file
        self.line = line
        self.field = fieldname
        where = file if line is None else f"{file}:{line}"
        what = message if fieldname is None else f"{fieldname}: {message}"
        super().__init__(f"{where}: {what}")


class MissingSessionFileError(FileNotFoundError):
    """A required session file is absent."""


@dataclass(frozen=True)
class Finding:
    file: str
    line: int | None
    field: str | None
    message: str

    def __str__(self) -> str:
        where = self.file if self.line is None else f"{self.file}:{self.line}"
        what = self.message if self.field is None else f"{self.field}: {self.message}"
        return f"{where}: {what}"


@dataclass(frozen=True, slots=True)
class FrameRow:
    """One engine-annotated gaze frame as persisted in frames.jsonl."""

    t_ms: float
    gaze_x_m: float
    gaze_y_m: float
    valid: bool
    raw_target: int
    effective_target: int
    snapped: bool
    stuck: bool
    pinch_down: bool

    def to_sample(self) -> GazeSample:
        from .geometry import PlanePoint

        return GazeSample(t=self.t_ms, pos=PlanePoint(self.gaze_x_m, self.gaze_y_m), valid=self.valid)


@dataclass(frozen=True)
class SessionManifest:
    session_id: str
    subject_id: str
    condition: Condition
    block_index: int
    ring: RingSpec
    heuristics: HeuristicConfig
    sim: dict | None = None
    seed: int | None = None
    schema_version: int = SCHEMA_VERSION


# --- canonical serialization ------------------------------------------------


def _dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def manifest_to_obj(m: SessionManifest) -> dict:
    return {
        "schema_version": m.schema_version,
        "session_id": m.session_id,
        "subject_id": m.subject_id,
        "condition": m.condition.value,
        "block_index": m.block_index,
        "layout": {
            "n_targets": m.ring.n_targets,
            "inter_target_m": m.ring.inter_target_m,
            "plane_distance_m": m.ring.plane_distance_m,
            "size_schedule_deg": list(m.ring.size_schedule_deg),
        },
        "heuristics": {
            "sticky_enabled": m.heuristics.sticky_enabled,
            "sticky_hold_ms": m.heuristics.sticky_hold_ms,
            "magnetic_enabled": m.heuristics.magnetic_enabled,
            "magnetic_margin_dmm": m.heuristics.magnetic_margin_dmm,
        },
        "sim": m.sim,
        "seed": m.seed,
    }


def frame_to_line(row: FrameRow) -> str:
    return _dumps(
        {
            "t_ms": row.t_ms,
            "gaze_x_m": row.gaze_x_m,
            "gaze_y_m": row.gaze_y_m,
            "valid": row.valid,
            "raw_target": row.raw_target,
            "effective_target": row.effective_target,
            "snapped": row.snapped,
            "stuck": row.stuck,
            "pinch_down": row.pinch_down,
        }
    )


def _id_out(v: int | None) -> int:
    return -1 if v is None else v


def _id_in(v: int) -> int | None:
    return None if v == -1 else v


def selection_to_line(r: SelectionRecord) -> str:
    return _dumps(
        {
            "round": r.round,
            "trial": r.trial,
            "condition": r.condition.value,
            "highlighted": r.highlighted,
            "selected_effective": _id_out(r.selected_effective),
            "selected_raw": _id_out(r.selected_raw),
            "highlight_onset_t": r.highlight_onset_t,
            "first_entry_t": r.first_entry_t,
            "last_exit_before_pinch_t": r.last_exit_before_pinch_t,
            "first_entry_after_pinch_t": r.first_entry_after_pinch_t,
            "pinch_t": r.pinch_t,
            "outcome_effective": r.outcome_effective.value,
            "outcome_raw": r.outcome_raw.value,
            "corrected_by_heuristic": r.corrected_by_heuristic,
        }
    )


def manifest_to_bytes(m: SessionManifest) -> bytes:
    return (json.dumps(manifest_to_obj(m), indent=2, allow_nan=False) + "\n").encode("utf-8")


# --- field-level checks -----------------------------------------------------


def _is_num(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_frame_obj(obj: Any, n_targets: int, hcfg: HeuristicConfig, prev_t: float | None) -> list[tuple[str, str]]:
    """Return (field, message) problems for one parsed frame object."""
    problems: list[tuple[str, str]] = []
    if not isinstance(obj, dict):
        return [("", "frame row must be a JSON object")]
    for k in FRAME_FIELDS:
        if k not in obj:
            problems.append((k, "missing field"))
    if problems:
        return problems
    if not _is_num(obj["t_ms"]):
        problems.append(("t_ms", "must be a finite number"))
    elif prev_t is not None and obj["t_ms"] <= prev_t:
        problems.append(("t_ms", f"must strictly increase (prev {prev_t!r}, got {obj['t_ms']!r})"))
    for k in ("gaze_x_m", "gaze_y_m"):
        if not _is_num(obj[k]):
            problems.append((k, "must be a finite number"))
    for k in ("valid", "snapped", "stuck", "pinch_down"):
        if not isinstance(obj[k], bool):
            problems.append((k, "must be a boolean"))
    for k in ("raw_target", "effective_target"):
        v = obj[k]
        if not isinstance(v, int) or isinstance(v, bool) or not (-1 <= v < n_targets):
            problems.append((k, f"must be -1 or a target id below {n_targets}"))
    if not problems:
        if obj["snapped"] and not hcfg.magnetic_enabled:
            problems.append(("snapped", "set, but the magnetic heuristic is disabled"))
        if obj["stuck"] and not hcfg.sticky_enabled:
            problems.append(("stuck", "set, but the sticky heuristic is disabled"))
        if (obj["snapped"] or obj["stuck"]) and obj["effective_target"] == -1:
            problems.append(("effective_target", "snapped/stuck rows must name a target"))
        if not hcfg.magnetic_enabled and not hcfg.sticky_enabled:
            if obj["effective_target"] != obj["raw_target"]:
                problems.append(("effective_target", "must equal raw_target when all heuristics are off"))
    return problems


def _check_frame_row(
    row: FrameRow, n_targets: int, hcfg: HeuristicConfig, prev_t: float | None
) -> tuple[str, str] | None:
    """Native-row twin of _check_frame_obj, used by the writer hot path."""
    if not _is_num(row.t_ms):
        return ("t_ms", "must be a finite number")
    if prev_t is not None and row.t_ms <= prev_t:
        return ("t_ms", f"must strictly increase (prev {prev_t!r}, got {row.t_ms!r})")
    if not _is_num(row.gaze_x_m) or not _is_num(row.gaze_y_m):
        return ("gaze_x_m", "gaze coordinates must be finite numbers")
    for fieldname, v in (("raw_target", row.raw_target), ("effective_target", row.effective_target)):
        if not isinstance(v, int) or isinstance(v, bool) or not (-1 <= v < n_targets):
            return (fieldname, f"must be -1 or a target id below {n_targets}")
    if row.snapped and not hcfg.magnetic_enabled:
        return ("snapped", "set, but the magnetic heuristic is disabled")
    if row.stuck and not hcfg.sticky_enabled:
        return ("stuck", "set, but the sticky heuristic is disabled")
    if (row.snapped or row.stuck) and row.effective_target == -1:
        return ("effective_target", "snapped/stuck rows must name a target")
    if not hcfg.magnetic_enabled and not hcfg.sticky_enabled and row.effective_target != row.raw_target:
        return ("effective_target", "must equal raw_target when all heuristics are off")
    return None


_OUTCOMES = {o.value for o in OutcomeClass}
_CONDITIONS = {c.value for c in Condition}


def _check_selection_obj(
    obj: Any,
    manifest: SessionManifest,
    prev: dict | None,
) -> list[tuple[str, str]]:
    problems: list[tuple[str, str]] = []
    if not isinstance(obj, dict):
        return [("", "selection row must be a JSON object")]
    for k in SELECTION_FIELDS:
        if k not in obj:
            problems.append((k, "missing field"))
    if problems:
        return problems
    n = manifest.ring.n_targets
    rounds = manifest.ring.rounds
    for k in ("round", "trial"):
        if not isinstance(obj[k], int) or isinstance(obj[k], bool) or obj[k] < 0:
            problems.append((k, "must be a non-negative integer"))
    if not problems:
        if obj["round"] >= rounds:
            problems.append(("round", f"exceeds the {rounds}-round schedule"))
        if obj["trial"] >= n:
            problems.append(("trial", f"exceeds {n} trials per round"))
        if prev is None:
            if (obj["round"], obj["trial"]) != (0, 0):
                problems.append(("trial", "selections must start at round 0, trial 0"))
        else:
            expect = (prev["round"], prev["trial"] + 1)
            if prev["trial"] + 1 == n:
                expect = (prev["round"] + 1, 0)
            if (obj["round"], obj["trial"]) != expect:
                problems.append(("trial", f"expected round/trial {expect}, got {(obj['round'], obj['trial'])}"))
    if obj["condition"] not in _CONDITIONS:
        problems.append(("condition", f"unknown condition {obj['condition']!r}"))
    elif obj["condition"] != manifest.condition.value:
        problems.append(("condition", f"does not match manifest condition {manifest.condition.value!r}"))
    if not isinstance(obj["highlighted"], int) or isinstance(obj["highlighted"], bool) or not (0 <= obj["highlighted"] < n):
        problems.append(("highlighted", f"must be a target id below {n}"))
    for k in ("selected_effective", "selected_raw"):
        v = obj[k]
        if not isinstance(v, int) or isinstance(v, bool) or not (-1 <= v < n):
            problems.append((k, f"must be -1 or a target id below {n}"))
    for k in ("highlight_onset_t", "pinch_t"):
        if not _is_num(obj[k]):
            problems.append((k, "must be a finite number"))
    for k in ("first_entry_t", "last_exit_before_pinch_t", "first_entry_after_pinch_t"):
        if obj[k] is not None and not _is_num(obj[k]):
            problems.append((k, "must be null or a finite number"))
    for k in ("outcome_effective", "outcome_raw"):
        if obj[k] not in _OUTCOMES:
            problems.append((k, f"unknown outcome {obj[k]!r}"))
    if not isinstance(obj["corrected_by_heuristic"], bool):
        problems.append(("corrected_by_heuristic", "must be a boolean"))
    if problems:
        return problems
    onset = obj["highlight_onset_t"]
    if obj["pinch_t"] < onset:
        problems.append(("pinch_t", "precedes highlight onset"))
    for k in ("first_entry_t", "last_exit_before_pinch_t", "first_entry_after_pinch_t"):
        if obj[k] is not None and obj[k] < onset:
            problems.append((k, "precedes highlight onset"))
    if prev is not None and obj["pinch_t"] <= prev["pinch_t"]:
        problems.append(("pinch_t", "must strictly increase across selections"))
    eff_correct = obj["outcome_effective"] == OutcomeClass.CORRECT.value
    raw_correct = obj["outcome_raw"] == OutcomeClass.CORRECT.value
    if obj["corrected_by_heuristic"] != (eff_correct and not raw_correct):
        problems.append(("corrected_by_heuristic", "inconsistent with the two outcomes"))
    return problems


def _manifest_from_obj(obj: Any, file: str) -> SessionManifest:
    def fail(fieldname: str, msg: str) -> SchemaError:
        return SchemaError(file, None, fieldname, msg)

    if not isinstance(obj, dict):
        raise fail("", "manifest must be a JSON object")
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise fail("schema_version", f"unknown schema_version {version!r}; this build reads version {SCHEMA_VERSION}")
    for k in ("session_id", "subject_id"):
        if not isinstance(obj.get(k), str) or not obj[k]:
            raise fail(k, "must be a non-empty string")
    if obj.get("condition") not in _CONDITIONS:
        raise fail("condition", f"unknown condition {obj.get('condition')!r}")
    if not isinstance(obj.get("block_index"), int) or obj["block_index"] < 0:
        raise fail("block_index", "must be a non-negative integer")
    layout = obj.get("layout")
    if not isinstance(layout, dict):
        raise fail("layout", "must be a JSON object")
    try:
        ring = RingSpec(
            n_targets=layout["n_targets"],
            inter_target_m=layout["inter_target_m"],
            plane_distance_m=layout["plane_distance_m"],
            size_schedule_deg=tuple(layout["size_schedule_deg"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise fail("layout", f"invalid ring geometry: {e}") from e
    heur = obj.get("heuristics")
    if not isinstance(heur, dict):
        raise fail("heuristics", "must be a JSON object")
    try:
        hcfg = HeuristicConfig(
            sticky_enabled=bool(heur["sticky_enabled"]),
            sticky_hold_ms=float(heur["sticky_hold_ms"]),
            magnetic_enabled=bool(heur["magnetic_enabled"]),
            magnetic_margin_dmm=float(heur["magnetic_margin_dmm"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise fail("heuristics", f"invalid heuristic config: {e}") from e
    condition = Condition(obj["condition"])
    if not condition_matches(condition, hcfg):
        raise fail("heuristics", f"enabled flags do not match condition {condition.value!r}")
    sim = obj.get("sim")
    if sim is not None and not isinstance(sim, dict):
        raise fail("sim", "must be null or a JSON object")
    seed = obj.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise fail("seed", "must be null or an integer")
    return SessionManifest(
        session_id=obj["session_id"],
        subject_id=obj["subject_id"],
        condition=condition,
        block_index=obj["block_index"],
        ring=ring,
        heuristics=hcfg,
        sim=sim,
        seed=seed,
    )


def _frame_from_obj(obj: dict) -> FrameRow:
    return FrameRow(
        t_ms=float(obj["t_ms"]),
        gaze_x_m=float(obj["gaze_x_m"]),
        gaze_y_m=float(obj["gaze_y_m"]),
        valid=obj["valid"],
        raw_target=obj["raw_target"],
        effective_target=obj["effective_target"],
        snapped=obj["snapped"],
        stuck=obj["stuck"],
        pinch_down=obj["pinch_down"],
    )


def _selection_from_obj(obj: dict) -> SelectionRecord:
    return SelectionRecord(
        round=obj["round"],
        trial=obj["trial"],
        condition=Condition(obj["condition"]),
        highlighted=obj["highlighted"],
        selected_effective=_id_in(obj["selected_effective"]),
        selected_raw=_id_in(obj["selected_raw"]),
        highlight_onset_t=float(obj["highlight_onset_t"]),
        first_entry_t=None if obj["first_entry_t"] is None else float(obj["first_entry_t"]),
        last_exit_before_pinch_t=(
            None if obj["last_exit_before_pinch_t"] is None else float(obj["last_exit_before_pinch_t"])
        ),
        first_entry_after_pinch_t=(
            None if obj["first_entry_after_pinch_t"] is None else float(obj["first_entry_after_pinch_t"])
        ),
        pinch_t=float(obj["pinch_t"]),
        outcome_effective=OutcomeClass(obj["outcome_effective"]),
        outcome_raw=OutcomeClass(obj["outcome_raw"]),
        corrected_by_heuristic=obj["corrected_by_heuristic"],
    )


# --- writing ----------------------------------------------------------------


class SessionWriter:
    """Incremental writer for one session directory (single writer only).

    The live service appends frames at trial boundaries; batch writers call
    the three methods back to back. Output bytes are identical either way.
    """

    def __init__(self, path: str | os.PathLike):
        self.dir = Path(path)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._frames_f = None
        self._manifest: SessionManifest | None = None
        self._prev_t: float | None = None

    def write_manifest(self, manifest: SessionManifest) -> None:
        self._manifest = manifest
        (self.dir / MANIFEST_NAME).write_bytes(manifest_to_bytes(manifest))

    def append_frames(self, rows: Iterable[FrameRow]) -> None:
        if self._manifest is None:
            raise RuntimeError("write_manifest must be called before appending frames")
        if self._frames_f is None:
            self._frames_f = open(self.dir / FRAMES_NAME, "w", encoding="utf-8", newline="\n")
        n = self._manifest.ring.n_targets
        hcfg = self._manifest.heuristics
        for row in rows:
            problem = _check_frame_row(row, n, hcfg, self._prev_t)
            if problem is not None:
                fieldname, msg = problem
                raise SchemaError(FRAMES_NAME, None, fieldname, f"refusing to write invalid frame: {msg}")
            self._prev_t = row.t_ms
            self._frames_f.write(frame_to_line(row) + "\n")

    def flush(self) -> None:
        if self._frames_f is not None:
            self._frames_f.flush()

    def write_selections(self, records: Sequence[SelectionRecord]) -> None:
        if self._manifest is None:
            raise RuntimeError("write_manifest must be called before writing selections")
        prev = None
        lines = []
        for r in records:
            obj = json.loads(selection_to_line(r))
            problems = _check_selection_obj(obj, self._manifest, prev)
            if problems:
                fieldname, msg = problems[0]
                raise SchemaError(SELECTIONS_NAME, None, fieldname, f"refusing to write invalid selection: {msg}")
            prev = obj
            lines.append(selection_to_line(r))
        (self.dir / SELECTIONS_NAME).write_text("".join(line + "\n" for line in lines), encoding="utf-8", newline="\n")

    def close(self) -> None:
        if self._frames_f is not None:
            self._frames_f.close()
            self._frames_f = None
        # An aborted session may have produced no frames at all; the file is
        # still part of the contract.
        if not (self.dir / FRAMES_NAME).exists():
            (self.dir / FRAMES_NAME).write_text("", encoding="utf-8")
        if not (self.dir / SELECTIONS_NAME).exists():
            (self.dir / SELECTIONS_NAME).write_text("", encoding="utf-8")


def write_session(
    manifest: SessionManifest,
    frames: Sequence[FrameRow],
    selections: Sequence[SelectionRecord],
    path: str | os.PathLike,
) -> Path:
    """Write one complete session directory, refusing invalid rows."""
    w = SessionWriter(path)
    try:
        w.write_manifest(manifest)
        w.append_frames(frames)
        w.write_selections(selections)
    finally:
        w.close()
    return w.dir


# --- reading ----------------------------------------------------------------


def _require_file(d: Path, name: str) -> Path:
    p = d / name
    if not p.is_file():
        raise MissingSessionFileError(f"{d}: missing {name}")
    return p


def read_session(path: str | os.PathLike) -> tuple[SessionManifest, list[FrameRow], list[SelectionRecord]]:
    """Read and strictly validate a session directory.

    Raises SchemaError naming file, line, and field on the first violation,
    and MissingSessionFileError when a component file is absent.
    """
    d = Path(path)
    if not d.is_dir():
        raise MissingSessionFileError(f"{d}: not a session directory")
    manifest_path = _require_file(d, MANIFEST_NAME)
    frames_path = _require_file(d, FRAMES_NAME)
    selections_path = _require_file(d, SELECTIONS_NAME)

    try:
        manifest_obj = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(MANIFEST_NAME, e.lineno, None, f"invalid JSON: {e.msg}") from e
    manifest = _manifest_from_obj(manifest_obj, MANIFEST_NAME)

    frames: list[FrameRow] = []
    prev_t: float | None = None
    with open(frames_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                raise SchemaError(FRAMES_NAME, lineno, None, "blank line in stream")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(FRAMES_NAME, lineno, None, f"invalid JSON: {e.msg}") from e
            problems = _check_frame_obj(obj, manifest.ring.n_targets, manifest.heuristics, prev_t)
            if problems:
                fieldname, msg = problems[0]
                raise SchemaError(FRAMES_NAME, lineno, fieldname, msg)
            prev_t = obj["t_ms"]
            frames.append(_frame_from_obj(obj))

    selections: list[SelectionRecord] = []
    prev_obj: dict | None = None
    with open(selections_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                raise SchemaError(SELECTIONS_NAME, lineno, None, "blank line in stream")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(SELECTIONS_NAME, lineno, None, f"invalid JSON: {e.msg}") from e
            problems = _check_selection_obj(obj, manifest, prev_obj)
            if problems:
                fieldname, msg = problems[0]
                raise SchemaError(SELECTIONS_NAME, lineno, fieldname, msg)
            prev_obj = obj
            selections.append(_selection_from_obj(obj))

    return manifest, frames, selections


# --- validation (exhaustive) --------------------------------------------------


def validate_session(path: str | os.PathLike) -> list[Finding]:
    """List every schema violation in a session directory.

    Unlike read_session this does not stop at the first problem. Raises
    MissingSessionFileError only when the path itself is unusable.
    """
    d = Path(path)
    if not d.is_dir():
        raise MissingSessionFileError(f"{d}: not a session directory")
    findings: list[Finding] = []

    manifest: SessionManifest | None = None
    manifest_path = d / MANIFEST_NAME
    if not manifest_path.is_file():
        findings.append(Finding(MANIFEST_NAME, None, None, "missing file"))
    else:
        try:
            manifest = _manifest_from_obj(
                json.loads(manifest_path.read_text(encoding="utf-8")), MANIFEST_NAME
            )
        except json.JSONDecodeError as e:
            findings.append(Finding(MANIFEST_NAME, e.lineno, None, f"invalid JSON: {e.msg}"))
        except SchemaError as e:
            findings.append(Finding(e.file, e.line, e.field, str(e).split(": ", 1)[1]))

    for name, checker in ((FRAMES_NAME, "frame"), (SELECTIONS_NAME, "selection")):
        p = d / name
        if not p.is_file():
            findings.append(Finding(name, None, None, "missing file"))
            continue
        if manifest is None:
            continue  # row checks need the manifest
        prev_frame_t: float | None = None
        prev_sel: dict | None = None
        with open(p, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    findings.append(Finding(name, lineno, None, "blank line in stream"))
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    findings.append(Finding(name, lineno, None, f"invalid JSON: {e.msg}"))
                    continue
                if checker == "frame":
                    problems = _check_frame_obj(obj, manifest.ring.n_targets, manifest.heuristics, prev_frame_t)
                    if isinstance(obj, dict) and _is_num(obj.get("t_ms")):
                        prev_frame_t = obj["t_ms"]
                else:
                    problems = _check_selection_obj(obj, manifest, prev_sel)
                    # Keep sequencing context even when other fields are bad,
                    # so one broken row does not cascade into later findings.
                    if (
                        isinstance(obj, dict)
                        and all(
                            isinstance(obj.get(k), int) and not isinstance(obj.get(k), bool)
                            for k in ("round", "trial")
                        )
                        and _is_num(obj.get("pinch_t"))
                    ):
                        prev_sel = obj
                for fieldname, msg in problems:
                    findings.append(Finding(name, lineno, fieldname or None, msg))

    return findings


def sessions_under(root: str | os.PathLike) -> list[Path]:
    """All session directories at or below `root`, sorted for determinism."""
    root = Path(root)
    if (root / MANIFEST_NAME).is_file():
        return [root]
    return sorted(p.parent for p in root.rglob(MANIFEST_NAME))
