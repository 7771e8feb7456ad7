"""Live task service: drives the ring task over a WebSocket for the harness UI.

One JSON object per message. Client to server:

    {"type": "hello", "subject_id": S, "condition": C}
    {"type": "frame", "t_ms": T, "x_m": X, "y_m": Y, "valid": B}
    {"type": "pinch", "t_ms": T}
    {"type": "end"}

Server to client:

    {"type": "config", "manifest": {...}, "derived": {...}}
    {"type": "hover", "raw": R, "effective": E, "snapped": B, "stuck": B}
    {"type": "highlight", "target": K, "round": R, "trial": I}
    {"type": "outcome", "selected": E, "correct": B}
    {"type": "classified", "round": R, "trial": I, "effective": O, "raw": O,
     "corrected": B}   (sent once the post-pinch window closes)
    {"type": "done", "session_path": P}
    {"type": "error", "msg": M}

Timestamps come from the client's monotonic clock and are authoritative, which
is what makes the persisted log replayable offline through the very same
engine code this service runs per frame. Null marks "no target" on the wire;
files keep the -1 sentinel.

One live session at a time; a second connection is rejected with a busy error.
Frame ingestion never waits on disk: rows are queued to a writer thread and
flushed at trial boundaries.
"""

from __future__ import annotations

import math
import queue
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .classify import ClassifierConfig
from .geometry import PlanePoint
from .replay import TrialMeta, build_records
from .reticle import GazeSample, PinchEvent, ReticleState, resolve_selection, step
from .session_io import FrameRow, SessionManifest, SessionWriter
from .task import BlockConfig, Condition, RingSpec, highlight_order


class ProtocolError(ValueError):
    pass


@dataclass
class ServeSettings:
    out_root: Path
    ring: RingSpec = field(default_factory=RingSpec)
    sticky_hold_ms: float = 50.0
    magnetic_margin_dmm: float = 20.0
    window_ms: float = 350.0
    block_index: int = 0
    frontend_dir: Path | None = None


def _derived_geometry(ring: RingSpec) -> dict:
    layout0 = ring.layout_for_round(0)
    return {
        "ring_radius_m": layout0.ring_radius,
        "target_centers_m": [[t.center.x, t.center.y] for t in layout0.targets],
        "target_radius_m_by_round": [
            ring.layout_for_round(r).targets[0].radius for r in range(ring.rounds)
        ],
        "rounds": ring.rounds,
        "trials_per_round": ring.n_targets,
        "highlight_order": list(highlight_order(ring.n_targets)),
    }


class _LogWorker:
    """Single writer thread per session; the handler never touches the disk."""

    def __init__(self, session_dir: Path):
        self.q: queue.Queue = queue.Queue()
        self.error: Exception | None = None
        self._thread = threading.Thread(target=self._run, args=(session_dir,), daemon=True)
        self._thread.start()

    def _run(self, session_dir: Path) -> None:
        writer = SessionWriter(session_dir)
        try:
            while True:
                kind, payload = self.q.get()
                if kind == "manifest":
                    writer.write_manifest(payload)
                elif kind == "frames":
                    writer.append_frames(payload)
                    writer.flush()
                elif kind == "selections":
                    writer.write_selections(payload)
                elif kind == "close":
                    return
        except Exception as e:  # surfaced to the handler at finalize
            self.error = e
        finally:
            writer.close()

    def put(self, kind: str, payload=None) -> None:
        self.q.put((kind, payload))

    def finish(self) -> None:
        self.put("close")
        self._thread.join(timeout=30)
        if self.error is not None:
            raise self.error


class _LiveSession:
    """State of one live block; mirrors the offline pipeline exactly."""

    def __init__(self, settings: ServeSettings, subject_id: str, condition: Condition, session_dir: Path):
        self.settings = settings
        self.block = BlockConfig(
            subject_id=subject_id,
            condition=condition,
            block_index=settings.block_index,
            ring=settings.ring,
            sticky_hold_ms=settings.sticky_hold_ms,
            magnetic_margin_dmm=settings.magnetic_margin_dmm,
        )
        self.manifest = SessionManifest(
            session_id=self.block.session_id,
            subject_id=subject_id,
            condition=condition,
            block_index=settings.block_index,
            ring=settings.ring,
            heuristics=self.block.heuristics,
            sim=None,
            seed=None,
        )
        self.ccfg = ClassifierConfig(window_ms=settings.window_ms)
        self.layouts = [settings.ring.layout_for_round(r) for r in range(settings.ring.rounds)]
        self.order = highlight_order(settings.ring.n_targets)
        self.session_dir = session_dir
        self.worker = _LogWorker(session_dir)
        self.worker.put("manifest", self.manifest)

        self.state = ReticleState()
        self.samples: list[GazeSample] = []
        self.times: list[float] = []
        self.rows: list[FrameRow] = []
        self.unflushed = 0
        self.meta: list[TrialMeta] = []
        self.selected: list[tuple[int | None, int | None]] = []
        self.classified_upto = 0
        self.trial_index = 0
        self.onset_t = 0.0
        self.last_msg_t = -math.inf
        self.pending_pinch_mark = False
        self.finalized = False

    # -- task sequencing ------------------------------------------------

    @property
    def total_trials(self) -> int:
        return self.settings.ring.trials

    @property
    def done_with_trials(self) -> bool:
        return self.trial_index >= self.total_trials

    def current_round(self) -> int:
        return min(self.trial_index, self.total_trials - 1) // self.settings.ring.n_targets

    def current_target(self) -> int:
        k = min(self.trial_index, self.total_trials - 1)
        return self.order[k % self.settings.ring.n_targets]

    def highlight_msg(self) -> dict:
        return {
            "type": "highlight",
            "target": self.current_target(),
            "round": self.current_round(),
            "trial": self.trial_index % self.settings.ring.n_targets,
        }

    # -- message handling -------------------------------------------------

    def on_frame(self, t_ms: float, x_m: float, y_m: float, valid: bool) -> dict:
        if not (math.isfinite(t_ms) and math.isfinite(x_m) and math.isfinite(y_m)):
            raise ProtocolError("frame fields must be finite numbers")
        if self.times and t_ms <= self.times[-1]:
            raise ProtocolError(f"frame t_ms must strictly increase (got {t_ms} after {self.times[-1]})")
        if t_ms < self.last_msg_t:
            raise ProtocolError(f"message timestamps regressed (frame {t_ms} after {self.last_msg_t})")
        if self.meta and t_ms <= self.meta[-1].pinch_t:
            # Offline replay assigns a frame at the pinch boundary to the old
            # trial; live it would land in the new one. Keep them unambiguous.
            raise ProtocolError("frame t_ms must exceed the previous pinch t_ms")
        self.last_msg_t = t_ms
        sample = GazeSample(t=t_ms, pos=PlanePoint(x_m, y_m), valid=valid)
        layout = self.layouts[self.current_round()]
        self.state, res = step(self.state, sample, layout, self.manifest.heuristics)
        # Same rule as offline annotation: a frame carries pinch_down when a
        # pinch fell in (previous frame t, this frame t].
        pinch_down = self.pending_pinch_mark
        self.pending_pinch_mark = False
        row = FrameRow(
            t_ms=t_ms,
            gaze_x_m=x_m,
            gaze_y_m=y_m,
            valid=valid,
            raw_target=-1 if res.raw_target is None else res.raw_target,
            effective_target=-1 if res.effective_target is None else res.effective_target,
            snapped=res.snapped,
            stuck=res.stuck,
            pinch_down=pinch_down,
        )
        self.samples.append(sample)
        self.times.append(t_ms)
        self.rows.append(row)
        self.unflushed += 1
        return {
            "type": "hover",
            "raw": res.raw_target,
            "effective": res.effective_target,
            "snapped": res.snapped,
            "stuck": res.stuck,
        }

    def on_pinch(self, t_ms: float) -> list[dict]:
        if not math.isfinite(t_ms):
            raise ProtocolError("pinch t_ms must be a finite number")
        if t_ms < self.last_msg_t:
            raise ProtocolError(f"message timestamps regressed (pinch {t_ms} after {self.last_msg_t})")
        if self.done_with_trials:
            raise ProtocolError("pinch after the block completed")
        if not self.rows:
            raise ProtocolError("pinch before any frame")
        self.last_msg_t = t_ms

        if self.times and t_ms == self.times[-1]:
            self.rows[-1] = replace(self.rows[-1], pinch_down=True)
        else:
            self.pending_pinch_mark = True
        resolution = resolve_selection(self.state, PinchEvent(t=t_ms))
        highlighted = self.current_target()
        self.meta.append(
            TrialMeta(
                round=self.current_round(),
                trial=self.trial_index % self.settings.ring.n_targets,
                highlighted=highlighted,
                onset_t=self.onset_t,
                pinch_t=t_ms,
            )
        )
        self.selected.append((resolution.selected, resolution.raw_selected))
        self._flush_frames()

        out = [
            {
                "type": "outcome",
                "selected": resolution.selected,
                "correct": resolution.selected == highlighted,
            }
        ]
        self.trial_index += 1
        self.onset_t = t_ms
        if not self.done_with_trials:
            out.append(self.highlight_msg())
        return out

    def _flush_frames(self) -> None:
        if self.unflushed:
            self.worker.put("frames", self.rows[len(self.rows) - self.unflushed :])
            self.unflushed = 0

    # -- classification ---------------------------------------------------

    def _window_closed(self, m: TrialMeta) -> bool:
        if not self.times:
            return False
        step_ms = self.times[1] - self.times[0] if len(self.times) >= 2 else 0.0
        return self.times[-1] >= m.pinch_t + self.ccfg.window_ms + 2.0 * step_ms

    def classify_ready(self) -> list[dict]:
        """Classify pendings whose post-pinch window is fully covered."""
        out: list[dict] = []
        while self.classified_upto < len(self.meta):
            m = self.meta[self.classified_upto]
            if not self._window_closed(m):
                break
            rec = build_records(self.manifest, self.samples, self.rows, [m], self.ccfg)[0]
            out.append(
                {
                    "type": "classified",
                    "round": rec.round,
                    "trial": rec.trial,
                    "effective": rec.outcome_effective.value,
                    "raw": rec.outcome_raw.value,
                    "corrected": rec.corrected_by_heuristic,
                }
            )
            self.classified_upto += 1
        return out

    def tail_satisfied(self) -> bool:
        """True when frames cover the last pinch's classification window."""
        if not self.meta:
            return False
        return self._window_closed(self.meta[-1])

    # -- finalize -----------------------------------------------------------

    def finalize(self, *, aborted: bool) -> Path:
        if self.finalized:
            return self.session_dir
        self.finalized = True
        records = build_records(
            self.manifest, self.samples, self.rows, self.meta, self.ccfg, allow_truncated=aborted
        )
        self._flush_frames()
        self.worker.put("selections", records)
        self.worker.finish()
        return self.session_dir


def _unique_session_dir(root: Path, subject_id: str, condition: Condition, block: int) -> Path:
    base = root / subject_id / f"{condition.value}_b{block}"
    if not base.exists():
        return base
    i = 1
    while (p := base.with_name(f"{base.name}_{i}")).exists():
        i += 1
    return p


def build_app(settings: ServeSettings) -> FastAPI:
    app = FastAPI(title="gazekit live task service")
    app.state.busy = False
    lock = threading.Lock()

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        with lock:
            if app.state.busy:
                await ws.send_json({"type": "error", "msg": "busy: a session is already running"})
                await ws.close()
                return
            app.state.busy = True
        session: _LiveSession | None = None
        try:
            hello = await ws.receive_json()
            if not isinstance(hello, dict) or hello.get("type") != "hello":
                await ws.send_json({"type": "error", "msg": "expected a hello message"})
                return
            subject = str(hello.get("subject_id") or "anon")
            try:
                condition = Condition(hello.get("condition"))
            except ValueError:
                await ws.send_json({"type": "error", "msg": f"unknown condition {hello.get('condition')!r}"})
                return
            session_dir = _unique_session_dir(settings.out_root, subject, condition, settings.block_index)
            session = _LiveSession(settings, subject, condition, session_dir)
            await ws.send_json(
                {
                    "type": "config",
                    "manifest": _manifest_obj(session.manifest),
                    "derived": _derived_geometry(settings.ring),
                }
            )
            await ws.send_json(session.highlight_msg())

            while True:
                msg = await ws.receive_json()
                if not isinstance(msg, dict) or "type" not in msg:
                    raise ProtocolError("messages must be JSON objects with a type")
                kind = msg["type"]
                if kind == "frame":
                    reply = session.on_frame(
                        float(msg["t_ms"]), float(msg["x_m"]), float(msg["y_m"]), bool(msg.get("valid", True))
                    )
                    await ws.send_json(reply)
                    for extra in session.classify_ready():
                        await ws.send_json(extra)
                    if session.done_with_trials and session.tail_satisfied():
                        path = session.finalize(aborted=False)
                        await ws.send_json({"type": "done", "session_path": str(path)})
                        await ws.close()
                        return
                elif kind == "pinch":
                    for reply in session.on_pinch(float(msg["t_ms"])):
                        await ws.send_json(reply)
                elif kind == "end":
                    complete = session.done_with_trials and session.tail_satisfied()
                    path = session.finalize(aborted=not complete)
                    await ws.send_json({"type": "done", "session_path": str(path)})
                    await ws.close()
                    return
                else:
                    raise ProtocolError(f"unknown message type {kind!r}")
        except WebSocketDisconnect:
            if session is not None and not session.finalized:
                session.finalize(aborted=True)
        except (ProtocolError, KeyError, TypeError, ValueError) as e:
            try:
                await ws.send_json({"type": "error", "msg": str(e)})
                await ws.close()
            except RuntimeError:
                pass
            if session is not None and not session.finalized:
                session.finalize(aborted=True)
        finally:
            with lock:
                app.state.busy = False

    frontend = settings.frontend_dir
    if frontend is not None and frontend.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend, html=True), name="harness")

    return app


def _manifest_obj(manifest: SessionManifest) -> dict:
    from .session_io import manifest_to_obj

    return manifest_to_obj(manifest)
