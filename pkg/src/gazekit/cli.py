"""Command-line entry point.

Subcommands: simulate, classify, analyze, report, validate, serve. Exit codes:
0 success, 1 runtime failure (I/O, unbalanced design, schema violations),
2 bad flags (argparse). GAZEKIT_OUT sets the default output root.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .classify import ClassifierConfig
from .metrics import session_metrics
from .replay import classify_session, verify_replay
from .report import SessionEntry, UnbalancedDesignError, build_report, write_report
from .session_io import (
    MissingSessionFileError,
    SchemaError,
    read_session,
    selection_to_line,
    sessions_under,
    validate_session,
)
from .simulate import SimConfig, derive_session_seed, simulate_session
from .task import (
    DEFAULT_INTER_TARGET_M,
    DEFAULT_PLANE_DISTANCE_M,
    DEFAULT_ROUNDS,
    BlockConfig,
    Condition,
    RingSpec,
    default_size_schedule,
)

_CONDITION_CHOICES = [c.value for c in Condition] + ["all"]


def _default_out() -> str:
    return os.environ.get("GAZEKIT_OUT", "out")


def _add_ring_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spacing", type=float, default=DEFAULT_INTER_TARGET_M, help="adjacent target spacing in meters")
    p.add_argument("--plane-distance", type=float, default=DEFAULT_PLANE_DISTANCE_M, help="task plane distance in meters")
    p.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS, help="rounds per block (9 selections each)")
    p.add_argument(
        "--sizes",
        type=str,
        default=None,
        help="comma-separated target diameters in degrees, cycled across rounds",
    )
    p.add_argument("--sticky-hold-ms", type=float, default=50.0)
    p.add_argument("--magnetic-margin-dmm", type=float, default=20.0)


def _ring_from_args(args: argparse.Namespace) -> RingSpec:
    if args.sizes:
        cycle = tuple(float(s) for s in args.sizes.split(","))
        schedule = tuple(cycle[r % len(cycle)] for r in range(args.rounds))
    else:
        schedule = default_size_schedule(args.rounds)
    return RingSpec(
        inter_target_m=args.spacing,
        plane_distance_m=args.plane_distance,
        size_schedule_deg=schedule,
    )


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    d = SimConfig()
    p.add_argument("--frame-rate", type=float, default=d.frame_rate_hz)
    p.add_argument("--jitter-sd", type=float, default=d.fixation_jitter_sd_dmm, help="fixation jitter SD in dmm")
    p.add_argument("--landing-error-sd", type=float, default=d.landing_error_sd_dmm, help="landing error SD in dmm")
    p.add_argument("--saccade-slope", type=float, default=d.saccade_dur_slope_ms_per_deg)
    p.add_argument("--saccade-intercept", type=float, default=d.saccade_dur_intercept_ms)
    p.add_argument("--saccade-latency", type=float, default=d.saccade_latency_ms)
    p.add_argument("--pinch-offset-mean", type=float, default=d.pinch_offset_mean_ms)
    p.add_argument("--pinch-offset-sd", type=float, default=d.pinch_offset_sd_ms)
    p.add_argument("--dropout-rate", type=float, default=d.dropout_rate)


def _sim_from_args(args: argparse.Namespace, seed: int) -> SimConfig:
    return SimConfig(
        seed=seed,
        frame_rate_hz=args.frame_rate,
        fixation_jitter_sd_dmm=args.jitter_sd,
        landing_error_sd_dmm=args.landing_error_sd,
        saccade_dur_slope_ms_per_deg=args.saccade_slope,
        saccade_dur_intercept_ms=args.saccade_intercept,
        saccade_latency_ms=args.saccade_latency,
        pinch_offset_mean_ms=args.pinch_offset_mean,
        pinch_offset_sd_ms=args.pinch_offset_sd,
        dropout_rate=args.dropout_rate,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate synthetic session directories")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--condition", choices=_CONDITION_CHOICES, default="all")
    p_sim.add_argument("--subjects", type=int, default=1)
    p_sim.add_argument("--blocks", type=int, default=1)
    p_sim.add_argument("--out", type=str, default=None, help="output root (default $GAZEKIT_OUT or ./out)")
    _add_ring_args(p_sim)
    _add_sim_args(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_cls = sub.add_parser("classify", help="recompute selection records from a session log")
    p_cls.add_argument("--in", dest="path", required=True, help="session directory")
    p_cls.add_argument("--out", type=str, default="-", help="output JSONL file, - for stdout")
    p_cls.add_argument("--window", type=float, default=350.0, help="classification window in ms")
    p_cls.add_argument("--check", action="store_true", help="also compare against the stored records")
    p_cls.add_argument("--allow-truncated-tail", action="store_true", help="tolerate aborted sessions whose last window is cut off")
    p_cls.set_defaults(func=cmd_classify)

    p_an = sub.add_parser("analyze", help="per-session metrics as CSV")
    p_an.add_argument("--in", dest="path", required=True, help="session directory or a tree of sessions")
    p_an.add_argument("--out", type=str, default="-", help="output CSV file, - for stdout")
    p_an.add_argument("--window", type=float, default=350.0)
    p_an.set_defaults(func=cmd_analyze)

    p_rep = sub.add_parser("report", help="aggregate metrics and run the statistical analysis")
    p_rep.add_argument("--in", dest="path", required=True, help="tree of session directories")
    p_rep.add_argument("--out", type=str, default=None, help="report directory (default <in>/report)")
    p_rep.add_argument("--window", type=float, default=350.0)
    p_rep.set_defaults(func=cmd_report)

    p_val = sub.add_parser("validate", help="list schema violations in session logs")
    p_val.add_argument("path", help="session directory or a tree of sessions")
    p_val.add_argument("--replay", action="store_true", help="also verify bit-exact engine replay")
    p_val.set_defaults(func=cmd_validate)

    p_srv = sub.add_parser("serve", help="run the live task service for the browser harness")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--host", type=str, default="127.0.0.1")
    p_srv.add_argument("--out", type=str, default=None, help="output root (default $GAZEKIT_OUT or ./out)")
    p_srv.add_argument("--block", type=int, default=0, help="block index stamped into live sessions")
    p_srv.add_argument("--window", type=float, default=350.0)
    _add_ring_args(p_srv)
    p_srv.set_defaults(func=cmd_serve)

    return parser


def cmd_simulate(args: argparse.Namespace) -> int:
    out_root = Path(args.out or _default_out())
    conditions = list(Condition) if args.condition == "all" else [Condition(args.condition)]
    ring = _ring_from_args(args)
    try:
        out_root.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print(f"error: cannot create output root: {e}", file=sys.stderr)
        return 1
    try:
        for s in range(args.subjects):
            subject = f"sub{s:02d}"
            for condition in conditions:
                for b in range(args.blocks):
                    block = BlockConfig(
                        subject_id=subject,
                        condition=condition,
                        block_index=b,
                        ring=ring,
                        sticky_hold_ms=args.sticky_hold_ms,
                        magnetic_margin_dmm=args.magnetic_margin_dmm,
                    )
                    seed = derive_session_seed(args.seed, s, condition, b)
                    sim = _sim_from_args(args, seed)
                    data, _ = simulate_session(block, sim)
                    path = out_root / subject / f"{condition.value}_b{b}"
                    from .session_io import write_session

                    write_session(data.manifest, data.frames, data.selections, path)
                    print(
                        f"wrote {path} ({len(data.selections)} selections, "
                        f"{len(data.frames)} frames, seed {seed})"
                    )
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    try:
        manifest, frames, selections = read_session(args.path)
        records = classify_session(
            (manifest, frames, selections),
            ClassifierConfig(window_ms=args.window),
            allow_truncated=args.allow_truncated_tail,
        )
    except (SchemaError, MissingSessionFileError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    lines = [selection_to_line(r) for r in records]
    if args.out == "-":
        for line in lines:
            print(line)
    else:
        Path(args.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        print(f"wrote {args.out} ({len(lines)} records)")
    if args.check:
        if records != selections:
            print("check failed: recomputed records differ from the stored log", file=sys.stderr)
            return 1
        print(f"check ok: {len(records)} records match the stored log", file=sys.stderr)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    from .report import render_entries_csv

    sessions = sessions_under(args.path)
    if not sessions:
        print(f"error: no sessions under {args.path}", file=sys.stderr)
        return 1
    entries = []
    try:
        for p in sessions:
            manifest, frames, selections = read_session(p)
            entries.append(
                SessionEntry(
                    subject_id=manifest.subject_id,
                    condition=manifest.condition,
                    block_index=manifest.block_index,
                    metrics=session_metrics(manifest, selections),
                )
            )
    except (SchemaError, MissingSessionFileError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    csv_text = render_entries_csv(entries)
    if args.out == "-":
        sys.stdout.write(csv_text)
    else:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {args.out} ({len(entries)} sessions)")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    sessions = sessions_under(args.path)
    if not sessions:
        print(f"error: no sessions under {args.path}", file=sys.stderr)
        return 1
    entries = []
    try:
        for p in sessions:
            manifest, frames, selections = read_session(p)
            entries.append(
                SessionEntry(
                    subject_id=manifest.subject_id,
                    condition=manifest.condition,
                    block_index=manifest.block_index,
                    metrics=session_metrics(manifest, selections),
                )
            )
        report = build_report(entries)
    except UnbalancedDesignError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (SchemaError, MissingSessionFileError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    out_dir = Path(args.out) if args.out else Path(args.path) / "report"
    written = write_report(report, out_dir)
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    root = Path(args.path)
    if not root.exists():
        print(f"error: {root}: no such path", file=sys.stderr)
        return 2
    try:
        sessions = sessions_under(root)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if not sessions:
        print(f"error: {root}: no session directories found", file=sys.stderr)
        return 2
    n_findings = 0
    for p in sessions:
        try:
            findings = validate_session(p)
        except MissingSessionFileError as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
        for f in findings:
            n_findings += 1
            print(f"{p}/{f}")
        if args.replay and not findings:
            manifest, frames, selections = read_session(p)
            for problem in verify_replay(manifest, frames, selections):
                n_findings += 1
                print(f"{p}: replay: {problem}")
    if n_findings:
        print(f"{n_findings} violation(s) found", file=sys.stderr)
        return 1
    print("clean", file=sys.stderr)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import socket

    import uvicorn

    from .service import ServeSettings, build_app

    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        try:
            probe.bind((args.host, args.port))
        except OSError:
            print(f"error: port {args.port} is busy", file=sys.stderr)
            return 1

    out_root = Path(args.out or _default_out())
    out_root.mkdir(parents=True, exist_ok=True)
    frontend = Path(__file__).resolve().parents[2] / "frontend"
    settings = ServeSettings(
        out_root=out_root,
        ring=_ring_from_args(args),
        sticky_hold_ms=args.sticky_hold_ms,
        magnetic_margin_dmm=args.magnetic_margin_dmm,
        window_ms=args.window,
        block_index=args.block,
        frontend_dir=frontend if frontend.is_dir() else None,
    )
    app = build_app(settings)
    print(f"serving on ws://{args.host}:{args.port}/ws, sessions under {out_root}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
