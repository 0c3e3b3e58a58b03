"""Operator entry points: run evaluations, serve live sessions, sweep gate
thresholds, and re-score stored transcripts.

Exit codes separate infrastructure health from model quality: 2 means the
command could not run (bad config, missing files), while a completed
evaluation exits 0 even when instances failed (the failures are the
report's content, not the tool's).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import ABLATION_MODES, RunConfig, load_backend_config
from .errors import IPIError
from .gating import (
    DEFAULT_THETA_HIGH,
    DEFAULT_THETA_LOW,
    GateThresholds,
    load_synthetic_trace,
    sweep,
)
from .harness import (
    InstanceTranscript,
    aggregate,
    evaluate,
    load_manifest,
    render_failure_table,
    render_table,
    score_all,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2


def _write_report(report, transcripts, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.dumps(), encoding="utf-8")
    text = render_table(report) + "\n" + render_failure_table(report)
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    transcript_dir = out_dir / "transcripts"
    for transcript in transcripts:
        transcript.write(transcript_dir)


def cmd_eval(args) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        print(f"error: manifest not found: {manifest_path}", file=sys.stderr)
        return EXIT_CONFIG
    instances = load_manifest(manifest_path)
    backend = load_backend_config(args.backend_config)
    config = RunConfig(
        manifest=str(manifest_path),
        backend=backend,
        ablation=args.ablation,
        thresholds=GateThresholds(args.theta_low, args.theta_high),
        parallelism=args.parallelism,
        out_dir=args.out,
        seed=args.seed,
        with_reminder=args.with_reminder,
        exclude_eval_errors=args.exclude_eval_errors,
    )
    report, transcripts = evaluate(instances, config)
    print(render_table(report))
    print(render_failure_table(report))
    if args.out:
        _write_report(report, transcripts, Path(args.out))
        print(f"report written to {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import socket

    import uvicorn

    from .service import create_app

    host, _, port_text = args.listen.rpartition(":")
    host = host or "127.0.0.1"
    try:
        port = int(port_text)
    except ValueError:
        print(f"error: bad --listen address {args.listen!r}", file=sys.stderr)
        return EXIT_CONFIG

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        print(f"error: cannot bind {host}:{port} ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        probe.close()

    default_config = None
    if args.backend_config:
        backend = load_backend_config(args.backend_config)
        default_config = {"backend": backend,
                          "thresholds": {"theta_low": args.theta_low,
                                         "theta_high": args.theta_high}}
    app = create_app(default_config=default_config, frames_dir=args.frames_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return EXIT_OK


def _parse_grid(lows_text: str, highs_text: str) -> list[GateThresholds]:
    try:
        lows = [float(x) for x in lows_text.split(",") if x.strip()]
        highs = [float(x) for x in highs_text.split(",") if x.strip()]
    except ValueError as exc:
        raise IPIError(f"bad threshold list: {exc}") from exc
    grid = [GateThresholds(low, high)
            for low in lows for high in highs if low <= high]
    return grid


def cmd_sweep(args) -> int:
    paths: list[Path] = []
    for raw in args.traces:
        path = Path(raw)
        if path.is_dir():
            paths.extend(sorted(path.glob("*.json")))
        elif path.exists():
            paths.append(path)
        else:
            print(f"error: trace not found: {path}", file=sys.stderr)
            return EXIT_CONFIG
    if not paths:
        print("error: no sweep traces found", file=sys.stderr)
        return EXIT_CONFIG
    grid = _parse_grid(args.theta_low_list, args.theta_high_list)
    if not grid:
        print("error: empty threshold grid (no pair with low <= high)",
              file=sys.stderr)
        return EXIT_CONFIG
    traces = [load_synthetic_trace(p) for p in paths]
    rows = sweep(traces, grid)

    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["theta_low", "theta_high", "correct", "early", "late",
                         "forced", "suppressed"])
        for row in rows:
            writer.writerow([f"{row.theta_low:g}", f"{row.theta_high:g}",
                             row.correct, row.early, row.late,
                             row.forced, row.suppressed])
    finally:
        if args.out:
            out.close()
            print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_rescore(args) -> int:
    transcript_dir = Path(args.transcripts)
    if not transcript_dir.is_dir():
        print(f"error: transcript directory not found: {transcript_dir}",
              file=sys.stderr)
        return EXIT_CONFIG
    instances = load_manifest(args.manifest)
    transcripts = [InstanceTranscript.read(p)
                   for p in sorted(transcript_dir.glob("*.jsonl"))]
    if not transcripts:
        print("error: no transcripts found", file=sys.stderr)
        return EXIT_CONFIG
    manifest_ids = {i.instance_id for i in instances}
    transcript_ids = {t.instance_id for t in transcripts}
    if transcript_ids - manifest_ids:
        extra = ", ".join(sorted(transcript_ids - manifest_ids))
        print(f"error: transcripts not in manifest: {extra}", file=sys.stderr)
        return EXIT_CONFIG
    verdicts = score_all(transcripts, instances)
    first = transcripts[0]
    report = aggregate(
        verdicts, label=first.ablation, ablation=first.ablation,
        theta_low=first.theta_low, theta_high=first.theta_high,
        exclude_eval_errors=args.exclude_eval_errors,
        meta={"manifest": str(args.manifest), "seed": args.seed,
              "with_reminder": False, "rescored_from": str(transcript_dir)})
    print(render_table(report))
    print(render_failure_table(report))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(report.dumps(), encoding="utf-8")
        print(f"report written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipi", description="streaming proactive-agent runtime and harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="run a benchmark manifest")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--backend-config", required=True)
    p_eval.add_argument("--ablation", default="full", choices=ABLATION_MODES)
    p_eval.add_argument("--theta-low", type=float, default=DEFAULT_THETA_LOW)
    p_eval.add_argument("--theta-high", type=float, default=DEFAULT_THETA_HIGH)
    p_eval.add_argument("--parallelism", type=int, default=1)
    p_eval.add_argument("--out", default=None)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--with-reminder", action="store_true",
                        help="append a monitoring reminder after each reactive turn")
    p_eval.add_argument("--exclude-eval-errors", action="store_true",
                        help="drop evaluation-error instances from denominators")
    p_eval.set_defaults(fn=cmd_eval)

    p_serve = sub.add_parser("serve", help="run the live session service")
    p_serve.add_argument("--listen", default="127.0.0.1:8787")
    p_serve.add_argument("--backend-config", default=None)
    p_serve.add_argument("--frames-dir", default=None)
    p_serve.add_argument("--theta-low", type=float, default=DEFAULT_THETA_LOW)
    p_serve.add_argument("--theta-high", type=float, default=DEFAULT_THETA_HIGH)
    p_serve.set_defaults(fn=cmd_serve)

    p_sweep = sub.add_parser("sweep", help="grid-evaluate gate thresholds")
    p_sweep.add_argument("--traces", nargs="+", required=True,
                         help="sweep trace files or directories")
    p_sweep.add_argument("--theta-low", dest="theta_low_list", required=True,
                         help="comma-separated theta_low values")
    p_sweep.add_argument("--theta-high", dest="theta_high_list", required=True,
                         help="comma-separated theta_high values")
    p_sweep.add_argument("--out", default=None, help="CSV output path")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_rescore = sub.add_parser("rescore", help="re-score stored transcripts")
    p_rescore.add_argument("--transcripts", required=True)
    p_rescore.add_argument("--manifest", required=True)
    p_rescore.add_argument("--out", default=None)
    p_rescore.add_argument("--seed", type=int, default=0)
    p_rescore.add_argument("--exclude-eval-errors", action="store_true")
    p_rescore.set_defaults(fn=cmd_rescore)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except IPIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
