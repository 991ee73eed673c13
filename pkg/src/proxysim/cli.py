"""Command-line entry points.

Verbs:

- ``serve-relay``  run the TCP relay service
- ``run``          execute one scenario and write metrics/artifacts
- ``sweep``        re-run a scenario across one parameter and write a CSV
- ``export``       convert a metrics JSON into CSV tables
- ``stream-ui``    serve a live WebSocket session for the browser sandbox
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import os
import sys
from typing import Dict, List, Optional, Tuple

from .canon import canonical_json
from .metrics import (
    MOVE_CSV_COLUMNS,
    SUMMARY_CSV_COLUMNS,
    load_metrics_json,
    sweep_to_csv,
)
from .runner import SWEEP_PARAMETERS, run_scenario, sweep
from .scripts import BUILTIN_SCRIPTS, ScenarioScript, builtin_script, load_script


def _resolve_script(ref: str) -> ScenarioScript:
    """A script reference is a builtin name or a path to a script JSON."""
    if ref in BUILTIN_SCRIPTS:
        return builtin_script(ref)
    if os.path.exists(ref):
        return load_script(ref)
    raise SystemExit(
        f"no script named {ref!r}; builtins: {', '.join(sorted(BUILTIN_SCRIPTS))}"
    )


def _apply_overrides(
    script: ScenarioScript,
    *,
    seed: Optional[int] = None,
    latency_ms: Optional[int] = None,
) -> ScenarioScript:
    if seed is None and latency_ms is None:
        return script
    doc = script.as_dict()
    if seed is not None:
        doc["seed"] = seed
    if latency_ms is not None:
        doc["artificial_latency_ms"] = latency_ms
    return ScenarioScript.from_dict(doc).require_valid()


def _parse_latency_spec(specs: List[str]) -> Dict[str, Tuple[int, int]]:
    """``NS=DELAY`` or ``NS=DELAY:JITTER`` strings into a latency table."""
    table: Dict[str, Tuple[int, int]] = {}
    for spec in specs:
        if "=" not in spec:
            raise SystemExit(f"bad latency spec {spec!r}; expected NS=DELAY[:JITTER]")
        ns, _, rest = spec.partition("=")
        delay, _, jitter = rest.partition(":")
        try:
            table[ns] = (int(delay), int(jitter) if jitter else 0)
        except ValueError:
            raise SystemExit(f"bad latency spec {spec!r}; delay/jitter must be ints")
    return table


# -- verbs --------------------------------------------------------------------


def cmd_serve_relay(args: argparse.Namespace) -> int:
    from .relay_server import RelayServer

    server = RelayServer(
        host=args.host,
        port=args.port,
        retention=not args.no_retention,
        echo_origin=args.echo_origin,
        latency_table=_parse_latency_spec(args.latency or []),
        jitter_seed=args.jitter_seed,
    )

    async def main() -> None:
        await server.start()
        print(f"relay listening on {server.host}:{server.port}", flush=True)
        assert server._server is not None
        async with server._server:
            await server._server.serve_forever()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    script = _apply_overrides(
        _resolve_script(args.script), seed=args.seed, latency_ms=args.latency_ms
    )
    result = run_scenario(script)
    metrics = result.metrics

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "metrics.json"), "w", encoding="utf-8") as fh:
            fh.write(metrics.to_json())
            fh.write("\n")
        with open(os.path.join(args.out, "moves.csv"), "w", encoding="utf-8") as fh:
            fh.write(metrics.moves_to_csv())
        with open(
            os.path.join(args.out, "final_state.json"), "w", encoding="utf-8"
        ) as fh:
            fh.write(canonical_json(result.final_state))
            fh.write("\n")
        with open(os.path.join(args.out, "digest.txt"), "w", encoding="utf-8") as fh:
            fh.write(metrics.digest + "\n")

    print(f"scenario      {metrics.scenario}")
    print(f"duration      {metrics.duration_ms} ms")
    print(f"moves         {len(metrics.moves)}")
    print(f"illusion breaks {metrics.illusion_breaks}")
    if metrics.min_slack_ms is not None:
        print(f"min slack     {metrics.min_slack_ms:.1f} ms")
    if metrics.gesture_total:
        print(f"gestures      {metrics.gesture_correct}/{metrics.gesture_total}")
    print(f"digest        {metrics.digest}")
    failed = 0
    for name in sorted(metrics.checks):
        ok = metrics.checks[name]
        print(f"check {name}: {'pass' if ok else 'FAIL'}")
        failed += 0 if ok else 1
    if metrics.illusion_breaks:
        failed += 1
    return 1 if failed else 0


def cmd_sweep(args: argparse.Namespace) -> int:
    script = _resolve_script(args.script)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError:
        raise SystemExit(f"bad --values {args.values!r}; expected comma-separated numbers")
    if not values:
        raise SystemExit("--values is empty")
    if args.parameter in ("artificial_latency",):
        typed = [int(v) for v in values]
    else:
        typed = values
    rows = sweep(args.parameter, typed, script)
    text = sweep_to_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        sys.stdout.write(text)
    return 0


def _metrics_dict_moves_csv(doc: dict) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=MOVE_CSV_COLUMNS, extrasaction="ignore")
    writer.writeheader()
    for m in doc.get("moves", []):
        row = dict(m)
        row["best_effort"] = int(bool(row.get("best_effort")))
        row["illusion_break"] = int(bool(row.get("illusion_break")))
        writer.writerow(row)
    return out.getvalue()


def _metrics_dict_summary_csv(doc: dict) -> str:
    moves = doc.get("moves", [])
    slacks = [m["slack_ms"] for m in moves if m.get("slack_ms") is not None]
    total = doc.get("gesture_total", 0)
    row = {
        "scenario": doc.get("scenario", ""),
        "parameter": "",
        "value": "",
        "moves": len(moves),
        "illusion_breaks": doc.get("illusion_breaks", 0),
        "min_slack_ms": min(slacks) if slacks else None,
        "reassignments": doc.get("reassignments", 0),
        "gesture_accuracy": (doc.get("gesture_correct", 0) / total) if total else 1.0,
        "relay_latency_p95": doc.get("relay_latency_p95", 0.0),
        "checks_pass": int(all(doc.get("checks", {}).values())),
        "digest": doc.get("digest", ""),
    }
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=SUMMARY_CSV_COLUMNS, extrasaction="ignore")
    writer.writeheader()
    writer.writerow(row)
    return out.getvalue()


def cmd_export(args: argparse.Namespace) -> int:
    doc = load_metrics_json(args.metrics)
    if args.moves_csv:
        with open(args.moves_csv, "w", encoding="utf-8") as fh:
            fh.write(_metrics_dict_moves_csv(doc))
        print(f"wrote {args.moves_csv}")
    if args.summary_csv:
        with open(args.summary_csv, "w", encoding="utf-8") as fh:
            fh.write(_metrics_dict_summary_csv(doc))
        print(f"wrote {args.summary_csv}")
    if not args.moves_csv and not args.summary_csv:
        sys.stdout.write(_metrics_dict_summary_csv(doc))
    return 0


def cmd_stream_ui(args: argparse.Namespace) -> int:
    from .stream import StreamServer

    script = _apply_overrides(
        _resolve_script(args.script), seed=args.seed, latency_ms=args.latency_ms
    )
    server = StreamServer(
        script,
        host=args.host,
        port=args.port,
        stride=args.stride,
        realtime=args.realtime,
    )

    async def main() -> None:
        print(
            f"sandbox session {script.name!r} on ws://{args.host}:{args.port}",
            flush=True,
        )
        await server.serve()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxysim", description="table-scale remote-presence simulator"
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("serve-relay", help="run the TCP relay service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7780)
    p.add_argument(
        "--latency",
        action="append",
        metavar="NS=DELAY[:JITTER]",
        help="inject artificial latency (ms) into a namespace; repeatable",
    )
    p.add_argument("--jitter-seed", type=int, default=0)
    p.add_argument("--no-retention", action="store_true",
                   help="do not replay retained snapshots to late joiners")
    p.add_argument("--echo-origin", action="store_true",
                   help="deliver messages back to their emitter as well")
    p.set_defaults(fn=cmd_serve_relay)

    p = sub.add_parser("run", help="execute one scenario")
    p.add_argument("script", help="builtin name or path to a script JSON")
    p.add_argument("--out", help="directory for metrics.json/moves.csv/...")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--latency-ms", type=int, default=None,
                   help="override the scenario's artificial latency")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="re-run a scenario across one parameter")
    p.add_argument("script")
    p.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--values", required=True,
                   help="comma-separated numbers, e.g. 0,500,1000,1500,2000")
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("export", help="convert a metrics JSON into CSV")
    p.add_argument("metrics", help="path to a metrics.json written by 'run'")
    p.add_argument("--moves-csv")
    p.add_argument("--summary-csv")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("stream-ui", help="serve a live sandbox session")
    p.add_argument("script")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--stride", type=int, default=2,
                   help="broadcast state every N ticks")
    p.add_argument("--realtime", type=float, default=1.0,
                   help="pace factor; 2.0 runs twice real time")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--latency-ms", type=int, default=None)
    p.set_defaults(fn=cmd_stream_ui)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
