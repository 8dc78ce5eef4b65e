"""Command-line front end.

Subcommands: run (one trial), study (conditions x seeds), serve (live
websocket session), replay (session log back through the simulator),
report (summary tables from exported records), map (slave-side scale
field on a grid, for plotting).

Exit codes are part of the interface: 0 success, 2 configuration or
usage errors (including unknown flags, via argparse), 3 when any trial
timed out and --allow-timeout was not given. Identical argv and seeds
produce identical output.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path

from .core import ConfigError
from .harness import (TrialRecord, export_csv, export_json, format_table,
                      load_records, run_study, run_trial, summarize)
from .plane import scale_grid
from .scaling import PositionalScaling
from .scenario import (PRESET_CONDITIONS, find_scenario, preset,
                       preset_conditions)
from .server import SessionServer, replay_session

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TIMEOUT = 3


def _delay_s(args):
    return None if args.delay_ms is None else float(args.delay_ms) / 1000.0


def _parse_seeds(text: str):
    """'17' means seeds 1..17; '3,5,9' means exactly those."""
    parts = [p for p in text.split(",") if p != ""]
    try:
        if len(parts) == 1 and "," not in text:
            n = int(parts[0])
            return list(range(1, n + 1))
        return [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"--seeds wants a count or a comma list, got {text!r}")


def _parse_conditions(text: str, delay_s):
    if text == "preset5":
        return preset_conditions(0.75 if delay_s is None else delay_s)
    return [find_scenario(ref, delay_s) for ref in text.split(",") if ref]


def _print_record(record: TrialRecord):
    print(f"scenario        {record.scenario}")
    print(f"seed            {record.seed}")
    if record.timed_out:
        print(f"timed out at    {record.completion_time:.3f} s")
    else:
        print(f"completed in    {record.completion_time:.3f} s")
    print(f"weighted error  {record.weighted_error}")
    if record.events:
        print("events")
        for e in record.events:
            print(f"  t={e.tick / 1000.0:9.3f}s  {e.kind.name}  "
                  f"{e.source}  +{e.weight}")
    else:
        print("events          none")
    if record.log_ref:
        print(f"log             {record.log_ref}")


def _write_records(records, out: str):
    path = Path(out)
    if path.suffix == ".json":
        export_json(records, path)
    else:
        export_csv(records, path)
    print(f"wrote {len(records)} record(s) to {path}")


def _timeout_exit(records, allow: bool) -> int:
    timed_out = sum(r.timed_out for r in records)
    if timed_out and not allow:
        print(f"error: {timed_out} trial(s) timed out", file=sys.stderr)
        return EXIT_TIMEOUT
    return EXIT_OK


def cmd_run(args) -> int:
    scenario = find_scenario(args.scenario, _delay_s(args))
    record = run_trial(scenario, args.seed, timeout_s=args.timeout_s)
    _print_record(record)
    if args.out:
        _write_records([record], args.out)
    return _timeout_exit([record], args.allow_timeout)


def cmd_study(args) -> int:
    conditions = _parse_conditions(args.conditions, _delay_s(args))
    seeds = _parse_seeds(args.seeds)
    records = run_study(conditions, seeds, timeout_s=args.timeout_s,
                        jobs=args.jobs)
    print(format_table(summarize(records)))
    print(f"{len(records)} trials "
          f"({len(conditions)} conditions x {len(seeds)} seeds)")
    if args.out:
        _write_records(records, args.out)
    return _timeout_exit(records, args.allow_timeout)


def cmd_serve(args) -> int:
    scenario = find_scenario(args.scenario, _delay_s(args))

    async def _serve():
        server = SessionServer(scenario, args.host, args.port,
                               args.record_dir, args.render_hz)
        await server.start()
        print(f"serving scenario {scenario.name} on "
              f"ws://{args.host}:{server.port}", flush=True)
        try:
            await asyncio.Future()
        finally:
            await server.stop()

    try:
        asyncio.run(_serve())
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_replay(args) -> int:
    result = replay_session(args.log)
    if result.truncated:
        print("log is truncated; replayed the surviving prefix")
    _print_record(result.record)
    if result.live_record is not None:
        match = (result.live_record.events == result.record.events
                 and result.live_record.weighted_error
                 == result.record.weighted_error)
        print(f"matches live record: {'yes' if match else 'NO'}")
        if not match:
            return EXIT_CONFIG
    return _timeout_exit([result.record], args.allow_timeout)


def _records_from_csv(path: Path):
    lines = path.read_text().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty records file")
    header = lines[0].split(",")
    want = ["scenario", "seed", "time_s", "weighted_error", "n_events"]
    if header != want:
        raise ConfigError(f"{path}: expected columns {','.join(want)}")
    records = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split(",")
        if len(cols) != len(want):
            raise ConfigError(f"{path}:{n}: expected {len(want)} columns")
        try:
            records.append(TrialRecord(
                scenario=cols[0], seed=int(cols[1]),
                completion_time=float(cols[2]), timed_out=False,
                events=(), weighted_error=int(cols[3])))
        except ValueError as exc:
            raise ConfigError(f"{path}:{n}: {exc}") from None
    return records


def cmd_report(args) -> int:
    path = Path(args.records)
    if path.suffix == ".json":
        records = load_records(path)
    else:
        # the CSV keeps no event detail or timeout flags, only the totals
        records = _records_from_csv(path)
    print(format_table(summarize(records)))
    return EXIT_OK


def cmd_map(args) -> int:
    scenario = find_scenario(args.scenario, None)
    cfg = preset(args.scaling).scaling if args.scaling else scenario.scaling
    if not isinstance(cfg, PositionalScaling):
        raise ConfigError("only positional scaling defines a spatial scale "
                          "field; pass --scaling positional")
    lo, hi = scenario.geometry.workspace_min, scenario.geometry.workspace_max
    rows = scale_grid(scenario.peg_centers, cfg, (lo[0], hi[0]),
                      (lo[1], hi[1]), args.samples)
    lines = ["x_m,y_m,scale_s"]
    lines += [f"{x!r},{y!r},{s!r}" for x, y, s in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(rows)} grid points to {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="telescale",
        description="Teleoperation-under-delay simulator and study runner.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_delay(p):
        p.add_argument("--delay-ms", type=float, default=None,
                       help="override the round-trip delay in milliseconds")

    def add_timeout(p):
        p.add_argument("--timeout-s", type=float, default=600.0,
                       help="per-trial simulated-time budget (default 600)")
        p.add_argument("--allow-timeout", action="store_true",
                       help="exit 0 even when trials time out")

    p = sub.add_parser("run", help="run one synthetic trial")
    p.add_argument("--scenario", required=True,
                   help="preset name, YAML file, or name on "
                        "$TELESCALE_SCENARIO_PATH")
    p.add_argument("--seed", type=int, default=1,
                   help="operator noise seed (default 1)")
    p.add_argument("--out", help="write the record to a .json or .csv file")
    add_delay(p)
    add_timeout(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("study", help="run a conditions x seeds study")
    p.add_argument("--conditions", default="preset5",
                   help="'preset5' (the five study conditions: "
                        f"{', '.join(PRESET_CONDITIONS)}) or a comma list "
                        "of scenario refs (default preset5)")
    p.add_argument("--seeds", default="17",
                   help="seed count N for seeds 1..N, or a comma list "
                        "(default 17)")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel trial processes (default 1)")
    p.add_argument("--out", help="write records to a .csv or .json file")
    add_delay(p)
    add_timeout(p)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("serve", help="serve a live operator session")
    p.add_argument("--scenario", default="c02",
                   help="scenario offered to the operator (default c02)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765,
                   help="TCP port, 0 picks a free one (default 8765)")
    p.add_argument("--record-dir", default=None,
                   help="directory for session logs (default: no recording)")
    p.add_argument("--render-hz", type=float, default=30.0,
                   help="frame rate sent to the console (default 30)")
    add_delay(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="re-run a recorded session log")
    p.add_argument("log", help="JSONL session log")
    p.add_argument("--allow-timeout", action="store_true",
                   help="exit 0 even if the replayed trial timed out")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="render summary tables from records")
    p.add_argument("records", help="records file from run/study "
                                   "(.csv totals or .json full records)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("map", help="sample the slave-side scale field")
    p.add_argument("--scaling", default="positional",
                   help="scaling preset to map (default positional)")
    p.add_argument("--scenario", default="positional",
                   help="scenario supplying the board and workspace")
    p.add_argument("--samples", type=int, default=51,
                   help="grid samples per axis (default 51)")
    p.add_argument("--out", help="write the grid CSV here instead of stdout")
    p.set_defaults(func=cmd_map)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
