"""Command-line entry point tying the pieces together.

Subcommands:

    simulate        run a scenario and write the report tables
    replay-trace    run a recorded accelerometer CSV through the detector
    energy-report   power modes, battery runtime, and daily solar balance
    serve           start the ingestion/query HTTP service
    replay-uplinks  POST a recorded uplink log to a running service

Exit codes: 0 success, 2 usage or input validation, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import energy
from .detector import DetectorConfig, iter_trace_csv, replay_trace
from .energy import (
    FIELD_UPLINK_LOAD_MW,
    MODE_POWER_MW,
    HarvestProfile,
    PowerMode,
    battery_runtime_days,
    daily_balance_j,
)
from .sim import Scenario, ScenarioError, default_scenario, run_sim

USAGE_EXIT = 2
RUNTIME_EXIT = 1

_MODE_LABELS = {
    PowerMode.SAMPLING: "Data sampling mode",
    PowerMode.SAMPLING_AND_TRANSMISSION: "Data sampling and transmission",
    PowerMode.PRESENCE_DETECTION: "Presence detection mode",
    PowerMode.APPLICATION: "Application mode",
}


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SystemExit(f"error: cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"error: {path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
              f"{exc.msg}", file=sys.stderr)
        sys.exit(USAGE_EXIT)


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.scenario:
        raw = _load_json(args.scenario)
        if args.seed is not None:
            raw["seed"] = args.seed
        try:
            scenario = Scenario.from_dict(raw)
        except ScenarioError as exc:
            print("error: invalid scenario:", file=sys.stderr)
            for problem in exc.problems:
                print(f"  - {problem}", file=sys.stderr)
            return USAGE_EXIT
    else:
        scenario = default_scenario(seed=args.seed if args.seed is not None else 42)

    report = run_sim(scenario)
    written = report.write_outputs(args.out)
    for path in written:
        print(path)
    total_delivered = sum(len(s.delivered) for s in report.sensors)
    total_gt = sum(len(s.ground_truth) for s in report.sensors)
    print(f"simulated {scenario.days} day(s), {len(scenario.sensors)} sensor(s): "
          f"{total_gt} ground-truth sessions, {total_delivered} uplinks delivered")
    return 0


def cmd_replay_trace(args: argparse.Namespace) -> int:
    config = DetectorConfig()
    if args.config:
        raw = _load_json(args.config)
        try:
            config = DetectorConfig(**raw)
        except (TypeError, ValueError) as exc:
            print(f"error: invalid detector config: {exc}", file=sys.stderr)
            return USAGE_EXIT
    try:
        with open(args.trace, newline="") as fp:
            records = replay_trace(iter_trace_csv(fp), config)
    except OSError as exc:
        print(f"error: cannot read {args.trace}: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except ValueError as exc:
        print(f"error: {args.trace}: {exc}", file=sys.stderr)
        return USAGE_EXIT
    for r in records:
        print(f"{r.end_t:.0f},{r.duration_s},{str(r.presence).lower()},{r.break_count}")
    return 0


def cmd_energy_report(args: argparse.Namespace) -> int:
    print("Measured power consumption")
    for mode, label in _MODE_LABELS.items():
        print(f"  {label:<34} {MODE_POWER_MW[mode]:>7.3f} mW")
    runtime = battery_runtime_days(args.capacity_mah, args.nominal_v, args.load_mw)
    print(f"\nBattery: {args.capacity_mah:.0f} mAh at {args.nominal_v:.1f} V average")
    print(f"  Runtime at application mode ({args.load_mw:.3f} mW): {runtime:.2f} days")

    if args.harvest_profile:
        try:
            profile = HarvestProfile.from_json(Path(args.harvest_profile).read_text())
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot load harvest profile {args.harvest_profile}: {exc}",
                  file=sys.stderr)
            return USAGE_EXIT
        sun_hours = profile.sun_hours
        net_rate = profile.net_rate_j_per_h
    else:
        sun_hours = args.sun_hours
        net_rate = args.net_rate
        profile = HarvestProfile(
            sun_intervals=((0.0, sun_hours * 3600.0),) if sun_hours > 0 else (),
            net_rate_j_per_h=net_rate,
        )
    balance = daily_balance_j(profile, args.field_load_mw)
    print(f"\nSolar balance at {sun_hours:.1f} h sun, "
          f"{net_rate:.1f} J/h net harvest rate")
    print(f"  Field load (10 min uplink period): {args.field_load_mw:.3f} mW")
    print(f"  Daily energy balance: {balance:+.1f} J")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import logging

    import uvicorn

    from .service import create_app
    from .store import EventStore

    logging.basicConfig(level=args.log_level.upper())
    store = EventStore(Path(args.data_dir) / "events.sqlite3")
    static = args.static_dir if args.static_dir else None
    app = create_app(store, static_dir=static)
    host, _, port = args.listen.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port),
                log_level=args.log_level)
    return 0


def cmd_replay_uplinks(args: argparse.Namespace) -> int:
    import httpx

    try:
        lines = Path(args.log).read_text().splitlines()
    except OSError as exc:
        print(f"error: cannot read {args.log}: {exc}", file=sys.stderr)
        return USAGE_EXIT

    envelopes = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            envelopes.append(json.loads(line))
        except json.JSONDecodeError as exc:
            print(f"error: {args.log}:{lineno}: invalid JSON: {exc.msg}", file=sys.stderr)
            return USAGE_EXIT

    url = args.server.rstrip("/") + "/v1/uplink"
    posted = created = 0
    prev_ts = None
    with httpx.Client(timeout=10.0) as client:
        for env in envelopes:
            if not args.fast and prev_ts is not None:
                try:
                    from .store import parse_rfc3339
                    gap = (parse_rfc3339(env["received_at"])
                           - parse_rfc3339(prev_ts)).total_seconds()
                    time.sleep(min(max(gap, 0.0), 5.0))
                except (KeyError, ValueError):
                    pass
            prev_ts = env.get("received_at")
            resp = None
            for attempt in range(args.retries):
                try:
                    resp = client.post(url, json=env)
                    break
                except httpx.TransportError as exc:
                    if attempt == args.retries - 1:
                        print(f"error: cannot reach {url} after {args.retries} "
                              f"attempts: {exc}", file=sys.stderr)
                        return RUNTIME_EXIT
                    time.sleep(0.2 * 2 ** attempt)
            if resp.status_code >= 400:
                print(f"error: server rejected uplink ({resp.status_code}): "
                      f"{resp.text}", file=sys.stderr)
                return RUNTIME_EXIT
            posted += 1
            if resp.status_code == 201:
                created += 1
    print(f"posted {posted} uplinks ({created} new, {posted - created} duplicates)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parksense",
        description="Workout-park activity monitoring: simulation, detection replay, "
                    "energy budgeting, and the ingestion service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write report tables")
    p.add_argument("--scenario", "--config", dest="scenario",
                   help="scenario JSON (default: built-in 7-day, 3 sensors)")
    p.add_argument("--out", default="sim-out", help="output directory")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay-trace", help="detect sessions in a recorded CSV trace")
    p.add_argument("trace", help="CSV with header t_s,ax_mg,ay_mg,az_mg")
    p.add_argument("--config", help="detector config JSON")
    p.set_defaults(func=cmd_replay_trace)

    p = sub.add_parser("energy-report", help="power table, runtime, and solar balance")
    p.add_argument("--capacity-mah", type=float, default=330.0)
    p.add_argument("--nominal-v", type=float, default=3.9)
    p.add_argument("--load-mw", type=float, default=MODE_POWER_MW[PowerMode.APPLICATION],
                   help="average load for the runtime estimate")
    p.add_argument("--sun-hours", type=float, default=4.5)
    p.add_argument("--net-rate", type=float, default=energy.DEFAULT_NET_RATE_J_PER_H,
                   help="net harvest rate while in sun, J/h")
    p.add_argument("--field-load-mw", type=float, default=FIELD_UPLINK_LOAD_MW,
                   help="average load for the daily balance")
    p.add_argument("--harvest-profile",
                   help="harvest profile JSON file (overrides --sun-hours/--net-rate)")
    p.set_defaults(func=cmd_energy_report)

    p = sub.add_parser("serve", help="start the ingestion/query service")
    p.add_argument("--listen", default=os.environ.get("PARKSENSE_LISTEN", "127.0.0.1:8787"),
                   help="host:port (env PARKSENSE_LISTEN)")
    p.add_argument("--data-dir", default=os.environ.get("PARKSENSE_DATA_DIR", "parksense-data"),
                   help="directory for the event store (env PARKSENSE_DATA_DIR)")
    p.add_argument("--log-level", default=os.environ.get("PARKSENSE_LOG_LEVEL", "info"),
                   help="log level (env PARKSENSE_LOG_LEVEL)")
    p.add_argument("--static-dir", default=os.environ.get("PARKSENSE_STATIC_DIR"),
                   help="also serve a dashboard build from this directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay-uplinks", help="POST a recorded uplink log to a service")
    p.add_argument("log", help="uplinks.jsonl from a simulation run")
    p.add_argument("--server", default="http://127.0.0.1:8787")
    p.add_argument("--fast", action="store_true", help="do not reproduce original timing")
    p.add_argument("--retries", type=int, default=5)
    p.set_defaults(func=cmd_replay_uplinks)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
