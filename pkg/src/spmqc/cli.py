"""Command-line front end: ``spmqc sweep | simulate | verify``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys

from .channel import BASES, DEFAULT_CHANNEL, ModelError, capacity_cutoff, distance_grid, performance_point
from .config import config_to_dict, load_config, parse_channel
from .protocol.engine import ConfigError, run_session
from .protocol.transcript import _clean, write_transcript
from .verify import run_checks

CSV_COLUMNS = (
    "distance_km", "basis", "incum", "p_d", "eta_c", "G_X", "G_Y", "G_Z",
    "q_c1", "q_c2", "Q", "qber", "dber_raw", "dber", "capacity_raw", "capacity",
)
CUTOFF_COLUMNS = ("p_d", "basis", "incum", "cutoff_km")


def fmt(x) -> str:
    return format(float(x), ".12g")


def _bases(choice: str):
    return BASES if choice == "all" else tuple(b for b in BASES if b.value == choice.upper())


def _incum(choice: str):
    return {"on": (True,), "off": (False,), "both": (False, True)}[choice]


def sweep_rows(params, d_min, d_max, d_step, bases, incums, dark_counts):
    grid = distance_grid(d_min, d_max, d_step)
    for p_d in dark_counts:
        p = params.with_(p_d=p_d)
        for d in grid:
            pt = performance_point(p, d)
            for b in bases:
                k = b.value
                for inc in incums:
                    yield (
                        fmt(d), k, "on" if inc else "off", fmt(p_d), fmt(pt.eta_c),
                        fmt(pt.gains["X"]), fmt(pt.gains["Y"]), fmt(pt.gains["Z"]),
                        fmt(pt.q_c1[k]), fmt(pt.q_c2), fmt(pt.big_q[k]), fmt(pt.qber),
                        fmt(pt.dber_raw[k]), fmt(pt.dber[k]),
                        fmt(pt.capacity_for(k, inc, clamp=False)), fmt(pt.capacity_for(k, inc)),
                    )


def cutoff_rows(params, bases, incums, dark_counts):
    for p_d in dark_counts:
        p = params.with_(p_d=p_d)
        for b in bases:
            for inc in incums:
                yield fmt(p_d), b.value, "on" if inc else "off", fmt(capacity_cutoff(p, b, inc))


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())


def _channel_from(args):
    if not args.config:
        return DEFAULT_CHANNEL
    with open(args.config, encoding="utf-8") as fh:
        data = json.load(fh)
    return parse_channel(data.get("channel", {}))


def cmd_sweep(args) -> int:
    if not args.distance_step > 0:
        raise ModelError("--distance-step must be > 0")
    if args.distance_min > args.distance_max or args.distance_min < 0:
        raise ModelError("need 0 <= --distance-min <= --distance-max")
    params = _channel_from(args)
    dark = args.dark_count or [params.p_d]
    bases, incums = _bases(args.basis), _incum(args.incum)
    rows = list(sweep_rows(params, args.distance_min, args.distance_max, args.distance_step, bases, incums, dark))
    _write_csv(args.out, CSV_COLUMNS, rows)
    if args.cutoffs:
        _write_csv(args.cutoffs, CUTOFF_COLUMNS, list(cutoff_rows(params, bases, incums, dark)))
    return 0


def session_invariants(result) -> list[str]:
    """Names of violated session invariants; empty when all hold."""
    bad = []
    if result.undetected_errors():
        bad.append("undetected_message_corruption")
    if result.alice_sink != result.bob_sink:
        bad.append("key_sinks_differ")
    if any(not r.delivered and r.distilled_key_len for r in result.reports):
        bad.append("aborted_round_distilled_keys")
    if any(r.delivered != (r.aborted_at.value == "none") for r in result.reports):
        bad.append("delivery_flag_mismatch")
    return bad


def cmd_simulate(args) -> int:
    if not args.config:
        raise ConfigError("--config", "simulate needs a session config file")
    cfg, run = load_config(args.config)
    if args.seed is not None:
        run["seed"] = args.seed
    if args.frames is not None:
        run["n_frames"] = args.frames
    if args.out:
        cfg = dataclasses.replace(cfg, record_transcript=True)
    result = run_session(cfg, run["n_frames"], seed=run["seed"])
    if args.out:
        write_transcript(result, args.out)
    summary = result.summary()
    violations = session_invariants(result)
    summary["invariant_violations"] = violations
    summary["config"] = config_to_dict(cfg, run)
    print(json.dumps(_clean(summary), indent=2, sort_keys=True))
    if not summary["wiretap_ok"]:
        print(
            f"warning: code rate {cfg.code_rate:.4g} violates the wiretap condition "
            f"(margin {summary['wiretap_margin']:.4g})",
            file=sys.stderr,
        )
    return 1 if violations else 0


def cmd_verify(args) -> int:
    results = run_checks()
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spmqc", description="Single-photon MDI QSDC model and simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="tabulate the analytic model over distance as CSV")
    sw.add_argument("--distance-min", type=float, default=0.0)
    sw.add_argument("--distance-max", type=float, default=120.0)
    sw.add_argument("--distance-step", type=float, default=0.5)
    sw.add_argument("--basis", choices=("x", "y", "z", "all"), default="all")
    sw.add_argument("--incum", choices=("on", "off", "both"), default="both")
    sw.add_argument("--dark-count", type=float, action="append", help="dark-count probability; repeatable")
    sw.add_argument("--config", help="JSON file; only its channel section is used")
    sw.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    sw.add_argument("--cutoffs", help="also write positive-capacity cutoff distances to this CSV")
    sw.set_defaults(func=cmd_sweep)

    sim = sub.add_parser("simulate", help="run a protocol session")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--frames", type=int)
    sim.add_argument("--out", help="transcript path (JSON lines)")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="run the oracle checks")
    ver.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ModelError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
