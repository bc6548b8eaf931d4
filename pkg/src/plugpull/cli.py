"""Command-line entry points: run, compare, replay, serve."""

import argparse
import dataclasses
import os
import sys

from .config import ScenarioConfig, load_config
from .errors import ConfigError, NumericalDivergence
from .metrics import compute_metrics, read_csv, write_csv
from .sim import run_scenario
from .telemetry import TelemetryDecimator, TelemetryFrame, encode_telemetry

ENV_CONFIG = "PLUGPULL_CONFIG"


def _load(path: str | None, ap: argparse.ArgumentParser) -> ScenarioConfig:
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        # argparse usage error: prints usage and exits with status 2
        ap.error(f"missing config path (flag --config or ${ENV_CONFIG})")
    return load_config(path)


def _fmt(v, digits=4):
    return "-" if v is None else f"{v:.{digits}f}"


def cmd_run(args, ap) -> int:
    cfg = _load(args.config, ap)
    if args.mode:
        cfg.mode = args.mode
        cfg.validate()
    res = run_scenario(cfg)
    write_csv(res.log, args.out)
    m = compute_metrics(res.log)
    print(f"wrote {args.out}: {len(res.log.t)} rows, mode={cfg.mode}, "
          f"wall {res.wall_time:.1f} s")
    print(f"separation={_fmt(m.t_separation, 3)} s  overshoot={_fmt(m.overshoot)} m  "
          f"time_to_return={_fmt(m.time_to_return, 2)} s  peak_fdot={m.peak_fdot:.2f} N/s")
    return 0


def cmd_compare(args, ap) -> int:
    cfg = _load(args.config, ap)
    rows = []
    for mode in ("baseline", "proposed"):
        c = dataclasses.replace(cfg, mode=mode)
        res = run_scenario(c)
        m = compute_metrics(res.log)
        rows.append((mode, m, res))
        if args.save_logs:
            write_csv(res.log, f"{args.save_logs}_{mode}.csv")
    header = f"{'mode':<10} {'overshoot [m]':>14} {'time_to_return [s]':>19} {'peak |fdot| [N/s]':>18}"
    lines = [header, "-" * len(header)]
    for mode, m, _ in rows:
        lines.append(f"{mode:<10} {_fmt(m.overshoot):>14} {_fmt(m.time_to_return, 2):>19} "
                     f"{m.peak_fdot:>18.2f}")
    table = "\n".join(lines)
    print(table)
    base, prop = rows[0][1], rows[1][1]
    if base.overshoot and prop.overshoot:
        red = 100.0 * (1.0 - prop.overshoot / base.overshoot)
        print(f"overshoot reduction: {red:.1f}%")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(table + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_replay(args, ap) -> int:
    log = read_csv(args.log)
    rate = args.rate
    dec = TelemetryDecimator(rate)
    count = 0
    for i in range(len(log.t)):
        if not dec.due(float(log.t[i])):
            continue
        frame = TelemetryFrame(
            t=float(log.t[i]),
            pc=log.p_c[i],
            pcd=log.p_cd[i],
            fhat=log.f_hat[i],
            fdot_norm=float(log.fdot_norm[i]),
            phase=log.phase[i],
            thetaH=log.q[i],
            thetag=float(log.grip[i]),
            attach=log.attach[i],
        )
        print(encode_telemetry(frame))
        count += 1
    print(f"replayed {count} frames", file=sys.stderr)
    return 0


def cmd_serve(args, ap) -> int:
    from .service import serve

    cfg = _load(args.config, ap)
    cfg.operator.idle = True  # the human replaces the scripted operator
    ui = args.ui if args.ui and os.path.isdir(args.ui) else None
    serve(cfg, port=args.port, speed=args.speed, ui_dir=ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plugpull",
                                 description="aerial plug-pulling teleoperation simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write the CSV log")
    p_run.add_argument("--config", help=f"config JSON (default ${ENV_CONFIG})")
    p_run.add_argument("--mode", choices=["baseline", "proposed"])
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run both modes and print the metric table")
    p_cmp.add_argument("--config", help=f"config JSON (default ${ENV_CONFIG})")
    p_cmp.add_argument("--out", help="write the table to this path")
    p_cmp.add_argument("--save-logs", help="prefix for per-mode CSV logs")
    p_cmp.set_defaults(func=cmd_compare)

    p_rep = sub.add_parser("replay", help="re-emit telemetry frames from a CSV log")
    p_rep.add_argument("--log", required=True)
    p_rep.add_argument("--rate", type=float, default=30.0, help="frame rate [Hz]")
    p_rep.set_defaults(func=cmd_replay)

    p_srv = sub.add_parser("serve", help="live mode with the WebSocket bridge")
    p_srv.add_argument("--config", help=f"config JSON (default ${ENV_CONFIG})")
    p_srv.add_argument("--port", type=int, default=8765)
    p_srv.add_argument("--speed", type=float, default=1.0,
                       help="simulation speed relative to wall clock")
    p_srv.add_argument("--ui", default="frontend/dist", help="static cockpit directory")
    p_srv.set_defaults(func=cmd_serve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args, ap)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalDivergence as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
