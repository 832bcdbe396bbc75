"""Command line entry point: ``cdmaica run|codes|plot``."""

import argparse
import logging
import sys
import time

from . import output
from .codes import format_codes, gold_family
from .config import ConfigError, parse_config
from .harness import run_plan

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("cdmaica")


def _parser():
    p = argparse.ArgumentParser(prog="cdmaica", description="ICA detectors for DS-CDMA downlink")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment plan, write CSVs and SVGs")
    run.add_argument("config", help="experiment config file (may be empty for the default grid)")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--threads", type=int, default=1, help="worker processes (default: 1)")
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config key; repeatable")

    codes = sub.add_parser("codes", help="dump the Gold code family as text")
    codes.add_argument("--out", help="file to write (default: stdout)")

    plot = sub.add_parser("plot", help="re-render SVGs from existing CSVs")
    plot.add_argument("csv_dir")
    plot.add_argument("--out", help="output directory (default: the CSV directory)")
    return p


def _cmd_run(args):
    plan = parse_config(args.config, args.overrides)
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    n_points = len(plan.scenarios)
    log.info("running %d scenarios x %d runs", n_points, plan.runs_per_point)
    t0 = time.perf_counter()
    report = run_plan(plan, threads=args.threads)
    for r in report:
        log.info("%s M=%d snr=%g %s/%s ser=%.3g fail=%d %.1fs", r.noise, r.symbols, r.snr_db,
                 r.detector, r.algorithm, r.mean_ser, r.failed_runs, r.wallclock_s)
    paths = output.write_csv(report, args.out) + output.render_plot(report, args.out)
    log.info("wrote %d files to %s in %.1fs", len(paths), args.out, time.perf_counter() - t0)
    return EXIT_OK


def _cmd_codes(args):
    text = format_codes(gold_family())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_plot(args):
    panels = output.read_csv_dir(args.csv_dir)
    if not panels:
        raise ConfigError(f"no ser_*.csv files in {args.csv_dir}")
    output.render_panels(panels, args.out or args.csv_dir)
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    handler = {"run": _cmd_run, "codes": _cmd_codes, "plot": _cmd_plot}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
