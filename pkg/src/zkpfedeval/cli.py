"""Command-line entry point: ``zkpfedeval run | summarize | scaling``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .errors import ConfigError, DataError, FormatError
from .harness import (
    SCALING_COLUMNS,
    SUMMARY_COLUMNS,
    ExperimentConfig,
    read_rows,
    run_experiment,
    scaling_run,
    summarize,
    write_rows,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="zkpfedeval", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run evaluation rounds and write per-seed metrics")
    run.add_argument("--dataset", choices=["mnist", "har"], required=True)
    run.add_argument("--clients", type=_ints, default=[5], help="client count(s), e.g. 5,10,20")
    run.add_argument("--threshold", type=_floats, default=[1.0], help="loss threshold(s), e.g. 0.5,1.0,1.5")
    run.add_argument("--seeds", type=_ints, default=[0, 1, 2])
    run.add_argument("--dist", default="iid", help="iid or noniid:ALPHA")
    run.add_argument("--backend", choices=["snark", "mock"], default="snark")
    run.add_argument("--transport", choices=["inproc", "tcp"], default="inproc")
    run.add_argument("--data-dir", required=True)
    run.add_argument("--key-dir", default=None)
    run.add_argument("--batch-size", type=int, default=32)
    run.add_argument("--secure", action="store_true", help="refuse non-zero-knowledge backends")
    run.add_argument("--timeout", type=float, default=None, help="client budget in seconds")
    run.add_argument("--out", default="results.csv")
    run.add_argument("--any-size", action="store_true", help="accept splits whose sizes differ from the published ones")

    summ = sub.add_parser("summarize", help="mean metrics per (dataset, clients)")
    summ.add_argument("results")
    summ.add_argument("--out", default=None, help="write CSV here instead of stdout")

    sc = sub.add_parser("scaling", help="total verification time versus client count")
    sc.add_argument("--dataset", choices=["mnist", "har"], default="mnist")
    sc.add_argument("--threshold", type=float, default=1.0)
    sc.add_argument("--clients", type=_ints, default=[5, 10, 20, 30, 40, 50])
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--backend", choices=["snark", "mock"], default="snark")
    sc.add_argument("--repeats", type=int, default=1)
    sc.add_argument("--data-dir", required=True)
    sc.add_argument("--key-dir", default=None)
    sc.add_argument("--out", default="scaling.csv")
    sc.add_argument("--any-size", action="store_true", help="accept splits whose sizes differ from the published ones")
    return p


def _write_dicts(fh, rows, columns):
    w = csv.writer(fh)
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r[c] is None else r[c] for c in columns])


def _cmd_run(args):
    rows = []
    models = {}
    for n in args.clients:
        for t in args.threshold:
            cfg = ExperimentConfig(
                dataset=args.dataset,
                n_clients=n,
                threshold=t,
                seeds=args.seeds,
                distribution=args.dist,
                backend=args.backend,
                transport=args.transport,
                batch_size=args.batch_size,
                data_dir=args.data_dir,
                key_dir=args.key_dir,
                secure=args.secure,
                timeout=args.timeout,
                check_sizes=not args.any_size,
            )
            rows.extend(run_experiment(cfg, models=models))
    write_rows(args.out, rows)
    print(f"wrote {len(rows)} rows to {args.out}")


def _cmd_summarize(args):
    table = summarize(read_rows(args.results))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            _write_dicts(fh, table, SUMMARY_COLUMNS)
    else:
        _write_dicts(sys.stdout, table, SUMMARY_COLUMNS)


def _cmd_scaling(args):
    res = scaling_run(
        args.dataset,
        threshold=args.threshold,
        clients=args.clients,
        seed=args.seed,
        backend=args.backend,
        data_dir=args.data_dir,
        key_dir=args.key_dir,
        repeats=args.repeats,
        check_sizes=not args.any_size,
    )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        _write_dicts(fh, res.rows, SCALING_COLUMNS)
    print(f"slope={res.slope:.6g} s/client intercept={res.intercept:.6g} s R^2={res.r_squared:.4f}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        {"run": _cmd_run, "summarize": _cmd_summarize, "scaling": _cmd_scaling}[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
