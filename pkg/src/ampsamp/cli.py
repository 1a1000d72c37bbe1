"""Command line entry point: ``ampsamp run | verify | encode``."""

from __future__ import annotations

import argparse
import json
import sys

from .encoder import EncoderConfig, encode
from .errors import AmpSampError, ConfigError, InvalidParameterError
from .experiments import emit, load_config, run_experiment, verify_config
from .signal_model import BandlimitedSignal

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _cmd_run(args):
    cfg = load_config(args.config)
    bundle = run_experiment(cfg, workers=args.workers)
    paths = emit(bundle, args.out, args.format)
    for path in paths:
        print(path)
    for p in range(len(cfg.points)):
        pt = cfg.points[p]
        print(f"point {p}: alpha={pt.alpha:.6g} delta={pt.delta:.6g} sigma={pt.sigma:.6g} "
              f"density={pt.density_ratio:.3f} ({pt.regime})")
    if bundle.failures:
        for (p, s), err in sorted(bundle.failures.items()):
            print(f"failed point {p} seed {s}: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_verify(args):
    cfg = load_config(args.config)
    results = verify_config(cfg)
    bad = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        bad += not r.passed
        print(f"{status} {r.check} point={r.point} seed={r.seed} value={r.value:.3e} limit={r.limit:.3e}")
    print(f"{len(results) - bad}/{len(results)} checks passed")
    return EXIT_OK if bad == 0 else EXIT_NUMERICAL


def _cmd_encode(args):
    try:
        with open(args.signal, encoding="utf-8") as fh:
            f = BandlimitedSignal.from_json(fh.read())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.signal}: invalid JSON ({exc})") from exc
    ts = encode(f, EncoderConfig(args.alpha, args.delta))
    text = ts.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="ampsamp", description="Delta-ramp amplitude sampling experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config and write results")
    run.add_argument("config")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("verify", help="run the property checks on every point and seed of a config")
    ver.add_argument("config")
    ver.set_defaults(func=_cmd_verify)

    enc = sub.add_parser("encode", help="encode a signal JSON into a time-sequence CSV")
    enc.add_argument("signal")
    enc.add_argument("--alpha", type=float, required=True)
    enc.add_argument("--delta", type=float, required=True)
    enc.add_argument("--out", help="output CSV path (default stdout)")
    enc.set_defaults(func=_cmd_encode)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AmpSampError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
