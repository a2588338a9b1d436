"""Command-line entry point: ``prachseq <subcommand> [flags]``.

Errors are reported as a single ``error: <Type>: <message>`` line on stderr
with a nonzero exit status.
"""

import argparse
import sys

from . import sequences
from .exceptions import CalibrationError, ConfigError
from .harness import load_config, run, write_papr_cm_outputs

SUBCOMMANDS = {
    "capacity": "capacity",
    "correlate": "correlate",
    "cfo-sweep": "cfo_sweep",
    "calibrate": "calibrate",
    "detect-sweep": "detect_sweep",
    "papr-cm": "papr_cm",
}

_HELP = {
    "capacity": "preamble capacity per family and N_CS",
    "correlate": "periodic correlation profiles of root 1 against the family",
    "cfo-sweep": "autocorrelation magnitude under carrier frequency offset",
    "calibrate": "noise-only threshold calibration; writes the threshold file",
    "detect-sweep": "P(detect) versus SNR using a calibrated threshold file",
    "papr-cm": "PAPR and cubic metric per sequence, CDFs and percentiles",
}


def _common(p):
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--family", help="comma-separated families (ZC,mZC,aZC,mALL)")
    p.add_argument("--l-ra", type=int)
    p.add_argument("--zczc", type=int, help="zeroCorrelationZoneConfig (11 -> N_CS 23)")
    p.add_argument("--antennas", help="comma-separated antenna counts")
    p.add_argument("--snr-start", type=float)
    p.add_argument("--snr-stop", type=float)
    p.add_argument("--snr-step", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--threshold-file")
    p.add_argument("--n-cs", help="comma-separated N_CS values (capacity)")
    p.add_argument("--cfo", help="comma-separated f0 values (cfo-sweep)")
    p.add_argument("--subsample", type=int, help="sequences per family (papr-cm); 0 = whole pool")
    p.add_argument("--workers", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="prachseq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        _common(sub.add_parser(name, help=_HELP[name]))
    gen = sub.add_parser("generate", help="write one sequence as CSV or binary")
    gen.add_argument("--family", required=True, choices=sequences.FAMILIES)
    gen.add_argument("--params", default="", help="e.g. 'l=1,lam=2,w=1,t=0,v=0'")
    gen.add_argument("--zczc", type=int, default=11)
    gen.add_argument("--l-ra", type=int, default=sequences.L_RA)
    gen.add_argument("--format", choices=("csv", "bin"), default="csv")
    gen.add_argument("--out", required=True)
    return parser


_GEN_DEFAULTS = {
    "ZC": dict(mu=1, v=0),
    "mZC": dict(l=1, mu=1, v=0),
    "aZC": dict(l=1, lam=1, w=1, mu=1, v=0),
    "mALL": dict(l=1, lam=1, w=1, t=1, v=0),
}
_GENERATORS = {
    "ZC": sequences.generate_zc,
    "mZC": sequences.generate_mzc,
    "aZC": sequences.generate_azc,
    "mALL": sequences.generate_mall,
}


def _generate(args):
    params = dict(_GEN_DEFAULTS[args.family])
    for item in filter(None, (s.strip() for s in args.params.split(","))):
        key, _, value = item.partition("=")
        if key not in params:
            raise ConfigError(f"unknown parameter {key!r} for {args.family}; expected {sorted(params)}")
        try:
            params[key] = int(value)
        except ValueError:
            raise ConfigError(f"parameter {key} must be an integer, got {value!r}") from None
    n_cs = sequences.ncs_from_config(args.zczc)
    x = _GENERATORS[args.family](**params, n_cs=n_cs, l_ra=args.l_ra)
    if args.format == "csv":
        sequences.write_sequence_csv(args.out, x)
    else:
        sequences.write_sequence_binary(args.out, x)
    return args.out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            print(_generate(args))
            return 0
        overrides = {
            "experiment": SUBCOMMANDS[args.command],
            "families": args.family, "l_ra": args.l_ra, "zczc": args.zczc, "antennas": args.antennas,
            "snr_start": args.snr_start, "snr_stop": args.snr_stop, "snr_step": args.snr_step,
            "trials": args.trials, "seed": args.seed, "out": args.out, "threshold_file": args.threshold_file,
            "n_cs_list": args.n_cs, "cfo": args.cfo, "subsample": args.subsample, "workers": args.workers,
        }
        cfg = load_config(args.config, **overrides)
        result = run(cfg)
        if cfg.experiment == "papr_cm" and cfg.out:
            paths = write_papr_cm_outputs(result, cfg.out)
        elif cfg.out:
            paths = [result.write()]
        else:
            sys.stdout.write(result.to_csv_text())
            paths = []
        for p in paths:
            print(p)
        print(f"elapsed_s={result.elapsed_s:.3f}", file=sys.stderr)
        return 0
    except (ConfigError, CalibrationError, ValueError, TypeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1


if __name__ == "__main__":
    sys.exit(main())
