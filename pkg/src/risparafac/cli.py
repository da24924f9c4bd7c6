"""Command line entry point.

Examples::

    risparafac sweep-snr --m 32 --k 16 --n 16 --p 16 --t 32 --baselines --out snr.csv
    risparafac sweep-n --m 64 --k 64 --t 64 --p 16 --n 16,32,64 --trials 100
    risparafac sweep-p --m 64 --k 64 --t 64 --n 64 --p 16,24,32,40 --format json
    risparafac single-trial --snr 20 --seed 7 --baselines
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .channel_model import SystemDims
from .errors import FeasibilityError
from .estimator import SOLVERS, AlsConfig
from .harness import DEFAULT_SNR_GRID, FORMATS, PROTOCOLS, SweepConfig, emit_results, format_results, run_sweep

EXIT_INFEASIBLE = 2

DEFAULTS = {
    "m": 32,
    "k": 16,
    "n": 16,
    "p": 16,
    "t": None,
    "snr": list(DEFAULT_SNR_GRID),
    "trials": 200,
    "seed": 0,
    "epsilon": 1e-5,
    "max_iters": 20,
    "solver": "gram",
    "baselines": False,
    "protocol": "reference",
    "out": None,
    "format": "csv",
    "workers": 1,
}


def parse_snr(text):
    """``"0,10,20"`` or an inclusive range ``"start:stop:step"``."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text).strip()
    if ":" in text:
        parts = [float(v) for v in text.split(":")]
        if len(parts) == 2:
            parts.append(1.0)
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"bad SNR range {text!r}")
        start, stop, step = parts
        count = int(round((stop - start) / step))
        values = [start + i * step for i in range(count + 1)]
        return [v for v in values if v <= stop + 1e-9 * step]
    return [float(v) for v in text.split(",") if v.strip()]


def parse_ints(text):
    if isinstance(text, int):
        return [text]
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def load_config(path):
    """Read a JSON or YAML key-value file into a flat dict of option names."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at top level")
    out = {}
    for key, value in data.items():
        key = str(key).lower().replace("-", "_")
        if key == "dims" and isinstance(value, dict):
            out.update({str(k).lower(): v for k, v in value.items()})
            continue
        out[{"max_iter": "max_iters", "base_seed": "seed", "fmt": "format"}.get(key, key)] = value
    unknown = set(out) - set(DEFAULTS) - {"snr_grid_db"}
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    if "snr_grid_db" in out:
        out["snr"] = out.pop("snr_grid_db")
    return out


def _add_common(sub, sweep):
    many = {"n": "N", "p": "P"}.get(sweep)
    sub.add_argument("--config", help="JSON/YAML file with the same keys as the flags")
    sub.add_argument("--m", type=int, help="BS antennas M")
    sub.add_argument("--k", type=int, help="users K")
    for name in ("n", "p"):
        label = "RIS elements N" if name == "n" else "training phases P"
        if many == name.upper():
            sub.add_argument(f"--{name}", type=parse_ints, help=f"{label}, comma-separated list")
        else:
            sub.add_argument(f"--{name}", type=int, help=label)
    sub.add_argument("--t", type=int, help="pilot slots T (default M)")
    sub.add_argument("--snr", type=parse_snr, help="SNR grid in dB: list '0,10' or range '0:30:5'")
    sub.add_argument("--trials", type=int)
    sub.add_argument("--seed", type=int, help="base seed")
    sub.add_argument("--epsilon", type=float, help="ALS relative-change threshold")
    sub.add_argument("--max-iters", dest="max_iters", type=int, help="ALS iteration cap")
    sub.add_argument("--solver", choices=SOLVERS)
    sub.add_argument("--baselines", action=argparse.BooleanOptionalAction, default=None, help="also run genie-aided LS")
    sub.add_argument("--protocol", choices=PROTOCOLS, help="NMSE scaling protocol")
    sub.add_argument("--workers", type=int, help="worker processes")
    sub.add_argument("--out", help="output path (default stdout)")
    sub.add_argument("--format", choices=FORMATS)


def build_parser():
    parser = argparse.ArgumentParser(prog="risparafac", description="PARAFAC/ALS channel estimation for RIS-assisted MISO")
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, sweep, help_text in (
        ("sweep-snr", "snr", "NMSE versus SNR at fixed dimensions"),
        ("sweep-n", "n", "NMSE versus SNR for several RIS sizes N"),
        ("sweep-p", "p", "NMSE versus SNR for several phase-configuration counts P"),
        ("single-trial", "snr", "one seeded realisation"),
    ):
        _add_common(subs.add_parser(name, help=help_text), sweep)
    return parser


def resolve_options(args):
    """Merge defaults < config file < explicit flags."""
    opts = dict(DEFAULTS)
    if args.config:
        opts.update(load_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    if args.command == "single-trial":
        opts["trials"] = 1
    return opts


def config_from_options(command, opts):
    sweep = {"sweep-n": "N", "sweep-p": "P"}.get(command, "snr")
    n_values = parse_ints(opts["n"])
    p_values = parse_ints(opts["p"])
    values = ()
    if sweep == "N":
        values = tuple(n_values)
    elif sweep == "P":
        values = tuple(p_values)
    elif len(n_values) != 1 or len(p_values) != 1:
        raise ValueError("--n and --p take a single value outside sweep-n/sweep-p")
    dims = SystemDims(
        M=int(opts["m"]),
        K=int(opts["k"]),
        N=n_values[0],
        P=p_values[0],
        T=None if opts["t"] is None else int(opts["t"]),
    )
    return SweepConfig(
        dims=dims,
        snr_grid_db=tuple(parse_snr(opts["snr"])),
        sweep_variable=sweep,
        sweep_values=values,
        trials=int(opts["trials"]),
        base_seed=int(opts["seed"]),
        als=AlsConfig(epsilon=float(opts["epsilon"]), max_iters=int(opts["max_iters"]), solver=opts["solver"]),
        baselines=bool(opts["baselines"]),
        protocol=opts["protocol"],
        output_path=opts["out"],
        fmt=opts["format"],
        workers=int(opts["workers"]),
    )


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_options(args)
        cfg = config_from_options(args.command, opts)
        cfg.preflight()
    except FeasibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, TypeError, OSError) as exc:
        parser.error(str(exc))
    result = run_sweep(cfg)
    if cfg.output_path:
        emit_results(result, cfg.output_path, cfg.fmt)
    else:
        sys.stdout.write(format_results(result, cfg.fmt))
    return 0


if __name__ == "__main__":
    sys.exit(main())
