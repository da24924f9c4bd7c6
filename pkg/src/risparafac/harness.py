"""Monte Carlo driver: seeded trials, parameter sweeps, CSV/JSON output.

Every trial draws from streams keyed by ``(base_seed, point_index,
trial_index, stream_tag)``, so results do not depend on execution order or
on how many workers run them, and adding sweep points leaves earlier
trials untouched. Within one trial the channel realisation and the
unit-variance noise draw are shared across the SNR grid.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from .channel_model import ChannelPair, NoiseSpec, SystemDims, dft_phase, generate_channels, generate_pilots, observe
from .errors import DegenerateInputError, DegenerateScalingError, FeasibilityError, IllPosedUpdateError
from .estimator import AlsConfig, als_estimate, check_feasibility, genie_ls_h1, genie_ls_h2
from .metrics import NmseRecord, aligned_nmse, nmse, to_db

logger = logging.getLogger(__name__)

METHODS = ("als", "genie_h1", "genie_h2")
SWEEP_VARIABLES = ("snr", "N", "P")
PROTOCOLS = ("reference", "canonical")
FORMATS = ("csv", "json")
DEFAULT_SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)

CSV_FIELDS = (
    "sweep_var",
    "sweep_value",
    "snr_db",
    "method",
    "nmse_h1",
    "nmse_h1_db",
    "nmse_h2",
    "nmse_h2_db",
    "trials",
    "discarded",
    "mean_iters",
    "converged_frac",
)

_STREAM_CHANNELS = 0
_STREAM_NOISE = 1

# failures that discard a trial instead of aborting the sweep
_TRIAL_ERRORS = (IllPosedUpdateError, DegenerateInputError, DegenerateScalingError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class TrialSeeds:
    channels: np.random.SeedSequence
    noise: np.random.SeedSequence


def trial_seeds(base_seed, point_index, trial_index):
    def stream(tag):
        return np.random.SeedSequence(base_seed, spawn_key=(point_index, trial_index, tag))

    return TrialSeeds(stream(_STREAM_CHANNELS), stream(_STREAM_NOISE))


def _run_grid(dims, snr_grid, seeds, als_cfg, with_baselines, protocol):
    """One channel realisation evaluated at every SNR in ``snr_grid``."""
    reference = protocol == "reference"
    channels = generate_channels(dims, seeds.channels, reference_column=reference)
    phi = dft_phase(dims.P, dims.N)
    x = generate_pilots(dims.M, dims.T)
    out = []
    for snr_db in snr_grid:
        z = observe(channels, phi, x, NoiseSpec(float(snr_db)), seeds.noise, dims=dims)
        meta = {"seed": seeds.channels.spawn_key, "snr_db": float(snr_db), "dims": dims}
        records = {}
        try:
            est = als_estimate(z, phi, als_cfg)
            records["als"] = aligned_nmse(channels, est, **meta)
        except _TRIAL_ERRORS as exc:
            logger.warning("ALS trial %s at %s dB discarded: %s", meta["seed"], snr_db, exc)
            records["als"] = None
        if with_baselines:
            records["genie_h1"] = _genie_record(channels, z, phi, "h1", reference, meta)
            records["genie_h2"] = _genie_record(channels, z, phi, "h2", reference, meta)
        out.append(records)
    return out


def _genie_record(channels, z, phi, which, reference, meta):
    try:
        if which == "h1":
            h1_hat = genie_ls_h1(z, channels.h2, phi)
            pair = ChannelPair(h1_hat, channels.h2)
        else:
            h2_hat = genie_ls_h2(z, channels.h1, phi)
            pair = ChannelPair(channels.h1, h2_hat)
        if reference:
            # the other channel is known exactly, so there is no ambiguity to remove
            value = nmse(getattr(channels, which), getattr(pair, which))
        else:
            rec = aligned_nmse(channels, pair)
            value = rec.nmse_h1 if which == "h1" else rec.nmse_h2
    except _TRIAL_ERRORS as exc:
        logger.warning("genie %s trial %s discarded: %s", which, meta["seed"], exc)
        return None
    if which == "h1":
        return NmseRecord(nmse_h1=value, nmse_h2=math.nan, **meta)
    return NmseRecord(nmse_h1=math.nan, nmse_h2=value, **meta)


def run_trial(dims, snr_db, seeds, als_cfg=None, with_baselines=False, protocol="reference"):
    """Run ALS (and optionally both genie LS baselines) on one realisation.

    Returns ``{method: NmseRecord}``; a method whose computation failed maps
    to ``None`` (a discarded trial).
    """
    ok, violations = check_feasibility(dims)
    if not ok:
        raise FeasibilityError("infeasible dimensions: " + ", ".join(violations), violations)
    if protocol not in PROTOCOLS:
        raise ValueError(f"protocol must be one of {PROTOCOLS}")
    return _run_grid(dims, [snr_db], seeds, als_cfg or AlsConfig(), with_baselines, protocol)[0]


@dataclass(frozen=True)
class SweepConfig:
    dims: SystemDims
    snr_grid_db: Tuple[float, ...] = DEFAULT_SNR_GRID
    sweep_variable: str = "snr"
    sweep_values: Tuple[int, ...] = ()
    trials: int = 200
    base_seed: int = 0
    als: AlsConfig = AlsConfig()
    baselines: bool = False
    protocol: str = "reference"
    output_path: Optional[str] = None
    fmt: str = "csv"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "sweep_values", tuple(int(v) for v in self.sweep_values))
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ValueError(f"sweep_variable must be one of {SWEEP_VARIABLES}")
        if self.sweep_variable != "snr" and not self.sweep_values:
            raise ValueError(f"a {self.sweep_variable} sweep needs at least one value")
        if not self.snr_grid_db:
            raise ValueError("snr grid is empty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be non-negative")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}")
        if self.fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def points(self):
        """System dimensions of each sweep point, in order."""
        if self.sweep_variable == "snr":
            return [self.dims]
        return [self.dims.replace(**{self.sweep_variable: v}) for v in self.sweep_values]

    def preflight(self):
        """Raise :class:`FeasibilityError` naming every infeasible sweep point."""
        problems = []
        for dims in self.points():
            ok, violations = check_feasibility(dims)
            if not ok:
                problems.append(f"{dims.as_dict()}: " + ", ".join(violations))
        if problems:
            raise FeasibilityError("infeasible sweep points:\n  " + "\n  ".join(problems), problems)

    def methods(self):
        return METHODS if self.baselines else METHODS[:1]

    def to_dict(self):
        return {
            "dims": self.dims.as_dict(),
            "snr_grid_db": list(self.snr_grid_db),
            "sweep_variable": self.sweep_variable,
            "sweep_values": list(self.sweep_values),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "als": asdict(self.als),
            "baselines": self.baselines,
            "protocol": self.protocol,
            "format": self.fmt,
        }


@dataclass
class SweepRow:
    sweep_var: str
    sweep_value: float
    snr_db: float
    method: str
    nmse_h1: float
    nmse_h2: float
    trials: int
    discarded: int
    mean_iters: float
    max_iters: float
    converged_frac: float
    wall_time_s: float = field(default=0.0, compare=False)

    @property
    def nmse_h1_db(self):
        return to_db(self.nmse_h1)

    @property
    def nmse_h2_db(self):
        return to_db(self.nmse_h2)

    def to_record(self):
        rec = {name: getattr(self, name) for name in CSV_FIELDS}
        rec["max_iters"] = self.max_iters
        rec["wall_time_s"] = self.wall_time_s
        return rec


@dataclass
class SweepResult:
    config: SweepConfig
    rows: List[SweepRow]
    wall_time_s: float = 0.0

    def select(self, method, **where):
        """Rows of one method, optionally filtered by ``sweep_value``/``snr_db``."""
        out = [r for r in self.rows if r.method == method]
        for key, value in where.items():
            out = [r for r in out if getattr(r, key) == value]
        return out


def _task(args):
    point_index, dims, trial_index, cfg = args
    start = time.perf_counter()
    with threadpool_limits(limits=1):
        outcome = _run_grid(
            dims,
            cfg.snr_grid_db,
            trial_seeds(cfg.base_seed, point_index, trial_index),
            cfg.als,
            cfg.baselines,
            cfg.protocol,
        )
    return point_index, trial_index, outcome, time.perf_counter() - start


def _mean(values):
    return math.fsum(values) / len(values) if values else math.nan


def run_sweep(cfg: SweepConfig, order: Optional[Sequence[int]] = None):
    """Execute every (sweep point, trial) pair and average per SNR and method.

    ``order`` optionally permutes task execution (used to check that the
    aggregates do not depend on it).
    """
    cfg.preflight()
    started = time.perf_counter()
    points = cfg.points()
    tasks = [(pi, dims, ti, cfg) for pi, dims in enumerate(points) for ti in range(cfg.trials)]
    if order is not None:
        tasks = [tasks[i] for i in order]

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            done = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        done = [_task(t) for t in tasks]

    outcomes: Dict[Tuple[int, int], list] = {}
    elapsed = [0.0] * len(points)
    for pi, ti, outcome, seconds in done:
        outcomes[(pi, ti)] = outcome
        elapsed[pi] += seconds

    rows = []
    for pi, dims in enumerate(points):
        for si, snr_db in enumerate(cfg.snr_grid_db):
            sweep_value = snr_db if cfg.sweep_variable == "snr" else getattr(dims, cfg.sweep_variable)
            for method in cfg.methods():
                records = [outcomes[(pi, ti)][si][method] for ti in range(cfg.trials)]
                kept = [r for r in records if r is not None]
                if method == "als":
                    iters = [r.iterations for r in kept]
                    mean_iters = _mean(iters)
                    max_iters = float(max(iters)) if iters else math.nan
                    converged = _mean([1.0 if r.converged else 0.0 for r in kept])
                else:
                    mean_iters = max_iters = converged = math.nan
                rows.append(
                    SweepRow(
                        sweep_var=cfg.sweep_variable,
                        sweep_value=sweep_value,
                        snr_db=snr_db,
                        method=method,
                        nmse_h1=_mean([r.nmse_h1 for r in kept]),
                        nmse_h2=_mean([r.nmse_h2 for r in kept]),
                        trials=len(kept),
                        discarded=len(records) - len(kept),
                        mean_iters=mean_iters,
                        max_iters=max_iters,
                        converged_frac=converged,
                        wall_time_s=elapsed[pi] / len(cfg.snr_grid_db),
                    )
                )
    return SweepResult(cfg, rows, time.perf_counter() - started)


def _csv_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def format_results(result: SweepResult, fmt="csv"):
    """Serialise a sweep as CSV text (no timing fields) or JSON text."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for row in result.rows:
            rec = row.to_record()
            writer.writerow([_csv_value(rec[name]) for name in CSV_FIELDS])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "config": result.config.to_dict() if result.config is not None else None,
            "wall_time_s": result.wall_time_s,
            "records": [{k: _json_value(v) for k, v in row.to_record().items()} for row in result.rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"format must be one of {FORMATS}")


def emit_results(result: SweepResult, path, fmt="csv"):
    """Write the sweep to ``path``; I/O errors are re-raised naming the path."""
    text = format_results(result, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path
