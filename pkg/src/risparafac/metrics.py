"""Scaling-ambiguity removal and NMSE."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel_model import ChannelPair
from .errors import DegenerateScalingError, DimensionError


def to_db(value):
    if value is None or math.isnan(value):
        return math.nan
    if value == 0:
        return -math.inf
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class NmseRecord:
    """Per-trial NMSE of both channels. NaN marks a channel the method did not estimate."""

    nmse_h1: float
    nmse_h2: float
    seed: object = None
    snr_db: Optional[float] = None
    dims: object = None
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def nmse_h1_db(self):
        return to_db(self.nmse_h1)

    @property
    def nmse_h2_db(self):
        return to_db(self.nmse_h2)


def normalize_first_column(h1, h2):
    """Fix the diagonal scaling so that the first column of H1 is all ones.

    Row n of H1 is divided by ``H1[n, 0]`` and column n of H2 multiplied by
    it, which leaves every ``H2 diag(Phi[p]) H1`` unchanged.
    """
    h1 = np.asarray(h1)
    h2 = np.asarray(h2)
    if h2.shape[1] != h1.shape[0]:
        raise DimensionError(f"incompatible shapes H1 {h1.shape}, H2 {h2.shape}")
    scale = h1[:, 0]
    if np.any(scale == 0):
        raise DegenerateScalingError("H1 has a zero entry in its first column")
    return h1 / scale[:, None], h2 * scale[None, :]


def nmse(h_true, h_hat):
    h_true = np.asarray(h_true)
    h_hat = np.asarray(h_hat)
    if h_true.shape != h_hat.shape:
        raise DimensionError(f"shape mismatch {h_true.shape} vs {h_hat.shape}")
    power = np.vdot(h_true, h_true).real
    if power == 0:
        raise ValueError("true channel is identically zero")
    diff = h_true - h_hat
    return float(np.vdot(diff, diff).real / power)


def _pair(est):
    if isinstance(est, ChannelPair):
        return est.h1, est.h2
    return est.h1_hat, est.h2_hat


def aligned_nmse(truth, est, seed=None, snr_db=None, dims=None):
    """NMSE of both channels after canonicalising truth and estimate alike."""
    h1_hat, h2_hat = _pair(est)
    t1, t2 = normalize_first_column(truth.h1, truth.h2)
    e1, e2 = normalize_first_column(h1_hat, h2_hat)
    return NmseRecord(
        nmse_h1=nmse(t1, e1),
        nmse_h2=nmse(t2, e2),
        seed=seed,
        snr_db=snr_db,
        dims=dims,
        iterations=getattr(est, "iterations", None),
        converged=getattr(est, "converged", None),
    )
