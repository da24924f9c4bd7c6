"""Signal model of the RIS-assisted MISO downlink training phase.

Every random draw is keyed by an explicit seed (an ``int`` or a
:class:`numpy.random.SeedSequence`), so realisations are reproducible and
independent across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, FeasibilityError


@dataclass(frozen=True)
class SystemDims:
    """Integer system sizes.

    M: BS antennas, K: users, N: RIS elements, P: training phase
    configurations, T: pilot slots (defaults to M).
    """

    M: int
    K: int
    N: int
    P: int
    T: Optional[int] = None

    def __post_init__(self):
        if self.T is None:
            object.__setattr__(self, "T", self.M)
        for name in ("M", "K", "N", "P", "T"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise ValueError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, int(value))
        if self.T < self.M:
            raise FeasibilityError(
                f"pilot length T={self.T} shorter than M={self.M}", [f"T >= M ({self.T} < {self.M})"]
            )

    def violations(self):
        """Identifiability inequalities that do not hold, as readable strings."""
        out = []
        if self.M < self.N:
            out.append(f"M >= N ({self.M} < {self.N})")
        if self.K < self.N:
            out.append(f"K >= N ({self.K} < {self.N})")
        if self.P > self.N:
            out.append(f"P <= N ({self.P} > {self.N})")
        return out

    @property
    def feasible(self):
        return not self.violations()

    def replace(self, **changes):
        values = {"M": self.M, "K": self.K, "N": self.N, "P": self.P, "T": self.T}
        values.update(changes)
        return SystemDims(**values)

    def as_dict(self):
        return {"M": self.M, "K": self.K, "N": self.N, "P": self.P, "T": self.T}


@dataclass(frozen=True)
class ChannelPair:
    """``h1``: N x M (RIS -> BS side), ``h2``: K x N (users -> RIS side)."""

    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        h1 = np.asarray(self.h1)
        h2 = np.asarray(self.h2)
        if h1.ndim != 2 or h2.ndim != 2 or h2.shape[1] != h1.shape[0]:
            raise DimensionError(f"incompatible channel shapes H1 {h1.shape}, H2 {h2.shape}")
        if not (np.all(np.isfinite(h1)) and np.all(np.isfinite(h2))):
            raise ValueError("channel matrices must be finite")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)

    def rescaled(self, scale):
        """The ambiguous twin ``(H2 diag(scale), diag(scale)^-1 H1)``."""
        scale = np.asarray(scale)
        return ChannelPair(self.h1 / scale[:, None], self.h2 * scale[None, :])


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level with unit per-entry signal statistics: ``sigma2 = 10**(-snr_db/10)``."""

    snr_db: float

    @property
    def sigma2(self):
        if math.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        return 10.0 ** (-self.snr_db / 10.0)

    @classmethod
    def from_sigma2(cls, sigma2):
        if sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")
        if sigma2 == 0:
            return cls(math.inf)
        return cls(-10.0 * math.log10(sigma2))

    @classmethod
    def noiseless(cls):
        return cls(math.inf)


@dataclass
class ReceivedTensor:
    """The P pilot-free observation slices, stored as an array of shape (P, K, M)."""

    slices: np.ndarray
    dims: Optional[SystemDims] = None
    seed: object = None
    snr_db: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.slices = np.asarray(self.slices)
        if self.slices.ndim != 3:
            raise DimensionError(f"expected (P, K, M) slices, got shape {self.slices.shape}")
        if self.dims is not None:
            expected = (self.dims.P, self.dims.K, self.dims.M)
            if self.slices.shape != expected:
                raise DimensionError(f"slices {self.slices.shape} do not match dims {expected}")

    @property
    def shape(self):
        """``(P, K, M)``."""
        return self.slices.shape


def _complex_gaussian(rng, shape, variance=1.0):
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_channels(dims, rng_seed, reference_column=False):
    """Draw H1 (N x M) then H2 (K x N) with i.i.d. CN(0, 1) entries.

    With ``reference_column=True`` the first column of H1 is overwritten with
    ones after the draw (a known reference that pins the diagonal scaling);
    all other entries are unchanged, so both variants share one stream.
    """
    rng = np.random.default_rng(rng_seed)
    h1 = _complex_gaussian(rng, (dims.N, dims.M))
    h2 = _complex_gaussian(rng, (dims.K, dims.N))
    if reference_column:
        h1[:, 0] = 1.0
    return ChannelPair(h1, h2)


def dft_phase(P, N):
    """Unit-modulus training phases ``Phi[p, n] = exp(-2j*pi*p*n/N)`` (first P DFT rows)."""
    if P > N:
        raise FeasibilityError(f"P={P} phase configurations exceed N={N} RIS elements", [f"P <= N ({P} > {N})"])
    p = np.arange(P)[:, None]
    n = np.arange(N)[None, :]
    # integer product mod N keeps the phase argument exact for large indices
    return np.exp(-2j * np.pi * ((p * n) % N) / N)


def generate_pilots(M, T):
    """First M rows of the unitary T-point DFT matrix, so that ``X X^H = I_M``."""
    if T < M:
        raise FeasibilityError(f"pilot length T={T} shorter than M={M}", [f"T >= M ({T} < {M})"])
    m = np.arange(M)[:, None]
    t = np.arange(T)[None, :]
    return np.exp(-2j * np.pi * ((m * t) % T) / T) / math.sqrt(T)


def noiseless_slices(channels, phi):
    """Slices ``Z_p = H2 diag(Phi[p]) H1``, shape (P, K, M)."""
    h1, h2 = channels.h1, channels.h2
    phi = np.asarray(phi)
    if phi.ndim != 2 or phi.shape[1] != h1.shape[0]:
        raise DimensionError(f"Phi shape {phi.shape} incompatible with N={h1.shape[0]}")
    return np.einsum("kn,pn,nm->pkm", h2, phi, h1, optimize=True)


def synthesize_received(channels, phi, x, noise, rng_seed):
    """Received blocks ``Y_p = H2 diag(Phi[p]) H1 X + W_p``, shape (P, K, T).

    The unit-variance noise draw depends only on ``rng_seed`` and is scaled by
    ``sqrt(sigma2)``, so one seed gives common random numbers across SNRs.
    """
    x = np.asarray(x)
    n, m = channels.h1.shape
    if x.ndim != 2 or x.shape[0] != m:
        raise DimensionError(f"pilot matrix {x.shape} incompatible with M={m}")
    clean = noiseless_slices(channels, phi) @ x
    if noise.sigma2 == 0:
        return clean
    rng = np.random.default_rng(rng_seed)
    return clean + math.sqrt(noise.sigma2) * _complex_gaussian(rng, clean.shape)


def remove_pilots(y, x, dims=None, seed=None, snr_db=None):
    """Project out the pilots: ``Z~_p = Y_p X^H``."""
    y = np.asarray(y)
    x = np.asarray(x)
    if y.ndim != 3 or x.ndim != 2 or y.shape[2] != x.shape[1]:
        raise DimensionError(f"received {y.shape} and pilots {x.shape} are not conformable")
    return ReceivedTensor(y @ x.conj().T, dims=dims, seed=seed, snr_db=snr_db)


def observe(channels, phi, x, noise, rng_seed, dims=None):
    """Synthesize and de-pilot in one call."""
    y = synthesize_received(channels, phi, x, noise, rng_seed)
    return remove_pilots(y, x, dims=dims, seed=rng_seed, snr_db=noise.snr_db)


def stack_mode1(z):
    """Stack the slices as Z' of shape (P*M, K), row ``m * P + p``."""
    s = z.slices if isinstance(z, ReceivedTensor) else np.asarray(z)
    p, k, m = s.shape
    return s.transpose(2, 0, 1).reshape(m * p, k)


def stack_mode2(z):
    """Stack the slices as Z'' of shape (K*P, M), row ``p * K + k``."""
    s = z.slices if isinstance(z, ReceivedTensor) else np.asarray(z)
    p, k, m = s.shape
    return s.reshape(p * k, m)
