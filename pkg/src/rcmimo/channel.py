"""Rician flat fading, AWGN, and reproducible random substreams.

K-factors are given in dB everywhere. The two limits are exact code paths
rather than large sentinel values: ``k_db = +inf`` returns the all-ones
line-of-sight matrix with no scattered part, ``k_db = -inf`` returns pure
Rayleigh fading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

__all__ = [
    "LOS_ONLY",
    "RAYLEIGH",
    "ChannelRealization",
    "NoiseModel",
    "parse_db",
    "rician_weights",
    "sample_rician",
    "sample_rician_batch",
    "complex_normal",
    "sample_noise",
    "snr_to_n0",
    "substream",
]

LOS_ONLY = math.inf
RAYLEIGH = -math.inf


def parse_db(text) -> float:
    """Parse a dB value, accepting ``inf``/``+inf``/``-inf`` for the limits."""
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        s = str(text).strip().lower()
        value = {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf}.get(s)
        if value is None:
            value = float(s)
    if math.isnan(value):
        raise ContractViolation("dB value must not be NaN")
    return value


def rician_weights(k_db: float) -> tuple[float, float]:
    """Return the (line-of-sight, scattered) amplitude weights for ``k_db``."""
    if math.isnan(k_db):
        raise ContractViolation("K-factor must not be NaN")
    if k_db == LOS_ONLY:
        return 1.0, 0.0
    if k_db == RAYLEIGH:
        return 0.0, 1.0
    K = 10.0 ** (k_db / 10.0)
    return math.sqrt(K / (K + 1.0)), math.sqrt(1.0 / (K + 1.0))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One 2x2 channel draw together with the K-factor it was drawn at."""

    H: np.ndarray
    k_db: float

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.complex128)
        if H.shape != (2, 2):
            raise ContractViolation(f"channel must be 2x2, got {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ContractViolation("channel has non-finite entries")
        H = H.copy()
        H.flags.writeable = False
        object.__setattr__(self, "H", H)


@dataclass(frozen=True)
class NoiseModel:
    """Per-branch complex noise power ``n0`` at a given SNR.

    ``n0 == 0`` is only allowed for the noiseless ``snr_db = +inf`` limit.
    """

    n0: float
    snr_db: float

    def __post_init__(self):
        if self.n0 < 0 or (self.n0 == 0 and self.snr_db != math.inf):
            raise ContractViolation(f"noise power must be positive, got {self.n0}")

    @classmethod
    def from_snr(cls, snr_db: float) -> "NoiseModel":
        return cls(n0=snr_to_n0(snr_db), snr_db=snr_db)


def snr_to_n0(snr_db: float, scheme=None) -> float:
    """Noise power for a scheme radiating unit total power per channel use.

    Every scheme in this package is normalised to that power before it
    reaches the channel, so ``scheme`` is accepted for interface symmetry
    and does not change the result.
    """
    if math.isnan(snr_db):
        raise ContractViolation("SNR must not be NaN")
    if snr_db == math.inf:
        return 0.0
    return 10.0 ** (-snr_db / 10.0)


def complex_normal(shape, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    shape = tuple(np.atleast_1d(shape))
    x = rng.standard_normal(shape + (2,))
    return (x[..., 0] + 1j * x[..., 1]) * math.sqrt(0.5)


def sample_rician_batch(k_db: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` independent 2x2 Rician channels, shape ``(n, 2, 2)``.

    The scattered component is always drawn, even in the line-of-sight limit,
    so that streams stay aligned across K-factors.
    """
    los, scat = rician_weights(k_db)
    Hw = complex_normal((n, 2, 2), rng)
    if scat == 0.0:
        return np.ones((n, 2, 2), dtype=np.complex128)
    if los == 0.0:
        return Hw
    return los + scat * Hw


def sample_rician(k_db: float, rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel ``sqrt(K/(K+1)) * ones + sqrt(1/(K+1)) * Hw``."""
    return ChannelRealization(H=sample_rician_batch(k_db, 1, rng)[0], k_db=k_db)


def sample_noise(n: int, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Length-``n`` AWGN vector with per-entry variance ``noise.n0``."""
    if n < 1:
        raise ContractViolation("noise length must be at least 1")
    return math.sqrt(noise.n0) * complex_normal(n, rng)


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream addressed by ``(master_seed, *key)``.

    The same address always yields the same stream regardless of which
    process asks for it, which is what makes parallel runs reproducible.
    """
    if not 0 <= master_seed < 2**64:
        raise ContractViolation("master seed must be a 64-bit unsigned integer")
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))
