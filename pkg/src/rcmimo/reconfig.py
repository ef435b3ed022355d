"""Antenna-gain selection from CSI and the resulting effective channels.

Two gain normalisations are available:

``paper``
    ``g1j = conj(h1j) / (|h11|^2 + |h12|^2)`` and
    ``g2j = (-1)^j conj(h2j) / (|h21|^2 + |h22|^2)``. Each receive row's
    combined gain is then independent of the channel magnitude.
``sqrt``
    Same with square-root denominators, so each row of G has unit energy and
    the row-1 combined gain becomes ``sqrt(|h11|^2 + |h12|^2)``.

The combined gain of row 2 is ``(|h22|^2 - |h21|^2) / d2`` in both cases,
a real number of either sign.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .channel import ChannelRealization
from .errors import ConfigurationError, ContractViolation, FeasibilityError
from .mathcore import det2x2, hadamard

if TYPE_CHECKING:
    from .spacecode import CodeParams

__all__ = [
    "GainNorm",
    "AntennaGains",
    "EffectiveChannel",
    "compute_gains",
    "compute_gains_batch",
    "effective_channel",
    "effective_channel_batch",
    "feasibility_det",
    "channel_factor",
    "combined_gains",
]

ROW_EPS = 1e-12


class GainNorm(str, enum.Enum):
    PAPER = "paper"
    SQRT = "sqrt"

    @classmethod
    def parse(cls, value) -> "GainNorm":
        aliases = {"paper_literal": cls.PAPER, "sqrt_normalized": cls.SQRT}
        if isinstance(value, cls):
            return value
        try:
            return aliases.get(str(value), None) or cls(str(value))
        except ValueError:
            raise ConfigurationError(f"unknown gain normalisation {value!r}") from None


@dataclass(frozen=True, eq=False)
class AntennaGains:
    G: np.ndarray


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """``Hg = H o G`` and the symbol-domain ``Heff = Hg @ [[a1, b1], [a2, b2]]``.

    ``Heff`` excludes the ``1/sqrt(nu)`` code normaliser; decoders apply it.
    """

    Hg: np.ndarray
    Heff: np.ndarray


def compute_gains_batch(H: np.ndarray, normalization=GainNorm.SQRT) -> np.ndarray:
    """Gain matrices for a stack of channels, shape ``(n, 2, 2)``."""
    norm = GainNorm.parse(normalization)
    H = np.asarray(H, dtype=np.complex128)
    if H.shape[-2:] != (2, 2):
        raise ContractViolation(f"channel must be 2x2, got {H.shape}")
    power = np.abs(H[..., 0]) ** 2 + np.abs(H[..., 1]) ** 2  # per receive row
    if np.any(power <= ROW_EPS):
        raise FeasibilityError("channel row with (near) zero energy; gains undefined")
    denom = np.sqrt(power) if norm is GainNorm.SQRT else power
    G = np.conj(H) / denom[..., None]
    G[..., 1, 0] = -G[..., 1, 0]
    return G


def compute_gains(h: ChannelRealization, normalization=GainNorm.SQRT) -> AntennaGains:
    """Select the reconfigurable-antenna gains for one channel realization.

    Raises
    ------
    FeasibilityError
        If either receive row of the channel has (near) zero energy.
    """
    G = compute_gains_batch(h.H, normalization)
    G.flags.writeable = False
    return AntennaGains(G=G)


def effective_channel_batch(H, G, p: "CodeParams") -> np.ndarray:
    """Stacked symbol-domain channels ``(H o G) @ A`` without ``1/sqrt(nu)``."""
    return hadamard(H, G) @ p.matrix


def effective_channel(h: ChannelRealization, g: AntennaGains, p: "CodeParams") -> EffectiveChannel:
    Hg = hadamard(h.H, g.G)
    Heff = Hg @ p.matrix
    Hg.flags.writeable = False
    Heff.flags.writeable = False
    return EffectiveChannel(Hg=Hg, Heff=Heff)


def channel_factor(Hg) -> complex:
    """``h11 g11 h22 g22 - h12 g12 h21 g21``, the channel part of det(Heff)."""
    return det2x2(Hg)


def feasibility_det(h: ChannelRealization, g: AntennaGains, p: "CodeParams") -> complex:
    """det(Heff) through its factorisation into code and channel terms.

    Nonzero exactly when the code term ``a1 b2 - a2 b1`` and the channel
    term are both nonzero.
    """
    code_term = p.alpha1 * p.beta2 - p.alpha2 * p.beta1
    return complex(code_term * channel_factor(hadamard(h.H, g.G)))


def combined_gains(Hg) -> np.ndarray:
    """Per-receive-row combined gains ``sum_j h_ij g_ij`` (shape ``(..., 2)``)."""
    return np.sum(np.asarray(Hg), axis=-1)
