"""Square QAM alphabets with Gray labelling and minimum-distance detection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractViolation

__all__ = [
    "Constellation",
    "build_qam",
    "modulate",
    "demodulate",
    "nearest_point",
    "nearest_index",
]

SUPPORTED_ORDERS = (4, 16, 64)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-energy M-ary constellation.

    ``points[i]`` carries the label ``bit_labels[i]``; labels are the
    ``log2(M)``-bit binary representation of ``i``, so the point index and the
    integer value of its label coincide.
    """

    order: int
    points: np.ndarray
    bit_labels: tuple[str, ...]
    bits: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1


def _inverse_gray(g: int) -> int:
    n = 0
    while g:
        n ^= g
        g >>= 1
    return n


def build_qam(M: int) -> Constellation:
    """Build a Gray-labelled square QAM with unit average symbol energy.

    The first half of every label selects the in-phase level and the second
    half the quadrature level, each through an independent binary reflected
    Gray code, so horizontal and vertical neighbours differ in one bit.

    Parameters
    ----------
    M : int
        Constellation order, one of 4, 16, 64.

    Raises
    ------
    ConfigurationError
        If ``M`` is not a supported square QAM order.
    """
    if M not in SUPPORTED_ORDERS:
        raise ConfigurationError(f"unsupported QAM order {M}; use one of {SUPPORTED_ORDERS}")
    nbits = M.bit_length() - 1
    half = nbits // 2
    side = 1 << half
    mask = side - 1
    points = np.empty(M, dtype=np.complex128)
    for i in range(M):
        li = _inverse_gray(i >> half)
        lq = _inverse_gray(i & mask)
        points[i] = complex(2 * li - (side - 1), 2 * lq - (side - 1))
    points /= np.sqrt(2.0 * (M - 1) / 3.0)
    points.flags.writeable = False
    labels = tuple(format(i, f"0{nbits}b") for i in range(M))
    bits = np.array([[int(ch) for ch in lab] for lab in labels], dtype=np.uint8)
    bits.flags.writeable = False
    return Constellation(order=M, points=points, bit_labels=labels, bits=bits)


def _as_bit_array(bits) -> np.ndarray:
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ContractViolation("bit string may only contain '0' and '1'")
        return np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits, dtype=np.int64).reshape(-1)
    if np.any((arr != 0) & (arr != 1)):
        raise ContractViolation("bits must be 0 or 1")
    return arr.astype(np.uint8)


def modulate(bits, c: Constellation) -> np.ndarray:
    """Map a bit string (or 0/1 sequence) to constellation symbols.

    Raises
    ------
    ContractViolation
        If the bit count is not a multiple of ``log2(M)``.
    """
    b = _as_bit_array(bits)
    k = c.bits_per_symbol
    if b.size % k:
        raise ContractViolation(f"{b.size} bits is not a multiple of {k} bits per symbol")
    if b.size == 0:
        return np.empty(0, dtype=np.complex128)
    weights = 1 << np.arange(k - 1, -1, -1)
    idx = b.reshape(-1, k).astype(np.int64) @ weights
    return c.points[idx]


def nearest_index(z, c: Constellation) -> np.ndarray:
    """Vectorised minimum-distance decision; ties go to the lowest index."""
    z = np.asarray(z, dtype=np.complex128)
    d = np.abs(z[..., None] - c.points) ** 2
    return np.argmin(d, axis=-1)


def nearest_point(z: complex, c: Constellation) -> tuple[int, complex]:
    """Return ``(index, point)`` of the constellation point closest to ``z``."""
    z = complex(z)
    if not np.isfinite(z.real) or not np.isfinite(z.imag):
        raise ContractViolation("nearest_point needs a finite input")
    i = int(nearest_index(z, c))
    return i, complex(c.points[i])


def demodulate(symbols, c: Constellation) -> str:
    """Hard-decide each symbol and concatenate the bit labels."""
    idx = nearest_index(np.asarray(symbols, dtype=np.complex128).reshape(-1), c)
    return "".join(c.bit_labels[i] for i in idx)
