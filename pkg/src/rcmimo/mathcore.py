"""Complex value containers and the few exact 2x2 kernels the package needs.

Vectors and matrices are plain ``complex128`` numpy arrays. The constructors
below validate shape and finiteness and hand back read-only arrays so a value
can be shared between workers without defensive copies.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation

__all__ = [
    "cmatrix",
    "cvector",
    "hadamard",
    "det2x2",
    "frobenius_norm_sq",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ContractViolation("non-finite entry in complex value")
    a.flags.writeable = False
    return a


def cvector(entries, n: int | None = None) -> np.ndarray:
    """Build an immutable complex vector, optionally checking its length."""
    v = np.array(entries, dtype=np.complex128).reshape(-1)
    if n is not None and v.shape != (n,):
        raise ContractViolation(f"expected length {n} vector, got {v.shape}")
    return _frozen(v)


def cmatrix(entries, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Build an immutable complex matrix from a row-major nested sequence."""
    m = np.array(entries, dtype=np.complex128)
    if m.ndim != 2:
        raise ContractViolation(f"expected a 2-D matrix, got ndim={m.ndim}")
    if shape is not None and m.shape != tuple(shape):
        raise ContractViolation(f"expected shape {shape}, got {m.shape}")
    return _frozen(m)


def hadamard(a, b) -> np.ndarray:
    """Elementwise product of two equally shaped matrices.

    Works on single matrices and on stacks of matrices alike; only the shapes
    have to agree exactly (no broadcasting).
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ContractViolation(f"hadamard shape mismatch {a.shape} vs {b.shape}")
    return a * b


def det2x2(a):
    """Determinant ``a11*a22 - a12*a21`` of a 2x2 matrix or a stack of them.

    Returns a Python ``complex`` for a single matrix and an array of shape
    ``a.shape[:-2]`` for a stack.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim < 2 or a.shape[-2:] != (2, 2):
        raise ContractViolation(f"det2x2 needs 2x2 input, got {a.shape}")
    d = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    return complex(d) if a.ndim == 2 else d


def frobenius_norm_sq(a) -> float:
    """Sum of squared magnitudes of all entries."""
    a = np.asarray(a, dtype=np.complex128)
    return float(np.sum(a.real**2 + a.imag**2))
