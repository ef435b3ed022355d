"""The rate-two space code: parameters, encoder and ML decoders.

A codeword carries two symbols in one channel use::

    c = [[a1, b1], [a2, b2]] @ [s1, s2] / sqrt(nu)

With the receiver seeing ``y = Heff @ s / sqrt(nu) + z`` the exhaustive ML
search costs M^2 metric evaluations. The conditional decoder fixes each of
the M candidates for ``s2``, cancels it, resolves ``s1`` with a scalar
slicer and re-scores the surviving pair with the full metric, so it costs
M evaluations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation, nearest_index
from .errors import ConfigurationError, ContractViolation, DegenerateCombinerError, ParameterError

__all__ = [
    "DEFAULT_BETA2",
    "CodeParams",
    "SchemeDescriptor",
    "PROPOSED",
    "DecodeResult",
    "Combiner",
    "make_params",
    "encode",
    "encode_batch",
    "joint_ml_decode",
    "joint_ml_decode_batch",
    "pair_search_batch",
    "conditional_ml_decode",
    "conditional_ml_decode_batch",
    "scheme_rates",
]

DEFAULT_BETA2 = 0.618
COMBINER_EPS = 1e-12
_PARAM_TOL = 1e-12
# candidate rows evaluated per chunk in the exhaustive searches
_CHUNK_ENTRIES = 1 << 21


@dataclass(frozen=True)
class CodeParams:
    """Design scalars of the code and the power normaliser ``nu``."""

    alpha1: complex
    alpha2: complex
    beta1: complex
    beta2: complex
    nu: float

    def __post_init__(self):
        if abs(self.alpha1 * self.beta2 - self.alpha2 * self.beta1) <= _PARAM_TOL:
            raise ParameterError("a1*b2 == a2*b1: the code matrix is singular")
        p1 = abs(self.alpha1) ** 2 + abs(self.beta1) ** 2
        p2 = abs(self.alpha2) ** 2 + abs(self.beta2) ** 2
        scale = max(1.0, self.nu)
        if abs(p1 - self.nu) > _PARAM_TOL * scale or abs(p2 - self.nu) > _PARAM_TOL * scale:
            raise ParameterError(f"antenna powers {p1:.6g}, {p2:.6g} differ from nu={self.nu:.6g}")

    @property
    def matrix(self) -> np.ndarray:
        """The un-normalised 2x2 code matrix ``[[a1, b1], [a2, b2]]``."""
        return np.array([[self.alpha1, self.beta1], [self.alpha2, self.beta2]], dtype=np.complex128)

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.nu)


def make_params(beta2: float = DEFAULT_BETA2) -> CodeParams:
    """Parameters with ``a1 = a2 = 1``, ``b1 = -j*beta2`` and ``nu = 1 + beta2^2``.

    Raises
    ------
    ParameterError
        If ``beta2`` is zero or not finite.
    """
    beta2 = float(beta2)
    if not math.isfinite(beta2) or beta2 == 0.0:
        raise ParameterError(f"beta2 must be finite and nonzero, got {beta2}")
    return CodeParams(
        alpha1=1.0 + 0j,
        alpha2=1.0 + 0j,
        beta1=-1j * beta2,
        beta2=complex(beta2),
        nu=1.0 + beta2 * beta2,
    )


@dataclass(frozen=True)
class SchemeDescriptor:
    """``n_symbols`` information symbols sent over ``n_uses`` channel uses."""

    name: str
    n_symbols: int
    n_uses: int

    @property
    def symbol_rate(self) -> float:
        return self.n_symbols / self.n_uses

    def bit_rate(self, M: int) -> float:
        return self.symbol_rate * math.log2(M)


PROPOSED = SchemeDescriptor("proposed", n_symbols=2, n_uses=1)


def scheme_rates(s: SchemeDescriptor, M: int) -> tuple[float, float]:
    """Return ``(symbol rate, bit rate)`` per channel use."""
    return s.symbol_rate, s.bit_rate(M)


@dataclass(frozen=True)
class DecodeResult:
    """Decision of one decoder call.

    ``metric_evaluations`` counts full Euclidean metric computations (or,
    for SIC, nearest-point searches); ``degenerate`` marks decisions taken
    on a singular channel.
    """

    symbol_indices: tuple[int, ...]
    metric: float
    metric_evaluations: int
    degenerate: bool = False


class Combiner(str, enum.Enum):
    MATCHED_FILTER = "mf"
    PAPER_SUM = "sum"

    @classmethod
    def parse(cls, value) -> "Combiner":
        aliases = {"matched_filter": cls.MATCHED_FILTER, "paper_sum": cls.PAPER_SUM}
        if isinstance(value, cls):
            return value
        try:
            return aliases.get(str(value)) or cls(str(value))
        except ValueError:
            raise ConfigurationError(f"unknown combiner {value!r}") from None


def encode_batch(S: np.ndarray, p: CodeParams) -> np.ndarray:
    """Encode a stack of symbol pairs, ``(n, 2) -> (n, 2)``."""
    return (np.asarray(S, dtype=np.complex128) @ p.matrix.T) * p.scale


def encode(s, p: CodeParams) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    if s.shape != (2,):
        raise ContractViolation(f"encode needs two symbols, got shape {s.shape}")
    return encode_batch(s[None], p)[0]


def _heff(heff) -> np.ndarray:
    return np.asarray(getattr(heff, "Heff", heff), dtype=np.complex128)


def _check_batch(Y, Heff):
    if Y.ndim != 2 or Y.shape[1] != 2 or Heff.shape != (Y.shape[0], 2, 2):
        raise ContractViolation(f"bad shapes y={Y.shape}, Heff={Heff.shape}")


def pair_search_batch(Y, A, c: Constellation):
    """Exhaustive search of ``||y - A s||^2`` over all M^2 symbol pairs.

    ``A`` is the (already normalised) stack of 2x2 channels. Candidates are
    enumerated with ``s2`` as the outer index and the first minimum wins, so
    ties resolve to the lowest ``s2`` and then the lowest ``s1``.
    """
    M = c.order
    k = np.arange(M * M)
    cand = np.stack([c.points[k % M], c.points[k // M]])  # (2, M^2)
    n = Y.shape[0]
    idx = np.empty(n, dtype=np.int64)
    metric = np.empty(n)
    step = max(1, _CHUNK_ENTRIES // (M * M))
    for a in range(0, n, step):
        R = A[a : a + step] @ cand
        diff = Y[a : a + step, :, None] - R
        d = np.sum(diff.real**2 + diff.imag**2, axis=1)
        best = np.argmin(d, axis=1)
        idx[a : a + step] = best
        metric[a : a + step] = d[np.arange(best.size), best]
    return np.stack([idx % M, idx // M], axis=1), metric


def joint_ml_decode_batch(Y, Heff, p: CodeParams, c: Constellation):
    """Exhaustive ML over all M^2 symbol pairs of the proposed code.

    Returns
    -------
    indices : ndarray, shape (n, 2)
        Decided ``(s1, s2)`` constellation indices.
    metric : ndarray, shape (n,)
        ``||y - Heff s / sqrt(nu)||^2`` at the decision.
    evaluations : int
        Metric evaluations per decoded vector (M^2).
    """
    Y = np.asarray(Y, dtype=np.complex128)
    Heff = np.asarray(Heff, dtype=np.complex128)
    _check_batch(Y, Heff)
    idx, metric = pair_search_batch(Y, Heff * p.scale, c)
    return idx, metric, c.order**2


def conditional_ml_decode_batch(Y, Heff, p: CodeParams, c: Constellation, combiner=Combiner.MATCHED_FILTER):
    """Conditional ML: M hypotheses on ``s2``, sliced ``s1``, full re-scoring.

    For every candidate ``s2`` the known contribution is cancelled from both
    branches, leaving ``r_i = h_i s1 + z_i`` with ``h_i`` the first column of
    ``Heff / sqrt(nu)``. The branches are merged into one scalar observation

    * ``mf``:  ``sum(conj(h_i) r_i) / sum(|h_i|^2)`` -- the exact conditional
      ML estimate, which makes the final decision identical to joint ML;
    * ``sum``: ``(r_1 + r_2) / (h_1 + h_2)``, the plain branch sum.

    The sliced ``s1`` and the candidate ``s2`` are scored with the complete
    two-branch metric and the lowest score over the M candidates wins.

    Raises
    ------
    DegenerateCombinerError
        If the combined scalar channel is below ``1e-12`` in magnitude.
    """
    combiner = Combiner.parse(combiner)
    Y = np.asarray(Y, dtype=np.complex128)
    Heff = np.asarray(Heff, dtype=np.complex128)
    _check_batch(Y, Heff)
    M = c.order
    A = Heff * p.scale
    h1 = A[:, :, 0]
    h2 = A[:, :, 1]
    if combiner is Combiner.MATCHED_FILTER:
        weights = np.conj(h1)
        h_tilde = np.sum(np.abs(h1) ** 2, axis=1)
    else:
        weights = np.ones_like(h1)
        h_tilde = np.sum(h1, axis=1)
    if np.any(np.abs(h_tilde) < COMBINER_EPS):
        raise DegenerateCombinerError("combined scalar channel vanished")
    n = Y.shape[0]
    s2_idx = np.empty(n, dtype=np.int64)
    s1_idx = np.empty(n, dtype=np.int64)
    metric = np.empty(n)
    step = max(1, _CHUNK_ENTRIES // (M * M))
    pts = c.points
    for a in range(0, n, step):
        sl = slice(a, a + step)
        # r[n, m, i]: branch i after cancelling candidate s2 = pts[m]
        r = Y[sl, None, :] - h2[sl, None, :] * pts[None, :, None]
        z = np.einsum("ni,nmi->nm", weights[sl], r) / h_tilde[sl, None]
        i1 = nearest_index(z, c)
        res = r - h1[sl, None, :] * pts[i1][:, :, None]
        cost = np.sum(res.real**2 + res.imag**2, axis=2)
        best = np.argmin(cost, axis=1)
        rows = np.arange(best.size)
        s2_idx[sl] = best
        s1_idx[sl] = i1[rows, best]
        metric[sl] = cost[rows, best]
    return np.stack([s1_idx, s2_idx], axis=1), metric, M


def _single(y, heff):
    y = np.asarray(y, dtype=np.complex128)
    H = _heff(heff)
    if y.shape != (2,) or H.shape != (2, 2):
        raise ContractViolation(f"bad shapes y={y.shape}, Heff={H.shape}")
    return y[None], H[None]


def joint_ml_decode(y, heff, p: CodeParams, c: Constellation) -> DecodeResult:
    """Exhaustive ML decision for one received vector."""
    idx, metric, evals = joint_ml_decode_batch(*_single(y, heff), p, c)
    return DecodeResult(tuple(int(v) for v in idx[0]), float(metric[0]), evals)


def conditional_ml_decode(y, heff, p: CodeParams, c: Constellation, combiner=Combiner.MATCHED_FILTER) -> DecodeResult:
    """Conditional ML decision for one received vector (M metric evaluations)."""
    idx, metric, evals = conditional_ml_decode_batch(*_single(y, heff), p, c, combiner)
    return DecodeResult(tuple(int(v) for v in idx[0]), float(metric[0]), evals)
