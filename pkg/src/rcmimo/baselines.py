"""Comparison schemes on the plain channel (no reconfigurable gains).

* VBLAST: one symbol per antenna per channel use at ``1/sqrt(2)`` amplitude,
  decoded by ordered successive interference cancellation or exhaustive ML.
* Linear dispersion codes: ``X = scale * sum_k (A_k Re(s_k) + j B_k Im(s_k))``
  with the dispersion matrices loaded from a JSON file. Matrix C ships with
  the package; other codes (e.g. MTD) are supplied by the user.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .constellation import Constellation, nearest_index
from .errors import ConfigurationError, ContractViolation
from .mathcore import det2x2
from .spacecode import DecodeResult, SchemeDescriptor, pair_search_batch

__all__ = [
    "VBLAST",
    "OmniChannel",
    "DispersionCode",
    "vblast_encode",
    "vblast_encode_batch",
    "vblast_ml_decode",
    "vblast_ml_decode_batch",
    "vblast_sic_decode",
    "vblast_sic_decode_batch",
    "ld_encode",
    "ld_encode_batch",
    "ld_joint_ml_decode",
    "ld_joint_ml_decode_batch",
    "load_dispersion_code",
    "dump_dispersion_code",
    "builtin_code",
    "code_checksum",
]

VBLAST = SchemeDescriptor("vblast", n_symbols=2, n_uses=1)
VBLAST_SCALE = 1.0 / math.sqrt(2.0)
SINGULAR_EPS = 1e-12
MAX_SEARCH_BITS = 16
POWER_TOL = 0.01


@dataclass(frozen=True, eq=False)
class OmniChannel:
    """A 2x2 channel used without antenna reconfiguration."""

    H: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.complex128)
        if H.shape != (2, 2) or not np.all(np.isfinite(H)):
            raise ContractViolation("OmniChannel needs a finite 2x2 matrix")
        object.__setattr__(self, "H", H)


def _omni(h) -> np.ndarray:
    return np.asarray(getattr(h, "H", h), dtype=np.complex128)


# -- VBLAST -----------------------------------------------------------------


def vblast_encode_batch(S) -> np.ndarray:
    return np.asarray(S, dtype=np.complex128) * VBLAST_SCALE


def vblast_encode(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    if s.shape != (2,):
        raise ContractViolation("VBLAST sends exactly two symbols per use")
    return vblast_encode_batch(s)


def vblast_ml_decode_batch(Y, H, c: Constellation):
    """Exhaustive ML over M^2 pairs with channel ``H / sqrt(2)``."""
    Y = np.asarray(Y, dtype=np.complex128)
    H = np.asarray(H, dtype=np.complex128)
    idx, metric = pair_search_batch(Y, H * VBLAST_SCALE, c)
    return idx, metric, c.order**2


def vblast_ml_decode(y, h, c: Constellation) -> DecodeResult:
    y = np.asarray(y, dtype=np.complex128)
    idx, metric, evals = vblast_ml_decode_batch(y[None], _omni(h)[None], c)
    return DecodeResult(tuple(int(v) for v in idx[0]), float(metric[0]), evals)


def vblast_sic_decode_batch(Y, H, c: Constellation, detector: str = "zf", n0: float = 0.0):
    """Ordered SIC: null, slice the strongest stream, cancel, slice the other.

    The first stream is the one with the smallest nulling-vector norm (the
    largest post-detection SNR). ``detector="mmse"`` replaces the
    zero-forcing nulling matrix by its MMSE counterpart at noise power
    ``n0``. Channels with ``|det| <= 1e-12`` are nulled with the
    pseudo-inverse and flagged as degenerate.

    Returns
    -------
    indices, metric, evaluations, degenerate
        Evaluations count the two M-point slicer searches (2M).
    """
    if detector not in ("zf", "mmse"):
        raise ConfigurationError(f"unknown SIC detector {detector!r}")
    Y = np.asarray(Y, dtype=np.complex128)
    A = np.asarray(H, dtype=np.complex128) * VBLAST_SCALE
    n = Y.shape[0]
    rows = np.arange(n)
    degenerate = np.abs(det2x2(A)) <= SINGULAR_EPS
    AH = np.conj(np.swapaxes(A, -1, -2))
    reg = n0 if detector == "mmse" else 0.0
    if reg > 0:
        W = np.linalg.solve(AH @ A + reg * np.eye(2), AH)
    else:
        W = np.linalg.pinv(A)
    first = np.argmin(np.sum(np.abs(W) ** 2, axis=2), axis=1)
    second = 1 - first
    z1 = np.einsum("ni,ni->n", W[rows, first], Y)
    i_first = nearest_index(z1, c)
    col1 = A[rows, :, first]
    col2 = A[rows, :, second]
    Yc = Y - col1 * c.points[i_first][:, None]
    energy = np.sum(np.abs(col2) ** 2, axis=1) + reg
    z2 = np.einsum("ni,ni->n", np.conj(col2), Yc) / np.maximum(energy, SINGULAR_EPS)
    i_second = nearest_index(z2, c)
    idx = np.empty((n, 2), dtype=np.int64)
    idx[rows, first] = i_first
    idx[rows, second] = i_second
    resid = Y - np.einsum("nij,nj->ni", A, c.points[idx])
    metric = np.sum(np.abs(resid) ** 2, axis=1)
    return idx, metric, 2 * c.order, degenerate


def vblast_sic_decode(y, h, c: Constellation, detector: str = "zf", n0: float = 0.0) -> DecodeResult:
    y = np.asarray(y, dtype=np.complex128)
    idx, metric, evals, degenerate = vblast_sic_decode_batch(y[None], _omni(h)[None], c, detector, n0)
    return DecodeResult(tuple(int(v) for v in idx[0]), float(metric[0]), evals, bool(degenerate[0]))


# -- linear dispersion codes ------------------------------------------------


@dataclass(frozen=True, eq=False)
class DispersionCode:
    """Linear-dispersion space-time code for two transmit antennas.

    ``A`` and ``B`` have shape ``(n_symbols, 2, n_uses)``.
    """

    name: str
    n_uses: int
    n_symbols: int
    A: np.ndarray
    B: np.ndarray
    power_scale: float
    source: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.complex128)
        B = np.asarray(self.B, dtype=np.complex128)
        shape = (self.n_symbols, 2, self.n_uses)
        if A.shape != shape or B.shape != shape:
            raise ConfigurationError(f"dispersion matrices must have shape {shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ConfigurationError("dispersion matrices contain non-finite values")
        A.flags.writeable = False
        B.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        energy = self.energy_per_use
        if abs(energy - 1.0) > POWER_TOL:
            raise ConfigurationError(f"code {self.name!r} radiates {energy:.4f} per channel use, expected 1")

    @property
    def descriptor(self) -> SchemeDescriptor:
        return SchemeDescriptor(self.name, self.n_symbols, self.n_uses)

    @property
    def energy_per_use(self) -> float:
        # zero-mean symbols with E|s|^2 = 1 and E[Re^2] = E[Im^2] = 1/2
        total = np.sum(np.abs(self.A) ** 2) + np.sum(np.abs(self.B) ** 2)
        return float(self.power_scale**2 * total / 2.0 / self.n_uses)


def ld_encode_batch(S, code: DispersionCode) -> np.ndarray:
    """Encode ``(n, N_s)`` symbols into ``(n, 2, T)`` codewords."""
    S = np.asarray(S, dtype=np.complex128)
    if S.shape[-1] != code.n_symbols:
        raise ContractViolation(f"{code.name} takes {code.n_symbols} symbols, got {S.shape[-1]}")
    X = np.einsum("...k,kij->...ij", S.real, code.A) + 1j * np.einsum("...k,kij->...ij", S.imag, code.B)
    return code.power_scale * X


def ld_encode(s, code: DispersionCode) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    if s.shape != (code.n_symbols,):
        raise ContractViolation(f"{code.name} takes {code.n_symbols} symbols, got shape {s.shape}")
    return ld_encode_batch(s, code)


def _candidates(code: DispersionCode, c: Constellation):
    if code.n_symbols * c.bits_per_symbol > MAX_SEARCH_BITS:
        raise ConfigurationError(
            f"exhaustive search over {c.order}^{code.n_symbols} tuples exceeds the {MAX_SEARCH_BITS}-bit cap"
        )
    tuples = np.array(list(itertools.product(range(c.order), repeat=code.n_symbols)), dtype=np.int64)
    return tuples, ld_encode_batch(c.points[tuples], code)


def ld_joint_ml_decode_batch(Y, H, code: DispersionCode, c: Constellation):
    """Exhaustive ML over all ``M**N_s`` symbol tuples.

    ``Y`` has shape ``(n, 2, T)`` and ``H`` shape ``(n, 2, 2)``; the channel
    is constant over the T uses of a codeword. Tuples are enumerated in
    lexicographic order (last symbol fastest); the first minimum wins.
    """
    tuples, X = _candidates(code, c)
    Y = np.asarray(Y, dtype=np.complex128)
    H = np.asarray(H, dtype=np.complex128)
    K, _, T = X.shape
    Xflat = np.transpose(X, (1, 0, 2)).reshape(2, K * T)
    n = Y.shape[0]
    best = np.empty(n, dtype=np.int64)
    metric = np.empty(n)
    step = max(1, (1 << 21) // (K * T))
    for a in range(0, n, step):
        R = (H[a : a + step] @ Xflat).reshape(-1, 2, K, T)
        diff = Y[a : a + step, :, None, :] - R
        d = np.sum(diff.real**2 + diff.imag**2, axis=(1, 3))
        b = np.argmin(d, axis=1)
        best[a : a + step] = b
        metric[a : a + step] = d[np.arange(b.size), b]
    return tuples[best], metric, K


def ld_joint_ml_decode(Y, h, code: DispersionCode, c: Constellation) -> DecodeResult:
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.shape != (2, code.n_uses):
        raise ContractViolation(f"received block must be 2x{code.n_uses}, got {Y.shape}")
    idx, metric, evals = ld_joint_ml_decode_batch(Y[None], _omni(h)[None], code, c)
    return DecodeResult(tuple(int(v) for v in idx[0]), float(metric[0]), evals)


# -- file format -------------------------------------------------------------


def _to_pairs(m: np.ndarray):
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def _from_pairs(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ConfigurationError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _payload(doc: dict) -> dict:
    return {k: doc[k] for k in ("name", "T", "N_s", "power_scale", "matrices")}


def code_checksum(doc: dict) -> str:
    """SHA-256 of the canonical JSON encoding of the numeric content."""
    blob = json.dumps(_payload(doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _parse(doc: dict, origin: str) -> DispersionCode:
    try:
        T = int(doc["T"])
        Ns = int(doc["N_s"])
        mats = doc["matrices"]
        A = np.stack([_from_pairs(m["A"]) for m in mats])
        B = np.stack([_from_pairs(m.get("B", m["A"])) for m in mats])
        name = str(doc["name"])
        scale = float(doc["power_scale"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed dispersion code {origin}: {exc}") from exc
    if "sha256" in doc and doc["sha256"] != code_checksum(doc):
        raise ConfigurationError(f"checksum mismatch in dispersion code {origin}")
    return DispersionCode(name=name, n_uses=T, n_symbols=Ns, A=A, B=B, power_scale=scale, source=str(doc.get("source", "")))


def load_dispersion_code(path) -> DispersionCode:
    """Load and validate a dispersion code file.

    The JSON document holds ``name``, ``T``, ``N_s``, ``power_scale``,
    ``matrices`` (a list of ``{"A": ..., "B": ...}`` with entries as
    ``[re, im]`` pairs; ``B`` defaults to ``A``) and optionally ``sha256``
    and ``source``.

    Raises
    ------
    ConfigurationError
        For a missing or malformed file, a checksum mismatch, or a code
        that does not radiate unit average power per channel use.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"dispersion code file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"dispersion code file {path} is not valid JSON: {exc}") from exc
    return _parse(doc, str(path))


def dump_dispersion_code(code: DispersionCode, path) -> None:
    doc = {
        "name": code.name,
        "T": code.n_uses,
        "N_s": code.n_symbols,
        "power_scale": code.power_scale,
        "matrices": [{"A": _to_pairs(a), "B": _to_pairs(b)} for a, b in zip(code.A, code.B)],
    }
    if code.source:
        doc["source"] = code.source
    doc["sha256"] = code_checksum(doc)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def builtin_code(name: str) -> DispersionCode:
    """Load a dispersion code shipped with the package (``matrix_c``)."""
    ref = resources.files("rcmimo") / "data" / f"{name}.json"
    if not ref.is_file():
        raise ConfigurationError(f"no built-in dispersion code named {name!r}")
    return _parse(json.loads(ref.read_text()), f"<builtin {name}>")
