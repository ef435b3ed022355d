"""Design-criteria tooling: PEP bound, diversity rank, beta2 sweep, op counts.

Vectorisation convention: ``h_g`` stacks the rows of ``H_g``
(``[h11 g11, h12 g12, h21 g21, h22 g22]``). With that ordering
``kron(I2, c^T) @ h_g == H_g @ c``, which is the identity the pairwise
error bound relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import sample_rician_batch
from .constellation import SUPPORTED_ORDERS, build_qam
from .errors import ContractViolation
from .reconfig import GainNorm, compute_gains_batch
from .spacecode import conditional_ml_decode, encode, joint_ml_decode, make_params

__all__ = [
    "PepInputs",
    "DiversityReport",
    "vec_rows",
    "estimate_Rhg",
    "pep_chernoff",
    "difference_rank",
    "sweep_beta2",
    "sweep_beta2_points",
    "TABLE_I_OPS",
    "complexity_table",
    "scheme_table",
]

RANK_RTOL = 1e-8
_HERMITIAN_TOL = 1e-10


def vec_rows(Hg) -> np.ndarray:
    """Row-stacked vectorisation of a 2x2 matrix (or a stack of them)."""
    Hg = np.asarray(Hg, dtype=np.complex128)
    return Hg.reshape(Hg.shape[:-2] + (4,))


def estimate_Rhg(k_db: float, gain_norm, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Sample correlation ``E[h_g h_g^H]`` of the gain-weighted channel.

    The estimate is averaged over ``n_samples`` Rician draws and made exactly
    Hermitian before it is returned.
    """
    if n_samples < 1000:
        raise ContractViolation("estimate_Rhg needs at least 1000 samples")
    H = sample_rician_batch(k_db, n_samples, rng)
    h = vec_rows(H * compute_gains_batch(H, GainNorm.parse(gain_norm)))
    R = np.einsum("ni,nj->ij", h, np.conj(h)) / n_samples
    return 0.5 * (R + R.conj().T)


@dataclass(frozen=True, eq=False)
class PepInputs:
    c: np.ndarray
    u: np.ndarray
    R_hg: np.ndarray
    snr_linear: float

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.complex128)
        u = np.asarray(self.u, dtype=np.complex128)
        R = np.asarray(self.R_hg, dtype=np.complex128)
        if c.shape != (2,) or u.shape != (2,) or R.shape != (4, 4):
            raise ContractViolation("PEP needs two length-2 codewords and a 4x4 correlation")
        scale = max(1.0, float(np.max(np.abs(R))))
        if np.max(np.abs(R - R.conj().T)) > _HERMITIAN_TOL * scale:
            raise ContractViolation("R_hg is not Hermitian")
        if np.min(np.linalg.eigvalsh(R)) < -_HERMITIAN_TOL * scale:
            raise ContractViolation("R_hg is not positive semidefinite")
        if not self.snr_linear >= 0:
            raise ContractViolation("SNR must be nonnegative")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "R_hg", R)


@dataclass(frozen=True)
class DiversityReport:
    """Eigenstructure of ``R_hg (C - U)^H (C - U)`` and the two bounds.

    ``bound_value`` is the full Chernoff bound, ``high_snr_bound`` the
    product-of-eigenvalues form, which is only meaningful at high SNR.
    """

    rank: int
    eigenvalues: tuple[float, ...]
    bound_value: float
    high_snr_bound: float


def pep_chernoff(p: PepInputs) -> DiversityReport:
    """Chernoff bound ``1 / det(I4 + (snr/4) R_hg (C-U)^H (C-U))`` on the PEP.

    ``C = kron(I2, c^T)``. The rank counts eigenvalues above
    ``1e-8 * max eigenvalue``.
    """
    D = np.kron(np.eye(2), (p.c - p.u)[None, :])
    X = p.R_hg @ D.conj().T @ D
    lam = np.sort(np.linalg.eigvals(X).real)[::-1]
    lam_max = lam[0] if lam.size else 0.0
    rank = int(np.sum(lam > RANK_RTOL * lam_max)) if lam_max > 0 else 0
    a = p.snr_linear / 4.0
    bound = 1.0 / float(np.linalg.det(np.eye(4) + a * X).real)
    denom = a**rank * float(np.prod(lam[:rank]))
    if rank == 0:
        high = 1.0
    else:
        # a tiny SNR can underflow the product to zero
        high = 1.0 / denom if denom > 0 else math.inf
    return DiversityReport(rank, tuple(float(v) for v in lam), bound, high)


def difference_rank(Hg, c, u) -> int:
    """Rank of ``H_g diag(c - u)``: per-link contributions of a codeword pair.

    Each column is what one transmit antenna adds to the received
    difference; on an all-ones line-of-sight channel these columns are
    parallel unless the antenna gains separate them.
    """
    E = np.asarray(Hg, dtype=np.complex128) @ np.diag(np.asarray(c) - np.asarray(u))
    s = np.linalg.svd(E, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def sweep_beta2_points(grid, snr_db: float, k_db: float, cfg=None):
    """BER point per beta2 value, every point using the same random numbers."""
    from .harness import Cell, SimConfig, _executor, resolve_scheme, run_cell

    grid = tuple(float(b) for b in grid)
    if not grid or any(b <= 0 for b in grid):
        raise ContractViolation("beta2 grid must be nonempty and positive")
    cfg = cfg or SimConfig()
    scheme = resolve_scheme("proposed", cfg)
    executor = _executor(cfg)
    try:
        return [run_cell(cfg, Cell("proposed", snr_db, k_db, b, 0), executor, scheme) for b in grid]
    finally:
        if executor is not None:
            executor.shutdown()


def sweep_beta2(grid, snr_db: float, k_db: float, trials: int, cfg=None) -> list[tuple[float, float]]:
    """Return ``[(beta2, BER), ...]`` over ``grid`` at one SNR and K.

    ``cfg`` supplies the remaining simulation settings (seed, gain
    normalisation, combiner, early stopping, workers); ``trials`` overrides
    its trial count.
    """
    from .harness import SimConfig

    cfg = (cfg or SimConfig()).replace(trials=trials)
    return [(p.beta2, p.ber) for p in sweep_beta2_points(grid, snr_db, k_db, cfg)]


TABLE_I_OPS = {"multiplications": 8, "subtractions": 4, "additions": 5, "squares": 2}


def _live_counters(M: int) -> tuple[int, int]:
    c = build_qam(M)
    p = make_params()
    Heff = np.array([[1.0, 0.3 - 0.2j], [0.4j, 0.9]])
    y = Heff @ np.array([c.points[0], c.points[-1]]) * p.scale
    return (
        joint_ml_decode(y, Heff, p, c).metric_evaluations,
        conditional_ml_decode(y, Heff, p, c).metric_evaluations,
    )


def complexity_table(M: int) -> list[dict]:
    """Arithmetic cost of exhaustive versus conditional ML for order ``M``.

    Each metric evaluation costs the fixed operation mix in
    ``TABLE_I_OPS``; both decoders are charged ``M^2 - 1`` comparisons.
    For supported QAM orders the evaluation counts come from running the
    instrumented decoders and must equal ``M^2`` and ``M``.
    """
    if M < 2:
        raise ContractViolation("constellation order must be at least 2")
    joint, cond = M * M, M
    if M in SUPPORTED_ORDERS:
        live = _live_counters(M)
        if live != (joint, cond):
            raise AssertionError(f"decoder counters {live} disagree with ({joint}, {cond})")
    rows = []
    for name, evals in (("traditional", joint), ("conditional", cond)):
        row = {"decoder": name, "metric_evaluations": evals}
        row.update({op: k * evals for op, k in TABLE_I_OPS.items()})
        row["comparisons"] = M * M - 1
        rows.append(row)
    return rows


def scheme_table(M: int, codes=()) -> list[dict]:
    """Symbol rate and live metric-evaluation count of every scheme."""
    from . import baselines

    c = build_qam(M)
    p = make_params()
    H = np.array([[1.0, 0.5j], [-0.3, 0.8 + 0.1j]])
    y = H @ encode(np.array([c.points[0], c.points[1]]), p)
    rows = [
        {"scheme": "proposed", "symbol_rate": 2.0, "metric_evaluations": conditional_ml_decode(y, H, p, c).metric_evaluations},
        {"scheme": "vblast_ml", "symbol_rate": 2.0, "metric_evaluations": baselines.vblast_ml_decode(y, H, c).metric_evaluations},
        {"scheme": "vblast_sic", "symbol_rate": 2.0, "metric_evaluations": baselines.vblast_sic_decode(y, H, c).metric_evaluations},
    ]
    for code in codes:
        s = np.full(code.n_symbols, c.points[0])
        Y = H @ baselines.ld_encode(s, code)
        res = baselines.ld_joint_ml_decode(Y, H, code, c)
        rows.append({"scheme": code.name, "symbol_rate": code.descriptor.symbol_rate, "metric_evaluations": res.metric_evaluations})
    return rows
