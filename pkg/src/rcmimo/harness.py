"""Monte Carlo BER engine.

A *cell* is one (scheme, SNR, K, beta2) point. Its trials are split into
fixed-size blocks; block ``b`` of cell ``cell_id`` draws its channels,
symbols and noise from the substreams ``(seed, cell_id, b, 0|1|2)``. The
scheme is not part of the address, so every scheme in a figure sees the same
channels, symbols and noise samples (common random numbers), and the block
layout does not depend on the number of worker processes.

Early stopping inspects blocks strictly in order: the cell ends with the
first block whose cumulative error count reaches ``max_errors``. Workers may
compute blocks past that point; those are discarded, so results are
identical for any worker count.

Every scheme radiates unit average total power per channel use. The
proposed codeword (energy 2 by construction) is therefore sent at
``1/sqrt(2)`` amplitude.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .channel import complex_normal, parse_db, sample_rician_batch, snr_to_n0, substream
from .constellation import Constellation, build_qam
from .errors import ConfigurationError
from .reconfig import GainNorm, compute_gains_batch
from .spacecode import (
    DEFAULT_BETA2,
    PROPOSED,
    Combiner,
    SchemeDescriptor,
    conditional_ml_decode_batch,
    encode_batch,
    make_params,
)

__all__ = [
    "CSV_HEADER",
    "Figure",
    "SimConfig",
    "Cell",
    "BerPoint",
    "FIGURE_PRESETS",
    "resolve_scheme",
    "run_cell",
    "run_grid",
    "run_figure",
    "write_csv",
    "to_csv",
    "parse_range",
    "parse_db_list",
]

CSV_HEADER = ("scheme", "snr_db", "k_db", "beta2", "trials", "bit_errors", "ber", "ci95")
PROPOSED_TX_SCALE = 1.0 / math.sqrt(2.0)
MIN_STOP_ERRORS = 100
# symbols and noise samples drawn per trial regardless of scheme, so that
# schemes of different size consume aligned streams
_SYMBOL_DRAW = 4
_NOISE_USES = 2


class Figure(str, enum.Enum):
    BETA2_SWEEP = "beta2_sweep"
    BER_VS_K = "ber_vs_k"
    BER_VS_SNR = "ber_vs_snr"

    @classmethod
    def parse(cls, value) -> "Figure":
        if isinstance(value, cls):
            return value
        numbered = {"2": cls.BETA2_SWEEP, "3": cls.BER_VS_K, "4": cls.BER_VS_SNR}
        try:
            return numbered.get(str(value)) or cls(str(value))
        except ValueError:
            raise ConfigurationError(f"unknown figure {value!r}") from None


@dataclass(frozen=True)
class SimConfig:
    schemes: tuple[str, ...] = ("proposed",)
    M: int = 4
    snr_db: tuple[float, ...] = (20.0,)
    k_db: tuple[float, ...] = (2.0,)
    beta2: float = DEFAULT_BETA2
    beta2_grid: tuple[float, ...] = ()
    trials: int = 1_000_000
    max_errors: int | None = 2000
    master_seed: int = 1
    gain_norm: GainNorm = GainNorm.SQRT
    combiner: Combiner = Combiner.MATCHED_FILTER
    sic_detector: str = "zf"
    dispersion_files: dict = field(default_factory=dict)
    channel_block: int = 1
    block_size: int = 8192
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("schemes", tuple(self.schemes))
        set_("snr_db", tuple(parse_db(v) for v in self.snr_db))
        set_("k_db", tuple(parse_db(v) for v in self.k_db))
        set_("beta2_grid", tuple(float(v) for v in self.beta2_grid))
        set_("gain_norm", GainNorm.parse(self.gain_norm))
        set_("combiner", Combiner.parse(self.combiner))
        set_("dispersion_files", dict(self.dispersion_files))
        if not self.schemes or not self.snr_db or not self.k_db:
            raise ConfigurationError("schemes, snr_db and k_db must all be nonempty")
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if self.max_errors is not None and self.max_errors < MIN_STOP_ERRORS:
            raise ConfigurationError(f"early-stop threshold must be at least {MIN_STOP_ERRORS} errors")
        if self.block_size < 1 or self.channel_block < 1 or self.workers < 1:
            raise ConfigurationError("block_size, channel_block and workers must be positive")
        if self.sic_detector not in ("zf", "mmse"):
            raise ConfigurationError(f"unknown SIC detector {self.sic_detector!r}")
        if any(v <= 0 for v in self.beta2_grid):
            raise ConfigurationError("beta2 grid values must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: dict, base: "SimConfig | None" = None) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if isinstance(data.get("snr_db"), str):
            data["snr_db"] = parse_range(data["snr_db"])
        if isinstance(data.get("k_db"), str):
            data["k_db"] = parse_db_list(data["k_db"])
        try:
            return dataclasses.replace(base or cls(), **data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"invalid config: {exc}") from exc

    @classmethod
    def from_file(cls, path, base: "SimConfig | None" = None) -> "SimConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config file must contain a JSON object")
        return cls.from_mapping(data, base)


@dataclass(frozen=True)
class Cell:
    scheme: str
    snr_db: float
    k_db: float
    beta2: float = DEFAULT_BETA2
    cell_id: int = 0


@dataclass(frozen=True)
class BerPoint:
    scheme: str
    snr_db: float
    k_db: float
    beta2: float | None
    trials_run: int
    bit_errors: int
    bits: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits

    @property
    def ci95_halfwidth(self) -> float:
        p = self.ber
        return 1.96 * math.sqrt(p * (1.0 - p) / self.bits)

    def csv_row(self) -> list[str]:
        return [
            self.scheme,
            _fmt(self.snr_db),
            _fmt(self.k_db),
            "" if self.beta2 is None else _fmt(self.beta2),
            str(self.trials_run),
            str(self.bit_errors),
            f"{self.ber:.6e}",
            f"{self.ci95_halfwidth:.6e}",
        ]


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".10g")


# -- scheme bindings ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Scheme:
    name: str
    kind: str  # proposed | vblast_ml | vblast_sic | ld
    descriptor: SchemeDescriptor
    code: baselines.DispersionCode | None = None


def resolve_scheme(name: str, cfg: SimConfig) -> _Scheme:
    """Bind a scheme name to its encoder/decoder.

    ``proposed``, ``vblast_ml`` and ``vblast_sic`` are built in.
    ``matrix_c`` uses the packaged dispersion file unless the config points
    elsewhere; any other name must appear in ``cfg.dispersion_files``.
    """
    if name == "proposed":
        return _Scheme(name, "proposed", PROPOSED)
    if name in ("vblast_ml", "vblast_sic"):
        return _Scheme(name, name, baselines.VBLAST)
    path = cfg.dispersion_files.get(name)
    if path is not None:
        code = baselines.load_dispersion_code(path)
    elif name == "matrix_c":
        code = baselines.builtin_code("matrix_c")
    else:
        raise ConfigurationError(f"scheme {name!r} needs a dispersion-code file (dispersion_files.{name})")
    return _Scheme(name, "ld", code.descriptor, code)


def _block_errors(cfg: SimConfig, scheme: _Scheme, cell: Cell, block: int, n: int, const: Constellation) -> int:
    seed = cfg.master_seed
    n_draws = -(-n // cfg.channel_block)
    H = sample_rician_batch(cell.k_db, n_draws, substream(seed, cell.cell_id, block, 0))
    if cfg.channel_block > 1:
        H = np.repeat(H, cfg.channel_block, axis=0)[:n]
    M = const.order
    ns = scheme.descriptor.n_symbols
    sym = substream(seed, cell.cell_id, block, 1).integers(0, M, size=(n, max(ns, _SYMBOL_DRAW)))[:, :ns]
    T = scheme.descriptor.n_uses
    W = complex_normal((n, 2, max(T, _NOISE_USES)), substream(seed, cell.cell_id, block, 2))[:, :, :T]
    n0 = snr_to_n0(cell.snr_db)
    noise = math.sqrt(n0) * W
    S = const.points[sym]

    if scheme.kind == "proposed":
        p = make_params(cell.beta2)
        G = compute_gains_batch(H, cfg.gain_norm)
        Hg = H * G
        x = encode_batch(S, p) * PROPOSED_TX_SCALE
        Y = np.einsum("nij,nj->ni", Hg, x) + noise[:, :, 0]
        Heff = (Hg @ p.matrix) * PROPOSED_TX_SCALE
        dec, _, _ = conditional_ml_decode_batch(Y, Heff, p, const, cfg.combiner)
    elif scheme.kind in ("vblast_ml", "vblast_sic"):
        Y = np.einsum("nij,nj->ni", H, baselines.vblast_encode_batch(S)) + noise[:, :, 0]
        if scheme.kind == "vblast_ml":
            dec, _, _ = baselines.vblast_ml_decode_batch(Y, H, const)
        else:
            dec, _, _, _ = baselines.vblast_sic_decode_batch(Y, H, const, cfg.sic_detector, n0)
    else:
        X = baselines.ld_encode_batch(S, scheme.code)
        Y = H @ X + noise
        dec, _, _ = baselines.ld_joint_ml_decode_batch(Y, H, scheme.code, const)
    return int(np.count_nonzero(const.bits[dec] != const.bits[sym]))


def _block_task(args) -> int:
    cfg, scheme, cell, block, n = args
    return _block_errors(cfg, scheme, cell, block, n, build_qam(cfg.M))


def run_cell(cfg: SimConfig, cell: Cell, executor: Executor | None = None, scheme: _Scheme | None = None) -> BerPoint:
    """Simulate one cell until ``cfg.trials`` or the early-stop error count.

    Each trial draws a channel, computes the antenna gains (proposed scheme
    only), encodes random symbols, adds noise at ``N0 = 10^(-SNR/10)``,
    decodes, and counts bit errors.
    """
    scheme = scheme or resolve_scheme(cell.scheme, cfg)
    const = build_qam(cfg.M)
    B = cfg.block_size
    n_blocks = -(-cfg.trials // B)
    sizes = [min(B, cfg.trials - b * B) for b in range(n_blocks)]
    trials = errors = 0

    def consume(block_errors):
        nonlocal trials, errors
        for b, e in block_errors:
            trials += sizes[b]
            errors += e
            if cfg.max_errors is not None and errors >= cfg.max_errors:
                return True
        return False

    if executor is None:
        for b in range(n_blocks):
            if consume([(b, _block_errors(cfg, scheme, cell, b, sizes[b], const))]):
                break
    else:
        wave = 2 * cfg.workers
        for start in range(0, n_blocks, wave):
            blocks = range(start, min(n_blocks, start + wave))
            results = executor.map(_block_task, [(cfg, scheme, cell, b, sizes[b]) for b in blocks])
            if consume(zip(blocks, results)):
                break

    bits = trials * scheme.descriptor.n_symbols * const.bits_per_symbol
    beta2 = cell.beta2 if scheme.kind == "proposed" else None
    return BerPoint(cell.scheme, cell.snr_db, cell.k_db, beta2, trials, errors, bits)


def _executor(cfg: SimConfig):
    return ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None


def run_grid(cfg: SimConfig, executor: Executor | None = None) -> list[BerPoint]:
    """One BER point per (SNR, K, scheme), schemes sharing random numbers."""
    schemes = [resolve_scheme(name, cfg) for name in cfg.schemes]
    points = []
    own = executor is None and cfg.workers > 1
    executor = _executor(cfg) if own else executor
    try:
        cell_id = 0
        for snr in cfg.snr_db:
            for k in cfg.k_db:
                for s in schemes:
                    cell = Cell(s.name, snr, k, cfg.beta2, cell_id)
                    points.append(run_cell(cfg, cell, executor, s))
                cell_id += 1
    finally:
        if own:
            executor.shutdown()
    return points


FIGURE_PRESETS = {
    Figure.BETA2_SWEEP: dict(
        schemes=("proposed",),
        snr_db=(20.0,),
        k_db=(2.0,),
        beta2_grid=tuple(round(0.02 * i, 2) for i in range(1, 76)),
        trials=1_000_000,
        max_errors=None,
        gain_norm=GainNorm.PAPER,
    ),
    Figure.BER_VS_K: dict(
        schemes=("proposed", "matrix_c", "vblast_ml"),
        snr_db=(12.0,),
        k_db=(0.0, 4.0, 8.0, 12.0, 16.0, 20.0, math.inf),
        trials=1_000_000,
        max_errors=2000,
        gain_norm=GainNorm.PAPER,
    ),
    Figure.BER_VS_SNR: dict(
        schemes=("proposed", "matrix_c", "vblast_ml", "vblast_sic"),
        snr_db=tuple(float(v) for v in range(0, 25, 2)),
        k_db=(2.0,),
        trials=10_000_000,
        max_errors=2000,
        gain_norm=GainNorm.PAPER,
    ),
}


def preset(fig) -> SimConfig:
    return SimConfig(**FIGURE_PRESETS[Figure.parse(fig)])


def run_figure(fig, cfg: SimConfig) -> list[BerPoint]:
    """Run one of the three experiments and return its BER points.

    Raises
    ------
    ConfigurationError
        If the configuration does not have the figure's shape or a requested
        baseline has no dispersion-code file.
    """
    fig = Figure.parse(fig)
    if fig is Figure.BETA2_SWEEP:
        from .analysis import sweep_beta2_points

        if cfg.schemes != ("proposed",) or len(cfg.snr_db) != 1 or len(cfg.k_db) != 1:
            raise ConfigurationError("beta2 sweep takes the proposed scheme at one SNR and one K")
        grid = cfg.beta2_grid or (cfg.beta2,)
        return sweep_beta2_points(grid, cfg.snr_db[0], cfg.k_db[0], cfg)
    if "proposed" not in cfg.schemes:
        raise ConfigurationError(f"{fig.value} compares against the proposed scheme; add it to schemes")
    if fig is Figure.BER_VS_K and len(cfg.snr_db) != 1:
        raise ConfigurationError("BER-vs-K runs at a single SNR")
    if fig is Figure.BER_VS_SNR and len(cfg.k_db) != 1:
        raise ConfigurationError("BER-vs-SNR runs at a single K-factor")
    return run_grid(cfg)


def to_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in points:
        w.writerow(p.csv_row())
    return buf.getvalue()


def write_csv(points, path) -> None:
    Path(path).write_text(to_csv(points))


def parse_range(text: str) -> tuple[float, ...]:
    """Parse ``start:step:stop`` (inclusive) or a comma-separated list."""
    text = str(text).strip()
    if ":" in text:
        try:
            start, step, stop = (float(v) for v in text.split(":"))
        except ValueError:
            raise ConfigurationError(f"bad range {text!r}; expected start:step:stop") from None
        if step <= 0 or stop < start:
            raise ConfigurationError(f"bad range {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))
    return parse_db_list(text)


def parse_db_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(parse_db(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigurationError(f"bad dB list {text!r}") from None
