"""Rate-two space coding for reconfigurable-antenna 2x2 MIMO links.

Link-level Monte Carlo simulator and analysis toolkit: encoder, per-link
antenna-gain selection from CSI, an O(M) conditional ML decoder, VBLAST and
linear-dispersion baselines, and BER sweep experiments.
"""

from .errors import (
    ConfigurationError,
    ContractViolation,
    DegenerateCombinerError,
    FeasibilityError,
    ParameterError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ContractViolation",
    "DegenerateCombinerError",
    "FeasibilityError",
    "ParameterError",
]
