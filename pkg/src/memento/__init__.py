"""Sliding-window heavy hitter and hierarchical heavy hitter detection.

Single-device sketches, an analytical planner for sampling rates and
report batch sizes, a deterministic network-wide simulator, and exact
oracles for verification.
"""

from .errors import (BadMagic, ConfigError, TruncatedReport,
                     VersionMismatch, WireFormatError)
from .hhh import HHHConfig, HHHEntry, HHHState
from .hierarchy import (Hierarchy, best_generalized, format_prefix,
                        generalizes, glb, parents, parse_prefix, prefix_at,
                        random_prefix)
from .planner import (DeploymentParams, ErrorBudget, error_bound,
                      min_tau_hh, min_tau_hhh, normal_cdf, optimal_batch,
                      oversample_adjust, z_score)
from .sketch import MementoSketch
from .spacesaving import SpaceSavingTable

__version__ = "0.1.0"

__all__ = [
    "BadMagic", "ConfigError", "DeploymentParams", "ErrorBudget",
    "HHHConfig", "HHHEntry", "HHHState", "Hierarchy", "MementoSketch",
    "SpaceSavingTable", "TruncatedReport", "VersionMismatch",
    "WireFormatError", "best_generalized", "error_bound", "format_prefix",
    "generalizes", "glb", "min_tau_hh", "min_tau_hhh", "normal_cdf",
    "optimal_batch", "oversample_adjust", "parents", "parse_prefix",
    "prefix_at", "random_prefix", "z_score",
]
