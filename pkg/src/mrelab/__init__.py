"""Exact computation and sample-based estimation of measured (Renyi) relative entropies."""

__version__ = "0.1.0"

from .oracle import OptimizerSolution, RenyiOrder, brute_force_measured, classical_kl, classical_renyi, measured, measured_rel_entropy, measured_renyi
from .states import DensityMatrix, StatePair, sample_pair_in_class, thompson_metric

__all__ = [
    "DensityMatrix",
    "OptimizerSolution",
    "RenyiOrder",
    "StatePair",
    "brute_force_measured",
    "classical_kl",
    "classical_renyi",
    "measured",
    "measured_rel_entropy",
    "measured_renyi",
    "sample_pair_in_class",
    "thompson_metric",
]
