"""Gaussian simulation of measurement-induced interferometers on dual-rail
time-multiplexed cluster states."""

__version__ = "0.1.0"

from .cluster import ClusterConfig, DualRailIndex, build_cluster
from .conditioning import MeasurementPlan, apply_plan, chop, homodyne_condition, knights_plan, linear_plan
from .decompose import (
    DecompositionError,
    EffectiveCircuit,
    ImpureStateError,
    bloch_messiah,
    effective_circuit,
    reconstruct,
    williamson,
)
from .expressibility import DeviationEstimate, InducedEnsemble, TestDistribution, estimate_deviations
from .haarstats import HistogramReport, bhattacharyya_fidelity, compare_to_haar, sample_haar_unitary
from .symplectic import GaussianState, squeezed_vacuum, vacuum
from .tolerances import DEFAULT as DEFAULT_TOLERANCES, Tolerances

__all__ = [
    "ClusterConfig", "DualRailIndex", "build_cluster",
    "MeasurementPlan", "apply_plan", "chop", "homodyne_condition", "knights_plan", "linear_plan",
    "DecompositionError", "EffectiveCircuit", "ImpureStateError", "bloch_messiah", "effective_circuit",
    "reconstruct", "williamson",
    "DeviationEstimate", "InducedEnsemble", "TestDistribution", "estimate_deviations",
    "HistogramReport", "bhattacharyya_fidelity", "compare_to_haar", "sample_haar_unitary",
    "GaussianState", "squeezed_vacuum", "vacuum", "DEFAULT_TOLERANCES", "Tolerances",
]
