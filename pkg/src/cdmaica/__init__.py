"""Blind source separation (Comon, JADE, FastICA) and ICA-based DS-CDMA downlink detection."""

from ._accel import USE_NUMBA, backend_name
from .channel import LinkScenario, synthesize
from .codes import GoldCodeSet, gold_family
from .harness import ExperimentPlan, SerReport, run_plan, run_point
from .ica import IcaConfig, IcaResult, SeparationFailed, amari_index, separate

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA",
    "backend_name",
    "LinkScenario",
    "synthesize",
    "GoldCodeSet",
    "gold_family",
    "ExperimentPlan",
    "SerReport",
    "run_plan",
    "run_point",
    "IcaConfig",
    "IcaResult",
    "SeparationFailed",
    "amari_index",
    "separate",
]
