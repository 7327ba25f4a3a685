"""Hong-Ou-Mandel interference between independent, electronically synchronized photon-pair sources."""

from homsync.budget import PenaltyLedger, compose_budget, walkoff_penalty
from homsync.coincidence import DetectorModel, DipResult, HomScenario, run_hom
from homsync.correlator import FitModel, fit_fwhm, simulate_correlation
from homsync.hom_engine import (
    JitterRatio,
    average_visibility,
    dip_fwhm,
    enumerate_multipair_visibility,
    nonbunching_probability,
    predict_dip,
)
from homsync.jitterchain import (
    FiberLink,
    JitterStage,
    SyncChain,
    compose_quadrature,
    extract_component,
    stabilization_interval,
)
from homsync.pairsource import PairStatistics, PhotonSource
from homsync.wavepacket import PulseShape, Spectrum, coherence_time

__version__ = "0.1.0"

__all__ = [
    "DetectorModel",
    "DipResult",
    "FiberLink",
    "FitModel",
    "HomScenario",
    "JitterRatio",
    "JitterStage",
    "PairStatistics",
    "PenaltyLedger",
    "PhotonSource",
    "PulseShape",
    "Spectrum",
    "SyncChain",
    "average_visibility",
    "coherence_time",
    "compose_budget",
    "compose_quadrature",
    "dip_fwhm",
    "enumerate_multipair_visibility",
    "extract_component",
    "fit_fwhm",
    "nonbunching_probability",
    "predict_dip",
    "run_hom",
    "simulate_correlation",
    "stabilization_interval",
    "walkoff_penalty",
]
