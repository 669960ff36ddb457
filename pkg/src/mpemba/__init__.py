"""Davies-map relaxation, permutation dressing and quantum Mpemba crossovers."""
from .davies import BathStatistics, DaviesModel, LiouvillianSpectrum, spectral_decomposition, steady_state_gibbs
from .distances import DistanceMeasure, hsd, qre, trace_distance
from .evolution import detect_crossover, evolve, relaxation_trajectory
from .protocol import PermutationSpec, canonical_permutation, dress_state

__version__ = "0.1.0"

__all__ = [
    "BathStatistics",
    "DaviesModel",
    "DistanceMeasure",
    "LiouvillianSpectrum",
    "PermutationSpec",
    "canonical_permutation",
    "detect_crossover",
    "dress_state",
    "evolve",
    "hsd",
    "qre",
    "relaxation_trajectory",
    "spectral_decomposition",
    "steady_state_gibbs",
    "trace_distance",
]
