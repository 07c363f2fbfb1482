"""Digital twin of a time/frequency-bin hyperentangled photon-pair source and its analyzers."""

from .hilbert import DensityMatrix, Ket, Observable, SubsystemLayout
from .state import NoiseParams, ideal_he_state, noisy_he_state

__all__ = ["DensityMatrix", "Ket", "NoiseParams", "Observable", "SubsystemLayout",
           "ideal_he_state", "noisy_he_state"]
__version__ = "0.1.0"
