"""Two-photon states from parametric down-conversion in uniaxial crystals."""
from .biphoton import DetectionSetup, FilterShape, GaussianPump, SpectralFilter, TabulatedPump
from .crystal import BBO, LIIO3, anisotropy, derived_index_set, get_crystal, sellmeier_index
from .phasematching import (
    AngularPoint, CutConfiguration, Family, SumDiffPoint, solve_beamlike_angle, solve_collinear_angle,
)

__version__ = "0.1.0"

__all__ = [
    "AngularPoint", "BBO", "CutConfiguration", "DetectionSetup", "Family", "FilterShape",
    "GaussianPump", "LIIO3", "SpectralFilter", "SumDiffPoint", "TabulatedPump", "anisotropy",
    "derived_index_set", "get_crystal", "sellmeier_index", "solve_beamlike_angle",
    "solve_collinear_angle", "__version__",
]
