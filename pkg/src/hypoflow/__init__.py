"""hypoflow: spectral simulation and decay-rate certification for linear kinetic equations."""

from .model import ModelSpec, Moments, Weight, build_equilibrium, check_hypotheses, compute_moments
from .modes import RateCertificate, certify

__version__ = "0.1.0"

__all__ = [
    "ModelSpec",
    "Moments",
    "Weight",
    "RateCertificate",
    "build_equilibrium",
    "check_hypotheses",
    "compute_moments",
    "certify",
    "__version__",
]
