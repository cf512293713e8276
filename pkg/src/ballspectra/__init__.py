"""Spectral analysis of curl and grad div on a ball."""
from .ballcalc import QuadratureGrid, ResidualReport, verify_eigenpair
from .eigenbasis import (CURL, GRADDIV, BallDomain, EigenField, EigenRecord, MultiIndex,
                         SphericalPoint, SphericalVector, enumerate_indices, eval_field,
                         normalized_record)
from .errors import BallSpectraError
from .spectral import SpectralCoefficients, Truncation, analyze, synthesize
from .specfun import bessel_prime_zero, bessel_zero, psi

__version__ = "0.1.0"

__all__ = [
    "CURL", "GRADDIV", "BallDomain", "BallSpectraError", "EigenField", "EigenRecord", "MultiIndex",
    "QuadratureGrid", "ResidualReport", "SpectralCoefficients", "SphericalPoint", "SphericalVector",
    "Truncation", "analyze", "bessel_prime_zero", "bessel_zero", "enumerate_indices", "eval_field",
    "normalized_record", "psi", "synthesize", "verify_eigenpair",
]
