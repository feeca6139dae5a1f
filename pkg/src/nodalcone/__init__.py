"""Stationary sets of the wave equation for finitely supported initial data.

Exact polynomial algebra, harmonic decompositions, reflection-group closure,
symbolic prediction of stationary sets and a numeric spherical-mean oracle.
"""

from .coxeter import AffineSubspace, FiniteDistribution, Hyperplane, closure, is_odd
from .harmonic import divides_all_laplacians, find_harmonic_multiple, gauss_decompose
from .oracle import Bump, Gaussian, OracleConfig, stationarity_indicator, verify_prediction, wave_eval
from .polyalg import OrthogonalAffineMap, Polynomial
from .stationary import StationaryPrediction, membership, predict_distribution, predict_single_point

__all__ = [
    "AffineSubspace",
    "Bump",
    "FiniteDistribution",
    "Gaussian",
    "Hyperplane",
    "OracleConfig",
    "OrthogonalAffineMap",
    "Polynomial",
    "StationaryPrediction",
    "closure",
    "divides_all_laplacians",
    "find_harmonic_multiple",
    "gauss_decompose",
    "is_odd",
    "membership",
    "predict_distribution",
    "predict_single_point",
    "stationarity_indicator",
    "verify_prediction",
    "wave_eval",
]
