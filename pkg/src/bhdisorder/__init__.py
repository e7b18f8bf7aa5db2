"""Disordered Bose-Hubbard model with infinite-range hopping.

Variational pressure, condensate order parameter, critical curves
``beta_c(rho)`` and brute-force finite-volume oracles.
"""
from . import constants, disorder, oracle, phase, pressure, singlesite
from .disorder import DisorderSpec, QuadratureConfig
from .phase import CriticalCurve, CriticalPoint
from .pressure import OrderParameterResult
from .singlesite import ModelParams

__version__ = "0.1.0"
