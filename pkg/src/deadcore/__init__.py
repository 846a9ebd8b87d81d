"""Self-similar dead-core profiles of a degenerate diffusion-absorption equation.

The profile problem is reduced to a planar autonomous system; the dead-core
exponent is found by shooting two distinguished orbits against each other and
the physical profile is rebuilt from the connecting orbit.
"""

from .errors import (BlowUpError, BracketingFailure, DeadCoreError, DomainError, Inconclusive,
                     JunctionError, NonMonotoneWarning, RangeError, RegimeError, TailError,
                     ThresholdUndefined)
from .params import KBeta, Parameters, beta_from_k, derive, k_from_beta, regime_constants
from .shoot import ShootConfig, find_k0, find_kinf, find_kstar, shoot_u0, shoot_u1
from .profile import oracle_shoot_physical, reconstruct_dead_core, reconstruct_origin
from .verify import certify_regime, solve_regime

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "BracketingFailure", "DeadCoreError", "DomainError", "Inconclusive",
    "JunctionError", "NonMonotoneWarning", "RangeError", "RegimeError", "TailError",
    "ThresholdUndefined", "KBeta", "Parameters", "beta_from_k", "derive", "k_from_beta",
    "regime_constants", "ShootConfig", "find_k0", "find_kinf", "find_kstar", "shoot_u0",
    "shoot_u1", "oracle_shoot_physical", "reconstruct_dead_core", "reconstruct_origin",
    "certify_regime", "solve_regime",
]
