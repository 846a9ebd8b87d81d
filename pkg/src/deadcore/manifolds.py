"""Seed points on the two distinguished orbits of the (u, v) system.

``l1(K)`` leaves ``Q1 = (0, (m-1) c1)`` along its one-dimensional unstable
manifold; ``l0(K)`` enters ``Q0 = (0, 0)`` along the centre manifold with
slope ``-1/c1``.  Both seeds sit at ``u = eps`` and are traced away from the
critical point (``l1`` forward in zeta, ``l0`` backward).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.integrate import quad

from .dynsys import PhasePoint
from .errors import DomainError
from .params import Parameters, regime_constants

EPS_DEFAULT = 1e-4
EPS_FLOOR = 1e-10


class Direction(enum.IntEnum):
    FORWARD = 1
    BACKWARD = -1


class Orbit(enum.Enum):
    L1 = "l1"
    L0 = "l0"


@dataclass(frozen=True)
class Seed:
    point: PhasePoint
    direction: Direction
    epsilon: float
    orbit: Orbit | None = None


@dataclass(frozen=True)
class CentreManifoldCoefficients:
    """``v = -u/c1 + a2 u**2 + b u**(1+nu) + ...`` near ``Q0``.

    ``a2 = (m+q-1)/((m-1) c1**3)`` is always positive.  ``b = -c2/c1**2``
    balances the ``-c2 v u**nu`` term; it is the next correction after
    ``u**2`` when ``nu < 2`` and is kept for every nu because it is cheap.
    """

    a2: float
    b: float


def _check_eps(eps: float, eps_max: float) -> float:
    eps = float(eps)
    if not (math.isfinite(eps) and EPS_FLOOR <= eps <= eps_max):
        raise DomainError(f"eps={eps!r} outside [{EPS_FLOOR}, {eps_max}]")
    return eps


def l1_slope(p: Parameters, K: float) -> float:
    """``dv/du`` of ``l1`` at ``Q1``: ``K z_K / ((m+q-1) lambda_K)``."""
    rc = regime_constants(p, K)
    return K * rc.z_K / ((p.m + p.q - 1.0) * rc.lambda_K)


def seed_l1(p: Parameters, K: float, eps: float = EPS_DEFAULT,
            eps_max: float = EPS_DEFAULT) -> Seed:
    """Seed on the unstable manifold of ``Q1``, mapped from the (y, z) tangent line."""
    eps = _check_eps(eps, eps_max)
    rc = regime_constants(p, K)
    m = p.m
    z = rc.z_K * eps
    y = (m - 1.0) + K * z / ((m + p.q - 1.0) * (m - 1.0))
    v = ((m - 1.0) * y - 2.0 * z ** p.nu) / rc.lambda_K
    return Seed(PhasePoint(eps, v), Direction.FORWARD, eps, Orbit.L1)


def centre_manifold_coefficients(p: Parameters, K: float) -> CentreManifoldCoefficients:
    c1 = regime_constants(p, K).c1
    return CentreManifoldCoefficients(
        a2=(p.m + p.q - 1.0) / ((p.m - 1.0) * c1 ** 3),
        b=-p.c2 / c1 ** 2,
    )


def l0_graph(p: Parameters, K: float, u: float, quadratic: bool = True) -> float:
    """Local centre-manifold graph ``v = h(u)`` at ``u > 0``."""
    c1 = regime_constants(p, K).c1
    v = -u / c1
    if quadratic:
        cm = centre_manifold_coefficients(p, K)
        v += cm.a2 * u * u + cm.b * u ** (1.0 + p.nu)
    return v


def seed_l0(p: Parameters, K: float, eps: float = EPS_DEFAULT,
            eps_max: float = EPS_DEFAULT, quadratic: bool = True) -> Seed:
    """Seed on the centre manifold of ``Q0``, to be traced backward."""
    eps = _check_eps(eps, eps_max)
    return Seed(PhasePoint(eps, l0_graph(p, K, eps, quadratic)),
                Direction.BACKWARD, eps, Orbit.L0)


def l1_tail_integral(p: Parameters, K: float, eps: float) -> float:
    """``int u**nu dzeta`` over the part of ``l1`` between ``Q1`` and the seed.

    Near ``Q1`` the u-coordinate grows like ``exp(mu c1 zeta)``.
    """
    c1 = regime_constants(p, K).c1
    return eps ** p.nu / ((p.m - 1.0) * c1)


def l0_tail_integral(p: Parameters, K: float, eps: float) -> float:
    """``int u**nu dzeta`` over the part of ``l0`` between the seed and ``Q0``.

    Along the graph ``dzeta = nu du / (u h(u))``; the substitution
    ``t = (u/eps)**(nu-1)`` removes the algebraic endpoint singularity.
    """
    c1 = regime_constants(p, K).c1
    cm = centre_manifold_coefficients(p, K)
    nu = p.nu

    def g(t: float) -> float:
        u = eps * t ** (1.0 / (nu - 1.0)) if t > 0.0 else 0.0
        return 1.0 / (1.0 - cm.a2 * c1 * u - cm.b * c1 * u ** nu)

    val, _ = quad(g, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    return nu * c1 * eps ** (nu - 1.0) / (nu - 1.0) * val
