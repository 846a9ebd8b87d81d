"""Exponent regime, closed-form constants and the K <-> beta bijection.

The admissible regime is ``m > 1``, ``0 < q < 1``, ``m + q > 2`` and an integer
dimension ``N >= 1``; the spatial weight exponent is pinned to the critical
value ``sigma = 2(1 - q)/(m - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, RegimeError


@dataclass(frozen=True)
class Parameters:
    """Validated exponent triple with its derived constants.

    Use :func:`derive` to construct; direct construction skips validation.

    Attributes
    ----------
    m, q, N : float, float, int
        Diffusion exponent, absorption exponent and dimension.
    sigma, mu, nu : float
        ``2(1-q)/(m-1)``, ``m+q-2`` and ``(m-1)/(m+q-2)``.
    dim : float
        ``N(m-1) + 2``, the combination that recurs in every constant.
    c2 : float
        The K-independent constant of the transverse system.
    c1_unit : float
        ``c1`` at ``K = 1``; ``c1(K) = c1_unit * K**(-k_exp)``.
    k_exp : float
        ``(m-1)/(m-q)``, exponent of the scaling law for ``c1``.
    z_exp : float
        ``mu/(m-q)``, exponent in the closed form of ``z_K``.
    """

    m: float
    q: float
    N: int
    sigma: float
    mu: float
    nu: float
    dim: float
    c2: float
    c1_unit: float
    k_exp: float
    z_exp: float

    @property
    def gamma(self) -> float:
        """``(1-q)/(m-1) = 1 - 1/nu``, the singular exponent of the oracle ODE."""
        return (1.0 - self.q) / (self.m - 1.0)

    def as_dict(self) -> dict:
        return {"m": self.m, "q": self.q, "N": self.N}


@dataclass(frozen=True)
class KBeta:
    """One self-similar regime: shooting parameter and exponents."""

    K: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class RegimeConstants:
    """K-dependent constants of the phase-plane systems."""

    z_K: float
    lambda_K: float
    c1: float
    c2: float


def derive(m: float, q: float, N: int) -> Parameters:
    """Validate ``(m, q, N)`` and compute all derived constants.

    Raises
    ------
    RegimeError
        With ``constraint`` one of ``"m<=1"``, ``"q not in (0,1)"``,
        ``"m+q<=2"``, ``"N<1"``.
    """
    m = float(m)
    q = float(q)
    if not (math.isfinite(m) and math.isfinite(q)):
        raise RegimeError("non-finite", "m and q must be finite")
    if int(N) != N:
        raise RegimeError("N<1", f"N must be an integer, got {N!r}")
    N = int(N)
    if N < 1:
        raise RegimeError("N<1", f"dimension N={N} must be >= 1")
    if m <= 1.0:
        raise RegimeError("m<=1", f"m={m} must exceed 1")
    if not 0.0 < q < 1.0:
        raise RegimeError("q not in (0,1)", f"q={q} must lie in (0, 1)")
    if m + q <= 2.0:
        raise RegimeError("m+q<=2", f"m+q={m + q} must exceed 2")

    mu = m + q - 2.0
    nu = (m - 1.0) / mu
    dim = N * (m - 1.0) + 2.0
    k_exp = (m - 1.0) / (m - q)
    z_exp = mu / (m - q)
    c2 = (N * (m - 1.0) + 2.0 * m + 2.0) / math.sqrt(2.0 * (m - 1.0) * dim)
    p = Parameters(
        m=m, q=q, N=N,
        sigma=2.0 * (1.0 - q) / (m - 1.0),
        mu=mu, nu=nu, dim=dim, c2=c2, c1_unit=0.0, k_exp=k_exp, z_exp=z_exp,
    )
    c1_unit = _constants(p, 1.0).c1
    return Parameters(**{**p.__dict__, "c1_unit": c1_unit})


def _constants(p: Parameters, K: float) -> RegimeConstants:
    m = p.m
    z_K = (K * (m - 1.0) ** 2 / (2.0 * p.dim)) ** p.z_exp
    lam = math.sqrt(2.0 * p.dim / (m - 1.0)) * z_K ** p.nu
    return RegimeConstants(z_K=z_K, lambda_K=lam, c1=(m - 1.0) / lam, c2=p.c2)


def _check_positive(name: str, x: float) -> float:
    x = float(x)
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"{name} must be a positive finite number, got {x!r}")
    return x


def regime_constants(p: Parameters, K: float) -> RegimeConstants:
    """Constants ``z_K``, ``lambda_K``, ``c1``, ``c2`` at shooting parameter K."""
    return _constants(p, _check_positive("K", K))


def c1_of(p: Parameters, K: float) -> float:
    """``c1(K)`` via the scaling law; agrees with :func:`regime_constants`."""
    return p.c1_unit * _check_positive("K", K) ** (-p.k_exp)


def k_of_c1(p: Parameters, c1: float) -> float:
    """Inverse of :func:`c1_of` (``c1`` is strictly decreasing in K)."""
    return (p.c1_unit / _check_positive("c1", c1)) ** (1.0 / p.k_exp)


def k_from_beta(p: Parameters, beta: float) -> KBeta:
    beta = _check_positive("beta", beta)
    alpha = 2.0 * beta / (p.m - 1.0)
    K = (2.0 * p.m / alpha) ** ((p.m - p.q) / (p.m - 1.0)) / p.m
    return KBeta(K=K, alpha=alpha, beta=beta)


def beta_from_k(p: Parameters, K: float) -> KBeta:
    K = _check_positive("K", K)
    alpha = 2.0 * p.m * (p.m * K) ** (-(p.m - 1.0) / (p.m - p.q))
    return KBeta(K=K, alpha=alpha, beta=(p.m - 1.0) * alpha / 2.0)


def origin_coefficient(p: Parameters) -> float:
    """Limit of ``f(xi)/xi**(2/(m-1))`` at the origin for origin-supported profiles."""
    return ((p.m - 1.0) ** 2 / (2.0 * p.m * p.dim)) ** (1.0 / (p.m - p.q))
