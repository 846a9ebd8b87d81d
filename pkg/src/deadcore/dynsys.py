"""The two autonomous planar vector fields and their local structure.

``R(y, z)`` is the field obtained from the profile equation after the
logarithmic change of independent variable; ``S_K(u, v)`` is its transverse
rescaling with critical points ``Q0 = (0, 0)``, ``Q1 = (0, (m-1) c1)`` and
``Q2 = (1, 0)``.  The change of variables between the two is

    u = z / z_K,   v = ((m-1) y - 2 z_+^nu) / lambda_K,   zeta = lambda_K eta.

Positive parts ``x_+ = max(x, 0)`` are raised to real powers only on the
positive branch, so negative bases are never exponentiated.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, ThresholdUndefined
from .params import Parameters, _check_positive, k_of_c1, regime_constants


class PhasePoint(NamedTuple):
    """A point of the (u, v) plane; the (y, z) plane reuses the same shape."""

    u: float
    v: float


def _ppow(x: float, a: float) -> float:
    """``x_+ ** a`` for ``a > 0``, zero on ``x <= 0``."""
    return math.exp(a * math.log(x)) if x > 0.0 else 0.0


# ---------------------------------------------------------------------------
# the (y, z) field


def eval_R(p: Parameters, K: float, pt) -> PhasePoint:
    """Vector field ``R = (R1, R2)`` at ``pt = (y, z)``."""
    y, z = float(pt[0]), float(pt[1])
    zn = _ppow(z, p.nu)
    r1 = (p.m - 1.0) * y + K * z - y * y - (2.0 + p.N * y) * zn
    r2 = p.mu * z * (y - 2.0 * zn / (p.m - 1.0))
    return PhasePoint(r1, r2)


def jac_R(p: Parameters, K: float, pt) -> np.ndarray:
    y, z = float(pt[0]), float(pt[1])
    nu, m = p.nu, p.m
    zn = _ppow(z, nu)
    zn1 = _ppow(z, nu - 1.0)
    return np.array([
        [(m - 1.0) - 2.0 * y - p.N * zn, K - nu * (2.0 + p.N * y) * zn1],
        [p.mu * z, p.mu * (y - 2.0 * (nu + 1.0) * zn / (m - 1.0))],
    ])


def critical_points_R(p: Parameters, K: float) -> tuple[PhasePoint, PhasePoint, PhasePoint]:
    """``P0``, ``P1``, ``P2`` of the (y, z) field."""
    z_K = regime_constants(p, K).z_K
    return (PhasePoint(0.0, 0.0), PhasePoint(p.m - 1.0, 0.0),
            PhasePoint(2.0 * z_K ** p.nu / (p.m - 1.0), z_K))


# ---------------------------------------------------------------------------
# the (u, v) field


def eval_S(p: Parameters, K: float, pt) -> PhasePoint:
    """Vector field ``S_K = (S1, S2)`` at ``pt = (u, v)``."""
    c1 = regime_constants(p, K).c1
    return _eval_S(p, c1, float(pt[0]), float(pt[1]))


def _eval_S(p: Parameters, c1: float, u: float, v: float) -> PhasePoint:
    un = _ppow(u, p.nu)
    s1 = u * v / p.nu
    # factored in v so that Q1 = (0, (m-1) c1) cancels without a large rounding residue
    s2 = v * (c1 - v / (p.m - 1.0) - p.c2 * un) + u - un * un
    return PhasePoint(s1, s2)


def jac_S(p: Parameters, K: float, pt) -> np.ndarray:
    c1 = regime_constants(p, K).c1
    return _jac_S(p, c1, float(pt[0]), float(pt[1]))


def _jac_S(p: Parameters, c1: float, u: float, v: float) -> np.ndarray:
    nu = p.nu
    un = _ppow(u, nu)
    return np.array([
        [v / nu, u / nu],
        [1.0 - 2.0 * nu * _ppow(u, 2.0 * nu - 1.0) - nu * p.c2 * v * _ppow(u, nu - 1.0),
         c1 - 2.0 * v / (p.m - 1.0) - p.c2 * un],
    ])


def critical_points_S(p: Parameters, K: float) -> tuple[PhasePoint, PhasePoint, PhasePoint]:
    """``Q0``, ``Q1``, ``Q2`` of the (u, v) field."""
    c1 = regime_constants(p, K).c1
    return PhasePoint(0.0, 0.0), PhasePoint(0.0, (p.m - 1.0) * c1), PhasePoint(1.0, 0.0)


# ---------------------------------------------------------------------------
# change of variables


def to_uv(p: Parameters, K: float, pt) -> PhasePoint:
    """Map ``(y, z)`` to ``(u, v)``."""
    rc = regime_constants(p, K)
    y, z = float(pt[0]), float(pt[1])
    return PhasePoint(z / rc.z_K, ((p.m - 1.0) * y - 2.0 * _ppow(z, p.nu)) / rc.lambda_K)


def to_yz(p: Parameters, K: float, pt) -> PhasePoint:
    """Map ``(u, v)`` back to ``(y, z)``."""
    rc = regime_constants(p, K)
    u, v = float(pt[0]), float(pt[1])
    z = rc.z_K * u
    return PhasePoint((rc.lambda_K * v + 2.0 * _ppow(z, p.nu)) / (p.m - 1.0), z)


def pushforward_R(p: Parameters, K: float, pt) -> PhasePoint:
    """``d(u, v)/d eta`` along the R-flow through ``pt = (y, z)``.

    Conjugacy means this equals ``lambda_K * S_K(to_uv(pt))``.
    """
    rc = regime_constants(p, K)
    z = float(pt[1])
    r1, r2 = eval_R(p, K, pt)
    du = r2 / rc.z_K
    dv = ((p.m - 1.0) * r1 - 2.0 * p.nu * _ppow(z, p.nu - 1.0) * r2) / rc.lambda_K
    return PhasePoint(du, dv)


# ---------------------------------------------------------------------------
# classification of Q2


class Q2Kind(enum.Enum):
    UNSTABLE_NODE = "UnstableNode"
    UNSTABLE_FOCUS = "UnstableFocus"
    STABLE_FOCUS = "StableFocus"
    STABLE_NODE = "StableNode"


@dataclass(frozen=True)
class Q2Thresholds:
    """Closed-form thresholds; ``K_s`` is ``None`` when it does not exist."""

    K_u: float
    K_f: float
    K_s: float | None

    def require_K_s(self) -> float:
        if self.K_s is None:
            raise ThresholdUndefined("c2 - 2 sqrt((m-q)/(m-1)) <= 0: no stable-node regime")
        return self.K_s


@dataclass(frozen=True)
class Q2Classification:
    kind: Q2Kind
    eigenvalues: tuple[complex, complex]
    thresholds: Q2Thresholds


def q2_thresholds(p: Parameters) -> Q2Thresholds:
    r = 2.0 * math.sqrt((p.m - p.q) / (p.m - 1.0))
    k_s = k_of_c1(p, p.c2 - r) if p.c2 - r > 0.0 else None
    return Q2Thresholds(K_u=k_of_c1(p, p.c2 + r), K_f=k_of_c1(p, p.c2), K_s=k_s)


def q2_eigenvalues(p: Parameters, K: float) -> tuple[complex, complex]:
    """Roots of ``l**2 - (c1 - c2) l + (m-q)/(m-1)``, larger real part first."""
    tr = regime_constants(p, K).c1 - p.c2
    det = (p.m - p.q) / (p.m - 1.0)
    sq = cmath.sqrt(tr * tr - 4.0 * det)
    l1 = (tr + sq) / 2.0
    # product form avoids cancellation in the smaller root
    l2 = det / l1
    return complex(l1), complex(l2)


def classify_q2(p: Parameters, K: float) -> Q2Classification:
    """Linear type of ``Q2``, assigned by the position of K among the thresholds.

    Boundary values are assigned to the interval on their left: the
    degenerate node at ``K_u`` counts as a node, the centre at ``K_f`` and the
    degenerate node at ``K_s`` count as stable.
    """
    K = _check_positive("K", K)
    th = q2_thresholds(p)
    if K <= th.K_u:
        kind = Q2Kind.UNSTABLE_NODE
    elif K < th.K_f:
        kind = Q2Kind.UNSTABLE_FOCUS
    elif th.K_s is None or K < th.K_s:
        kind = Q2Kind.STABLE_FOCUS
    else:
        kind = Q2Kind.STABLE_NODE
    return Q2Classification(kind=kind, eigenvalues=q2_eigenvalues(p, K), thresholds=th)


# ---------------------------------------------------------------------------
# linear flow near Q2


@dataclass(frozen=True)
class LinearCrossing:
    """First zero of the v-offset under the linearised flow at ``Q2``."""

    dt: float
    point: PhasePoint


def q2_linear_crossing(p: Parameters, K: float, pt, direction: int) -> LinearCrossing | None:
    """Predict the first ``v = 0`` crossing of the linearisation at ``Q2``.

    The offset ``x0 = pt - Q2`` is propagated by ``exp(J t)`` with ``J`` the
    Jacobian at ``Q2``; the first root of its v-component with
    ``sign(t) == direction`` is returned, or ``None`` when v keeps its sign
    forever in that direction.  Written without eigenvectors so that it stays
    well conditioned next to the degenerate node.
    """
    if direction not in (1, -1):
        raise DomainError("direction must be +1 or -1")
    J = jac_S(p, K, (1.0, 0.0))
    x0 = np.array([float(pt[0]) - 1.0, float(pt[1])])
    v0 = x0[1]
    w0 = float(J[1] @ x0)  # dv/dt at t = 0
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = tr * tr - 4.0 * det

    t: float | None
    if v0 == 0.0:
        t = 0.0
    elif disc < 0.0:
        a = tr / 2.0
        b = math.sqrt(-disc) / 2.0
        # v(t) = e^{at} (v0 cos bt + s0 sin bt)
        s0 = (w0 - a * v0) / b
        phi = math.atan2(s0, v0)
        theta = (phi + math.pi / 2.0) % math.pi
        if direction > 0:
            theta = theta if theta > 0.0 else math.pi
        else:
            theta = theta - math.pi
        t = theta / b
    else:
        sq = math.sqrt(disc)
        l1 = (tr + sq) / 2.0 if tr >= 0.0 else (tr - sq) / 2.0
        l2 = det / l1 if l1 != 0.0 else (tr - l1)
        if l1 == l2:
            slope = w0 - l1 * v0
            t = -v0 / slope if slope != 0.0 else None
        else:
            # v(t) = (e^{l1 t} a2 - e^{l2 t} a1) / (l1 - l2), a_i = w0 - l_i v0
            a1 = w0 - l1 * v0
            a2 = w0 - l2 * v0
            if a2 == 0.0 or a1 / a2 <= 0.0:
                t = None
            else:
                t = math.log(a1 / a2) / (l1 - l2)
    if t is None or t * direction <= 0.0:
        return None
    x = expm(J * t) @ x0
    return LinearCrossing(dt=t, point=PhasePoint(1.0 + float(x[0]), 0.0))
