"""Physical profiles rebuilt from phase-plane orbits, and an independent oracle.

Along an orbit of ``S_K`` the profile variable satisfies

    d ln(xi) / d zeta = c * u**nu,   c = z_K**nu / lambda_K = sqrt((m-1)/(2 dim)),

so ``ln(xi)`` is a quadrature of ``u**nu`` along the orbit.  The profile and
the derivative of its ``(m-1)``-th power are then

    f = [alpha X / (2m)]**(1/(m-1)) * xi**(2/(m-1)),   X = z_K**nu u**nu,
    (f**(m-1))' = alpha xi (lambda_K v + 2 X) / (2m).

The dead-core profile glues ``l1`` (from ``Q1``, the left edge) to ``l0``
(into ``Q0``, the interface) at their common zero of v.  The origin-supported
profile uses ``l0`` alone, which then runs from ``Q2`` (the origin) to ``Q0``.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq, least_squares

from .errors import BlowUpError, DomainError, JunctionError, RegimeError, TailError
from .integrate import StopSpec, TerminationKind, Trajectory, integrate
from .manifolds import l0_graph, l0_tail_integral, l1_tail_integral, seed_l0
from .params import KBeta, Parameters, _check_positive, origin_coefficient, regime_constants


class ProfileKind(enum.Enum):
    DEAD_CORE = "DeadCore"
    ORIGIN_SUPPORTED = "OriginSupported"


class Normalization(enum.Enum):
    AS_COMPUTED = "AsComputed"
    LEFT_EDGE_AT_ONE = "LeftEdgeAtOne"
    INTERFACE_AT_ONE = "InterfaceAtOne"


@dataclass(frozen=True, eq=False)
class Profile:
    """Sampled profile on its support ``[xi_star, xi_0]``.

    The first and last samples are the support edges, where ``f = 0``.
    ``gap_left = xi - xi_star`` and ``gap_right = xi_0 - xi`` are computed
    without cancellation and drive the boundary fits.

    Attributes
    ----------
    tails : dict
        ``left``, ``right`` and ``total`` values of ``int u**nu dzeta``;
        ``left``/``right`` are the analytic tail corrections.
    """

    regime: KBeta
    params: Parameters
    kind: ProfileKind
    xi_star: float
    xi_0: float
    xi: np.ndarray
    f: np.ndarray
    dfm1: np.ndarray
    gap_left: np.ndarray
    gap_right: np.ndarray
    normalization: Normalization
    tails: dict = field(default_factory=dict)

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.xi, self.f, self.dfm1)]

    @property
    def support_ratio(self) -> float:
        """``xi_0 / xi_star`` (infinite for origin-supported profiles)."""
        return self.xi_0 / self.xi_star if self.xi_star > 0.0 else math.inf

    def __call__(self, xi) -> np.ndarray:
        """Monotone cubic interpolant of f, zero outside the support."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        inside = (xi > self.xi_star) & (xi < self.xi_0)
        out[inside] = np.maximum(PchipInterpolator(self.xi, self.f)(xi[inside]), 0.0)
        return out


@dataclass(frozen=True)
class BoundaryReport:
    """Boundary fits and the interior ODE residual of a profile.

    Left-edge entries are ``None`` for origin-supported profiles and origin
    entries are ``None`` for dead-core profiles.
    """

    left_slope: float | None
    left_slope_expected: float | None
    left_exponent: float | None
    interface_coeff: float
    interface_coeff_expected: float
    interface_exponent: float
    interface_xi0_fit: float
    interface_flatness: float
    origin_coeff: float | None
    origin_coeff_expected: float | None
    origin_exponent: float | None
    ode_residual_max: float
    window: tuple[float, float]

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


# ---------------------------------------------------------------------------
# quadrature along an orbit


def _cumulative_unu(p: Parameters, tr: Trajectory) -> np.ndarray:
    """``int u**nu dzeta`` from the first sample, oriented along the samples.

    Cubic Hermite quadrature: ``g = u**nu`` has ``dg/dzeta = u**nu v`` exactly,
    so ``int g = h (g0 + g1)/2 + h**2 (g0' - g1')/12`` on each step.
    """
    u = np.maximum(tr.u, 0.0)
    g = u ** p.nu
    dg = g * tr.v
    # arc variable along the samples is direction * zeta
    h = np.diff(tr.zeta) * tr.direction
    seg = h * (g[:-1] + g[1:]) / 2.0 + h * h * tr.direction * (dg[:-1] - dg[1:]) / 12.0
    return np.concatenate(([0.0], np.cumsum(seg)))


def _scale(p: Parameters) -> float:
    return math.sqrt((p.m - 1.0) / (2.0 * p.dim))


def _physical(p: Parameters, kb: KBeta, u, v, xi) -> tuple[np.ndarray, np.ndarray]:
    rc = regime_constants(p, kb.K)
    X = rc.z_K ** p.nu * np.maximum(u, 0.0) ** p.nu
    f = (kb.alpha * X / (2.0 * p.m)) ** (1.0 / (p.m - 1.0)) * xi ** (2.0 / (p.m - 1.0))
    dfm1 = kb.alpha * xi * (rc.lambda_K * v + 2.0 * X) / (2.0 * p.m)
    return f, dfm1


def _l0_tail_samples(p: Parameters, K: float, eps: float, decades: float = 6.0,
                     per_decade: int = 8) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Samples of ``l0`` between its seed and ``Q0`` from the local graph.

    Returns ``(u, v, R)`` with u decreasing from just below ``eps`` and ``R``
    the tail quadrature from ``Q0``; they close the gap between the last
    integrated sample and the interface.  Near ``Q0`` the profile scales like
    ``u**(1/mu)``, so the samples are spaced evenly over ``decades`` decades
    of f.
    """
    k = np.linspace(0.0, decades, int(decades * per_decade) + 1)[1:]
    u = eps * 10.0 ** (-p.mu * k)
    v = np.array([l0_graph(p, K, x) for x in u])
    R = np.array([l0_tail_integral(p, K, x) for x in u])
    return u, v, R


def _check_tail(name: str, tail: float, total: float, limit: float = 0.1) -> None:
    if not (total > 0.0 and tail <= limit * total):
        raise TailError(f"{name} tail {tail:.3g} exceeds {limit:.0%} of the integral {total:.3g}")


# ---------------------------------------------------------------------------
# reconstruction


def reconstruct_dead_core(p: Parameters, kstar: KBeta, l1: Trajectory, l0: Trajectory,
                          junction_tol: float = 1e-6,
                          normalization: Normalization = Normalization.LEFT_EDGE_AT_ONE) -> Profile:
    """Glue ``l1`` and ``l0`` at their zero of v and invert the quadrature.

    ``l1`` must run forward from its seed to the crossing and ``l0`` backward
    from its seed to the crossing.  The junction mismatch is checked relative
    to the crossing value.

    Raises
    ------
    JunctionError
        If the end points differ by more than ``junction_tol`` (relative).
    TailError
        If either analytic tail exceeds 10% of the total integral.
    """
    if l1.direction != 1 or l0.direction != -1:
        raise DomainError("expected l1 traced forward and l0 traced backward")
    e1, e0 = l1.end, l0.end
    gap = math.hypot(e1.u - e0.u, e1.v - e0.v)
    if not gap <= junction_tol * max(abs(e1.u), 1.0):
        raise JunctionError(f"l1 ends at {tuple(e1)}, l0 at {tuple(e0)}: gap {gap:.3g}")
    c1 = regime_constants(p, kstar.K).c1
    c = _scale(p)
    eps1 = float(l1.u[0])
    eps0 = float(l0.u[0])
    t1 = l1_tail_integral(p, kstar.K, eps1)
    t0 = l0_tail_integral(p, kstar.K, eps0)
    left = t1 + _cumulative_unu(p, l1)          # from Q1 to each l1 sample
    right = t0 + _cumulative_unu(p, l0)         # from Q0 to each l0 sample
    total = left[-1] + right[-1]
    _check_tail("left", t1, total)
    _check_tail("right", t0, total)

    # AsComputed: xi = 1 at the junction
    xs = math.exp(-c * left[-1])
    x0 = math.exp(c * right[-1])
    # l1 samples then l0 samples reversed, junction taken from l1
    tu, tv, tR = _l0_tail_samples(p, kstar.K, eps0)
    r0 = np.concatenate((right[::-1][1:], tR))
    L = np.concatenate((left, total - r0))
    R = np.concatenate((total - left, r0))
    u = np.concatenate((l1.u, l0.u[::-1][1:], tu))
    v = np.concatenate((l1.v, l0.v[::-1][1:], tv))
    xi = xs * np.exp(c * L)
    gl = xs * np.expm1(c * L)
    gr = -x0 * np.expm1(-c * R)
    f, dfm1 = _physical(p, kstar, u, v, xi)

    rc = regime_constants(p, kstar.K)
    d_left = kstar.alpha * xs * rc.lambda_K * (p.m - 1.0) * c1 / (2.0 * p.m)
    prof = Profile(
        regime=kstar, params=p, kind=ProfileKind.DEAD_CORE, xi_star=xs, xi_0=x0,
        xi=np.concatenate(([xs], xi, [x0])),
        f=np.concatenate(([0.0], f, [0.0])),
        dfm1=np.concatenate(([d_left], dfm1, [0.0])),
        gap_left=np.concatenate(([0.0], gl, [x0 - xs])),
        gap_right=np.concatenate(([x0 - xs], gr, [0.0])),
        normalization=Normalization.AS_COMPUTED,
        tails={"left": t1, "right": t0, "total": total},
    )
    return normalize(prof, normalization)


def trace_origin_orbit(p: Parameters, K: float, eps: float = 1e-4, conv_tol: float = 1e-10,
                       rtol: float = 1e-10, atol: float = 1e-12) -> Trajectory:
    """Trace ``l0(K)`` backward all the way into ``Q2`` (crossings do not stop it)."""
    stop = StopSpec(stop_on_vzero=False, q2=True, blowdown=True, conv_tol=conv_tol,
                    rtol=rtol, atol=atol)
    return integrate(p, K, seed_l0(p, K, eps), stop)


def reconstruct_origin(p: Parameters, kb: KBeta, l0: Trajectory, k0_hi: float | None = None,
                       normalization: Normalization = Normalization.INTERFACE_AT_ONE) -> Profile:
    """Invert the quadrature along ``l0`` when it connects ``Q2`` to ``Q0``.

    ``xi`` decays exponentially toward the origin as the orbit settles on
    ``Q2``; the profile is closed with the edge sample ``(0, 0, 0)``.

    Raises
    ------
    RegimeError
        If ``K`` exceeds ``k0_hi`` or ``l0`` did not converge to ``Q2``.
    """
    if k0_hi is not None and kb.K > k0_hi:
        raise RegimeError("K>K0", f"K={kb.K} exceeds the K0 bracket {k0_hi}")
    if l0.termination is not TerminationKind.CONVERGED_TO_Q2:
        raise RegimeError("K>K0", f"l0 ended with {l0.termination.value}, not at Q2")
    if l0.direction != -1:
        raise DomainError("expected l0 traced backward")
    c = _scale(p)
    t0 = l0_tail_integral(p, kb.K, float(l0.u[0]))
    R = t0 + _cumulative_unu(p, l0)
    _check_tail("right", t0, R[-1])
    tu, tv, tR = _l0_tail_samples(p, kb.K, float(l0.u[0]))
    R = np.concatenate((R[::-1], tR))
    u = np.concatenate((l0.u[::-1], tu))
    v = np.concatenate((l0.v[::-1], tv))
    x0 = 1.0
    xi = x0 * np.exp(-c * R)
    f, dfm1 = _physical(p, kb, u, v, xi)
    prof = Profile(
        regime=kb, params=p, kind=ProfileKind.ORIGIN_SUPPORTED, xi_star=0.0, xi_0=x0,
        xi=np.concatenate(([0.0], xi, [x0])),
        f=np.concatenate(([0.0], f, [0.0])),
        dfm1=np.concatenate(([0.0], dfm1, [0.0])),
        gap_left=np.concatenate(([0.0], xi, [x0])),
        gap_right=np.concatenate(([x0], -x0 * np.expm1(-c * R), [0.0])),
        normalization=Normalization.AS_COMPUTED,
        tails={"left": 0.0, "right": t0, "total": float(R[0])},
    )
    return normalize(prof, normalization)


def _strict(prof: Profile) -> Profile:
    """Drop samples that collapse onto their left neighbour in floating point."""
    keep = np.concatenate(([True], np.diff(prof.xi) > 0.0))
    keep[-1] = True
    keep[-2] = keep[-2] and prof.xi[-2] < prof.xi[-1]
    if keep.all():
        return prof
    return replace(prof, xi=prof.xi[keep], f=prof.f[keep], dfm1=prof.dfm1[keep],
                   gap_left=prof.gap_left[keep], gap_right=prof.gap_right[keep])


def rescale(prof: Profile, lam: float) -> Profile:
    """``f_lam(xi) = lam f(lam**(-(m-1)/2) xi)``, again a solution."""
    lam = _check_positive("lam", lam)
    p = prof.params
    s = lam ** ((p.m - 1.0) / 2.0)
    return _strict(replace(
        prof, xi_star=prof.xi_star * s, xi_0=prof.xi_0 * s, xi=prof.xi * s,
        f=prof.f * lam, dfm1=prof.dfm1 * s, gap_left=prof.gap_left * s,
        gap_right=prof.gap_right * s, normalization=Normalization.AS_COMPUTED,
    ))


def normalize(prof: Profile, normalization: Normalization) -> Profile:
    """Rescale so that the requested edge sits at ``xi = 1``."""
    if normalization is Normalization.AS_COMPUTED:
        return _strict(prof)
    if normalization is Normalization.LEFT_EDGE_AT_ONE:
        if prof.kind is not ProfileKind.DEAD_CORE:
            raise DomainError("LeftEdgeAtOne needs a dead-core profile")
        edge = prof.xi_star
    else:
        edge = prof.xi_0
    lam = edge ** (-2.0 / (prof.params.m - 1.0))
    out = rescale(prof, lam)
    # pin the edge exactly; the scaled value can be off by an ulp
    xi = out.xi.copy()
    if normalization is Normalization.LEFT_EDGE_AT_ONE:
        xi[0] = 1.0
        return _strict(replace(out, xi=xi, xi_star=1.0, normalization=normalization))
    xi[-1] = 1.0
    return _strict(replace(out, xi=xi, xi_0=1.0, normalization=normalization))


# ---------------------------------------------------------------------------
# boundary fits and ODE residual


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def left_edge_fit(prof: Profile, n: int = 20) -> tuple[float, float]:
    """``(limit of dfm1 at xi_star, exponent of f)`` from the first samples.

    The limit is fitted as ``a + b s**(1-gamma)`` in ``s = xi - xi_star``,
    which is the next-order term of the edge expansion.
    """
    p = prof.params
    s = prof.gap_left[1:n + 1]
    d = prof.dfm1[1:n + 1]
    A = np.column_stack((np.ones_like(s), s ** (1.0 - p.gamma)))
    coef, *_ = np.linalg.lstsq(A, d, rcond=None)
    return float(coef[0]), _loglog_slope(s, prof.f[1:n + 1])


def interface_fit(prof: Profile, decades: float = 1.0) -> tuple[float, float, float, float]:
    """Fit ``A (xi_0 - xi)**(1/(1-q))`` over the last decade of f-values.

    Returns ``(A, xi_0 fit, exponent, flatness)``.  ``xi_0`` is a free fit
    parameter started from the quadrature value; the exponent is the log-log
    slope against the quadrature gap; ``flatness`` is the limit of
    ``dfm1 / f**(m+q-2)`` at the last interior sample.
    """
    p = prof.params
    kappa = 1.0 / (1.0 - p.q)
    f = prof.f[1:-1]
    gr = prof.gap_right[1:-1]
    xi = prof.xi[1:-1]
    tail = np.arange(len(f)) > int(np.argmax(f))
    fmin = f[tail].min()
    sel = tail & (f <= fmin * 10.0 ** decades)
    if sel.sum() < 4:
        raise TailError("too few samples in the interface window")
    xs, fs, gs = xi[sel], f[sel], gr[sel]
    x0 = prof.xi_0
    scale = float(gs.max())

    def res(th):
        g = (x0 + th[1] * scale) - xs
        return th[0] + kappa * np.log(np.maximum(g, 1e-300)) - np.log(fs)

    a0 = float(np.median(np.log(fs) - kappa * np.log(gs)))
    sol = least_squares(res, [a0, 0.0], x_scale=[1.0, 1e-3], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    A = math.exp(sol.x[0])
    x0_fit = x0 + sol.x[1] * scale
    expo = _loglog_slope(gs, fs)
    last = int(np.nonzero(sel)[0][-1])
    flat = float(prof.dfm1[1:-1][last] / f[last] ** p.mu)
    return A, x0_fit, expo, flat


def origin_fit(prof: Profile, n: int = 20) -> tuple[float, float]:
    """``(limit of f / xi**(2/(m-1)), exponent of f)`` from the samples nearest 0."""
    p = prof.params
    xi = prof.xi[1:n + 1]
    f = prof.f[1:n + 1]
    ratio = f / xi ** (2.0 / (p.m - 1.0))
    return float(ratio[0]), _loglog_slope(xi, f)


def ode_residual_profile(p: Parameters, kb: KBeta, prof: Profile, window: float = 0.1,
                         n: int = 400) -> tuple[float, tuple[float, float]]:
    """Max relative residual of the profile equation on the window ``f >= window * max f``.

    The samples are resampled log-uniformly in ``xi`` by cubic splines;
    ``(f**m)'`` is known in closed form from ``dfm1`` and ``(f**m)''`` is its
    5-point finite difference.  Each point's residual is divided by the
    largest of the five terms there.
    """
    xi, f, d = prof.xi[1:-1], prof.f[1:-1], prof.dfm1[1:-1]
    inner = np.nonzero(f >= window * f.max())[0]
    if len(f) < 200 and len(inner) < 8:
        raise DomainError("profile has too few interior samples")
    a, b = xi[inner[0]], xi[inner[-1]]
    # pad the stencil by two nodes on each side
    t = np.linspace(math.log(a), math.log(b), n)
    dt = t[1] - t[0]
    tt = np.concatenate((t[0] - dt * np.array([2.0, 1.0]), t, t[-1] + dt * np.array([1.0, 2.0])))
    lx = np.log(xi)
    keep = np.concatenate(([True], np.diff(lx) > 0.0))
    sf = CubicSpline(lx[keep], f[keep])
    sd = CubicSpline(lx[keep], d[keep])
    X = np.exp(tt)
    F = sf(tt)
    Dm1 = sd(tt)
    m = p.m
    H1 = (m / (m - 1.0)) * F * Dm1                          # (f^m)'
    dH1 = (-H1[4:] + 8.0 * H1[3:-1] - 8.0 * H1[1:-3] + H1[:-4]) / (12.0 * dt)
    X, F, Dm1, H1 = X[2:-2], F[2:-2], Dm1[2:-2], H1[2:-2]
    H2 = dH1 / X                                            # d/dxi = (1/xi) d/dlnxi
    fp = Dm1 * F ** (2.0 - m) / (m - 1.0)
    terms = np.vstack((H2, (p.N - 1.0) * H1 / X, kb.alpha * F,
                       -kb.beta * X * fp, -X ** p.sigma * F ** p.q))
    r = np.abs(terms.sum(axis=0)) / np.abs(terms).max(axis=0)
    return float(r.max()), (float(a), float(b))


def ode_residual(p: Parameters, kb: KBeta, prof: Profile) -> BoundaryReport:
    """ODE residual on the interior window plus all boundary fits."""
    rmax, win = ode_residual_profile(p, kb, prof)
    A, x0_fit, iexp, flat = interface_fit(prof)
    kappa = 1.0 / (1.0 - p.q)
    A_exp = ((1.0 - p.q) / kb.beta * x0_fit ** (p.sigma - 1.0)) ** kappa
    if prof.kind is ProfileKind.DEAD_CORE:
        ls, lexp = left_edge_fit(prof)
        ls_exp = (p.m - 1.0) * kb.beta * prof.xi_star / p.m
        oc = oc_exp = oexp = None
    else:
        ls = ls_exp = lexp = None
        oc, oexp = origin_fit(prof)
        oc_exp = origin_coefficient(p)
    return BoundaryReport(
        left_slope=ls, left_slope_expected=ls_exp, left_exponent=lexp,
        interface_coeff=A, interface_coeff_expected=A_exp, interface_exponent=iexp,
        interface_xi0_fit=x0_fit, interface_flatness=flat,
        origin_coeff=oc, origin_coeff_expected=oc_exp, origin_exponent=oexp,
        ode_residual_max=rmax, window=win,
    )


# ---------------------------------------------------------------------------
# independent oracle in the physical variable


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Outcome of the two-sided physical-variable shot.

    ``contact_defect`` is ``|w_R'(xi_m) - w_L'(xi_m)| / a`` with ``w = f**(m-1)``,
    ``xi_m`` the first maximum of the left shot and ``a`` the left-edge slope
    ``(m-1) beta xi_star / m``; ``miss`` carries its sign.
    """

    xi0_candidate: float
    contact_defect: float
    miss: float
    xi_star: float
    xi_match: float
    h_halving_delta: float
    m: float
    left: object = field(repr=False, default=None)
    right: object = field(repr=False, default=None)

    @property
    def support_ratio(self) -> float:
        return self.xi0_candidate / self.xi_star

    def f(self, xi) -> np.ndarray:
        """Oracle profile at ``xi`` in ``[xi_star, xi0_candidate]``, zero outside."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.zeros_like(xi)
        lm = (xi > self.xi_star) & (xi <= self.xi_match)
        rm = (xi > self.xi_match) & (xi < self.xi0_candidate)
        m = self.m
        if lm.any():
            out[lm] = np.maximum(self.left.sol(xi[lm])[0], 0.0) ** (1.0 / (m - 1.0))
        if rm.any():
            out[rm] = np.maximum(self.right.sol(xi[rm])[0], 0.0) ** (1.0 / (m - 1.0))
        return out


def _oracle_rhs(p: Parameters, beta: float):
    alpha = 2.0 * beta / (p.m - 1.0)
    m, g, s, n1 = p.m, p.gamma, p.sigma, p.N - 1.0

    def fun(x, y):
        w, wp = y
        w = w if w > 0.0 else 1e-300
        return [wp, -wp * wp / ((m - 1.0) * w) - n1 * wp / x
                + ((m - 1.0) / m) * (-alpha + beta * x * wp / ((m - 1.0) * w) + x ** s * w ** (-g))]
    return fun


def _oracle_left(p, beta, xs, h, rtol, span):
    m, g = p.m, p.gamma
    a = (m - 1.0) * beta * xs / m
    b = ((m - 1.0) / m) * xs ** p.sigma * a ** (-g) / ((2.0 - g) * (1.0 - g + 1.0 / (m - 1.0)))
    y0 = [a * h + b * h ** (2.0 - g), a + b * (2.0 - g) * h ** (1.0 - g)]

    def peak(x, y):
        return y[1]
    peak.terminal = True
    peak.direction = -1
    sol = solve_ivp(_oracle_rhs(p, beta), (xs + h, xs * span), y0, method="DOP853",
                    rtol=rtol, atol=1e-14 * a, events=[peak], dense_output=True)
    if not sol.t_events[0].size:
        raise BlowUpError(f"f keeps growing up to xi={sol.t[-1]:.6g} at beta={beta!r}")
    return sol, float(sol.t_events[0][0]), sol.y_events[0][0], a


def _oracle_right(p, beta, x0, xm, hr, rtol, dense=False):
    kappa = (p.m - 1.0) / (1.0 - p.q)
    A = ((1.0 - p.q) / beta * x0 ** (p.sigma - 1.0)) ** kappa
    h = hr * x0
    y0 = [A * h ** kappa, -kappa * A * h ** (kappa - 1.0)]
    return solve_ivp(_oracle_rhs(p, beta), (x0 - h, xm), y0, method="LSODA",
                     rtol=rtol, atol=1e-30, dense_output=dense)


def _oracle_solve(p, beta, xs, h_left, h_right, rtol, span):
    left, xm, ym, a = _oracle_left(p, beta, xs, h_left, rtol, span)

    def F(x0):
        r = _oracle_right(p, beta, x0, xm, h_right, rtol)
        if r.status != 0:
            raise BlowUpError(f"interface shot from xi_0={x0!r} failed: {r.message}")
        return r.y[0, -1] - ym[0]

    lo = xm * 1.01
    hi = lo
    while F(hi) < 0.0:
        lo, hi = hi, hi * 1.5
        if hi > xs * span:
            raise BlowUpError(f"no interface within xi < {xs * span!r} at beta={beta!r}")
    x0 = brentq(F, lo, hi, xtol=1e-14 * xm, rtol=1e-15)
    right = _oracle_right(p, beta, x0, xm, h_right, rtol, dense=True)
    miss = (right.y[1, -1] - ym[1]) / a
    return x0, xm, miss, left, right


def oracle_shoot_physical(p: Parameters, beta: float, xi_star: float = 1.0, h: float = 1e-6,
                          h_interface: float = 1e-4, rtol: float = 1e-11,
                          span: float = 1e3) -> OracleResult:
    """Two-sided shot of the profile equation in ``w = f**(m-1)``.

    The left shot starts at ``xi_star + h xi_star`` from the two-term edge
    expansion and runs to the first maximum ``xi_m`` of w.  The right shot
    starts at ``xi_0 (1 - h_interface)`` from the leading interface law and
    runs backward to ``xi_m``; ``xi_0`` is chosen so that both shots give the
    same w there.  Both directions are the stable ones for the flow; the
    remaining jump in ``w'`` at ``xi_m`` is the contact defect, which vanishes
    exactly when beta admits a dead-core profile.  The left step is halved
    once and the resulting change of ``xi_0`` is reported.

    Raises
    ------
    BlowUpError
        If the left shot has no maximum within ``span * xi_star`` or no
        interface position matches.
    """
    beta = _check_positive("beta", beta)
    xs = _check_positive("xi_star", xi_star)
    # trial interface shots far from the root may overflow; brentq only needs their sign
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        x0, xm, miss, left, right = _oracle_solve(p, beta, xs, h * xs, h_interface, rtol, span)
        x0h, *_ = _oracle_solve(p, beta, xs, 0.5 * h * xs, h_interface, rtol, span)
    return OracleResult(
        xi0_candidate=float(x0), contact_defect=abs(float(miss)), miss=float(miss),
        xi_star=xs, xi_match=xm, h_halving_delta=abs(x0h - x0) / x0,
        m=p.m, left=left, right=right,
    )


# ---------------------------------------------------------------------------
# self-similar solution and export


def self_similar_solution(prof: Profile, t, x) -> np.ndarray:
    """``u(t, x) = exp(-alpha t) f(|x| exp(beta t))`` on the broadcast grid."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    kb = prof.regime
    return np.exp(-kb.alpha * t) * prof(np.abs(x) * np.exp(kb.beta * t))


def solution_to_csv(prof: Profile, ts, xs, path) -> None:
    """Tabulate ``(t, |x|, u)`` on the product grid ``ts x xs``."""
    T, X = np.meshgrid(np.asarray(ts, float), np.abs(np.asarray(xs, float)), indexing="ij")
    U = self_similar_solution(prof, T, X)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "u"])
        for a, b, c in zip(T.ravel(), X.ravel(), U.ravel()):
            w.writerow([f"{a:.12g}", f"{b:.12g}", f"{c:.12g}"])


def profile_to_csv(prof: Profile, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["xi", "f", "dfm1"])
        for a, b, c in zip(prof.xi, prof.f, prof.dfm1):
            w.writerow([f"{a:.12g}", f"{b:.12g}", f"{c:.12g}"])


def profile_to_dict(prof: Profile, report: BoundaryReport | None = None) -> dict:
    kb = prof.regime
    return {
        "params": prof.params.as_dict(),
        "regime": {"K": kb.K, "alpha": kb.alpha, "beta": kb.beta},
        "kind": prof.kind.value,
        "normalization": prof.normalization.value,
        "xi_star": prof.xi_star,
        "xi_0": prof.xi_0,
        "tails": dict(prof.tails),
        "report": report.as_dict() if report is not None else None,
        "samples": {"xi": prof.xi.tolist(), "f": prof.f.tolist(), "dfm1": prof.dfm1.tolist()},
    }


def profile_to_json(prof: Profile, path, report: BoundaryReport | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(profile_to_dict(prof, report), fh, indent=2)
