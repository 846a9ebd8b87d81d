"""Adaptive integration of the (u, v) system with event detection.

The orbit equation ``d(u, v)/dzeta = S_K(u, v)`` is integrated in the
reparametrised time ``tau`` with ``dzeta/dtau = 1/(1 + u_+**nu)``.  The
positive factor leaves the orbits unchanged, keeps steps bounded when ``u``
escapes to infinity in finite zeta, and zeta itself is carried as a third
component.  Steps are taken by LSODA, which switches to a stiff method on the
slow centre-manifold approach to ``Q0`` (the transverse contraction there is
``c1**2 nu / u`` times faster than the motion along the manifold).
"""

from __future__ import annotations

import csv
import enum
import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import LSODA
from scipy.optimize import brentq

from .dynsys import PhasePoint, _eval_S, _jac_S
from .errors import RangeError
from .manifolds import Seed
from .params import KBeta, Parameters, beta_from_k, regime_constants


class EventKind(enum.Enum):
    V_ZERO = "VZero"
    U_ZERO = "UZero"


class TerminationKind(enum.Enum):
    EVENT = "Event"
    CONVERGED_TO_Q2 = "ConvergedToQ2"
    CONVERGED_TO_Q0 = "ConvergedToQ0"
    BLOW_DOWN = "BlowDown"
    SPAN_EXHAUSTED = "SpanExhausted"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    zeta: float
    point: PhasePoint


@dataclass(frozen=True)
class StopSpec:
    """Which conditions terminate an integration, and the tolerances used.

    Attributes
    ----------
    stop_on_vzero, stop_on_uzero : bool
        Terminate at the first event of that kind (after the grace radius).
    q2, q0 : bool
        Terminate on convergence to ``Q2`` (distance below ``conv_tol`` and
        smaller than ``window`` samples earlier) or to ``Q0`` (``q0_tol``).
    blowdown : bool
        Terminate when ``v < -v_blow``, v still decreases along the
        integration direction and the escape is certified by
        :func:`blowdown_certificate`.
    grace_radius : float or None
        Events are ignored until the orbit has moved this far from its seed;
        ``None`` means twice the seed epsilon.
    """

    stop_on_vzero: bool = True
    stop_on_uzero: bool = False
    q2: bool = True
    q0: bool = False
    blowdown: bool = False
    conv_tol: float = 1e-6
    q0_tol: float = 1e-9
    window: int = 8
    v_blow: float = 1e3
    u_cap: float = 1e30
    max_span: float = 1e15
    max_steps: int = 200_000
    grace_radius: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    event_tol: float = 1e-10


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Event-annotated orbit sample; ``zeta`` is strictly monotone.

    ``direction`` is +1 when zeta increases along the samples and -1 when it
    decreases.  ``blowdown_certified`` is ``True`` when a ``BlowDown``
    termination was certified, ``False`` when it rests on the heuristic
    fallback and ``None`` otherwise.
    """

    regime: KBeta
    params: Parameters
    direction: int
    zeta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    events: tuple[Event, ...]
    termination: TerminationKind
    blowdown_certified: bool | None = None
    steps: int = 0
    info: dict = field(default_factory=dict)

    @property
    def K(self) -> float:
        return self.regime.K

    @property
    def samples(self) -> list[tuple[float, PhasePoint]]:
        return [(float(z), PhasePoint(float(a), float(b)))
                for z, a, b in zip(self.zeta, self.u, self.v)]

    @property
    def end(self) -> PhasePoint:
        return PhasePoint(float(self.u[-1]), float(self.v[-1]))

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        """``(du/dzeta, dv/dzeta)`` at every sample."""
        c1 = regime_constants(self.params, self.K).c1
        d = np.array([_eval_S(self.params, c1, a, b) for a, b in zip(self.u, self.v)])
        return d[:, 0], d[:, 1]


# ---------------------------------------------------------------------------
# blow-down certificate


def blowdown_certificate(p: Parameters, c1: float, u: float, v: float,
                         u_max: float = 1e40, n_grid: int = 64) -> bool:
    """Certify that backward integration from ``(u, v)`` escapes to ``v = -inf``.

    With ``P = v / u**nu`` and ``ds = u**nu dzeta`` the system gives
    ``dP/ds = H(P, u)`` where

        H = -(m/(m-1)) P**2 - (c2 - c1 u**-nu) P - 1 + u**(1-2 nu).

    Let ``P2(u)`` be the upper root of ``H(., u)``.  If ``P2`` exists, is
    negative and nondecreasing on ``[u, inf)``, then ``{P < P2(u)}`` is
    invariant in backward time, along it u increases, and ``P`` stays
    bounded away from zero, so ``v = P u**nu`` reaches ``-inf`` at finite
    zeta.  Existence and monotonicity are checked on a geometric grid and
    at the limit ``u = inf`` (where ``H`` reduces to the quadratic with roots
    at the two escape slopes).
    """
    if u <= 1.0 or v >= 0.0:
        return False
    A = p.m / (p.m - 1.0)
    nu = p.nu

    def upper_root(w: float) -> float | None:
        B = p.c2 - c1 * w ** (-nu)
        C = 1.0 - w ** (1.0 - 2.0 * nu)
        disc = B * B - 4.0 * A * C
        if disc <= 0.0:
            return None
        r = (-B + math.sqrt(disc)) / (2.0 * A)
        return r if r < 0.0 else None

    if p.c2 * p.c2 - 4.0 * A <= 0.0:
        return False
    P = v / u ** nu
    p2 = upper_root(u)
    if p2 is None or P >= p2:
        return False
    for w in np.geomspace(u, max(u_max, 10.0 * u), n_grid):
        r = upper_root(float(w))
        if r is None:
            return False
        # dP2/du >= 0 iff dH/du >= 0 at the root
        if nu * c1 * (-r) <= (2.0 * nu - 1.0) * w ** (1.0 - nu):
            return False
    return True


def blowdown_certifiable(p: Parameters) -> bool:
    """Whether the escape slopes are distinct, which the certificate needs.

    Fails exactly in dimension ``N = 2``, where they coincide.
    """
    return p.c2 * p.c2 - 4.0 * p.m / (p.m - 1.0) > 1e-12


# ---------------------------------------------------------------------------
# the integrator


def _reparam_field(p: Parameters, c1: float, direction: int):
    nu, m, c2 = p.nu, p.m, p.c2
    inv = 1.0 / (m - 1.0)
    d = float(direction)

    def fun(t, y):
        u, v = y[0], y[1]
        un = math.exp(nu * math.log(u)) if u > 0.0 else 0.0
        g = d / (1.0 + un)
        return np.array([u * v / nu * g,
                         (c1 * v - v * v * inv + u - un * un - c2 * v * un) * g,
                         g])

    def jac(t, y):
        u, v = y[0], y[1]
        if u > 0.0:
            lu = math.log(u)
            un = math.exp(nu * lu)
            un1 = math.exp((nu - 1.0) * lu)
            u2n1 = un * un1
        else:
            un = un1 = u2n1 = 0.0
        g = 1.0 / (1.0 + un)
        dg = -nu * un1 * g * g
        s1 = u * v / nu
        s2 = c1 * v - v * v * inv + u - un * un - c2 * v * un
        return d * np.array([
            [v / nu * g + s1 * dg, u / nu * g, 0.0],
            [(1.0 - 2.0 * nu * u2n1 - nu * c2 * v * un1) * g + s2 * dg,
             (c1 - 2.0 * v * inv - c2 * un) * g, 0.0],
            [dg, 0.0, 0.0],
        ])

    return fun, jac


def integrate(p: Parameters, K: float, seed: Seed, stop: StopSpec = StopSpec()) -> Trajectory:
    """Integrate from ``seed`` in its time direction until a stop condition holds.

    Never raises on numerical trouble: step-size collapse is reported as a
    ``StepUnderflow`` termination.
    """
    rc = regime_constants(p, K)
    c1 = rc.c1
    direction = int(seed.direction)
    fun, jac = _reparam_field(p, c1, direction)
    u0, v0 = float(seed.point[0]), float(seed.point[1])
    grace = stop.grace_radius if stop.grace_radius is not None else 2.0 * seed.epsilon
    q2_check = stop.q2
    certifiable = blowdown_certifiable(p)

    solver = LSODA(fun, 0.0, np.array([u0, v0, 0.0]), 1e300,
                   rtol=stop.rtol, atol=stop.atol, jac=jac)

    zs, us, vs = [0.0], [u0], [v0]
    dists = [math.hypot(u0 - 1.0, v0)]
    events: list[Event] = []
    termination = TerminationKind.SPAN_EXHAUSTED
    certified: bool | None = None
    graced = False
    steps = 0
    info: dict = {}

    def locate(idx: int, t_old: float, t_new: float, dense) -> tuple[float, np.ndarray]:
        f = lambda t: dense(t)[idx]
        t_root = brentq(f, t_old, t_new, xtol=stop.event_tol * 1e-2, rtol=1e-15, maxiter=200)
        y = dense(t_root)
        y[idx] = 0.0
        return t_root, y

    # Near a finite-zeta escape the zeta increments drop below the floating
    # point resolution of zeta.  Such steps are still taken and checked, but
    # not stored, so the samples stay strictly monotone in zeta.
    prev_u, prev_v = u0, v0
    stalled = 0
    while True:
        if steps >= stop.max_steps:
            termination = TerminationKind.SPAN_EXHAUSTED
            info["reason"] = "max_steps"
            break
        if solver.status != "running":
            termination = TerminationKind.SPAN_EXHAUSTED
            info["reason"] = "t_bound"
            break
        t_old = solver.t
        msg = solver.step()
        steps += 1
        if solver.status == "failed":
            termination = TerminationKind.STEP_UNDERFLOW
            info["reason"] = str(msg)
            break
        y = solver.y
        u, v, z = float(y[0]), float(y[1]), float(y[2])
        if not (math.isfinite(u) and math.isfinite(v) and math.isfinite(z)):
            termination = TerminationKind.STEP_UNDERFLOW
            info["reason"] = "non-finite state"
            break

        if not graced:
            graced = math.hypot(prev_u - u0, prev_v - v0) > grace

        hit = None
        if graced:
            if (prev_v > 0.0) != (v > 0.0) or v == 0.0:
                hit = (EventKind.V_ZERO, 1, stop.stop_on_vzero)
            elif (prev_u > 0.0) != (u > 0.0) or u == 0.0:
                hit = (EventKind.U_ZERO, 0, stop.stop_on_uzero)
        prev_u, prev_v = u, v
        if hit is not None:
            kind, idx, terminal = hit
            t_ev, y_ev = locate(idx, t_old, solver.t, solver.dense_output())
            ev = Event(kind, float(y_ev[2]), PhasePoint(float(y_ev[0]), float(y_ev[1])))
            events.append(ev)
            if terminal:
                if (ev.zeta - zs[-1]) * direction > 0.0:
                    zs.append(ev.zeta); us.append(ev.point.u); vs.append(ev.point.v)
                else:
                    us[-1], vs[-1] = ev.point.u, ev.point.v
                    info["zeta_stalled"] = True
                termination = TerminationKind.EVENT
                break

        if (z - zs[-1]) * direction > 0.0:
            zs.append(z); us.append(u); vs.append(v)
            stalled = 0
        else:
            stalled += 1
            info["zeta_stalled"] = True
            if stalled > 5000:
                termination = TerminationKind.SPAN_EXHAUSTED
                info["reason"] = "stalled"
                break
        dist = math.hypot(u - 1.0, v)
        dists.append(dist)

        if q2_check and dist < stop.conv_tol and len(dists) > stop.window \
                and dist < dists[-1 - stop.window]:
            termination = TerminationKind.CONVERGED_TO_Q2
            break
        if stop.q0 and math.hypot(u, v) < stop.q0_tol:
            termination = TerminationKind.CONVERGED_TO_Q0
            break
        if stop.blowdown and v < -stop.v_blow:
            s2 = _eval_S(p, c1, u, v).v
            if s2 * direction < 0.0:
                if certifiable:
                    if blowdown_certificate(p, c1, u, v):
                        termination = TerminationKind.BLOW_DOWN
                        certified = True
                        break
                elif v < -stop.v_blow ** 2 and u > stop.v_blow:
                    termination = TerminationKind.BLOW_DOWN
                    certified = False
                    break
        if u > stop.u_cap or abs(z) > stop.max_span:
            termination = TerminationKind.SPAN_EXHAUSTED
            info["reason"] = "u_cap" if u > stop.u_cap else "max_span"
            break

    return Trajectory(
        regime=beta_from_k(p, K), params=p, direction=direction,
        zeta=np.asarray(zs), u=np.asarray(us), v=np.asarray(vs),
        events=tuple(events), termination=termination,
        blowdown_certified=certified, steps=steps, info=info,
    )


# ---------------------------------------------------------------------------
# dense evaluation


def _hermite(t: Trajectory, i: int, zeta: float, c1: float) -> PhasePoint:
    """Quintic Hermite on one step from values, ``S`` and ``DS . S`` at both ends."""
    z0, z1 = t.zeta[i], t.zeta[i + 1]
    h = z1 - z0
    s = (zeta - z0) / h
    p = t.params
    y0 = np.array([t.u[i], t.v[i]])
    y1 = np.array([t.u[i + 1], t.v[i + 1]])
    d0 = np.array(_eval_S(p, c1, *y0))
    d1 = np.array(_eval_S(p, c1, *y1))
    a0 = _jac_S(p, c1, *y0) @ d0
    a1 = _jac_S(p, c1, *y1) @ d1
    s2, s3 = s * s, s * s * s
    h0 = 1 - 10 * s3 + 15 * s2 * s2 - 6 * s3 * s2
    h1 = s - 6 * s3 + 8 * s2 * s2 - 3 * s3 * s2
    h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s2 * s2 - 0.5 * s3 * s2
    h3 = 10 * s3 - 15 * s2 * s2 + 6 * s3 * s2
    h4 = -4 * s3 + 7 * s2 * s2 - 3 * s3 * s2
    h5 = 0.5 * s3 - s2 * s2 + 0.5 * s3 * s2
    y = h0 * y0 + h1 * h * d0 + h2 * h * h * a0 + h3 * y1 + h4 * h * d1 + h5 * h * h * a1
    return PhasePoint(float(y[0]), float(y[1]))


def interpolate(t: Trajectory, zeta: float) -> PhasePoint:
    """Quintic Hermite value at ``zeta``, exact at the sample nodes."""
    zeta = float(zeta)
    zz = t.zeta if t.direction > 0 else -t.zeta
    key = zeta if t.direction > 0 else -zeta
    if not (zz[0] <= key <= zz[-1]):
        raise RangeError(f"zeta={zeta} outside [{t.zeta.min()}, {t.zeta.max()}]")
    i = bisect_left(zz, key)
    if i < len(zz) and zz[i] == key:
        return PhasePoint(float(t.u[i]), float(t.v[i]))
    c1 = regime_constants(t.params, t.K).c1
    return _hermite(t, i - 1, zeta, c1)


# ---------------------------------------------------------------------------
# serialisation


def trajectory_to_csv(t: Trajectory, path) -> None:
    """Write columns ``zeta, u, v`` with 12 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["zeta", "u", "v"])
        for z, a, b in zip(t.zeta, t.u, t.v):
            w.writerow([f"{z:.12g}", f"{a:.12g}", f"{b:.12g}"])


def trajectory_to_dict(t: Trajectory) -> dict:
    """JSON-ready metadata: regime, events and termination (no samples)."""
    return {
        "K": t.K, "alpha": t.regime.alpha, "beta": t.regime.beta,
        "direction": t.direction,
        "termination": t.termination.value,
        "blowdown_certified": t.blowdown_certified,
        "n_samples": int(len(t.zeta)),
        "events": [{"kind": e.kind.value, "zeta": e.zeta, "u": e.point.u, "v": e.point.v}
                   for e in t.events],
    }


def trajectory_to_json(t: Trajectory, path) -> None:
    with open(path, "w") as fh:
        json.dump(trajectory_to_dict(t), fh, indent=2)
        fh.write("\n")

