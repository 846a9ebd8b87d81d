"""Shooting functions ``U1(K)``, ``U0(K)`` and the thresholds ``K0``, ``K_inf``, ``K*``.

``U1(K)`` is the u-coordinate where ``l1(K)`` first meets ``v = 0``, and
``U0(K)`` the u-coordinate of the last zero of v on ``l0(K)`` (the first one
met when tracing backward).  Each is either a finite crossing value above 1,
exactly 1 when the orbit converges to ``Q2`` without crossing, or infinite
when ``l0`` escapes to ``v = -inf``.  ``K*`` is the unique root of
``U0 - U1`` between ``K0`` and ``K_inf``, located by sign bisection.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .dynsys import Q2Kind, classify_q2, q2_linear_crossing, q2_thresholds
from .errors import BracketingFailure, DomainError, Inconclusive, NonMonotoneWarning
from .integrate import StopSpec, TerminationKind, Trajectory, integrate
from .manifolds import EPS_DEFAULT, seed_l0, seed_l1
from .params import KBeta, Parameters, beta_from_k, k_of_c1


class _Infinite:
    """Explicit marker for an infinite shooting value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Infinite"

    def __float__(self) -> float:
        return math.inf


Infinite = _Infinite()


class OutcomeKind(enum.Enum):
    CROSSING = "Crossing"
    CONVERGED_TO_Q2 = "ConvergedToQ2"
    BLOW_DOWN_INFINITE = "BlowDownInfinite"


@dataclass(frozen=True, eq=False)
class ShootOutcome:
    """Classified value of a shooting function.

    ``endgame`` marks crossings predicted by the linearised flow at ``Q2``
    after the orbit entered the ``conv_tol`` ball; ``certified`` is ``False``
    only for blow-downs resting on the heuristic fallback.
    """

    value: float | _Infinite
    kind: OutcomeKind
    zeta_event: float | None
    trajectory: Trajectory
    endgame: bool = False
    certified: bool = True

    @property
    def numeric(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class ShootConfig:
    """Tolerances shared by all shots."""

    eps: float = EPS_DEFAULT
    rtol: float = 1e-10
    atol: float = 1e-12
    event_tol: float = 1e-10
    conv_tol: float = 1e-6
    v_blow: float = 1e3
    u_cap: float = 1e30
    max_steps: int = 200_000
    max_span: float = 1e15
    quadratic_seed: bool = True
    endgame: bool = True

    def stop(self, blowdown: bool) -> StopSpec:
        return StopSpec(
            stop_on_vzero=True, q2=True, blowdown=blowdown,
            conv_tol=self.conv_tol, v_blow=self.v_blow, u_cap=self.u_cap,
            max_steps=self.max_steps, max_span=self.max_span,
            rtol=self.rtol, atol=self.atol, event_tol=self.event_tol,
        )

    @property
    def eps_max(self) -> float:
        return max(self.eps, EPS_DEFAULT)


def _classify(p: Parameters, K: float, tr: Trajectory, direction: int,
              cfg: ShootConfig, name: str) -> ShootOutcome:
    term = tr.termination
    if term is TerminationKind.EVENT:
        ev = tr.events[-1]
        return ShootOutcome(ev.point.u, OutcomeKind.CROSSING, ev.zeta, tr)
    if term is TerminationKind.CONVERGED_TO_Q2:
        if cfg.endgame:
            lc = q2_linear_crossing(p, K, tr.end, direction)
            if lc is not None:
                return ShootOutcome(lc.point.u, OutcomeKind.CROSSING,
                                    float(tr.zeta[-1]) + lc.dt, tr, endgame=True)
        return ShootOutcome(1.0, OutcomeKind.CONVERGED_TO_Q2, None, tr)
    if term is TerminationKind.BLOW_DOWN:
        return ShootOutcome(Infinite, OutcomeKind.BLOW_DOWN_INFINITE, None, tr,
                            certified=bool(tr.blowdown_certified))
    raise Inconclusive(f"{name}(K={K!r}) ended with {term.value} "
                       f"({tr.info.get('reason', '')})", tr)


def shoot_u1(p: Parameters, K: float, cfg: ShootConfig = ShootConfig()) -> ShootOutcome:
    """Trace ``l1(K)`` forward to its first zero of v or to ``Q2``."""
    seed = seed_l1(p, K, cfg.eps, eps_max=cfg.eps_max)
    tr = integrate(p, K, seed, cfg.stop(blowdown=False))
    return _classify(p, K, tr, +1, cfg, "U1")


def shoot_u0(p: Parameters, K: float, cfg: ShootConfig = ShootConfig()) -> ShootOutcome:
    """Trace ``l0(K)`` backward to its last zero of v, to ``Q2`` or to blow-down."""
    seed = seed_l0(p, K, cfg.eps, eps_max=cfg.eps_max, quadratic=cfg.quadratic_seed)
    tr = integrate(p, K, seed, cfg.stop(blowdown=True))
    return _classify(p, K, tr, -1, cfg, "U0")


# ---------------------------------------------------------------------------
# thresholds


class Target(enum.Enum):
    K0 = "K0"
    KINF = "KInf"
    KSTAR = "KStar"


@dataclass(frozen=True)
class ThresholdBracket:
    """Bracket ``[lo, hi]`` whose ends classify differently.

    ``rel_tol`` is the requested relative width; on return
    ``width <= rel_tol * hi``.
    """

    lo: float
    hi: float
    width: float
    target: Target
    lo_label: str
    hi_label: str
    rel_tol: float
    shots: int = 0
    info: dict = field(default_factory=dict, compare=False)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def rel_width(self) -> float:
        return self.width / self.hi


@dataclass(frozen=True)
class ScanRow:
    K: float
    kind: OutcomeKind | None
    value: float


def default_scan_grid(p: Parameters, n: int = 32) -> np.ndarray:
    """Log grid over ``[K_u/100, 100 K_u]``."""
    ku = q2_thresholds(p).K_u
    return np.geomspace(ku / 100.0, ku * 100.0, n)


def scan_u0(p: Parameters, k_grid, cfg: ShootConfig = ShootConfig()) -> list[ScanRow]:
    """Classify ``U0`` on a grid; inconclusive shots are kept with ``kind=None``."""
    rows = []
    for K in k_grid:
        try:
            o = shoot_u0(p, float(K), cfg)
            rows.append(ScanRow(float(K), o.kind, o.numeric))
        except Inconclusive:
            rows.append(ScanRow(float(K), None, math.nan))
    return rows


def _find_flip(rows: list[ScanRow], lo_kind: OutcomeKind, hi_kind: OutcomeKind):
    known = [r for r in rows if r.kind is not None]
    for a, b in zip(known, known[1:]):
        if a.kind is lo_kind and b.kind is hi_kind:
            return a.K, b.K
    return None


def _scan_until_flip(p, cfg, scan, lo_kind, hi_kind, widen: int = 3):
    rows = list(scan) if scan is not None else scan_u0(p, default_scan_grid(p), cfg)
    shots = 0 if scan is not None else len(rows)
    for _ in range(widen + 1):
        pair = _find_flip(rows, lo_kind, hi_kind)
        if pair is not None:
            return pair, rows, shots
        known = [r for r in rows if r.kind is not None]
        if not known:
            break
        # widen on the side where the missing classification should lie
        ks = [r.K for r in rows]
        kmin, kmax = min(ks), max(ks)
        extra = []
        if all(r.kind is not lo_kind for r in known):
            extra += list(np.geomspace(kmin / 100.0, kmin, 9)[:-1])
        if all(r.kind is not hi_kind for r in known) or known[-1].kind is lo_kind:
            extra += list(np.geomspace(kmax, kmax * 100.0, 9)[1:])
        if not extra:
            break
        new = scan_u0(p, extra, cfg)
        shots += len(new)
        rows = sorted(rows + new, key=lambda r: r.K)
    raise BracketingFailure(
        f"no {lo_kind.value} -> {hi_kind.value} change found in the U0 scan", rows)


def _bisect(classify: Callable[[float], bool], lo: float, hi: float, rel_tol: float,
            max_iter: int = 200) -> tuple[float, float, int, list[tuple[float, bool]]]:
    """Shrink ``[lo, hi]`` with ``classify(lo) is True`` and ``classify(hi) is False``."""
    probes = []
    n = 0
    while hi - lo > rel_tol * hi and n < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        side = classify(mid)
        probes.append((mid, side))
        n += 1
        if side:
            lo = mid
        else:
            hi = mid
    return lo, hi, n, probes


def _bracket_classifier(p, cfg, lo_kind):
    def f(K: float) -> bool:
        try:
            return shoot_u0(p, K, cfg).kind is lo_kind
        except Inconclusive as exc:
            raise BracketingFailure(f"inconclusive shot inside bracket at K={K!r}: {exc}") from exc
    return f


def find_k0(p: Parameters, tol: float = 1e-8, cfg: ShootConfig = ShootConfig(),
            scan: list[ScanRow] | None = None) -> ThresholdBracket:
    """Bracket ``K0``, the end of the plateau ``U0 = 1``.

    ``tol`` is the relative bracket width.  ``info['k0_le_ku']`` records
    whether the bracket is compatible with ``K0 <= K_u``.
    """
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    (lo, hi), rows, shots = _scan_until_flip(
        p, cfg, scan, OutcomeKind.CONVERGED_TO_Q2, OutcomeKind.CROSSING)
    lo, hi, n, _ = _bisect(_bracket_classifier(p, cfg, OutcomeKind.CONVERGED_TO_Q2), lo, hi, tol)
    ku = q2_thresholds(p).K_u
    return ThresholdBracket(
        lo=lo, hi=hi, width=hi - lo, target=Target.K0,
        lo_label=OutcomeKind.CONVERGED_TO_Q2.value, hi_label=OutcomeKind.CROSSING.value,
        rel_tol=tol, shots=shots + n,
        info={"K_u": ku, "k0_le_ku": lo <= ku, "scan": rows},
    )


def find_kinf(p: Parameters, tol: float = 1e-8, cfg: ShootConfig = ShootConfig(),
              scan: list[ScanRow] | None = None) -> ThresholdBracket:
    """Bracket ``K_inf``, the end of the range where ``U0`` is finite."""
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    (lo, hi), rows, shots = _scan_until_flip(
        p, cfg, scan, OutcomeKind.CROSSING, OutcomeKind.BLOW_DOWN_INFINITE)
    lo, hi, n, _ = _bisect(_bracket_classifier(p, cfg, OutcomeKind.CROSSING), lo, hi, tol)
    return ThresholdBracket(
        lo=lo, hi=hi, width=hi - lo, target=Target.KINF,
        lo_label=OutcomeKind.CROSSING.value, hi_label=OutcomeKind.BLOW_DOWN_INFINITE.value,
        rel_tol=tol, shots=shots + n, info={"scan": rows},
    )


def mismatch(p: Parameters, K: float, cfg: ShootConfig = ShootConfig()) -> tuple[float, ShootOutcome, ShootOutcome]:
    """``D(K) = U0(K) - U1(K)`` with both outcomes (``+inf`` on blow-down)."""
    o0 = shoot_u0(p, K, cfg)
    o1 = shoot_u1(p, K, cfg)
    return o0.numeric - o1.numeric, o0, o1


def find_kstar(p: Parameters, tol: float = 1e-8, cfg: ShootConfig = ShootConfig(),
               k0: ThresholdBracket | None = None, kinf: ThresholdBracket | None = None,
               inset: float = 10.0) -> tuple[ThresholdBracket, KBeta]:
    """Bracket the root ``K*`` of ``U0 - U1`` on ``(K0 + delta, K_inf - delta)``.

    ``delta`` is ``inset`` times the respective threshold bracket width.
    Every probe is recorded; a sign pattern that is not monotone in K
    triggers :class:`NonMonotoneWarning`.
    """
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    if k0 is None or kinf is None:
        scan = scan_u0(p, default_scan_grid(p), cfg)
        k0 = k0 or find_k0(p, tol, cfg, scan)
        kinf = kinf or find_kinf(p, tol, cfg, scan)
    lo = k0.hi + inset * k0.width
    hi = kinf.lo - inset * kinf.width
    if not lo < hi:
        raise BracketingFailure(f"K0 and K_inf brackets overlap: {k0.hi} >= {kinf.lo}")
    d_lo, o0_lo, o1_lo = mismatch(p, lo, cfg)
    d_hi, o0_hi, o1_hi = mismatch(p, hi, cfg)
    if not (d_lo < 0.0 < d_hi):
        raise BracketingFailure(f"U0 - U1 does not change sign: D({lo})={d_lo}, D({hi})={d_hi}")
    record: dict[float, float] = {lo: d_lo, hi: d_hi}
    ends = {lo: (o0_lo, o1_lo), hi: (o0_hi, o1_hi)}

    def classify(K: float) -> bool:
        try:
            d, o0, o1 = mismatch(p, K, cfg)
        except Inconclusive as exc:
            raise BracketingFailure(f"inconclusive shot at K={K!r}: {exc}") from exc
        record[K] = d
        ends[K] = (o0, o1)
        return d < 0.0

    a, b, n, _ = _bisect(classify, lo, hi, tol)
    ks = sorted(record)
    signs = [record[k] >= 0.0 for k in ks]
    monotone = all(not (s and not t) for s, t in zip(signs, signs[1:]))
    if not monotone:
        warnings.warn("U0 - U1 sign pattern is not monotone on the probe grid", NonMonotoneWarning)
    info = {
        "D_lo": record[a], "D_hi": record[b],
        "U0_lo": ends[a][0].numeric, "U1_lo": ends[a][1].numeric,
        "U0_hi": ends[b][0].numeric, "U1_hi": ends[b][1].numeric,
        "monotone": monotone, "probes": [(k, record[k]) for k in ks],
        "search_interval": (lo, hi),
    }
    br = ThresholdBracket(
        lo=a, hi=b, width=b - a, target=Target.KSTAR, lo_label="D<0", hi_label="D>=0",
        rel_tol=tol, shots=2 * (n + 2), info=info,
    )
    return br, beta_from_k(p, br.mid)


# ---------------------------------------------------------------------------
# sweeps and structural checks


@dataclass(frozen=True, eq=False)
class SweepRow:
    K: float
    u0: ShootOutcome | Inconclusive
    u1: ShootOutcome | Inconclusive
    q2_kind: Q2Kind


def sweep(p: Parameters, k_grid, cfg: ShootConfig = ShootConfig(),
          keep_trajectories: bool = False) -> list[SweepRow]:
    """Both shooting functions and the type of ``Q2`` on an ascending grid."""
    ks = [float(k) for k in k_grid]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise DomainError("k_grid must be strictly ascending")
    rows = []
    for K in ks:
        outs = []
        for fn in (shoot_u0, shoot_u1):
            try:
                o = fn(p, K, cfg)
                if not keep_trajectories:
                    o = replace(o, trajectory=None)
            except Inconclusive as exc:
                exc.trajectory = None
                o = exc
            outs.append(o)
        rows.append(SweepRow(K, outs[0], outs[1], classify_q2(p, K).kind))
    return rows


def _fmt_outcome(o) -> tuple[str, str]:
    if isinstance(o, Inconclusive):
        return "Inconclusive", ""
    if o.value is Infinite:
        return o.kind.value, "inf"
    return o.kind.value, f"{o.numeric:.12g}"


def sweep_to_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", "U0_kind", "U0_value", "U1_kind", "U1_value", "Q2_kind"])
        for r in rows:
            k0, v0 = _fmt_outcome(r.u0)
            k1, v1 = _fmt_outcome(r.u1)
            w.writerow([f"{r.K:.12g}", k0, v0, k1, v1, r.q2_kind.value])


def triangle_threshold(p: Parameters) -> float:
    """``K_star`` below which ``c1 - 1/nu - c2 - (2 nu - 1) > 0``.

    Below it the triangle ``{0 < u < 1, u - 1 <= v <= 0}`` is negatively
    invariant, so ``l0`` connects ``Q2`` to ``Q0``.
    """
    return k_of_c1(p, 1.0 / p.nu + p.c2 + 2.0 * p.nu - 1.0)


def triangle_inflow(p: Parameters, K: float, n: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Outward flux of ``S_K`` on the two free edges of the triangle.

    Returns ``(top, hyp)``: ``S2(u, 0)`` on the top edge and
    ``<S(u, u-1), (1, -1)>`` on the hypotenuse at ``n`` interior abscissae.
    Negative invariance needs both strictly positive.
    """
    from .dynsys import eval_S  # local to keep the module import light

    us = np.linspace(0.0, 1.0, n + 2)[1:-1]
    top = np.array([eval_S(p, K, (u, 0.0)).v for u in us])
    hyp = np.array([(lambda s: s.u - s.v)(eval_S(p, K, (u, u - 1.0))) for u in us])
    return top, hyp


def branch_curve(o: ShootOutcome) -> tuple[np.ndarray, np.ndarray]:
    """The monotone-in-u branch of a shot as ``(u, v)`` arrays sorted by u.

    For ``l1`` this is the arc from ``Q1`` to the first zero of v; for ``l0``
    the arc from the last zero of v to ``Q0``.  Converged or blown-down shots
    return the whole traced arc, on which u is still monotone.
    """
    tr = o.trajectory
    u, v = tr.u, tr.v
    order = np.argsort(u)
    return u[order], v[order]


def barrier_gaps(p: Parameters, K1: float, K2: float, which: str,
                 cfg: ShootConfig = ShootConfig(), n: int = 100) -> np.ndarray:
    """``v_K1(u) - v_K2(u)`` at ``n`` matched abscissae, for ``K1 < K2``.

    Strictly positive gaps mean the ``K2`` curve lies below the ``K1`` curve.
    """
    fn = shoot_u1 if which == "l1" else shoot_u0
    ua, va = branch_curve(fn(p, K1, cfg))
    ub, vb = branch_curve(fn(p, K2, cfg))
    lo = max(ua[0], ub[0])
    hi = min(ua[-1], ub[-1])
    us = np.geomspace(lo, hi, n + 2)[1:-1]
    return np.interp(us, ua, va) - np.interp(us, ub, vb)
