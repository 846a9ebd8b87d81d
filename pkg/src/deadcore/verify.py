"""End-to-end solve of one regime and its certificate suite.

:func:`solve_regime` runs the whole pipeline (thresholds, ``K*``, sweep,
dead-core and origin profiles, physical oracle) and returns a
:class:`SolvedBundle`; :func:`certify_regime` turns the bundle into an
ordered list of :class:`Certificate` records with stable names.
"""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dynsys import q2_thresholds
from .errors import DeadCoreError, Inconclusive
from .params import KBeta, Parameters, beta_from_k, k_from_beta
from .profile import (BoundaryReport, OracleResult, Profile, ode_residual, ode_residual_profile,
                      oracle_shoot_physical, reconstruct_dead_core, reconstruct_origin, rescale,
                      self_similar_solution, trace_origin_orbit)
from .shoot import (Infinite, ShootConfig, ShootOutcome, SweepRow, ThresholdBracket,
                    barrier_gaps, default_scan_grid, find_k0, find_kinf, find_kstar, scan_u0,
                    shoot_u0, shoot_u1, sweep)


class Status(enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    SKIPPED = "Skipped"


@dataclass(frozen=True)
class Certificate:
    """One deterministic check with its numbers.

    ``Pass`` implies ``|measured - expected| <= tolerance`` whenever all
    three are present.
    """

    name: str
    status: Status
    measured: float | None = None
    expected: float | None = None
    tolerance: float | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status.value, "measured": self.measured,
                "expected": self.expected, "tolerance": self.tolerance, "detail": self.detail}


@dataclass(frozen=True)
class CertTolerances:
    """Tolerances of the certificate suite (relative unless noted)."""

    bracket: float = 1e-8
    junction: float = 1e-6
    left_slope: float = 0.01
    left_exponent: float = 0.02
    interface_coeff: float = 0.02
    interface_exponent: float = 0.02
    origin_coeff: float = 0.01
    origin_exponent: float = 0.02
    residual: float = 1e-3
    residual_rescaled: float = 2e-3
    oracle_defect: float = 1e-3
    oracle_ratio: float = 0.005
    cross_path: float = 0.005
    richardson: float = 1e-6
    monotone_margin: float = 1e-6


@dataclass(frozen=True, eq=False)
class SolvedBundle:
    """Everything the certificate suite reads."""

    params: Parameters
    cfg: ShootConfig
    tol: float
    k0: ThresholdBracket
    kinf: ThresholdBracket
    kstar: ThresholdBracket
    regime: KBeta
    beta0: KBeta
    u1: ShootOutcome
    u0: ShootOutcome
    sweep: list[SweepRow]
    dead_core: Profile
    dead_core_report: BoundaryReport
    origin_regime: KBeta
    origin: Profile
    origin_report: BoundaryReport
    oracle: OracleResult | None
    oracle_off: OracleResult | DeadCoreError | None
    timings: dict = field(default_factory=dict)

    @property
    def beta_star(self) -> float:
        return self.regime.beta


def solve_regime(p: Parameters, tol: float = 1e-8, cfg: ShootConfig = ShootConfig(),
                 sweep_points: int = 32, origin_beta_factor: float = 2.0,
                 junction_tol: float = 1e-6, oracle: bool = True,
                 oracle_offset: float = 1.1) -> SolvedBundle:
    """Run the full pipeline for one regime."""
    t = {}
    t0 = time.perf_counter()
    scan = scan_u0(p, default_scan_grid(p), cfg)
    k0 = find_k0(p, tol, cfg, scan)
    kinf = find_kinf(p, tol, cfg, scan)
    kstar, kb = find_kstar(p, tol, cfg, k0, kinf)
    t["thresholds"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    o1 = shoot_u1(p, kb.K, cfg)
    o0 = shoot_u0(p, kb.K, cfg)
    prof = reconstruct_dead_core(p, kb, o1.trajectory, o0.trajectory, junction_tol=junction_tol)
    rep = ode_residual(p, kb, prof)
    beta0 = beta_from_k(p, k0.mid)
    kbo = k_from_beta(p, origin_beta_factor * beta0.beta)
    l0o = trace_origin_orbit(p, kbo.K, eps=cfg.eps, rtol=cfg.rtol, atol=cfg.atol)
    prof_o = reconstruct_origin(p, kbo, l0o, k0_hi=k0.hi)
    rep_o = ode_residual(p, kbo, prof_o)
    t["profiles"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    grid = np.geomspace(k0.hi, kinf.lo, sweep_points + 2)[1:-1]
    rows = sweep(p, grid, cfg)
    t["sweep"] = time.perf_counter() - t0

    orc = off = None
    if oracle:
        t0 = time.perf_counter()
        orc = oracle_shoot_physical(p, kb.beta)
        try:
            off = oracle_shoot_physical(p, oracle_offset * kb.beta)
        except DeadCoreError as exc:
            off = exc
        t["oracle"] = time.perf_counter() - t0
    return SolvedBundle(
        params=p, cfg=cfg, tol=tol, k0=k0, kinf=kinf, kstar=kstar, regime=kb, beta0=beta0,
        u1=o1, u0=o0, sweep=rows, dead_core=prof, dead_core_report=rep,
        origin_regime=kbo, origin=prof_o, origin_report=rep_o,
        oracle=orc, oracle_off=off, timings=t,
    )


# ---------------------------------------------------------------------------
# certificates


def check_close(name: str, measured: float, expected: float, tol: float, rel: bool = True,
                detail: str = "") -> Certificate:
    bound = tol * abs(expected) if rel else tol
    ok = math.isfinite(measured) and abs(measured - expected) <= bound
    return Certificate(name, Status.PASS if ok else Status.FAIL, float(measured), float(expected),
                       float(bound), detail)


def check_flag(name: str, ok: bool, measured: float | None = None, detail: str = "") -> Certificate:
    return Certificate(name, Status.PASS if ok else Status.FAIL,
                       None if measured is None else float(measured), None, None, detail)


def _monotone_violations(ks, vals, sign: int, margin: float) -> tuple[int, int]:
    """Count order violations of ``sign * vals`` along K (weak and strict)."""
    weak = strict = 0
    for a, b in zip(vals, vals[1:]):
        if a is None or b is None or (math.isinf(a) and a == b):
            continue
        d = sign * (b - a)
        if d < 0.0:
            weak += 1
        if min(a, b) > 1.0 + margin and not d > 0.0:
            strict += 1
    return weak, strict


def _sweep_values(rows: list[SweepRow], which: str) -> list[float | None]:
    out = []
    for r in rows:
        o = getattr(r, which)
        if isinstance(o, Inconclusive):
            out.append(None)
        else:
            out.append(math.inf if o.value is Infinite else o.numeric)
    return out


def certify_regime(p: Parameters, b: SolvedBundle,
                   tol: CertTolerances = CertTolerances()) -> list[Certificate]:
    """Deterministic, ordered certificate list for a solved regime."""
    c: list[Certificate] = []
    th = q2_thresholds(p)

    # thresholds
    c.append(check_flag("thresholds.order.K0<Kstar", b.k0.hi < b.kstar.lo, b.kstar.lo - b.k0.hi,
                        f"K0 bracket [{b.k0.lo!r}, {b.k0.hi!r}], K* bracket [{b.kstar.lo!r}, {b.kstar.hi!r}]"))
    c.append(check_flag("thresholds.order.Kstar<Kinf", b.kstar.hi < b.kinf.lo, b.kinf.lo - b.kstar.hi,
                        f"K_inf bracket [{b.kinf.lo!r}, {b.kinf.hi!r}]"))
    c.append(Certificate("thresholds.K0<=K_u", Status.PASS if b.k0.lo <= th.K_u else Status.FAIL,
                         b.k0.lo, th.K_u, None,
                         f"K0 bracket upper end {b.k0.hi!r}; equality with K_u is not excluded"))
    for name, br in (("K0", b.k0), ("Kinf", b.kinf), ("Kstar", b.kstar)):
        c.append(check_close(f"thresholds.width.{name}", br.rel_width, 0.0, tol.bracket, rel=False,
                             detail="relative bracket width"))

    # exponents
    c.append(check_flag("beta.order.beta_star<beta0", b.regime.beta < b.beta0.beta, b.regime.beta,
                        f"beta0 = {b.beta0.beta!r} at the K0 midpoint"))
    c.append(Certificate("beta.order.beta_upper<beta_star", Status.SKIPPED,
                         detail="the lower bound comes from the radially non-increasing profile "
                                "with f(0) = 1, which is not constructed here"))

    # junction at K*
    u1, u0 = b.u1.numeric, b.u0.numeric
    c.append(check_close("shooting.junction", u0, u1, tol.junction,
                         detail="U0(K*) against U1(K*)"))

    # crossing values and sweep monotonicity
    ks = [r.K for r in b.sweep]
    v1 = _sweep_values(b.sweep, "u1")
    v0 = _sweep_values(b.sweep, "u0")
    n_inc = sum(v is None for v in v0 + v1)
    c.append(check_close("sweep.inconclusive", n_inc, 0, 0.0, rel=False,
                         detail=f"{len(ks)} grid points in (K0, K_inf)"))
    w1, s1 = _monotone_violations(ks, v1, -1, tol.monotone_margin)
    w0, s0 = _monotone_violations(ks, v0, +1, tol.monotone_margin)
    c.append(check_close("sweep.monotone.U1", w1 + s1, 0, 0.0, rel=False,
                         detail=f"nonincreasing; {w1} weak and {s1} strict violations"))
    c.append(check_close("sweep.monotone.U0", w0 + s0, 0, 0.0, rel=False,
                         detail=f"nondecreasing; {w0} weak and {s0} strict violations"))
    fin1 = [v for v in v1 if v is not None]
    fin0 = [v for v in v0 if v is not None and math.isfinite(v)]
    c.append(check_flag("crossing.U1>=1", bool(fin1) and min(fin1) >= 1.0, min(fin1, default=math.nan),
                        "every l1 crossing lies at u >= 1"))
    c.append(check_flag("crossing.U0>=1", bool(fin0) and min(fin0) >= 1.0, min(fin0, default=math.nan),
                        "every finite l0 crossing lies at u >= 1"))
    c.append(check_flag("crossing.U1(Kstar)>1", u1 > 1.0, u1, "a dead-core connection crosses beyond Q2"))

    # barrier ordering between two interior parameters
    ka, kb_ = b.sweep[len(ks) // 4].K, b.sweep[(3 * len(ks)) // 4].K
    for which in ("l1", "l0"):
        detail = f"v_K1 - v_K2 > 0 on the matched branch for K1={ka!r} < K2={kb_!r}"
        try:
            g = barrier_gaps(p, ka, kb_, which, b.cfg)
            ok, gmin = bool(np.all(g > 0.0)), float(g.min())
        except DeadCoreError as exc:
            ok, gmin, detail = False, math.nan, f"{detail}; shot failed: {exc}"
        c.append(check_flag(f"barrier.order.{which}", ok, gmin, detail))

    # dead-core profile
    r = b.dead_core_report
    c.append(check_close("dead_core.left_slope", r.left_slope, r.left_slope_expected, tol.left_slope))
    c.append(check_close("dead_core.left_exponent", r.left_exponent, 1.0 / (p.m - 1.0), tol.left_exponent))
    c.append(check_close("dead_core.interface_coeff", r.interface_coeff, r.interface_coeff_expected,
                         tol.interface_coeff))
    c.append(check_close("dead_core.interface_exponent", r.interface_exponent, 1.0 / (1.0 - p.q),
                         tol.interface_exponent))
    c.append(check_flag("dead_core.interface_flatness",
                        math.isfinite(r.interface_flatness) and r.interface_flatness < 0.0,
                        r.interface_flatness, "finite negative limit of dfm1 / f**(m+q-2)"))
    c.append(check_close("dead_core.ode_residual", r.ode_residual_max, 0.0, tol.residual, rel=False))
    rr, _ = ode_residual_profile(p, b.regime, rescale(b.dead_core, 2.0))
    c.append(check_close("dead_core.ode_residual_rescaled", rr, 0.0, tol.residual_rescaled, rel=False,
                         detail="lambda = 2"))
    c.append(check_close("dead_core.normalization", b.dead_core.xi_star, 1.0, 0.0, rel=False))

    # dead core empties the core for all earlier times
    prof = b.dead_core
    x = 0.5 * prof.xi_star
    ts = np.array([-1.0, -5.0, -10.0])
    us = self_similar_solution(prof, ts, np.full_like(ts, x))
    c.append(check_close("solution.dead_core_vanishing", float(np.max(np.abs(us))), 0.0, 0.0, rel=False,
                         detail=f"u(t, {x!r}) at t = -1, -5, -10"))

    # origin-supported profile
    r = b.origin_report
    c.append(check_close("origin.coefficient", r.origin_coeff, r.origin_coeff_expected, tol.origin_coeff,
                         detail=f"beta = {b.origin_regime.beta!r}"))
    c.append(check_close("origin.exponent", r.origin_exponent, 2.0 / (p.m - 1.0), tol.origin_exponent))
    c.append(check_close("origin.interface_coeff", r.interface_coeff, r.interface_coeff_expected,
                         tol.interface_coeff))
    c.append(check_close("origin.interface_exponent", r.interface_exponent, 1.0 / (1.0 - p.q),
                         tol.interface_exponent))
    c.append(check_close("origin.ode_residual", r.ode_residual_max, 0.0, tol.residual, rel=False))
    c.append(check_close("origin.normalization", b.origin.xi_0, 1.0, 0.0, rel=False))

    # seed robustness at K*
    for name, fn, ref in (("U1", shoot_u1, u1), ("U0", shoot_u0, u0)):
        cfg2 = replace(b.cfg, eps=b.cfg.eps / 10.0)
        try:
            val = fn(p, b.regime.K, cfg2).numeric
        except DeadCoreError:
            val = math.nan
        c.append(check_close(f"richardson.{name}", val, ref, tol.richardson,
                             detail=f"seed eps {cfg2.eps!r} against {b.cfg.eps!r}"))

    # independent oracle
    if b.oracle is None:
        for name in ("oracle.contact_defect", "oracle.support_ratio", "oracle.off_beta_defect",
                     "oracle.cross_path"):
            c.append(Certificate(name, Status.SKIPPED, detail="oracle not run"))
    else:
        o = b.oracle
        c.append(check_close("oracle.contact_defect", o.contact_defect, 0.0, tol.oracle_defect, rel=False))
        c.append(check_close("oracle.support_ratio", o.support_ratio, prof.support_ratio, tol.oracle_ratio))
        off = b.oracle_off
        if isinstance(off, OracleResult):
            c.append(check_flag("oracle.off_beta_defect", off.contact_defect > 10.0 * tol.oracle_defect,
                                off.contact_defect,
                                f"signed miss {off.miss!r}; must exceed {10.0 * tol.oracle_defect!r}"))
        else:
            c.append(check_flag("oracle.off_beta_defect", False, None, f"oracle failed: {off}"))
        lo, hi = prof.xi_star, min(prof.xi_0, o.xi0_candidate)
        xs = np.linspace(lo, hi, 22)[1:-1]
        rel = float(np.max(np.abs(o.f(xs) / prof(xs) - 1.0)))
        c.append(check_close("oracle.cross_path", rel, 0.0, tol.cross_path, rel=False,
                             detail="max relative difference of f at 20 interior points"))
    return c


def tally(certs: list[Certificate]) -> dict[str, int]:
    out = {s.value: 0 for s in Status}
    for x in certs:
        out[x.status.value] += 1
    return out


def any_fail(certs: list[Certificate]) -> bool:
    return any(x.status is Status.FAIL for x in certs)


def certificates_to_json(certs: list[Certificate], path, extra: dict | None = None) -> None:
    doc = {"tally": tally(certs), "certificates": [x.as_dict() for x in certs]}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, allow_nan=True)
