"""Acceptance suite: one test per criterion, each at its stated tolerance.

The terminal summary prints one PASS/FAIL line per criterion.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from deadcore.dynsys import (Q2Kind, classify_q2, critical_points_S, eval_R, eval_S, jac_R, jac_S,
                             pushforward_R, q2_eigenvalues, q2_thresholds, to_uv)
from deadcore.params import regime_constants
from deadcore.profile import ode_residual_profile, rescale
from deadcore.shoot import ShootConfig, default_scan_grid, find_k0, find_kinf, find_kstar, scan_u0
from deadcore.verify import Status

from conftest import BREADTH, bundle_for

BRACKET_TOL = 1e-8


def _fd_jac(fn, pt, h=1e-6):
    J = np.zeros((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        J[:, j] = (np.array(fn(pt + e)) - np.array(fn(pt - e))) / (2 * h)
    return J


@pytest.mark.criterion("conjugacy of the two vector fields at 1000 points, rel 1e-10")
def test_conjugacy(ref_params):
    p = ref_params
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for K in (0.05, 0.47, 3.0):
        lam = regime_constants(p, K).lambda_K
        for _ in range(1000 // 3 + 1):
            pt = (rng.uniform(-1.0, 3.0), rng.uniform(1e-3, 3.0))
            lhs = np.array(pushforward_R(p, K, pt))
            rhs = lam * np.array(eval_S(p, K, to_uv(p, K, pt)))
            worst = max(worst, np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-300))
    assert worst < 1e-10


@pytest.mark.criterion("critical points 1e-13, Jacobians vs central differences 1e-6, "
                       "Q2 eigenvalue product 1e-10")
def test_critical_points_and_jacobians(ref_params):
    p = ref_params
    rng = np.random.default_rng(7)
    for K in np.geomspace(1e-2, 1e2, 25):
        for pt in critical_points_S(p, K):
            assert np.max(np.abs(eval_S(p, K, pt))) <= 1e-13
        for _ in range(4):
            pt = np.array([rng.uniform(0.05, 3.0), rng.uniform(-3.0, 3.0)])
            J = jac_S(p, K, pt)
            Jfd = _fd_jac(lambda x: eval_S(p, K, x), pt)
            assert np.max(np.abs(J - Jfd)) <= 1e-6 * np.max(np.abs(J))
            ptR = np.array([rng.uniform(-1.0, 3.0), rng.uniform(0.05, 3.0)])
            JR = jac_R(p, K, ptR)
            JRfd = _fd_jac(lambda x: eval_R(p, K, x), ptR)
            assert np.max(np.abs(JR - JRfd)) <= 1e-6 * np.max(np.abs(JR))
    for K in rng.uniform(0.01, 50.0, 20):
        ev = np.linalg.eigvals(jac_S(p, K, (1.0, 0.0)))
        assert abs(np.prod(ev).real - (p.m - p.q) / (p.m - 1.0)) <= 1e-10
        l1, l2 = q2_eigenvalues(p, K)
        assert abs((l1 * l2).real - (p.m - p.q) / (p.m - 1.0)) <= 1e-10


@pytest.mark.criterion("K0 <= K_u, K0 < K* < K_inf, bracket widths <= 1e-8 relative, "
                       "Q2 kind flips at closed-form thresholds within 1e-8")
def test_threshold_structure(ref_params, ref_bundle):
    p, b = ref_params, ref_bundle
    th = q2_thresholds(p)
    assert b.k0.lo <= th.K_u
    assert b.k0.hi < b.kstar.lo and b.kstar.hi < b.kinf.lo
    for br in (b.k0, b.kinf, b.kstar):
        assert br.rel_width <= BRACKET_TOL
    flips = [(th.K_u, Q2Kind.UNSTABLE_NODE, Q2Kind.UNSTABLE_FOCUS),
             (th.K_f, Q2Kind.UNSTABLE_FOCUS, Q2Kind.STABLE_FOCUS),
             (th.require_K_s(), Q2Kind.STABLE_FOCUS, Q2Kind.STABLE_NODE)]
    for K, below, above in flips:
        assert classify_q2(p, K * (1 - 1e-8)).kind is below
        assert classify_q2(p, K * (1 + 1e-8)).kind is above


@pytest.mark.criterion("U1 nonincreasing, U0 nondecreasing on 32 points in (K0, K_inf), "
                       "strict where both exceed 1 + 1e-6")
def test_shooting_monotonicity(ref_bundle):
    rows = ref_bundle.sweep
    assert len(rows) == 32
    u1 = [r.u1.numeric for r in rows]
    u0 = [r.u0.numeric for r in rows]
    for a, b in zip(u1, u1[1:]):
        assert b <= a
        if min(a, b) > 1 + 1e-6:
            assert b < a
    for a, b in zip(u0, u0[1:]):
        assert b >= a
        if min(a, b) > 1 + 1e-6:
            assert b > a


@pytest.mark.criterion("dead-core left edge: slope limit within 1%, exponent 1/(m-1) within 2%")
def test_left_boundary_law(ref_params, ref_bundle):
    p, r = ref_params, ref_bundle.dead_core_report
    expected = (p.m - 1) * ref_bundle.regime.beta * ref_bundle.dead_core.xi_star / p.m
    assert r.left_slope_expected == pytest.approx(expected, rel=1e-15)
    assert abs(r.left_slope - expected) <= 0.01 * expected
    assert abs(r.left_exponent - 1 / (p.m - 1)) <= 0.02 / (p.m - 1)


@pytest.mark.criterion("interface: coefficient within 2%, exponent 1/(1-q) within 2%")
def test_interface_law(ref_params, ref_bundle):
    p, r = ref_params, ref_bundle.dead_core_report
    kb = ref_bundle.regime
    expected = ((1 - p.q) / kb.beta * r.interface_xi0_fit ** (p.sigma - 1)) ** (1 / (1 - p.q))
    assert abs(r.interface_coeff - expected) <= 0.02 * expected
    assert abs(r.interface_exponent - 1 / (1 - p.q)) <= 0.02 / (1 - p.q)


@pytest.mark.criterion("origin law at beta = 2 beta0: coefficient within 1%, exponent 2/(m-1) within 2%")
def test_origin_law(ref_params, ref_bundle):
    p, b = ref_params, ref_bundle
    assert b.origin_regime.beta == pytest.approx(2 * b.beta0.beta, rel=1e-14)
    r = b.origin_report
    expected = ((p.m - 1) ** 2 / (2 * p.m * (p.N * (p.m - 1) + 2))) ** (1 / (p.m - p.q))
    assert abs(r.origin_coeff - expected) <= 0.01 * expected
    assert abs(r.origin_exponent - 2 / (p.m - 1)) <= 0.02 * 2 / (p.m - 1)


@pytest.mark.criterion("ODE residual < 1e-3 for both profile kinds, rescaled (lambda = 2) < 2e-3")
def test_ode_residual(ref_params, ref_bundle):
    p, b = ref_params, ref_bundle
    assert b.dead_core_report.ode_residual_max < 1e-3
    assert b.origin_report.ode_residual_max < 1e-3
    r2, _ = ode_residual_profile(p, b.regime, rescale(b.dead_core, 2.0))
    assert r2 < 2e-3
    r2o, _ = ode_residual_profile(p, b.origin_regime, rescale(b.origin, 2.0))
    assert r2o < 2e-3


ORACLE_TOL = 1e-3


@pytest.mark.criterion("physical oracle: defect below tolerance at beta*, xi0/xi* within 0.5%, "
                       "defect at 1.1 beta* above 10x tolerance")
def test_oracle_agreement(ref_bundle):
    o, off, prof = ref_bundle.oracle, ref_bundle.oracle_off, ref_bundle.dead_core
    assert o.contact_defect < ORACLE_TOL
    assert abs(o.support_ratio - prof.support_ratio) <= 0.005 * prof.support_ratio
    assert off.contact_defect > 10 * ORACLE_TOL


@pytest.mark.criterion("halving eps and halving rtol each move beta* by < 10x bracket tolerance")
def test_seed_and_tolerance_robustness(ref_params, ref_bundle):
    p = ref_params
    base = ShootConfig()
    beta = ref_bundle.regime.beta
    for cfg in (replace(base, eps=base.eps / 2), replace(base, rtol=base.rtol / 2)):
        scan = scan_u0(p, default_scan_grid(p), cfg)
        k0 = find_k0(p, BRACKET_TOL, cfg, scan)
        kinf = find_kinf(p, BRACKET_TOL, cfg, scan)
        _, kb = find_kstar(p, BRACKET_TOL, cfg, k0, kinf)
        assert abs(kb.beta - beta) / beta < 10 * BRACKET_TOL


@pytest.mark.criterion("full certificate suite passes for (2,0.5,3), (3,0.25,1), (1.8,0.5,5)")
def test_regime_breadth():
    for m, q, N in BREADTH:
        assert m + q > 2
        _, _, certs = bundle_for(m, q, N)
        failed = [c.name for c in certs if c.status is Status.FAIL]
        assert not failed, f"({m}, {q}, {N}): {failed}"
        skipped = [c for c in certs if c.status is Status.SKIPPED]
        assert all(c.detail for c in skipped)
