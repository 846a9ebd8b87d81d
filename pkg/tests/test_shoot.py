from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from deadcore.dynsys import Q2Kind, classify_q2, eval_S, q2_thresholds
from deadcore.errors import BracketingFailure, DomainError, Inconclusive
from deadcore.shoot import (Infinite, OutcomeKind, ShootConfig, Target, barrier_gaps, find_k0,
                            find_kinf, mismatch, scan_u0, shoot_u0, shoot_u1, sweep, sweep_to_csv,
                            triangle_inflow, triangle_threshold)


@pytest.fixture(scope="module")
def ks(ref_bundle):
    b = ref_bundle
    return b.k0.mid, b.kstar.mid, b.kinf.mid


def test_u1_small_k_crossing(ref_params):
    p = ref_params
    o = shoot_u1(p, 0.5 * triangle_threshold(p))
    assert o.kind is OutcomeKind.CROSSING and o.value > 1.0


def test_u1_monotone_pair(ref_params, ks):
    p = ref_params
    k0, _, kinf = ks
    a, b = shoot_u1(p, 1.2 * k0), shoot_u1(p, 0.8 * kinf)
    assert a.kind is b.kind is OutcomeKind.CROSSING
    assert b.value < a.value


def test_u0_regimes(ref_params, ks):
    p = ref_params
    k0, _, kinf = ks
    o = shoot_u0(p, 0.5 * k0)
    assert o.kind is OutcomeKind.CONVERGED_TO_Q2 and o.value == 1.0
    o = shoot_u0(p, 2.0 * kinf)
    assert o.kind is OutcomeKind.BLOW_DOWN_INFINITE and o.value is Infinite
    assert math.isinf(o.numeric) and o.certified
    a, b = shoot_u0(p, 1.5 * k0), shoot_u0(p, 0.7 * kinf)
    assert 1.0 < a.value < b.value < math.inf


def test_crossing_contracts(ref_params, ks):
    p = ref_params
    for K in np.geomspace(ks[0] * 1.01, ks[2] * 0.99, 6):
        for o in (shoot_u0(p, K), shoot_u1(p, K)):
            if o.kind is OutcomeKind.CROSSING and not o.endgame:
                ev = o.trajectory.events[-1]
                assert ev.point.u > 1.0
                assert eval_S(p, K, ev.point).v < 0.0


def test_l0_branch_below_u0(ref_params, ks):
    p = ref_params
    o = shoot_u0(p, ks[1])
    tr = o.trajectory
    assert np.all(tr.u <= o.value * (1 + 1e-12))
    # between the last zero of v and Q0: v < 0 and u decreasing toward Q0
    assert np.all(tr.v[:-1] < 0.0)
    assert np.all(np.diff(tr.u) > 0.0)


def test_k0_bracket(ref_bundle):
    b = ref_bundle
    br = b.k0
    assert br.target is Target.K0
    assert br.lo_label == "ConvergedToQ2" and br.hi_label == "Crossing"
    assert br.width <= br.rel_tol * br.hi
    # K0 and K_u coincide numerically, so K_u is only resolved to the bracket width
    ku = q2_thresholds(b.params).K_u
    assert br.lo <= ku and br.mid <= ku + br.width
    p = b.params
    assert shoot_u0(p, br.lo).kind is OutcomeKind.CONVERGED_TO_Q2
    assert shoot_u0(p, br.hi).kind is OutcomeKind.CROSSING


def test_kinf_bracket(ref_bundle):
    b, p = ref_bundle, ref_bundle.params
    br = b.kinf
    assert br.target is Target.KINF
    assert shoot_u0(p, br.lo).kind is OutcomeKind.CROSSING
    assert shoot_u0(p, br.hi).kind is OutcomeKind.BLOW_DOWN_INFINITE
    assert b.k0.hi < br.lo
    mid = math.sqrt(b.k0.hi * br.lo)
    assert shoot_u0(p, 0.99 * br.lo).value > shoot_u0(p, mid).value


def test_k0_stable_under_eps_halving(ref_bundle):
    b, p = ref_bundle, ref_bundle.params
    cfg = ShootConfig(eps=b.cfg.eps / 2)
    grid = np.geomspace(b.k0.lo / 2, b.k0.hi * 2, 5)
    k0 = find_k0(p, b.tol, cfg, scan_u0(p, grid, cfg))
    assert abs(k0.mid - b.k0.mid) <= 10 * b.tol * b.k0.mid


def test_kstar_signs(ref_bundle):
    b, p = ref_bundle, ref_bundle.params
    info = b.kstar.info
    assert info["D_lo"] < 0.0 <= info["D_hi"]
    assert info["monotone"]
    lo, hi = info["search_interval"]
    assert mismatch(p, lo)[0] < 0
    assert mismatch(p, hi)[0] > 0
    assert b.k0.hi < b.kstar.lo < b.kstar.hi < b.kinf.lo
    assert abs(b.u0.numeric - b.u1.numeric) <= 1e-6 * b.u1.numeric


def test_bisection_shot_bound(ref_bundle):
    b = ref_bundle
    lo, hi = b.kstar.info["search_interval"]
    assert b.kstar.shots <= 2 * (math.ceil(math.log2((hi - lo) / (b.tol * b.kstar.hi))) + 3)
    scan_len = len(b.k0.info["scan"])
    for br in (b.k0, b.kinf):
        assert br.shots <= scan_len + math.ceil(math.log2(hi / (b.tol * br.hi))) + 60


def test_bracketing_failure(ref_params):
    p = ref_params
    cfg = ShootConfig(max_steps=3)  # every shot inconclusive
    with pytest.raises(BracketingFailure) as ei:
        find_kinf(p, 1e-8, cfg, scan_u0(p, [0.1, 0.2, 0.4], cfg))
    assert len(ei.value.scan) == 3
    with pytest.raises(DomainError):
        find_k0(p, 0.0)


def test_sweep_table(ref_params, ref_bundle, tmp_path):
    p = ref_params
    th = q2_thresholds(p)
    grid = np.geomspace(th.K_u / 3, th.K_f * 3, 8)
    rows = sweep(p, grid)
    for r in rows:
        assert r.q2_kind is classify_q2(p, r.K).kind
    kinds = [r.q2_kind for r in rows]
    assert Q2Kind.UNSTABLE_NODE in kinds and Q2Kind.STABLE_FOCUS in kinds
    sweep_to_csv(rows, tmp_path / "sweep.csv")
    table = list(csv.reader(open(tmp_path / "sweep.csv")))
    assert table[0] == ["K", "U0_kind", "U0_value", "U1_kind", "U1_value", "Q2_kind"]
    assert len(table) == len(grid) + 1
    with pytest.raises(DomainError):
        sweep(p, grid[::-1])


def test_sweep_propagates_inconclusive(ref_params):
    p = ref_params
    rows = sweep(p, [0.3, 0.5], ShootConfig(max_steps=3))
    assert all(isinstance(r.u0, Inconclusive) and isinstance(r.u1, Inconclusive) for r in rows)


def test_sweep_monotone_columns(ref_bundle):
    u1 = [r.u1.numeric for r in ref_bundle.sweep]
    u0 = [r.u0.numeric for r in ref_bundle.sweep]
    assert all(b <= a for a, b in zip(u1, u1[1:]))
    assert all(b >= a for a, b in zip(u0, u0[1:]))


@pytest.mark.parametrize("which", ["l1", "l0"])
def test_barrier_ordering(ref_params, ks, which):
    p = ref_params
    k1, k2 = 1.3 * ks[0], 0.8 * ks[2]
    gaps = barrier_gaps(p, k1, k2, which, n=100)
    assert gaps.shape == (100,)
    assert np.all(gaps > 0)


def test_triangle_inflow(ref_params):
    p = ref_params
    kt = triangle_threshold(p)
    top, hyp = triangle_inflow(p, 0.9 * kt, n=100)
    assert top.shape == hyp.shape == (100,)
    assert np.all(top > 0) and np.all(hyp > 0)
    # l0 then connects Q2 to Q0
    assert shoot_u0(p, 0.9 * kt).kind is OutcomeKind.CONVERGED_TO_Q2
