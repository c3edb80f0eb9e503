import math
from types import SimpleNamespace

import numpy as np
import pytest

from bartnikmass.admiss import (C_FLOOR, SearchConfig, bartnik_bound, c_zeta, d_upper,
                                destimate_closed_form, gh_margin, hawking_like,
                                large_H_admissibility, large_H_path, refine_czeta, required_C)
from bartnikmass.conformal import bump_metric
from bartnikmass.errors import DomainError, InfeasibleError
from bartnikmass.mspath import build_ms_path, plateau_profile, reparam_log


def synthetic(times, K, gp2):
    times = np.asarray(times, float)
    K = np.asarray(K, float).reshape(len(times), 1, -1)
    gp2 = np.asarray(gp2, float).reshape(len(times), 1, -1)

    class Fake(SimpleNamespace):
        def __len__(self):
            return len(self.times)

    return Fake(times=times, K=K, gp2=gp2)


def brute_margin(path, C, H):
    best = math.inf
    for k, t in enumerate(path.times):
        for i in range(path.K.shape[1]):
            for j in range(path.K.shape[2]):
                e = 1.0 + C * math.sqrt(t)
                v = (4 * C * C / (H * H)) * path.K[k, i, j] * e \
                    - 2 * t * path.gp2[k, i, j] * e * e + C * C
                best = min(best, v)
    return best


def test_round_margin_closed_form(round_path):
    for C in (1e-3, 0.5, 3.0):
        m = gh_margin(round_path, C, 1.3)
        assert m.margin == pytest.approx(4 * C * C / 1.3 ** 2 + C * C, rel=1e-12)
        assert m.feasible


def test_margin_matches_double_loop(bump_path):
    sub = synthetic(bump_path.times[::8], bump_path.K[::8], bump_path.gp2[::8])
    assert gh_margin(sub, 1.0, 1.0).margin == pytest.approx(brute_margin(sub, 1.0, 1.0), abs=1e-12)


def test_margin_small_C_against_scan():
    # K clamped to zero on one slice, gp2 > 0: margin negative for small C
    p = synthetic([0.0, 0.5, 1.0], [[1.0, 1.0], [0.0, 0.3], [1.0, 1.0]],
                  [[0.0, 0.0], [0.2, 0.0], [0.0, 0.0]])
    for C in (1e-4, 1e-2, 0.3):
        assert gh_margin(p, C, 1.0).margin == pytest.approx(brute_margin(p, C, 1.0), abs=1e-15)
    assert gh_margin(p, 1e-4, 1.0).margin < 0
    with pytest.raises(DomainError):
        gh_margin(p, 0.0, 1.0)


def test_round_czeta_is_floor_limited(round_path):
    cz = c_zeta(round_path, 1.0)
    assert cz.value == pytest.approx(C_FLOOR)
    assert cz.floor_limited and cz.exact_zero and cz.infimum == 0.0


def test_bump_czeta_is_a_sharp_threshold(bump_path):
    cz = c_zeta(bump_path, 1.0)
    assert 0 < cz.value < 1
    assert gh_margin(bump_path, cz.value * (1 + 1e-6), 1.0).margin > 0
    assert gh_margin(bump_path, cz.value * (1 - 1e-4), 1.0).margin < 0


def test_required_C_inverts_the_margin():
    K, gp2, t, H = 0.8, 0.3, 0.25, 1.2
    C = required_C(K, gp2, t, H)
    p = synthetic([t], [K], [gp2])
    assert abs(gh_margin(p, C, H).margin) <= 1e-12


def test_refined_czeta_bounds_the_nodes(bump_path):
    cz = c_zeta(bump_path, 1.0)
    rz = refine_czeta(bump_path, 1.0, cz)
    assert rz.value >= cz.value * (1 - 1e-9)
    assert rz.value <= cz.value * 1.05


def test_czeta_refinement_stable_across_grids():
    from bartnikmass.sphgrid import GridSpec
    vals = []
    for L in (47, 63):
        cm = bump_metric(2, 0, 0.05, GridSpec.for_lmax(L))
        p = build_ms_path(cm)
        vals.append(refine_czeta(p, 1.0, c_zeta(p, 1.0)).value)
    assert abs(vals[0] - vals[1]) < 1e-3 * vals[1]


def test_d_upper_round_metric(round_cm):
    d = d_upper(round_cm, 1.0)
    assert d.value == 0.0


def test_d_upper_rejects_negative_curvature():
    with pytest.raises(DomainError):
        d_upper(bump_metric(2, 0, 1.5), 1.0)


def test_closed_form(round_path, bump_path):
    assert destimate_closed_form(round_path, 1.0) == 0.0
    closed = destimate_closed_form(bump_path, 1.0)
    assert closed >= c_zeta(bump_path, 1.0).value - 1e-8
    p = synthetic([1.0], [0.75], [0.5])
    assert destimate_closed_form(p, 1.0) == pytest.approx(1.0, rel=1e-14)
    bad = synthetic([1.0], [0.75], [2.5])
    with pytest.raises(DomainError, match="denominator"):
        destimate_closed_form(bad, 1.0)


def test_large_H_round(round_path):
    lh = large_H_admissibility(round_path)
    assert lh.C == C_FLOOR and lh.H_min == 0.0 and lh.n_constraining == 0


def test_large_H_cross_check_with_margin():
    cm = bump_metric(2, 0, 0.8)  # has K < 0
    p = reparam_log(cm, plateau_profile(), 0.1)
    lh = large_H_admissibility(p)
    assert math.isfinite(lh.C) and lh.H_min > 0
    for H in (lh.H_min, 1.5 * lh.H_min, 10 * lh.H_min):
        assert gh_margin(p, lh.C, H).margin > 0
    assert gh_margin(p, lh.C, 0.5 * lh.H_min).margin < 0
    # constraining points are those with K < 0 once C exceeds the threshold
    assert lh.n_constraining == int(np.sum(p.K < 0))


def test_large_H_needs_small_splice():
    cm = bump_metric(2, 0, 0.8)
    p = reparam_log(cm, plateau_profile(), 5.0)
    with pytest.raises(InfeasibleError, match="smaller splice"):
        large_H_admissibility(p)


def test_large_H_path_minimizes_C():
    cm = bump_metric(2, 0, 0.8)
    path, lh, c = large_H_path(cm, SearchConfig(), n_c=5)
    assert c is not None and lh.H_min > 0


def test_bartnik_bound_branches():
    r = bartnik_bound(1.0, 1.0, 0.0, True)
    assert r.bound == pytest.approx(0.375, abs=1e-15) and r.branch == "hawking-like"
    r = bartnik_bound(1.0, 2 * math.sqrt(1.3), 0.3, True)
    assert r.bound == 0.0 and r.branch == "zero-clamp"
    r = bartnik_bound(1.0, 0.1, 10.0, True)
    assert hawking_like(1.0, 0.1, 10.0) > 0.5
    assert r.bound == 0.5 and r.branch == "r-over-2-clamp"
    r = bartnik_bound(1.0, 0.1, 10.0, False)
    assert r.bound == pytest.approx(hawking_like(1.0, 0.1, 10.0))
    with pytest.raises(DomainError):
        bartnik_bound(1.0, 1.0, -0.1, True)
