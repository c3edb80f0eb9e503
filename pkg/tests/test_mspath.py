import dataclasses

import numpy as np
import pytest

from bartnikmass.errors import DomainError
from bartnikmass.mspath import (build_flow_maps, build_ms_path, clustered_times,
                                plateau_profile, reparam_log, reparam_mollify, sigma_theta,
                                verify_admissible, write_path_csv)
from bartnikmass.sphgrid import FOUR_PI, transform_for


def test_round_path_is_constant(round_path):
    assert np.max(np.abs(round_path.gp2)) == 0.0
    assert np.max(np.abs(round_path.K - 1.0)) <= 1e-12
    assert np.max(np.abs(round_path.a)) <= 1e-14
    rep = verify_admissible(round_path)
    assert rep.ok
    assert max(rep.a0, rep.area_rel, rep.k1_spread, rep.trace_residual) <= 1e-12


def test_bump_path_is_admissible(bump_path):
    rep = verify_admissible(bump_path)
    assert rep.ok, rep.violations
    assert rep.a0 <= 1e-10
    assert rep.area_rel <= 1e-9
    assert rep.trace_residual <= 1e-8
    assert rep.k1_spread <= 1e-8


def test_poisson_solvability_is_area_conservation(bump_path):
    tr = transform_for(bump_path.grid)
    for k in range(0, len(bump_path), 16):
        v, vdot = bump_path.v(k), bump_path.vdot(k)
        assert abs(tr.integrate(2 * vdot * np.exp(2 * v))) <= 1e-9 * FOUR_PI


def test_corrupted_area_is_flagged(bump_path):
    bad = dataclasses.replace(bump_path, a=bump_path.a + 0.01)
    rep = verify_admissible(bad)
    assert not rep.ok
    assert any("area" in v for v in rep.violations)


def test_log_reparametrization(bump_cm, round_cm):
    assert np.max(reparam_log(round_cm, plateau_profile(), 0.3, n_times=65).gp2) == 0.0
    base = build_ms_path(bump_cm, n_times=65)
    p = reparam_log(bump_cm, plateau_profile(), 0.3, n_times=65)
    assert np.max(np.abs(p.K[-1] - base.K[-1])) <= 1e-12
    assert np.max(np.abs(p.gp2[-1] - base.gp2[-1])) <= 1e-12
    with pytest.raises(DomainError):
        reparam_log(bump_cm, plateau_profile(), 0.0)


def test_log_reparametrization_scaling(bump_cm):
    # max_t 2 t^2 |g_c'|^2 = c^2 max_s 2 |h'(s)|^2
    c = 0.25
    base = build_ms_path(bump_cm, n_times=513)
    p = reparam_log(bump_cm, plateau_profile(), c, n_times=513)
    lhs = np.max(2 * p.times[:, None, None] ** 2 * p.gp2)
    rhs = c * c * np.max(2 * base.gp2)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_sigma_theta_properties():
    sig = sigma_theta(0.1)
    t = np.linspace(0.0, 1.0, 20001)
    s, ds = sig(t)
    assert np.all(s[t >= 0.9] == 1.0)
    assert np.max(ds) <= 1 / (1 - 0.2) + 1e-10
    assert np.all(np.diff(s) >= 0)
    for bad in (0.0, 0.34, -1.0):
        with pytest.raises(DomainError):
            sigma_theta(bad)


def test_mollified_path(bump_path):
    p = reparam_mollify(bump_path, 0.1)
    assert p.const_tail >= 0.1
    k = int(np.searchsorted(p.times, 0.99))
    assert np.array_equal(p.K[k], p.K[-1])
    assert verify_admissible(p).ok
    # small theta changes the slices by O(theta)
    diffs = []
    for th in (0.04, 0.02, 0.01):
        q = reparam_mollify(bump_path, th)
        diffs.append(np.max(np.abs(q.K - bump_path.K)))
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[2] <= 0.1


def test_flow_maps(round_path, bump_path):
    f = build_flow_maps(round_path, n_substeps=1)
    assert np.max(np.abs(f.positions - f.positions[0])) <= 1e-12
    fb = build_flow_maps(bump_path, n_substeps=2)
    th, ph = fb.angles()
    dphi = np.angle(np.exp(1j * (ph - ph[0])))
    assert np.max(np.abs(dphi)) <= 1e-10
    assert np.max(np.abs(th - th[0])) > 1e-4
    assert np.max(np.abs(np.linalg.norm(fb.positions, axis=-1) - 1.0)) <= 1e-12


def test_clustered_times_and_csv(tmp_path, bump_path):
    t = clustered_times(9)
    assert t[0] == pytest.approx(1 / 81) and t[-1] == 1.0 and np.all(np.diff(t) > 0)
    write_path_csv(bump_path, tmp_path / "path.csv")
    lines = (tmp_path / "path.csv").read_text().splitlines()
    assert lines[0] == "t,a,K_min,K_max,gp2_max"
    assert len(lines) == len(bump_path) + 1
