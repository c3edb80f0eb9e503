import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from bartnikmass.conformal import (bump_metric, gauss_curvature, gauss_curvature_at,
                                   min_gauss_curvature, normalize, round_metric)
from bartnikmass.errors import DomainError
from bartnikmass.sphgrid import GridSpec, ScalarField, integrate_star, real_ylm

G = GridSpec()


def test_zero_factor_is_unit_sphere():
    cm = normalize(ScalarField.constant(G, 0.0))
    assert cm.rg == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(gauss_curvature(cm).values - 1.0)) <= 1e-12


def test_scaled_round_sphere():
    cm = normalize(ScalarField.constant(G, math.log(2.0)))
    assert cm.rg == pytest.approx(2.0, abs=1e-13)
    # the Laplacian of a constant carries amplified analysis round-off
    assert np.max(np.abs(gauss_curvature(cm).values - 0.25)) <= 1e-10
    assert min_gauss_curvature(round_metric(3.0)) == pytest.approx(1.0 / 9.0, abs=1e-10)


def test_area_radius_against_quadrature():
    cm = bump_metric(2, 0, 0.1)
    ref, _ = dblquad(lambda th, ph: np.exp(0.2 * real_ylm(2, 0, th, ph)) * np.sin(th),
                     0.0, 2 * np.pi, 0.0, np.pi, epsabs=1e-13, epsrel=1e-13)
    assert cm.rg == pytest.approx(math.sqrt(ref / (4 * math.pi)), rel=1e-12)


def test_gauss_bonnet_bump():
    cm = bump_metric(2, 0, 0.05)
    K = gauss_curvature(cm)
    total = integrate_star(ScalarField(G, K.values * np.exp(2 * cm.w.values)))
    assert total == pytest.approx(4 * math.pi, rel=1e-8)


def test_curvature_matches_explicit_formula():
    # w = eps*Y20 is axisymmetric; K = e^{-2w}(1 - w'' - cot(theta) w')
    eps = 0.05
    cm = bump_metric(2, 0, eps)
    th, _ = G.mesh()
    c = eps * math.sqrt(5 / (16 * math.pi))
    w = c * (3 * np.cos(th) ** 2 - 1)
    w1 = -6 * c * np.cos(th) * np.sin(th)
    w2 = -6 * c * np.cos(2 * th)
    K = np.exp(-2 * w) * (1 - w2 - np.cos(th) / np.sin(th) * w1)
    assert np.max(np.abs(gauss_curvature(cm).values - K)) <= 1e-12
    assert min_gauss_curvature(cm) == pytest.approx(K.min(), abs=1e-12)


def test_refined_minimum_is_below_node_minimum_and_pointwise_consistent():
    cm = bump_metric(3, 1, 0.2)
    node = min_gauss_curvature(cm)
    fine = min_gauss_curvature(cm, refine=True)
    assert fine <= node + 1e-15
    th, ph = G.mesh()
    assert np.allclose(gauss_curvature_at(cm, th[3], ph[3]), gauss_curvature(cm).values[3],
                       atol=1e-12)


def test_large_bump_has_negative_curvature():
    assert min_gauss_curvature(bump_metric(2, 0, 1.5)) < 0


def test_invalid_presets():
    with pytest.raises(DomainError):
        round_metric(-1.0)
    with pytest.raises(DomainError):
        bump_metric(2, 3, 0.1)
