"""Conformal metrics g = exp(2w) g* on the sphere."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import optimize

from .errors import DomainError
from .sphgrid import (FOUR_PI, GridSpec, ScalarField, fold_angles, point_jet, real_ylm,
                      transform_for)

__all__ = ["ConformalMetric", "normalize", "round_metric", "bump_metric", "gauss_curvature",
           "gauss_curvature_at", "min_gauss_curvature"]


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    w: ScalarField
    rg: float

    @property
    def grid(self) -> GridSpec:
        return self.w.grid

    @cached_property
    def w_spec(self) -> np.ndarray:
        return transform_for(self.grid).analyze(self.w.values)

    @cached_property
    def lap_w(self) -> np.ndarray:
        tr = transform_for(self.grid)
        return tr.synthesize(tr.laplacian_spec(self.w_spec))

    def area(self) -> float:
        return float(transform_for(self.grid).integrate(np.exp(2.0 * self.w.values)))

    def is_round(self, tol: float = 1e-13) -> bool:
        """True when w is constant (all degree >= 1 coefficients vanish)."""
        spec = self.w_spec.copy()
        spec[0, 0, 0] = 0.0
        return float(np.max(np.abs(spec))) <= tol * max(1.0, abs(self.w_spec[0, 0, 0]))


def normalize(w_raw: ScalarField) -> ConformalMetric:
    """Project w onto the grid's band limit and record the area radius.

    The area radius is defined from the area rather than by rescaling w, so
    the conformal factor itself is left untouched.
    """
    tr = transform_for(w_raw.grid)
    w = ScalarField(w_raw.grid, tr.project(w_raw.values))
    area = float(tr.integrate(np.exp(2.0 * w.values)))
    return ConformalMetric(w, float(np.sqrt(area / FOUR_PI)))


def round_metric(r: float = 1.0, grid: GridSpec | None = None) -> ConformalMetric:
    """Round sphere of radius r, i.e. w = ln r."""
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    grid = GridSpec() if grid is None else grid
    return normalize(ScalarField.constant(grid, float(np.log(r))))


def bump_metric(l: int, m: int, eps: float, grid: GridSpec | None = None) -> ConformalMetric:
    """w = eps * Y_lm on the unit-area-radius background."""
    grid = GridSpec() if grid is None else grid
    if not (0 <= abs(m) <= l <= grid.lmax):
        raise DomainError(f"need |m| <= l <= {grid.lmax}, got l={l}, m={m}")
    th, ph = grid.mesh()
    return normalize(ScalarField(grid, eps * real_ylm(l, m, th, ph)))


def gauss_curvature(cm: ConformalMetric) -> ScalarField:
    """K_g = exp(-2w) (1 - lap* w)."""
    return ScalarField(cm.grid, np.exp(-2.0 * cm.w.values) * (1.0 - cm.lap_w))


def gauss_curvature_at(cm: ConformalMetric, theta, phi) -> np.ndarray:
    """K_g at arbitrary points by spectral evaluation of w."""
    j = point_jet(cm.w_spec, theta, phi, cm.grid.lmax)
    return np.exp(-2.0 * j["f"]) * (1.0 - j["lap"])


def min_gauss_curvature(cm: ConformalMetric, refine: bool = False) -> float:
    """Grid minimum of K_g; with ``refine`` it is polished off-grid.

    The refined value starts from the lowest nodes and minimizes the
    spectrally evaluated curvature over continuous (theta, phi).
    """
    K = gauss_curvature(cm).values
    kmin = float(K.min())
    if not refine or cm.is_round():
        return kmin
    g = cm.grid
    scale = np.array([np.pi / g.n_lat, 2.0 * np.pi / g.n_lon])

    def f(x):
        th, ph = fold_angles(np.array([x[0] * scale[0]]), np.array([x[1] * scale[1]]))
        return float(gauss_curvature_at(cm, th, ph)[0])

    for idx in np.argsort(K, axis=None)[:3]:
        i, j = np.unravel_index(int(idx), g.shape)
        x0 = np.array([g.theta[i] / scale[0], g.phi[j] / scale[1]])
        res = optimize.minimize(f, x0, method="Nelder-Mead",
                                options=dict(xatol=1e-8, fatol=1e-16, maxfev=400,
                                             initial_simplex=x0 + 0.5 * np.vstack([np.zeros(2), np.eye(2)])))
        kmin = min(kmin, float(res.fun))
    return kmin
