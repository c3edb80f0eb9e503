"""Smooth transition functions built from the standard bump exp(-1/(s(1-s)))."""

from __future__ import annotations

import functools

import numpy as np
from scipy import integrate

__all__ = ["bump", "smoothstep", "dsmoothstep", "smoothstep_integral", "mollifier_cdf",
           "mollifier_ramp"]


def _raw_bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out


def _quad(fn, a, b):
    return integrate.quad(fn, a, b, epsabs=1e-15, epsrel=1e-14, limit=200)[0]


@functools.lru_cache(maxsize=None)
def _bump_mass():
    return _quad(lambda s: float(_raw_bump(s)), 0.0, 1.0)


@functools.lru_cache(maxsize=None)
def _first_moment():
    return _quad(lambda s: s * float(_raw_bump(s)), 0.0, 1.0)


def bump(s):
    """Unit-mass bump supported on [0, 1]."""
    return _raw_bump(s) / _bump_mass()


@functools.lru_cache(maxsize=65536)
def _cdf_scalar(u):
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    if u <= 0.5:
        return _quad(lambda s: float(_raw_bump(s)), 0.0, u) / _bump_mass()
    return 1.0 - _quad(lambda s: float(_raw_bump(s)), u, 1.0) / _bump_mass()


@functools.lru_cache(maxsize=65536)
def _moment_scalar(u):
    # int_0^u s * bump(s) ds
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return _first_moment() / _bump_mass()
    return _quad(lambda s: s * float(_raw_bump(s)), 0.0, u) / _bump_mass()


def smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, non-decreasing."""
    u = np.asarray(u, dtype=float)
    return np.vectorize(lambda v: _cdf_scalar(float(v)), otypes=[float])(u)


def dsmoothstep(u):
    return bump(u)


def smoothstep_integral(u):
    """int_0^u smoothstep(s) ds, exact up to quadrature error."""
    u = np.asarray(u, dtype=float)

    def one(v):
        v = float(v)
        if v <= 0.0:
            return 0.0
        if v >= 1.0:
            return (v - 1.0) + 1.0 - _moment_scalar(1.0)
        return v * _cdf_scalar(v) - _moment_scalar(v)

    return np.vectorize(one, otypes=[float])(u)


def mollifier_cdf(x, radius):
    """Distribution function of the bump rescaled to [-radius, radius]."""
    return smoothstep((np.asarray(x, dtype=float) + radius) / (2.0 * radius))


def mollifier_ramp(x, radius):
    """Mollified ramp (max(x, 0) convolved with the rescaled bump)."""
    x = np.asarray(x, dtype=float)
    u = (x + radius) / (2.0 * radius)
    return 2.0 * radius * smoothstep_integral(u)
