"""Area-preserving conformal paths from a metric to a round sphere.

A path is stored through its conformal representatives
``gbar_t = exp(2 v_t) g*`` with ``v_t = alpha(t) w + a(t)/2`` together with
the potential ``phi_t`` of the diffeomorphism generator ``X_t = grad_gbar
phi_t``.  The actual path ``g(t) = xi_t^* gbar_t`` (xi_t the flow of X_t) is
never tensor-materialized in the main pipeline: the Gauss curvature and the
norm ``|g'|^2_g`` are scalars, so their per-slice values on the
representative coincide with those of the pulled-back path up to the slice
diffeomorphism.  :func:`build_flow_maps` integrates xi_t for cross-checks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import smooth
from .conformal import ConformalMetric
from .errors import DomainError, PathConstructionError
from .sphgrid import FOUR_PI, ScalarField, legendre_tables, point_jet, transform_for

__all__ = [
    "AlphaProfile",
    "plateau_profile",
    "linear_start_profile",
    "Reparam",
    "MSBuilder",
    "AdmissiblePath",
    "AdmissibilityReport",
    "FlowMaps",
    "build_ms_path",
    "reparam_log",
    "reparam_mollify",
    "sigma_theta",
    "verify_admissible",
    "build_flow_maps",
    "write_path_csv",
    "clustered_times",
]

DEFAULT_N_TIMES = 257
_CHUNK = 32


# -- alpha profiles --------------------------------------------------------------

@dataclass(frozen=True)
class AlphaProfile:
    """Non-increasing alpha on [0, 1] with alpha(0) = 1 and alpha(1) = 0."""

    kind: str
    flat_start: tuple[float, float] | None
    flat_end: tuple[float, float]

    def __call__(self, t):
        """Return ``(alpha(t), alpha'(t))``."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        if self.kind == "plateau":
            u = (t - 0.125) / 0.75
            return 1.0 - smooth.smoothstep(u), -smooth.bump(u) / 0.75
        if self.kind == "linear-start":
            u = t / 0.875
            kappa = 9.0 / 14.0
            one_minus = np.minimum(u, 1.0) - smooth.smoothstep_integral(np.minimum(u, 1.0))
            b2 = 0.875 * (one_minus + kappa * smooth.smoothstep(u))
            db2 = 1.0 - smooth.smoothstep(u) + kappa * smooth.bump(u)
            return 1.0 - np.clip(b2, 0.0, 1.0), -db2
        raise DomainError(f"unknown alpha profile kind {self.kind!r}")

    def samples(self, times):
        return self(times)


def plateau_profile() -> AlphaProfile:
    """alpha = 1 on [0, 1/8], smooth monotone transition, alpha = 0 on [7/8, 1]."""
    return AlphaProfile("plateau", (0.0, 0.125), (0.875, 1.0))


def linear_start_profile() -> AlphaProfile:
    """alpha'(0) = -1, alpha = 0 on [7/8, 1]."""
    return AlphaProfile("linear-start", None, (0.875, 1.0))


# -- reparametrizations ------------------------------------------------------------

@dataclass(frozen=True)
class Reparam:
    """Monotone map from path time t to base time s, with ds/dt."""

    fn: Callable
    label: str

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    @staticmethod
    def identity() -> "Reparam":
        return Reparam(lambda t: (t.copy(), np.ones_like(t)), "identity")

    def then(self, inner: "Reparam") -> "Reparam":
        """Path t -> self(inner(t)): reparametrize an already-mapped path."""
        outer = self

        def fn(t):
            u, du = inner(t)
            s, ds = outer(u)
            return s, ds * du

        return Reparam(fn, f"{outer.label}o{inner.label}")


def _log_map(c):
    t0 = np.exp(-1.0 / c)

    def fn(t):
        s = np.zeros_like(t)
        ds = np.zeros_like(t)
        m = t >= t0
        s[m] = np.clip(c * np.log(t[m]) + 1.0, 0.0, 1.0)
        ds[m] = c / t[m]
        return s, ds

    return Reparam(fn, f"log(c={c:g})")


def sigma_theta(theta: float):
    """Mollified version of min(t/(1-2 theta), 1).

    Returns a callable ``t -> (sigma, sigma')`` with sigma linear on
    [0, 1-3 theta], equal to 1 on [1-theta, 1], and
    0 <= sigma' <= 1/(1-2 theta).  The kink is smoothed by a compactly
    supported mollifier of radius theta/2.
    """
    if not (0.0 < theta < 1.0 / 3.0):
        raise DomainError(f"theta must lie in (0, 1/3), got {theta}")
    slope = 1.0 / (1.0 - 2.0 * theta)
    kink = 1.0 - 2.0 * theta
    radius = theta / 2.0

    def fn(t):
        t = np.asarray(t, dtype=float)
        x = t - kink
        sig = slope * (t - smooth.mollifier_ramp(x, radius))
        dsig = slope * (1.0 - smooth.mollifier_cdf(x, radius))
        far_left = x <= -radius
        far_right = x >= radius
        sig = np.where(far_left, slope * t, np.where(far_right, 1.0, sig))
        dsig = np.where(far_left, slope, np.where(far_right, 0.0, dsig))
        return np.clip(sig, 0.0, 1.0), np.maximum(dsig, 0.0)

    return fn


# -- the conformal construction --------------------------------------------------------

class MSBuilder:
    """Evaluates the conformal path data at arbitrary base times s."""

    def __init__(self, cm: ConformalMetric, profile: AlphaProfile):
        self.cm = cm
        self.profile = profile
        self.grid = cm.grid
        self.tr = transform_for(self.grid)
        self.w = cm.w.values
        self.w_spec = cm.w_spec
        self.lap_w = cm.lap_w
        self.w_t, self.w_p = self.tr.grad(self.w_spec)
        self.log_area = np.log(FOUR_PI * cm.rg ** 2)
        self.round = cm.is_round()

    def scalars(self, s):
        """alpha, alpha', a, a' at base times s (arrays)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        al, dal = self.profile(s)
        al = np.atleast_1d(al)
        dal = np.atleast_1d(dal)
        a = np.empty_like(s)
        da = np.empty_like(s)
        for k in range(s.size):
            e = np.exp(2.0 * al[k] * self.w)
            i0 = self.tr.integrate(e)
            i1 = self.tr.integrate(self.w * e)
            a[k] = self.log_area - np.log(i0)
            da[k] = -2.0 * dal[k] * i1 / i0
        return al, dal, a, da

    def generator(self, s, speed=1.0):
        """(alpha, a, phi coefficients) for one slice; phi scaled by speed."""
        al, dal, a, da = self.scalars([s])
        al, dal, a, da = al[0], dal[0], a[0], da[0]
        L = self.grid.lmax + 1
        if dal == 0.0 or speed == 0.0 or self.round:
            return al, a, np.zeros((2, L, L))
        v = al * self.w + 0.5 * a
        vdot = dal * self.w + 0.5 * da
        rhs = -2.0 * speed * vdot * np.exp(2.0 * v)
        self._check_solvable(rhs, s)
        return al, a, _inv_lap(self.tr.analyze(rhs), self.tr.eig)

    def _check_solvable(self, rhs, s):
        rhs = rhs.reshape((-1,) + self.grid.shape)
        total = self.tr.integrate(rhs)
        tol = 1e-9 * np.max(np.abs(rhs), axis=(-2, -1)) * FOUR_PI
        bad = np.abs(total) > np.maximum(tol, 1e-300)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise PathConstructionError(
                f"Poisson solvability residual {total[k]:.3e} exceeds {tol[k]:.3e} "
                f"at s={np.atleast_1d(s)[k]:.6g}; area normalization is broken")

    def point_data(self, s, speed, theta, phi):
        """(K, gp2) at one base time s and arbitrary points, by spectral evaluation."""
        al, a, pspec = self.generator(float(s), float(speed))
        lmax = self.grid.lmax
        w = point_jet(self.w_spec, theta, phi, lmax)
        v = al * w["f"] + 0.5 * a
        e2v = np.exp(2.0 * v)
        K = (1.0 - al * w["lap"]) / e2v
        if not np.any(pspec):
            return K, np.zeros_like(K)
        f = point_jet(pspec, theta, phi, lmax)
        st = np.sin(np.atleast_1d(theta))
        cot = np.cos(np.atleast_1d(theta)) / st
        pp = f["f_pp"] / st ** 2 + cot * f["f_t"]
        tp = (f["f_tp"] - cot * f["f_p"]) / st
        tt = f["lap"] - pp
        v_t, v_p = al * w["f_t"], al * w["f_p"] / st
        f_t, f_p = f["f_t"], f["f_p"] / st
        tt = tt - 2.0 * v_t * f_t
        pp = pp - 2.0 * v_p * f_p
        tp = tp - (v_t * f_p + v_p * f_t)
        return K, 4.0 * (0.5 * (tt - pp) ** 2 + 2.0 * tp ** 2) / e2v ** 2

    def slices(self, s, speed):
        """Full per-slice data at base times s with time-derivative scale speed."""
        s = np.asarray(s, dtype=float)
        speed = np.asarray(speed, dtype=float)
        al, dal, a, da = self.scalars(s)
        n = s.size
        g = self.grid
        L = g.lmax + 1
        K = np.empty((n,) + g.shape)
        gp2 = np.zeros((n,) + g.shape)
        phi = np.zeros((n, 2, L, L))
        eff = dal * speed
        moving = np.flatnonzero((eff != 0.0) & (not self.round))
        still = np.setdiff1d(np.arange(n), moving)
        for k in still:
            v = al[k] * self.w + 0.5 * a[k]
            K[k] = np.exp(-2.0 * v) * (1.0 - al[k] * self.lap_w)
        for start in range(0, moving.size, _CHUNK):
            idx = moving[start:start + _CHUNK]
            A = al[idx][:, None, None]
            v = A * self.w + 0.5 * a[idx][:, None, None]
            vdot = speed[idx][:, None, None] * (dal[idx][:, None, None] * self.w
                                                + 0.5 * da[idx][:, None, None])
            e2v = np.exp(2.0 * v)
            rhs = -2.0 * vdot * e2v
            self._check_solvable(rhs, s[idx])
            pspec = _inv_lap(self.tr.analyze(rhs), self.tr.eig)
            phi[idx] = pspec
            K[idx] = (1.0 - A * self.lap_w) / e2v
            gp2[idx] = _tracefree_norm(self.tr, pspec, A * self.w_t, A * self.w_p, e2v)
        return dict(alpha=al, dalpha=dal, a=a, da=da, K=K, gp2=gp2, phi=phi)


def _inv_lap(spec, eig):
    inv = np.zeros_like(eig)
    inv[1:] = 1.0 / eig[1:]
    return spec * inv


def _tracefree_norm(tr, pspec, v_t, v_p, e2v):
    """4 |Hess^TF_gbar phi|^2_gbar for gbar = exp(2v) g*."""
    tt, tp, pp = tr.hessian(pspec)
    f_t, f_p = tr.grad(pspec)
    # conformal correction -dv(x)dphi - dphi(x)dv; the g* multiple drops out of TF
    tt = tt - 2.0 * v_t * f_t
    pp = pp - 2.0 * v_p * f_p
    tp = tp - (v_t * f_p + v_p * f_t)
    return 4.0 * (0.5 * (tt - pp) ** 2 + 2.0 * tp ** 2) / e2v ** 2


# -- the path container -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AdmissiblePath:
    times: np.ndarray
    base_times: np.ndarray
    speed: np.ndarray
    alpha: np.ndarray
    dalpha: np.ndarray
    a: np.ndarray
    da: np.ndarray
    K: np.ndarray
    gp2: np.ndarray
    phi: np.ndarray
    rg: float
    const_tail: float
    builder: MSBuilder = field(repr=False)
    reparam: Reparam = field(default_factory=Reparam.identity)

    @property
    def grid(self):
        return self.builder.grid

    @property
    def profile(self):
        return self.builder.profile

    @property
    def cm(self):
        return self.builder.cm

    def __len__(self):
        return self.times.size

    def v(self, k: int) -> np.ndarray:
        return self.alpha[k] * self.builder.w + 0.5 * self.a[k]

    def vdot(self, k: int) -> np.ndarray:
        return self.speed[k] * (self.dalpha[k] * self.builder.w + 0.5 * self.da[k])

    def v_field(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.v(k))

    def vdot_field(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.vdot(k))

    def K_field(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.K[k])

    def gp2_field(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.gp2[k])

    def resample(self, times) -> "AdmissiblePath":
        """Exact re-evaluation of the same path at new times."""
        return _assemble(self.builder, self.reparam, np.asarray(times, dtype=float),
                         self.const_tail)

    def slice_data(self, times):
        """(K, gp2) evaluated exactly at arbitrary path times."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        s, ds = self.reparam(times)
        d = self.builder.slices(s, ds)
        return d["K"], d["gp2"]

    def interpolate(self, t: float):
        """(K, gp2) at t by nearest-slice snap or linear interpolation in t."""
        times = self.times
        t = float(np.clip(t, times[0], times[-1]))
        j = int(np.searchsorted(times, t))
        if j < times.size and abs(times[j] - t) <= 1e-12:
            return self.K[j], self.gp2[j]
        if j > 0 and abs(times[j - 1] - t) <= 1e-12:
            return self.K[j - 1], self.gp2[j - 1]
        lo, hi = j - 1, j
        lam = (t - times[lo]) / (times[hi] - times[lo])
        return ((1 - lam) * self.K[lo] + lam * self.K[hi],
                (1 - lam) * self.gp2[lo] + lam * self.gp2[hi])

    def point_data(self, t: float, theta, phi):
        """(K, gp2) at path time t and arbitrary points."""
        s, ds = self.reparam(np.array([float(t)]))
        return self.builder.point_data(s[0], ds[0], theta, phi)

    def generator_at(self, t: float):
        """(alpha, a, phi coefficients) at path time t, phi scaled by dt."""
        s, ds = self.reparam(np.array([t]))
        return self.builder.generator(float(s[0]), float(ds[0]))

    def summary_rows(self):
        for k in range(len(self)):
            yield (float(self.times[k]), float(self.a[k]), float(self.K[k].min()),
                   float(self.K[k].max()), float(self.gp2[k].max()))


def _assemble(builder, reparam, times, const_tail=None):
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise DomainError("path times must be a strictly increasing 1-D array")
    s, ds = reparam(times)
    d = builder.slices(s, ds)
    if const_tail is None:
        const_tail = _const_tail(builder, reparam)
    return AdmissiblePath(times=times, base_times=s, speed=ds, alpha=d["alpha"],
                          dalpha=d["dalpha"], a=d["a"], da=d["da"], K=d["K"],
                          gp2=d["gp2"], phi=d["phi"], rg=builder.cm.rg,
                          const_tail=float(const_tail), builder=builder, reparam=reparam)


def _const_tail(builder, reparam):
    if builder.round:
        return 1.0
    s_flat = builder.profile.flat_end[0]

    def gap(t):
        return reparam(np.array([t]))[0][0] - s_flat

    if gap(1.0) < 0:
        return 0.0
    if gap(0.0) >= 0:
        return 1.0
    t_star = brentq(gap, 0.0, 1.0, xtol=1e-14)
    # brentq may land a hair below the crossing
    while gap(t_star) < 0:
        t_star = np.nextafter(t_star, 2.0)
    return 1.0 - t_star


def build_ms_path(cm: ConformalMetric, profile: AlphaProfile | None = None,
                  n_times: int = DEFAULT_N_TIMES, times=None) -> AdmissiblePath:
    """Conformal path exp(2 alpha w + a) g* pulled back by the area-fixing flow."""
    profile = plateau_profile() if profile is None else profile
    if times is None:
        if n_times < 65:
            raise DomainError(f"n_times must be at least 65, got {n_times}")
        times = np.linspace(0.0, 1.0, n_times)
    return _assemble(MSBuilder(cm, profile), Reparam.identity(), np.asarray(times, dtype=float))


def reparam_log(cm: ConformalMetric, profile: AlphaProfile, c: float,
                n_times: int = DEFAULT_N_TIMES, builder: MSBuilder | None = None) -> AdmissiblePath:
    """The path t -> h(c log t + 1), equal to g for t <= exp(-1/c).

    Slices are placed at t = exp((s_k - 1)/c) for uniform s_k, so the moving
    part of the path stays resolved for every c.
    """
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if profile.kind != "plateau":
        raise DomainError("the logarithmic splice needs a plateau profile (constant near 0)")
    builder = MSBuilder(cm, profile) if builder is None else builder
    s_grid = np.linspace(0.0, 1.0, n_times)
    times = np.concatenate([[0.0], np.exp((s_grid - 1.0) / c)])
    times[-1] = 1.0
    return _assemble(builder, _log_map(c), times)


def reparam_mollify(path: AdmissiblePath, theta: float) -> AdmissiblePath:
    """The path t -> g(sigma_theta(t)), constant on [1 - theta, 1]."""
    sig = sigma_theta(theta)
    rep = path.reparam.then(Reparam(sig, f"sigma({theta:g})"))
    out = _assemble(path.builder, rep, path.times)
    return replace(out, const_tail=max(out.const_tail, theta))


# -- admissibility diagnostics ---------------------------------------------------------

@dataclass
class AdmissibilityReport:
    ok: bool
    a0: float
    area_rel: float
    k1_spread: float
    trace_residual: float
    violations: list[str]

    def as_dict(self):
        return dict(ok=self.ok, a0=self.a0, area_rel=self.area_rel, k1_spread=self.k1_spread,
                    trace_residual=self.trace_residual, violations=list(self.violations))


def verify_admissible(path: AdmissiblePath, tol: float = 1e-8) -> AdmissibilityReport:
    tr = transform_for(path.grid)
    target = FOUR_PI * path.rg ** 2
    area_rel = 0.0
    trace_res = 0.0
    for k in range(len(path)):
        v = path.v(k)
        e2v = np.exp(2.0 * v)
        area_rel = max(area_rel, abs(tr.integrate(e2v) / target - 1.0))
        lap_phi = tr.synthesize(tr.laplacian_spec(path.phi[k]))
        res = 4.0 * path.vdot(k) + 2.0 * lap_phi / e2v
        trace_res = max(trace_res, float(np.max(np.abs(res))))
    a0 = abs(float(path.a[0]))
    k1 = path.K[-1]
    spread = float(k1.max() - k1.min())
    checks = [("a(0) != 0", a0), ("area not constant", area_rel),
              ("g(1) not round", spread), ("trace of g' nonzero", trace_res)]
    violations = [f"{name}: {val:.3e} > {tol:.1e}" for name, val in checks if val > tol]
    return AdmissibilityReport(not violations, a0, area_rel, spread, trace_res, violations)


# -- flow maps ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FlowMaps:
    times: np.ndarray
    positions: np.ndarray  # (n_times, n_points, 3)
    initial: np.ndarray
    order: int = 4
    rejected_steps: int = 0

    def angles(self, k=None):
        pos = self.positions if k is None else self.positions[k]
        theta = np.arccos(np.clip(pos[..., 2], -1.0, 1.0))
        phi = np.arctan2(pos[..., 1], pos[..., 0])
        return theta, phi


def _to_cart(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _velocity(path, t, pts):
    al, a, pspec = path.generator_at(t)
    if not np.any(pspec):
        return np.zeros_like(pts)
    r = np.linalg.norm(pts, axis=-1)
    u = pts / r[:, None]
    theta = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
    phi = np.arctan2(u[:, 1], u[:, 0])
    lmax = path.grid.lmax
    w_spec = path.builder.w_spec
    # orders whose coefficients are at roundoff level are dropped
    sw = np.max(np.abs(w_spec), axis=(0, 2))
    sp = np.max(np.abs(pspec), axis=(0, 2))
    used = np.flatnonzero((sw > 1e-15 * sw.max()) | (sp > 1e-15 * sp.max()))
    M = int(used.max()) + 1 if used.size else 1
    P, dP = legendre_tables(lmax, np.cos(theta), mmax=M - 1)
    w_spec, pspec = w_spec[:, :M], pspec[:, :M]
    m = np.arange(M, dtype=float)
    cm_ = np.cos(m[:, None] * phi[None, :])
    sm_ = np.sin(m[:, None] * phi[None, :])

    def ev(spec):
        Gc = np.einsum("ml,mlk->mk", spec[0], P)
        Gs = np.einsum("ml,mlk->mk", spec[1], P)
        dGc = np.einsum("ml,mlk->mk", spec[0], dP)
        dGs = np.einsum("ml,mlk->mk", spec[1], dP)
        val = np.sum(Gc * cm_ + Gs * sm_, axis=0)
        f_t = np.sum(dGc * cm_ + dGs * sm_, axis=0)
        f_p = np.sum(m[:, None] * (Gs * cm_ - Gc * sm_), axis=0)
        return val, f_t, f_p

    wv, _, _ = ev(w_spec)
    _, p_t, p_p = ev(pspec)
    conf = np.exp(-2.0 * (al * wv + 0.5 * a))
    st = np.sin(theta)
    x_t = conf * p_t
    x_p = conf * p_p / st
    e_t = np.stack([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -st], axis=-1)
    e_p = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)
    return x_t[:, None] * e_t + x_p[:, None] * e_p


def build_flow_maps(path: AdmissiblePath, n_substeps: int = 4, points=None,
                    times=None, sphere_tol: float = 1e-8) -> FlowMaps:
    """Integrate d/dt xi_t = X_t(xi_t) with classical RK4 on the unit sphere.

    ``points`` is ``(theta, phi)`` arrays of initial nodes (default: a
    16 x 16 subsample of the grid); ``times`` the output times (default: the
    path times).  Steps whose RK4 update leaves the sphere by more than
    ``sphere_tol`` are rejected and halved.
    """
    if points is None:
        g = path.grid
        th = g.theta[:: max(1, g.n_lat // 16)]
        ph = g.phi[:: max(1, g.n_lon // 16)]
        T, P = np.meshgrid(th, ph, indexing="ij")
        points = (T.ravel(), P.ravel())
    x = _to_cart(np.asarray(points[0], float), np.asarray(points[1], float))
    times = path.times if times is None else np.asarray(times, dtype=float)
    out = np.empty((times.size,) + x.shape)
    t = 0.0
    rejected = 0
    k0 = 0
    if times[0] == 0.0:
        out[0] = x
        k0 = 1
    for k in range(k0, times.size):
        t_end = times[k]
        h = (t_end - t) / n_substeps
        for _ in range(n_substeps):
            x, nrej = _rk4_step(path, t, x, h, sphere_tol)
            rejected += nrej
            t += h
        t = t_end
        out[k] = x
    return FlowMaps(times=times, positions=out, initial=_to_cart(*map(np.asarray, points)),
                    rejected_steps=rejected)


def _rk4_step(path, t, x, h, tol, depth=0):
    k1 = _velocity(path, t, x)
    k2 = _velocity(path, t + 0.5 * h, x + 0.5 * h * k1)
    k3 = _velocity(path, t + 0.5 * h, x + 0.5 * h * k2)
    k4 = _velocity(path, t + h, x + h * k3)
    y = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    drift = np.max(np.abs(np.linalg.norm(y, axis=-1) - 1.0))
    if drift > tol:
        if depth >= 12:
            raise PathConstructionError(f"flow step left the sphere by {drift:.2e}")
        y, n1 = _rk4_step(path, t, x, 0.5 * h, tol, depth + 1)
        y, n2 = _rk4_step(path, t + 0.5 * h, y, 0.5 * h, tol, depth + 1)
        return y, 1 + n1 + n2
    return y / np.linalg.norm(y, axis=-1)[:, None], 0


# -- output ----------------------------------------------------------------------------

def clustered_times(n: int) -> np.ndarray:
    """t_k = (k/n)^2 for k = 1..n (t = 0 excluded)."""
    return (np.arange(1, n + 1) / n) ** 2


def write_path_csv(path_obj: AdmissiblePath, fname) -> None:
    with open(fname, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "a", "K_min", "K_max", "gp2_max"])
        for row in path_obj.summary_rows():
            w.writerow([repr(v) for v in row])
