"""Collar metrics gamma = E(t) g(t) + Phi(t)^2 dt^2 and their curvature checks.

The collar is built over an admissible path g(t) (pulled back by its
area-fixing flow, so K and |g'|^2 are the per-slice scalars stored on the
path).  Everything about E and Phi is analytic; only the path data is
sampled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import smooth
from .admiss import gh_margin, large_H_admissibility
from .errors import ConfigurationError, ConstructionError, DomainError
from .mspath import AdmissiblePath, FlowMaps, build_flow_maps, clustered_times
from .sphgrid import FOUR_PI, legendre_tables, transform_for

__all__ = [
    "Theorem1Profile",
    "Theorem2Profile",
    "CollarSpec",
    "CollarReport",
    "OracleField",
    "make_collar",
    "mean_curvature",
    "scalar_curvature_formula",
    "scalar_curvature_field",
    "hawking_mass",
    "hawking_mass_quadrature",
    "verify_collar",
    "fd_scalar_curvature",
    "warped_oracle",
    "oracle_scalar_curvature",
    "schwarzschild_eq12",
    "schwarzschild_oracle",
    "write_collar_csv",
    "FAMILIES",
]

FAMILIES = ("theorem1", "theorem1-largeH", "theorem2")


# -- analytic profiles --------------------------------------------------------------

@dataclass(frozen=True)
class Theorem1Profile:
    """E = 1 + C sqrt(t), Phi = A / sqrt(t)."""

    C: float
    A: float

    def E(self, t):
        t = np.asarray(t, dtype=float)
        r = np.sqrt(t)
        with np.errstate(divide="ignore"):
            return 1.0 + self.C * r, 0.5 * self.C / r, -0.25 * self.C / (t * r)

    def Phi(self, t):
        t = np.asarray(t, dtype=float)
        r = np.sqrt(t)
        with np.errstate(divide="ignore"):
            return self.A / r, -0.5 * self.A / (t * r)


@dataclass(frozen=True)
class Theorem2Profile:
    """E = 1 + eps t; Phi linear, then a smooth unit rise, then constant.

    On [1/4, 1/2] the slope is A (1 - S((t - 1/4)/w)) + kappa * psi(t) with
    S the smooth step, w = min(1/4, 1/A) and psi a unit-mass bump on the
    bridge; kappa = 1 - A w / 2 makes the total rise exactly 1.  All
    derivatives match at both junctions.
    """

    eps: float
    H: float
    A: float

    @property
    def width(self) -> float:
        return 0.25 if self.A <= 4.0 else 1.0 / self.A

    @property
    def kappa(self) -> float:
        return 1.0 - 0.5 * self.A * self.width

    def E(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 + self.eps * t, np.full_like(t, self.eps), np.zeros_like(t)

    def Phi(self, t):
        t = np.asarray(t, dtype=float)
        base = 0.25 * self.A + self.eps / self.H
        w = self.width
        y = np.clip(t - 0.25, 0.0, 0.25)
        rise = self.A * (y - w * smooth.smoothstep_integral(y / w)) \
            + self.kappa * smooth.smoothstep(4.0 * y)
        slope = self.A * (1.0 - smooth.smoothstep(y / w)) + 4.0 * self.kappa * smooth.bump(4.0 * y)
        lin = t <= 0.25
        val = np.where(lin, self.A * t + self.eps / self.H, base + rise)
        dval = np.where(lin, self.A, np.where(t >= 0.5, 0.0, slope))
        return val, dval


# -- spec and report ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CollarSpec:
    path: AdmissiblePath
    family: str
    H: float
    params: dict
    profile: object

    @property
    def rg(self) -> float:
        return self.path.rg

    def E(self, t):
        return self.profile.E(t)

    def Phi(self, t):
        return self.profile.Phi(t)


@dataclass(frozen=True)
class CollarReport:
    min_R: float
    min_Ht: float
    H0_limit_err: float
    mH_sigma1: float
    mH_sigma1_closed_form: float
    slices_evaluated: int
    times: np.ndarray = field(repr=False, default=None)
    min_R_per_slice: np.ndarray = field(repr=False, default=None)
    Ht: np.ndarray = field(repr=False, default=None)

    def as_dict(self):
        return dict(min_R=self.min_R, min_Ht=self.min_Ht, H0_limit_err=self.H0_limit_err,
                    mH_sigma1=self.mH_sigma1, mH_sigma1_closed_form=self.mH_sigma1_closed_form,
                    slices_evaluated=self.slices_evaluated)


def make_collar(path: AdmissiblePath, family: str, H: float, C: float | None = None,
                eps: float | None = None, A: float | None = None) -> CollarSpec:
    """Collar over ``path`` for one of the three families.

    theorem1 needs C with a positive margin at (C, H).  theorem1-largeH
    takes C from the large-H threshold (computed when omitted) and replaces
    it by c = H^2 rg^2 / 4 - 1.  theorem2 needs eps and chooses A from the
    path unless A is given.
    """
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown collar family {family!r}; choose from {FAMILIES}")
    if not H > 0:
        raise DomainError(f"H must be positive, got {H}")
    if not path.const_tail > 0:
        raise ConstructionError("path is not constant near t = 1 (const_tail = 0)")
    rg = path.rg
    if family == "theorem1":
        if C is None or not C > 0:
            raise ConstructionError("theorem1 needs a positive C")
        fm = gh_margin(path, C, H)
        if not fm.feasible:
            raise ConstructionError(
                f"(g, H)-admissibility fails at C={C:g}: margin {fm.margin:.3e} at t={fm.argmin[0]:.4g}")
        return CollarSpec(path, family, float(H), dict(C=float(C), A=C / (2 * H), margin=fm.margin),
                          Theorem1Profile(float(C), C / (2 * H)))
    if family == "theorem1-largeH":
        if C is None:
            C = large_H_admissibility(path).C
        h_req = 2.0 * math.sqrt(1.0 + C) / rg
        if H < h_req:
            raise ConstructionError(
                f"large-H collar needs H >= 2 sqrt(1+C)/rg = {h_req:.6g}, got H={H:g}")
        c = H * H * rg * rg / 4.0 - 1.0
        fm = gh_margin(path, c, H)
        if not fm.feasible:
            raise ConstructionError(
                f"(g, H)-admissibility fails at c={c:g}: margin {fm.margin:.3e}; H is below H_min")
        return CollarSpec(path, family, float(H),
                          dict(C=float(C), c=c, A=c / (2 * H), margin=fm.margin),
                          Theorem1Profile(c, c / (2 * H)))
    # theorem2
    if eps is None or not eps > 0:
        raise ConstructionError("theorem2 needs a positive eps")
    if path.profile.kind != "linear-start":
        raise ConstructionError("theorem2 needs a path built with the linear-start profile")
    if float(path.K[0].min()) < 0:
        raise ConstructionError("theorem2 needs K_g >= 0")
    C2 = 0.25 * float(path.gp2.max())
    delta = 0.25 if C2 == 0 else min(0.25, eps / (2.0 * C2))
    pos = path.times > 0
    c_lin = float(np.min(path.K[pos].reshape(int(pos.sum()), -1).min(axis=1) / path.times[pos]))
    if not c_lin > 0:
        raise ConstructionError(f"K_t >= c t fails: linear curvature constant {c_lin:.3e}")
    A_auto = 1.05 * max(2.0 * C2 / H, math.sqrt(C2 / (c_lin * delta ** 3)))
    A_used = A_auto if A is None else float(A)
    if not A_used >= 0:
        raise ConstructionError("A must be nonnegative")
    return CollarSpec(path, family, float(H),
                      dict(eps=float(eps), delta=delta, C2=C2, c_lin=c_lin, A=A_used, A_auto=A_auto),
                      Theorem2Profile(float(eps), float(H), A_used))


# -- curvature ----------------------------------------------------------------------

def mean_curvature(spec: CollarSpec, t: float, return_flag: bool = False):
    """H_t = E'/(Phi E); at t = 0 for theorem1 families the limit H is returned."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    limit = t == 0.0 and spec.family != "theorem2"
    if limit:
        val = spec.params["C" if spec.family == "theorem1" else "c"] / (2.0 * spec.params["A"])
    else:
        E, dE, _ = spec.E(t)
        Phi, _ = spec.Phi(t)
        val = float(dE / (Phi * E))
    return (float(val), limit) if return_flag else float(val)


def scalar_curvature_formula(K, gp2, E, dE, ddE, Phi, dPhi):
    """R = E^-1 Phi^-2 [2K Phi^2 - 2E'' - E|g'|^2/4 + E'^2/(2E) + 2E' Phi'/Phi]."""
    bracket = 2.0 * K * Phi * Phi - 2.0 * ddE - 0.25 * E * gp2 + 0.5 * dE * dE / E \
        + 2.0 * dE * dPhi / Phi
    return bracket / (E * Phi * Phi)


def _R_slices(spec, times, K, gp2):
    E, dE, ddE = spec.E(times)
    Phi, dPhi = spec.Phi(times)
    sh = (-1,) + (1,) * (K.ndim - 1)
    return scalar_curvature_formula(K, gp2, E.reshape(sh), dE.reshape(sh), ddE.reshape(sh),
                                    Phi.reshape(sh), dPhi.reshape(sh))


def scalar_curvature_field(spec: CollarSpec, t: float, exact: bool = True) -> np.ndarray:
    """R_gamma on the grid at time t in (0, 1].

    Slice data is evaluated exactly from the path builder; with
    ``exact=False`` it is snapped or linearly interpolated from stored slices.
    """
    t = float(t)
    if not 0.0 < t <= 1.0:
        raise DomainError(f"t must lie in (0, 1], got {t}")
    if exact:
        K, gp2 = spec.path.slice_data([t])
    else:
        K, gp2 = (x[None] for x in spec.path.interpolate(t))
    return _R_slices(spec, np.array([t]), K, gp2)[0]


def hawking_mass(spec: CollarSpec, t: float) -> float:
    """(rg sqrt(E)/2)(1 - rg^2 E'^2 / (4 E Phi^2)), using |Sigma_t| = 4 pi rg^2 E."""
    t = float(t)
    rg = spec.rg
    if t == 0.0 and spec.family != "theorem2":
        return 0.5 * rg * (1.0 - rg * rg * spec.H * spec.H / 4.0)
    E, dE, _ = spec.E(t)
    Phi, _ = spec.Phi(t)
    return float(0.5 * rg * math.sqrt(E) * (1.0 - rg * rg * dE * dE / (4.0 * E * Phi * Phi)))


def hawking_mass_quadrature(spec: CollarSpec, t: float) -> float:
    """sqrt(|Sigma|/16 pi)(1 - (1/16 pi) int H_t^2 dA) with the area from the slice metric."""
    path = spec.path
    s, _ = path.reparam(np.array([float(t)]))
    al, _, a, _ = path.builder.scalars(s)
    e2v = np.exp(2.0 * (al[0] * path.builder.w + 0.5 * a[0]))
    E, _, _ = spec.E(float(t))
    tr = transform_for(path.grid)
    Ht = mean_curvature(spec, t)
    area = float(E) * tr.integrate(e2v)
    int_H2 = float(E) * tr.integrate(Ht * Ht * e2v)
    return float(math.sqrt(area / (4.0 * FOUR_PI)) * (1.0 - int_H2 / (4.0 * FOUR_PI)))


def verify_collar(spec: CollarSpec, n_clustered: int | None = None) -> CollarReport:
    """Scalar curvature, mean curvature and Hawking mass checks.

    Slices are the path's own times plus the clustered times (k/N)^2,
    k >= 1; t = 0 is excluded and the H_t limit there is analytic.
    """
    path = spec.path
    n = len(path) - 1 if n_clustered is None else int(n_clustered)
    own = path.times[path.times > 0]
    extra = clustered_times(n)
    extra = extra[np.min(np.abs(extra[:, None] - own[None, :]), axis=1) > 1e-14]
    mins = []
    R_own = _R_slices(spec, own, path.K[path.times > 0], path.gp2[path.times > 0])
    mins.append(R_own.reshape(own.size, -1).min(axis=1))
    for start in range(0, extra.size, 64):
        tt = extra[start:start + 64]
        K, gp2 = path.slice_data(tt)
        mins.append(_R_slices(spec, tt, K, gp2).reshape(tt.size, -1).min(axis=1))
    times = np.concatenate([own, extra])
    minR = np.concatenate(mins)
    order = np.argsort(times)
    times, minR = times[order], minR[order]
    E, dE, _ = spec.E(times)
    Phi, _ = spec.Phi(times)
    Ht = dE / (Phi * E)
    H0 = mean_curvature(spec, 0.0)
    return CollarReport(
        min_R=float(minR.min()),
        min_Ht=float(Ht.min()),
        H0_limit_err=abs(H0 - spec.H),
        mH_sigma1=hawking_mass_quadrature(spec, 1.0),
        mH_sigma1_closed_form=hawking_mass(spec, 1.0),
        slices_evaluated=int(times.size),
        times=times,
        min_R_per_slice=minR,
        Ht=Ht,
    )


def write_collar_csv(spec: CollarSpec, report: CollarReport, fname) -> None:
    t = report.times
    E, dE, ddE = spec.E(t)
    Phi, dPhi = spec.Phi(t)
    with open(fname, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "E", "dE", "ddE", "Phi", "dPhi", "H_t", "min_R"])
        for row in zip(t, E, dE, ddE, Phi, dPhi, report.Ht, report.min_R_per_slice):
            w.writerow([repr(float(v)) for v in row])


# -- finite-difference oracle -------------------------------------------------------

def _d4(f, axis, h):
    """Fourth-order centered derivative; the two outermost layers are NaN."""
    f = np.moveaxis(f, axis, -1)
    out = np.full_like(f, np.nan)
    out[..., 2:-2] = (f[..., :-4] - 8.0 * f[..., 1:-3] + 8.0 * f[..., 3:-1] - f[..., 4:]) / (12.0 * h)
    return np.moveaxis(out, -1, axis)


def _dd4(f, axis, h):
    """Fourth-order centered second derivative; the two outermost layers are NaN."""
    f = np.moveaxis(f, axis, -1)
    out = np.full_like(f, np.nan)
    out[..., 2:-2] = (-f[..., :-4] + 16.0 * f[..., 1:-3] - 30.0 * f[..., 2:-2]
                      + 16.0 * f[..., 3:-1] - f[..., 4:]) / (12.0 * h * h)
    return np.moveaxis(out, -1, axis)


def fd_scalar_curvature(metric: np.ndarray, spacing) -> np.ndarray:
    """Scalar curvature of a 3-metric depending on the first two coordinates.

    ``metric`` has shape (3, 3, n0, n1); the third coordinate is a symmetry
    direction.  Metric derivatives use fourth-order centered stencils (direct
    second-derivative stencils on the diagonal), Christoffel symbols and
    their derivatives are assembled from them, and the result is NaN on a
    4-point border.
    """
    h0, h1 = spacing
    ginv = np.moveaxis(np.linalg.inv(np.moveaxis(metric, (0, 1), (-2, -1))), (-2, -1), (0, 1))
    zero = np.zeros_like(metric)
    d0, d1 = _d4(metric, 2, h0), _d4(metric, 3, h1)
    dg = np.stack([d0, d1, zero])  # dg[a,b,c] = d_a g_bc
    mixed = _d4(d0, 3, h1)
    ddg = np.stack([np.stack([_dd4(metric, 2, h0), mixed, zero]),
                    np.stack([mixed, _dd4(metric, 3, h1), zero]),
                    np.stack([zero, zero, zero])])  # ddg[a,b,i,j] = d_a d_b g_ij

    def lowered(d):
        # L[l,i,j] = d_i g_jl + d_j g_il - d_l g_ij
        return d.transpose(2, 0, 1, 3, 4) + d.transpose(2, 1, 0, 3, 4) - d

    gam = 0.5 * np.einsum("kl...,lij...->kij...", ginv, lowered(dg))
    dginv = -np.einsum("kl...,alm...,mn...->akn...", ginv, dg, ginv)
    dlow = np.stack([lowered(ddg[a]) for a in range(3)])
    dgam = 0.5 * (np.einsum("akl...,lij...->akij...", dginv, lowered(dg))
                  + np.einsum("kl...,alij...->akij...", ginv, dlow))
    ric = (np.einsum("kkij...->ij...", dgam)
           - np.einsum("jkik...->ij...", dgam)
           + np.einsum("kkl...,lij...->ij...", gam, gam)
           - np.einsum("kjl...,lik...->ij...", gam, gam))
    return np.einsum("ij...,ij...->...", ginv, ric)


def warped_oracle(x, theta0, Theta, v, E, lapse):
    """FD scalar curvature of lapse^2 dx^2 + E e^{2v} (Theta_theta^2 dtheta^2 + sin^2 Theta dphi^2).

    ``Theta`` and ``v`` are (n_x, n_theta) arrays on the uniform grid
    ``x`` x ``theta0``; ``E`` and ``lapse`` are per-row arrays.
    """
    ht = float(x[1] - x[0])
    hth = float(theta0[1] - theta0[0])
    Th_th = _d4(Theta, 1, hth)
    e = E[:, None] * np.exp(2.0 * v)
    g = np.zeros((3, 3) + Theta.shape)
    g[0, 0] = (lapse * lapse)[:, None]
    g[1, 1] = e * Th_th * Th_th
    g[2, 2] = e * np.sin(Theta) ** 2
    # pad the NaN border of Theta_theta so the FD stencils see finite values
    bad = ~np.isfinite(g)
    g[bad] = 1.0
    R = fd_scalar_curvature(g, (ht, hth))
    R[:, :6] = np.nan
    R[:, -6:] = np.nan
    return R


@dataclass(frozen=True)
class OracleField:
    t: np.ndarray
    theta0: np.ndarray
    R_fd: np.ndarray
    R_formula: np.ndarray

    def _inner(self):
        ok = np.isfinite(self.R_fd)
        return self.R_fd[ok], self.R_formula[ok]

    @property
    def rel_sup_diff(self) -> float:
        fd, fm = self._inner()
        return float(np.max(np.abs(fd - fm)) / np.max(np.abs(fm)))


def _axisym_eval(spec_lm, theta, lmax):
    """Value, theta-derivative and star-Laplacian of an m = 0 expansion at theta."""
    P, dP = legendre_tables(lmax, np.cos(theta), mmax=0)
    c = spec_lm[0, 0]
    ell = np.arange(lmax + 1)
    val = np.tensordot(c, P[0], axes=(0, 0))
    der = np.tensordot(c, dP[0], axes=(0, 0))
    lap = np.tensordot(-ell * (ell + 1.0) * c, P[0], axes=(0, 0))
    return val, der, lap


def oracle_scalar_curvature(spec: CollarSpec, flow: FlowMaps | None = None,
                            resolution: int = 256, t_range=(0.05, 1.0),
                            theta_margin: float = 0.15, n_substeps: int = 2,
                            log_time: bool = True) -> OracleField:
    """Independent R_gamma from the realized 3-metric on a (t, theta) grid.

    The path is realized as Theta(t, theta0), the meridian flow of the
    area-fixing vector field, so the collar metric is diagonal in
    (t, theta0, phi) and depends on (t, theta0) only.  Its scalar curvature
    is computed by finite differences and compared with the slice formula
    evaluated at the flowed points.  With ``log_time`` the grid is uniform
    in ln t (lapse Phi t), which resolves logarithmically spliced paths
    evenly.
    """
    path = spec.path
    cm = path.cm
    lmax = path.grid.lmax
    w_spec = cm.w_spec
    if np.max(np.abs(w_spec[:, 1:, :])) > 1e-12 * max(1.0, float(np.max(np.abs(w_spec)))):
        raise ConfigurationError("oracle supports axisymmetric metrics (m = 0 harmonics) only")
    n = int(resolution)
    pad = 6
    t_lo, t_hi = t_range
    if not 0.0 < t_lo < t_hi <= 1.0:
        raise DomainError(f"t_range must satisfy 0 < t_lo < t_hi <= 1, got {t_range}")
    lo, hi = (math.log(t_lo), math.log(t_hi)) if log_time else (t_lo, t_hi)
    hx = (hi - lo) / (n - 1)
    x = lo + hx * np.arange(-pad, n + pad)
    t = np.exp(x) if log_time else x
    if t[0] <= 0:
        raise DomainError("t_range too close to 0 for the oracle padding")
    hth = (math.pi - 2 * theta_margin) / (n - 1)
    theta0 = theta_margin + hth * np.arange(-pad, n + pad)
    if flow is None:
        step = t[1] - t[0]
        lead = np.linspace(0.0, t[0], max(2, int(math.ceil(t[0] / step)) + 1))[:-1]
        flow = build_flow_maps(path, n_substeps=n_substeps,
                               points=(theta0, np.zeros_like(theta0)),
                               times=np.concatenate([lead, t]))
        Theta = flow.angles()[0][lead.size:]
    else:
        Theta = flow.angles()[0]
        if Theta.shape != (t.size, theta0.size):
            raise ConfigurationError("flow map grid does not match the oracle grid")
    s, ds = path.reparam(t)
    al, dal, a, da = path.builder.scalars(s)
    w, w_t, lap_w = _axisym_eval(w_spec, Theta, lmax)
    v = al[:, None] * w + 0.5 * a[:, None]
    E, dE, ddE = spec.E(t)
    Phi, dPhi = spec.Phi(t)
    R_fd = warped_oracle(x, theta0, Theta, v, E, Phi * t if log_time else Phi)
    K = np.exp(-2.0 * v) * (1.0 - al[:, None] * lap_w)
    gp2 = np.zeros_like(K)
    for k in range(t.size):
        _, _, pspec = path.generator_at(float(t[k]))
        if not np.any(pspec):
            continue
        _, p_t, p_lap = _axisym_eval(pspec, Theta[k], lmax)
        cot = np.cos(Theta[k]) / np.sin(Theta[k])
        p_tt = p_lap - cot * p_t
        gp2[k] = 2.0 * np.exp(-4.0 * v[k]) * (p_tt - 2.0 * al[k] * w_t[k] * p_t - cot * p_t) ** 2
    R_formula = scalar_curvature_formula(K, gp2, E[:, None], dE[:, None], ddE[:, None],
                                         Phi[:, None], dPhi[:, None])
    sl = (slice(pad, -pad), slice(pad, -pad))
    return OracleField(t[pad:-pad], theta0[pad:-pad], R_fd[sl], R_formula[sl])


def schwarzschild_eq12(m: float, t) -> np.ndarray:
    """Slice formula on E = t^2, Phi = (1 - 2m/t)^(-1/2), g(t) the unit round metric."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 2 * m):
        raise DomainError("Schwarzschild slices need t > 2m")
    u = 1.0 - 2.0 * m / t
    Phi = u ** -0.5
    dPhi = -(m / (t * t)) * u ** -1.5
    return scalar_curvature_formula(1.0, 0.0, t * t, 2.0 * t, 2.0, Phi, dPhi)


def schwarzschild_oracle(m: float = 1.0, t_range=(3.0, 10.0), resolution: int = 512,
                         theta_margin: float = 0.15) -> OracleField:
    """FD scalar curvature of the spatial Schwarzschild metric t^2 g* + dt^2/(1 - 2m/t)."""
    n = int(resolution)
    t = np.linspace(*t_range, n)
    theta0 = np.linspace(theta_margin, math.pi - theta_margin, n)
    Theta = np.broadcast_to(theta0, (n, n)).copy()
    R = warped_oracle(t, theta0, Theta, np.zeros((n, n)), t * t, (1.0 - 2.0 * m / t) ** -0.5)
    return OracleField(t, theta0, R, np.broadcast_to(schwarzschild_eq12(m, t)[:, None], R.shape))
