"""(g, H)-admissibility margins, the C-infimum search, and mass bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .conformal import ConformalMetric, min_gauss_curvature
from .errors import DomainError, InfeasibleError
from .sphgrid import fold_angles
from .mspath import (DEFAULT_N_TIMES, AdmissiblePath, MSBuilder, build_ms_path,
                     plateau_profile, reparam_log)

__all__ = [
    "FeasibilityMargin",
    "CZeta",
    "DUpper",
    "LargeH",
    "BoundResult",
    "SearchConfig",
    "gh_margin",
    "required_C",
    "refine_czeta",
    "c_zeta",
    "d_upper",
    "destimate_closed_form",
    "closed_form_disagrees",
    "large_H_admissibility",
    "large_H_path",
    "bartnik_bound",
    "hawking_like",
]

C_FLOOR = 1e-6
C_CEIL = 1e6


@dataclass(frozen=True)
class SearchConfig:
    n_scan: int = 61
    rel_tol: float = 1e-8
    n_c_points: int = 33
    n_c_coarse: int = 9
    c_cap: float = 4.0
    n_times: int = DEFAULT_N_TIMES
    refine: bool = True


@dataclass(frozen=True)
class FeasibilityMargin:
    C: float
    H: float
    margin: float
    argmin: tuple[float, int, int]

    @property
    def feasible(self) -> bool:
        return self.margin > 0.0


def _margin_field(t, K, gp2, C, H):
    sq = np.sqrt(t)
    fac = 1.0 + C * sq
    return (4.0 * C * C / (H * H)) * K * fac - 2.0 * t * gp2 * fac * fac + C * C


def gh_margin(path: AdmissiblePath, C: float, H: float) -> FeasibilityMargin:
    """Grid minimum of (4C^2/H^2) K (1+C sqrt t) - 2t|g'|^2 (1+C sqrt t)^2 + C^2."""
    if not (C > 0 and H > 0):
        raise DomainError(f"C and H must be positive, got C={C}, H={H}")
    t = path.times[:, None, None]
    m = _margin_field(t, path.K, path.gp2, C, H)
    k, i, j = np.unravel_index(int(np.argmin(m)), m.shape)
    return FeasibilityMargin(float(C), float(H), float(m[k, i, j]),
                             (float(path.times[k]), int(i), int(j)))


class _Front:
    """Per-slice Pareto front of (K, gp2) points.

    For fixed (C, H) the margin is a*K - b*gp2 + C^2 with a > 0, b >= 0, so
    its minimum over a slice is attained at a point that no other point
    beats in both coordinates.  Reducing each slice to that front keeps the
    search exact while making each margin evaluation cheap.
    """

    def __init__(self, path: AdmissiblePath):
        ts, ks, gs = [], [], []
        n = len(path)
        K = path.K.reshape(n, -1)
        G = path.gp2.reshape(n, -1)
        for k in range(n):
            order = np.lexsort((-G[k], K[k]))
            kk, gg = K[k][order], G[k][order]
            run = np.maximum.accumulate(gg)
            keep = np.ones(kk.size, bool)
            keep[1:] = gg[1:] > run[:-1]
            ts.append(np.full(keep.sum(), path.times[k]))
            ks.append(kk[keep])
            gs.append(gg[keep])
        self.t = np.concatenate(ts)
        self.K = np.concatenate(ks)
        self.gp2 = np.concatenate(gs)

    def margin(self, C, H):
        return float(np.min(_margin_field(self.t, self.K, self.gp2, C, H)))


@dataclass(frozen=True)
class CZeta:
    value: float
    floor_limited: bool
    exact_zero: bool
    brackets: tuple = ()
    evaluations: int = 0
    node_value: float | None = None
    refined_at: tuple | None = None

    def __float__(self):
        return float(self.value)

    @property
    def infimum(self) -> float:
        """0 when every small C is provably feasible, else the search value."""
        return 0.0 if self.exact_zero else self.value


def c_zeta(path: AdmissiblePath, H: float, tol: float = 1e-8,
           cfg: SearchConfig = SearchConfig(), front: _Front | None = None) -> CZeta:
    """Upper estimate of the infimum of feasible C.

    Scans a log grid on [1e-6, 1e6], then bisects (in log C) the bracket
    below the lowest feasible scan point.  Feasibility need not be monotone
    in C; every sign change of the scan is recorded.
    """
    if not H > 0:
        raise DomainError(f"H must be positive, got {H}")
    front = _Front(path) if front is None else front
    Cs = np.logspace(math.log10(C_FLOOR), math.log10(C_CEIL), cfg.n_scan)
    feas = np.array([front.margin(C, H) > 0.0 for C in Cs])
    changes = tuple((float(Cs[i]), float(Cs[i + 1]), bool(feas[i + 1]))
                    for i in range(Cs.size - 1) if feas[i] != feas[i + 1])
    evals = Cs.size
    if not feas.any():
        raise InfeasibleError(
            f"no feasible C in [{C_FLOOR:g}, {C_CEIL:g}] at H={H:g}; "
            "the path is not (g, H)-admissible at this resolution")
    i = int(np.argmax(feas))
    if i == 0:
        moving = path.gp2[path.times > 0].max() > 0.0 if np.any(path.times > 0) else False
        exact = (not moving) and float(np.min(4.0 * path.K + H * H)) > 0.0
        return CZeta(float(Cs[0]), True, bool(exact), changes, evals)
    lo, hi = math.log(Cs[i - 1]), math.log(Cs[i])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        evals += 1
        if front.margin(math.exp(mid), H) > 0.0:
            hi = mid
        else:
            lo = mid
    return CZeta(math.exp(hi), False, False, changes, evals)


def required_C(K, gp2, t, H):
    """Smallest C above which the margin at one point stays positive (K >= 0).

    The margin is the cubic (4Ku/H^2) C^3 + (4K/H^2 + 1 - 2t u^2 gp2) C^2
    - 4tu gp2 C - 2t gp2 in C with u = sqrt(t); for K >= 0 it is negative at
    C = 0 and positive beyond its largest real root.
    """
    u = math.sqrt(t)
    if t * gp2 == 0.0:
        return 0.0
    coeffs = [4.0 * K * u / H ** 2, 4.0 * K / H ** 2 + 1.0 - 2.0 * t * u * u * gp2,
              -4.0 * t * u * gp2, -2.0 * t * gp2]
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots.real))].real
    return float(real.max())


def refine_czeta(path: AdmissiblePath, H: float, cz: CZeta, n_candidates: int = 3) -> CZeta:
    """Push the C-infimum estimate off the grid.

    Grid nodes and time slices can miss the exact location of the active
    constraint.  Starting from the most constraining nodes, the required C
    is maximized over continuous (t, theta, phi) using exact point
    evaluation of the path, and the larger value is kept.  Only done when
    K >= 0 on the path (each point's feasible set is then a half-line).
    """
    if cz.floor_limited or float(path.K.min()) < 0.0:
        return cz
    C0 = cz.value
    t = path.times[:, None, None]
    m = _margin_field(t, path.K, path.gp2, C0, H).reshape(len(path), -1)
    per_slice = m.min(axis=1)
    grid = path.grid
    best_val, best_at = C0, None
    for k in np.argsort(per_slice)[:n_candidates]:
        i, j = np.unravel_index(int(np.argmin(m[k])), grid.shape)
        dt = float(np.max(np.diff(path.times)[max(k - 1, 0):k + 1]))
        x0 = np.array([path.times[k] / dt, grid.theta[i] * grid.n_lat / np.pi,
                       grid.phi[j] * grid.n_lon / (2 * np.pi)])
        scale = np.array([dt, np.pi / grid.n_lat, 2 * np.pi / grid.n_lon])

        def neg_req(x):
            tt = float(np.clip(x[0] * scale[0], path.times[0], path.times[-1]))
            th, ph = fold_angles(np.array([x[1] * scale[1]]), np.array([x[2] * scale[2]]))
            K, G = path.point_data(tt, th, ph)
            return -required_C(float(K[0]), float(G[0]), tt, H)

        res = optimize.minimize(neg_req, x0, method="Nelder-Mead",
                                options=dict(xatol=1e-7, fatol=1e-15, maxfev=400,
                                             initial_simplex=x0 + 0.5 * np.vstack([np.zeros(3), np.eye(3)])))
        if -res.fun > best_val:
            th, ph = fold_angles(np.array([res.x[1] * scale[1]]), np.array([res.x[2] * scale[2]]))
            best_val = -float(res.fun)
            best_at = (float(np.clip(res.x[0] * scale[0], path.times[0], path.times[-1])),
                       float(th[0]), float(ph[0]))
    return replace(cz, value=best_val, node_value=C0, refined_at=best_at)


@dataclass
class DUpper:
    value: float
    c_best: float | None
    path: AdmissiblePath
    czeta: CZeta | None
    window: float
    evaluated: list = field(default_factory=list)

    @property
    def floor_limited(self) -> bool:
        return self.czeta is None or self.czeta.floor_limited


def d_upper(cm: ConformalMetric, H: float, cfg: SearchConfig = SearchConfig(),
            allow_negative_curvature: bool = False) -> DUpper:
    """Upper estimate of D(g, H) over the logarithmically spliced path family.

    Each c in the shrink-c window gives an admissible path h_c; the returned
    value is the smallest C-infimum found over a coarse-plus-golden-section
    search in log c.  As a minimum over a subfamily it bounds D from above.
    """
    if not H > 0:
        raise DomainError(f"H must be positive, got {H}")
    if not allow_negative_curvature and min_gauss_curvature(cm) < 0:
        raise DomainError("K_g has negative values; use the large-H branch")
    profile = plateau_profile()
    builder = MSBuilder(cm, profile)
    base = build_ms_path(cm, profile, n_times=cfg.n_times)
    gmax = float(base.gp2.max())
    num = 4.0 * float(base.K.min()) + H * H
    if gmax == 0.0:
        cz = c_zeta(base, H, cfg=cfg)
        if not cz.exact_zero:
            raise InfeasibleError("constant path is not (g, H)-admissible")
        return DUpper(0.0, None, base, cz, math.inf)
    if num <= 0.0:
        raise InfeasibleError(
            "empty c window (4 min K + H^2 <= 0); use the large-H branch")
    window = math.sqrt(num / (2.0 * H * H * gmax))
    c_hi = min(window * (1.0 - 1e-9), cfg.c_cap)
    cache = {}
    best = {}

    def F(logc):
        c = math.exp(logc)
        if c in cache:
            return cache[c][0]
        p = reparam_log(cm, profile, c, n_times=cfg.n_times, builder=builder)
        try:
            cz = c_zeta(p, H, cfg=cfg)
            val = cz.infimum
        except InfeasibleError:
            cz, val = None, math.inf
        cache[c] = (val, cz)
        # only the current best path is kept alive
        if not best or val < best["val"]:
            best.update(val=val, c=c, path=p, cz=cz)
        return val

    grid = np.linspace(math.log(c_hi / 64.0), math.log(c_hi), cfg.n_c_coarse)
    vals = [F(x) for x in grid]
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = F(x1), F(x2)
    while len(cache) < cfg.n_c_points:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = F(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = F(x2)
    if not math.isfinite(best["val"]):
        raise InfeasibleError("no c in the shrink-c window gave an admissible path")
    evaluated = sorted((c, v[0]) for c, v in cache.items())
    val, c_best, p, cz = best["val"], best["c"], best["path"], best["cz"]
    if cfg.refine and cz is not None:
        cz = refine_czeta(p, H, cz)
        val = cz.infimum
    return DUpper(val, c_best, p, cz, window, evaluated)


def destimate_closed_form(path: AdmissiblePath, H: float) -> float:
    """Grid maximum of sqrt(2t|g'|^2) / (sqrt((4K+H^2)/H^2) - sqrt(2t^2|g'|^2))."""
    t = path.times[:, None, None]
    inner = (4.0 * path.K + H * H) / (H * H)
    if np.any(inner <= 0):
        raise DomainError("side condition violated: 4K + H^2 <= 0 somewhere")
    den = np.sqrt(inner) - np.sqrt(2.0 * t * t * path.gp2)
    if np.any(den <= 0):
        k = int(np.argmax(np.any(den.reshape(len(path), -1) <= 0, axis=1)))
        raise DomainError(f"side condition violated: nonpositive denominator at t={path.times[k]:.4g}")
    return float(np.max(np.sqrt(2.0 * t * path.gp2) / den))


def closed_form_disagrees(closed: float, czeta: float, rel: float = 0.1) -> bool:
    return abs(closed - czeta) > rel * max(abs(czeta), 1e-300)


@dataclass(frozen=True)
class LargeH:
    C: float
    H_min: float
    n_constraining: int
    eq8_max: float


def large_H_admissibility(path: AdmissiblePath) -> LargeH:
    """C and the smallest admissible H for a path with 2t^2|g'|^2 < 1.

    H_min^2 is the largest value of 4K(1+C sqrt t)C^2 / (2t|g'|^2(1+C sqrt t)^2 - C^2)
    over grid points where that ratio is positive.  With C above the
    threshold the denominator is negative everywhere, so only points with
    K < 0 constrain H.
    """
    t = path.times[:, None, None]
    q = 2.0 * t * t * path.gp2
    eq8 = float(q.max())
    if eq8 >= 1.0:
        k = int(np.argmax(q.reshape(len(path), -1).max(axis=1)))
        raise InfeasibleError(
            f"1 - 2t^2|g'|^2 <= 0 at t={path.times[k]:.4g}; rebuild with a smaller splice c")
    ratio = np.sqrt(2.0 * t * path.gp2) / (1.0 - np.sqrt(q))
    cmax = float(ratio.max())
    C = max(cmax * (1.0 + 1e-6), C_FLOOR)
    fac = 1.0 + C * np.sqrt(t)
    den = 2.0 * t * path.gp2 * fac * fac - C * C
    num = 4.0 * path.K * fac * C * C
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den != 0.0, num / den, 0.0)
    cons = r > 0.0
    n_cons = int(cons.sum())
    H_min = math.sqrt(float(r[cons].max())) * (1.0 + 1e-6) if n_cons else 0.0
    return LargeH(C, H_min, n_cons, eq8)


def large_H_path(cm: ConformalMetric, cfg: SearchConfig = SearchConfig(), n_c: int = 17):
    """Spliced path minimizing the large-H constant C over admissible c.

    Returns ``(path, LargeH, c)``.
    """
    profile = plateau_profile()
    builder = MSBuilder(cm, profile)
    base = build_ms_path(cm, profile, n_times=cfg.n_times)
    gmax = float(base.gp2.max())
    if gmax == 0.0:
        return base, large_H_admissibility(base), None
    c_hi = min(0.999 / math.sqrt(2.0 * gmax), cfg.c_cap)
    best = None
    for c in np.geomspace(c_hi / 64.0, c_hi, n_c):
        p = reparam_log(cm, profile, float(c), n_times=cfg.n_times, builder=builder)
        try:
            lh = large_H_admissibility(p)
        except InfeasibleError:
            continue
        if best is None or lh.C < best[1].C:
            best = (p, lh, float(c))
    if best is None:
        raise InfeasibleError("no splice constant satisfies 1 - 2t^2|g'|^2 > 0")
    return best


@dataclass(frozen=True)
class BoundResult:
    bound: float
    branch: str
    D_used: float
    rg: float
    H: float

    def as_dict(self):
        return dict(bound=self.bound, branch=self.branch, D_used=self.D_used, rg=self.rg, H=self.H)


def hawking_like(rg: float, H: float, D: float) -> float:
    """(r sqrt(1+D)/2) [1 - r^2 H^2 / (4 (1+D))]."""
    return 0.5 * rg * math.sqrt(1.0 + D) * (1.0 - rg * rg * H * H / (4.0 * (1.0 + D)))


def bartnik_bound(rg: float, H: float, D: float, K_nonneg: bool) -> BoundResult:
    if not (rg > 0 and H > 0 and D >= 0):
        raise DomainError(f"need rg > 0, H > 0, D >= 0; got rg={rg}, H={H}, D={D}")
    val = hawking_like(rg, H, D)
    branch = "hawking-like"
    if K_nonneg and val > 0.5 * rg:
        val, branch = 0.5 * rg, "r-over-2-clamp"
    if val <= 0.0:
        val, branch = 0.0, "zero-clamp"
    return BoundResult(float(val), branch, float(D), float(rg), float(H))
