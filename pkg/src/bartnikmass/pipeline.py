"""Run configuration, metric input, and the end-to-end bound pipeline."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .admiss import (C_FLOOR, SearchConfig, bartnik_bound, c_zeta, closed_form_disagrees,
                     d_upper, destimate_closed_form, gh_margin, large_H_path, refine_czeta)
from .collar import (CollarReport, CollarSpec, make_collar, schwarzschild_eq12,
                     schwarzschild_oracle, verify_collar)
from .conformal import (ConformalMetric, bump_metric, gauss_curvature, min_gauss_curvature,
                        normalize, round_metric)
from .errors import (BartnikError, ConfigurationError, ConstructionError, DomainError,
                     InfeasibleError, NoBranchError)
from .extend import ExtensionReport, check_extension
from .mspath import (AdmissiblePath, build_ms_path, linear_start_profile, plateau_profile,
                     verify_admissible)
from .sphgrid import (FOUR_PI, GridSpec, HarmonicCoeffs, ScalarField, read_field_csv,
                      real_ylm, synthesize, transform_for)

__all__ = [
    "RunConfig",
    "BoundRun",
    "load_config",
    "parse_metric",
    "random_metric",
    "run_bound",
    "run_sweep",
    "run_verify",
    "dump_json",
    "FAMILY_CHOICES",
]

FAMILY_CHOICES = ("auto", "theorem1", "theorem1-largeH", "theorem2")


@dataclass(frozen=True)
class RunConfig:
    metric: str = "round 1"
    H: float | None = 1.0
    H_min: float | None = None
    H_max: float | None = None
    H_steps: int = 1
    family: str = "auto"
    lmax: int = 47
    n_lat: int | None = None
    n_lon: int | None = None
    n_times: int = 257
    eps: float = 0.1
    extension_eps: float = 1e-3
    feas_tol: float = 1e-8
    curvature_tol: float = 1e-8
    refine_tol: float = 1e-5
    refine: bool = False
    strict: bool = False
    seed: int = 0
    out: str = "out"

    def __post_init__(self):
        if self.family not in FAMILY_CHOICES:
            raise ConfigurationError(f"family must be one of {FAMILY_CHOICES}, got {self.family!r}")
        for name in ("eps", "extension_eps", "feas_tol", "curvature_tol", "refine_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.H is not None and not self.H > 0:
            raise ConfigurationError(f"H must be positive, got {self.H}")
        if self.H_steps < 1:
            raise ConfigurationError("H_steps must be at least 1")
        if (self.H_min is None) != (self.H_max is None):
            raise ConfigurationError("give both H_min and H_max for a sweep")
        if self.H_min is not None:
            if not 0 < self.H_min:
                raise ConfigurationError("H_min must be positive")
            if self.H_steps > 1 and not self.H_min < self.H_max:
                raise ConfigurationError("sweep needs H_min < H_max")
        if self.n_times < 65:
            raise ConfigurationError("n_times must be at least 65")
        self.grid()

    def grid(self) -> GridSpec:
        base = GridSpec.for_lmax(self.lmax)
        return GridSpec(n_lat=self.n_lat or base.n_lat, n_lon=self.n_lon or base.n_lon,
                        lmax=self.lmax)

    def search(self) -> SearchConfig:
        return SearchConfig(rel_tol=self.feas_tol, n_times=self.n_times)

    def doubled(self) -> "RunConfig":
        """Same run with twice the angular and temporal resolution."""
        return replace(self, lmax=2 * self.lmax + 1, n_lat=None, n_lon=None,
                       n_times=2 * self.n_times - 1)

    def sweep_values(self) -> list:
        if self.H_min is None:
            return [self.H]
        if self.H_steps == 1:
            return [self.H_min]
        return [float(h) for h in np.linspace(self.H_min, self.H_max, self.H_steps)]


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _coerce(name, raw: str):
    fld = {f.name: f for f in dataclasses.fields(RunConfig)}[name]
    kind = str(fld.type)
    raw = raw.strip()
    try:
        if "bool" in kind:
            return _BOOL[raw.lower()]
        if raw.lower() in ("", "none") and "None" in kind:
            return None
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"bad value for {name}: {raw!r}") from exc
    return raw


def load_config(path, **overrides) -> RunConfig:
    """Read flat ``key = value`` lines ('#' starts a comment)."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        names = {f.name for f in dataclasses.fields(RunConfig)}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{n}: expected key = value")
            key, raw = (x.strip() for x in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in names:
                raise ConfigurationError(f"{path}:{n}: unknown key {key!r}")
            values[key] = _coerce(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def parse_metric(source: str, grid: GridSpec) -> ConformalMetric:
    """Preset ("round r", "bump l m eps"), coefficient file, or grid CSV."""
    tokens = source.split()
    try:
        if tokens and tokens[0] == "round":
            if len(tokens) != 2:
                raise ConfigurationError("preset 'round' takes one radius")
            return round_metric(float(tokens[1]), grid)
        if tokens and tokens[0] == "bump":
            if len(tokens) != 4:
                raise ConfigurationError("preset 'bump' takes l m eps")
            return bump_metric(int(tokens[1]), int(tokens[2]), float(tokens[3]), grid)
    except ValueError as exc:
        if isinstance(exc, BartnikError):
            raise ConfigurationError(str(exc)) from exc
        raise ConfigurationError(f"malformed metric preset {source!r}") from exc
    path = Path(source)
    if not path.is_file():
        raise ConfigurationError(f"metric {source!r} is neither a preset nor a readable file")
    if path.suffix.lower() == ".csv":
        return normalize(read_field_csv(path, grid))
    entries = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot read coefficient file {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            l, m, val = int(parts[0]), int(parts[1]), float(parts[2])
        except (ValueError, IndexError) as exc:
            raise ConfigurationError(f"{path}:{n}: expected 'l m value'") from exc
        if len(parts) != 3 or abs(m) > l or not math.isfinite(val):
            raise ConfigurationError(f"{path}:{n}: invalid coefficient line {line!r}")
        entries[(l, m)] = entries.get((l, m), 0.0) + val
    if not entries:
        raise ConfigurationError(f"{path}: no coefficients")
    return normalize(synthesize(HarmonicCoeffs.from_dict(grid.lmax, entries), grid))


def random_metric(rng: np.random.Generator, grid: GridSpec, degree: int = 12,
                  sup: float = 0.3) -> ConformalMetric:
    """Smooth random conformal factor with sup-norm at most ``sup``.

    The expansion is evaluated pointwise, so the same draw can be placed on
    grids whose band limit is below ``degree`` (it is then truncated).
    """
    th, ph = grid.mesh()
    w = np.zeros(grid.shape)
    bound = 0.0
    for l in range(1, degree + 1):
        for m in range(-l, l + 1):
            a = rng.normal() / (1.0 + l) ** 2
            w += a * real_ylm(l, m, th, ph)
            # |Y_lm| <= sqrt((2l+1)/4pi): a grid-independent sup-norm bound
            bound += abs(a) * math.sqrt((2 * l + 1) / FOUR_PI)
    scale = sup * rng.uniform(0.2, 1.0) / max(bound, 1e-300)
    return normalize(ScalarField(grid, scale * w))


# -- the bound pipeline ------------------------------------------------------------

@dataclass
class Candidate:
    family: str
    bound: float
    branch: str
    certified: bool
    spec: CollarSpec | None = None
    report: CollarReport | None = None
    extension: ExtensionReport | None = None
    note: str = ""

    def as_dict(self):
        d = dict(family=self.family, bound=self.bound, branch=self.branch,
                 certified=self.certified, note=self.note)
        if self.spec is not None:
            d["params"] = {k: float(v) for k, v in self.spec.params.items()}
        if self.report is not None:
            d["collar"] = self.report.as_dict()
        if self.extension is not None:
            d["extension"] = self.extension.as_dict()
        return d


@dataclass
class BoundRun:
    report: dict
    chosen: Candidate | None
    candidates: list = field(default_factory=list)

    @property
    def path(self) -> AdmissiblePath | None:
        return None if self.chosen is None or self.chosen.spec is None else self.chosen.spec.path


def _checks_pass(rep: CollarReport, ext: ExtensionReport, cfg: RunConfig, rg: float) -> bool:
    ok = (rep.min_R >= -cfg.curvature_tol and rep.min_Ht > 0 and rep.H0_limit_err <= 1e-10
          and abs(rep.mH_sigma1 - rep.mH_sigma1_closed_form) <= 1e-10 * max(1.0, rg)
          and ext.hyp2_round_and_increasing and ext.hyp3_H1_positive and ext.hyp4_mH_nonneg)
    if cfg.strict:
        ok = ok and ext.hyp1_scalar_positive
    return bool(ok)


def _collar_candidate(path, family, H, cfg, rg, bound, branch, **kw) -> Candidate:
    try:
        spec = make_collar(path, family, H, **kw)
    except (ConstructionError, DomainError, InfeasibleError) as exc:
        return Candidate(family, bound, branch, False, note=str(exc))
    rep = verify_collar(spec)
    ext = check_extension(spec, rep, cfg.extension_eps)
    return Candidate(family, bound, branch, _checks_pass(rep, ext, cfg, rg), spec, rep, ext,
                     ext.message)


def _theorem2_candidate(cm, H, cfg) -> Candidate:
    path = build_ms_path(cm, linear_start_profile(), n_times=cfg.n_times)
    cand = _collar_candidate(path, "theorem2", H, cfg, cm.rg, math.nan, "hawking-like",
                             eps=cfg.eps)
    if cand.spec is not None:
        m = cand.extension.hyp4_mH
        cand.bound = max(m, 0.0)
        cand.branch = "hawking-like" if m > 0 else "zero-clamp"
    return cand


def run_bound(cfg: RunConfig, H: float | None = None, cm: ConformalMetric | None = None) -> BoundRun:
    """Metric -> path -> C search -> collar -> checks -> bound, for one H."""
    H = cfg.H if H is None else H
    if H is None or not H > 0:
        raise ConfigurationError("a positive H is required")
    grid = cfg.grid()
    cm = parse_metric(cfg.metric, grid) if cm is None else cm
    rg = cm.rg
    kmin = min_gauss_curvature(cm, refine=True)
    k_nonneg = kmin >= 0.0
    scfg = cfg.search()
    report = dict(metric=cfg.metric, rg=rg, H=float(H), K_min=kmin, K_nonneg=bool(k_nonneg),
                  family=cfg.family, grid=dict(lmax=grid.lmax, n_lat=grid.n_lat,
                                               n_lon=grid.n_lon, n_times=cfg.n_times),
                  label="upper estimate")
    candidates = []
    fam = cfg.family
    if k_nonneg:
        report["route"] = "nonnegative-curvature"
        if fam in ("auto", "theorem1", "theorem1-largeH"):
            d = d_upper(cm, H, scfg)
            D = d.value
            cz = d.czeta
            C = 1.05 * (C_FLOOR if cz is None or cz.exact_zero else cz.value)
            res = bartnik_bound(rg, H, D, True)
            margin = gh_margin(d.path, C, H)
            search = dict(c_best=d.c_best, c_window=d.window, n_c_evaluated=len(d.evaluated),
                          floor_limited=d.floor_limited,
                          exact_zero=bool(cz is not None and cz.exact_zero),
                          C_zeta=None if cz is None else cz.value,
                          C_zeta_nodes=None if cz is None else cz.node_value,
                          refined_at=None if cz is None else cz.refined_at)
            try:
                closed = destimate_closed_form(d.path, H)
                search["closed_form"] = closed
                search["closed_form_disagrees"] = closed_form_disagrees(closed, D) if D > 0 else closed > 0
            except DomainError as exc:
                search["closed_form"] = None
                search["closed_form_note"] = str(exc)
            report.update(D_upper=D, search=search,
                          margins=dict(C=C, H=float(H), margin=margin.margin,
                                       argmin=list(margin.argmin)))
            large = H >= 2.0 * math.sqrt(1.0 + C) / rg
            fam1 = "theorem1-largeH" if (fam == "theorem1-largeH" or (fam == "auto" and large)) \
                else "theorem1"
            cand = _collar_candidate(d.path, fam1, H, cfg, rg, res.bound, res.branch, C=C)
            if fam == "theorem1-largeH" and cand.spec is None:
                raise NoBranchError(cand.note)
            candidates.append(cand)
        if fam in ("auto", "theorem2"):
            candidates.append(_theorem2_candidate(cm, H, cfg))
    else:
        report["route"] = "large-H"
        if fam == "theorem2":
            raise NoBranchError("the theorem2 collar needs K_g >= 0")
        path, lh, c = large_H_path(cm, scfg)
        report.update(D_upper=lh.C, search=dict(c_splice=c, C=lh.C, H_min=lh.H_min,
                                                n_constraining=lh.n_constraining,
                                                eq8_max=lh.eq8_max))
        if H < lh.H_min:
            raise NoBranchError(
                f"K_g has negative values and H = {H:g} is below H_min = {lh.H_min:.6g}; "
                "no bound is available here")
        res = bartnik_bound(rg, H, lh.C, False)
        large = H >= 2.0 * math.sqrt(1.0 + lh.C) / rg
        if fam == "theorem1-largeH" and not large:
            raise NoBranchError(
                f"large-H collar needs H >= {2.0 * math.sqrt(1.0 + lh.C) / rg:.6g}")
        fam1 = "theorem1-largeH" if (large and fam != "theorem1") else "theorem1"
        margin = gh_margin(path, lh.C, H)
        report["margins"] = dict(C=lh.C, H=float(H), margin=margin.margin,
                                 argmin=list(margin.argmin))
        candidates.append(_collar_candidate(path, fam1, H, cfg, rg, res.bound, res.branch, C=lh.C))
    certified = [c for c in candidates if c.certified]
    pool = certified if certified else candidates
    chosen = min(pool, key=lambda c: c.bound if math.isfinite(c.bound) else math.inf)
    report.update(bound=chosen.bound, branch=chosen.branch, source=chosen.family,
                  checks_pass=bool(chosen.certified),
                  candidates=[c.as_dict() for c in candidates])
    if cfg.refine:
        fine = run_bound(replace(cfg.doubled(), refine=False), H)
        b0, b1 = chosen.bound, fine.report["bound"]
        rel = abs(b0 - b1) / max(abs(b1), 1e-300) if b0 != b1 else 0.0
        report["refinement"] = dict(bound_doubled=b1, rel_change=rel,
                                    clean=bool(rel <= cfg.refine_tol),
                                    lmax=fine.report["grid"]["lmax"],
                                    n_times=fine.report["grid"]["n_times"])
    return BoundRun(report, chosen, candidates)


def run_sweep(cfg: RunConfig):
    """One pipeline run per H; failures become rows with a status."""
    rows = []
    cm = parse_metric(cfg.metric, cfg.grid())
    for H in cfg.sweep_values():
        try:
            run = run_bound(cfg, H, cm=cm)
            r = run.report
            rows.append(dict(H=H, D_upper=r.get("D_upper"), bound=r["bound"], branch=r["branch"],
                             status="ok" if r["checks_pass"] else "checks-failed"))
        except NoBranchError as exc:
            rows.append(dict(H=H, D_upper=None, bound=None, branch="", status=f"no-branch: {exc}"))
        except (InfeasibleError, ConstructionError, DomainError) as exc:
            rows.append(dict(H=H, D_upper=None, bound=None, branch="", status=f"error: {exc}"))
    ok = [r for r in rows if r["bound"] is not None]
    D = [r["D_upper"] for r in ok]
    B = [r["bound"] for r in ok]
    diag = dict(
        n_rows=len(rows), n_ok=len(ok),
        D_upper_nondecreasing_in_H=bool(all(b >= a - 1e-12 for a, b in zip(D, D[1:]))),
        bound_nonincreasing_in_H=bool(all(b <= a + 1e-12 for a, b in zip(B, B[1:]))),
        bound_at_smallest_H=B[0] if B else None,
        rg=cm.rg,
    )
    return rows, diag


# -- verification suites ------------------------------------------------------------

def _suite(name, passed, **details):
    return dict(details, name=name, passed=bool(passed))


def run_verify(cfg: RunConfig) -> list:
    """Invariant suites; each entry records pass/fail and its measured values."""
    grid = cfg.grid()
    tr = transform_for(grid)
    rng = np.random.default_rng(cfg.seed)
    out = []

    # spectral round trip and eigenrelation
    L = grid.lmax + 1
    spec = rng.normal(size=(2, L, L)) * (np.arange(L)[None, :] >= np.arange(L)[:, None])
    spec[1, 0, :] = 0.0
    rt = float(np.max(np.abs(tr.analyze(tr.synthesize(spec)) - spec)))
    # eigenrelation for every (l, m): lap* of the sampled harmonic
    eig = 0.0
    th, ph = grid.mesh()
    for l in range(L):
        ys = np.stack([real_ylm(l, m, th, ph) for m in range(-l, l + 1)])
        lap = tr.synthesize(tr.laplacian_spec(tr.analyze(ys)))
        eig = max(eig, float(np.max(np.abs(lap + l * (l + 1) * ys))))
    out.append(_suite("spectral", rt <= 1e-10 and eig <= 1e-10, round_trip=rt, eigen_abs=eig))

    # Gauss-Bonnet on random metrics
    worst = 0.0
    for _ in range(20):
        cm = random_metric(rng, grid, degree=min(12, grid.lmax), sup=0.3)
        K = gauss_curvature(cm).values
        total = float(tr.integrate(K * np.exp(2.0 * cm.w.values)))
        worst = max(worst, abs(total - FOUR_PI) / FOUR_PI)
    out.append(_suite("gauss-bonnet", worst <= 1e-8, worst_rel=worst))

    # Schwarzschild: slice formula and finite-difference oracle
    eq12 = float(np.max(np.abs(schwarzschild_eq12(1.0, np.linspace(3.0, 10.0, 257)))))
    fd = float(np.nanmax(np.abs(schwarzschild_oracle(1.0, (3.0, 10.0), 512).R_fd)))
    out.append(_suite("schwarzschild", eq12 <= 1e-9 and fd <= 1e-6, formula_max=eq12, fd_max=fd))

    # trace-free path certification
    cm = bump_metric(2, 0, 0.05, grid)
    rep = verify_admissible(build_ms_path(cm, n_times=cfg.n_times))
    out.append(_suite("admissible-path", rep.ok, **rep.as_dict()))

    # refinement stability of curvature minimum, area radius and C search
    vals = []
    for c in (cfg, cfg.doubled()):
        g = c.grid()
        cmr = random_metric(np.random.default_rng(cfg.seed + 1), g, degree=12, sup=0.05)
        p = build_ms_path(cmr, plateau_profile(), n_times=c.n_times)
        try:
            cz = refine_czeta(p, 1.0, c_zeta(p, 1.0))
            czv = cz.value
        except InfeasibleError:
            czv = math.nan
        vals.append((cmr.rg, min_gauss_curvature(cmr, refine=True), czv))
    rel = [abs(a - b) / max(abs(b), 1e-300) for a, b in zip(*vals)]
    worst = max(rel) if all(math.isfinite(r) for r in rel) else math.inf
    out.append(_suite("refinement", worst <= cfg.refine_tol, worst_rel=worst,
                      quantities=dict(rg=rel[0], K_min=rel[1], C_zeta=rel[2])))
    return out


# -- output -------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_json(obj, fname) -> None:
    """Deterministic UTF-8 JSON (sorted keys, non-finite values as null)."""
    Path(fname).write_text(json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n",
                           encoding="utf-8")
