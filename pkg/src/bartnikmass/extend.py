"""Hypothesis checks for gluing a collar to a Schwarzschild exterior."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .collar import CollarReport, CollarSpec, hawking_mass, mean_curvature
from .errors import DomainError

__all__ = ["ExtensionReport", "check_extension", "schwarzschild_profile",
           "write_schwarzschild_csv", "unit_lapse"]


@dataclass(frozen=True)
class ExtensionReport:
    hyp1_scalar_positive: bool
    hyp1_min_R: float
    hyp1_status: str
    hyp2_round_and_increasing: bool
    hyp2_a: float
    hyp3_H1_positive: bool
    hyp3_H1: float
    hyp4_mH_nonneg: bool
    hyp4_mH: float
    epsilon: float
    m_extension: float
    schwarzschild_radius: float
    bound_limit: float
    message: str

    @property
    def all_pass(self) -> bool:
        return (self.hyp1_scalar_positive and self.hyp2_round_and_increasing
                and self.hyp3_H1_positive and self.hyp4_mH_nonneg)

    def as_dict(self):
        d = asdict(self)
        d["all_pass"] = self.all_pass
        return d


def unit_lapse(spec: CollarSpec, t: np.ndarray):
    """s(t) = int_0^t Phi (cumulative trapezoid from the first sample) and f(t) = E(t)."""
    Phi, _ = spec.Phi(t)
    s = cumulative_trapezoid(Phi, t, initial=0.0)
    E, _, _ = spec.E(t)
    return s, E


def check_extension(spec: CollarSpec, report: CollarReport, epsilon: float) -> ExtensionReport:
    """Check the four gluing hypotheses and report the exterior mass m_H(Sigma_1) + epsilon."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    rg = spec.rg
    scale = max(1.0, abs(spec.H) ** 2, 1.0 / rg ** 2)
    min_R = float(report.min_R)
    if min_R > 10.0 * np.finfo(float).eps * scale:
        h1, status = True, "strict"
    elif min_R >= 0.0:
        h1, status = False, "nonneg-only"
    else:
        h1, status = False, "negative"

    # round tail: g(t) constant on [1 - const_tail, 1]; f' > 0 in the unit-lapse chart
    a_t = 1.0 - spec.path.const_tail
    tail = np.linspace(max(a_t, 1e-12), 1.0, 257)
    s, f = unit_lapse(spec, tail)
    df_ds = np.gradient(f, s)
    h2 = bool(spec.path.const_tail > 0 and np.all(df_ds > 0))
    # position of a in the unit-lapse chart (Phi may blow up like t^(-1/2) at 0)
    a_s = quad(lambda t: float(spec.Phi(t)[0]), 0.0, a_t, limit=200)[0] if a_t > 0 else 0.0

    H1 = mean_curvature(spec, 1.0)
    mH = hawking_mass(spec, 1.0)
    h4 = mH >= -1e-12 * rg
    msgs = []
    if not h1:
        msgs.append(f"scalar curvature not strictly positive ({status}, min {min_R:.3e})")
    if not h2:
        msgs.append("collar is not round and area-increasing near t = 1")
    if not H1 > 0:
        msgs.append("H_1 is not positive")
    if not h4:
        h_req = 2.0 * math.sqrt(1.0 + spec.params.get("C", 0.0)) / rg
        msgs.append(f"m_H(Sigma_1) = {mH:.6g} < 0; for H >= {h_req:.6g} use the theorem1-largeH family")
    m_ext = mH + epsilon
    return ExtensionReport(
        hyp1_scalar_positive=h1, hyp1_min_R=min_R, hyp1_status=status,
        hyp2_round_and_increasing=h2, hyp2_a=a_s,
        hyp3_H1_positive=bool(H1 > 0), hyp3_H1=float(H1),
        hyp4_mH_nonneg=bool(h4), hyp4_mH=float(mH),
        epsilon=float(epsilon), m_extension=float(m_ext),
        schwarzschild_radius=2.0 * float(m_ext), bound_limit=float(max(mH, 0.0)),
        message="; ".join(msgs) if msgs else "all hypotheses hold",
    )


def schwarzschild_profile(m: float, r):
    """(r^2, 1/(1 - 2m/r)): area factor and squared lapse of the exterior."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 2.0 * m):
        raise DomainError(f"need r > 2m = {2.0 * m}, got r = {r}")
    f, lapse = r_arr * r_arr, 1.0 / (1.0 - 2.0 * m / r_arr)
    if np.ndim(r) == 0:
        return float(f), float(lapse)
    return f, lapse


def write_schwarzschild_csv(m: float, r, fname) -> None:
    f, lapse = schwarzschild_profile(m, np.asarray(r, dtype=float))
    with open(fname, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "f_area", "lapse_sq"])
        for row in zip(np.atleast_1d(r), np.atleast_1d(f), np.atleast_1d(lapse)):
            w.writerow([repr(float(v)) for v in row])
