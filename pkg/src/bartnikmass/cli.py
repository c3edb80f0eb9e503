"""Command-line front end.

Exit codes: 0 success, 1 unreadable input or invalid configuration, 2 no
branch applies (negative curvature with H below the large-H threshold),
3 a verification suite or the collar checks failed.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from .admiss import c_zeta, gh_margin
from .collar import make_collar, verify_collar, write_collar_csv
from .errors import (BartnikError, ConfigurationError, ConstructionError, DomainError,
                     InfeasibleError, NoBranchError)
from .extend import check_extension
from .mspath import (build_ms_path, linear_start_profile, verify_admissible,
                     write_path_csv)
from .pipeline import (FAMILY_CHOICES, dump_json, load_config, parse_metric, run_bound,
                       run_sweep, run_verify)

EXIT_OK, EXIT_INPUT, EXIT_NO_BRANCH, EXIT_CHECKS = 0, 1, 2, 3


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_bound(cfg) -> int:
    run = run_bound(cfg)
    out = _outdir(cfg)
    dump_json(run.report, out / "bound.json")
    if run.chosen is not None and run.chosen.spec is not None:
        write_collar_csv(run.chosen.spec, run.chosen.report, out / "collar.csv")
        write_path_csv(run.path, out / "path.csv")
    r = run.report
    print(f"bound = {r['bound']:.12g}  branch = {r['branch']}  source = {r['source']}  "
          f"checks = {'pass' if r['checks_pass'] else 'FAIL'}")
    ok = r["checks_pass"] and r.get("refinement", {}).get("clean", True)
    return EXIT_OK if ok else EXIT_CHECKS


def cmd_sweep(cfg) -> int:
    if cfg.H_min is None or cfg.H_steps == 1:
        if cfg.H_min is not None:
            cfg = replace(cfg, H=cfg.H_min, H_min=None, H_max=None)
        return cmd_bound(cfg)
    rows, diag = run_sweep(cfg)
    out = _outdir(cfg)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["H", "D_upper", "bound", "branch", "status"])
        for r in rows:
            w.writerow([repr(r["H"]), "" if r["D_upper"] is None else repr(float(r["D_upper"])),
                        "" if r["bound"] is None else repr(float(r["bound"])),
                        r["branch"], r["status"]])
    dump_json(dict(rows=rows, diagnostics=diag), out / "sweep.json")
    print(f"{diag['n_ok']}/{diag['n_rows']} rows ok; "
          f"bound nonincreasing in H: {diag['bound_nonincreasing_in_H']}")
    return EXIT_OK


def cmd_verify(cfg) -> int:
    parse_metric(cfg.metric, cfg.grid())  # unreadable metric input is an input error
    suites = run_verify(cfg)
    out = _outdir(cfg)
    failed = [s["name"] for s in suites if not s["passed"]]
    dump_json(dict(suites=suites, failed=failed, passed=not failed), out / "verify.json")
    for s in suites:
        print(f"{'PASS' if s['passed'] else 'FAIL'}  {s['name']}")
    if failed:
        print("failed suites: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECKS
    return EXIT_OK


def cmd_path(cfg) -> int:
    cm = parse_metric(cfg.metric, cfg.grid())
    profile = linear_start_profile() if cfg.family == "theorem2" else None
    path = build_ms_path(cm, profile, n_times=cfg.n_times)
    rep = verify_admissible(path)
    info = dict(metric=cfg.metric, rg=cm.rg, n_times=cfg.n_times, const_tail=path.const_tail,
                admissible=rep.as_dict())
    try:
        cz = c_zeta(path, cfg.H, cfg.feas_tol)
        info["C_zeta"] = dict(H=cfg.H, value=cz.value, exact_zero=cz.exact_zero,
                              floor_limited=cz.floor_limited)
    except InfeasibleError as exc:
        info["C_zeta"] = dict(H=cfg.H, value=None, note=str(exc))
    out = _outdir(cfg)
    write_path_csv(path, out / "path.csv")
    dump_json(info, out / "path.json")
    print(f"path: {'admissible' if rep.ok else 'NOT admissible'} "
          f"(trace residual {rep.trace_residual:.2e})")
    return EXIT_OK if rep.ok else EXIT_CHECKS


def cmd_collar(cfg, C=None, A=None) -> int:
    """Build and check one collar.  Without --C the full bound pipeline picks it."""
    if C is None and cfg.family != "theorem2":
        run = run_bound(cfg)
        if run.chosen is None or run.chosen.spec is None:
            raise ConstructionError(run.chosen.note if run.chosen else "no collar was built")
        spec, rep, ext = run.chosen.spec, run.chosen.report, run.chosen.extension
    else:
        cm = parse_metric(cfg.metric, cfg.grid())
        fam = "theorem1" if cfg.family == "auto" else cfg.family
        profile = linear_start_profile() if fam == "theorem2" else None
        path = build_ms_path(cm, profile, n_times=cfg.n_times)
        if fam == "theorem2":
            spec = make_collar(path, fam, cfg.H, eps=cfg.eps, A=A)
        else:
            spec = make_collar(path, fam, cfg.H, C=C)
        rep = verify_collar(spec)
        ext = check_extension(spec, rep, cfg.extension_eps)
    out = _outdir(cfg)
    write_collar_csv(spec, rep, out / "collar.csv")
    d = rep.as_dict()
    for k in ("times", "min_R_per_slice", "Ht"):
        d.pop(k, None)
    dump_json(dict(family=spec.family, H=spec.H,
                   params={k: float(v) for k, v in spec.params.items()},
                   collar=d, extension=ext.as_dict(),
                   margin=None if spec.family == "theorem2" else
                   gh_margin(spec.path, spec.params.get("C", 0.0), spec.H).margin),
              out / "collar.json")
    print(f"collar {spec.family}: min R = {rep.min_R:.4g}, m_H(Sigma_1) = {rep.mH_sigma1:.12g}; "
          f"{ext.message}")
    ok = rep.min_R >= -cfg.curvature_tol and rep.min_Ht > 0 and ext.hyp2_round_and_increasing \
        and ext.hyp3_H1_positive and ext.hyp4_mH_nonneg
    if cfg.strict:
        ok = ok and ext.hyp1_scalar_positive
    return EXIT_OK if ok else EXIT_CHECKS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--metric", help='"round r", "bump l m eps", a grid .csv or a coefficient file')
    common.add_argument("--H", type=float, help="mean curvature of the sphere")
    common.add_argument("--H-min", dest="H_min", type=float)
    common.add_argument("--H-max", dest="H_max", type=float)
    common.add_argument("--H-steps", dest="H_steps", type=int)
    common.add_argument("--family", choices=FAMILY_CHOICES)
    common.add_argument("--lmax", type=int)
    common.add_argument("--n-lat", dest="n_lat", type=int)
    common.add_argument("--n-lon", dest="n_lon", type=int)
    common.add_argument("--n-times", dest="n_times", type=int)
    common.add_argument("--eps", type=float, help="theorem2 collar parameter")
    common.add_argument("--extension-eps", dest="extension_eps", type=float)
    common.add_argument("--refine", action="store_const", const=True, default=None,
                        help="rerun at doubled resolution and report the change")
    common.add_argument("--strict", action="store_const", const=True, default=None,
                        help="treat merely nonnegative scalar curvature as a failure")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")

    p = argparse.ArgumentParser(prog="bartnikmass",
                                description="Bartnik mass upper bounds for CMC spheres.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("bound", parents=[common], help="bound.json, collar.csv, path.csv")
    sub.add_parser("sweep", parents=[common], help="sweep.csv over an H range")
    sub.add_parser("verify", parents=[common], help="invariant suites, verify.json")
    sub.add_parser("path", parents=[common], help="admissible path only, path.csv")
    c = sub.add_parser("collar", parents=[common], help="one collar, collar.csv")
    c.add_argument("--C", type=float, help="collar constant for theorem1 families")
    c.add_argument("--A", type=float, help="slope for the theorem2 collar")
    return p


_CONFIG_KEYS = ("metric", "H", "H_min", "H_max", "H_steps", "family", "lmax", "n_lat", "n_lon",
                "n_times", "eps", "extension_eps", "refine", "strict", "seed", "out")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, **{k: getattr(args, k) for k in _CONFIG_KEYS})
        if args.command == "bound":
            return cmd_bound(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "path":
            return cmd_path(cfg)
        return cmd_collar(cfg, C=args.C, A=args.A)
    except NoBranchError as exc:
        print(f"no branch applies: {exc}", file=sys.stderr)
        return EXIT_NO_BRANCH
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InfeasibleError, ConstructionError, DomainError) as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_CHECKS
    except BartnikError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECKS


if __name__ == "__main__":
    sys.exit(main())
