"""Command-line orchestration: build, verify, exponent sweeps, reports.

Configuration is flat key = value text under section headers; every
stage writes a manifest of input hashes next to its outputs so runs
can be reproduced and stale caches detected.
"""

import argparse
import configparser
import hashlib
import json
import os
import sys

import numpy as np

from .ansatz import FarFieldAnsatz
from .bounds import SharpConstants, WeightSpec
from .errors import Blowup1dError, CacheMismatch
from .farfield import AnsatzNonlocal
from .kernels import AlphaParam
from .mesh_basis import BsplineBasis, RefinedMesh, build_mesh_for_extent
from .nonlocal_ops import NonlocalMatrix, OP_PSI, OP_PSI_X, \
    build_nonlocal_matrix
from .profile import (SolverConfig, initial_profile, load_profile,
                      residual_on_points, save_profile, solve_dynamic)
from .verify import (BoundAssembler, CertifiedProfileData, check_fixed_point,
                     check_near_field, emit_report, farfield_report)
from .alpha_family import (j_alpha_beta_inf, residual_alpha_beta,
                           scaling_constants, solve_beta)

DEFAULTS = {
    "mesh": {
        "extent": "1e6",
        "total": "800",
        "head_count": "75",
        "head_spacing": str(1.0 / 384.0),
        "geo_start": "300",
        "smoothing_passes": "3",
    },
    "ansatz": {"c1": "1.5745", "z0": "auto"},
    "solver": {
        "residual_target": "8e-3",
        "coarse_target": "5e-2",
        "t_max": "150.0",
        "dt_cfl": "0.8",
        "polish_time": "2.0",
        "monitor_hi": "100.0",
    },
    "verify": {
        "delta": "1e-3",
        "delta1": "9.5e-4",
        "lam_target": "1.5",
        "cells": "2000",
        "xmax": "1e4",
        "x1": "auto",
        "n_sub": "400",
        "terms": "20",
    },
}


def load_config(path=None):
    cp = configparser.ConfigParser()
    cp.read_dict(DEFAULTS)
    if path:
        with open(path) as fh:
            cp.read_file(fh)
    return cp


def config_hash(cp):
    payload = {s: dict(cp[s]) for s in cp.sections()}
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def cache_dir(args):
    base = getattr(args, "cache_dir", None) \
        or os.environ.get("BLOWUP_CACHE_DIR") or ".cache/blowup1d"
    os.makedirs(base, exist_ok=True)
    return base


def write_manifest(path, **entries):
    import blowup1d
    entries = dict(entries)
    entries["package_version"] = getattr(blowup1d, "__version__", "0")
    entries["numpy_version"] = np.__version__
    with open(path, "w") as fh:
        json.dump(entries, fh, sort_keys=True, indent=1)


def _build_geometry(cp):
    m = cp["mesh"]
    mesh = build_mesh_for_extent(
        float(m["extent"]), total=int(m["total"]),
        head_count=int(m["head_count"]),
        head_spacing=float(m["head_spacing"]),
        geo_start=int(m["geo_start"]),
        smoothing_passes=int(m["smoothing_passes"]))
    basis = BsplineBasis(mesh)
    z0_raw = cp["ansatz"]["z0"]
    if z0_raw == "auto":
        z0 = min((mesh.node(i) for i in range(2, mesh.n)),
                 key=lambda v: abs(v - 1.9375))
    else:
        z0 = float(z0_raw)
    ansatz = FarFieldAnsatz(c1=float(cp["ansatz"]["c1"]), z0=z0)
    return mesh, basis, ansatz


def _matrix_path(cache, tag, mesh):
    return os.path.join(cache, f"matrix_{tag}_{mesh.content_hash()}.npz")


def _get_matrix(args, cp, basis, points, tag, alpha):
    cache = cache_dir(args)
    path = _matrix_path(cache, tag, basis.mesh)
    if os.path.exists(path) and not getattr(args, "rebuild", False):
        return NonlocalMatrix.load(
            path, expect_mesh_hash=basis.mesh.content_hash())
    mat = build_nonlocal_matrix(basis, points, alpha,
                                terms=int(cp["verify"]["terms"]))
    mat.save(path)
    return mat


def _weights_for(cp, mesh):
    x1_raw = cp["verify"]["x1"]
    if x1_raw == "auto":
        x1 = min((mesh.node(i) for i in range(2, mesh.n)),
                 key=lambda v: abs(v - 3708.0))
    else:
        x1 = float(x1_raw)
    return WeightSpec(x1=x1)


def cmd_build_profile(args):
    cp = load_config(args.config)
    mesh, basis, ansatz = _build_geometry(cp)
    alpha = AlphaParam.critical()
    anl = AnsatzNonlocal(ansatz, basis, alpha)
    mat = _get_matrix(args, cp, basis, basis.collocation_points(),
                      "colloc", alpha)
    s = cp["solver"]
    cfg = SolverConfig(residual_target=float(s["residual_target"]),
                       coarse_target=float(s["coarse_target"]),
                       t_max=float(s["t_max"]), dt_cfl=float(s["dt_cfl"]),
                       polish_time=float(s["polish_time"]),
                       monitor_hi=float(s["monitor_hi"]))
    prof0 = initial_profile(basis, ansatz, alpha)

    def cb(step, t, resid, tag):
        if not args.quiet and tag != "free":
            print(f"[{tag}] step {step} t={t:.2f} residual={resid:.3e}",
                  file=sys.stderr)

    prof = solve_dynamic(prof0, cfg, mat, anl, callback=cb)
    save_profile(prof, args.out)
    write_manifest(args.out + ".manifest.json",
                   config_hash=config_hash(cp),
                   mesh_hash=mesh.content_hash(),
                   slope_at_origin=prof.slope_at_origin())
    rel = residual_on_points(prof, mat, anl)
    pts = mat.points
    sup = float(np.max(np.abs(rel[pts <= cfg.monitor_hi])))
    print(f"profile written to {args.out}; monitored residual {sup:.3e}")
    return 0


def cmd_precompute_matrix(args):
    cp = load_config(args.config)
    mesh, basis, _ = _build_geometry(cp)
    alpha = AlphaParam.critical()
    if args.points == "colloc":
        pts = basis.collocation_points()
        tag = "colloc"
    else:
        refined = RefinedMesh(mesh)
        keep = refined.points <= float(args.xmax) * 2.0
        pts = refined.points[keep]
        tag = "refined"
    args.rebuild = True
    _get_matrix(args, cp, basis, pts, tag, alpha)
    path = _matrix_path(cache_dir(args), tag, mesh)
    write_manifest(path + ".manifest.json", config_hash=config_hash(cp),
                   mesh_hash=mesh.content_hash(), npoints=len(pts))
    print(f"matrix cached at {path}")
    return 0


def _assembler_for(args, cp, prof):
    alpha = prof.alpha
    anl = AnsatzNonlocal(prof.ansatz, prof.basis, alpha)
    refined = RefinedMesh(prof.basis.mesh)
    xmax = float(args.xmax)
    keep = refined.points <= xmax * 2.0
    pts = refined.points[keep]
    mat = _get_matrix(args, cp, prof.basis, pts, "refined", alpha)
    if len(mat.points) < len(pts) - 1:
        raise CacheMismatch("cached matrix covers too few points")
    ws = _weights_for(cp, prof.basis.mesh)
    consts = SharpConstants(ws, alpha, n_sub=int(cp["verify"]["n_sub"]))
    data = CertifiedProfileData(prof, mat, anl, weights=ws,
                                constants=consts, xmax=xmax * 1.2)
    return BoundAssembler(data)


def cmd_verify(args):
    cp = load_config(args.config)
    prof = load_profile(args.profile)
    asm = _assembler_for(args, cp, prof)
    delta = float(args.delta if args.delta is not None
                  else cp["verify"]["delta"])
    cells = int(args.cells or cp["verify"]["cells"])
    if args.target == "fixed-point":
        delta1 = float(args.delta1 if args.delta1 is not None
                       else cp["verify"]["delta1"])
        rep = check_fixed_point(asm, delta=delta, delta1=delta1,
                                cells=cells, xmax=float(args.xmax))
    else:
        lam = float(args.lam_target if args.lam_target is not None
                    else cp["verify"]["lam_target"])
        rep = check_near_field(asm, delta=delta, lam_target=lam,
                               cells=cells, xmax=float(args.xmax))
    emit_report(rep, args.out, fmt="csv")
    if args.plot:
        emit_report(rep, args.plot, fmt="svg")
    write_manifest(args.out + ".manifest.json",
                   config_hash=config_hash(cp),
                   mesh_hash=prof.mesh_hash(),
                   summary=rep.summary)
    print(f"{rep.target}: {json.dumps(rep.summary, sort_keys=True)}")
    return 0 if rep.passed else 1


def cmd_beta(args):
    prof = load_profile(args.profile)
    eps_list = [float(v) for v in args.sweep.split(",")] if args.sweep \
        else [float(args.eps)]
    rows = []
    for eps in eps_list:
        alpha = AlphaParam.from_eps(eps)
        sol = solve_beta(prof, alpha, tol=float(args.tol))
        sc = scaling_constants(prof, alpha, sol.beta)
        rows.append((eps, sol.beta, sol.beta / eps,
                     eps * sc.c_l_star, eps * sc.c_w_star,
                     sc.c_w_bar / sc.c_l_bar))
    with open(args.out, "w") as fh:
        fh.write("eps,beta,beta_over_eps,eps_c_l_star,eps_c_w_star,"
                 "cw_over_cl\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_eval(args):
    prof = load_profile(args.profile)
    pts = [float(v) for v in args.points.split(",")]
    lines = ["x,W,W_x"]
    for x in pts:
        lines.append(f"{x!r},{prof.value(x)!r},{prof.value(x, 1)!r}")
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_plot(args):
    from .verify import load_report_csv
    rows = load_report_csv(args.report)
    # rebuild a minimal single-function report to re-plot
    from .interval import IntervalArray
    from .verify import VerificationReport
    names = sorted({r[2] for r in rows})
    name = "near_field" if "near_field" in names \
        else "total" if "total" in names else names[0]
    sel = [r for r in rows if r[2] == name]
    edges = np.array([float(sel[0][0])] + [float(r[1]) for r in sel])
    arr = IntervalArray(np.array([float(r[3]) for r in sel]),
                        np.array([float(r[4]) for r in sel]))
    rep = VerificationReport(
        target=name, edges=edges, functions={name: arr},
        verdicts=np.array([r[5] == "PASS" for r in sel]),
        parameters={})
    emit_report(rep, args.out, fmt="svg")
    print(f"plot written to {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="blowup1d",
        description="Construct and verify self-similar profiles of the "
                    "1D nonlocal transport model.")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--cache-dir", dest="cache_dir", default=None)
    p.add_argument("--threads", type=int, default=None,
                   help="cap worker threads (sets BLAS/OMP env caps)")
    p.add_argument("--quiet", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    b = sub.add_parser("build-profile")
    b.add_argument("--out", required=True)
    b.add_argument("--rebuild", action="store_true")
    b.set_defaults(fn=cmd_build_profile)

    m = sub.add_parser("precompute-matrix")
    m.add_argument("--points", choices=("colloc", "refined"),
                   default="refined")
    m.add_argument("--xmax", default="1e4")
    m.set_defaults(fn=cmd_precompute_matrix)

    v = sub.add_parser("verify")
    v.add_argument("target", choices=("fixed-point", "near-field"))
    v.add_argument("--profile", required=True)
    v.add_argument("--cells", type=int, default=None)
    v.add_argument("--xmax", default="1e4")
    v.add_argument("--delta", default=None)
    v.add_argument("--delta1", default=None)
    v.add_argument("--lam-target", dest="lam_target", default=None)
    v.add_argument("--out", required=True)
    v.add_argument("--plot", default=None)
    v.add_argument("--rebuild", action="store_true")
    v.set_defaults(fn=cmd_verify)

    bt = sub.add_parser("beta")
    bt.add_argument("--profile", required=True)
    bt.add_argument("--eps", default="1e-3")
    bt.add_argument("--sweep", default=None)
    bt.add_argument("--tol", default="1e-12")
    bt.add_argument("--out", required=True)
    bt.set_defaults(fn=cmd_beta)

    e = sub.add_parser("eval")
    e.add_argument("--profile", required=True)
    e.add_argument("--points", required=True)
    e.add_argument("--out", default=None)
    e.set_defaults(fn=cmd_eval)

    pl = sub.add_parser("plot")
    pl.add_argument("--report", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(fn=cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        return args.fn(args)
    except CacheMismatch as exc:
        print(f"cache mismatch: {exc}", file=sys.stderr)
        return 2
    except Blowup1dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
