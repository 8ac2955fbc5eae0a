"""Build the desk-scale profile and certified matrices; cache to disk."""
import os
import sys
import time

import numpy as np

sys.path.insert(0, "/root/pkg/src")

from blowup1d.mesh_basis import BsplineBasis, RefinedMesh, build_mesh_for_extent
from blowup1d.kernels import AlphaParam
from blowup1d.nonlocal_ops import build_nonlocal_matrix, NonlocalMatrix
from blowup1d.ansatz import FarFieldAnsatz
from blowup1d.farfield import AnsatzNonlocal
from blowup1d.profile import (SolverConfig, initial_profile, solve_dynamic,
                              residual_on_points, save_profile)

CACHE = "/root/pkg/.cache/desk"
t0 = time.time()
def log(msg):
    print(f"[{time.time()-t0:8.1f}s] {msg}", flush=True)

mesh = build_mesh_for_extent(1e6, total=800, head_count=75,
                             head_spacing=1/384, geo_start=300)
basis = BsplineBasis(mesh)
log(f"mesh extent {mesh.extent:.4g} ratio {mesh.params['geo_ratio']:.6f}")
mesh_text = mesh.to_text()
open(os.path.join(CACHE, "mesh.txt"), "w").write(mesh_text)

alpha = AlphaParam.critical()
z0 = min((mesh.node(i) for i in range(2, mesh.n)),
         key=lambda v: abs(v - 1.9375))
ansatz = FarFieldAnsatz(c1=1.5745, z0=z0)
log(f"z0 = {z0}")
anl = AnsatzNonlocal(ansatz, basis, alpha)
log(f"ansatz interpolated; defect norm = {anl.defect_norm()}")

pts = basis.collocation_points()
cpath = os.path.join(CACHE, "matrix_colloc.npz")
if os.path.exists(cpath):
    mat = NonlocalMatrix.load(cpath, expect_mesh_hash=mesh.content_hash())
    log("colloc matrix loaded")
else:
    mat = build_nonlocal_matrix(basis, pts, alpha)
    mat.save(cpath)
    log("colloc matrix built+saved")

ppath = os.path.join(CACHE, "profile.txt")
if not os.path.exists(ppath):
    prof0 = initial_profile(basis, ansatz, alpha)
    cfg = SolverConfig(residual_target=8e-3, coarse_target=5e-2,
                       t_max=150.0, polish_time=2.0)
    def cb(s, t, r, tag):
        if tag != "free" or s % 20000 < 1000:
            log(f"  solver[{tag}] step {s} t={t:.1f} resid={r:.3e}")
    prof = solve_dynamic(prof0, cfg, mat, anl, callback=cb)
    save_profile(prof, ppath)
    log(f"profile saved; slope {prof.slope_at_origin():.10f}")
    rel = residual_on_points(prof, mat, anl)
    log(f"resid sup (0,100]={np.max(np.abs(rel[pts <= 100])):.3e} "
        f"(100,1e4]={np.max(np.abs(rel[(pts > 100) & (pts <= 1e4)])):.3e}")
else:
    log("profile exists")

rpath = os.path.join(CACHE, "matrix_refined.npz")
if not os.path.exists(rpath):
    refined = RefinedMesh(mesh)
    keep = refined.points <= 2e4   # verification domain plus margin
    rpts = refined.points[keep]
    log(f"refined points for verification: {len(rpts)}")
    rmat = build_nonlocal_matrix(basis, rpts, alpha)
    rmat.save(rpath)
    log("refined matrix built+saved")
log("DONE")
