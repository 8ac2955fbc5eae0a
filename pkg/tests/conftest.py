import os
import subprocess
import sys
import types

import numpy as np
import pytest

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
DESK_CACHE = os.path.join(ROOT, ".cache", "desk")
TOY_CACHE = os.path.join(ROOT, ".cache", "toy")


def _desk_ready():
    return all(
        os.path.exists(os.path.join(DESK_CACHE, name))
        for name in ("profile.txt", "matrix_colloc.npz",
                     "matrix_refined.npz")
    )


@pytest.fixture(scope="session")
def desk():
    """Desk-scale profile and certified matrices (built once, cached).

    A cold build runs the full pipeline (about ten minutes); warm runs
    load from .cache/desk.
    """
    if not _desk_ready():
        script = os.path.join(ROOT, "scripts", "build_desk.py")
        subprocess.run([sys.executable, script], check=True, timeout=2400)
    from blowup1d.farfield import AnsatzNonlocal
    from blowup1d.nonlocal_ops import NonlocalMatrix
    from blowup1d.profile import load_profile

    prof = load_profile(os.path.join(DESK_CACHE, "profile.txt"))
    colloc = NonlocalMatrix.load(
        os.path.join(DESK_CACHE, "matrix_colloc.npz"),
        expect_mesh_hash=prof.mesh_hash())
    refined = NonlocalMatrix.load(
        os.path.join(DESK_CACHE, "matrix_refined.npz"),
        expect_mesh_hash=prof.mesh_hash())
    anl = AnsatzNonlocal(prof.ansatz, prof.basis, prof.alpha)
    return types.SimpleNamespace(profile=prof, colloc=colloc,
                                 refined=refined, anl=anl,
                                 cache=DESK_CACHE)


@pytest.fixture(scope="session")
def desk_assembler(desk):
    from blowup1d.bounds import SharpConstants, WeightSpec
    from blowup1d.verify import BoundAssembler, CertifiedProfileData

    mesh = desk.profile.basis.mesh
    x1 = min((mesh.node(i) for i in range(2, mesh.n)),
             key=lambda v: abs(v - 3708.0))
    ws = WeightSpec(x1=x1)
    consts = SharpConstants(ws, desk.profile.alpha, n_sub=400)
    data = CertifiedProfileData(desk.profile, desk.refined, desk.anl,
                                weights=ws, constants=consts, xmax=1.2e4)
    return BoundAssembler(data)


@pytest.fixture(scope="session")
def toy():
    """Small geometry with a cached collocation matrix for fast tests."""
    from blowup1d.ansatz import FarFieldAnsatz
    from blowup1d.farfield import AnsatzNonlocal
    from blowup1d.kernels import AlphaParam
    from blowup1d.mesh_basis import BsplineBasis, build_mesh_for_extent
    from blowup1d.nonlocal_ops import NonlocalMatrix, build_nonlocal_matrix

    os.makedirs(TOY_CACHE, exist_ok=True)
    mesh = build_mesh_for_extent(2e3, total=120, head_count=40,
                                 head_spacing=1 / 96, geo_start=60)
    basis = BsplineBasis(mesh)
    alpha = AlphaParam.critical()
    z0 = min((mesh.node(i) for i in range(2, mesh.n)),
             key=lambda v: abs(v - 1.9375))
    ansatz = FarFieldAnsatz(c1=1.5745, z0=z0)
    anl = AnsatzNonlocal(ansatz, basis, alpha)
    path = os.path.join(TOY_CACHE, f"matrix_{mesh.content_hash()}.npz")
    if os.path.exists(path):
        mat = NonlocalMatrix.load(path,
                                  expect_mesh_hash=mesh.content_hash())
    else:
        mat = build_nonlocal_matrix(basis, basis.collocation_points(),
                                    alpha)
        mat.save(path)
    return types.SimpleNamespace(mesh=mesh, basis=basis, alpha=alpha,
                                 ansatz=ansatz, anl=anl, matrix=mat)
