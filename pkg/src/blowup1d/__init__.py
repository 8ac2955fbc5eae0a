"""Construction and interval-arithmetic verification of self-similar
profiles for a one-dimensional nonlocal transport model."""

__version__ = "0.1.0"

from .interval import Interval, IntervalArray
from .kernels import ALPHA_BAR, AlphaParam, KernelId
from .mesh_basis import BsplineBasis, Mesh, RefinedMesh, build_mesh, \
    build_mesh_for_extent
from .ansatz import FarFieldAnsatz
from .profile import ApproximateProfile, SolverConfig, initial_profile, \
    load_profile, save_profile, solve_dynamic
from .bounds import SharpConstants, WeightSpec, sharp_constant
from .nonlocal_ops import NonlocalMatrix, build_nonlocal_matrix, \
    nonlocal_bspline
from .farfield import AnsatzNonlocal, LogExpansion
from .verify import BoundAssembler, CertifiedProfileData, \
    VerificationReport, check_fixed_point, check_near_field, emit_report, \
    farfield_report
from .alpha_family import BetaSolution, ScalingConstants, \
    residual_alpha_beta, scaling_constants, solve_beta, w_beta
