"""EFIE boundary-element solver with loop-star decomposition and
graph-Laplacian spectral-filter preconditioning."""

from .assembly import (
    OperatorSet,
    assemble_excitation,
    assemble_operators,
    assemble_Ta,
    assemble_Tphi,
    bistatic_rcs,
    far_field,
)
from .errors import (
    ConvergenceError,
    DegenerateElement,
    EfieFiltError,
    ParseError,
    QuadratureFailure,
    SingularMatrix,
    TopologyError,
)
from .filters import (
    BlockPreconditioner,
    FilterBank,
    SpectralSystem,
    apply_band,
    apply_lowpass,
    apply_Q,
    build_filter_bank,
    build_preconditioner,
    estimate_lambda_max,
    precondition_system,
)
from .krylov import SolveReport, estimate_extremal_singular_values, solve
from .loopstar import (
    QuasiHelmholtzMaps,
    ScaledSystem,
    apply_sigma_tilde,
    build_maps,
    condition_number,
    make_scaled_system,
)
from .mesh import (
    TriangleMesh,
    generate_icosphere,
    generate_wing_body,
    load_mesh,
    write_off,
)
from .mie import MieOracle, mie_rcs
from .quadrature import QuadratureConfig
from .rwg import PhysicsParams, PlaneWave, RwgSpace

__version__ = "0.1.0"
