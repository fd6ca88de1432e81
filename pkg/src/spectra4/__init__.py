"""spectra4: spectral solver for a fourth-order boundary value problem
with an interior discontinuity, eigenparameter-dependent transmission
conditions at x=0 and eigenparameter-dependent boundary conditions at
x=1, cross-validated by an independent matrix discretization, integral
equations and asymptotic eigenvalue grids."""

__version__ = "0.1.0"

from .problem import (  # noqa: F401
    Problem,
    ConfigError,
    ConstraintError,
    SpectralParam,
    parse_config,
    principal_fourth_root,
)
from .expr import PotentialExpr, parse_potential, ExprError, EvalError  # noqa: F401
from .ode import Segment, derivative, integrate, integrate_dense  # noqa: F401
from .basis import (  # noqa: F401
    TransmissionMap,
    FundamentalBasis,
    launch_phi,
    launch_chi,
    boundary_forms,
    null_direction,
    eigenfunction,
)
from .charfn import (  # noqa: F401
    CharSample,
    char_fn,
    char_fn_many,
    wronskian_left,
    wronskian_right,
    cubic_identity_check,
)
from .spectrum import (  # noqa: F401
    ScanConfig,
    EigRecord,
    scan_real,
    refine,
    count_complex,
    find_eigenvalues,
    verify_bounded_below,
)
from .volterra import (  # noqa: F401
    VolterraSpec,
    make_spec,
    picard_solve,
    ode_residual,
    cross_check,
    diagnose_conventions,
)
from .asymptotics import (  # noqa: F401
    AsymGrid,
    GrowthCheck,
    build_grids,
    growth_ratio,
    match_spectrum,
    predicted_s,
)
from .oracle import (  # noqa: F401
    DiscreteOperator,
    discretize,
    solve_discrete,
    weighted_symmetry_defect,
)
