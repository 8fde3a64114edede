"""kpzlab: a numerical laboratory for the mollified KPZ equation.

Three routes to one object, cross-verified on a shared discretized noise
field: the renormalized interface equation solved directly, its Hopf-Cole
heat-equation partner, and a forward-backward SDE / Feynman-Kac Monte Carlo
representation evaluated along backward Brownian characteristics.
"""

from .config import ExperimentConfig, load_config, parse_config, save_config, to_text
from .errors import (
    ConfigError,
    DomainError,
    GridMismatchError,
    InstabilityError,
    KpzLabError,
    McUndersamplingError,
    NoiseFileError,
    PositivityError,
    QuadratureWindowError,
    ResolutionError,
)
from .grid import (
    Field,
    FieldTrajectory,
    SpaceGrid,
    TimeGrid,
    constant_field,
    dx_central,
    heat_semigroup,
    inner_product,
)
from .integrals import (
    DiscretePath,
    Partition,
    backward_integral,
    forward_integral,
    ito_check_backward,
    ito_check_forward,
    quadratic_variation,
    reversal_identity_check,
    time_reverse,
    weighted_backward_forward_bridge,
)
from .mollifier import Mollifier, covariance, mollifier_new, sample_on_grid
from .noise import (
    NoiseRealization,
    SmoothedField,
    coarsen,
    load_noise,
    pair_with_mollifier,
    project_on,
    sample_noise,
    save_noise,
    zero_noise,
)
from .solvers import (
    InitialCondition,
    KpzState,
    SheState,
    brownian_initial,
    cosine_initial,
    cross_validate,
    flat_initial,
    hopf_cole,
    kpz_solve,
    she_solve,
    zero_noise_gap,
)
from .fbsde import (
    BackwardCharacteristic,
    BridgeSample,
    DriverPath,
    FbsdeSolution,
    ZFunctional,
    backward_characteristic,
    bridge_functional,
    bridge_sample,
    build_z,
    dbsde_residual,
    decomposition_check,
    feynman_kac_u,
    sample_bridge,
    sample_driver,
    solve_fbsde,
)

__version__ = "0.1.0"
