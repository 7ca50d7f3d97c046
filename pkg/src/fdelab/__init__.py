"""fdelab: numerical laboratory for subcritical fast diffusion extinction.

Parameter algebra, radial self-similar profile solves, second-order tail
asymptotics, and a rescaled-flow evolver realizing the stabilization and
collapse behaviors at desk scale.
"""

from .asymptotics import (
    AsymptoticFit,
    WTrace,
    compute_limits,
    fit_second_order,
    phi_of_w,
    to_log_trace,
    verify_integral_identity,
)
from .diagnostics import (
    ContractionRecord,
    EnvelopeRecord,
    OriginalSlice,
    aronson_benilan_check,
    contraction_monitor,
    lambda_envelope,
    radial_l1,
    shell_area,
    weighted_l1_distance,
)
from .evolver import (
    EnvelopeSettings,
    EvolutionReport,
    RadialState,
    build_initial,
    cfl_dtau,
    evolve,
    make_radial_grid,
    reconstruct_original,
    step,
)
from .profile import (
    GridSpec,
    Profile,
    ProfileFamily,
    barenblatt_profile,
    evaluate,
    pair_difference,
    rescale_profile,
    singular_profile,
    solve_profile,
)
from .regimes import ParamSet, Regime, classify, derive_params, tail_exponent

__version__ = "0.1.0"
