"""Numerical laboratory for functions of pairs of noncommuting Hermitian
matrices: spectral-projection integrals, dyadic frequency-decomposition
norms, and perturbation experiments."""

__version__ = "0.1.0"

from .errors import CapabilityError, NumericalError, OpintError, ValidationError
from .interval import Interval
from .spectral import (
    HermitianMatrix,
    PerturbedPair,
    SchattenIndex,
    SpectralMeasure,
    as_hermitian,
    eigendecompose,
    from_spectrum,
    hermitian_from_doc,
    hermitian_to_doc,
    prescribed_perturbation,
    random_hermitian,
    schatten_norm,
    spectral_measure,
)
from .functions import (
    DividedDifferenceKind,
    FunctionR2,
    catalog,
    coordinate_x,
    coordinate_y,
    dilate,
    divided_difference,
    divided_difference_first,
    divided_difference_second,
    f_sharp,
    from_callable,
    function_sum,
    parse_function_spec,
    plane_wave,
    random_bandlimited,
    scale,
    sup_norm_interval,
    trig_poly,
    zero_function,
)
from .besov import (
    BesovReport,
    LPWindowFamily,
    besov_norm,
    besov_report,
    lp_blocks,
    support_radius,
)
from .integrals import (
    OperatorIntegralResult,
    double_operator_integral,
    f_of_pair,
    f_of_pair_measures,
    f_of_pair_sharp,
    schur_multiplier_bounds,
    triple_first_upper_bound,
    triple_oi_first,
    triple_oi_second,
    triple_second_upper_bound,
)
from .lab import (
    EnsembleSpec,
    ExperimentConfig,
    ExperimentReport,
    IdentityCheckReport,
    IdentitySuiteReport,
    LipschitzTrial,
    collision_pair,
    difference_first_identity_check,
    difference_second_identity_check,
    empirical_constant_from_trials,
    full_difference_identity_check,
    identity_experiment,
    lipschitz_experiment,
    p_above_2_scan,
    separated_pair,
    standard_test_function,
)

__all__ = [name for name in dir() if not name.startswith("_")]
