"""Fourier decay of self-similar measures via stopping words and renewal theory."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .kernels import BACKEND  # noqa: E402
from .ifs_core import (  # noqa: E402
    IfsSpec,
    SimilitudeMap,
    compose,
    enumerate_stopping_words,
    load_spec,
    moments,
    normalize_to_unit,
    parse_spec,
    validate_ifs,
)
from .walk_renewal import (  # noqa: E402
    cutoff_mass,
    joint_residue_check,
    laplace,
    renewal_operator_exact,
    renewal_operator_mc,
    sample_stopping,
    step_distribution,
    u_function,
    weakly_dioph_scan,
)
from .spectral import (  # noqa: E402
    double_sum_bound,
    fit_log_decay,
    fourier_mc,
    fourier_product_equal_ratio,
    fourier_recursive,
    oscillation_integral,
    spectrum_scan,
    stopping_sum_identity,
)
from .arith_diag import classify_group, continued_fraction, diophantine_exponent_estimate, pisot_check  # noqa: E402
from .regularity import correlation_mass, holder_exponent_fit, sample_measure  # noqa: E402
