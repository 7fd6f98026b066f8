"""Continued fractions with odd partial quotients.

Exact expansion algebra, the invariant and stationary distributions,
the transition operator of the past-ratio chain, the Gauss-Kuzmin
iteration, and Monte Carlo verification drivers.
"""

from .constants import (
    ETA_INNER_SUM_REFERENCE,
    ETA_REFERENCE,
    G,
    INV_NORM,
    LOG_G,
    THETA,
    THETA1,
    THETA2,
    constants_dict,
    g,
    g_squared,
)
from .core import (
    ConvergentRow,
    Digit,
    DomainError,
    Expansion,
    InadmissibleDigitError,
    compare_with_G,
    compare_with_g,
    compare_with_g_squared,
    convergents,
    digits_from_pairs,
    evaluate,
    expand,
    first_digit,
    odd_gauss_map,
    r_tail,
    reconstruct,
    s_sequence,
    tail_ratio,
)
from .grid import GridFunction, Interval, state_grid, unit_grid
from .kuzmin import (
    CdfIterate,
    DensityIterate,
    RateConstant,
    density_step,
    eta_constant,
    identity_iterate,
    iterate_and_report,
    kuzmin_step,
    limit_cdf_iterate,
)
from .markov import (
    PairIndex,
    TransitionMatrix,
    TruncationError,
    VariationReport,
    check_prop1,
    check_prop1_indicator,
    kernel_P,
    n_step_Q,
    operator_U,
    row_sum_residual,
    state_map_u,
    stationarity_residual,
    theorem_thG_check,
    transition_cdf,
    variation,
)
from .measures import (
    f0_conditional,
    invariance_suite,
    limit_F,
    limit_H,
    rho_cdf,
    rho_density,
    t_invariance_check,
    xi_cdf,
    xi_density,
)
from .report import ConvergenceReport
from .simulation import (
    KsResult,
    OrbitSample,
    empirical_Hn,
    empirical_s_law,
    r1_exceedance,
    rate_fit,
    sample_orbits,
    simulate_statistics,
)

__version__ = "0.1.0"
