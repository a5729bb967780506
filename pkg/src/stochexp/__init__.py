"""Stochastic exponentials of jump diffusions.

Compensator calculus for processes built from a real Levy driver through
representing functions: drifts, multiplicative compensators, the
Levy-Khintchin identity, signed Mellin transforms with density inversion,
Girsanov-type measure changes, and an exact Monte Carlo oracle.
"""

from .numkernel import (
    NAN,
    AliasingSuspected,
    AsymmetricCharFn,
    DensityGrid,
    NaNEncountered,
    NonConvergent,
    NumericalError,
    QuadratureSpec,
    RandomStream,
    integrate,
    invert_characteristic,
    normal_cdf,
    rng_normal,
    rng_poisson,
)
from .levycalc import (
    AtomJumps,
    AtomLaw,
    DegenerateJump,
    GaussianJumps,
    GaussianLaw,
    Incompatible,
    LevyTriplet,
    NonIntegrable,
    NotSpecial,
    PredictableJumpSchedule,
    RepresentingFunction,
    Truncation,
    affine,
    compose,
    drift_rate,
    dp_drift,
    exp_return,
    expected_exp_utility,
    expected_stoch_exp,
    exponential,
    exponential_compensator,
    identity,
    indicator_at_minus_one,
    is_special,
    levy_khintchin,
    log1p_entry,
    modulus_entry,
    modulus_of,
    modulus_power,
    mult_compensator,
    pushforward_triplet,
    rf_product,
    rf_sum,
    signed_power,
    yor_product,
)
from .signedexp import (
    ConditioningOnNull,
    GridSpec,
    MVParams,
    SignedMellinModel,
    g_minus,
    g_plus,
    mellin_drift,
    mv_flip_rate,
    mv_g_closed,
    mv_optimal_fraction,
    mv_power_rate,
    phi_grid,
    phi_minus,
    phi_plus,
    subdensities,
    terminal_wealth_density,
)
from .measurechange import (
    GirsanovTilt,
    InvalidTilt,
    QCharacteristics,
    q_characteristics,
    q_expected_stoch_exp,
    q_mult_compensator,
)
from .mcoracle import (
    PathBatch,
    PathRecord,
    SimConfig,
    empirical_char_fn,
    estimate,
    importance_weighted,
    pathwise_stoch_exp,
    sign_frequency,
    simulate,
    stoch_exp_terminal,
)

__version__ = "0.1.0"
