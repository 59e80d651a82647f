"""Qubit dephasing after a non-selective measurement: decoherence, recoherence and thresholds."""

from .bath import (
    BathParams,
    QubitParams,
    decoherence_fn,
    decoherence_thermal,
    decoherence_vacuum,
    phi,
    phi_envelope,
    small_t_moments,
    spectral_density,
)
from .dynamics import (
    Trajectory,
    coherence_trajectory,
    gamma_cor_diagonal,
    gamma_cor_general,
    phase_shift,
    refined_grid,
    sigma_plus,
)
from .errors import ConvergenceError, DegenerateSchemeError, DomainError
from .measurement import (
    CorrelationCoefficients,
    EulerAngles,
    MeasurementScheme,
    PureState,
    SchemeObservables,
    default_scheme,
    effects,
    gram_operator,
    initial_observables,
    is_gram_diagonal,
    nnd_coefficients,
    omega_operators,
    orthogonal_state,
    scheme_b12,
    scheme_i,
    scheme_ii,
    state_from_angles,
    verify_udiag_relation,
)
from .recoherence import (
    RecoherenceReport,
    ThresholdGrid,
    analyze,
    lambda_min,
    lambda_min_bisect,
    lambda_min_grid,
    small_t_curvature,
)
from .specfun import SpecFunResult, gamma_fn, hurwitz_zeta, hurwitz_zeta_result, log_gamma

__version__ = "0.1.0"
