"""Numerical lab for resolvents of singular Hamiltonians H + A* + A.

Finite-dimensional truncations of the block-resolvent construction for
singular couplings, the regularized cutoff formula, and norm-resolvent
renormalization sweeps, all cross-checked against direct dense inversion.
"""

from .errors import (
    ConfigError,
    DomainError,
    InsufficientData,
    InternalMismatch,
    KreinLabError,
    NotBelowThreshold,
    QuadratureFailure,
    SingularBlock,
    SpectrumHit,
    ThetaSingular,
    UnknownFamily,
)
from .operators import (
    BlockOp2,
    OperatorModel,
    ScaleWeight,
    hermitize,
    op_norm_scale,
    pseudo_resolvent_defect,
    resolvent,
    scale_weight,
    schur_invert,
    spectral_norm,
)
from .perturbation import (
    CorrectionS,
    GBlockRow,
    Perturbation,
    SingularModel,
    default_lambda_circ,
    g_z,
    gamma_threshold,
    gg_z,
    h_s_direct,
    krein_resolvent,
    lambda_threshold,
    m_z,
    regularized_resolvent,
    reparametrize,
    s_tilde,
    t_s,
    theta_n,
    theta_n_plus_m,
    theta_plus_m,
    theta_s,
)
from .models import (
    CutoffFamily,
    FockSpace,
    NelsonParams,
    fock_build,
    fock_cutoff_family,
    friedrichs_family,
    nelson_counterterm,
    van_hove_model,
)
from .convergence import (
    ConvergenceCurve,
    SmallnessReport,
    counterterm_norms,
    default_probe,
    fit_rate,
    limit_model,
    log_growth_fit,
    nr_distance,
    nr_point,
    sweep_family,
    target_gap,
    uniform_smallness_check,
)

__version__ = "0.1.0"
