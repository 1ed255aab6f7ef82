"""Weak-coupling HPZ master equation on Gaussian states.

An oscillator coupled to an Ohmic bath with a Drude cutoff.  The package
provides the bath kernels, the time-dependent master-equation coefficients,
Gaussian density-matrix representations with positivity tests, Markovian
and non-Markovian propagation of the Gaussian exponents, and parameter
scans.  Hot kernels run in a compiled extension when it is available and
in pure Python otherwise (see :data:`hpzgauss.BACKEND`).
"""

__version__ = "0.1.0"

from ._backend import COMPILED
from .analysis import (
    Anomaly,
    PointReport,
    ScanGrid,
    WitnessReport,
    classify_anomaly,
    compare_dynamics,
    default_horizon,
    find_witnesses,
    rerun_witness,
    scan,
    scan_stationary,
)
from .bath import (
    DEFAULT_CONFIG,
    BathSpec,
    KernelEvalConfig,
    dissipation_kernel,
    noise_kernel,
    spectral_density,
)
from .coefficients import (
    CoefficientSet,
    coefficient_table,
    coefficients_at,
    d_pp,
    d_px,
    lambda_coeff,
    markovian_coefficients,
    omega_p_squared,
)
from .errors import (
    ConfigError,
    DomainError,
    HPZError,
    IntegrationError,
    NonNormalizableError,
    NoStationaryStateError,
    SeriesTruncationError,
    SpectrumUndefinedError,
)
from .gaussian import (
    GaussianKD,
    GaussianXY,
    Verdict,
    is_physical,
    kd_to_xy,
    make_initial_state,
    purity,
    spectrum,
    xy_to_kd,
)
from .propagator import (
    EvolutionConfig,
    Trajectory,
    evolve,
    evolve_markovian,
    markovian_trajectory,
    stationary_state,
)

BACKEND = "compiled" if COMPILED else "python"
