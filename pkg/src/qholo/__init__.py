"""Entanglement generated by state-dependent potentials between two two-state bodies."""

from qholo.dynamics import (
    CouplingCoefficients,
    TwoQubitState,
    collinear_phase_estimate,
    concurrence,
    coupling_coefficients,
    entangling_phase,
    entangling_phases,
    evolve,
    evolve_many,
    exact_concurrence_from_phase,
    phase_state,
    symmetric_product_state,
)
from qholo.echo import (
    EchoProtocolParams,
    EchoSweepRecord,
    find_null_time,
    null_residuals,
    probe_phase_at_null,
    sweep,
    term_phase,
    term_phase_function,
    write_sweep_csv,
)
from qholo.errors import (
    ConfigError,
    MissingTerm,
    NoRootFound,
    NonPositiveDistance,
    NotNormalized,
    OutOfHorizon,
    QholoError,
    QuadratureFailure,
)
from qholo.geometry import (
    CollinearStatic,
    RotatingApproach,
    Sampled,
    StateConfiguration,
    Static,
    constraint_gradient,
    constraint_residual,
    distances_at,
    load_sampled_csv,
)
from qholo.numerics import QuadratureSpec, find_zeros, integrate
from qholo.potentials import (
    Constant,
    Laurent,
    PowerLaw,
    evaluate,
    evaluate_term,
    term_dominates,
)

__version__ = "0.1.0"
