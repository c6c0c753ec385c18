"""Interference queueing networks on Z^d.

Poisson arrivals at every site; a rate-one potential departure at site ``i``
is accepted with probability ``x_i / sum_j a_j x_{i-j}``.  The package
simulates the model exactly on finite index sets, evaluates the infinite
lattice through finite dependency sets, estimates stationary quantities and
integrates the fluid limit.
"""

from .driving import DrivingStream, count_statistics
from .dynamics import (
    INFINITE,
    Box,
    DynamicsConfig,
    InitialCondition,
    Probes,
    QueueState,
    Restricted,
    Torus,
    coupled_run,
    departure_probability,
    reference_run,
    run,
)
from .errors import IqnetError
from .interference import (
    InterferenceSequence,
    closed_form_mean,
    critical_rate,
    geometric,
    k_shifted_mean_bound,
    ones,
    second_moment_bound,
    truncate,
    validate,
)
from .local_construction import block_length, dependency_schedule, evaluate, explore_cluster
from .stationary import ergodic_estimates, loynes_sample, rate_balance_check

__version__ = "0.1.0"

__all__ = [
    "INFINITE", "Box", "DrivingStream", "DynamicsConfig", "InitialCondition",
    "InterferenceSequence", "IqnetError", "Probes", "QueueState", "Restricted", "Torus",
    "block_length", "closed_form_mean", "count_statistics", "coupled_run", "critical_rate",
    "departure_probability", "dependency_schedule", "ergodic_estimates", "evaluate",
    "explore_cluster", "geometric", "k_shifted_mean_bound", "loynes_sample", "ones",
    "rate_balance_check", "reference_run", "run", "second_moment_bound", "truncate", "validate",
]
