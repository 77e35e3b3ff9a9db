"""Bayesian phase estimation for a Mach-Zehnder interferometer fed by
symmetric two-mode Fock superpositions."""

from .bayes import (
    ConfidenceReport,
    PhaseGrid,
    Posterior,
    averaged_posterior_enumerated,
    averaged_posterior_exact_zero,
    averaged_posterior_mc,
    confidence_halfwidth,
    confidence_report,
    default_grid,
    phase_estimate,
    posterior_from_record,
    posterior_sigma,
)
from .interferometer import MeasurementRecord, OutcomeDistribution, TwinState, likelihood, sample_outcomes
from .rotation import (
    DColumn,
    brute_force_rotation,
    legendre_column,
    wigner_d_column,
    wigner_d_element,
)

__version__ = "0.1.0"
