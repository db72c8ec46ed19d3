"""Nonlocal operators with section-adapted kernels: sections, solvers, regularity probes."""

from ._impl import (
    DeformkError,
    Potential,
    __version__,
    compute_tau,
    engulfing_probe,
    exit_payoff,
    fit_ellipsoid,
    holder_exponent,
    operator_triple,
    quasi_distance,
    section_volume,
    solve,
)

__all__ = [
    "DeformkError",
    "Potential",
    "__version__",
    "compute_tau",
    "engulfing_probe",
    "exit_payoff",
    "fit_ellipsoid",
    "holder_exponent",
    "operator_triple",
    "quasi_distance",
    "section_volume",
    "solve",
]
