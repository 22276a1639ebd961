"""Malliavin-Sobolev regularity of Wiener functionals from their chaos profiles."""

from chaos_regularity.chaos_core import (
    ChaosProfile,
    FiniteSupport,
    GeometricPolynomial,
    SeriesValue,
    bs_norm_sq,
    convergence_radius,
)
from chaos_regularity.configuration import Configuration
from chaos_regularity.errors import (
    AccuracyError,
    ChaosRegularityError,
    ConsistencyError,
    DomainError,
    InputError,
    SingularityError,
)
from chaos_regularity.graph import graph
from chaos_regularity.regularity import (
    Decision,
    RegularityVerdict,
    alpha_threshold,
    classify,
    membership,
)
from chaos_regularity.state import InputState, OutputState, State

__all__ = [
    "graph",
    "AccuracyError",
    "ChaosProfile",
    "ChaosRegularityError",
    "Configuration",
    "ConsistencyError",
    "Decision",
    "DomainError",
    "FiniteSupport",
    "GeometricPolynomial",
    "InputError",
    "InputState",
    "OutputState",
    "RegularityVerdict",
    "SeriesValue",
    "SingularityError",
    "State",
    "alpha_threshold",
    "bs_norm_sq",
    "classify",
    "convergence_radius",
    "membership",
]
