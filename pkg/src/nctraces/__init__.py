"""Exact moments and cumulants of traces of random matrix words.

The main entry points are re-exported here; see the submodules for the rest.
"""

from .cumulants import CumulantKind, cumulant_from_moments, moment_from_cumulants, univariate_transform
from .engine import (
    connected_pairing_cumulant,
    cumulant_of_traces,
    first_order_limit,
    moment_of_traces,
)
from .expressions import (
    B,
    C,
    Centered,
    Combination,
    ConstantProfile,
    Ensemble,
    G,
    S,
    TraceExpression,
    centered_power,
    shifted,
)
from .fock import oracle_cumulant, oracle_moment
from .npoly import NPolynomial, leading_term
from .wick import GramSpace, boolean_wick, classical_wick, free_wick

__version__ = "0.1.0"

__all__ = [
    "B", "C", "Centered", "Combination", "ConstantProfile", "CumulantKind", "Ensemble", "G",
    "GramSpace", "NPolynomial", "S", "TraceExpression", "boolean_wick", "centered_power",
    "classical_wick", "connected_pairing_cumulant", "cumulant_from_moments", "cumulant_of_traces",
    "first_order_limit", "free_wick", "leading_term", "moment_from_cumulants", "moment_of_traces",
    "oracle_cumulant", "oracle_moment", "shifted", "univariate_transform",
]
