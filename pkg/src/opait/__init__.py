"""Finite-stage operator algorithmic information theory on exact rationals."""

from .rational import Interval, RationalComplex, fmt_rat, parse_rat
from .linalg import (
    BlockScalarOperator,
    IntervalHermitian,
    NotPositiveDefinite,
    RationalHermitian,
    StateVector,
    combine,
    is_psd,
    loewner_leq,
    quad_form,
)

__all__ = [
    "BlockScalarOperator", "Interval", "IntervalHermitian", "NotPositiveDefinite",
    "RationalComplex", "RationalHermitian", "StateVector", "combine", "fmt_rat", "is_psd",
    "loewner_leq", "parse_rat", "quad_form",
]
__version__ = "0.1.0"
