"""Eigenvalue counting in spectral gaps through the index of projection pairs."""

from .errors import SpecGapError
from .index_xi import fredholm_index, xi, xi_value
from .operator_core import Interval, Operator, Projection, count_in

__version__ = "0.1.0"
