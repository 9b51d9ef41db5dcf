"""Barycentric clustering and affine factor discovery."""

from ._core import *  # noqa: F401,F403
from ._core import InvalidArgument, NumericalError, Mode, ClusterConfig  # noqa: F401

__version__ = "0.1.0"
