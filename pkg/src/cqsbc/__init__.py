"""Spatial branch-and-cut for nonconvex QCQP with bounded complex variables."""

from .driver import SolveConfig, solve
from .model import ComplexQcqp, EntryBounds
from .numerics import ComplexVector, HermitianMatrix
from .problems import GenericProblem

__all__ = [
    "ComplexQcqp",
    "ComplexVector",
    "EntryBounds",
    "GenericProblem",
    "HermitianMatrix",
    "SolveConfig",
    "solve",
]

__version__ = "0.1.0"
