"""Exact feedback rectification for two-mode switched linear systems.

Given pairs ``(A1, B1)`` and ``(A2, B2)``, find feedbacks ``F1``, ``F2`` such
that ``A1 + B1 F1`` and ``A2 + B2 F2`` share a full set of eigenvectors, which
makes the closed loop stable under arbitrary switching.
"""

from .errors import FbrectError, InputError, NotRectifiable
from .exact import BiPoly, GaussRational, RatFunc, parse_ratfunc, parse_scalar
from .fileio import builtin_system, load_system
from .intersect import intersection_on_curve, intersection_symbolic, point_intersection
from .kernels import LinearPair, controllability, kernel_symbolic
from .matfield import ExactMatrix
from .rectify import PairSelection, analyze, verify_selection
from .synth import SynthesisConfig, synthesize
from .verify import certificate_from, cqlf, random_switching, simulate

__version__ = "0.1.0"

__all__ = [
    "BiPoly", "ExactMatrix", "FbrectError", "GaussRational", "InputError", "LinearPair",
    "NotRectifiable", "PairSelection", "RatFunc", "SynthesisConfig", "analyze", "builtin_system",
    "certificate_from", "controllability", "cqlf", "intersection_on_curve", "intersection_symbolic",
    "kernel_symbolic", "load_system", "parse_ratfunc", "parse_scalar", "point_intersection",
    "random_switching", "simulate", "synthesize", "verify_selection",
]
