"""Kernel bases of ``[xI - A, B]`` and controllability analysis.

Two representations are provided.  :func:`kernel_symbolic` returns the
adjugate form ``N(x) = adj(xI - A) B`` and ``M(x) = -det(xI - A) I``, which is a
polynomial identity but degenerates on the spectrum of ``A``.
:func:`kernel_at_point` computes the exact kernel of the constant matrix
``[x0 I - A, B]`` and is valid everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import LAMBDA, MU, BiPoly, RatFunc, as_scalar, exact_roots, numeric_roots
from .matfield import (
    ExactMatrix,
    echelon,
    faddeev_leverrier,
    float_rank,
    hstack,
    nullspace,
    primitive_columns,
    rank,
)


@dataclass(frozen=True)
class LinearPair:
    """One mode ``(A, B)`` of the switched system.

    Attributes:
        A: Constant ``n x n`` matrix.
        B: Constant ``n x p`` matrix.
        mode_id: 1 or 2; mode 1 uses the variable ``lambda``, mode 2 ``mu``.
    """

    A: ExactMatrix
    B: ExactMatrix
    mode_id: int = 1

    def __post_init__(self):
        if self.A.rows != self.A.cols:
            raise ValueError("A must be square")
        if self.B.rows != self.A.rows:
            raise ValueError("B must have as many rows as A")
        if self.B.cols < 1:
            raise ValueError("B needs at least one column")
        if not (self.A.is_constant() and self.B.is_constant()):
            raise ValueError("A and B must be constant matrices")
        if self.mode_id not in (1, 2):
            raise ValueError("mode_id must be 1 or 2")

    @classmethod
    def from_rows(cls, A, B, mode_id=1):
        return cls(ExactMatrix.from_rows(A), ExactMatrix.from_rows(B), mode_id)

    @property
    def n(self):
        return self.A.rows

    @property
    def p(self):
        return self.B.cols

    @property
    def m(self):
        """``rank B``."""
        return rank(self.B)

    @property
    def variable(self):
        return LAMBDA if self.mode_id == 1 else MU

    def pencil_at(self, x0) -> ExactMatrix:
        """The constant matrix ``[x0 I - A, B]``."""
        x0 = as_scalar(x0)
        shifted = ExactMatrix.identity(self.n).scale(x0) - self.A
        return hstack(shifted, self.B)

    def charpoly(self):
        """Coefficients of ``det(xI - A)``, lowest degree first."""
        return faddeev_leverrier(self.A)[0]

    def closed_loop(self, F: ExactMatrix) -> ExactMatrix:
        return self.A + self.B @ F


@dataclass(frozen=True)
class KernelBasis:
    """``[xI - A, B] [N; M] = 0`` identically in the mode variable."""

    N: ExactMatrix
    M: ExactMatrix
    construction: str = "adjugate"


@dataclass(frozen=True)
class PointKernel:
    """Exact kernel of ``[x0 I - A, B]`` split into state and input parts."""

    point: object
    Npart: ExactMatrix
    Mpart: ExactMatrix

    @property
    def d(self):
        return self.Npart.cols


@dataclass(frozen=True)
class UncontrollableMode:
    eigenvalue: object
    defect: int
    exact: bool


@dataclass(frozen=True)
class ControllabilityReport:
    uncontrollable_modes: list = field(default_factory=list)

    @property
    def controllable(self):
        return not self.uncontrollable_modes


def _univariate_matrix_poly(coeff_mats, var):
    """``sum(coeff_mats[k] * x**k)`` as a matrix of polynomials in ``var``."""
    rows, cols = coeff_mats[0].shape
    out = []
    for i in range(rows):
        for j in range(cols):
            coeffs = [m[i, j] for m in coeff_mats]
            out.append(RatFunc(BiPoly.from_univariate(coeffs, var)))
    return ExactMatrix(rows, cols, out)


def kernel_symbolic(pair: LinearPair) -> KernelBasis:
    """Adjugate kernel basis ``N = adj(xI - A) B``, ``M = -det(xI - A) I``."""
    n, p = pair.n, pair.p
    c, mats = faddeev_leverrier(pair.A)
    # adj(xI - A) = sum_k mats[k] x^(n-1-k); collect coefficients by ascending power
    nb = [mats[n - 1 - k] @ pair.B for k in range(n)]
    N = _univariate_matrix_poly(nb, pair.variable)
    chi = RatFunc(BiPoly.from_univariate(c, pair.variable))
    M = ExactMatrix.identity(p).scale(-chi)
    return KernelBasis(N, M, "adjugate")


def kernel_at_point(pair: LinearPair, x0) -> PointKernel:
    """Exact kernel of ``[x0 I - A, B]`` with primitive-normalized columns.

    Its dimension is ``p`` at controllable points and ``p + nu`` where the
    rank of the pencil drops by ``nu``.
    """
    x0 = as_scalar(x0)
    K = nullspace(pair.pencil_at(x0))
    if K.cols:
        K, _ = primitive_columns(K)
    n = pair.n
    return PointKernel(x0, K.submatrix(range(n), range(K.cols)),
                       K.submatrix(range(n, n + pair.p), range(K.cols)))


def point_representation(pair: LinearPair, x0):
    """``(N(x0), M(x0))`` usable for eigenvector and feedback construction.

    Off the spectrum this is the adjugate kernel evaluated at ``x0`` (so the
    columns match the symbolic ``N``); on the spectrum the adjugate form
    degenerates and the exact point kernel is returned instead.
    """
    x0 = as_scalar(x0)
    n, p = pair.n, pair.p
    c, mats = faddeev_leverrier(pair.A)
    chi = Fraction(0)
    for ck in reversed(c):
        chi = chi * x0 + ck
    if chi:
        adj = mats[0]
        for k in range(1, n):
            adj = adj.scale(x0) + mats[k]
        N = adj @ pair.B
        return N, ExactMatrix.identity(p).scale(-chi)
    pk = kernel_at_point(pair, x0)
    return pk.Npart, pk.Mpart


def spectrum(pair: LinearPair):
    """``(exact_eigenvalues, float_eigenvalues)`` of ``A``.

    Eigenvalues that are Gaussian rationals are found exactly; the remaining
    ones are reported numerically.
    """
    c = pair.charpoly()
    roots, rest = exact_roots(c)
    return roots, numeric_roots(rest)


def controllability(pair: LinearPair) -> ControllabilityReport:
    """Rank defect of ``[x0 I - A, B]`` at every eigenvalue of ``A``."""
    exact, approx = spectrum(pair)
    modes = []
    n = pair.n
    for x0 in exact:
        nu = n - echelon(pair.pencil_at(x0), transform=False).rank
        if nu:
            modes.append(UncontrollableMode(x0, nu, True))
    for z in approx:
        arr = np.hstack([z * np.eye(n) - pair.A.to_numpy(), pair.B.to_numpy()])
        nu = n - float_rank(arr)
        if nu:
            modes.append(UncontrollableMode(complex(z), nu, False))
    return ControllabilityReport(modes)
