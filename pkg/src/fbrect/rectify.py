"""Rectifiability verdicts.

The tests implemented here:

* the dimension precondition ``rank B1 + rank B2 >= n + 1``;
* the coefficient-stack rank test on ``P = sum C_kl lambda^k mu^l``: the pairs
  can be rectified over the admitted set iff ``[C_kl ...]`` has rank ``n``;
* the necessary condition that no ``alpha`` annihilates ``adj(xI - A) B``;
* the finite test for a concrete list of eigenvalue pairs: the intersection
  bases at the chosen points must together span the state space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConjugateViolation, ExcludedPoint
from .exact import GaussRational, as_scalar, format_scalar
from .intersect import CurveIntersection, IntersectionResult, kernel_intersection_at
from .kernels import LinearPair
from .matfield import (
    ExactMatrix,
    column_basis,
    echelon,
    faddeev_leverrier,
    hstack,
    left_nullspace,
    primitive_vector,
    rank,
)


def dimension_check(pair1: LinearPair, pair2: LinearPair) -> bool:
    """``rank B1 + rank B2 >= n + 1``."""
    return pair1.m + pair2.m >= pair1.n + 1


@dataclass(frozen=True)
class CurveVerdict:
    substitution: str
    rectifiable: bool
    stacked_rank: int


@dataclass(frozen=True)
class RectifiabilityVerdict:
    """Outcome of the coefficient-stack test.

    Attributes:
        dimension_ok: ``rank B1 + rank B2 >= n + 1`` (``None`` if not evaluated).
        stacked_rank: Rank of the concatenated coefficient matrices.
        rectifiable_over_omega: ``stacked_rank == n``.
        witness_alpha: Primitive integer vector with ``alpha^T C_kl = 0`` for
            all ``k, l`` when the test fails.
        left_kernel: Basis (columns) of all such ``alpha``.
        curve_verdicts: Results of the same test along user curves.
    """

    dimension_ok: bool | None
    stacked_rank: int
    rectifiable_over_omega: bool
    witness_alpha: list | None = None
    left_kernel: ExactMatrix | None = None
    curve_verdicts: list = field(default_factory=list)


def _stack_test(stacked: ExactMatrix, n: int):
    r = rank(stacked) if stacked.cols else 0
    if r == n:
        return r, None, None
    K = left_nullspace(stacked) if stacked.cols else ExactMatrix.identity(n)
    witness = primitive_vector(K.col(0))
    return r, witness, K


def rectifiable_over_omega(ir: IntersectionResult, dimension_ok=None, curves=()) -> RectifiabilityVerdict:
    """Coefficient-stack rank test on a generic intersection.

    ``curves`` may hold :class:`CurveIntersection` results whose verdicts are
    attached as ``curve_verdicts``.
    """
    n = ir.P.rows
    r, witness, K = _stack_test(ir.stacked, n)
    cv = [curve_verdict(c) for c in curves]
    return RectifiabilityVerdict(dimension_ok, r, r == n, witness, K, cv)


def curve_verdict(curve: CurveIntersection) -> CurveVerdict:
    n = curve.P_curve.rows
    r = rank(curve.stacked) if curve.stacked.cols else 0
    return CurveVerdict(f"mu = {curve.g}", r == n, r)


def analyze(pair1: LinearPair, pair2: LinearPair, ir: IntersectionResult, curves=()):
    """Full verdict: dimension precondition plus the coefficient-stack test."""
    return rectifiable_over_omega(ir, dimension_check(pair1, pair2), curves)


def necessary_left_kernel(pair: LinearPair):
    """Nonzero ``alpha`` with ``alpha^T adj(xI - A) B == 0`` identically, or ``None``.

    Such an ``alpha`` rules out rectification over any set, since every
    achievable eigenvector lies in its orthogonal complement.
    """
    n = pair.n
    _, mats = faddeev_leverrier(pair.A)
    stacked = hstack(*[m @ pair.B for m in mats])
    if echelon(stacked, transform=False).rank == n:
        return None
    return primitive_vector(left_nullspace(stacked).col(0))


# ---------------------------------------------------------------------------
# finite selections


def _is_real(x) -> bool:
    return not isinstance(x, GaussRational)


class PairSelection:
    """Eigenvalue pairs ``(lambda_i, mu_i)`` with optional coefficient vectors.

    ``coefficients[i]`` (if given) combines the columns of the intersection
    basis at pair ``i`` into the eigenvector.
    """

    def __init__(self, pairs, coefficients=None):
        self.pairs = [(as_scalar(a), as_scalar(b)) for a, b in pairs]
        if coefficients is not None:
            coefficients = [None if c is None else [as_scalar(x) for x in c] for c in coefficients]
            if len(coefficients) != len(self.pairs):
                raise ValueError("one coefficient vector per pair is required")
        self.coefficients = coefficients

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def conjugate_partners(self):
        """``{i: j}`` pairing every non-real entry with its conjugate partner.

        Raises:
            ConjugateViolation: if some non-real pair has no partner.
        """
        partner = {}
        used = set()
        for i, (a, b) in enumerate(self.pairs):
            if _is_real(a) and _is_real(b):
                continue
            if i in partner:
                continue
            target = (a.conjugate(), b.conjugate())
            j = next((j for j, q in enumerate(self.pairs)
                      if j != i and j not in used and j not in partner and q == target), None)
            if j is None:
                raise ConjugateViolation(
                    f"pair ({format_scalar(a)}, {format_scalar(b)}) has no conjugate partner")
            partner[i], partner[j] = j, i
            used.update((i, j))
        return partner

    @property
    def conjugate_closed(self) -> bool:
        try:
            self.conjugate_partners()
        except ConjugateViolation:
            return False
        return True

    @property
    def stable(self) -> bool:
        return all(as_scalar(a).real < 0 and as_scalar(b).real < 0 for a, b in self.pairs)

    def __repr__(self):
        body = ", ".join(f"({format_scalar(a)}, {format_scalar(b)})" for a, b in self.pairs)
        return f"PairSelection([{body}])"


def selection_basis(source, point, basis: str = "P") -> ExactMatrix:
    """Matrix whose columns, combined by ``c``, give eigenvectors at ``point``.

    Off the spectra this is ``P(point)`` (or ``Q(point)`` with ``basis="Q"``).
    On a spectrum the polynomial basis still yields valid eigenvectors, but the
    true intersection can be larger (uncontrollable modes); the exact
    point-kernel intersection is used whenever it has more room.

    Raises:
        ExcludedPoint: for points excluded for reasons other than the spectra.
    """
    point = tuple(as_scalar(x) for x in point)
    if isinstance(source, CurveIntersection):
        lam0, mu0 = point
        if not source.g.den.evaluate(lam0, 0) or source.mu_of(lam0) != mu0:
            raise ExcludedPoint(source.reason(point))
    if source.hits_spectrum(point):
        P = source.evaluate(point)
        exact = kernel_intersection_at(source.pair1, source.pair2, point)
        if not P.cols or P.is_zero() or rank(P) < exact.cols:
            return exact
        return P
    reason = source.reason(point)
    if reason is not None:
        raise ExcludedPoint(reason)
    if basis == "Q":
        if not isinstance(source, IntersectionResult):
            raise ValueError("the rational basis Q is only kept for the generic intersection")
        return source.Q.evaluate(point)
    return source.evaluate(point)


def verify_selection(source, sel: PairSelection):
    """Finite rectifiability test for a concrete selection.

    Returns:
        ``(E_list, verdict)`` where ``E_list[i]`` spans the intersection at pair
        ``i`` and ``verdict`` says whether their union spans the state space.

    Raises:
        ConjugateViolation: if the selection is not closed under conjugation.
        ExcludedPoint: if a pair is excluded for a reason other than a spectrum.
    """
    sel.conjugate_partners()
    n = source.P.rows if isinstance(source, IntersectionResult) else source.P_curve.rows
    E_list = []
    for pt in sel.pairs:
        E = selection_basis(source, pt)
        E = column_basis(E) if E.cols and not E.is_zero() else ExactMatrix.zeros(n, 0)
        E_list.append(E)
    nonempty = [E for E in E_list if E.cols]
    verdict = bool(nonempty) and rank(hstack(*nonempty)) == n
    return E_list, verdict
