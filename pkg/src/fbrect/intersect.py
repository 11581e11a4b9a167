"""Intersections ``im N1(lambda) ∩ im N2(mu)``: generic, on curves and at points.

The generic intersection is computed by one reduced row echelon pass over
``[K L]``: every non-pivot column of ``L`` expresses a vector of ``im L`` as a
combination of pivot columns, and the ``K`` part of that combination lies in
both images.  The same routine serves constant matrices, matrices over
Q(lambda) (curves) and matrices over Q(lambda, mu).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import Cancelled, DegenerateSubstitution, SingularNhat
from .exact import (
    LAMBDA,
    MU,
    BiPoly,
    RatFunc,
    as_scalar,
    format_scalar,
    poly_gcd,
    refine_factors,
)
from .kernels import LinearPair, kernel_at_point, kernel_symbolic, point_representation, spectrum
from .matfield import (
    ExactMatrix,
    column_basis,
    det,
    echelon,
    hstack,
    norm_entry,
    primitive_columns,
)


def _raw_intersection(K: ExactMatrix, L: ExactMatrix, cancel=None):
    """Unnormalized intersection basis plus every pivot used along the way."""
    n = K.rows
    e = echelon(hstack(K, L), transform=False, cancel=cancel)
    kpiv = [(r, pc) for r, pc in enumerate(e.pivot_cols) if pc < K.cols]
    lfree = [j for j in range(K.cols, K.cols + L.cols) if j not in e.pivot_cols]
    pivots = list(e.pivot_values)
    if not kpiv or not lfree:
        return ExactMatrix.zeros(n, 0), pivots
    Kp = K.columns([pc for _, pc in kpiv])
    L12 = ExactMatrix.from_rows([[e.rref[r, j] for j in lfree] for r, _ in kpiv], len(lfree))
    Q = Kp @ L12
    if Q.is_zero():
        return ExactMatrix.zeros(n, 0), pivots
    sel = echelon(Q, transform=False, cancel=cancel)
    pivots.extend(sel.pivot_values)
    return Q.columns(sel.pivot_cols), pivots


def subspace_intersection(K: ExactMatrix, L: ExactMatrix, cancel=None) -> ExactMatrix:
    """Basis of ``im K ∩ im L`` with primitive-normalized columns (empty if trivial)."""
    Q, _ = _raw_intersection(K, L, cancel)
    if not Q.cols:
        return Q
    return primitive_columns(Q)[0]


# ---------------------------------------------------------------------------
# exclusion sets


def _is_near(z, values, tol=1e-9):
    return any(abs(complex(z) - complex(v)) <= tol * max(1.0, abs(complex(v))) for v in values)


@dataclass(frozen=True)
class ExclusionSet:
    """Points where the generic intersection formula is not certified.

    Attributes:
        spectra: ``((exact1, approx1), (exact2, approx2))`` eigenvalues of ``A1``
            and ``A2``.
        pole_factors: Square-free factors whose zeros make a pivot vanish or a
            denominator of ``Q`` vanish.
        rank_drop_factors: Factors of the gcd of the generic-rank minors of
            ``[N1 N2]``, populated when the generic intersection is trivial.
    """

    spectra: tuple
    pole_factors: tuple = ()
    rank_drop_factors: tuple = ()

    def reason(self, point):
        """Why ``point`` is excluded, or ``None`` if it is admitted."""
        lam0, mu0 = (as_scalar(x) for x in point)
        (ex1, ap1), (ex2, ap2) = self.spectra
        if lam0 in ex1 or _is_near(complex(lam0), ap1):
            return f"lambda = {format_scalar(lam0)} is an eigenvalue of A1"
        if mu0 in ex2 or _is_near(complex(mu0), ap2):
            return f"mu = {format_scalar(mu0)} is an eigenvalue of A2"
        for f in self.pole_factors:
            if not f.evaluate(lam0, mu0):
                return f"pole factor {f} vanishes"
        for f in self.rank_drop_factors:
            if not f.evaluate(lam0, mu0):
                return f"rank-drop factor {f} vanishes"
        return None

    def admits(self, point) -> bool:
        return self.reason(point) is None

    def hits_spectrum(self, point) -> bool:
        lam0, mu0 = (as_scalar(x) for x in point)
        return lam0 in self.spectra[0][0] or mu0 in self.spectra[1][0]


def _factors_of(values):
    polys = []
    for v in values:
        if isinstance(v, RatFunc):
            polys.append(v.num)
            polys.append(v.den)
    return tuple(refine_factors(polys))


# ---------------------------------------------------------------------------
# generic intersection


def coefficient_matrices(P: ExactMatrix):
    """``{(k, l): C_kl}`` with ``P = sum C_kl lambda^k mu^l`` (sorted by ``(k, l)``)."""
    monos = set()
    for x in P.entries:
        if isinstance(x, RatFunc):
            monos.update(x.num.terms)
        elif x:
            monos.add((0, 0))
    out = {}
    for mono in sorted(monos):
        vals = []
        for x in P.entries:
            if isinstance(x, RatFunc):
                vals.append(x.num.terms.get(mono, Fraction(0)))
            else:
                vals.append(x if mono == (0, 0) else Fraction(0))
        out[mono] = ExactMatrix(P.rows, P.cols, vals)
    return out


def stack_coefficients(coeffs: dict, rows: int) -> ExactMatrix:
    """Horizontal concatenation of the coefficient matrices (``rows x 0`` when empty)."""
    mats = [coeffs[k] for k in sorted(coeffs) if coeffs[k].cols]
    if not mats:
        return ExactMatrix.zeros(rows, 0)
    return hstack(*mats)


@dataclass(frozen=True)
class IntersectionResult:
    """Generic intersection over Q(lambda, mu).

    Attributes:
        Q: Rational basis produced by elimination.
        P: ``Q`` with denominators cleared column-wise, primitive-normalized.
        scales: Per-column factors ``q_j`` with ``P[:, j] = Q[:, j] * q_j``.
        coeffs: ``{(k, l): C_kl}``.
        stacked: ``[C_kl ...]`` concatenated horizontally.
        excluded: Where the representation is not certified.
        N1, N2: The kernel bases used.
        pair1, pair2: The modes the result was computed from.
    """

    Q: ExactMatrix
    P: ExactMatrix
    scales: tuple
    coeffs: dict
    stacked: ExactMatrix
    excluded: ExclusionSet
    N1: ExactMatrix
    N2: ExactMatrix
    pair1: LinearPair | None = None
    pair2: LinearPair | None = None

    @property
    def r(self):
        return self.P.cols

    def evaluate(self, point) -> ExactMatrix:
        return self.P.evaluate(point)

    def reason(self, point):
        return self.excluded.reason(point)

    def admits(self, point) -> bool:
        return self.excluded.admits(point)

    def hits_spectrum(self, point) -> bool:
        return self.excluded.hits_spectrum(point)


def rank_drop_factors(N1: ExactMatrix, N2: ExactMatrix, generic_rank: int, cancel=None):
    """Irreducible-ish factors of the gcd of the nonzero generic-rank minors of ``[N1 N2]``."""
    M = hstack(N1, N2)
    rho = generic_rank
    if rho == 0:
        return ()
    g = None
    for rows in combinations(range(M.rows), rho):
        for cols in combinations(range(M.cols), rho):
            if cancel is not None and cancel.is_set():
                raise Cancelled("minor enumeration cancelled")
            d = norm_entry(det(M.submatrix(rows, cols)))
            if not d:
                continue
            num = d.num if isinstance(d, RatFunc) else BiPoly.const(d)
            g = num if g is None else poly_gcd(g, num)
            if g.is_constant():
                return ()
    if g is None or g.is_constant():
        return ()
    return tuple(refine_factors([g]))


def _spectra(pair1, pair2):
    e1, a1 = spectrum(pair1)
    e2, a2 = spectrum(pair2)
    return ((tuple(e1), tuple(a1)), (tuple(e2), tuple(a2)))


def intersection_symbolic(pair1: LinearPair, pair2: LinearPair, cancel=None) -> IntersectionResult:
    """Generic ``im N1(lambda) ∩ im N2(mu)`` with coefficient matrices and exclusions.

    Results are cached per pair of modes (the pairs are immutable); a call
    with a cancel event always recomputes so that it can be interrupted.
    """
    if cancel is None:
        return _intersection_cached(pair1, pair2)
    return _intersection(pair1, pair2, cancel)


@lru_cache(maxsize=64)
def _intersection_cached(pair1, pair2):
    return _intersection(pair1, pair2, None)


def clear_cache():
    """Drop cached generic intersections."""
    _intersection_cached.cache_clear()


def _intersection(pair1, pair2, cancel):
    N1 = kernel_symbolic(pair1).N
    N2 = kernel_symbolic(pair2).N
    Q, pivots = _raw_intersection(N1, N2, cancel)
    spectra = _spectra(pair1, pair2)
    if Q.cols:
        P, scales = primitive_columns(Q)
        dens = [RatFunc(x.den) for x in Q.entries if isinstance(x, RatFunc)]
        poles = _factors_of(list(pivots) + dens)
        drops = ()
    else:
        P, scales = Q, []
        poles = _factors_of(pivots)
        generic = echelon(hstack(N1, N2), transform=False, cancel=cancel).rank
        drops = rank_drop_factors(N1, N2, generic, cancel)
    coeffs = coefficient_matrices(P) if P.cols else {}
    stacked = stack_coefficients(coeffs, P.rows)
    return IntersectionResult(Q, P, tuple(scales), coeffs, stacked,
                              ExclusionSet(spectra, poles, drops), N1, N2, pair1, pair2)


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class CurveIntersection:
    """Intersection restricted to ``mu = g(lambda)``.

    Attributes:
        g: The substitution as a rational function of ``lambda``.
        P_curve: Polynomial basis in ``lambda``, primitive-normalized columns.
        coeffs: ``{k: C_k}`` with ``P_curve = sum C_k lambda^k``.
        stacked: ``[C_0 C_1 ...]``.
        excluded_lambda: Univariate factors in ``lambda`` whose roots are excluded.
        spectra: Spectra of ``A1`` and ``A2``.
        pair1, pair2: The modes the result was computed from.
    """

    g: RatFunc
    P_curve: ExactMatrix
    coeffs: dict
    stacked: ExactMatrix
    excluded_lambda: tuple
    spectra: tuple
    pair1: LinearPair | None = None
    pair2: LinearPair | None = None

    @property
    def substitution(self):
        return (self.g.num, self.g.den)

    @property
    def r(self):
        return self.P_curve.cols

    def mu_of(self, lam0):
        return norm_entry(self.g.evaluate(lam0, 0))

    def reason(self, point):
        lam0, mu0 = (as_scalar(x) for x in point)
        if not self.g.den.evaluate(lam0, 0):
            return f"g has a pole at lambda = {format_scalar(lam0)}"
        if self.mu_of(lam0) != mu0:
            return f"({format_scalar(lam0)}, {format_scalar(mu0)}) is not on the curve mu = {self.g}"
        (ex1, ap1), (ex2, ap2) = self.spectra
        if lam0 in ex1 or _is_near(complex(lam0), ap1):
            return f"lambda = {format_scalar(lam0)} is an eigenvalue of A1"
        if mu0 in ex2 or _is_near(complex(mu0), ap2):
            return f"mu = {format_scalar(mu0)} is an eigenvalue of A2"
        for f in self.excluded_lambda:
            if not f.evaluate(lam0, 0):
                return f"excluded factor {f} vanishes"
        return None

    def admits(self, point) -> bool:
        return self.reason(point) is None

    def hits_spectrum(self, point) -> bool:
        lam0, mu0 = (as_scalar(x) for x in point)
        return lam0 in self.spectra[0][0] or mu0 in self.spectra[1][0]

    def evaluate(self, point) -> ExactMatrix:
        return self.P_curve.evaluate(point)


def _as_curve(g) -> RatFunc:
    from .exact import parse_ratfunc

    if isinstance(g, str):
        text = g.replace(" ", "")
        if "=" in text:
            lhs, rhs = text.split("=", 1)
            if lhs not in ("mu", "μ"):
                raise ValueError(f"curve must have the form 'mu = g(lambda)', got {g!r}")
            text = rhs
        g = parse_ratfunc(text)
    g = RatFunc.lift(g)
    if MU in g.variables():
        raise ValueError("curve substitution must not involve mu")
    return g


def intersection_on_curve(pair1: LinearPair, pair2: LinearPair, g, cancel=None) -> CurveIntersection:
    """Intersection over Q(lambda) after substituting ``mu = g(lambda)``.

    Raises:
        DegenerateSubstitution: if ``N2(g(lambda))`` loses rank below ``rank B2``.
    """
    g = _as_curve(g)
    N1 = kernel_symbolic(pair1).N
    N2 = kernel_symbolic(pair2).N.substitute_mu(g)
    N2 = primitive_columns(N2)[0] if N2.cols else N2
    nonzero = [j for j in range(N2.cols) if any(N2.col(j))]
    N2 = N2.columns(nonzero)
    m2 = pair2.m
    if not N2.cols or echelon(N2, transform=False).rank < m2:
        raise DegenerateSubstitution(f"N2 loses rank along mu = {g}")
    Q, pivots = _raw_intersection(N1, N2, cancel)
    spectra = _spectra(pair1, pair2)
    if Q.cols:
        P, _ = primitive_columns(Q)
    else:
        P = Q
    polys = []
    for v in pivots:
        if isinstance(v, RatFunc):
            polys.extend([v.num, v.den])
    for v in list(Q.entries) + list(N2.entries):
        if isinstance(v, RatFunc):
            polys.append(v.den)
    polys.append(g.den)
    # values of lambda mapped into the spectrum of A2
    for s in spectra[1][0]:
        diff = g - s
        polys.append(diff.num)
    excluded = tuple(f for f in refine_factors(polys) if f.variables() == {LAMBDA})
    coeffs = {}
    if P.cols:
        for (k, _), C in coefficient_matrices(P).items():
            coeffs[k] = C
    stacked = stack_coefficients(coeffs, P.rows)
    return CurveIntersection(g, P, coeffs, stacked, excluded, spectra, pair1, pair2)


# ---------------------------------------------------------------------------
# points


def point_intersection(pair1: LinearPair, pair2: LinearPair, point, col_order=None):
    """Intersection at a point through the square matrix ``Nhat``.

    ``Nhat = [N1(lambda0), first n - p columns of N2(mu0) in col_order]``.  The
    partitioned solve ``Nhat^-1 [N1, N2] = [[I, 0, L12], [0, I, L22]]`` yields
    the basis ``N1(lambda0) L12``.

    Returns:
        ``(basis, L12, Nhat)`` with ``basis`` reduced to independent,
        primitive-normalized columns.

    Raises:
        SingularNhat: if ``Nhat`` is singular or not square for this order.
    """
    lam0, mu0 = (as_scalar(x) for x in point)
    n = pair1.n
    N1, _ = point_representation(pair1, lam0)
    N2, _ = point_representation(pair2, mu0)
    order = list(col_order) if col_order is not None else list(range(N2.cols))
    if sorted(order) != list(range(N2.cols)):
        raise ValueError("col_order must be a permutation of N2's columns")
    N2 = N2.columns(order)
    k = n - N1.cols
    if k < 0 or k > N2.cols:
        raise SingularNhat("Nhat is not square for these kernel sizes")
    Nhat = hstack(N1, N2.columns(range(k))) if k else N1
    e = echelon(Nhat)
    if e.rank < n:
        raise SingularNhat(f"Nhat is singular at ({format_scalar(lam0)}, {format_scalar(mu0)})")
    rest = N2.columns(range(k, N2.cols))
    L = e.transform @ rest
    L12 = L.submatrix(range(N1.cols), range(rest.cols))
    basis = N1 @ L12
    basis = column_basis(basis) if not basis.is_zero() else ExactMatrix.zeros(n, 0)
    if basis.cols:
        basis = primitive_columns(basis)[0]
    return basis, L12, Nhat


def kernel_intersection_at(pair1: LinearPair, pair2: LinearPair, point) -> ExactMatrix:
    """Exact ``im N1(lambda0) ∩ im N2(mu0)`` from point kernels; valid at every point."""
    lam0, mu0 = (as_scalar(x) for x in point)
    K = kernel_at_point(pair1, lam0).Npart
    L = kernel_at_point(pair2, mu0).Npart
    return subspace_intersection(K, L)


def numeric_intersection(K, L, tol: float = 1e-9):
    """Orthonormal basis of ``im K ∩ im L`` from float data (SVD of the stacked projections)."""
    from .matfield import orth

    K, L = np.asarray(K, dtype=complex), np.asarray(L, dtype=complex)
    n = K.shape[0]
    Ko, Lo = orth(K, tol), orth(L, tol)
    if not Ko.shape[1] or not Lo.shape[1]:
        return np.zeros((n, 0), dtype=complex)
    # x in both images iff (I - P_K) x = 0 and (I - P_L) x = 0
    PK = np.eye(n) - Ko @ Ko.conj().T
    PL = np.eye(n) - Lo @ Lo.conj().T
    _, s, vh = np.linalg.svd(np.vstack([PK, PL]))
    scale = max(1.0, s[0]) if s.size else 1.0
    null = vh[np.sum(s > tol * scale):].conj().T
    return null
