"""Feedback synthesis: eigenvalue pairs, common eigenvectors, Moore feedback.

Given eigenvector ``v_i`` in ``im N1(lambda_i) ∩ im N2(mu_i)`` the parameter
vectors solve ``v_i = N_q(x_i) w_qi`` and the feedback is

    F_q = -[M_q(x_1) w_q1 ... M_q(x_n) w_qn] V^-1,

so that ``(A_q + B_q F_q) v_i = x_i v_i`` for both modes.  Conjugate pairs of
columns are replaced by real and imaginary parts before inversion, which makes
``F_q`` real.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    Cancelled,
    ExcludedPoint,
    InputError,
    NonRealResult,
    NotInImage,
    NotRectifiable,
    SearchExhausted,
    SingularMatrix,
    SingularV,
    UncontrollableModeExcluded,
    UnstableSpectrum,
    ZeroVector,
)
from .exact import GaussRational, as_scalar, format_scalar
from .intersect import (
    CurveIntersection,
    IntersectionResult,
    intersection_on_curve,
    intersection_symbolic,
)
from .kernels import LinearPair, controllability, point_representation
from .matfield import (
    ExactMatrix,
    hstack,
    inverse,
    left_nullspace,
    primitive_vector,
    rank,
    solve,
)
from .rectify import (
    PairSelection,
    RectifiabilityVerdict,
    analyze,
    selection_basis,
    verify_selection,
)

ZERO = Fraction(0)


@dataclass(frozen=True)
class SynthesisConfig:
    """Options for :func:`synthesize`.

    Attributes:
        pairs: Explicit eigenvalue pairs; ``None`` searches the grid.
        coefficients: Optional per-pair coefficient vectors ``c_i``.
        rho: Real-part bound for grid search (candidates satisfy ``x <= rho``).
        curve: Optional constraint ``mu = g(lambda)`` (string or ``RatFunc``).
        depth: Grid depth; defaults to ``4 n``.
        scale: ``"primitive"`` normalizes each eigenvector, ``"pinned"`` keeps
            ``basis(point) @ c`` as is.
        basis: ``"P"`` (denominator-free) or ``"Q"`` (elimination output).
    """

    pairs: list | None = None
    coefficients: list | None = None
    rho: object = -1
    curve: object = None
    depth: int | None = None
    scale: str = "primitive"
    basis: str = "P"


@dataclass(frozen=True)
class Assignment:
    """Common eigenvectors and the parameter vectors realizing them in each mode."""

    pairs: PairSelection
    V: ExactMatrix
    c: list
    w1: list
    w2: list


@dataclass(frozen=True)
class SynthesisResult:
    assignment: Assignment
    F1: ExactMatrix
    F2: ExactMatrix
    closed_loop: tuple
    pair1: LinearPair
    pair2: LinearPair
    verdict: RectifiabilityVerdict | None = None
    source: object = None

    @property
    def lambdas(self):
        return [a for a, _ in self.assignment.pairs.pairs]

    @property
    def mus(self):
        return [b for _, b in self.assignment.pairs.pairs]


# ---------------------------------------------------------------------------
# building blocks


def _grid(rho, depth):
    rho = as_scalar(rho)
    return [Fraction(-k) for k in range(1, depth + 1) if Fraction(-k) <= rho]


def _candidate_points(source, rho, depth):
    grid = _grid(rho, depth)
    if isinstance(source, CurveIntersection):
        rho = as_scalar(rho)
        out = []
        for a in grid:
            if not source.g.den.evaluate(a, 0):
                continue
            b = source.mu_of(a)
            if as_scalar(b).real <= rho:
                out.append((a, b))
        return out
    pts = [(a, b) for a in grid for b in grid]
    pts.sort(key=lambda t: (max(-t[0], -t[1]), -t[0] - t[1], -t[0]))
    return pts


def _coefficient_candidates(r):
    ones = [Fraction(1)] * r
    yield ones
    for j in range(r):
        if r > 1:
            yield [Fraction(1) if k == j else ZERO for k in range(r)]


def _pick_vector(E: ExactMatrix, current: list, n: int):
    """First coefficient vector (all-ones, then unit vectors) that enlarges the span."""
    base = rank(ExactMatrix.from_columns(current, n)) if current else 0
    for c in _coefficient_candidates(E.cols):
        v = (E @ ExactMatrix.column(c)).col(0)
        if not any(v):
            continue
        if rank(ExactMatrix.from_columns(current + [v], n)) > base:
            return c, v
    return None


def propose_pairs(source, rho=-1, count=None, depth=None, seeds=(), cancel=None) -> PairSelection:
    """Greedy deterministic search on the integer grid ``{-1, -2, ...}``.

    ``seeds`` are pairs that must be included (uncontrollable eigenvalues); they
    are tried first.  A candidate is kept only if one of the default coefficient
    vectors yields an eigenvector outside the span collected so far.

    Raises:
        SearchExhausted: if ``count`` pairs cannot be found within ``depth``.
    """
    n = source.P.rows if isinstance(source, IntersectionResult) else source.P_curve.rows
    count = n if count is None else count
    depth = 4 * n if depth is None else depth
    chosen, coeffs, vectors = [], [], []
    seeds = [tuple(as_scalar(x) for x in s) for s in seeds]
    for pt in seeds + _candidate_points(source, rho, depth):
        if len(chosen) == count:
            break
        if cancel is not None and cancel.is_set():
            raise Cancelled("pair search cancelled")
        if pt in chosen:
            continue
        is_seed = pt in seeds
        if not is_seed and source.hits_spectrum(pt):
            continue
        try:
            E = selection_basis(source, pt)
        except ExcludedPoint:
            if is_seed:
                raise
            continue
        if not E.cols:
            if is_seed:
                raise SearchExhausted(f"no eigenvector direction at required pair {pt}")
            continue
        pick = _pick_vector(E, vectors, n)
        if pick is None:
            if is_seed:
                raise SearchExhausted(f"required pair {pt} adds no new direction")
            continue
        c, v = pick
        chosen.append(pt)
        coeffs.append(c)
        vectors.append(v)
    if len(chosen) < count:
        raise SearchExhausted(
            f"found {len(chosen)} of {count} independent eigenvectors on the grid of depth {depth}")
    return PairSelection(chosen, coeffs)


def eigenvector_from_intersection(source, pair, c, scale: str = "primitive", basis: str = "P"):
    """``v = basis(pair) @ c``, primitive-normalized unless ``scale="pinned"``.

    Raises:
        ZeroVector: if the combination vanishes.
    """
    E = selection_basis(source, pair, basis)
    c = [as_scalar(x) for x in c]
    if len(c) != E.cols:
        raise ValueError(f"coefficient vector has length {len(c)}, basis has {E.cols} columns")
    v = (E @ ExactMatrix.column(c)).col(0)
    if not any(v):
        raise ZeroVector(f"basis times c vanishes at ({format_scalar(pair[0])}, {format_scalar(pair[1])})")
    if scale == "primitive":
        return primitive_vector(v)
    if scale != "pinned":
        raise ValueError(f"unknown scale {scale!r}")
    return v


def parameter_vector(pair: LinearPair, x0, v):
    """Solve ``N(x0) w = v`` with free variables set to zero.

    ``N`` is the adjugate kernel off the spectrum and the point kernel on it,
    matching what :func:`build_feedback` uses for ``M``.

    Raises:
        NotInImage: if ``v`` is not in ``im N(x0)``.
    """
    N, _ = point_representation(pair, x0)
    w = solve(N, ExactMatrix.column(v))
    if w is None:
        raise NotInImage(f"vector is not in the image of N at {format_scalar(as_scalar(x0))} (mode {pair.mode_id})")
    return w.col(0)


def _is_real_scalar(x):
    return not isinstance(x, GaussRational)


def _conjugate_columns(eigs, cols):
    """Index pairs ``(i, j)`` with ``eigs[j] = conj(eigs[i])`` and ``cols[j] = conj(cols[i])``."""
    pairs, used = [], set()
    for i, (x, v) in enumerate(zip(eigs, cols)):
        if i in used or (_is_real_scalar(x) and all(_is_real_scalar(t) for t in v)):
            continue
        for j in range(i + 1, len(eigs)):
            if j in used:
                continue
            if eigs[j] == x.conjugate() and cols[j] == [t.conjugate() for t in v]:
                pairs.append((i, j))
                used.update((i, j))
                break
    return pairs


def build_feedback(pair: LinearPair, eigs, V: ExactMatrix, ws) -> ExactMatrix:
    """``F = -[M(x_i) w_i] V^-1`` with conjugate columns realified.

    Raises:
        SingularV: if the eigenvector matrix is singular.
        NonRealResult: if the result has a nonzero imaginary part.
    """
    n = pair.n
    eigs = [as_scalar(x) for x in eigs]
    vcols = [V.col(i) for i in range(n)]
    mw = []
    for x, w in zip(eigs, ws):
        _, M = point_representation(pair, x)
        mw.append((M @ ExactMatrix.column(w)).col(0))
    for i, j in _conjugate_columns(eigs, vcols):
        v, u = vcols[i], mw[i]
        vcols[i] = [Fraction(as_scalar(t).real) for t in v]
        vcols[j] = [Fraction(as_scalar(t).imag) for t in v]
        mw[i] = [Fraction(as_scalar(t).real) for t in u]
        mw[j] = [Fraction(as_scalar(t).imag) for t in u]
    Vr = ExactMatrix.from_columns(vcols, n)
    MW = ExactMatrix.from_columns(mw, pair.p)
    try:
        Vinv = inverse(Vr)
    except SingularMatrix:
        raise SingularV("eigenvector matrix is singular") from None
    F = -(MW @ Vinv)
    if not F.is_real():
        raise NonRealResult("feedback has a nonzero imaginary part; the selection is not conjugate-closed")
    return F


# ---------------------------------------------------------------------------
# pipeline


def _uncontrollable(pair):
    report = controllability(pair)
    exact = [m.eigenvalue for m in report.uncontrollable_modes if m.exact]
    inexact = [m.eigenvalue for m in report.uncontrollable_modes if not m.exact]
    if inexact:
        raise UncontrollableModeExcluded(
            f"mode {pair.mode_id} has uncontrollable eigenvalues {inexact} that are not exact "
            "Gaussian rationals and cannot be assigned exactly")
    return exact


def _seed_pairs(u1, u2, rho, depth):
    """Pairs covering every uncontrollable eigenvalue of both modes."""
    grid = _grid(rho, depth) or [Fraction(-1)]
    seeds = []
    for k in range(max(len(u1), len(u2))):
        a = u1[k] if k < len(u1) else next(g for g in grid if g not in u1)
        b = u2[k] if k < len(u2) else next(g for g in grid if g not in u2)
        seeds.append((a, b))
    return seeds


def _default_coefficients(E: ExactMatrix, current, n):
    pick = _pick_vector(E, current, n)
    if pick is None:
        return [Fraction(1)] * E.cols
    return pick[0]


def synthesize(pair1: LinearPair, pair2: LinearPair, config: SynthesisConfig | None = None,
               cancel=None) -> SynthesisResult:
    """End-to-end feedback construction.

    Steps: kernels, generic (and optional curve) intersection, verdicts, pair
    selection, eigenvectors, parameter vectors, feedbacks.

    Raises:
        NotRectifiable: the coefficient-stack test fails and no explicit pairs,
            curve or uncontrollable modes give another route; carries a witness.
        SearchExhausted: the grid search found too few independent directions.
        UncontrollableModeExcluded: explicit pairs omit an uncontrollable eigenvalue.
        UnstableSpectrum: the default search was asked for stable pairs but an
            uncontrollable eigenvalue has nonnegative real part.
    """
    config = config or SynthesisConfig()
    if pair1.n != pair2.n or pair1.p != pair2.p:
        raise InputError("both modes must share n and p")
    n = pair1.n
    depth = config.depth or 4 * n
    ir = intersection_symbolic(pair1, pair2, cancel)
    curve = intersection_on_curve(pair1, pair2, config.curve, cancel) if config.curve is not None else None
    verdict = analyze(pair1, pair2, ir, [curve] if curve is not None else [])
    source = curve if curve is not None else ir
    u1, u2 = _uncontrollable(pair1), _uncontrollable(pair2)

    if config.pairs is not None:
        sel = PairSelection(config.pairs, config.coefficients)
        if len(sel) != n:
            raise InputError(f"expected {n} eigenvalue pairs, got {len(sel)}")
        lams = [a for a, _ in sel.pairs]
        mus = [b for _, b in sel.pairs]
        missing = [f"lambda = {format_scalar(x)}" for x in u1 if x not in lams]
        missing += [f"mu = {format_scalar(x)}" for x in u2 if x not in mus]
        if missing:
            raise UncontrollableModeExcluded(
                "uncontrollable eigenvalues must be assigned: " + ", ".join(missing))
    else:
        unstable = [x for x in u1 + u2 if as_scalar(x).real >= 0]
        if unstable:
            raise UnstableSpectrum(
                "uncontrollable eigenvalues " + ", ".join(format_scalar(x) for x in unstable)
                + " are not in the open left half-plane, so no stable pairs exist; "
                "give explicit pairs to rectify without stabilizing")
        if curve is not None:
            if not verdict.curve_verdicts[0].rectifiable:
                K = left_nullspace(curve.stacked) if curve.stacked.cols else ExactMatrix.identity(n)
                raise NotRectifiable(f"not rectifiable along mu = {curve.g}",
                                     witness=primitive_vector(K.col(0)))
        elif not verdict.rectifiable_over_omega and not (u1 or u2):
            raise NotRectifiable(
                f"coefficient stack has rank {verdict.stacked_rank} < {n}; not rectifiable over the generic set",
                witness=verdict.witness_alpha)
        sel = propose_pairs(source, config.rho, n, depth, _seed_pairs(u1, u2, config.rho, depth), cancel)

    partners = sel.conjugate_partners()
    E_list, ok = verify_selection(source, sel)
    if not ok:
        nonempty = [E for E in E_list if E.cols]
        K = left_nullspace(hstack(*nonempty)) if nonempty else ExactMatrix.identity(n)
        raise NotRectifiable("the intersections at the selected pairs do not span the state space",
                             witness=primitive_vector(K.col(0)))

    vectors, cs = [None] * n, [None] * n
    for i, pt in enumerate(sel.pairs):
        j = partners.get(i)
        if j is not None and j < i:
            vectors[i] = [x.conjugate() for x in vectors[j]]
            cs[i] = None if cs[j] is None else [x.conjugate() for x in cs[j]]
            continue
        c = sel.coefficients[i] if sel.coefficients is not None else None
        if c is None:
            E = selection_basis(source, pt, config.basis)
            c = _default_coefficients(E, [v for v in vectors if v is not None], n)
        cs[i] = c
        vectors[i] = eigenvector_from_intersection(source, pt, c, config.scale, config.basis)
    V = ExactMatrix.from_columns(vectors, n)
    if rank(V) < n:
        raise SingularV("chosen eigenvectors are linearly dependent")
    w1 = [parameter_vector(pair1, a, v) for (a, _), v in zip(sel.pairs, vectors)]
    w2 = [parameter_vector(pair2, b, v) for (_, b), v in zip(sel.pairs, vectors)]
    F1 = build_feedback(pair1, [a for a, _ in sel.pairs], V, w1)
    F2 = build_feedback(pair2, [b for _, b in sel.pairs], V, w2)
    closed = (pair1.closed_loop(F1), pair2.closed_loop(F2))
    sel = PairSelection(sel.pairs, cs)
    return SynthesisResult(Assignment(sel, V, cs, w1, w2), F1, F2, closed, pair1, pair2, verdict, source)
