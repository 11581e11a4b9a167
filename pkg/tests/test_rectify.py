from fractions import Fraction

import pytest

from fbrect.errors import ConjugateViolation, ExcludedPoint
from fbrect.exact import qi
from fbrect.intersect import intersection_on_curve, intersection_symbolic
from fbrect.kernels import LinearPair
from fbrect.matfield import ExactMatrix
from fbrect.rectify import (
    PairSelection,
    analyze,
    dimension_check,
    necessary_left_kernel,
    selection_basis,
    verify_selection,
)


def test_fourth_order_rectifiable(fourth_order):
    pair1, pair2, _ = fourth_order
    assert dimension_check(pair1, pair2)
    v = analyze(pair1, pair2, intersection_symbolic(pair1, pair2))
    assert v.rectifiable_over_omega and v.stacked_rank == 4 and v.witness_alpha is None


def test_defective_needs_curve(defective):
    pair1, pair2, _ = defective
    ir = intersection_symbolic(pair1, pair2)
    curve = intersection_on_curve(pair1, pair2, "mu=lambda")
    v = analyze(pair1, pair2, ir, [curve])
    assert not v.rectifiable_over_omega
    assert v.stacked_rank == 2
    assert v.witness_alpha == [0, 0, 1, 0]
    # the witness annihilates every coefficient matrix
    alpha = ExactMatrix.column(v.witness_alpha)
    assert all((alpha.T @ C).is_zero() for C in ir.coeffs.values())
    assert v.curve_verdicts[0].rectifiable and v.curve_verdicts[0].stacked_rank == 4


def test_necessary_left_kernel():
    assert necessary_left_kernel(LinearPair.from_rows([[-1, 0], [0, 1]], [[1], [0]])) == [0, 1]
    assert necessary_left_kernel(LinearPair.from_rows([[0, 1], [0, 0]], [[0], [1]])) is None


def test_necessary_left_kernel_uncontrollable(uncontrollable):
    assert necessary_left_kernel(uncontrollable[0]) == [1, 0, 0]


def test_selection_on_colinear(colinear):
    pair1, pair2, _ = colinear
    ir = intersection_symbolic(pair1, pair2)
    E, ok = verify_selection(ir, PairSelection([(1, -1), (-1, 1)]))
    assert ok and [e.cols for e in E] == [1, 1]
    E, ok = verify_selection(ir, PairSelection([(1, 1), (-1, -1)]))
    assert not ok


def test_selection_rejects_excluded_point(fourth_order):
    ir = intersection_symbolic(*fourth_order[:2])
    with pytest.raises(ExcludedPoint):
        selection_basis(ir, (-1, -2))  # on the pole factor 2*lambda - mu


def test_curve_selection_requires_point_on_curve(defective):
    curve = intersection_on_curve(*defective[:2], "mu=lambda")
    with pytest.raises(ExcludedPoint):
        selection_basis(curve, (-1, -2))
    assert selection_basis(curve, (-1, -1)).cols == 3


def test_conjugate_closure():
    z = qi(-1, 2)
    good = PairSelection([(z, z), (z.conjugate(), z.conjugate()), (-1, -1)])
    assert good.conjugate_partners() == {0: 1, 1: 0}
    assert good.stable
    bad = PairSelection([(z, -1), (-1, -1)])
    assert not bad.conjugate_closed
    with pytest.raises(ConjugateViolation):
        bad.conjugate_partners()


def test_pair_selection_coefficients_length():
    with pytest.raises(ValueError):
        PairSelection([(-1, -1)], [[1], [1]])
    assert PairSelection([(Fraction(-1, 2), -1)]).stable
