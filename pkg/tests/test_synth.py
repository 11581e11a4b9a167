from fractions import Fraction

import pytest

from conftest import FOURTH_ORDER_PAIRS
from fbrect.errors import (
    NotInImage,
    NotRectifiable,
    SearchExhausted,
    UncontrollableModeExcluded,
    UnstableSpectrum,
)
from fbrect.exact import parse_scalar, qi
from fbrect.kernels import LinearPair
from fbrect.matfield import ExactMatrix, rank
from fbrect.synth import SynthesisConfig, parameter_vector, synthesize
from fbrect.verify import assignment_residuals

F1_REF = [["-29/2", "14", "-41/2", "39/2"],
          ["-337/4", "105", "-609/4", "579/4"],
          ["-63/2", "39", "-113/2", "109/2"]]
F2_REF = [["15/4", "-8", "27/4", "-29/4"],
          ["21/2", "-17", "43/2", "-47/2"],
          ["0", "0", "0", "0"]]


def _mat(rows):
    return ExactMatrix.from_rows([[parse_scalar(x) for x in r] for r in rows])


def _exact_ok(res):
    return assignment_residuals(res.closed_loop, res.assignment.V, res.lambdas, res.mus).exact


def test_reference_feedbacks(fourth_order):
    cfg = SynthesisConfig(pairs=FOURTH_ORDER_PAIRS, coefficients=[[1]] * 4, scale="pinned", basis="Q")
    res = synthesize(*fourth_order[:2], cfg)
    assert res.F1 == _mat(F1_REF)
    assert res.F2 == _mat(F2_REF)
    w = res.assignment
    assert w.w1[0] == [Fraction(-4, 81), Fraction(-29, 405), Fraction(-1, 27)]
    assert w.w1[1] == [-36, -171, -27]
    assert w.w1[2] == [-1, -1, -1]
    assert w.w1[3] == [Fraction(-1, 2), Fraction(-5, 2), -1]
    assert w.w2 == [[Fraction(-2, 5), 1, 0], [4, 1, 0], [-1, 1, 0], [1, 1, 0]]
    assert _exact_ok(res)


def test_default_grid(fourth_order):
    res = synthesize(*fourth_order[:2])
    assert len(res.lambdas) == 4 and all(x < 0 for x in res.lambdas + res.mus)
    assert rank(res.assignment.V) == 4
    assert _exact_ok(res)


def test_defective_without_and_with_curve(defective):
    with pytest.raises(NotRectifiable) as info:
        synthesize(*defective[:2])
    assert info.value.witness == [0, 0, 1, 0]
    res = synthesize(*defective[:2], SynthesisConfig(curve="mu=lambda"))
    assert res.lambdas == res.mus
    assert _exact_ok(res)


def test_colinear_negative_and_positive(colinear):
    with pytest.raises(NotRectifiable):
        synthesize(*colinear[:2])
    with pytest.raises(SearchExhausted):
        synthesize(*colinear[:2], SynthesisConfig(curve="mu=-1/lambda"))
    res = synthesize(*colinear[:2], SynthesisConfig(pairs=[(1, -1), (-1, 1)]))
    assert res.F1.is_zero() and res.F2.is_zero()
    assert _exact_ok(res)


def test_uncontrollable_mode_is_kept(uncontrollable):
    res = synthesize(*uncontrollable[:2])
    assert (Fraction(-1), Fraction(-1)) in res.assignment.pairs.pairs
    assert _exact_ok(res)
    with pytest.raises(UncontrollableModeExcluded):
        synthesize(*uncontrollable[:2], SynthesisConfig(pairs=[(-2, -2), (-3, -3), (-4, -4)]))


def test_complex_pairs_give_real_feedback():
    pair1 = LinearPair.from_rows([[0, 1], [0, 0]], [[1, 0], [0, 1]], 1)
    pair2 = LinearPair.from_rows([[1, 0], [0, -1]], [[1, 0], [0, 1]], 2)
    z = qi(-1, 1)
    res = synthesize(pair1, pair2, SynthesisConfig(pairs=[(z, z), (z.conjugate(), z.conjugate())]))
    assert res.F1.is_real() and res.F2.is_real()
    assert _exact_ok(res)


def test_parameter_vector_not_in_image():
    pair = LinearPair.from_rows([[0, 0], [0, 0]], [[1], [0]])
    with pytest.raises(NotInImage):
        parameter_vector(pair, -1, [0, 1])


def test_unstable_uncontrollable_mode_blocks_default_search():
    # eigenvalue 1 of the first state is unreachable in both modes
    pair1 = LinearPair.from_rows([[1, 0], [0, 0]], [[0], [1]], 1)
    pair2 = LinearPair.from_rows([[1, 0], [0, 2]], [[0], [1]], 2)
    with pytest.raises(UnstableSpectrum):
        synthesize(pair1, pair2)
    res = synthesize(pair1, pair2, SynthesisConfig(pairs=[(1, 1), (-1, -2)]))
    assert _exact_ok(res)
