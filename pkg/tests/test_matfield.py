import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import LAM, to_sympy
from fbrect.errors import SingularMatrix
from fbrect.exact import LAM as L
from fbrect.exact import RatFunc, parse_ratfunc
from fbrect.matfield import (
    ExactMatrix,
    column_basis,
    det,
    det_adj,
    echelon,
    faddeev_leverrier,
    float_rank,
    hstack,
    inverse,
    left_nullspace,
    nullspace,
    primitive_column,
    rank,
    same_column_space,
    solve,
)

int_matrices = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-5, 5), min_size=n, max_size=n), min_size=n, max_size=n))


def sym_matrix(M: ExactMatrix):
    return sp.Matrix(M.rows, M.cols, lambda i, j: to_sympy(M[i, j]))


def test_nullspace_over_function_field():
    M = ExactMatrix.from_rows([[L, 0, -1]])
    K = nullspace(M)
    assert K.cols == 2
    assert (M @ K).is_zero()
    assert K.col(0) == [0, 1, 0]
    assert K.col(1) == [1 / L, 0, 1]


def test_rref_pivots_and_rank():
    M = ExactMatrix.from_rows([[1, 2, 3], [2, 4, 6], [0, 1, 1]])
    res = echelon(M)
    assert res.rank == 2
    assert tuple(res.pivot_cols) == (0, 1)
    assert res.transform @ M == res.rref


@given(int_matrices)
@settings(max_examples=200, deadline=None)
def test_rank_and_det_match_sympy(rows):
    M = ExactMatrix.from_rows(rows)
    S = sp.Matrix(rows)
    assert rank(M) == S.rank()
    assert det(M) == S.det()


@given(int_matrices)
@settings(max_examples=100, deadline=None)
def test_inverse_or_singular(rows):
    M = ExactMatrix.from_rows(rows)
    if det(M) == 0:
        with pytest.raises(SingularMatrix):
            inverse(M)
    else:
        assert M @ inverse(M) == ExactMatrix.identity(M.rows)


@pytest.mark.parametrize("n", [3, 6, 7])
def test_adjugate_identity_symbolic(n):
    rng = random.Random(n)
    A = ExactMatrix.from_rows([[rng.randint(-3, 3) for _ in range(n)] for _ in range(n)])
    P = ExactMatrix.identity(n).scale(L) - A
    d, adj = det_adj(P)
    assert P @ adj == ExactMatrix.identity(n).scale(d)
    c, _ = faddeev_leverrier(A)
    x = sp.symbols("lambda")
    charpoly = sp.Matrix(A.tolist()).charpoly(x).all_coeffs()
    assert [sp.Rational(str(ci)) for ci in reversed(c)] == charpoly
    assert sp.expand(to_sympy(d) - sum(sp.Rational(str(ci)) * LAM**k for k, ci in enumerate(c))) == 0


def test_inverse_symbolic():
    M = ExactMatrix.from_rows([[L, 1], [0, L]])
    Minv = inverse(M)
    assert Minv == ExactMatrix.from_rows([[1 / L, -1 / (L * L)], [0, 1 / L]])


def test_solve_and_inconsistency():
    M = ExactMatrix.from_rows([[1, 1], [1, 1]])
    assert solve(M, ExactMatrix.column([1, 2])) is None
    x = solve(M, ExactMatrix.column([2, 2]))
    assert M @ x == ExactMatrix.column([2, 2])


def test_left_nullspace():
    M = ExactMatrix.from_rows([[1, 0], [0, 1], [1, 1]])
    K = left_nullspace(M)
    assert K.cols == 1 and (K.T @ M).is_zero()


def test_column_space_helpers():
    A = ExactMatrix.from_rows([[1, 2], [2, 4], [0, 0]])
    assert column_basis(A).cols == 1
    assert same_column_space(A, ExactMatrix.column([3, 6, 0]))
    assert not same_column_space(A, ExactMatrix.column([1, 0, 0]))


def test_primitive_column_clears_denominators():
    col = [parse_ratfunc("mu^2"), parse_ratfunc("(-mu^3-5/2*mu^2)/(lambda-1/2*mu)")]
    entries, scale = primitive_column(col)
    assert [str(e) for e in entries] == ["2*lambda*mu^2 - mu^3", "-2*mu^3 - 5*mu^2"]
    assert all(isinstance(e, RatFunc) or isinstance(e, Fraction) for e in entries)
    ints, _ = primitive_column([Fraction(2, 3), Fraction(-4, 9)])
    assert ints == [6, -4] or ints == [3, -2]


def test_to_numpy_and_float_rank():
    M = ExactMatrix.from_rows([[L, 1], [1, L]])
    arr = M.to_numpy((2, 0))
    assert np.allclose(arr, [[2, 1], [1, 2]])
    assert float_rank(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]])) == 1


def test_hstack_shapes():
    A = ExactMatrix.identity(2)
    assert hstack(A, A).shape == (2, 4)
