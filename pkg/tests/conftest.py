import random
from fractions import Fraction

import pytest
import sympy as sp

from fbrect import builtin_system
from fbrect.exact import BiPoly, GaussRational, RatFunc
from fbrect.kernels import LinearPair

LAM, MU = sp.symbols("lambda mu")

FOURTH_ORDER_PAIRS = [(-3, -1), (-1, -3), (-2, -2), (-4, -4)]


def to_sympy_scalar(x):
    if isinstance(x, GaussRational):
        return sp.Rational(x.real.numerator, x.real.denominator) + sp.I * sp.Rational(
            x.imag.numerator, x.imag.denominator)
    x = Fraction(x)
    return sp.Rational(x.numerator, x.denominator)


def to_sympy(p):
    """BiPoly or RatFunc -> sympy expression in (LAM, MU)."""
    if isinstance(p, RatFunc):
        return to_sympy(p.num) / to_sympy(p.den)
    if isinstance(p, BiPoly):
        return sum((to_sympy_scalar(c) * LAM**k * MU**l for (k, l), c in p.terms.items()), sp.Integer(0))
    return to_sympy_scalar(p)


def random_pair(rng: random.Random, n: int, p: int, mode_id: int = 1, span: int = 3) -> LinearPair:
    A = [[rng.randint(-span, span) for _ in range(n)] for _ in range(n)]
    B = [[rng.randint(-span, span) for _ in range(p)] for _ in range(n)]
    return LinearPair.from_rows(A, B, mode_id)


@pytest.fixture(scope="session")
def fourth_order():
    return builtin_system("fourth_order")


@pytest.fixture(scope="session")
def colinear():
    return builtin_system("colinear_2d")


@pytest.fixture(scope="session")
def defective():
    return builtin_system("defective_curve")


@pytest.fixture(scope="session")
def uncontrollable():
    return builtin_system("uncontrollable_3d")


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

ACCEPTANCE: dict = {}


def record(criterion: int, check: str, ok: bool, detail: str = ""):
    """Register a sub-check of an acceptance criterion; returns ``ok``."""
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(ok), detail))
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {check}" + (f" ({detail})" if detail else ""))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[criterion]
        failed = [f"{name}: {detail}" if detail else name for name, ok, detail in checks if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"{status}  criterion {criterion}  ({len(checks) - len(failed)}/{len(checks)} checks)"
        if failed:
            line += "  failing: " + "; ".join(failed)
        terminalreporter.write_line(line)
