"""Dense exact matrices over Q(i) and Q(i)(lambda, mu), plus float helpers.

Entries are stored as ``Fraction``, ``GaussRational`` or non-constant
``RatFunc``; constant rational functions are demoted to numbers on entry so
that numeric matrices never touch polynomial code.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np

from .errors import Cancelled, SingularMatrix
from .exact import (
    BiPoly,
    GaussRational,
    RatFunc,
    as_scalar,
    format_scalar,
    parse_ratfunc,
    poly_divexact,
    poly_gcd,
    rf_eval,
    to_complex,
)

ZERO = Fraction(0)
ONE = Fraction(1)


def norm_entry(x):
    """Canonical storage form of a matrix entry."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, RatFunc):
        return x.constant_value() if x.is_constant() else x
    if isinstance(x, GaussRational):
        return x if x.imag else x.real
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, BiPoly):
        return norm_entry(RatFunc(x))
    if isinstance(x, str):
        return norm_entry(parse_ratfunc(x))
    raise TypeError(f"unsupported matrix entry {x!r}")


def is_symbolic(x) -> bool:
    return isinstance(x, RatFunc)


def format_entry(x) -> str:
    return str(x) if isinstance(x, RatFunc) else format_scalar(x)


class ExactMatrix:
    """Immutable row-major matrix of exact entries."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries):
        entries = tuple(norm_entry(x) for x in entries)
        if len(entries) != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {len(entries)}")
        self.rows, self.cols, self.entries = rows, cols, entries

    @classmethod
    def _raw(cls, rows, cols, entries):
        obj = cls.__new__(cls)
        obj.rows, obj.cols, obj.entries = rows, cols, tuple(entries)
        return obj

    @classmethod
    def from_rows(cls, rows, cols=None):
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), cols, [x for r in rows for x in r])

    @classmethod
    def from_columns(cls, columns, rows=None):
        columns = [list(c) for c in columns]
        if rows is None:
            rows = len(columns[0]) if columns else 0
        return cls.from_rows([[c[i] for c in columns] for i in range(rows)], len(columns))

    @classmethod
    def zeros(cls, rows, cols):
        return cls._raw(rows, cols, (ZERO,) * (rows * cols))

    @classmethod
    def identity(cls, n):
        return cls._raw(n, n, [ONE if i == j else ZERO for i in range(n) for j in range(n)])

    @classmethod
    def diag(cls, values):
        values = [norm_entry(v) for v in values]
        n = len(values)
        return cls._raw(n, n, [values[i] if i == j else ZERO for i in range(n) for j in range(n)])

    @classmethod
    def column(cls, values):
        values = list(values)
        return cls(len(values), 1, values)

    # -- access ------------------------------------------------------------

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i):
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def col(self, j):
        return [self.entries[i * self.cols + j] for i in range(self.rows)]

    def tolist(self):
        return [self.row(i) for i in range(self.rows)]

    def columns(self, indices):
        indices = list(indices)
        return ExactMatrix._raw(self.rows, len(indices),
                                [self.entries[i * self.cols + j] for i in range(self.rows) for j in indices])

    def submatrix(self, rows, cols):
        rows, cols = list(rows), list(cols)
        return ExactMatrix._raw(len(rows), len(cols),
                                [self.entries[i * self.cols + j] for i in rows for j in cols])

    def is_zero(self):
        return not any(self.entries)

    def is_constant(self):
        return not any(isinstance(x, RatFunc) for x in self.entries)

    def is_real(self):
        return all(not isinstance(x, GaussRational) for x in self.entries)

    def variables(self):
        out = set()
        for x in self.entries:
            if isinstance(x, RatFunc):
                out |= x.variables()
        return out

    # -- arithmetic --------------------------------------------------------

    def __matmul__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        n, m, k = self.rows, other.cols, self.cols
        a, b = self.entries, other.entries
        out = []
        for i in range(n):
            arow = a[i * k:(i + 1) * k]
            for j in range(m):
                acc = ZERO
                for t in range(k):
                    x = arow[t]
                    if x:
                        y = b[t * m + j]
                        if y:
                            acc = acc + x * y
                out.append(norm_entry(acc))
        return ExactMatrix._raw(n, m, out)

    def _zip(self, other, op):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return ExactMatrix._raw(self.rows, self.cols,
                                [norm_entry(op(x, y)) for x, y in zip(self.entries, other.entries)])

    def __add__(self, other):
        return self._zip(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._zip(other, lambda x, y: x - y)

    def __neg__(self):
        return ExactMatrix._raw(self.rows, self.cols, [-x for x in self.entries])

    def scale(self, s):
        s = norm_entry(s)
        return ExactMatrix._raw(self.rows, self.cols, [norm_entry(x * s) if x else ZERO for x in self.entries])

    @property
    def T(self):
        return ExactMatrix._raw(self.cols, self.rows,
                                [self.entries[i * self.cols + j] for j in range(self.cols) for i in range(self.rows)])

    def conj(self):
        return ExactMatrix._raw(self.rows, self.cols, [x.conjugate() for x in self.entries])

    @property
    def H(self):
        return self.conj().T

    def real_part(self):
        return ExactMatrix._raw(self.rows, self.cols, [Fraction(as_scalar(x).real) for x in self.entries])

    def imag_part(self):
        return ExactMatrix._raw(self.rows, self.cols, [Fraction(as_scalar(x).imag) for x in self.entries])

    def evaluate(self, point):
        """Substitute ``(lambda0, mu0)``; raises ``PoleError`` at poles."""
        return ExactMatrix._raw(self.rows, self.cols,
                                [norm_entry(rf_eval(x, point)) if isinstance(x, RatFunc) else x
                                 for x in self.entries])

    def substitute_mu(self, g: RatFunc):
        return ExactMatrix._raw(self.rows, self.cols,
                                [norm_entry(x.substitute_mu(g)) if isinstance(x, RatFunc) else x
                                 for x in self.entries])

    def to_numpy(self, point=None):
        """Complex float array (``point`` required for symbolic entries)."""
        arr = np.empty((self.rows, self.cols), dtype=complex)
        for idx, x in enumerate(self.entries):
            arr[idx // self.cols, idx % self.cols] = to_complex(x, point)
        return arr

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def to_strings(self):
        return [[format_entry(x) for x in self.row(i)] for i in range(self.rows)]

    def __repr__(self):
        return f"ExactMatrix({self.rows}x{self.cols}, {self.to_strings()})"

    __str__ = __repr__


def hstack(*mats):
    mats = [m for m in mats if m is not None]
    rows = mats[0].rows
    if any(m.rows != rows for m in mats):
        raise ValueError("hstack row mismatch")
    out = []
    for i in range(rows):
        for m in mats:
            out.extend(m.row(i))
    return ExactMatrix._raw(rows, sum(m.cols for m in mats), out)


def vstack(*mats):
    cols = mats[0].cols
    if any(m.cols != cols for m in mats):
        raise ValueError("vstack column mismatch")
    return ExactMatrix._raw(sum(m.rows for m in mats), cols, [x for m in mats for x in m.entries])


# ---------------------------------------------------------------------------
# elimination


@dataclass(frozen=True)
class EchelonResult:
    """Reduced row echelon form with bookkeeping.

    Attributes:
        rref: The reduced row echelon form.
        transform: Invertible matrix with ``transform @ input == rref``
            (``None`` when not requested).
        pivot_cols: Pivot column indices, increasing.
        rank: Number of pivots.
        pivot_values: The entry each pivot row was divided by, in pivot order.
            Their zeros mark where this elimination stops being valid.
    """

    rref: ExactMatrix
    transform: ExactMatrix | None
    pivot_cols: tuple
    rank: int
    pivot_values: tuple


def echelon(M: ExactMatrix, transform: bool = True, cancel=None) -> EchelonResult:
    """Gauss-Jordan elimination with the first-nonzero pivot rule.

    Columns are never permuted.  ``cancel`` may be a ``threading.Event``; it is
    polled before each column and raises :class:`Cancelled` once set.
    """
    n, m = M.rows, M.cols
    width = m + (n if transform else 0)
    rows = []
    for i in range(n):
        r = M.row(i)
        if transform:
            r.extend(ONE if k == i else ZERO for k in range(n))
        rows.append(r)
    pivots, pivot_values = [], []
    r = 0
    for c in range(m):
        if cancel is not None and cancel.is_set():
            raise Cancelled("elimination cancelled")
        if r == n:
            break
        piv = next((i for i in range(r, n) if rows[i][c]), None)
        if piv is None:
            continue
        if piv != r:
            rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][c]
        pivot_values.append(pv)
        if pv != 1:
            inv = 1 / pv
            rows[r] = [norm_entry(x * inv) if x else ZERO for x in rows[r]]
        prow = rows[r]
        nz = [k for k in range(c, width) if prow[k]]
        for i in range(n):
            if i == r:
                continue
            f = rows[i][c]
            if not f:
                continue
            row = rows[i]
            for k in nz:
                row[k] = norm_entry(row[k] - f * prow[k])
        pivots.append(c)
        r += 1
    rref = ExactMatrix._raw(n, m, [x for row in rows for x in row[:m]])
    tr = ExactMatrix._raw(n, n, [x for row in rows for x in row[m:]]) if transform else None
    return EchelonResult(rref, tr, tuple(pivots), len(pivots), tuple(pivot_values))


def rank(M: ExactMatrix) -> int:
    return echelon(M, transform=False).rank


def nullspace(M: ExactMatrix, cancel=None) -> ExactMatrix:
    """Basis of ``ker M`` with free variables set to unit vectors in column order."""
    e = echelon(M, transform=False, cancel=cancel)
    free = [j for j in range(M.cols) if j not in e.pivot_cols]
    cols = []
    for f in free:
        v = [ZERO] * M.cols
        v[f] = ONE
        for k, pc in enumerate(e.pivot_cols):
            v[pc] = norm_entry(-e.rref[k, f])
        cols.append(v)
    if not cols:
        return ExactMatrix.zeros(M.cols, 0)
    return ExactMatrix.from_columns(cols, M.cols)


def left_nullspace(M: ExactMatrix) -> ExactMatrix:
    """Columns ``a`` with ``a^T M = 0``."""
    return nullspace(M.T)


def solve(M: ExactMatrix, b: ExactMatrix):
    """One solution of ``M x = b`` with free variables zero, or ``None`` if inconsistent."""
    aug = hstack(M, b)
    e = echelon(aug, transform=False)
    if any(pc >= M.cols for pc in e.pivot_cols):
        return None
    x = [[ZERO] * b.cols for _ in range(M.cols)]
    for k, pc in enumerate(e.pivot_cols):
        for j in range(b.cols):
            x[pc][j] = e.rref[k, M.cols + j]
    return ExactMatrix.from_rows(x, b.cols)


def column_basis(M: ExactMatrix) -> ExactMatrix:
    """The pivot columns of ``M``: an independent spanning subset of its columns."""
    return M.columns(echelon(M, transform=False).pivot_cols)


def same_column_space(A: ExactMatrix, B: ExactMatrix) -> bool:
    ra, rb = rank(A) if A.cols else 0, rank(B) if B.cols else 0
    if ra != rb:
        return False
    if not ra:
        return True
    return rank(hstack(A, B)) == ra


def inverse(M: ExactMatrix) -> ExactMatrix:
    """Exact inverse.

    Raises:
        SingularMatrix: if ``det M`` vanishes identically.
    """
    if M.rows != M.cols:
        raise ValueError("inverse of a non-square matrix")
    e = echelon(M)
    if e.rank < M.rows:
        raise SingularMatrix(f"matrix has rank {e.rank} < {M.rows}")
    return e.transform


# ---------------------------------------------------------------------------
# determinants and adjugates


def faddeev_leverrier(A: ExactMatrix):
    """Characteristic polynomial and adjugate coefficients of ``xI - A``.

    Returns ``(c, mats)`` with ``det(xI - A) = sum(c[k] * x**k)`` (``c[n] = 1``)
    and ``adj(xI - A) = sum(mats[k] * x**(n-1-k))`` for ``k = 0..n-1``.
    """
    n = A.rows
    c = [ZERO] * (n + 1)
    c[n] = ONE
    I = ExactMatrix.identity(n)
    mats = []
    Mk = I
    for k in range(1, n + 1):
        mats.append(Mk)
        AM = A @ Mk
        tr = ZERO
        for i in range(n):
            tr = tr + AM[i, i]
        c[n - k] = norm_entry(-tr / k)
        Mk = AM + I.scale(c[n - k])
    return c, mats


def _det_cofactor(M: ExactMatrix):
    entries, n = M.entries, M.cols

    @lru_cache(maxsize=None)
    def minor(rows: tuple, cols: tuple):
        if len(rows) == 1:
            return entries[rows[0] * n + cols[0]]
        r0, rest = rows[0], rows[1:]
        acc = ZERO
        for k, c in enumerate(cols):
            x = entries[r0 * n + c]
            if not x:
                continue
            sub = minor(rest, cols[:k] + cols[k + 1:])
            if sub:
                acc = acc + x * sub if k % 2 == 0 else acc - x * sub
        return norm_entry(acc)

    return minor


def det(M: ExactMatrix):
    if M.rows != M.cols:
        raise ValueError("determinant of a non-square matrix")
    if M.rows == 0:
        return ONE
    if M.rows <= 5:
        return _det_cofactor(M)(tuple(range(M.rows)), tuple(range(M.cols)))
    return _det_by_elimination(M)


def _det_by_elimination(M: ExactMatrix):
    n = M.rows
    rows = [M.row(i) for i in range(n)]
    d = ONE
    for c in range(n):
        piv = next((i for i in range(c, n) if rows[i][c]), None)
        if piv is None:
            return ZERO
        if piv != c:
            rows[c], rows[piv] = rows[piv], rows[c]
            d = -d
        pv = rows[c][c]
        d = norm_entry(d * pv)
        for i in range(c + 1, n):
            f = rows[i][c]
            if f:
                f = f / pv
                rows[i] = [norm_entry(x - f * y) for x, y in zip(rows[i], rows[c])]
    return d


def det_adj(M: ExactMatrix):
    """``(det M, adj M)`` with ``M @ adj == det * I``.

    Cofactor expansion (memoized minors) up to 5x5, Faddeev-LeVerrier beyond.
    """
    n = M.rows
    if n != M.cols:
        raise ValueError("adjugate of a non-square matrix")
    if n == 0:
        return ONE, ExactMatrix.zeros(0, 0)
    if n == 1:
        return M[0, 0], ExactMatrix.identity(1)
    if n <= 5:
        minor = _det_cofactor(M)
        full = tuple(range(n))
        d = minor(full, full)
        adj = []
        for i in range(n):
            for j in range(n):
                # adj[i, j] = (-1)^(i+j) * det(M without row j and column i)
                m = minor(full[:j] + full[j + 1:], full[:i] + full[i + 1:])
                adj.append(m if (i + j) % 2 == 0 else norm_entry(-m))
        return d, ExactMatrix._raw(n, n, adj)
    # Faddeev-LeVerrier on M itself: adj(M) = (-1)^(n-1) * sum c_k-weighted powers
    c, mats = faddeev_leverrier(M)
    d = c[0] if n % 2 == 0 else norm_entry(-c[0])
    adj = mats[n - 1] if n % 2 == 1 else -mats[n - 1]
    return d, adj


# ---------------------------------------------------------------------------
# column normalization


def _int_content(values):
    g = 0
    for v in values:
        g = gcd(g, v)
    return g


def primitive_column(col):
    """Scale a column to polynomial entries with unit content.

    Denominators are cleared with their lcm (no polynomial common factor is
    divided out), then a constant scale makes every coefficient a Gaussian
    integer with overall content 1 and the graded-lex leading coefficient of
    the first nonzero entry a positive integer.

    Returns:
        ``(entries, scale)`` with ``entries[i] == col[i] * scale``; all-zero
        columns return ``scale = 1``.
    """
    col = [norm_entry(x) for x in col]
    if not any(col):
        return col, ONE
    den = None
    for x in col:
        if isinstance(x, RatFunc) and not x.den.is_constant():
            den = x.den if den is None else _lcm(den, x.den)
    polys = []
    for x in col:
        if isinstance(x, RatFunc):
            p = x.num if den is None else x.num * poly_divexact(den, x.den)
        else:
            p = BiPoly.const(x) if den is None else den.scale(x) if x else BiPoly()
        polys.append(p)
    first = next(p for p in polys if p)
    lead = first.leading_coefficient()
    s = 1 / lead
    coeffs = [c * s for p in polys for c in p.terms.values()]
    dens = 1
    for c in coeffs:
        for part in (Fraction(as_scalar(c).real), Fraction(as_scalar(c).imag)):
            dens = dens * part.denominator // gcd(dens, part.denominator)
    nums = []
    for c in coeffs:
        c = as_scalar(c)
        nums.append(int(Fraction(c.real) * dens))
        nums.append(int(Fraction(c.imag) * dens))
    g = _int_content(nums) or 1
    s = s * Fraction(dens, g)
    out = [norm_entry(RatFunc(p.scale(s))) for p in polys]
    scale = RatFunc(den.scale(s)) if den is not None else s
    return out, norm_entry(scale)


def _lcm(a: BiPoly, b: BiPoly) -> BiPoly:
    return (poly_divexact(a, poly_gcd(a, b)) * b).monic()


def primitive_columns(M: ExactMatrix):
    """Apply :func:`primitive_column` to every column; returns ``(P, scales)``."""
    cols, scales = [], []
    for j in range(M.cols):
        c, s = primitive_column(M.col(j))
        cols.append(c)
        scales.append(s)
    if not cols:
        return ExactMatrix.zeros(M.rows, 0), []
    return ExactMatrix.from_columns(cols, M.rows), scales


def primitive_vector(values):
    """Primitive normalization of a constant vector (Gaussian integers, content 1)."""
    return primitive_column(values)[0]


# ---------------------------------------------------------------------------
# float helpers


def float_rank(arr, rtol: float = 1e-9) -> int:
    arr = np.asarray(arr)
    if arr.size == 0:
        return 0
    s = np.linalg.svd(arr, compute_uv=False)
    if not s.size or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def orth(arr, rtol: float = 1e-9):
    """Orthonormal basis of the column space of ``arr``."""
    arr = np.asarray(arr, dtype=complex)
    if arr.size == 0:
        return np.zeros((arr.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(arr, full_matrices=False)
    if not s.size or s[0] == 0:
        return np.zeros((arr.shape[0], 0), dtype=complex)
    return u[:, s > rtol * s[0]]
