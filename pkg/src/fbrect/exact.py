"""Exact scalars over the Gaussian rationals.

Three layers live here:

* ``Fraction`` (stdlib) and :class:`GaussRational` for constants.  A Gaussian
  rational with zero imaginary part is always demoted to a plain ``Fraction``
  by :func:`qi`, so real data never pays for complex arithmetic.
* :class:`BiPoly`, sparse polynomials in the two eigenvalue variables
  ``lambda`` (index 0) and ``mu`` (index 1).
* :class:`RatFunc`, their fraction field, kept in a canonical reduced form with
  a denominator that is monic in graded-lex order (``lambda > mu``).

The textual rendering produced by :func:`format_scalar`, :meth:`BiPoly.__str__`
and :meth:`RatFunc.__str__` is the wire format used by every report, and
:func:`parse_ratfunc` reads it back.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import gcd

import numpy as np

from .errors import IndeterminateError, InputError, PoleError, ZeroDenominator

LAMBDA, MU = 0, 1
VAR_NAMES = ("lambda", "mu")


# ---------------------------------------------------------------------------
# Gaussian rationals


class GaussRational:
    """``real + imag*i`` with ``Fraction`` parts.

    Use :func:`qi` to build values; it returns a ``Fraction`` when the
    imaginary part vanishes.
    """

    __slots__ = ("real", "imag")

    def __init__(self, real=0, imag=0):
        self.real = Fraction(real)
        self.imag = Fraction(imag)

    def __add__(self, other):
        if isinstance(other, GaussRational):
            return qi(self.real + other.real, self.imag + other.imag)
        if isinstance(other, (int, Fraction)):
            return qi(self.real + other, self.imag)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GaussRational):
            return qi(self.real - other.real, self.imag - other.imag)
        if isinstance(other, (int, Fraction)):
            return qi(self.real - other, self.imag)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return qi(other - self.real, -self.imag)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, GaussRational):
            a, b, c, d = self.real, self.imag, other.real, other.imag
            return qi(a * c - b * d, a * d + b * c)
        if isinstance(other, (int, Fraction)):
            return qi(self.real * other, self.imag * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GaussRational):
            a, b, c, d = self.real, self.imag, other.real, other.imag
            den = c * c + d * d
            if not den:
                raise ZeroDivisionError("division by zero")
            return qi((a * c + b * d) / den, (b * c - a * d) / den)
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division by zero")
            return qi(self.real / other, self.imag / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            den = self.real * self.real + self.imag * self.imag
            return qi(other * self.real / den, -other * self.imag / den)
        return NotImplemented

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return 1 / (self ** -k)
        result, base = Fraction(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __neg__(self):
        return GaussRational(-self.real, -self.imag)

    def __pos__(self):
        return self

    def conjugate(self):
        return qi(self.real, -self.imag)

    def __bool__(self):
        return bool(self.real) or bool(self.imag)

    def __eq__(self, other):
        if isinstance(other, GaussRational):
            return self.real == other.real and self.imag == other.imag
        if isinstance(other, (int, Fraction)):
            return not self.imag and self.real == other
        if isinstance(other, complex):
            return complex(self) == other
        return NotImplemented

    def __hash__(self):
        if not self.imag:
            return hash(self.real)
        return hash((self.real, self.imag))

    def __complex__(self):
        return complex(float(self.real), float(self.imag))

    def __repr__(self):
        return f"GaussRational({self.real!s}, {self.imag!s})"

    def __str__(self):
        return format_scalar(self)


def qi(real, imag=0):
    """Build a Gaussian rational, demoting to ``Fraction`` when ``imag == 0``."""
    real = real if isinstance(real, Fraction) else Fraction(real)
    if not imag:
        return real
    return GaussRational(real, imag)


def as_scalar(x):
    """Coerce ints, strings, complex-free numbers to ``Fraction``/``GaussRational``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, GaussRational):
        return x if x.imag else x.real
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_scalar(x)
    if isinstance(x, RatFunc):
        if not x.is_constant():
            raise TypeError(f"not a constant: {x}")
        return x.constant_value()
    raise TypeError(f"cannot use {type(x).__name__} as an exact scalar")


def is_real(x) -> bool:
    return not isinstance(x, GaussRational) or not x.imag


def _fmt_q(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_scalar(x) -> str:
    """Render as ``a/b`` or ``a/b+c/d*i``."""
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return _fmt_q(x)
    re_, im = x.real, x.imag
    if not im:
        return _fmt_q(re_)
    im_part = f"{_fmt_q(abs(im))}*i"
    if not re_:
        return im_part if im > 0 else f"-{im_part}"
    return f"{_fmt_q(re_)}{'+' if im > 0 else '-'}{im_part}"


# ---------------------------------------------------------------------------
# univariate helpers: tuples of coefficients, lowest degree first


def _u_trim(c):
    c = list(c)
    while c and not c[-1]:
        c.pop()
    return tuple(c)


def _u_add(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, x in enumerate(b):
        out[i] = out[i] + x
    return _u_trim(out)


def _u_sub(a, b):
    out = list(a) + [Fraction(0)] * max(0, len(b) - len(a))
    for i, x in enumerate(b):
        out[i] = out[i] - x
    return _u_trim(out)


def _u_mul(a, b):
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            if y:
                out[i + j] = out[i + j] + x * y
    return _u_trim(out)


def _u_scale(a, s):
    if not s:
        return ()
    return tuple(x * s for x in a)


def _u_divmod(a, b):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(a)
    db = len(b) - 1
    inv = 1 / b[-1]
    if len(r) - 1 < db:
        return (), _u_trim(r)
    q = [Fraction(0)] * (len(r) - db)
    for k in range(len(r) - 1, db - 1, -1):
        c = r[k]
        if not c:
            continue
        c = c * inv
        q[k - db] = c
        for j in range(db + 1):
            if b[j]:
                r[k - db + j] = r[k - db + j] - c * b[j]
    return _u_trim(q), _u_trim(r[:db])


def _u_exquo(a, b):
    q, r = _u_divmod(a, b)
    if r:
        raise ArithmeticError("inexact polynomial division")
    return q


def _u_monic(a):
    if not a or a[-1] == 1:
        return a
    inv = 1 / a[-1]
    return tuple(x * inv for x in a)


def _u_gcd(a, b):
    while b:
        a, b = b, _u_divmod(a, b)[1]
    return _u_monic(a)


def _u_pow(a, k):
    out = (Fraction(1),)
    for _ in range(k):
        out = _u_mul(out, a)
    return out


def _u_eval(a, x):
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _u_deriv(a):
    return _u_trim(tuple(c * k for k, c in enumerate(a))[1:])


# ---------------------------------------------------------------------------
# bivariate polynomials


def _grlex_key(mono):
    k, l = mono
    return (k + l, k)


class BiPoly:
    """Sparse polynomial in ``lambda`` and ``mu`` with Gaussian-rational coefficients.

    ``terms`` maps exponent pairs ``(k, l)`` (for ``lambda**k * mu**l``) to
    nonzero coefficients.  Instances are treated as immutable.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = as_scalar(c)
                if c:
                    clean[(int(mono[0]), int(mono[1]))] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms):
        obj = cls.__new__(cls)
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c):
        c = as_scalar(c)
        return cls._raw({(0, 0): c} if c else {})

    @classmethod
    def var(cls, index, power=1):
        return cls._raw({(power, 0) if index == LAMBDA else (0, power): Fraction(1)})

    @classmethod
    def from_univariate(cls, coeffs, index):
        """Coefficients ``coeffs[k]`` of ``x**k`` where ``x`` is variable ``index``."""
        terms = {}
        for k, c in enumerate(coeffs):
            if c:
                terms[(k, 0) if index == LAMBDA else (0, k)] = as_scalar(c)
        return cls._raw(terms)

    # -- inspection --------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return not self.terms or (len(self.terms) == 1 and (0, 0) in self.terms)

    def constant_value(self):
        return self.terms.get((0, 0), Fraction(0))

    def degree(self, index):
        if not self.terms:
            return -1
        return max(m[index] for m in self.terms)

    def total_degree(self):
        if not self.terms:
            return -1
        return max(k + l for k, l in self.terms)

    def variables(self):
        used = set()
        for k, l in self.terms:
            if k:
                used.add(LAMBDA)
            if l:
                used.add(MU)
        return used

    def leading_term(self):
        """``((k, l), coeff)`` of the graded-lex leading monomial."""
        mono = max(self.terms, key=_grlex_key)
        return mono, self.terms[mono]

    def leading_coefficient(self):
        return self.leading_term()[1] if self.terms else Fraction(0)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, BiPoly):
            try:
                other = BiPoly.const(other)
            except TypeError:
                return NotImplemented
        if len(self.terms) < len(other.terms):
            big, small = other.terms, self.terms
        else:
            big, small = self.terms, other.terms
        out = dict(big)
        for m, c in small.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return BiPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return BiPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, BiPoly):
            try:
                other = BiPoly.const(other)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s):
        if not s:
            return BiPoly._raw({})
        if s == 1:
            return self
        return BiPoly._raw({m: c * s for m, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, BiPoly):
            try:
                return self.scale(as_scalar(other))
            except TypeError:
                return NotImplemented
        if not self.terms or not other.terms:
            return BiPoly._raw({})
        out = {}
        for (k1, l1), c1 in self.terms.items():
            for (k2, l2), c2 in other.terms.items():
                m = (k1 + k2, l1 + l2)
                s = out.get(m)
                out[m] = c1 * c2 if s is None else s + c1 * c2
        return BiPoly._raw({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result, base = BiPoly.const(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def monic(self):
        if not self.terms:
            return self
        return self.scale(1 / self.leading_coefficient())

    def conjugate(self):
        return BiPoly._raw({m: c.conjugate() for m, c in self.terms.items()})

    def derivative(self, index):
        out = {}
        for (k, l), c in self.terms.items():
            e = (k, l)[index]
            if e:
                out[(k - 1, l) if index == LAMBDA else (k, l - 1)] = c * e
        return BiPoly._raw(out)

    def evaluate(self, lam0=0, mu0=0):
        lam0, mu0 = as_scalar(lam0), as_scalar(mu0)
        lp, mp = {0: Fraction(1)}, {0: Fraction(1)}
        acc = Fraction(0)
        for (k, l), c in self.terms.items():
            if k not in lp:
                lp[k] = lam0 ** k
            if l not in mp:
                mp[l] = mu0 ** l
            acc = acc + c * lp[k] * mp[l]
        return acc

    def to_complex(self, lam0, mu0):
        return sum(complex(c) * lam0 ** k * mu0 ** l for (k, l), c in self.terms.items())

    # -- comparison / hashing ---------------------------------------------

    def __eq__(self, other):
        if isinstance(other, BiPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction, GaussRational)):
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            if self.is_constant():
                self._hash = hash(self.constant_value())
            else:
                self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- recursive views used by gcd / division ---------------------------

    def _as_lpoly(self):
        """View as a list indexed by ``lambda`` power of ``mu``-coefficient tuples."""
        if not self.terms:
            return []
        dl = self.degree(LAMBDA)
        buckets = [dict() for _ in range(dl + 1)]
        for (k, l), c in self.terms.items():
            buckets[k][l] = c
        out = []
        for b in buckets:
            if not b:
                out.append(())
                continue
            row = [Fraction(0)] * (max(b) + 1)
            for l, c in b.items():
                row[l] = c
            out.append(tuple(row))
        return out

    @classmethod
    def _from_lpoly(cls, lp):
        terms = {}
        for k, row in enumerate(lp):
            for l, c in enumerate(row):
                if c:
                    terms[(k, l)] = c
        return cls._raw(terms)

    def __repr__(self):
        return f"BiPoly({str(self)!r})"

    def __str__(self):
        return format_poly(self)


def _mono_str(k, l):
    parts = []
    for name, e in (("lambda", k), ("mu", l)):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def format_poly(p: BiPoly) -> str:
    """Graded-lex ordered rendering, e.g. ``2*lambda*mu^2 - mu^3``."""
    if not p.terms:
        return "0"
    chunks = []
    for (k, l), c in p.sorted_terms():
        mono = _mono_str(k, l)
        if isinstance(c, GaussRational):
            body = f"({format_scalar(c)})"
            sign = "+"
            text = body if not mono else f"{body}*{mono}"
        else:
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if not mono:
                text = _fmt_q(a)
            elif a == 1:
                text = mono
            else:
                text = f"{_fmt_q(a)}*{mono}"
        chunks.append((sign, text))
    first_sign, first = chunks[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, text in chunks[1:]:
        out += f" {sign} {text}"
    return out


ZERO_POLY = BiPoly._raw({})
ONE_POLY = BiPoly.const(1)


# ---------------------------------------------------------------------------
# gcd over Q(i)[lambda, mu]


def _lp_deg(a):
    return len(a) - 1


def _lp_trim(a):
    a = list(a)
    while a and not a[-1]:
        a.pop()
    return a


def _lp_content(a):
    g = ()
    for c in a:
        if c:
            g = _u_gcd(g, c) if g else _u_monic(c)
            if len(g) == 1:
                break
    return g


def _lp_prem(f, g):
    """Pseudo-remainder of ``f`` by ``g`` over the ring of ``mu``-polynomials."""
    df, dg = _lp_deg(f), _lp_deg(g)
    if df < dg:
        return list(f)
    r = list(f)
    lcg = g[-1]
    count = df - dg + 1
    while r and _lp_deg(r) >= dg:
        j = _lp_deg(r) - dg
        lcr = r[-1]
        new = [_u_mul(c, lcg) for c in r]
        for i, c in enumerate(g):
            if c:
                new[i + j] = _u_sub(new[i + j], _u_mul(c, lcr))
        r = _lp_trim(new)
        count -= 1
    if count and r:
        factor = _u_pow(lcg, count)
        r = [_u_mul(c, factor) for c in r]
    return r


def _lp_subresultant_gcd(f, g):
    """Primitive gcd of primitive ``f``, ``g`` (both of positive ``lambda``-degree)."""
    if _lp_deg(f) < _lp_deg(g):
        f, g = g, f
    one = (Fraction(1),)
    gg, h = one, one
    while True:
        d = _lp_deg(f) - _lp_deg(g)
        r = _lp_prem(f, g)
        if not r:
            break
        if _lp_deg(r) == 0:
            return [one]
        denom = _u_mul(gg, _u_pow(h, d))
        f, g = g, [_u_exquo(c, denom) for c in r]
        gg = f[-1]
        if d == 1:
            h = gg
        elif d > 1:
            h = _u_exquo(_u_pow(gg, d), _u_pow(h, d - 1))
    cont = _lp_content(g)
    return [_u_exquo(c, cont) for c in g]


# Integer variant of the subresultant PRS, used when every coefficient is
# rational: Z[mu] arithmetic on Python ints is far cheaper than on Fractions.


def _z_mul(a, b):
    if not a or not b:
        return ()
    if len(a) > 16 and len(b) > 16:
        return _z_mul_kronecker(a, b)
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _u_trim(out)


def _z_mul_kronecker(a, b):
    # pack both polynomials into one integer each, multiply once, unpack
    bound = max(map(abs, a)) * max(map(abs, b)) * min(len(a), len(b))
    shift = bound.bit_length() + 2
    offset = 1 << (shift - 1)

    def pack(c):
        v = 0
        for x in reversed(c):
            v = (v << shift) + x
        return v

    v = pack(a) * pack(b)
    mask = (1 << shift) - 1
    out = []
    for _ in range(len(a) + len(b) - 1):
        low = v & mask
        if low >= offset:
            low -= 1 << shift
        out.append(low)
        v = (v - low) >> shift
    return _u_trim(out)


def _z_sub(a, b):
    out = list(a) + [0] * max(0, len(b) - len(a))
    for i, x in enumerate(b):
        out[i] -= x
    return _u_trim(out)


def _z_exquo(a, b):
    """Exact quotient in Z[mu]; raises ``ArithmeticError`` otherwise."""
    r = list(a)
    db = len(b) - 1
    lead = b[-1]
    if len(r) - 1 < db:
        if any(r):
            raise ArithmeticError("inexact polynomial division")
        return ()
    q = [0] * (len(r) - db)
    for k in range(len(r) - 1, db - 1, -1):
        c = r[k]
        if not c:
            continue
        c, rem = divmod(c, lead)
        if rem:
            raise ArithmeticError("inexact polynomial division")
        q[k - db] = c
        for j in range(db + 1):
            if b[j]:
                r[k - db + j] -= c * b[j]
    if any(r[:db]):
        raise ArithmeticError("inexact polynomial division")
    return _u_trim(q)


def _z_pow(a, k):
    out = (1,)
    for _ in range(k):
        out = _z_mul(out, a)
    return out


def _z_pp(c):
    g = 0
    for x in c:
        g = gcd(g, x)
    if c[-1] < 0:
        g = -g
    return tuple(x // g for x in c)


def _z_gcd(a, b):
    """Primitive gcd in Z[mu] by the primitive PRS (positive lead)."""
    if len(a) < len(b):
        a, b = b, a
    a, b = _z_pp(a), _z_pp(b)
    while len(b) > 1:
        r = _z_prem_u(a, b)
        if not r:
            return b
        a, b = b, _z_pp(r)
    return (1,)


def _z_prem_u(a, b):
    """Univariate pseudo-remainder of integer polynomials."""
    r = list(a)
    db = len(b) - 1
    lead = b[-1]
    while len(r) - 1 >= db and r:
        c = r[-1]
        shift = len(r) - 1 - db
        r = [x * lead for x in r]
        for j in range(db + 1):
            r[shift + j] -= c * b[j]
        r = list(_u_trim(r))
    return tuple(r)


def _z_content(a):
    """Primitive integer generator of the Q[mu]-content of ``a``."""
    g = None
    for c in a:
        if c:
            g = _z_pp(c) if g is None else _z_gcd(g, c)
            if len(g) == 1:
                return (1,)
    return g


def _z_prem(f, g):
    df, dg = _lp_deg(f), _lp_deg(g)
    if df < dg:
        return list(f)
    r = list(f)
    lcg = g[-1]
    count = df - dg + 1
    while r and _lp_deg(r) >= dg:
        j = _lp_deg(r) - dg
        lcr = r[-1]
        new = [_z_mul(c, lcg) for c in r]
        for i, c in enumerate(g):
            if c:
                new[i + j] = _z_sub(new[i + j], _z_mul(c, lcr))
        r = _lp_trim(new)
        count -= 1
    if count and r:
        factor = _z_pow(lcg, count)
        r = [_z_mul(c, factor) for c in r]
    return r


def _z_subresultant_gcd(f, g):
    if _lp_deg(f) < _lp_deg(g):
        f, g = g, f
    gg, h = (1,), (1,)
    while True:
        d = _lp_deg(f) - _lp_deg(g)
        r = _z_prem(f, g)
        if not r:
            break
        if _lp_deg(r) == 0:
            return [(1,)]
        denom = _z_mul(gg, _z_pow(h, d))
        f, g = g, [_z_exquo(c, denom) for c in r]
        gg = f[-1]
        if d == 1:
            h = gg
        elif d > 1:
            h = _z_exquo(_z_pow(gg, d), _z_pow(h, d - 1))
    cont = _z_content(g)
    return [_z_exquo(c, cont) for c in g]


def _lp_scale_to_int(a):
    """``(ints, factor)`` with ``a == ints * factor`` and ``ints`` of integer content 1."""
    den = 1
    for c in a:
        for x in c:
            den = den * x.denominator // gcd(den, x.denominator)
    ints = [tuple(int(x * den) for x in c) for c in a]
    g = 0
    for c in ints:
        for x in c:
            g = gcd(g, x)
    return [tuple(x // g for x in c) for c in ints], Fraction(g, den)


def _rational_gcd(fa, fb):
    """Primitive (in lambda) gcd of two rational lpolys, via integers."""
    (za, _), (zb, _) = _lp_scale_to_int(fa), _lp_scale_to_int(fb)
    ca, cb = _z_content(za), _z_content(zb)
    pa = [_z_exquo(c, ca) if c else () for c in za]
    pb = [_z_exquo(c, cb) if c else () for c in zb]
    if _lp_deg(pa) == 0 or _lp_deg(pb) == 0:
        return [(Fraction(1),)]
    prim = _z_subresultant_gcd(pa, pb)
    return [tuple(Fraction(x) for x in c) for c in prim]


def _all_rational(a):
    return all(isinstance(x, Fraction) for c in a for x in c)


def poly_gcd(a: BiPoly, b: BiPoly) -> BiPoly:
    """Greatest common divisor, monic in graded-lex order; ``gcd(0, 0) = 0``."""
    if not a:
        return b.monic()
    if not b:
        return a.monic()
    if a.is_constant() or b.is_constant():
        return ONE_POLY
    va, vb = a.variables(), b.variables()
    if va == vb == {MU} or va == vb == {LAMBDA}:
        idx = next(iter(va))
        ua = _u_trim(a._univariate(idx))
        ub = _u_trim(b._univariate(idx))
        return BiPoly.from_univariate(_u_gcd(ua, ub), idx).monic()
    if len(va | vb) == 2 and len(va) == 1 and len(vb) == 1:
        return ONE_POLY
    fa, fb = a._as_lpoly(), b._as_lpoly()
    ca, cb = _lp_content(fa), _lp_content(fb)
    cont = _u_gcd(ca, cb)
    if _all_rational(fa) and _all_rational(fb):
        prim = _rational_gcd(fa, fb)
        result = [_u_mul(c, cont) for c in prim]
        return BiPoly._from_lpoly(result).monic()
    pa = [_u_exquo(c, ca) for c in fa]
    pb = [_u_exquo(c, cb) for c in fb]
    if _lp_deg(pa) == 0 or _lp_deg(pb) == 0:
        prim = [(Fraction(1),)]
    else:
        prim = _lp_subresultant_gcd(pa, pb)
    result = [_u_mul(c, cont) for c in prim]
    return BiPoly._from_lpoly(result).monic()


def _univariate(self, idx):
    out = [Fraction(0)] * (self.degree(idx) + 1)
    for m, c in self.terms.items():
        out[m[idx]] = c
    return tuple(out)


BiPoly._univariate = _univariate


def _rational_divexact(fa, fb):
    # with b of integer content 1 the quotient has integer coefficients (Gauss)
    za, fac_a = _lp_scale_to_int(fa)
    zb, fac_b = _lp_scale_to_int(fb)
    db = _lp_deg(zb)
    q = [()] * (_lp_deg(za) - db + 1)
    r = list(za)
    while r and _lp_deg(r) >= db:
        j = _lp_deg(r) - db
        c = _z_exquo(r[-1], zb[-1])
        q[j] = c
        for i, x in enumerate(zb):
            if x:
                r[i + j] = _z_sub(r[i + j], _z_mul(x, c))
        r = _lp_trim(r)
    if r:
        raise ArithmeticError("inexact polynomial division")
    factor = fac_a / fac_b
    return BiPoly._from_lpoly([tuple(factor * x for x in c) for c in q])


def poly_divexact(a: BiPoly, b: BiPoly) -> BiPoly:
    """Quotient ``a / b``; raises ``ArithmeticError`` if ``b`` does not divide ``a``."""
    if not b:
        raise ZeroDenominator("division by the zero polynomial")
    if not a:
        return ZERO_POLY
    if b.is_constant():
        return a.scale(1 / b.constant_value())
    fa, fb = a._as_lpoly(), b._as_lpoly()
    db = _lp_deg(fb)
    if _lp_deg(fa) < db:
        raise ArithmeticError("inexact polynomial division")
    if _all_rational(fa) and _all_rational(fb):
        return _rational_divexact(fa, fb)
    q = [()] * (_lp_deg(fa) - db + 1)
    r = list(fa)
    while r and _lp_deg(r) >= db:
        j = _lp_deg(r) - db
        c = _u_exquo(r[-1], fb[-1])
        q[j] = c
        for i, x in enumerate(fb):
            if x:
                r[i + j] = _u_sub(r[i + j], _u_mul(x, c))
        r = _lp_trim(r)
    if r:
        raise ArithmeticError("inexact polynomial division")
    return BiPoly._from_lpoly(q)


def poly_lcm(a: BiPoly, b: BiPoly) -> BiPoly:
    if not a or not b:
        return ZERO_POLY
    return (poly_divexact(a, poly_gcd(a, b)) * b).monic()


def squarefree_part(p: BiPoly) -> BiPoly:
    """Product of the distinct irreducible factors (up to a constant)."""
    if p.is_constant():
        return ONE_POLY
    g = p
    for idx in p.variables():
        g = poly_gcd(g, p.derivative(idx))
    return poly_divexact(p, g).monic()


def coprime_base(polys) -> list[BiPoly]:
    """Pairwise coprime, square-free, monic polynomials with the same zero set."""
    base = []
    for p in polys:
        if p and not p.is_constant():
            base.append(squarefree_part(p))
    changed = True
    while changed:
        changed = False
        for i in range(len(base)):
            for j in range(i + 1, len(base)):
                g = poly_gcd(base[i], base[j])
                if g.is_constant():
                    continue
                a, b = poly_divexact(base[i], g), poly_divexact(base[j], g)
                rest = [base[k] for k in range(len(base)) if k not in (i, j)]
                base = rest + [x.monic() for x in (a, g, b) if not x.is_constant()]
                changed = True
                break
            if changed:
                break
    uniq = {}
    for p in base:
        uniq.setdefault(p, None)
    return sorted(uniq, key=lambda p: (p.total_degree(), str(p)))


def split_linear_factors(p: BiPoly) -> list[BiPoly]:
    """Split a univariate polynomial into exact linear factors where possible.

    Bivariate polynomials and the part without Gaussian-rational roots are
    returned unchanged.
    """
    vs = p.variables()
    if len(vs) != 1:
        return [p]
    idx = next(iter(vs))
    coeffs = p._univariate(idx)
    roots, rest = exact_roots(coeffs)
    out = [BiPoly.from_univariate((-r, Fraction(1)), idx) for r in roots]
    if len(rest) > 1:
        out.append(BiPoly.from_univariate(rest, idx).monic())
    return out


def content_split(p: BiPoly) -> list[BiPoly]:
    """Split off the pure-``mu`` and pure-``lambda`` contents of ``p``."""
    if p.is_constant():
        return []
    out = []
    rest = p
    for idx in (MU, LAMBDA):
        other = LAMBDA if idx == MU else MU
        if rest.degree(other) <= 0:
            continue
        cont = None
        buckets = {}
        for (k, l), c in rest.terms.items():
            key = k if other == LAMBDA else l
            buckets.setdefault(key, {})[(k if idx == LAMBDA else 0, l if idx == MU else 0)] = c
        for terms in buckets.values():
            q = BiPoly._raw(terms)
            cont = q if cont is None else poly_gcd(cont, q)
            if cont.is_constant():
                break
        if cont is not None and not cont.is_constant():
            out.append(cont.monic())
            rest = poly_divexact(rest, cont)
    if not rest.is_constant():
        out.append(rest.monic())
    return out


def refine_factors(polys) -> list[BiPoly]:
    """Coprime, square-free factor list with contents and exact linear factors split out."""
    pieces = []
    for p in coprime_base(polys):
        for q in content_split(p):
            pieces.extend(split_linear_factors(q))
    return coprime_base(pieces)


# ---------------------------------------------------------------------------
# univariate exact roots


def _snap(x: float, den: int):
    return Fraction(round(x * den), den)


def exact_roots(coeffs):
    """Distinct Gaussian-rational roots of a univariate polynomial.

    ``coeffs[k]`` multiplies ``x**k``.  Roots are located numerically on the
    square-free part, snapped to nearby Gaussian rationals and confirmed by
    exact evaluation, then deflated exactly.  Returns ``(roots, rest)`` where
    ``rest`` holds the coefficients of the square-free cofactor that has no
    confirmed root (``(1,)`` when everything split).
    """
    p = _u_trim(tuple(as_scalar(c) for c in coeffs))
    if len(p) <= 1:
        return [], (Fraction(1),)
    sq = _u_exquo(p, _u_gcd(p, _u_deriv(p))) if len(p) > 2 else p
    sq = _u_monic(sq)
    dens = [Fraction(c.real).denominator for c in sq] + [Fraction(c.imag).denominator for c in sq]
    common = 1
    for d in dens:
        common = common * d // gcd(common, d)
    lead = abs(int(common))
    roots = []
    numeric = np.roots([complex(c) for c in reversed(sq)]) if len(sq) > 1 else []
    for z in numeric:
        if len(sq) <= 1:
            break
        for den in (2 * lead, lead, 1):
            cand = qi(_snap(z.real, den), _snap(z.imag, den))
            if not _u_eval(sq, cand):
                break
        else:
            cand = qi(Fraction(z.real).limit_denominator(10 ** 6),
                      Fraction(z.imag).limit_denominator(10 ** 6))
            if _u_eval(sq, cand):
                continue
        if cand in roots:
            continue
        roots.append(cand)
        sq = _u_exquo(sq, (-cand, Fraction(1)))
    roots.sort(key=lambda r: (Fraction(r.real), Fraction(r.imag)))
    return roots, sq


def numeric_roots(coeffs):
    p = _u_trim(tuple(as_scalar(c) for c in coeffs))
    if len(p) <= 1:
        return []
    return list(np.roots([complex(c) for c in reversed(p)]))


# ---------------------------------------------------------------------------
# rational functions


class RatFunc:
    """Element of Q(i)(lambda, mu) in canonical reduced form.

    ``gcd(num, den)`` is a unit and ``den`` has graded-lex leading
    coefficient 1.  Build instances with :func:`rf_normalize` or the
    arithmetic operators; the constructor trusts its inputs.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: BiPoly, den: BiPoly = ONE_POLY):
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def const(cls, c):
        return cls(BiPoly.const(c))

    @classmethod
    def var(cls, index):
        return cls(BiPoly.var(index))

    @classmethod
    def lift(cls, x):
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, BiPoly):
            return cls(x)
        return cls(BiPoly.const(x))

    # -- inspection --------------------------------------------------------

    def __bool__(self):
        return bool(self.num)

    def is_polynomial(self):
        return self.den.is_constant()

    def is_constant(self):
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self):
        return self.num.constant_value()

    def variables(self):
        return self.num.variables() | self.den.variables()

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, RatFunc):
            return other
        if isinstance(other, (int, Fraction, GaussRational)):
            return None
        if isinstance(other, BiPoly):
            return RatFunc(other)
        raise TypeError

    def __add__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        if o is None:
            if not other:
                return self
            return RatFunc(self.num + self.den.scale(as_scalar(other)), self.den)
        if self.den.is_constant() and o.den.is_constant():
            return RatFunc(self.num + o.num)
        if self.den == o.den:
            return rf_normalize(self.num + o.num, self.den)
        if o.den.is_constant():
            return RatFunc(self.num + o.num * self.den, self.den)
        if self.den.is_constant():
            return RatFunc(self.num * o.den + o.num, o.den)
        g = poly_gcd(self.den, o.den)
        d1, d2 = poly_divexact(self.den, g), poly_divexact(o.den, g)
        num = self.num * d2 + o.num * d1
        if not num:
            return RF_ZERO
        return rf_normalize(num, d1 * d2 * g, known_factor=g)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den)

    def __sub__(self, other):
        if isinstance(other, RatFunc):
            return self + (-other)
        try:
            return self + (-other)
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        if o is None:
            s = as_scalar(other)
            if not s:
                return RF_ZERO
            return RatFunc(self.num.scale(s), self.den)
        if not self.num or not o.num:
            return RF_ZERO
        if self.den.is_constant() and o.den.is_constant():
            return RatFunc(self.num * o.num)
        if o.is_constant():
            return RatFunc(self.num.scale(o.constant_value()), self.den)
        if self.is_constant():
            return RatFunc(o.num.scale(self.constant_value()), o.den)
        g1 = poly_gcd(self.num, o.den)
        g2 = poly_gcd(o.num, self.den)
        n1 = poly_divexact(self.num, g1) if not g1.is_constant() else self.num
        d2 = poly_divexact(o.den, g1) if not g1.is_constant() else o.den
        n2 = poly_divexact(o.num, g2) if not g2.is_constant() else o.num
        d1 = poly_divexact(self.den, g2) if not g2.is_constant() else self.den
        return _monic_den(n1 * n2, d1 * d2)

    __rmul__ = __mul__

    def inverse(self):
        if not self.num:
            raise ZeroDenominator("inverse of zero")
        return _monic_den(self.den, self.num)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, GaussRational)):
            s = as_scalar(other)
            if not s:
                raise ZeroDenominator("division by zero")
            return RatFunc(self.num.scale(1 / s), self.den)
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        try:
            s = as_scalar(other)
        except TypeError:
            return NotImplemented
        return self.inverse() * s

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        return RatFunc(self.num ** k, self.den ** k)

    def conjugate(self):
        return RatFunc(self.num.conjugate(), self.den.conjugate())

    # -- evaluation / substitution ----------------------------------------

    def evaluate(self, lam0=0, mu0=0):
        return rf_eval(self, (lam0, mu0))

    def substitute_mu(self, g: "RatFunc") -> "RatFunc":
        """Compose with ``mu = g`` (``g`` a rational function of ``lambda``)."""
        return _subst_poly(self.num, g) / _subst_poly(self.den, g)

    # -- comparison --------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, RatFunc):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction, GaussRational)):
            return self.is_constant() and self.constant_value() == other
        if isinstance(other, BiPoly):
            return self.den.is_constant() and self.num == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            if self.is_constant():
                self._hash = hash(self.constant_value())
            else:
                self._hash = hash((self.num, self.den))
        return self._hash

    def __repr__(self):
        return f"RatFunc({str(self)!r})"

    def __str__(self):
        if self.den.is_constant():
            return format_poly(self.num)
        num = format_poly(self.num)
        if len(self.num.terms) > 1:
            num = f"({num})"
        return f"{num}/({format_poly(self.den)})"


def _monic_den(num: BiPoly, den: BiPoly) -> RatFunc:
    lc = den.leading_coefficient()
    if lc != 1:
        inv = 1 / lc
        num, den = num.scale(inv), den.scale(inv)
    return RatFunc(num, den)


def rf_normalize(num: BiPoly, den: BiPoly, known_factor: BiPoly | None = None) -> RatFunc:
    """Canonical reduced form of ``num / den``.

    Raises:
        ZeroDenominator: if ``den`` is the zero polynomial.
    """
    if not den:
        raise ZeroDenominator("zero denominator")
    if not num:
        return RF_ZERO
    if not den.is_constant() and not num.is_constant():
        g = poly_gcd(num, den)
        if not g.is_constant():
            num, den = poly_divexact(num, g), poly_divexact(den, g)
    return _monic_den(num, den)


def rf_eval(f: RatFunc, point):
    """Value of ``f`` at ``(lambda0, mu0)``.

    Raises:
        PoleError: the denominator vanishes but the numerator does not.
        IndeterminateError: both vanish; substitute before evaluating.
    """
    lam0, mu0 = point
    d = f.den.evaluate(lam0, mu0)
    n = f.num.evaluate(lam0, mu0)
    if not d:
        if n:
            raise PoleError(f"pole of {f} at ({format_scalar(as_scalar(lam0))}, {format_scalar(as_scalar(mu0))})")
        raise IndeterminateError(f"{f} is indeterminate at the given point")
    return n / d if d != 1 else n


def _subst_poly(p: BiPoly, g: RatFunc) -> RatFunc:
    acc = RF_ZERO
    powers = {0: RF_ONE}
    for (k, l), c in p.terms.items():
        if l not in powers:
            powers[l] = g ** l
        acc = acc + RatFunc(BiPoly._raw({(k, 0): c})) * powers[l]
    return acc


RF_ZERO = RatFunc(ZERO_POLY)
RF_ONE = RatFunc(ONE_POLY)
LAM = RatFunc.var(LAMBDA)
MU_RF = RatFunc.var(MU)


def to_complex(x, point=None) -> complex:
    """Float value of an exact scalar, or of a rational function at ``point``."""
    if isinstance(x, RatFunc):
        lam0, mu0 = point
        return x.num.to_complex(lam0, mu0) / x.den.to_complex(lam0, mu0)
    return complex(x)


# ---------------------------------------------------------------------------
# parsing


_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|(lambda|lam|λ|mu|μ|i)\b|(\*\*|[-+*/^()]))")


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise InputError(f"cannot parse {self.text!r} near position {pos}")
            self.tokens.append(m.group(1) or m.group(2) or m.group(3))
            pos = m.end()
            while pos < len(text) and text[pos].isspace():
                pos += 1
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self):
        if not self.tokens:
            raise InputError("empty expression")
        val = self.expr()
        if self.peek() is not None:
            raise InputError(f"unexpected {self.peek()!r} in {self.text!r}")
        return val

    def expr(self):
        val = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self):
        val = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op == "*":
                val = val * rhs
            else:
                if not rhs:
                    raise ZeroDenominator(f"division by zero in {self.text!r}")
                val = val / rhs
        return val

    def unary(self):
        if self.peek() in ("+", "-"):
            op = self.take()
            val = self.unary()
            return -val if op == "-" else val
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() in ("^", "**"):
            self.take()
            sign = 1
            if self.peek() in ("+", "-"):
                sign = -1 if self.take() == "-" else 1
            tok = self.take()
            if tok is None or not tok.isdigit():
                raise InputError(f"exponent must be an integer in {self.text!r}")
            k = sign * int(tok)
            if k < 0 and not base:
                raise ZeroDenominator(f"division by zero in {self.text!r}")
            return base ** k
        return base

    def atom(self):
        tok = self.take()
        if tok is None:
            raise InputError(f"unexpected end of {self.text!r}")
        if tok == "(":
            val = self.expr()
            if self.take() != ")":
                raise InputError(f"missing ')' in {self.text!r}")
            return val
        if tok[0].isdigit():
            return RatFunc.const(Fraction(tok))
        if tok in ("lambda", "lam", "λ"):
            return LAM
        if tok in ("mu", "μ"):
            return MU_RF
        if tok == "i":
            return RatFunc.const(GaussRational(0, 1))
        raise InputError(f"unexpected {tok!r} in {self.text!r}")


def parse_ratfunc(text: str) -> RatFunc:
    """Parse an expression in ``lambda``, ``mu`` and ``i`` with ``+ - * / ^``."""
    return _Parser(text).parse()


def parse_scalar(text: str):
    """Parse ``"-29/2"``, ``"3"`` or ``"1/2-3/4*i"`` into an exact constant."""
    if isinstance(text, (int, Fraction, GaussRational)):
        return as_scalar(text)
    text = str(text).strip()
    try:
        return Fraction(text)
    except ZeroDivisionError:
        raise ZeroDenominator(f"zero denominator in {text!r}") from None
    except ValueError:
        pass
    val = parse_ratfunc(text)
    if not val.is_constant():
        raise InputError(f"expected a constant, got {text!r}")
    return val.constant_value()
