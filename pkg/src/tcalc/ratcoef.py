"""Exact coefficients: rationals, polynomials and rational functions in n.

Rationals are plain :class:`fractions.Fraction`.  ``DimPoly`` is a dense
univariate polynomial over Q (the variable is ``n`` unless stated otherwise,
the y-row check reuses the class with ``var="y"``), ``DimRatio`` a reduced
quotient with monic denominator.  Products whose length depends on n, such
as (n-3)(n-4)...4, are kept as ``RangeProduct`` values and only evaluated at
concrete n.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Union

Rational = Fraction

__all__ = [
    "Rational", "DimPoly", "DimRatio", "RangeProduct", "ProdRatio",
    "falling_product", "ratio_arith", "eval_at", "positive_for_all_n_geq",
    "Positivity", "parse_coef", "as_coef", "binom", "PoleError",
]


class PoleError(ZeroDivisionError):
    """A denominator vanishes at the requested dimension."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class DimPoly:
    coeffs: tuple = ()
    var: str = "n"

    def __post_init__(self):
        c = [_frac(x) for x in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    # constructors
    @classmethod
    def const(cls, c, var="n") -> "DimPoly":
        return cls((c,), var)

    @classmethod
    def x(cls, var="n") -> "DimPoly":
        return cls((0, 1), var)

    @classmethod
    def linear(cls, a, b, var="n") -> "DimPoly":
        """a*var + b."""
        return cls((b, a), var)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def _wrap(self, other):
        if isinstance(other, DimPoly):
            return other
        return DimPoly.const(other, self.var)

    def __add__(self, other):
        o = self._wrap(other)
        m = max(len(self.coeffs), len(o.coeffs))
        a = self.coeffs + (Fraction(0),) * (m - len(self.coeffs))
        b = o.coeffs + (Fraction(0),) * (m - len(o.coeffs))
        return DimPoly(tuple(x + y for x, y in zip(a, b)), self.var)

    __radd__ = __add__

    def __neg__(self):
        return DimPoly(tuple(-x for x in self.coeffs), self.var)

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        o = self._wrap(other)
        if self.is_zero() or o.is_zero():
            return DimPoly((), self.var)
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    out[i + j] += a * b
        return DimPoly(tuple(out), self.var)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = DimPoly.const(1, self.var)
        for _ in range(k):
            out = out * self
        return out

    def divmod(self, other: "DimPoly"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.coeffs)
        q = [Fraction(0)] * max(len(r) - len(other.coeffs) + 1, 0)
        d = other.degree
        while len(r) - 1 >= d and any(r):
            k = len(r) - 1 - d
            f = r[-1] / other.lead
            q[k] = f
            for i, b in enumerate(other.coeffs):
                r[i + k] -= f * b
            while r and r[-1] == 0:
                r.pop()
        return DimPoly(tuple(q), self.var), DimPoly(tuple(r), self.var)

    def monic(self) -> "DimPoly":
        if self.is_zero():
            return self
        return DimPoly(tuple(c / self.lead for c in self.coeffs), self.var)

    def gcd(self, other: "DimPoly") -> "DimPoly":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
        return a.monic()

    def __call__(self, x) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def integer_roots(self) -> list:
        """Rational roots of the polynomial, with multiplicity, ascending."""
        if self.degree < 1:
            return []
        den = 1
        for c in self.coeffs:
            den = den * c.denominator // math.gcd(den, c.denominator)
        ints = [int(c * den) for c in self.coeffs]
        roots, p = [], self
        lo = next(i for i, c in enumerate(ints) if c)
        if lo:
            roots += [Fraction(0)] * lo
            p = DimPoly(p.coeffs[lo:], self.var)
            ints = ints[lo:]
        a0, an = abs(ints[0]), abs(ints[-1])
        cands = set()
        for pn in _divisors(a0):
            for qd in _divisors(an):
                cands.add(Fraction(pn, qd))
                cands.add(Fraction(-pn, qd))
        for r in sorted(cands):
            lin = DimPoly((-r, 1), self.var)
            while p.degree >= 1:
                q, rem = p.divmod(lin)
                if not rem.is_zero():
                    break
                roots.append(r)
                p = q
        return sorted(roots)

    def __str__(self):
        return _poly_str(self)

    def __repr__(self):
        return f"DimPoly({self})"


def _divisors(a: int) -> list:
    if a == 0:
        return [1]
    out = []
    for d in range(1, math.isqrt(a) + 1):
        if a % d == 0:
            out += [d, a // d]
    return out


def _poly_str(p: DimPoly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for k in range(p.degree, -1, -1):
        c = p.coeffs[k]
        if c == 0:
            continue
        mono = "" if k == 0 else (p.var if k == 1 else f"{p.var}^{k}")
        mag = abs(c)
        if mono and mag == 1:
            body = mono
        elif mono:
            body = f"{_rat_str(mag)}*{mono}"
        else:
            body = _rat_str(mag)
        sign = "-" if c < 0 else "+"
        parts.append((sign, body))
    s0, b0 = parts[0]
    out = ("-" if s0 == "-" else "") + b0
    for s, b in parts[1:]:
        out += s + b
    return out


def _rat_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class DimRatio:
    num: DimPoly
    den: DimPoly

    def __post_init__(self):
        num, den = self.num, self.den
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            object.__setattr__(self, "num", DimPoly((), den.var))
            object.__setattr__(self, "den", DimPoly.const(1, den.var))
            return
        if den.degree == 0:
            if den.coeffs[0] != 1:
                lc = den.coeffs[0]
                object.__setattr__(self, "num", DimPoly(tuple(c / lc for c in num.coeffs), num.var))
                object.__setattr__(self, "den", DimPoly.const(1, den.var))
            return
        g = num.gcd(den)
        if g.degree > 0:
            num = num.divmod(g)[0]
            den = den.divmod(g)[0]
        lc = den.lead
        num = DimPoly(tuple(c / lc for c in num.coeffs), num.var)
        den = DimPoly(tuple(c / lc for c in den.coeffs), den.var)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def of(cls, x, var: str = "n") -> "DimRatio":
        if isinstance(x, DimRatio):
            return x
        if isinstance(x, DimPoly):
            return cls(x, DimPoly.const(1, x.var))
        return cls(DimPoly.const(x, var), DimPoly.const(1, var))

    @classmethod
    def n(cls, var: str = "n") -> "DimRatio":
        return cls.of(DimPoly.x(var))

    @property
    def var(self) -> str:
        return self.num.var

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.degree <= 0 and self.den.degree == 0

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError(f"{self} depends on {self.var}")
        return self.num(0) / self.den(0)

    def _wrap(self, o):
        return o if isinstance(o, DimRatio) else DimRatio.of(o, self.var)

    @classmethod
    def _fast(cls, q: Fraction, var: str) -> "DimRatio":
        out = object.__new__(cls)
        object.__setattr__(out, "num", DimPoly((q,) if q else (), var))
        object.__setattr__(out, "den", DimPoly((Fraction(1),), var))
        return out

    def _cval(self):
        """The value when this is a constant with denominator 1, else None."""
        if self.den.coeffs == (1,) and self.num.degree <= 0:
            return self.num.coeffs[0] if self.num.coeffs else Fraction(0)
        return None

    def __add__(self, o):
        if isinstance(o, ProdRatio):
            return NotImplemented
        o = self._wrap(o)
        x, y = self._cval(), o._cval()
        if x is not None and y is not None:
            return DimRatio._fast(x + y, self.var)
        return DimRatio(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return DimRatio(-self.num, self.den)

    def __sub__(self, o):
        if isinstance(o, ProdRatio):
            return NotImplemented
        return self + (-self._wrap(o))

    def __rsub__(self, o):
        return self._wrap(o) - self

    def __mul__(self, o):
        if isinstance(o, ProdRatio):
            return NotImplemented
        o = self._wrap(o)
        x, y = self._cval(), o._cval()
        if x is not None and y is not None:
            return DimRatio._fast(x * y, self.var)
        return DimRatio(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, ProdRatio):
            return NotImplemented
        o = self._wrap(o)
        if o.is_zero():
            raise ZeroDivisionError("division by the zero ratio")
        return DimRatio(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, o):
        return self._wrap(o) / self

    def __pow__(self, k: int):
        if k < 0:
            return DimRatio.of(1, self.var) / (self ** (-k))
        return DimRatio(self.num ** k, self.den ** k)

    def __eq__(self, o):
        if isinstance(o, (int, Fraction)):
            o = DimRatio.of(o, self.var)
        if not isinstance(o, DimRatio):
            return NotImplemented
        return self.num.coeffs == o.num.coeffs and self.den.coeffs == o.den.coeffs

    def __hash__(self):
        return hash((self.num.coeffs, self.den.coeffs))

    def eval_at(self, n) -> Fraction:
        d = self.den(n)
        if d == 0:
            bad = [f"({self.var}-{_rat_str(r)})" for r in self.den.integer_roots() if r == n]
            raise PoleError(f"pole of {self} at {self.var}={n}: vanishing factor {' '.join(bad) or str(self.den)}")
        return self.num(n) / d

    def __str__(self):
        return _ratio_str(self)

    def __repr__(self):
        return f"DimRatio({self})"


def _factor_poly(p: DimPoly):
    """Split p as const * prod (var - r) * rest with rest free of rational roots."""
    roots = p.integer_roots()
    rest = p
    for r in roots:
        rest = rest.divmod(DimPoly((-r, 1), p.var))[0]
    const = Fraction(1)
    if rest.degree == 0:
        const, rest = rest.lead, None
    elif rest.lead != 1:
        const = rest.lead
        rest = rest.monic()
    return const, roots, rest


def _lin_str(var: str, r: Fraction, flip: bool) -> str:
    if r == 0:
        return f"(-{var})" if flip else var
    if flip:
        return f"({_rat_str(r)}-{var})"
    return f"({var}+{_rat_str(-r)})" if r < 0 else f"({var}-{_rat_str(r)})"


def _prod_str(const: Fraction, items: list) -> str:
    if not items:
        return _rat_str(const)
    body = "*".join(items)
    if const != 1:
        body = f"{_rat_str(const)}*{body}"
    return body


def _ratio_str(r: DimRatio) -> str:
    if r.is_zero():
        return "0"
    nc, nroots, nrest = _factor_poly(r.num)
    dc, droots, drest = _factor_poly(r.den)
    c = nc / dc
    flip_den = c < 0 and bool(droots)
    flip_num = c < 0 and not droots and bool(nroots)
    if flip_den or flip_num:
        c = -c
    sign = "-" if c < 0 else ""
    c = abs(c)
    nitems = [_lin_str(r.var, x, flip_num and i == 0) for i, x in enumerate(nroots)]
    if nrest is not None:
        nitems.append(f"({nrest})")
    ditems = [_lin_str(r.var, x, flip_den and i == 0) for i, x in enumerate(droots)]
    if drest is not None:
        ditems.append(f"({drest})")
    ncon = Fraction(c.numerator)
    dcon = Fraction(c.denominator)
    top = _prod_str(ncon, nitems)
    if not ditems and dcon == 1:
        return sign + top
    bot = _prod_str(dcon, ditems)
    if (dcon != 1 and ditems) or len(ditems) > 1:
        bot = f"({bot})"
    return f"{sign}{top}/{bot}"


def ratio_arith(a: DimRatio, b: DimRatio, op: str) -> DimRatio:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------- ranges

@dataclass(frozen=True)
class RangeProduct:
    """prod of the values start, start-step, ..., stop (linear forms in n).

    The range is empty when stop = start + step; a stop further above start
    is malformed.
    """
    start: DimPoly
    stop: DimPoly
    step: int = 1

    def __post_init__(self):
        for p in (self.start, self.stop):
            if p.degree > 1:
                raise ValueError("range bounds must be linear in n")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if (self.start - self.stop).degree <= 0:
            length = self._length_const()
            if length < 0:
                raise ValueError(f"malformed range {self}: stop above start")

    def _length_const(self) -> int:
        diff = (self.start - self.stop)(0)
        if diff % self.step:
            raise ValueError(f"range {self} does not align with step {self.step}")
        return int(diff) // self.step + 1

    def fixed_length(self) -> bool:
        return (self.start - self.stop).degree <= 0

    def factors_at(self, n) -> list:
        a, b = self.start(n), self.stop(n)
        diff = a - b
        if diff % self.step:
            raise ValueError(f"range {self} does not align with step at n={n}")
        length = int(diff) // self.step + 1
        if length < 0:
            raise ValueError(f"malformed range {self} at n={n}: stop above start")
        return [a - k * self.step for k in range(length)]

    def eval_at(self, n) -> Fraction:
        return Fraction(math.prod(self.factors_at(n)))

    def as_poly(self) -> DimPoly:
        if not self.fixed_length():
            raise ValueError(f"{self} has n-dependent length")
        out = DimPoly.const(1, self.start.var)
        for k in range(self._length_const()):
            out = out * (self.start - k * self.step)
        return out

    def __str__(self):
        s = f"prod({self.start} .. {self.stop}"
        if self.step != 1:
            s += f" by {self.step}"
        return s + ")"


def falling_product(start: DimPoly, stop: DimPoly, step: int = 1):
    """Product of n-c over the range; a DimPoly when the length is fixed."""
    rp = RangeProduct(_as_lin(start), _as_lin(stop), step)
    return rp.as_poly() if rp.fixed_length() else rp


def _as_lin(p) -> DimPoly:
    if isinstance(p, DimPoly):
        return p
    return DimPoly.const(p)


@dataclass(frozen=True)
class ProdRatio:
    """coef * prod(range_i ** e_i); only multiplicative structure is symbolic."""
    coef: DimRatio
    ranges: tuple = ()  # sorted tuple of (RangeProduct, exponent)

    def __post_init__(self):
        acc: dict = {}
        for rp, e in self.ranges:
            acc[rp] = acc.get(rp, 0) + e
        items = sorted(((rp, e) for rp, e in acc.items() if e), key=lambda t: str(t[0]))
        object.__setattr__(self, "ranges", tuple(items))

    @classmethod
    def of(cls, x) -> "ProdRatio":
        if isinstance(x, ProdRatio):
            return x
        if isinstance(x, RangeProduct):
            return cls(DimRatio.of(1), ((x, 1),))
        return cls(DimRatio.of(x))

    def simplify(self):
        return self.coef if not self.ranges else self

    def __mul__(self, o):
        o = ProdRatio.of(o)
        return ProdRatio(self.coef * o.coef, self.ranges + o.ranges).simplify()

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = ProdRatio.of(o)
        inv = tuple((rp, -e) for rp, e in o.ranges)
        return ProdRatio(self.coef / o.coef, self.ranges + inv).simplify()

    def __rtruediv__(self, o):
        return ProdRatio.of(o) / self

    def __neg__(self):
        return ProdRatio(-self.coef, self.ranges)

    def __add__(self, o):
        o = ProdRatio.of(o)
        if o.ranges != self.ranges:
            raise ValueError("cannot add range products with different bounds symbolically")
        return ProdRatio(self.coef + o.coef, self.ranges).simplify()

    __radd__ = __add__

    def __sub__(self, o):
        return self + (-ProdRatio.of(o))

    def __eq__(self, o):
        if not isinstance(o, ProdRatio):
            return NotImplemented
        return self.coef == o.coef and self.ranges == o.ranges

    def __hash__(self):
        return hash((self.coef, self.ranges))

    def is_zero(self) -> bool:
        return self.coef.is_zero()

    def eval_at(self, n) -> Fraction:
        v = self.coef.eval_at(n)
        for rp, e in self.ranges:
            x = Fraction(rp.eval_at(n))
            if x == 0 and e < 0:
                raise PoleError(f"pole of {self} at n={n}: {rp} vanishes")
            v *= x ** e
        return v

    def __str__(self):
        num = [str(rp) for rp, e in self.ranges for _ in range(max(e, 0))]
        den = [str(rp) for rp, e in self.ranges for _ in range(max(-e, 0))]
        c = str(self.coef)
        if num:
            top = "*".join(([] if c == "1" else [_paren(c)]) + num)
        else:
            top = _paren(c)
        if not den:
            return top
        bot = den[0] if len(den) == 1 else "(" + "*".join(den) + ")"
        return f"{top} / {bot}"


def _paren(s: str) -> str:
    return s if re.fullmatch(r"-?[\w]+", s) else f"({s})"


Coef = Union[DimRatio, ProdRatio]


def as_coef(x) -> Coef:
    if isinstance(x, (DimRatio, ProdRatio)):
        return x
    if isinstance(x, DimPoly):
        return DimRatio.of(x)
    if isinstance(x, RangeProduct):
        return ProdRatio.of(x)
    return DimRatio.of(x)


def eval_at(r, n) -> Fraction:
    if isinstance(r, DimPoly):
        return r(n)
    if isinstance(r, (int, Fraction)):
        return Fraction(r)
    return r.eval_at(n)


class Positivity(NamedTuple):
    positive: bool
    identically_zero: bool = False

    def __bool__(self):
        return self.positive


def _cauchy_bound(p: DimPoly) -> Fraction:
    if p.degree < 1:
        return Fraction(0)
    return 1 + max(abs(c / p.lead) for c in p.coeffs[:-1])


def positive_for_all_n_geq(r, n0: int) -> Positivity:
    """Decide r(n) > 0 for every even n >= n0."""
    if isinstance(r, ProdRatio):
        for rp, _ in r.ranges:
            slope = rp.stop.coeffs[1] if rp.stop.degree == 1 else Fraction(0)
            s_slope = rp.start.coeffs[1] if rp.start.degree == 1 else Fraction(0)
            if slope < 0 or s_slope < 0 or rp.stop(n0) <= 0:
                return Positivity(False)
        return positive_for_all_n_geq(r.coef, n0)
    r = as_coef(r)
    if r.is_zero():
        return Positivity(False, True)
    bound = max(_cauchy_bound(r.num), _cauchy_bound(r.den))
    top = max(n0, math.ceil(bound) + 2)
    start = n0 + (n0 % 2)
    for m in range(start, top + 1, 2):
        d = r.den(m)
        if d == 0 or r.num(m) / d <= 0:
            return Positivity(False)
    # beyond every real root both polynomials carry their leading sign
    return Positivity(r.num.lead / r.den.lead > 0)


def binom(a: int, b: int) -> int:
    return math.comb(a, b) if 0 <= b <= a else 0


# ---------------------------------------------------------------- parsing

_TOK = re.compile(r"\s*(?:(\d+)|(\.\.)|([A-Za-z_]\w*)|(.))")


def _tokens(s: str):
    pos = 0
    out = []
    while pos < len(s):
        m = _TOK.match(s, pos)
        if not m or m.end() == pos:
            break
        num, dots, name, ch = m.groups()
        if num is not None:
            out.append(("num", int(num)))
        elif dots is not None:
            out.append(("op", ".."))
        elif name is not None:
            out.append(("name", name))
        elif ch is not None and not ch.isspace():
            out.append(("op", ch))
        pos = m.end()
    out.append(("end", None))
    return out


class _CoefParser:
    """expr := term {(+|-) term}; term := factor {(*|/) factor};
    factor := [-] atom [^ int]; atom := int | n | prod(a .. b [by s]) | (expr)."""

    def __init__(self, text: str, var: str = "n"):
        self.toks = _tokens(text)
        self.i = 0
        self.var = var
        self.text = text

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, val=None):
        t = self.toks[self.i]
        if (kind and t[0] != kind) or (val is not None and t[1] != val):
            raise SyntaxError(f"bad coefficient {self.text!r}: expected {val or kind}, got {t[1]!r}")
        self.i += 1
        return t

    def parse(self):
        v = self.expr()
        if self.peek()[0] != "end":
            raise SyntaxError(f"trailing input in coefficient {self.text!r}")
        return v

    def expr(self):
        v = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            w = self.term()
            v = _lift_add(v, w, op)
        return v

    def term(self):
        v = self.factor()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            w = self.factor()
            v = _lift_mul(v, w, op)
        return v

    def factor(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.factor()
        v = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            k = self.take("num")[1]
            if isinstance(v, DimRatio):
                v = v ** k
            else:
                out = ProdRatio.of(1)
                for _ in range(k):
                    out = out * v
                v = out.simplify()
        return v

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return DimRatio.of(val, self.var)
        if kind == "name" and val == self.var:
            self.take()
            return DimRatio.n(self.var)
        if kind == "name" and val == "prod":
            self.take()
            self.take("op", "(")
            a = self.expr()
            self.take("op", "..")
            b = self.expr()
            step = 1
            if self.peek() == ("name", "by"):
                self.take()
                step = self.take("num")[1]
            self.take("op", ")")
            pa, pb = _lin_of(a), _lin_of(b)
            return as_coef(falling_product(pa, pb, step))
        if (kind, val) == ("op", "("):
            self.take()
            v = self.expr()
            self.take("op", ")")
            return v
        raise SyntaxError(f"bad coefficient {self.text!r} near {val!r}")


def _lin_of(v) -> DimPoly:
    if isinstance(v, DimRatio) and v.den.degree == 0 and v.num.degree <= 1:
        return DimPoly(tuple(c / v.den.lead for c in v.num.coeffs), v.var)
    raise SyntaxError(f"range bound {v} is not linear")


def _lift_add(a, b, op):
    if isinstance(a, DimRatio) and isinstance(b, DimRatio):
        return a + b if op == "+" else a - b
    a, b = ProdRatio.of(a), ProdRatio.of(b)
    return (a + b if op == "+" else a - b)


def _lift_mul(a, b, op):
    if isinstance(a, DimRatio) and isinstance(b, DimRatio):
        return a * b if op == "*" else a / b
    a = ProdRatio.of(a)
    return (a * b if op == "*" else a / b)


def parse_coef(text: str, var: str = "n") -> Coef:
    """Parse a coefficient string such as ``1/(3-n)`` or ``4 / prod(n-3 .. 4)``."""
    return _CoefParser(text, var).parse()
