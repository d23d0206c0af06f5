from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tcalc.ambient import obstruction_product
from tcalc.ratcoef import (DimPoly, DimRatio, PoleError, RangeProduct, as_coef, binom, eval_at,
                           falling_product, parse_coef, positive_for_all_n_geq)

n = DimRatio.n()
small = st.integers(-6, 6)
polys = st.lists(small, min_size=1, max_size=4).map(lambda cs: DimPoly(tuple(Fraction(c) for c in cs)))


def test_unit_step_product_of_length_three():
    # (n-2)(n-3)(n-4) at n=10 is 8*7*6
    p = falling_product(DimPoly.linear(1, -2), DimPoly.linear(1, -4))
    assert p(10) == 336


def test_unit_step_range_with_n_dependent_length():
    rp = RangeProduct(DimPoly.linear(1, 0), DimPoly.const(1))
    assert rp.eval_at(7) == 5040
    assert not rp.fixed_length()


def test_obstruction_product_values():
    assert obstruction_product(0)(10) == 1
    assert obstruction_product(1)(10) == 7
    assert obstruction_product(3)(10) == 7 * 6 * 4
    assert obstruction_product(3)(12) == 9 * 8 * 6


def test_malformed_range():
    with pytest.raises(ValueError):
        RangeProduct(DimPoly.const(2), DimPoly.const(5))


@given(polys, polys, st.integers(-20, 20))
def test_poly_ring_laws(p, q, x):
    assert (p * q)(x) == p(x) * q(x)
    assert (p + q)(x) == p(x) + q(x)
    assert (p - p).is_zero()


@given(polys, polys.filter(lambda q: not q.is_zero()))
def test_poly_divmod(p, q):
    d, r = p.divmod(q)
    assert (d * q + r - p).is_zero()
    assert r.is_zero() or r.degree < q.degree


def test_ratio_normalizes():
    r = (n * n - 1) / (n - 1)
    assert r == n + 1
    assert str(DimRatio.of(1) / (3 - n)) == "1/(3-n)"


def test_pole():
    r = 1 / (n - 4)
    with pytest.raises(PoleError):
        r.eval_at(4)
    assert r.eval_at(6) == Fraction(1, 2)


@given(st.integers(-5, 5), st.integers(1, 5), st.integers(-5, 5), st.integers(1, 5), st.integers(7, 40))
def test_ratio_field_ops_match_evaluation(a, b, c, d, x):
    r = (a * n + b) / (n - 3)
    s = (c * n - d) / (n + d)
    assert (r * s).eval_at(x) == r.eval_at(x) * s.eval_at(x)
    assert (r + s).eval_at(x) == r.eval_at(x) + s.eval_at(x)
    if s.eval_at(x) != 0 and not s.is_zero():
        assert (r / s).eval_at(x) == r.eval_at(x) / s.eval_at(x)


def test_positivity():
    assert positive_for_all_n_geq((n - 3) / (n - 2), 4)
    assert not positive_for_all_n_geq(n - 11, 10)
    z = positive_for_all_n_geq(n - n, 4)
    assert not z and z.identically_zero
    assert positive_for_all_n_geq(2 * (n - 4) / ((n - 3) * (n - 4) * (n - 6)), 10)


def test_parse_coef():
    assert eval_at(parse_coef("1/(n-3)"), 8) == Fraction(1, 5)
    assert eval_at(parse_coef("-(n-2)^2/4"), 6) == -4
    assert eval_at(parse_coef("prod(n-2 .. 4 by 2)"), 10) == 8 * 6 * 4


def test_binom():
    assert binom(6, 2) == 15
    assert binom(3, 5) == 0
    assert binom(3, -1) == 0


def test_as_coef_and_eval_at():
    assert as_coef(3).eval_at(9) == 3
    assert eval_at(Fraction(1, 3), 4) == Fraction(1, 3)
