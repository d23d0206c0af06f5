from fractions import Fraction

import pytest

from tcalc.ambient import (AmbientConfig, AmbientError, AmbientIndexClass as I, Pattern,
                           brute_force_leibniz_counts, closed_form_net_constant, d_infinity_curvature,
                           d_infinity_metric, expand_laplacian_power, leibniz_expand_norm_squared,
                           obstruction_product, reduce_to_canonical_quadratic, sweep,
                           verify_ambient_constant, yrow_identity)
from tcalc.ambient import _counts
from tcalc.textio import parse


def test_metric_components():
    assert (d_infinity_metric([I.BASE, I.BASE], 1) - parse("-2*contr(P[a,b])")).is_zero()
    assert (d_infinity_metric([I.ZERO, I.ZERO], 1, raised=False)).terms[0][0].eval_at(6) == 2
    assert d_infinity_metric([I.BASE, I.ZERO], 3).is_zero()
    second = d_infinity_metric([I.BASE, I.BASE], 2, raised=False).at(10)
    # 2/(4-n) (Lap P - D D J) at leading length
    want = parse("-1/3*contr(D[c,c] P[a,b]) + 1/3*contr(D[a,b] P[c,c])")
    assert (second - want).is_zero()
    with pytest.raises(AmbientError):
        d_infinity_metric([I.BASE, I.BASE], 0)


def test_curvature_components():
    c = d_infinity_curvature(Pattern.BASE_BBBB, 0)
    assert (c.value - parse("contr(W[i,j,k,l])")).is_zero() and c.remainder is None
    c = d_infinity_curvature(Pattern.INF_BBB, 0, 10)
    assert c.coef.eval_at(10) == Fraction(-1, 7)
    c = d_infinity_curvature(Pattern.INF_BB_INF, 1, 10)
    assert c.coef.eval_at(10) == Fraction(-1, 7 * 6 * 4)
    with pytest.raises(AmbientError):
        d_infinity_curvature(Pattern.INF_BB_INF, 2, 10)


def test_obstruction_product_rejects_negative():
    with pytest.raises(AmbientError):
        obstruction_product(-1)


def test_laplacian_expansion():
    e = expand_laplacian_power(-4, 1)
    assert e.factors[0](10) == 2 and e.factors[0](8) == 0  # n - 8
    assert expand_laplacian_power(-4, 0, 10).leading == 1
    assert expand_laplacian_power(-4, 3, 10).factors == (-6, -4, -2)
    with pytest.raises(AmbientError):
        expand_laplacian_power(-4, 1, 8)
    with pytest.raises(AmbientError):
        expand_laplacian_power(-4, -1)


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_leibniz_counts_brute_force(N):
    assert brute_force_leibniz_counts(N) == dict(_counts(N))


def test_leibniz_bookkeeping():
    x = leibniz_expand_norm_squared(10)
    assert x.cubic == {"sequences": 216, "leading": 104, "discarded": 112}
    assert x.third_multiplicity["recount"] == 96
    assert x.third_multiplicity["recount"] * x.third_multiplicity["reduction_factor"] == \
        x.third_multiplicity["display_reduced"]
    assert [t.count for t in x.block("second")] == [12, 24, 12]
    # every block entry is its displayed term plus a remainder of the same length
    assert all(len(t.value.terms) >= 1 for t in x.terms)


@pytest.mark.parametrize("n", [10, 12, 14, 16, 18, 20, 22, 30])
def test_yrow_identity_is_zero(n):
    assert yrow_identity(n).is_zero()


def test_rows_at_n10():
    r = reduce_to_canonical_quadratic(10)
    assert r.certificates_ok
    assert r.leftover == r.leftover_expected == Fraction(1, 42)
    assert r.yrow_values[0] == 0
    # the last row has no third-sum partner; its value is part of the net constant
    assert r.yrow_values[1] == Fraction(-2, 147)
    assert r.net == Fraction(1, 98) == r.independent_sum == closed_form_net_constant(10)


@pytest.mark.parametrize("n, net", [
    (10, Fraction(1, 98)), (12, Fraction(1, 972)), (14, Fraction(1, 11616)),
    (16, Fraction(1, 162240)), (18, Fraction(1, 2592000)), (20, Fraction(1, 46609920)),
])
def test_net_constant_closed(n, net):
    # [DERIVED] frozen from the full reduction at n = 10, 12 and the independent sum
    r = reduce_to_canonical_quadratic(n, AmbientConfig("closed"))
    assert r.net == net == r.independent_sum == closed_form_net_constant(n)
    assert all(v == 0 for y, v in r.yrow_values.items() if y < n // 2 - 4)


def test_reduce_and_closed_multipliers_agree():
    a = reduce_to_canonical_quadratic(12)
    b = reduce_to_canonical_quadratic(12, AmbientConfig("closed"))
    assert a.blocks == b.blocks


def test_verify_and_sweep():
    v = verify_ambient_constant(10)
    assert v["status"] == "PASS" and v["constant"] == "-24/49" and v["sign_consistent"]
    out = sweep([14, 10], AmbientConfig("closed"))
    assert [r["n"] for r in out] == [10, 14]
    assert all(r["reduction"]["positive"] for r in out)


def test_odd_dimension_rejected():
    with pytest.raises(AmbientError):
        leibniz_expand_norm_squared(11)
    with pytest.raises(AmbientError):
        reduce_to_canonical_quadratic(11)
