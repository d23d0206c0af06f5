import pytest
from hypothesis import given, settings, strategies as st

from strategies import contractions, move_factor_order, symmetry_moves
from tcalc.expr import (Contraction, Factor, Kind, LinComb, Stats, canonical, canonicalize,
                        free_index_divergence, product, stats, substitute)
from tcalc.textio import parse


def one(text):
    (_, c), = parse(text).terms
    return c


@pytest.mark.parametrize("text, expected", [
    ("contr(W[i,j,k,l] W[i,j,k,l])", Stats(2, 0, 0, 0, -4)),
    ("contr(D[i,i] psi1 D[j,j] psi2)", Stats(2, 2, 2, 0, -4)),
    ("contr(Ric[i,i] R)", Stats(2, 4, 1, 2, -4)),
    ("contr(D[a,b] Ric[a,b] R)", Stats(2, 5, 1, 2, -6)),
])
def test_stats(text, expected):
    assert stats(one(text)) == expected


def test_metric_does_not_count_as_a_factor():
    assert stats(one("contr(D[a] psi1 D[b] psi2 g[a,b])")).sigma == 2


def test_riemann_signs():
    a = canonical(one("contr(Rm[i,j,k,l] Rm[i,j,k,l])"))
    b = canonical(one("contr(Rm[j,i,k,l] Rm[i,j,k,l])"))
    assert a[1] == b[1] and a[0] == -b[0]
    assert canonicalize(one("contr(Rm[i,j,j,i])"))[0] == -1
    assert canonicalize(one("contr(Rm[i,i,j,k] Ric[j,k])"))[0] == 0


def test_derivative_blocks_are_symmetric():
    a = one("contr(D[a,b] psi1 D[a,c] psi2 D[b,c] psi3)")
    b = one("contr(D[b,a] psi1 D[c,a] psi2 D[c,b] psi3)")
    assert canonical(a)[1] == canonical(b)[1]


def test_metric_trace_gives_n():
    coef, _, _ = canonical(one("contr(g[a,a] R)"))
    assert coef.eval_at(7) == 7


def test_weyl_is_trace_free():
    assert parse("contr(W[i,i,k,l] Ric[k,l])").is_zero()
    assert parse("contr(D[a] W[i,j,k,i] D[a] Ric[j,k])").is_zero()


@settings(max_examples=200)
@given(st.data())
def test_factor_order_irrelevant(data):
    c = data.draw(contractions(max_len=3))
    perm = data.draw(st.permutations(range(len(c.factors))))
    assert canonical(c)[1] == canonical(move_factor_order(c, perm))[1]


@settings(max_examples=200)
@given(st.data())
def test_canonical_form_is_a_fixpoint(data):
    c = data.draw(contractions(max_len=3))
    coef, key, can = canonical(c)
    if key is None:
        return
    coef2, key2, can2 = canonical(can)
    assert key2 == key and can2 == can
    assert coef2.is_const() and coef2.const_value() == 1


@settings(max_examples=200)
@given(st.data())
def test_collect_is_invariant_under_moves(data):
    c = data.draw(contractions(max_len=3))
    moved, sign = data.draw(symmetry_moves(c, 3))
    assert (LinComb.of(c) - LinComb.of(moved, sign)).is_zero()


def test_product_and_slots():
    a = one("contr(D[a] psi1 D[a] psi2)")
    p = product(a, a)
    assert len(p.factors) == 4 and len(p.pairs) == 2


def test_invalid_contraction_rejected():
    f = Factor(Kind.RICCI)
    with pytest.raises(ValueError):
        Contraction((f,), (((0, 0), (0, 0)),))
    with pytest.raises(ValueError):
        Contraction((f,), ())
    with pytest.raises(ValueError):
        Factor(Kind.METRIC, 1)


def test_free_index_divergence_is_leibniz():
    (_, v), = parse("contr(D[a] psi1 psi2)").terms
    lc = free_index_divergence(v)
    assert (lc - parse("contr(D[a,a] psi1 psi2) + contr(D[a] psi1 D[a] psi2)")).is_zero()
    with pytest.raises(ValueError):
        free_index_divergence(one("contr(R)"))


def test_substitute_single_factor():
    c = one("contr(P[a,b] P[a,b])")
    piece = one("contr(Ric[x,y])")
    out = substitute(c, 0, piece)
    assert (LinComb.of(out) - parse("contr(Ric[a,b] P[a,b])")).is_zero()
