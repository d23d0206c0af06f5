from fractions import Fraction

from hypothesis import given, settings, strategies as st

from oracles import frequencies, lincomb_symbol
from strategies import contractions
from tcalc.divergence import eliminate_internal_contractions
from tcalc.expr import Kind, free_index_divergence
from tcalc.textio import parse


def test_symbol_of_gradient_pairing():
    # D_a psi1 D_a psi2 has symbol xi1.xi2 = -|xi1|^2 on the constraint
    lc = parse("contr(D[a] psi1 D[a] psi2)")
    v = frequencies([1, 2], 4, 0)
    assert lincomb_symbol(lc, 4, v) == -sum(x * x for x in v[1])


def test_metric_loop_counts_dimension():
    lc = parse("contr(g[a,b] g[a,b] psi1 psi2)")
    assert lincomb_symbol(lc, 7, frequencies([1, 2], 7, 1)) == 7


@settings(max_examples=60)
@given(contractions(min_len=2, max_len=3, max_m=3, kinds=[Kind.PSI], free=1, distinct_psi=True))
def test_divergences_have_vanishing_symbol(v):
    div = free_index_divergence(v)
    labels = sorted({f.label for f in v.factors})
    for seed in range(3):
        assert lincomb_symbol(div, 6, frequencies(labels, 6, seed)) == 0


@settings(max_examples=60)
@given(contractions(min_len=2, max_len=3, max_m=4, kinds=[Kind.PSI], distinct_psi=True))
def test_elimination_agrees_with_fourier_oracle(c):
    cert = eliminate_internal_contractions(c)
    labels = sorted({f.label for f in c.factors})
    for seed in range(3):
        v = frequencies(labels, 5, seed)
        assert lincomb_symbol(cert.input, 5, v) == lincomb_symbol(cert.remainder, 5, v)
    assert cert.corrections.is_zero()
