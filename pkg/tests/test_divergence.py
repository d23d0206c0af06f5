import json
from fractions import Fraction

import pytest

from tcalc.divergence import (DivCertificate, DivergenceError, Predicate, classify_quadratic,
                              decompose_weyl_divergence, eliminate_internal_contractions, ibp_step,
                              reduce_quadratic_weyl, relate_mod_divergence, select_sublinear,
                              silly_integrate_by_parts, silly_spec)
from tcalc.expr import GradePolicy, Kind, LinComb, stats
from tcalc.numeval import graded_coefficient, make_random_jet
from tcalc.textio import parse


def one(text, n=None):
    (_, c), = parse(text, n).terms
    return c


def canon(text, n=None):
    (_, c), = parse(text, n).collect().terms
    return c


def test_laplacian_pairing_integrates_to_gradient_norm():
    # Lap psi1 psi2 = - D psi1 . D psi2 + div
    cert = eliminate_internal_contractions(one("contr(D[a,a] psi1 psi2)"))
    assert (cert.remainder - parse("-contr(D[a] psi1 D[a] psi2)")).is_zero()
    assert cert.check()
    assert len(cert.steps) == 1


def test_certificate_json_round_trip():
    cert = eliminate_internal_contractions(one("contr(D[a,a,b] psi1 D[b] R)"))
    d = json.loads(cert.dumps())
    back = DivCertificate.from_json(d)
    assert back.check(8)
    assert (back.residual() - cert.residual()).is_zero()


def test_certificate_with_curvature_is_checked_numerically():
    c = one("contr(D[a,a] Ric[b,c] D[b,c] R)")
    cert = eliminate_internal_contractions(c)
    assert cert.check(8)
    jet = make_random_jet(8, 6, seed=2, min_degree=1, sparse=1)
    assert cert.check_numeric(jet)
    assert all(stats(t).delta == 2 or stats(t).deltabar >= 0 for _, t in cert.remainder)


def test_tracked_corrections_are_longer():
    pol = GradePolicy(mode="track")
    cert = eliminate_internal_contractions(one("contr(D[a,b,a] R D[b] psi1)"), pol)
    assert all(stats(t).sigma > cert.sigma for _, t in cert.corrections)
    assert cert.check(6)


def test_a_wrong_certificate_is_rejected():
    cert = eliminate_internal_contractions(one("contr(D[a,a] psi1 psi2)"))
    cert.remainder = cert.remainder.scale(2)
    assert not cert.check()
    cert2 = eliminate_internal_contractions(one("contr(D[a,a] psi1 psi2)"))
    cert2.assume("generic family")
    assert not cert2.check()


def test_schouten_trace_without_derivative_is_stuck():
    cert = eliminate_internal_contractions(one("contr(P[a,a] P[b,b])"))
    assert cert.stuck


@pytest.mark.parametrize("name, text", [
    ("weyl_dd", "contr(W[i,j,k,l] Lap^[n/2-3] D[i,t] W[t,j,k,l])"),
    ("divdiv_pair", "contr(Lap^[1] D[s,t] W[s,j,t,l] D[u,v] W[u,j,v,l])"),
    ("div_pair", "contr(Lap^[2] D[s] W[s,j,k,l] D[t] W[t,j,k,l])"),
    ("graddiv_pair", "contr(D[a,s] W[s,j,k,l] Lap^[1] D[a,t] W[t,j,k,l])"),
    ("crossed", "contr(D[p,a] W[a,b,c,d] Lap^[1] D[b,q] W[q,p,c,d])"),
])
def test_classify(name, text):
    assert classify_quadratic(one(text, 10)) == name


def test_classify_rejects():
    with pytest.raises(DivergenceError):
        classify_quadratic(one("contr(R R)"))


@pytest.mark.parametrize("n", [10, 12])
def test_div_pair_multiplier(n):
    c = one("contr(D[s] W[s,j,k,l] Lap^[n/2-3] D[t] W[t,j,k,l])", n)
    cert, tgt = reduce_quadratic_weyl(c, n)
    assert cert.check(n)
    assert tgt.terms[0][0].eval_at(n) == (-1) ** (n // 2 - 1)


def test_relate_mod_divergence_moves_laplacians():
    # Lap^2 A . B = D D A . D D B modulo divergences and longer terms
    a = one("contr(Lap^[2] D[s] W[s,j,k,l] D[t] W[t,j,k,l])")
    b = one("contr(D[p,q,s] W[s,j,k,l] D[p,q,t] W[t,j,k,l])")
    cert, lam = relate_mod_divergence(a, b, 10)
    assert Fraction(lam.eval_at(10) if hasattr(lam, "eval_at") else lam) == 1
    assert cert.check(10)


@pytest.mark.parametrize("g", [0, 1, 2])
def test_silly_multiplicity(g):
    src = parse(f"contr(Lap^[1] D[i,l] W[i,j,k,l] D[a,b] W[a,j,k,b] Lap^[{g + 1}] psi1 Lap^[1] psi2)")
    tgt = canon(f"contr(D^[{g + 1}][t] Lap^[1] D[i,l] W[i,j,k,l] D^[{g + 1}][t] D[a,b] W[a,j,k,b] psi1 Lap^[1] psi2)")
    out = silly_integrate_by_parts(src, 1).collect()
    got = sum((a.eval_at(10) for a, c in out if c == tgt), Fraction(0))
    assert got == 2 ** (g + 1)
    # every derivative left psi1
    assert all(f.m == 0 for _, c in out for f in c.factors if f.kind is Kind.PSI and f.label == 1)


def test_silly_is_exact_in_flat_space():
    src = parse("contr(D[a,a,b] psi1 D[b] psi2 D[c,c] psi3)")
    out = silly_integrate_by_parts(src, 1)
    from oracles import frequencies, lincomb_symbol
    v = frequencies([1, 2, 3], 5, 3)
    assert lincomb_symbol(src, 5, v) == lincomb_symbol(out, 5, v)


def test_silly_needs_one_labelled_factor():
    with pytest.raises(DivergenceError):
        silly_integrate_by_parts(parse("contr(D[a] psi1 D[a] psi1)"), 1)


def test_decompose_weyl_divergence_numerically():
    c = one("contr(D[i,l] W[i,j,k,l] D[j,k] psi1)")
    out = decompose_weyl_divergence(c, 0)
    n = 6
    for s in range(3):
        jet = make_random_jet(n, 6, seed=s, min_degree=1)
        assert graded_coefficient(LinComb.of(c) - out, jet, 2) == 0
    with pytest.raises(DivergenceError):
        decompose_weyl_divergence(one("contr(W[a,b,c,d] W[a,b,c,d])"), 0)


@pytest.mark.parametrize("n, g, want", [
    (10, 0, Fraction(7, 4)), (10, 1, Fraction(7, 2)), (10, 2, Fraction(7)),
    (12, 0, Fraction(9, 5)), (12, 1, Fraction(18, 5)), (12, 2, Fraction(36, 5)),
])
def test_silly_spec_coefficients(n, g, want):
    # [DERIVED] 2^(g+1) (n-3)/(n-2), frozen from the independent decomposition
    src = parse(f"contr(Lap^[1] D[i,l] W[i,j,k,l] D[a,b] W[a,j,k,b] Lap^[{g + 1}] psi1 Lap^[1] psi2)")
    tgt = canon(f"contr(D^[{g + 1}][t] Lap^[1] D[i,l] Rm[i,j,k,l] D^[{g + 1}][t] D[a,b] W[a,j,k,b] psi1 Lap^[1] psi2)")
    out = silly_spec(src, 1).at(n).collect()
    got = sum((a.eval_at(n) for a, c in out if c == tgt), Fraction(0))
    assert got == want


def test_select_sublinear():
    lc = parse("contr(R R) + 2*contr(W[a,b,c,d] W[a,b,c,d]) + contr(D[a,a] R psi1)")
    p = Predicate.factor_count(Kind.WEYL, ">=", 1)
    assert len(select_sublinear(lc, p).terms) == 1
    q = Predicate.stat("sigma", "==", 2) & ~p
    assert len(select_sublinear(lc, q).terms) == 2
    assert len(select_sublinear(lc, Predicate.stat("delta", ">=", lambda s: s.sigma)).terms) == 2
