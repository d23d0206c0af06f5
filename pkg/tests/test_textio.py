import pytest
from hypothesis import given, settings

from strategies import contractions
from tcalc.expr import LinComb
from tcalc.textio import TcSyntaxError, format_contraction, format_lincomb, parse, parse_file


@settings(max_examples=500)
@given(contractions(max_len=3, max_m=3))
def test_round_trip(c):
    text = format_contraction(c)
    back = parse(text)
    assert len(back.terms) == 1
    assert (back - LinComb.of(c)).is_zero()
    assert format_lincomb(parse(format_lincomb(back))) == format_lincomb(back)


@settings(max_examples=100)
@given(contractions(max_len=2, max_m=2, free=2))
def test_round_trip_with_free_indices(c):
    back = parse(format_contraction(c))
    assert (back - LinComb.of(c)).is_zero()


def test_zero():
    assert parse("0").terms == ()
    assert format_lincomb(parse("0")) == "0"
    assert format_lincomb(parse("contr(R) - contr(R)")) == "0"


def test_canonical_printing_merges():
    assert format_lincomb(parse("3*contr(R) - contr(R)")) == "2 * contr(R)"
    assert format_lincomb(parse("contr(Rm[i,j,j,i])")) == "- contr(R)"
    assert format_lincomb(parse("contr(W[i,i,k,l])")) == "0"


def test_sugar():
    a = parse("contr(Lap^[2] psi1 psi2)")
    b = parse("contr(D[a,a,b,b] psi1 psi2)")
    assert (a - b).is_zero()
    c = parse("contr(D^[n/2-3][r] R D^[n/2-3][r] R)", 10)
    assert (c - parse("contr(D[a,b] R D[a,b] R)")).is_zero()


@pytest.mark.parametrize("bad", [
    "contr(W[i,j,k])", "contr(Q)", "contr(R", "contr(psi1[i])", "contr(R) +", "2 ** contr(R)",
    "contr(D[i,i,i] R)",
])
def test_syntax_errors(bad):
    with pytest.raises(TcSyntaxError):
        parse(bad)


def test_n_dependent_sugar_needs_n():
    with pytest.raises(TcSyntaxError):
        parse("contr(Lap^[n/2] R)")


def test_parse_file():
    text = "# comment\nn := 10\ncontr(Lap^[n/2-1] R)\n\ncontr(R R)\n"
    st = parse_file(text)
    assert len(st) == 2
    assert st[0].n == 10
