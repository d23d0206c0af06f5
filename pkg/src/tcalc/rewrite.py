"""Curvature identities as rewrite rules, and a leading-length normal form.

Every rule acts on one factor of a :class:`Contraction` and returns a
:class:`LinComb`.  Templates are written in the ``.tc`` grammar with the
free indices standing, in order, for the slots of the rewritten factor, so
the ruleset can be dumped with :func:`manifest` and diffed.

Conventions (checked against :mod:`tcalc.numeval`):

* ``R(e_i, e_j) e_l = R_ijl^m e_m`` and ``R_ijkl = g_km R_ijl^m``; the round
  sphere has ``R_ijij > 0``.
* ``Ric_jl = R_ijil``, ``P = (Ric - J g)/(n-2)``, ``J = R/(2(n-1))``.
* ``[D_a, D_b] X_..l.. = - R_abkl X_..k..`` for each index of ``X``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

from .expr import (Contraction, Factor, GradePolicy, Kind, LinComb, canonical,
                   stats, substitute)
from .ratcoef import DimRatio, as_coef

__all__ = [
    "RewriteRule", "RULES", "RewriteError", "NormalizeError",
    "weyl_decompose", "schouten_to_ricci", "ricci_to_schouten", "scalar_to_schouten",
    "cotton_identity", "contracted_bianchi", "commute_derivatives",
    "fake_second_bianchi", "first_bianchi", "apply_rule",
    "linearize", "leading_reduce", "normalize", "manifest", "DEFAULT_RULES",
]


class RewriteError(ValueError):
    pass


class NormalizeError(RuntimeError):
    def __init__(self, msg, trace=()):
        super().__init__(msg)
        self.trace = list(trace)


# ---------------------------------------------------------------- templates

def slot_names(k: int) -> list:
    """Index names that the parser orders exactly as listed."""
    return [f"x{chr(97 + i // 26)}{chr(97 + i % 26)}" for i in range(k)]


@lru_cache(maxsize=None)
def _template(text: str) -> LinComb:
    from .textio import parse
    return parse(text)


def _d(names) -> str:
    return f"D[{','.join(names)}] " if names else ""


def _splice(c: Contraction, fi: int, piece: LinComb, coef=1) -> LinComb:
    k = as_coef(coef)
    return LinComb([(k * a, substitute(c, fi, p)) for a, p in piece])


def weyl_text(m: int) -> str:
    x = slot_names(m + 4)
    d, (i, j, k, l) = _d(x[:m]), x[m:]
    return (f"contr({d}Rm[{i},{j},{k},{l}])"
            f" - contr({d}P[{i},{k}] g[{j},{l}]) - contr({d}P[{j},{l}] g[{i},{k}])"
            f" + contr({d}P[{i},{l}] g[{j},{k}]) + contr({d}P[{j},{k}] g[{i},{l}])")


def schouten_text(m: int) -> str:
    x = slot_names(m + 2)
    d, (a, b) = _d(x[:m]), x[m:]
    return f"1/(n-2) * contr({d}Ric[{a},{b}]) - 1/(2*(n-1)*(n-2)) * contr({d}R g[{a},{b}])"


def ricci_to_schouten_text(m: int) -> str:
    x = slot_names(m + 2)
    d, (a, b) = _d(x[:m]), x[m:]
    return f"(n-2) * contr({d}P[{a},{b}]) + contr({d}P[s,s] g[{a},{b}])"


def scalar_text(m: int) -> str:
    return f"(2*n-2) * contr({_d(slot_names(m))}P[s,s])"


def cotton_text(m: int) -> str:
    # m >= 1 derivatives on P; the last one and the first intrinsic slot swap
    x = slot_names(m + 2)
    r, (c, a, b) = x[:m - 1], x[m - 1:]
    return (f"contr({_d(r + [a])}P[{c},{b}])"
            f" + 1/(3-n) * contr({_d(r + ['s'])}W[{c},{a},{b},s])")


def contracted_bianchi_text(m: int, inverse: bool = False) -> str:
    x = slot_names(m + (0 if inverse else 2))
    if inverse:  # D_r.. D_a P_ac with the inner derivative traced into slot 1
        r, c = x[:m - 1], x[m - 1]
        return f"contr({_d(r + [c])}P[s,s])"
    r, c = x[:m - 1], x[m - 1]
    return f"contr({_d(r + ['s'])}P[s,{c}])"


def fake_bianchi_text(m: int) -> str:
    x = slot_names(m + 4)
    r, (a, b, c, d, e) = x[:m - 1], x[m - 1:]
    k = "1/(3-n)"

    def dw(p, q, s):
        return f"contr({_d(r + ['s'])}W[{p},{q},{s},s]"

    def g(u, v):
        return f" g[{u},{v}])"

    return (f"- contr({_d(r + [b])}W[{c},{a},{d},{e}]) - contr({_d(r + [c])}W[{a},{b},{d},{e}])"
            f" - {k} * {dw(a, b, d)}{g(c, e)} - {k} * {dw(a, c, e)}{g(b, d)}"
            f" + {k} * {dw(a, b, e)}{g(c, d)} + {k} * {dw(a, c, d)}{g(b, e)}"
            f" - {k} * {dw(b, c, d)}{g(a, e)} + {k} * {dw(b, c, e)}{g(a, d)}")


def first_bianchi_text(m: int) -> str:
    x = slot_names(m + 4)
    d, (i, j, k, l) = _d(x[:m]), x[m:]
    return f"- contr({d}Rm[{i},{k},{l},{j}]) - contr({d}Rm[{i},{l},{j},{k}])"


# pieces used only by the linearisation
def _riemann_lin_text(m: int) -> str:
    x = slot_names(m + 4)
    d, (i, j, k, l) = x[:m], x[m:]
    return (f"1/2 * contr({_d(d + [j, k])}h[{i},{l}]) + 1/2 * contr({_d(d + [i, l])}h[{j},{k}])"
            f" - 1/2 * contr({_d(d + [i, k])}h[{j},{l}]) - 1/2 * contr({_d(d + [j, l])}h[{i},{k}])")


def _ricci_text(m: int) -> str:
    x = slot_names(m + 2)
    return f"contr({_d(x[:m])}Rm[s,{x[m]},s,{x[m + 1]}])"


def _scalar_ricci_text(m: int) -> str:
    return f"contr({_d(slot_names(m))}Ric[s,s])"


# ---------------------------------------------------------------- rules

@dataclass(frozen=True)
class RewriteRule:
    """A named local transformation of one factor."""
    name: str
    kinds: tuple
    length_delta: int
    directed: bool
    fn: Callable = field(compare=False, repr=False)
    template: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __call__(self, c, at, **kw):
        return apply_rule(self, c, at, **kw)


def _check_kind(c: Contraction, at: int, kinds, name: str) -> Factor:
    if not 0 <= at < len(c.factors):
        raise RewriteError(f"{name}: no factor at position {at}")
    f = c.factors[at]
    if f.kind not in kinds:
        raise RewriteError(f"{name}: factor {at} is {f.kind.value}, expected "
                           + "/".join(k.value for k in kinds))
    return f


def _weyl(c, at):
    f = _check_kind(c, at, (Kind.WEYL,), "weyl_decompose")
    return _splice(c, at, _template(weyl_text(f.m)))


def _schouten(c, at):
    f = _check_kind(c, at, (Kind.SCHOUTEN,), "schouten_to_ricci")
    return _splice(c, at, _template(schouten_text(f.m)))


def _ricci_inv(c, at):
    f = _check_kind(c, at, (Kind.RICCI,), "ricci_to_schouten")
    return _splice(c, at, _template(ricci_to_schouten_text(f.m)))


def _scalar_inv(c, at):
    f = _check_kind(c, at, (Kind.SCALAR,), "scalar_to_schouten")
    return _splice(c, at, _template(scalar_text(f.m)))


def _cotton(c, at, slots=None):
    f = _check_kind(c, at, (Kind.SCHOUTEN,), "cotton_identity")
    if f.m == 0:
        raise RewriteError("cotton_identity: factor has no derivative slot")
    slots = (f.m - 1, f.m) if slots is None else tuple(slots)
    if slots == (f.m - 1, f.m + 1):
        # P is symmetric: read the second intrinsic slot as the first
        c = _swap_intrinsic(c, at, (f.m, f.m + 1))
    elif slots != (f.m - 1, f.m):
        raise RewriteError(f"cotton_identity: slots {slots} are not (last derivative, intrinsic)")
    return _splice(c, at, _template(cotton_text(f.m)))


def _swap_intrinsic(c: Contraction, at: int, pair) -> Contraction:
    f = c.factors[at]
    order = list(range(f.nslots))
    order[pair[0]], order[pair[1]] = order[pair[1]], order[pair[0]]
    piece = Contraction((f,), (), tuple((0, s) for s in order))
    return substitute(c, at, piece)


def _rewire(c: Contraction, at: int, newf: Factor, mapping: dict, internal=()) -> Contraction:
    """Replace factor ``at`` by ``newf``.  ``mapping`` sends old slots to new
    ones; old slots mapped to None must be paired with each other and vanish.
    ``internal`` lists new pairs inside the new factor."""
    def mp(s):
        return (at, mapping[s[1]]) if s[0] == at else s
    pairs = []
    for a, b in c.pairs:
        if a[0] == at and b[0] == at and mapping[a[1]] is None and mapping[b[1]] is None:
            continue
        pairs.append((mp(a), mp(b)))
    pairs += [((at, x), (at, y)) for x, y in internal]
    factors = c.factors[:at] + (newf,) + c.factors[at + 1:]
    return Contraction(factors, tuple(pairs), tuple(mp(s) for s in c.free))


def _contracted_bianchi(c, at, inverse=False):
    f = _check_kind(c, at, (Kind.SCHOUTEN,), "contracted_bianchi")
    m = f.m
    if inverse:
        inner = c.partner.get((at, m - 1)) if m else None
        if inner not in ((at, m), (at, m + 1)):
            raise RewriteError("contracted_bianchi: inner derivative is not traced into P")
        other = m + 1 if inner == (at, m) else m
        mapping = {s: s for s in range(m - 1)}
        mapping.update({m - 1: None, inner[1]: None, other: m - 1})
        return LinComb.of(_rewire(c, at, f, mapping, [(m, m + 1)]))
    if c.partner.get((at, m)) != (at, m + 1):
        raise RewriteError("contracted_bianchi: intrinsic slots of P are not contracted together")
    if m == 0:
        raise RewriteError("contracted_bianchi: no derivative to move the trace onto")
    mapping = {s: s for s in range(m - 1)}
    mapping.update({m - 1: m + 1, m: None, m + 1: None})
    return LinComb.of(_rewire(c, at, f, mapping, [(m - 1, m)]))


def _perm_piece(f: Factor, order) -> Contraction:
    return Contraction((f,), (), tuple((0, s) for s in order))


def _commute_adjacent(c: Contraction, at: int, p: int, want_corr: bool):
    """Swap derivative slots p, p+1 of factor ``at``; returns (main, corrections)."""
    f = c.factors[at]
    order = list(range(f.nslots))
    order[p], order[p + 1] = p + 1, p
    main = substitute(c, at, _perm_piece(f, order))
    if not want_corr:
        return main, []
    corr = []
    ysl = list(range(p + 2, f.nslots))
    for xq in ysl:
        for k in range(p + 1):
            for S in itertools.combinations(range(p), k):
                Sc = [i for i in range(p) if i not in S]
                rm = Factor(Kind.RIEMANN, len(S))
                fy = Factor(f.kind, f.m - 2 - len(S), f.label)
                img = [None] * f.nslots
                for j, i in enumerate(S):
                    img[i] = (0, j)
                for j, i in enumerate(Sc):
                    img[i] = (1, j)
                img[p] = (0, len(S))
                img[p + 1] = (0, len(S) + 1)
                img[xq] = (0, len(S) + 3)
                for s in ysl:
                    if s != xq:
                        img[s] = (1, len(Sc) + s - p - 2)
                pair = ((0, len(S) + 2), (1, len(Sc) + xq - p - 2))
                piece = Contraction((rm, fy), (pair,), tuple(img))
                corr.append((-1, substitute(c, at, piece)))
    return main, corr


def _commute(c, at, slot_pair=None, policy: Optional[GradePolicy] = None):
    f = c.factors[at]
    if slot_pair is None:
        slot_pair = (0, 1)
    p, q = sorted(slot_pair)
    if not (0 <= p < q < f.m):
        raise RewriteError(f"commute_derivatives: slots {slot_pair} are not two derivative slots")
    policy = policy or GradePolicy()
    sig = stats(c).sigma
    limit = sig if policy.sigma_max is None else policy.sigma_max
    keep = policy.track or limit > sig
    steps = list(range(q - 1, p - 1, -1)) + list(range(p + 1, q))
    main, corr = c, []
    for s in steps:
        main, extra = _commute_adjacent(main, at, s, True)
        corr += extra
    if corr and not keep:
        policy.events.append({"rule": "commute_derivatives", "dropped": len(corr),
                              "sigma": sig + 1})
        corr = []
    return LinComb([(1, main)] + corr)


def _fake_bianchi(c, at):
    f = _check_kind(c, at, (Kind.WEYL,), "fake_second_bianchi")
    if f.m == 0:
        raise RewriteError("fake_second_bianchi: factor has no derivative slot")
    return _splice(c, at, _template(fake_bianchi_text(f.m)))


def _first_bianchi(c, at):
    f = _check_kind(c, at, (Kind.RIEMANN, Kind.WEYL), "first_bianchi")
    lc = _template(first_bianchi_text(f.m))
    if f.kind is Kind.WEYL:
        lc = LinComb([(a, Contraction((Factor(Kind.WEYL, f.m),), p.pairs, p.free)) for a, p in lc])
    return _splice(c, at, lc)


def apply_rule(rule: RewriteRule, c: Contraction, at: int, **kw) -> LinComb:
    """Run ``rule`` and assert weight homogeneity and the declared length change."""
    out = rule.fn(c, at, **kw)
    st = stats(c)
    for a, t in out:
        s2 = stats(t)
        if s2.weight != st.weight:
            raise AssertionError(f"{rule.name} changed the weight {st.weight} -> {s2.weight}")
        if s2.sigma - st.sigma not in (0, rule.length_delta):
            raise AssertionError(f"{rule.name} changed the length by {s2.sigma - st.sigma}")
    return out


RULES = {r.name: r for r in [
    RewriteRule("weyl_decompose", (Kind.WEYL,), 0, True, _weyl, weyl_text),
    RewriteRule("schouten_to_ricci", (Kind.SCHOUTEN,), 0, True, _schouten, schouten_text),
    RewriteRule("ricci_to_schouten", (Kind.RICCI,), 0, False, _ricci_inv, ricci_to_schouten_text),
    RewriteRule("scalar_to_schouten", (Kind.SCALAR,), 0, False, _scalar_inv, scalar_text),
    RewriteRule("cotton_identity", (Kind.SCHOUTEN,), 0, False, _cotton, cotton_text),
    RewriteRule("contracted_bianchi", (Kind.SCHOUTEN,), 0, False, _contracted_bianchi,
                contracted_bianchi_text),
    RewriteRule("commute_derivatives", tuple(k for k in Kind if k is not Kind.METRIC), 1, False,
                _commute),
    RewriteRule("fake_second_bianchi", (Kind.WEYL,), 0, False, _fake_bianchi, fake_bianchi_text),
    RewriteRule("first_bianchi", (Kind.RIEMANN, Kind.WEYL), 0, False, _first_bianchi,
                first_bianchi_text),
]}


def weyl_decompose(c, at):
    return apply_rule(RULES["weyl_decompose"], c, at)


def schouten_to_ricci(c, at):
    return apply_rule(RULES["schouten_to_ricci"], c, at)


def ricci_to_schouten(c, at):
    return apply_rule(RULES["ricci_to_schouten"], c, at)


def scalar_to_schouten(c, at):
    return apply_rule(RULES["scalar_to_schouten"], c, at)


def cotton_identity(c, at, slots=None):
    return apply_rule(RULES["cotton_identity"], c, at, slots=slots)


def contracted_bianchi(c, at, inverse=False):
    return apply_rule(RULES["contracted_bianchi"], c, at, inverse=inverse)


def commute_derivatives(c, at, slot_pair=None, policy: Optional[GradePolicy] = None):
    return apply_rule(RULES["commute_derivatives"], c, at, slot_pair=slot_pair, policy=policy)


def fake_second_bianchi(c, at):
    return apply_rule(RULES["fake_second_bianchi"], c, at)


def first_bianchi(c, at):
    return apply_rule(RULES["first_bianchi"], c, at)


def manifest(orders: Sequence[int] = (0, 1, 2)) -> dict:
    """name -> {derivative order: template text} for every templated rule."""
    out = {}
    for name, r in sorted(RULES.items()):
        if r.template is None:
            continue
        out[name] = {}
        for m in orders:
            if name in ("cotton_identity", "fake_second_bianchi", "contracted_bianchi") and m == 0:
                continue
            out[name][str(m)] = r.template(m)
    return out


# ---------------------------------------------------------------- linearisation

_LIN_STEP = {
    Kind.WEYL: weyl_text,
    Kind.SCHOUTEN: schouten_text,
    Kind.SCALAR: _scalar_ricci_text,
    Kind.RICCI: _ricci_text,
    Kind.RIEMANN: _riemann_lin_text,
}


def _linearize_term(c: Contraction, n: Optional[int] = None) -> list:
    work = [(DimRatio.of(1), c)]
    done = []
    while work:
        a, t = work.pop()
        for fi, f in enumerate(t.factors):
            if f.kind in _LIN_STEP:
                for b, u in _splice(t, fi, _template(_LIN_STEP[f.kind](f.m)), a):
                    work.append((b if n is None else DimRatio.of(b.eval_at(n)), u))
                break
        else:
            done.append((a, t))
    return done


_LIN_CACHE: dict = {}


def linearize(lc: LinComb, n: Optional[int] = None) -> LinComb:
    """Leading-length image: every curvature factor replaced by its part
    linear in ``h`` (``g = delta + h``), written with ``D^k h`` factors.

    Two expressions of length sigma agree modulo length >= sigma+1 exactly
    when their images agree.  Function factors are already linear.  With
    ``n`` given, coefficients are evaluated there along the way.
    """
    terms = []
    for a, c in lc:
        _, key, can = canonical(c)
        if key is None:
            continue
        k0, _, _ = canonical(c)
        ck = (key, n)
        if ck not in _LIN_CACHE:
            if len(_LIN_CACHE) > 20000:
                _LIN_CACHE.clear()
            img = LinComb(_linearize_term(can, n)).collect()
            # metric traces in the canonical form bring back powers of n
            _LIN_CACHE[ck] = img if n is None else img.at(n).collect()
        if n is not None:
            a = DimRatio.of(as_coef(a * k0).eval_at(n))
            k0 = 1
        terms += [(a * k0 * b, t) for b, t in _LIN_CACHE[ck]]
    out = LinComb(terms).collect()
    return out if n is None else out.at(n).collect()


# ---------------------------------------------------------------- normal form

def _solve_basis(vectors: list):
    """Greedy independent subset; returns (chosen indices, reducer).

    ``reducer(v)`` expresses ``v`` in the span of the chosen vectors as
    {chosen index: coefficient} or raises when ``v`` is outside the span.
    """
    rows = []  # (pivot key, row dict, combination dict)
    chosen = []

    def reduce(v: dict, comb: dict):
        v = dict(v)
        comb = dict(comb)
        for piv, row, rc in rows:
            x = v.get(piv)
            if x is None or x.is_zero():
                continue
            f = x / row[piv]
            for k, y in row.items():
                nv = v.get(k, DimRatio.of(0)) - f * y
                if nv.is_zero():
                    v.pop(k, None)
                else:
                    v[k] = nv
            for k, y in rc.items():
                nc = comb.get(k, DimRatio.of(0)) - f * y
                if nc.is_zero():
                    comb.pop(k, None)
                else:
                    comb[k] = nc
        return v, comb

    for i, vec in enumerate(vectors):
        v, comb = reduce(vec, {i: DimRatio.of(1)})
        if v:
            piv = min(v)
            rows.append((piv, v, comb))
            chosen.append(i)

    def express(target: dict) -> dict:
        v, comb = reduce(target, {})
        if v:
            raise NormalizeError("target outside the span of the chosen terms")
        # comb holds -(coefficients); flip sign
        return {k: -y for k, y in comb.items() if not y.is_zero()}

    return chosen, express


def leading_reduce(lc: LinComb, n: Optional[int] = None) -> LinComb:
    """Rewrite a single-length combination over an independent subset of its
    own terms (taken in canonical key order), modulo longer terms.

    With ``n`` given all coefficients are evaluated there first.
    """
    col = lc.collect()
    if n is not None:
        col = col.at(n).collect()
    if not col.terms:
        return col
    vecs = []
    for a, c in col:
        img = linearize(LinComb.of(c), n)
        vecs.append({canonical(t)[1]: b for b, t in img if not b.is_zero()})
    chosen, express = _solve_basis(vecs)
    total: dict = {}
    for (a, c), v in zip(col, vecs):
        for k, y in v.items():
            total[k] = total.get(k, DimRatio.of(0)) + a * y
    total = {k: y for k, y in total.items() if not y.is_zero()}
    coefs = express(total)
    return LinComb([(coefs[i], col.terms[i][1]) for i in sorted(coefs)]).collect()


DIRECTED = ("weyl_decompose", "schouten_to_ricci")
REDUCING = ("first_bianchi", "fake_second_bianchi", "commute_derivatives", "cotton_identity",
            "contracted_bianchi", "bianchi")
DEFAULT_RULES = ("first_bianchi", "fake_second_bianchi", "commute_derivatives")


def normalize(lc: LinComb, rules: Iterable[str] = DEFAULT_RULES,
              policy: Optional[GradePolicy] = None, n: Optional[int] = None,
              max_steps: int = 100000) -> LinComb:
    """Directed rewriting to a fixpoint, canonical collection, then (if any
    multiterm identity is in ``rules``) the leading-length reduction.

    The reduction works on the shortest length present; longer terms are
    dropped in ``discard`` mode (recorded in ``policy.events``) and kept
    untouched in ``track`` mode.
    """
    rules = tuple(rules)
    unknown = [r for r in rules if r not in RULES and r not in ("bianchi", "canonicalize")]
    if unknown:
        raise ValueError(f"unknown rules {unknown}")
    policy = policy or GradePolicy()
    if n is not None:
        lc = lc.at(n)
    directed = [r for r in DIRECTED if r in rules]
    trace = []
    if directed:
        kinds = {RULES[r].kinds[0]: RULES[r] for r in directed}
        work = list(lc.terms)
        out = []
        steps = 0
        while work:
            a, c = work.pop()
            for fi, f in enumerate(c.factors):
                if f.kind in kinds:
                    steps += 1
                    if steps > max_steps:
                        raise NormalizeError(f"normalize: more than {max_steps} rewrite steps", trace[-20:])
                    trace.append((kinds[f.kind].name, c))
                    work += [(a * b, t) for b, t in apply_rule(kinds[f.kind], c, fi)]
                    break
            else:
                out.append((a, c))
        lc = LinComb(out)
    col = lc.collect()
    if n is not None:
        col = col.at(n).collect()
    if not any(r in REDUCING for r in rules) or not col.terms:
        return col
    by_sigma: dict = {}
    for a, c in col:
        by_sigma.setdefault(stats(c).sigma, []).append((a, c))
    s0 = min(by_sigma)
    if policy.sigma_max is not None and s0 > policy.sigma_max:
        policy.events.append({"rule": "normalize", "dropped": len(col), "sigma": s0})
        return LinComb()
    head = leading_reduce(LinComb(by_sigma.pop(s0)), n)
    rest = [t for s in sorted(by_sigma) for t in by_sigma[s]]
    if rest and not policy.track:
        policy.events.append({"rule": "normalize", "dropped": len(rest), "sigma": s0 + 1})
        rest = []
    return LinComb(list(head.terms) + rest).collect()


def move_to_front(c: Contraction, at: int, s: int, track: bool = True):
    """Make derivative slot ``s`` of factor ``at`` the outermost one.

    Returns ``(main, corrections)`` with ``c = main + corrections`` exactly;
    the corrections are one factor longer and empty when ``track`` is off.
    """
    f = c.factors[at]
    if not 0 <= s < f.m:
        raise RewriteError(f"slot {s} is not a derivative slot of factor {at}")
    corr = []
    for i in range(s - 1, -1, -1):
        c, extra = _commute_adjacent(c, at, i, track)
        corr += extra
    return c, LinComb(corr)


def weyl_divergence_constants() -> tuple:
    """Constants of ``D^i D^l W_ijkl = a D^i D^l R_ijkl + c1 D_j D_k R + c2 g_jk Lap R``
    at leading length, solved from the linearised identity."""
    from .textio import parse
    lhs = parse("contr(D[i,l] W[i,xaa,xab,l])")
    basis = [parse("contr(D[i,l] Rm[i,xaa,xab,l])"), parse("contr(D[xaa,xab] R)"),
             parse("contr(D[s,s] R g[xaa,xab])")]
    vecs = [{canonical(t)[1]: b for b, t in linearize(v)} for v in basis]
    chosen, express = _solve_basis(vecs)
    if len(chosen) != 3:
        raise NormalizeError("basis for the Weyl divergence is degenerate")
    sol = express({canonical(t)[1]: b for b, t in linearize(lhs)})
    return tuple(sol.get(i, DimRatio.of(0)) for i in range(3))
