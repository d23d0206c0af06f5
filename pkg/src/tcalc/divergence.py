"""Explicit divergence constructions ("integration by parts").

The basic move takes a derivative slot ``s`` on factor ``F`` whose partner
is ``p``, erases ``s`` and frees ``p``.  The divergence of the resulting
vector field ``V`` reproduces the input (the term where the new derivative
lands on ``F``) plus one term for every other factor, so

    C - div V = - sum over G != F of (D_p acting on G).

When ``s`` is not the outermost derivative it is first commuted there; the
commutator terms are one factor longer and land in the corrections.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

from .expr import (GROUPS, Contraction, GradePolicy, Kind, LinComb, add_derivative, canonical,
                   free_index_divergence, remove_slot, stats, substitute_lincomb)
from .ratcoef import DimRatio, as_coef
from .rewrite import (NormalizeError, RewriteError, _solve_basis, contracted_bianchi,
                      leading_reduce, linearize, move_to_front, slot_names,
                      weyl_divergence_constants)

__all__ = [
    "DivStep", "DivCertificate", "DivergenceError", "StuckError",
    "transfer_derivative", "erase_and_free", "ibp_step", "eliminate_internal_contractions",
    "reduce_quadratic_weyl", "integrate_to_quadratic", "relate_mod_divergence", "canonical_quadratic", "classify_quadratic", "QUADRATIC_SHAPES",
    "silly_integrate_by_parts", "silly_spec", "decompose_weyl_divergence",
    "select_sublinear", "Predicate",
]


class DivergenceError(ValueError):
    pass


class StuckError(DivergenceError):
    pass


@dataclass(frozen=True)
class DivStep:
    """One subtracted divergence ``coef * div(vector_field)``.

    ``erased``/``freed`` are slots of ``source``.  A step with ``assumption``
    set stands for a vector field whose existence is asserted, not built.
    """
    source: Optional[Contraction]
    erased: Optional[tuple]
    freed: Optional[tuple]
    vector_field: Optional[Contraction]
    coef: DimRatio = DimRatio.of(1)
    assumption: Optional[str] = None

    def divergence(self) -> LinComb:
        if self.vector_field is None:
            return LinComb()
        return free_index_divergence(self.vector_field).scale(self.coef)

    def to_json(self) -> dict:
        from .textio import format_contraction
        if self.assumption is not None:
            return {"assumption": self.assumption}
        return {
            "coef": str(self.coef),
            "erased": list(self.erased), "freed": list(self.freed),
            "source": format_contraction(self.source),
            "vectorField": _format_vf(self.vector_field),
        }


def _format_vf(v: Contraction) -> str:
    from .textio import format_contraction
    return format_contraction(v)


@dataclass
class DivCertificate:
    """``input - sum(div) - remainder = corrections`` (modulo longer terms
    when the corrections are not tracked)."""
    input: LinComb
    steps: list = field(default_factory=list)
    remainder: LinComb = field(default_factory=LinComb)
    corrections: LinComb = field(default_factory=LinComb)
    stuck: list = field(default_factory=list)
    sigma: Optional[int] = None

    def divergence(self) -> LinComb:
        out = LinComb()
        for st in self.steps:
            out = out + st.divergence()
        return out

    def residual(self) -> LinComb:
        return self.input - self.divergence() - self.remainder - self.corrections

    @property
    def assumptions(self) -> list:
        return [s.assumption for s in self.steps if s.assumption is not None]

    def check(self, n: Optional[int] = None) -> bool:
        """The identity at leading length: formal cancellation, falling back
        to the linearised comparison (Bianchi/commutation identities)."""
        if self.assumptions:
            return False
        res = self.residual()
        if n is not None:
            res = res.at(n)
        res = res.collect()
        if self.sigma is not None:
            res = LinComb([(a, c) for a, c in res if stats(c).sigma <= self.sigma])
        if not res.terms:
            return True
        return not leading_reduce(res, n).terms and not linearize(res, n).terms

    def check_numeric(self, jet, sigma: Optional[int] = None) -> bool:
        from .numeval import graded_coefficient
        s = self.sigma if sigma is None else sigma
        return graded_coefficient(self.residual(), jet, s) == 0

    def to_json(self) -> dict:
        from .textio import format_lincomb
        return {
            "input": format_lincomb(self.input, canonical=False),
            "steps": [s.to_json() for s in self.steps],
            "remainder": format_lincomb(self.remainder),
            "corrections": format_lincomb(self.corrections, canonical=False),
            "stuck": [_format_vf(c) for c in self.stuck],
            "sigma": self.sigma,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, d: dict) -> "DivCertificate":
        from .textio import parse
        from .ratcoef import parse_coef
        steps = []
        for s in d["steps"]:
            if "assumption" in s:
                steps.append(DivStep(None, None, None, None, assumption=s["assumption"]))
                continue
            src = parse(s["source"]).terms[0][1]
            vf = parse(s["vectorField"]).terms[0][1]
            steps.append(DivStep(src, tuple(s["erased"]), tuple(s["freed"]), vf,
                                 as_coef(parse_coef(s["coef"]))))
        return cls(parse(d["input"]), steps, parse(d["remainder"]), parse(d["corrections"]),
                   [parse(x).terms[0][1] for x in d.get("stuck", [])], d.get("sigma"))

    def assume(self, text: str):
        """Record a generic-family step that is asserted rather than built."""
        self.steps.append(DivStep(None, None, None, None, assumption=text))


# ---------------------------------------------------------------- the basic move

def transfer_derivative(c: Contraction, slot: tuple, coef=1, policy: Optional[GradePolicy] = None):
    """Integrate the derivative at ``slot`` by parts.

    Returns ``(step, remainder, corrections)`` with
    ``coef*c = step.divergence() + remainder + corrections``.
    """
    coef = as_coef(coef)
    fi, s = slot
    f = c.factors[fi]
    if not f.is_deriv(s):
        raise DivergenceError(f"slot {slot} is not a derivative slot")
    if slot not in c.partner:
        raise DivergenceError(f"slot {slot} is free")
    track = policy is not None and policy.track
    main, corr = move_to_front(c, fi, s, track)
    if s and not track and policy is not None:
        policy.events.append({"rule": "transfer_derivative", "commuted": s,
                              "sigma": stats(c).sigma + 1})
    v, freed = remove_slot(main, (fi, 0))
    out = []
    for g, fg in enumerate(v.factors):
        if g == fi or fg.kind is Kind.METRIC:
            continue
        out.append((-coef, add_derivative(v, g, freed)))
    step = DivStep(c, slot, c.partner[slot], v, coef)
    return step, LinComb(out), corr.scale(coef)


def erase_and_free(c: Contraction, pair) -> DivStep:
    """DivStep for an internal pair; the derivative endpoint is erased (the
    outer one when both are derivatives)."""
    return ibp_step(c, pair)[0]


def _erasable(c: Contraction, pair) -> tuple:
    a, b = sorted(pair)
    if a[0] != b[0]:
        raise DivergenceError(f"pair {pair} is not internal to one factor")
    if c.partner.get(a) != b:
        raise DivergenceError(f"slots {a} and {b} are not contracted together")
    f = c.factors[a[0]]
    if f.is_deriv(a[1]):
        return a
    raise DivergenceError(f"pair {pair} has no derivative endpoint; apply contracted_bianchi first")


def ibp_step(c: Contraction, pair, coef=1, policy: Optional[GradePolicy] = None):
    return transfer_derivative(c, _erasable(c, pair), coef, policy)


def _internal_pairs(c: Contraction):
    return [(a, b) for a, b in c.pairs if a[0] == b[0]]


def _pick(c: Contraction, pairs):
    """Deepest factor first (most derivatives), then the lowest slot."""
    return min(pairs, key=lambda p: (-c.factors[p[0][0]].m, p[0][0], min(p[0][1], p[1][1])))


def eliminate_internal_contractions(x, policy: Optional[GradePolicy] = None,
                                    max_steps: int = 10000,
                                    which: Optional[Callable] = None) -> DivCertificate:
    """Integrate internal contractions by parts until none with a derivative
    endpoint is left.

    ``which(c, pair)`` can restrict the pairs that are eliminated (default:
    all pairs with a derivative endpoint).  Schouten traces under a
    derivative are first moved with the contracted Bianchi identity;
    an undifferentiated Schouten trace is reported in ``stuck``.
    """
    lc = x if isinstance(x, LinComb) else LinComb.of(x)
    policy = policy or GradePolicy()
    sig = min((stats(c).sigma for _, c in lc), default=0)
    cert = DivCertificate(lc, sigma=sig)
    work = list(lc.collect().terms)
    done = []
    corr = LinComb()
    steps = 0
    while work:
        a, c = work.pop(0)
        cands = []
        bianchi_at = None
        for p in _internal_pairs(c):
            (fa, sa), (fb, sb) = p
            f = c.factors[fa]
            if f.is_deriv(sa) or f.is_deriv(sb):
                if which is None or which(c, p):
                    cands.append(p)
            elif f.kind is Kind.SCHOUTEN and f.m > 0:
                bianchi_at = fa
        if bianchi_at is not None and not cands:
            (b2, c2), = contracted_bianchi(c, bianchi_at).terms
            work.insert(0, (a * b2, c2))
            continue
        if not cands:
            for p in _internal_pairs(c):
                f = c.factors[p[0][0]]
                if f.kind is Kind.SCHOUTEN and not f.is_deriv(p[0][1]) and not f.is_deriv(p[1][1]):
                    cert.stuck.append(c)
                    break
            done.append((a, c))
            continue
        steps += 1
        if steps > max_steps:
            raise DivergenceError(f"no fixpoint after {max_steps} steps")
        p = _pick(c, cands)
        step, rem, cc = ibp_step(c, p, a, policy)
        cert.steps.append(step)
        corr = corr + cc
        merged = LinComb(work + list(rem.terms)).collect()
        work = list(merged.terms)
    cert.remainder = LinComb(done).collect()
    cert.corrections = corr
    return cert


# ---------------------------------------------------------------- quadratic Weyl terms

def canonical_quadratic(n: int) -> LinComb:
    """|D^(n/2-3) D^s W_sjkl|^2."""
    from .textio import parse
    return parse("contr(D^[n/2-3][r] D[s] W[s,j,k,l] D^[n/2-3][r] D[t] W[t,j,k,l])", n)


def _strip_laplacians(c: Contraction) -> Contraction:
    """The contraction with every derivative-derivative internal pair removed."""
    while True:
        for a, b in c.pairs:
            if a[0] == b[0] and c.factors[a[0]].is_deriv(a[1]) and c.factors[b[0]].is_deriv(b[1]):
                hi, lo = max(a, b), min(a, b)
                c, p = remove_slot(c, hi)
                c, _ = remove_slot(c, lo)
                break
        else:
            return c


QUADRATIC_SHAPES = {
    "weyl_dd": "contr(W[i,j,k,l] D[i,t] W[t,j,k,l])",
    "divdiv_pair": "contr(D[s,t] W[s,j,t,l] D[u,v] W[u,j,v,l])",
    "div_pair": "contr(D[s] W[s,j,k,l] D[t] W[t,j,k,l])",
    "graddiv_pair": "contr(D[a,s] W[s,j,k,l] D[a,t] W[t,j,k,l])",
    "crossed": "contr(D[p,a] W[a,b,c,d] D[b,q] W[q,p,c,d])",
}
_SHAPE_KEYS: dict = {}


def classify_quadratic(c: Contraction) -> str:
    """Name of the quadratic Weyl shape of ``c`` (Laplacians ignored)."""
    from .textio import parse
    if not _SHAPE_KEYS:
        for name, text in QUADRATIC_SHAPES.items():
            _SHAPE_KEYS[canonical(parse(text).terms[0][1])[1]] = name
    if len(c.factors) != 2 or any(f.kind is not Kind.WEYL for f in c.factors):
        raise DivergenceError("shape test failed: expected exactly two Weyl factors")
    if c.free:
        raise DivergenceError("shape test failed: contraction has free indices")
    key = canonical(_strip_laplacians(c))[1]
    if key not in _SHAPE_KEYS:
        raise DivergenceError("shape test failed: Laplacian-free pattern matches none of "
                              + ", ".join(QUADRATIC_SHAPES))
    return _SHAPE_KEYS[key]


def _ratio(v: LinComb, q: LinComb, n: Optional[int] = None):
    """lambda with v = lambda*q at leading length, or None."""
    lv, lq = linearize(v, n), linearize(q, n)
    dv = {canonical(t)[1]: a for a, t in lv}
    dq = {canonical(t)[1]: a for a, t in lq}
    if not dv:
        return DimRatio.of(0)
    k = next(iter(dq))
    lam = dv.get(k, DimRatio.of(0)) / dq[k]
    for key in set(dv) | set(dq):
        if not (dv.get(key, DimRatio.of(0)) - lam * dq.get(key, DimRatio.of(0))).is_zero():
            return None
    return lam


def reduce_quadratic_weyl(c: Contraction, n: int, policy: Optional[GradePolicy] = None):
    """Integrate one of the five quadratic Weyl shapes of weight -n by parts
    down to a multiple of :func:`canonical_quadratic`.

    Returns ``(certificate, target)``; ``target`` is the remainder.
    """
    classify_quadratic(c)
    st = stats(c)
    if st.weight != -n:
        raise DivergenceError(f"shape test failed: weight {st.weight}, expected {-n}")
    return integrate_to_quadratic(c, n, policy)


def _moves(term: Contraction) -> list:
    """Derivative slots contracted into an intrinsic slot, traced ones first."""
    traced, cross = [], []
    for a, b in term.pairs:
        fa, fb = term.factors[a[0]], term.factors[b[0]]
        for x, y, fx, fy in ((a, b, fa, fb), (b, a, fb, fa)):
            if fx.is_deriv(x[1]) and not fy.is_deriv(y[1]):
                (traced if x[0] == y[0] else cross).append(x)
    return sorted(traced) + sorted(cross)


def _search_quadratic(coef, term, q, n, policy, max_steps, corr):
    """Breadth-first search over single derivative transfers until the term
    is a multiple of ``q``; the shortest move sequence wins, ties broken by
    slot order.  Returns ``(lam, steps, coef, corrections)``."""
    from collections import deque
    if term is None:
        return DimRatio.of(0), [], coef, corr
    queue = deque([(coef, term, [], corr)])
    seen = {canonical(term)[1]}
    stuck = term
    while queue:
        coef, term, path, corr = queue.popleft()
        r = _ratio(LinComb.of(term), q, n)
        if r is not None:
            return coef * r, path, coef, corr
        if len(path) >= max_steps:
            continue
        moves = _moves(term)
        if not moves:
            stuck = term
        for slot in moves:
            step, rem, cc = transfer_derivative(term, slot, coef, policy)
            rem = rem.collect()
            if not rem.terms:
                return DimRatio.of(0), path + [step], DimRatio.of(0), corr + cc
            if len(rem.terms) != 1:
                raise DivergenceError("integrate_to_quadratic expects two-factor input")
            (b, t), = rem.terms
            key = canonical(t)[1]
            if key in seen:
                continue
            seen.add(key)
            queue.append((b, t, path + [step], corr + cc))
    raise DivergenceError(f"residual non-canonical term {stuck!r}")


def integrate_to_quadratic(c: Contraction, n: int, policy: Optional[GradePolicy] = None,
                           target: Optional[LinComb] = None, max_steps: int = 64):
    """Integrate a two-factor contraction by parts until it is a pointwise
    multiple of ``target`` (default :func:`canonical_quadratic`) at leading
    length.

    Laplacians go first; afterwards the shortest sequence of transfers of
    derivatives contracted into intrinsic slots is searched breadth first.
    Returns ``(certificate, target multiple)``.
    """
    q = canonical_quadratic(n) if target is None else target
    cert = DivCertificate(LinComb.of(c), sigma=stats(c).sigma)
    coef, term = DimRatio.of(1), c
    corr = LinComb()

    def move(slot):
        nonlocal coef, term, corr
        step, rem, cc = transfer_derivative(term, slot, coef, policy)
        cert.steps.append(step)
        corr = corr + cc
        rem = rem.collect()
        if not rem.terms:
            coef, term = DimRatio.of(0), None
            return
        if len(rem.terms) != 1:
            raise DivergenceError("integrate_to_quadratic expects two-factor input")
        (b, t), = rem.terms
        coef, term = b, t
    for _ in range(max_steps):
        if term is None:
            break
        laps = [p for p in _internal_pairs(term)
                if all(term.factors[s[0]].is_deriv(s[1]) for s in p)]
        if not laps:
            break
        move(min(_pick(term, laps)))
    lam, path, coef, corr = _search_quadratic(coef, term, q, n, policy, max_steps, corr)
    cert.steps.extend(path)
    cert.remainder = q.scale(lam).at(n) if not lam.is_zero() else LinComb()
    cert.corrections = corr
    return cert, cert.remainder


def relate_mod_divergence(a: Contraction, b: Contraction, n: int,
                          policy: Optional[GradePolicy] = None):
    """Certificate for ``a - div T = lam * b`` with both sides integrated to
    the canonical quadratic; returns ``(certificate, lam)``."""
    ca, ta = integrate_to_quadratic(a, n, policy)
    cb, tb = integrate_to_quadratic(b, n, policy)
    if not tb.terms:
        raise DivergenceError("the reference term is a divergence at leading length")
    la = ta.terms[0][0] if ta.terms else DimRatio.of(0)
    lam = la / tb.terms[0][0]
    steps = list(ca.steps) + [DivStep(st.source, st.erased, st.freed, st.vector_field,
                                      -lam * st.coef) for st in cb.steps]
    cert = DivCertificate(LinComb.of(a), steps, LinComb.of(b, lam) if not lam.is_zero() else LinComb(),
                          ca.corrections - cb.corrections.scale(lam), sigma=ca.sigma)
    return cert, lam


# ---------------------------------------------------------------- silly divergence

def silly_integrate_by_parts(lc: LinComb, label: int, policy: Optional[GradePolicy] = None) -> LinComb:
    """Move every derivative off the factor ``psi<label>`` (outermost first).

    Each transfer flips the sign and distributes the derivative over the
    other factors; the derivative never lands back on ``psi<label>``.
    """
    out = []
    work = list(lc.terms)
    while work:
        a, c = work.pop()
        idx = [i for i, f in enumerate(c.factors) if f.kind is Kind.PSI and f.label == label]
        if len(idx) != 1:
            raise DivergenceError(f"term {c!r} has {len(idx)} factors psi{label}, expected one")
        fi = idx[0]
        if c.factors[fi].m == 0:
            out.append((a, c))
            continue
        _, rem, _ = transfer_derivative(c, (fi, 0), a, policy)
        work += list(rem.terms)
    return LinComb(out)


def _weyl_divergence_slots(c: Contraction, at: int):
    """``(sign, external slots)`` when two derivatives of the Weyl factor
    ``at`` are contracted into one index of each antisymmetric pair, else
    ``None``.  ``external`` lists the other derivative slots and the two
    remaining intrinsic slots in the order of ``D^i D^l W_ijkl``.  The
    derivative order is immaterial at leading length."""
    f = c.factors[at]
    if f.kind is not Kind.WEYL or f.m < 2:
        return None
    partner = {}
    for a, b in c.pairs:
        partner[a], partner[b] = b, a
    into = {}
    for d in range(f.m):
        q = partner.get((at, d))
        if q is not None and q[0] == at and not f.is_deriv(q[1]):
            into[q[1] - f.m] = d
    for perm, sign in GROUPS[Kind.WEYL]:
        if perm[0] in into and perm[3] in into:
            used = {into[perm[0]], into[perm[3]]}
            outer = tuple(d for d in range(f.m) if d not in used)
            return sign, outer + (f.m + perm[1], f.m + perm[2])
    return None


def decompose_weyl_divergence(c: Contraction, at: int) -> LinComb:
    """Rewrite ``D^{..} D^i D^l W_ijkl`` (factor ``at``) as
    ``a D^{..} D^i D^l Rm_ijkl + c1 D^{..} D_j D_k R + c2 g_jk D^{..} Lap R``
    with the constants of :func:`weyl_divergence_constants`.

    Exact at leading length; the quadratic corrections are dropped.
    """
    found = _weyl_divergence_slots(c, at)
    if found is None:
        raise DivergenceError(f"factor {at} is not a double divergence of W")
    from .textio import parse
    sign, ext = found
    names = slot_names(len(ext))
    o, (x, y) = names[:-2], names[-2:]
    d = f"D[{','.join(o)}] " if o else ""
    a, c1, c2 = weyl_divergence_constants()
    pieces = [(a, f"contr({d}D[i,l] Rm[i,{x},{y},l])"),
              (c1, f"contr(D[{','.join(o + [x, y])}] R)"),
              (c2, f"contr(D[{','.join(o + ['s', 's'])}] R g[{x},{y}])")]
    out = LinComb()
    for k, text in pieces:
        piece = parse(text)
        out = out + substitute_lincomb(c, at, piece, k * sign, slots=ext)
    return out


def silly_spec(lc: LinComb, label: int, at: Optional[Callable] = None) -> LinComb:
    """Silly transform on ``psi<label>`` followed by the decomposition of one
    doubly contracted Weyl divergence in each resulting term.

    ``at(c)`` picks the Weyl factor; by default the one with the most
    derivatives (the first such factor on ties).  Terms without an
    eligible factor are kept as they are.
    """
    out = []
    for b, c in silly_integrate_by_parts(lc, label).collect():
        cands = [i for i in range(len(c.factors)) if _weyl_divergence_slots(c, i) is not None]
        if at is not None:
            pick = at(c)
        elif cands:
            pick = max(cands, key=lambda i: (c.factors[i].m, -i))
        else:
            pick = None
        if pick is None:
            out.append((b, c))
        else:
            out += list(decompose_weyl_divergence(c, pick).scale(b))
    return LinComb(out).collect()


# ---------------------------------------------------------------- sublinear combinations

class Predicate:
    """Composable filter on canonical contractions (``&``, ``|``, ``~``)."""

    def __init__(self, fn: Callable, name: str = "?"):
        self.fn, self.name = fn, name

    def __call__(self, c: Contraction) -> bool:
        return bool(self.fn(c))

    def __and__(self, o):
        return Predicate(lambda c: self(c) and o(c), f"({self.name} & {o.name})")

    def __or__(self, o):
        return Predicate(lambda c: self(c) or o(c), f"({self.name} | {o.name})")

    def __invert__(self):
        return Predicate(lambda c: not self(c), f"~{self.name}")

    def __repr__(self):
        return f"Predicate({self.name})"

    @classmethod
    def stat(cls, name: str, op: str, value) -> "Predicate":
        """E.g. ``Predicate.stat("delta", "==", 0)``; ``value`` may be a
        callable of the stats (``lambda s: s.sigma - 1``)."""
        ops = {"==": lambda x, y: x == y, "!=": lambda x, y: x != y, "<=": lambda x, y: x <= y,
               ">=": lambda x, y: x >= y, "<": lambda x, y: x < y, ">": lambda x, y: x > y}

        def fn(c):
            s = stats(c)
            v = value(s) if callable(value) else value
            return ops[op](getattr(s, name), v)
        return cls(fn, f"{name}{op}{value if not callable(value) else 'f(stats)'}")

    @classmethod
    def factor_count(cls, kind: Kind, op: str, value: int, m: Optional[int] = None,
                     label: Optional[int] = None) -> "Predicate":
        ops = {"==": int.__eq__, "<=": int.__le__, ">=": int.__ge__}

        def fn(c):
            k = sum(1 for f in c.factors if f.kind is kind and (m is None or f.m == m)
                    and (label is None or f.label == label))
            return ops[op](k, value)
        return cls(fn, f"#{kind.value}{'' if m is None else f'[m={m}]'}{op}{value}")


def select_sublinear(lc: LinComb, predicate: Callable) -> LinComb:
    """Collected terms whose canonical contraction satisfies ``predicate``."""
    return LinComb([(a, c) for a, c in lc.collect() if predicate(c)], _canon=True)
