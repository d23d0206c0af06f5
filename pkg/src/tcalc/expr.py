"""Tensor IR: factors, pairing graphs, statistics and canonical forms.

A factor carries ``m`` covariant-derivative slots followed by its intrinsic
slots.  Slot ``s < m`` is a derivative slot; derivative slot 0 is the
outermost derivative, which is the order the numeric oracle honours.  For
canonical forms the derivative block is treated as totally symmetric.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Optional

from .ratcoef import DimRatio, ProdRatio, as_coef

Slot = tuple  # (factor index, slot index)


class Kind(enum.Enum):
    RIEMANN = "Rm"
    WEYL = "W"
    RICCI = "Ric"
    SCALAR = "R"
    SCHOUTEN = "P"
    PSI = "psi"
    OMEGA = "Omega"
    METRIC = "g"
    H = "h"  # linearised metric perturbation, internal to the leading-length reduction


INTRINSIC = {
    Kind.RIEMANN: 4, Kind.WEYL: 4, Kind.RICCI: 2, Kind.SCALAR: 0, Kind.SCHOUTEN: 2,
    Kind.PSI: 0, Kind.OMEGA: 0, Kind.METRIC: 2, Kind.H: 2,
}
CURVATURE = {Kind.RIEMANN, Kind.WEYL, Kind.RICCI, Kind.SCALAR, Kind.SCHOUTEN}
_KIND_ORDER = {k: i for i, k in enumerate(Kind)}


def _riemann_group():
    gens = [((1, 0, 2, 3), -1), ((0, 1, 3, 2), -1), ((2, 3, 0, 1), 1)]
    seen = {(0, 1, 2, 3): 1}
    frontier = [(0, 1, 2, 3)]
    while frontier:
        p = frontier.pop()
        for q, s in gens:
            r = tuple(p[q[i]] for i in range(4))
            if r not in seen:
                seen[r] = seen[p] * s
                frontier.append(r)
    return tuple(sorted(seen.items()))


_SYM2 = (((0, 1), 1), ((1, 0), 1))
GROUPS = {
    Kind.RIEMANN: _riemann_group(), Kind.WEYL: _riemann_group(),
    Kind.RICCI: _SYM2, Kind.SCHOUTEN: _SYM2, Kind.METRIC: _SYM2, Kind.H: _SYM2,
    Kind.SCALAR: (((), 1),), Kind.PSI: (((), 1),), Kind.OMEGA: (((), 1),),
}


@dataclass(frozen=True)
class Factor:
    kind: Kind
    m: int = 0
    label: int = 0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("negative derivative order")
        if self.kind is Kind.METRIC and self.m:
            raise ValueError("metric factors carry no derivatives")

    @property
    def nint(self) -> int:
        return INTRINSIC[self.kind]

    @property
    def nslots(self) -> int:
        return self.m + INTRINSIC[self.kind]

    def is_deriv(self, s: int) -> bool:
        return s < self.m

    @property
    def weight(self) -> int:
        if self.kind in (Kind.PSI, Kind.OMEGA, Kind.H):
            return -self.m
        if self.kind is Kind.METRIC:
            return 0
        return -(self.m + 2)

    def color(self) -> tuple:
        return (_KIND_ORDER[self.kind], self.m, self.label)

    def bump(self, k: int = 1) -> "Factor":
        return Factor(self.kind, self.m + k, self.label)

    def __lt__(self, other):
        return self.color() < other.color()


@dataclass(frozen=True)
class Stats:
    sigma: int
    delta: int
    deltabar: int
    q: int
    weight: int


@dataclass(frozen=True, eq=False)
class Contraction:
    """Factors plus a perfect matching on a subset of their slots.

    ``free`` lists the unmatched slots in order.  Equality is structural;
    use :func:`canonicalize` for equality up to symmetry.
    """
    factors: tuple
    pairs: tuple = ()
    free: tuple = ()

    def __post_init__(self):
        pairs = tuple(sorted(tuple(sorted(p)) for p in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "free", tuple(tuple(s) for s in self.free))
        seen = set()
        for a, b in pairs:
            for s in (a, b):
                if s in seen:
                    raise ValueError(f"slot {s} used twice")
                seen.add(s)
        for s in self.free:
            if s in seen:
                raise ValueError(f"slot {s} used twice")
            seen.add(s)
        expect = {(i, j) for i, f in enumerate(self.factors) for j in range(f.nslots)}
        if seen != expect:
            missing = sorted(expect - seen)
            extra = sorted(seen - expect)
            raise ValueError(f"invalid slot assignment: missing {missing[:4]} extra {extra[:4]}")

    @cached_property
    def partner(self) -> dict:
        d = {}
        for a, b in self.pairs:
            d[a] = b
            d[b] = a
        return d

    def __eq__(self, other):
        return isinstance(other, Contraction) and (self.factors, self.pairs, self.free) == (
            other.factors, other.pairs, other.free)

    def __hash__(self):
        return hash((self.factors, self.pairs, self.free))

    @property
    def is_complete(self) -> bool:
        return not self.free

    def stats(self) -> Stats:
        return stats(self)

    def __repr__(self):
        from .textio import format_contraction
        return f"<{format_contraction(self)}>"


def stats(c: Contraction) -> Stats:
    sigma = sum(1 for f in c.factors if f.kind is not Kind.METRIC)
    internal = sum(1 for a, b in c.pairs if a[0] == b[0])
    ric = sum(1 for f in c.factors if f.kind is Kind.RICCI)
    scal = sum(1 for f in c.factors if f.kind is Kind.SCALAR)
    lap = 0
    for i, f in enumerate(c.factors):
        if f.kind is Kind.PSI and f.m == 2 and c.partner.get((i, 0)) == (i, 1):
            lap += 1
    return Stats(sigma, internal + ric + 2 * scal, lap + scal, ric + scal,
                 sum(f.weight for f in c.factors))


# ---------------------------------------------------------------- builders

def product(*cs: Contraction) -> Contraction:
    """Tensor product; free slots are concatenated in argument order."""
    factors, pairs, free = [], [], []
    for c in cs:
        off = len(factors)
        factors += c.factors
        pairs += [((a[0] + off, a[1]), (b[0] + off, b[1])) for a, b in c.pairs]
        free += [(s[0] + off, s[1]) for s in c.free]
    return Contraction(tuple(factors), tuple(pairs), tuple(free))


def contract_free(c: Contraction, links: Iterable[tuple]) -> Contraction:
    """Pair free positions (indices into ``c.free``) with each other."""
    links = list(links)
    used = {i for l in links for i in l}
    pairs = list(c.pairs) + [(c.free[i], c.free[j]) for i, j in links]
    free = [s for k, s in enumerate(c.free) if k not in used]
    return Contraction(c.factors, tuple(pairs), tuple(free))


def permute_free(c: Contraction, order: Iterable[int]) -> Contraction:
    return Contraction(c.factors, c.pairs, tuple(c.free[i] for i in order))


def remap(c: Contraction, factors, slotmap: Callable[[Slot], Slot]) -> Contraction:
    pairs = [(slotmap(a), slotmap(b)) for a, b in c.pairs]
    free = [slotmap(s) for s in c.free]
    return Contraction(tuple(factors), tuple(pairs), tuple(free))


def add_derivative(c: Contraction, fi: int, partner: Optional[Slot]) -> Contraction:
    """New outermost derivative slot on factor ``fi``.

    With ``partner`` given, the new slot is paired to it; otherwise the slot
    becomes free and is appended to the free list.
    """
    shift = lambda s: (s[0], s[1] + 1) if s[0] == fi else s  # noqa: E731
    factors = list(c.factors)
    factors[fi] = factors[fi].bump()
    pairs = [(shift(a), shift(b)) for a, b in c.pairs]
    free = [shift(s) for s in c.free]
    new = (fi, 0)
    if partner is None:
        free.append(new)
    else:
        p = shift(partner)
        free.remove(p)
        pairs.append((new, p))
    return Contraction(tuple(factors), tuple(pairs), tuple(free))


def remove_slot(c: Contraction, slot: Slot) -> tuple:
    """Delete a derivative slot; returns (contraction, former partner or None).

    The former partner becomes free (appended) when it existed.
    """
    fi, s = slot
    f = c.factors[fi]
    if not f.is_deriv(s):
        raise ValueError(f"slot {slot} is not a derivative slot")
    partner = c.partner.get(slot)

    def shift(x):
        if x[0] == fi and x[1] > s:
            return (fi, x[1] - 1)
        return x

    factors = list(c.factors)
    factors[fi] = Factor(f.kind, f.m - 1, f.label)
    pairs = [(shift(a), shift(b)) for a, b in c.pairs if slot not in (a, b)]
    free = [shift(x) for x in c.free if x != slot]
    newp = None
    if partner is not None:
        newp = shift(partner)
        free.append(newp)
    return Contraction(tuple(factors), tuple(pairs), tuple(free)), newp


def drop_factor(c: Contraction, fi: int, pairs=None, free=None) -> Contraction:
    """Remove factor ``fi``; ``pairs``/``free`` override those of ``c`` and
    must no longer mention the factor."""
    pairs = c.pairs if pairs is None else pairs
    free = c.free if free is None else free

    def shift(x):
        return (x[0] - 1, x[1]) if x[0] > fi else x
    for a, b in pairs:
        if fi in (a[0], b[0]):
            raise ValueError("factor still paired")
    factors = c.factors[:fi] + c.factors[fi + 1:]
    return Contraction(factors, tuple((shift(a), shift(b)) for a, b in pairs),
                       tuple(shift(s) for s in free))


# ---------------------------------------------------------------- trace reduction

_RIEMANN_TRACE = {  # traced intrinsic pair -> (sign, remaining intrinsic positions in Ricci order)
    (0, 2): (1, (1, 3)), (1, 3): (1, (0, 2)),
    (0, 3): (-1, (1, 2)), (1, 2): (-1, (0, 3)),
}


def _replace_factor(c: Contraction, fi: int, newf: Factor, keep: tuple) -> Contraction:
    """Swap factor ``fi`` for ``newf`` whose intrinsic slots are the old
    intrinsic positions ``keep`` (derivative slots carried over); the other
    intrinsic slots of the old factor must be paired among themselves."""
    old = c.factors[fi]
    mapping = {}
    for s in range(old.m):
        mapping[(fi, s)] = (fi, s)
    for j, p in enumerate(keep):
        mapping[(fi, old.m + p)] = (fi, old.m + j)
    dropped = {(fi, old.m + p) for p in range(old.nint) if p not in keep}
    pairs = []
    for a, b in c.pairs:
        if a in dropped or b in dropped:
            if not (a in dropped and b in dropped):
                raise ValueError("trace pair not internal")
            continue
        pairs.append((mapping.get(a, a), mapping.get(b, b)))
    free = [mapping.get(s, s) for s in c.free]
    factors = list(c.factors)
    factors[fi] = newf
    return Contraction(tuple(factors), tuple(pairs), tuple(free))


def reduce_traces(c: Contraction) -> tuple:
    """Eliminate metrics and intrinsic traces.

    Returns ``(coef, contraction)``; ``coef`` is 0 when a trace of the Weyl
    tensor (or an antisymmetric pair) appears, ``n``-powers from metric
    self-traces, and signs from Riemann traces.
    """
    coef = DimRatio.of(1)
    changed = True
    while changed:
        changed = False
        for fi, f in enumerate(c.factors):
            if f.kind is Kind.METRIC:
                a, b = (fi, 0), (fi, 1)
                pa, pb = c.partner.get(a), c.partner.get(b)
                if pa == b:
                    coef = coef * DimRatio.n()
                    c = drop_factor(c, fi, tuple(p for p in c.pairs if p != (a, b)))
                    changed = True
                    break
                if pa is None and pb is None:
                    continue
                pairs = [p for p in c.pairs if a not in p and b not in p]
                free = list(c.free)
                if pa is not None and pb is not None:
                    pairs.append((pa, pb))
                else:
                    inner, outer = (pa, b) if pa is not None else (pb, a)
                    free[free.index(outer)] = inner
                c = drop_factor(c, fi, tuple(pairs), tuple(free))
                changed = True
                break
            if f.kind in (Kind.RIEMANN, Kind.WEYL, Kind.RICCI, Kind.SCHOUTEN, Kind.H):
                ints = [(fi, f.m + p) for p in range(f.nint)]
                for x, y in itertools.combinations(range(f.nint), 2):
                    if c.partner.get(ints[x]) != ints[y]:
                        continue
                    if f.kind is Kind.WEYL or (f.kind is Kind.RIEMANN and (x, y) in ((0, 1), (2, 3))):
                        return DimRatio.of(0), c
                    if f.kind is Kind.RIEMANN:
                        sign, keep = _RIEMANN_TRACE[(x, y)]
                        c = _replace_factor(c, fi, Factor(Kind.RICCI, f.m), keep)
                        coef = coef * sign
                        changed = True
                    elif f.kind is Kind.RICCI:
                        c = _replace_factor(c, fi, Factor(Kind.SCALAR, f.m), ())
                        changed = True
                    break
                if changed:
                    break
    return coef, c


# ---------------------------------------------------------------- canonical form

_FREE_BASE = 0
_PLACED_BASE = 1 << 20
_UNPLACED_BASE = 1 << 40


def _refined_colors(c: Contraction) -> list:
    col = [f.color() for f in c.factors]
    freeidx = {s: k for k, s in enumerate(c.free)}
    for _ in range(len(c.factors) + 1):
        ids = {x: i for i, x in enumerate(sorted(set(col)))}
        cur = [ids[x] for x in col]
        new = []
        for i, f in enumerate(c.factors):
            sig = []
            for s in range(f.nslots):
                cls = 0 if f.is_deriv(s) else 1
                p = c.partner.get((i, s))
                if p is None:
                    sig.append((cls, -1, freeidx[(i, s)], 0))
                else:
                    pf = c.factors[p[0]]
                    sig.append((cls, cur[p[0]], 0 if pf.is_deriv(p[1]) else 1, int(p[0] == i)))
            new.append((col[i], tuple(sorted(sig))))
        if len(set(new)) == len(set(col)):
            break
        col = new
    ids = {x: i for i, x in enumerate(sorted(set(col)))}
    return [ids[x] for x in col]


@dataclass
class _State:
    rank_of: dict
    perm_of: dict
    sign: int
    remaining: frozenset


def _encode(c: Contraction):
    """Lexicographically minimal row encoding over all labelings.

    Returns ``(sign, encoding, base_colors)``; sign 0 marks a term forced to
    vanish by a signed automorphism.
    """
    nf = len(c.factors)
    colors = _refined_colors(c)
    order = sorted(range(nf), key=lambda i: colors[i])
    colseq = [colors[i] for i in order]
    freeidx = {s: k for k, s in enumerate(c.free)}

    def code(st: _State, f_self: int, perm_self, rank_self: int, slot: Slot) -> int:
        p = c.partner.get(slot)
        if p is None:
            return _FREE_BASE + freeidx[slot]
        pf, ps = p
        fac = c.factors[pf]
        if pf == f_self:
            rank, perm = rank_self, perm_self
        elif pf in st.rank_of:
            rank, perm = st.rank_of[pf], st.perm_of[pf]
        else:
            return _UNPLACED_BASE + colors[pf] * 2 + (0 if fac.is_deriv(ps) else 1)
        lab = 0 if fac.is_deriv(ps) else 1 + perm[ps - fac.m]
        return _PLACED_BASE + rank * 8 + lab

    states = [_State({}, {}, 1, frozenset(range(nf)))]
    rows = []
    for r in range(nf):
        best = None
        nxt = []
        for st in states:
            for f in sorted(st.remaining):
                if colors[f] != colseq[r]:
                    continue
                fac = c.factors[f]
                for perm, sg in GROUPS[fac.kind]:
                    dcodes = tuple(sorted(code(st, f, perm, r, (f, s)) for s in range(fac.m)))
                    icodes = [0] * fac.nint
                    for j in range(fac.nint):
                        icodes[perm[j]] = code(st, f, perm, r, (f, fac.m + j))
                    row = (colors[f], fac.color(), dcodes, tuple(icodes))
                    if best is None or row < best:
                        best = row
                        nxt = []
                    if row == best:
                        ro = dict(st.rank_of)
                        ro[f] = r
                        po = dict(st.perm_of)
                        po[f] = perm
                        nxt.append(_State(ro, po, st.sign * sg, st.remaining - {f}))
        rows.append(best)
        # deduplicate identical partial labelings reached along different paths
        uniq = {}
        for st in nxt:
            key = (tuple(sorted(st.rank_of.items())), tuple(sorted(st.perm_of.items())))
            if key in uniq and uniq[key].sign != st.sign:
                uniq[key].sign = 0
            uniq.setdefault(key, st)
        states = list(uniq.values())
    signs = {st.sign for st in states}
    sign = 0 if (0 in signs or len(signs) > 1) else signs.pop()
    return sign, tuple(rows), len(c.free)


def _decode(rows: tuple, nfree: int) -> Contraction:
    """Rebuild the representative contraction of an encoding."""
    kinds = list(Kind)
    factors = [Factor(kinds[col[0]], col[1], col[2]) for _, col, _, _ in rows]
    refined = [row[0] for row in rows]
    pairs, free = [], [None] * nfree
    used = set()
    for r, (_, _, dcodes, icodes) in enumerate(rows):
        fac = factors[r]
        slot_codes = [((r, s), cd) for s, cd in enumerate(dcodes)]
        slot_codes += [((r, fac.m + j), cd) for j, cd in enumerate(icodes)]
        for slot, cd in slot_codes:
            if slot in used:
                continue
            if cd < _PLACED_BASE:
                free[cd - _FREE_BASE] = slot
                used.add(slot)
                continue
            if cd >= _UNPLACED_BASE:
                continue
            rank, lab = divmod(cd - _PLACED_BASE, 8)
            other = factors[rank]
            if lab:
                target = (rank, other.m + lab - 1)
            elif rank == r:
                want = _PLACED_BASE + r * 8
                target = next((r, s) for s in range(fac.m)
                              if (r, s) not in used and (r, s) != slot and dcodes[s] == want)
            else:
                cls = 0 if fac.is_deriv(slot[1]) else 1
                want = _UNPLACED_BASE + refined[r] * 2 + cls
                target = next((rank, s) for s in range(other.m)
                              if (rank, s) not in used and rows[rank][2][s] == want)
            used.add(slot)
            used.add(target)
            pairs.append((slot, target))
    return Contraction(tuple(factors), tuple(pairs), tuple(free))


@dataclass(frozen=True)
class Canonical:
    sign: int
    key: tuple
    contraction: Contraction


def canonical(c: Contraction) -> tuple:
    """(coef, key, canonical contraction) after trace reduction."""
    coef, c2 = reduce_traces(c)
    if coef.is_zero():
        return coef, None, None
    sign, rows, nfree = _encode(c2)
    if sign == 0:
        return DimRatio.of(0), None, None
    key = (rows, nfree)
    return coef * sign, key, _decode(rows, nfree)


def canonicalize(c: Contraction):
    """Return ``(sign, canonical)``.

    ``sign`` is +1, -1 or 0; when metric self-traces are eliminated it is a
    DimRatio multiple of a power of n instead.
    """
    coef, _, can = canonical(c)
    if coef.is_zero():
        return 0, None
    if coef.is_const():
        v = coef.const_value()
        if v in (1, -1):
            return int(v), can
    return coef, can


# ---------------------------------------------------------------- linear combinations

class LinComb:
    """A list of (coef, Contraction) terms; ``collect`` merges by canonical key."""

    __slots__ = ("terms", "_canon")

    def __init__(self, terms: Iterable = (), *, _canon: bool = False):
        self.terms = tuple((as_coef(a), c) for a, c in terms)
        self._canon = _canon

    @classmethod
    def of(cls, c: Contraction, coef=1) -> "LinComb":
        return cls([(coef, c)])

    def __iter__(self) -> Iterator:
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: "LinComb") -> "LinComb":
        return LinComb(self.terms + other.terms)

    def __neg__(self):
        return LinComb([(-a, c) for a, c in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k) -> "LinComb":
        k = as_coef(k)
        return LinComb([(k * a, c) for a, c in self.terms], _canon=self._canon)

    __rmul__ = scale

    def map_coefs(self, fn) -> "LinComb":
        return LinComb([(fn(a), c) for a, c in self.terms])

    def at(self, n: int) -> "LinComb":
        """Coefficients evaluated at concrete n."""
        return LinComb([(DimRatio.of(a.eval_at(n)), c) for a, c in self.terms])

    def collect(self) -> "LinComb":
        if self._canon:
            return self
        acc: dict = {}
        reps: dict = {}
        for a, c in self.terms:
            k, key, can = canonical(c)
            if key is None:
                continue
            v = a * k
            acc[key] = acc[key] + v if key in acc else v
            reps.setdefault(key, can)
        out = [(acc[k], reps[k]) for k in sorted(acc) if not acc[k].is_zero()]
        return LinComb(out, _canon=True)

    def keyed(self) -> dict:
        """Mapping canonical key -> (coef, contraction) of the collected form."""
        out = {}
        for a, c in self.collect().terms:
            _, key, _ = canonical(c)
            out[key] = (a, c)
        return out

    def is_zero(self) -> bool:
        return not self.collect().terms

    def __str__(self):
        from .textio import format_lincomb
        return format_lincomb(self)

    def __repr__(self):
        return f"LinComb({self})"


def equal_mod_symmetry(a: LinComb, b: LinComb) -> bool:
    return (a - b).is_zero()


def free_index_divergence(v: Contraction) -> LinComb:
    """Leibniz expansion of div over the unique free slot of ``v``."""
    if len(v.free) != 1:
        raise ValueError(f"divergence needs exactly one free slot, found {len(v.free)}")
    target = v.free[0]
    out = []
    for fi, f in enumerate(v.factors):
        if f.kind is Kind.METRIC:
            continue
        out.append((1, add_derivative(v, fi, target)))
    return LinComb(out)


def divergence_terms(v: Contraction, coef=1) -> LinComb:
    return free_index_divergence(v).scale(coef)


@dataclass
class GradePolicy:
    """Truncation policy for length-raising corrections.

    ``discard`` drops terms of length > ``sigma_max`` (recording the event in
    ``events``); ``track`` keeps them.  ``sigma_max=None`` means the length of
    the input term.
    """
    sigma_max: Optional[int] = None
    mode: str = "discard"
    events: list = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in ("discard", "track"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def track(self) -> bool:
        return self.mode == "track"


def substitute(c: Contraction, fi: int, piece: Contraction, slots=None) -> Contraction:
    """Replace factor ``fi`` by ``piece``, whose free slots stand, in order,
    for the slots of the removed factor.

    With ``slots`` the free slots of ``piece`` stand for those slots only;
    every other slot of the factor must be paired inside the factor, and
    those pairs disappear with it.  The first factor of ``piece`` takes
    position ``fi``; any further ones are appended, so the other factors
    keep their positions.
    """
    f = c.factors[fi]
    slots = tuple(range(f.nslots)) if slots is None else tuple(slots)
    if len(piece.free) != len(slots):
        raise ValueError(f"piece has {len(piece.free)} free slots, expected {len(slots)}")
    base = len(c.factors) - 1

    def inner(s):
        return (fi if s[0] == 0 else base + s[0], s[1])

    hole = {s: inner(piece.free[i]) for i, s in enumerate(slots)}
    kept = []
    for a, b in c.pairs:
        if a[0] == fi and b[0] == fi and a[1] not in hole and b[1] not in hole:
            continue
        if (a[0] == fi and a[1] not in hole) or (b[0] == fi and b[1] not in hole):
            raise ValueError("a replaced slot is paired outside the factor")
        kept.append((a, b))

    def outer(s):
        return hole[s[1]] if s[0] == fi else s

    pairs = [(outer(a), outer(b)) for a, b in kept]
    pairs += [(inner(a), inner(b)) for a, b in piece.pairs]
    free = [outer(s) for s in c.free]
    if piece.factors:
        factors = c.factors[:fi] + piece.factors[:1] + c.factors[fi + 1:] + piece.factors[1:]
    else:
        raise ValueError("empty piece")
    return Contraction(factors, tuple(pairs), tuple(free))


def substitute_lincomb(c: Contraction, fi: int, piece: "LinComb", coef=1, slots=None) -> "LinComb":
    return LinComb([(as_coef(coef) * a, substitute(c, fi, p, slots)) for a, p in piece])
