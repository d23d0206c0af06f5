"""Hypothesis strategies: random contractions and symmetry moves."""
from hypothesis import strategies as st

from tcalc.expr import GROUPS, Contraction, Factor, Kind

CURVATURE = [Kind.RIEMANN, Kind.WEYL, Kind.RICCI, Kind.SCHOUTEN, Kind.SCALAR]


@st.composite
def factors(draw, kinds=None, max_m=2, psi_labels=(1, 2, 3, 4)):
    kinds = kinds or CURVATURE + [Kind.PSI]
    kind = draw(st.sampled_from(kinds))
    m = draw(st.integers(0, max_m))
    label = draw(st.sampled_from(psi_labels)) if kind is Kind.PSI else 0
    return Factor(kind, m, label)


@st.composite
def contractions(draw, min_len=1, max_len=3, max_m=2, kinds=None, free=0, distinct_psi=False):
    """A complete (or ``free``-index) contraction with a uniformly random
    matching of its slots."""
    k = draw(st.integers(min_len, max_len))
    fs = []
    for i in range(k):
        labels = (i + 1,) if distinct_psi else (1, 2, 3, 4)
        fs.append(draw(factors(kinds=kinds, max_m=max_m, psi_labels=labels)))
    slots = [(i, s) for i, f in enumerate(fs) for s in range(f.nslots)]
    if (len(slots) - free) % 2:
        # make the slot count even by one more derivative on the first factor
        fs[0] = fs[0].bump()
        slots = [(i, s) for i, f in enumerate(fs) for s in range(f.nslots)]
    order = draw(st.permutations(slots))
    loose = tuple(order[:free])
    rest = order[free:]
    pairs = tuple((rest[2 * j], rest[2 * j + 1]) for j in range(len(rest) // 2))
    return Contraction(tuple(fs), pairs, loose)


def move_factor_order(c: Contraction, perm) -> Contraction:
    """Reorder factors: new factor j is old factor perm[j]."""
    inv = {old: new for new, old in enumerate(perm)}
    f = tuple(c.factors[p] for p in perm)
    m = lambda s: (inv[s[0]], s[1])  # noqa: E731
    return Contraction(f, tuple((m(a), m(b)) for a, b in c.pairs), tuple(m(s) for s in c.free))


def move_intrinsic(c: Contraction, fi: int, element) -> tuple:
    """Apply a symmetry of factor ``fi``: new slot m+i holds what slot
    m+perm[i] held.  Returns (contraction, sign) with contraction = sign * c."""
    perm, sign = element
    f = c.factors[fi]
    where = {(fi, f.m + perm[i]): (fi, f.m + i) for i in range(len(perm))}
    m = lambda s: where.get(s, s)  # noqa: E731
    return Contraction(c.factors, tuple((m(a), m(b)) for a, b in c.pairs),
                       tuple(m(s) for s in c.free)), sign


def move_derivatives(c: Contraction, fi: int, perm) -> Contraction:
    f = c.factors[fi]
    where = {(fi, perm[i]): (fi, i) for i in range(f.m)}
    m = lambda s: where.get(s, s)  # noqa: E731
    return Contraction(c.factors, tuple((m(a), m(b)) for a, b in c.pairs), tuple(m(s) for s in c.free))


@st.composite
def symmetry_moves(draw, c: Contraction, count=3):
    """Apply ``count`` random moves; return (moved contraction, sign)."""
    sign = 1
    for _ in range(count):
        what = draw(st.sampled_from(["order", "intrinsic", "derivative"]))
        if what == "order":
            c = move_factor_order(c, draw(st.permutations(range(len(c.factors)))))
            continue
        fi = draw(st.integers(0, len(c.factors) - 1))
        f = c.factors[fi]
        if what == "intrinsic" and f.nint:
            c, s = move_intrinsic(c, fi, draw(st.sampled_from(GROUPS[f.kind])))
            sign *= s
        elif what == "derivative" and f.m > 1:
            c = move_derivatives(c, fi, draw(st.permutations(range(f.m))))
    return c, sign
