"""Independent oracles that share no code with the package's rewriting.

Fourier symbol: on flat space a contraction of psi factors is a polynomial
in the frequencies of its labels, each index line contributing xi_a . xi_b
(a closed metric loop contributes the dimension).  Total divergences are
exactly the combinations whose symbol vanishes when the frequencies of all
psi factors sum to zero.
"""
from fractions import Fraction

import numpy as np

from tcalc.expr import Kind


def _walk(c, slot):
    """Follow an index line from ``slot`` through metric factors to its far end."""
    while True:
        far = c.partner[slot]
        if c.factors[far[0]].kind is not Kind.METRIC:
            return far
        slot = (far[0], 1 - far[1])


def symbol(c, freq, dim) -> Fraction:
    """``freq`` maps factor index -> integer vector."""
    if any(f.kind not in (Kind.PSI, Kind.METRIC) for f in c.factors):
        raise ValueError("the Fourier oracle handles psi and metric factors only")
    val = Fraction(1)
    seen = set()
    for i, f in enumerate(c.factors):
        if f.kind is Kind.METRIC:
            continue
        for s in range(f.nslots):
            if (i, s) in seen:
                continue
            far = _walk(c, (i, s))
            seen |= {(i, s), far}
            val *= int(np.dot(freq[i], freq[far[0]]))
    # metric loops not touching a psi factor
    left = {(i, s) for i, f in enumerate(c.factors) if f.kind is Kind.METRIC for s in (0, 1)}
    loops = 0
    while left:
        start = left.pop()
        cur = start
        while True:
            other = (cur[0], 1 - cur[1])
            left.discard(other)
            nxt = c.partner[other]
            left.discard(nxt)
            if nxt == start:
                break
            cur = nxt
        loops += 1
    return val * dim ** loops


def psi_freq(c, label_vecs):
    return {i: label_vecs[f.label] for i, f in enumerate(c.factors) if f.kind is Kind.PSI}


def frequencies(labels, dim, seed):
    """Integer vectors for ``labels`` summing to zero."""
    rng = np.random.default_rng(seed)
    v = rng.integers(-3, 4, size=(len(labels), dim))
    v[-1] = -v[:-1].sum(axis=0)
    return {lab: tuple(int(x) for x in row) for lab, row in zip(labels, v)}


def lincomb_symbol(lc, n, label_vecs) -> Fraction:
    return sum((a.eval_at(n) * symbol(c, psi_freq(c, label_vecs), n) for a, c in lc), Fraction(0))
