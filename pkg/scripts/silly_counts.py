"""Multiplicity of the sharp contraction after the silly transform, and the
coefficient left after decomposing D^il W_ijkl."""
import argparse
from fractions import Fraction

from tcalc.divergence import silly_integrate_by_parts, silly_spec
from tcalc.textio import parse

SRC = "contr(Lap^[1] D[i,l] W[i,j,k,l] D[a,b] W[a,j,k,b] Lap^[{g1}] psi1 Lap^[1] psi2)"
SHARP = "contr(D^[{g1}][t] Lap^[1] D[i,l] {K}[i,j,k,l] D^[{g1}][t] D[a,b] W[a,j,k,b] psi1 Lap^[1] psi2)"


def coefficient(lc, target_text):
    (_, tgt), = parse(target_text).collect().terms
    return sum((a for a, c in lc.collect() if c == tgt), Fraction(0))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gammas", type=int, nargs="*", default=[0, 1, 2, 3])
    ap.add_argument("--n", type=int, nargs="*", default=[10, 12])
    a = ap.parse_args()
    for g in a.gammas:
        src = parse(SRC.format(g1=g + 1))
        mult = coefficient(silly_integrate_by_parts(src, 1), SHARP.format(g1=g + 1, K="W"))
        spec = silly_spec(src, 1)
        vals = [str(coefficient(spec.at(n), SHARP.format(g1=g + 1, K="Rm"))) for n in a.n]
        print(f"gamma={g}: multiplicity {mult} (2^gamma = {2 ** g}); after decomposition "
              + ", ".join(f"n={n}: {v}" for n, v in zip(a.n, vals)))


if __name__ == "__main__":
    main()
