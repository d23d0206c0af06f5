"""Multiplier of each quadratic Weyl shape relative to |D^(n/2-3) D^s W_sjkl|^2."""
import argparse

from tcalc.divergence import QUADRATIC_SHAPES, reduce_quadratic_weyl
from tcalc.textio import parse

FAMILIES = {
    "weyl_dd": lambda N: ["contr(W[i,j,k,l] Lap^[%d] D[i,t] W[t,j,k,l])" % (N - 1)],
    "divdiv_pair": lambda N: ["contr(Lap^[%d] D[s,t] W[s,j,t,l] Lap^[%d] D[u,v] W[u,j,v,l])" % (x, N - 2 - x)
                              for x in range(N - 1)],
    "div_pair": lambda N: ["contr(Lap^[%d] D[s] W[s,j,k,l] Lap^[%d] D[t] W[t,j,k,l])" % (x, N - 1 - x)
                           for x in range(N)],
    "graddiv_pair": lambda N: ["contr(Lap^[%d] D[a,s] W[s,j,k,l] Lap^[%d] D[a,t] W[t,j,k,l])" % (x, N - 2 - x)
                               for x in range(N - 1)],
    "crossed": lambda N: ["contr(Lap^[%d] D[p,a] W[a,b,c,d] Lap^[%d] D[b,q] W[q,p,c,d])" % (x, N - 2 - x)
                          for x in range(N - 1)],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="*", default=[10, 12, 14])
    a = ap.parse_args()
    assert set(FAMILIES) == set(QUADRATIC_SHAPES)
    for n in a.n:
        N = n // 2 - 2
        for name, fam in FAMILIES.items():
            lams, ok = set(), True
            for text in fam(N):
                (_, c), = parse(text).terms
                cert, tgt = reduce_quadratic_weyl(c, n)
                lams.add(str(tgt.terms[0][0].eval_at(n)) if tgt.terms else "0")
                ok &= cert.check(n)
            print(f"n={n:<3} {name:<13} multiplier {','.join(sorted(lams)):<6} certificates {'ok' if ok else 'FAILED'}")


if __name__ == "__main__":
    main()
