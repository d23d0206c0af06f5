"""Which sign in front of |D^(n/2-3) D^s W_sjkl|^2 makes the C^2 identity hold.

Checks both signs symbolically (leading-length normal form) and on seeded
random jets (graded coefficient t^2).
"""
import argparse
from dataclasses import dataclass

from tcalc.numeval import graded_coefficient, make_random_jet
from tcalc.rewrite import normalize
from tcalc.textio import format_lincomb, parse

C2 = "contr(D^[n/2-3][r] D[s] W[t,j,k,l] D^[n/2-3][r] D[t] W[s,j,k,l])"
NW = "contr(D^[n/2-2][r] W[i,j,k,l] D^[n/2-2][r] W[i,j,k,l])"
DIV = "contr(D^[n/2-3][r] D[s] W[s,j,k,l] D^[n/2-3][r] D[t] W[t,j,k,l])"


@dataclass
class SignConfig:
    dims: tuple = (8, 10, 12)
    numeric_n: int = 8
    jets: int = 3


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="*", default=[8, 10, 12])
    ap.add_argument("--jets", type=int, default=3)
    a = ap.parse_args()
    cfg = SignConfig(tuple(a.n), 8, a.jets)
    for n in cfg.dims:
        for sign in ("+", "-"):
            diff = parse(f"{C2} - 1/2*{NW} {sign} 1/(n-3)*{DIV}", n)
            nf = normalize(diff, n=n)
            line = f"n={n} C^2 - 1/2|DW|^2 {sign} 1/(n-3)|divW|^2 -> {format_lincomb(nf)}"
            if n == cfg.numeric_n:
                vals = [graded_coefficient(diff.at(n), make_random_jet(n, n // 2, seed=s, min_degree=1), 2)
                        for s in range(1, cfg.jets + 1)]
                line += f"   numeric t^2: {[str(v) for v in vals]}"
            print(line)


if __name__ == "__main__":
    main()
