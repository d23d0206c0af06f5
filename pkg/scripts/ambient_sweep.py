"""Net constant of the ambient |R~|^2 reduction for a range of even n.

    python scripts/ambient_sweep.py --from 10 --to 20 --reduce 10 12
"""
import argparse
import json
import time
from dataclasses import dataclass, field

from tcalc.ambient import AmbientConfig, reduce_to_canonical_quadratic, verify_ambient_constant


@dataclass
class SweepConfig:
    lo: int = 10
    hi: int = 20
    reduce_at: list = field(default_factory=lambda: [10, 12])
    json_out: str = ""


def run(cfg: SweepConfig) -> list:
    rows = []
    for n in range(cfg.lo, cfg.hi + 1, 2):
        mode = "reduce" if n in cfg.reduce_at else "closed"
        t0 = time.perf_counter()
        red = reduce_to_canonical_quadratic(n, AmbientConfig(multipliers=mode))
        full = verify_ambient_constant(n, AmbientConfig(multipliers="closed"))
        rows.append({
            "n": n, "mode": mode, "net_constant": str(red.net), "closed_form": str(red.closed_form),
            "leftover": str(red.leftover), "leftover_expected": str(red.leftover_expected),
            "yrows": {str(k): str(v) for k, v in red.yrow_values.items()},
            "positive": red.net > 0, "constant": full["constant"],
            "seconds": round(time.perf_counter() - t0, 2),
        })
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--from", dest="lo", type=int, default=10)
    ap.add_argument("--to", dest="hi", type=int, default=20)
    ap.add_argument("--reduce", nargs="*", type=int, default=[10, 12],
                    help="dimensions where every multiplier is derived by integration by parts")
    ap.add_argument("--json", default="")
    a = ap.parse_args()
    rows = run(SweepConfig(a.lo, a.hi, a.reduce, a.json))
    print(f"{'n':>3} {'mode':>7} {'net':>14} {'leftover':>12} {'constant':>22}  last y-row")
    for r in rows:
        last = r["yrows"][max(r["yrows"], key=int)] if r["yrows"] else "-"
        print(f"{r['n']:>3} {r['mode']:>7} {r['net_constant']:>14} {r['leftover']:>12} "
              f"{r['constant']:>22}  {last}")
    if a.json:
        with open(a.json, "w") as f:
            json.dump(rows, f, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
