"""Command line front end and the data-driven verification suites.

Exit codes: 0 when every verdict is PASS, 1 on any FAIL, 2 for usage and
input errors.  Suites live in ``tcalc/suites/*.json``; each holds a default
dimension sweep and a list of checks (see :data:`CHECKS`).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

from . import __version__
from .ambient import AmbientConfig, reduce_to_canonical_quadratic, verify_ambient_constant
from .divergence import (DivergenceError, eliminate_internal_contractions, reduce_quadratic_weyl,
                         relate_mod_divergence, silly_integrate_by_parts, silly_spec)
from .expr import GradePolicy, LinComb, divergence_terms, stats
from .numeval import evaluate, graded_coefficient, make_random_jet
from .ratcoef import as_coef, eval_at, parse_coef
from .rewrite import (DIRECTED, RULES, NormalizeError, RewriteError, manifest, normalize,
                      schouten_text, weyl_divergence_constants)
from .textio import TcSyntaxError, format_lincomb, parse, parse_file

__all__ = ["SuiteSpec", "load_suite", "list_suites", "run_suite", "main"]


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- suites

@dataclass
class SuiteSpec:
    name: str
    description: str
    source: str
    dims: list
    checks: list = field(default_factory=list)


def list_suites() -> list:
    root = resources.files("tcalc") / "suites"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_suite(name: str) -> SuiteSpec:
    path = resources.files("tcalc") / "suites" / f"{name}.json"
    if not path.is_file():
        raise UsageError(f"unknown suite {name!r}; known: {', '.join(list_suites())}")
    d = json.loads(path.read_text(encoding="utf-8"))
    return SuiteSpec(d["name"], d.get("description", ""), d.get("source", ""),
                     list(d.get("dims", [])), list(d.get("checks", [])))


def _int_at(text, n: int) -> int:
    v = eval_at(parse_coef(str(text)), n)
    if v.denominator != 1:
        raise ValueError(f"{text!r} is not an integer at n={n}")
    return int(v)


def _family(check: dict, n: int) -> list:
    """Expand ``{var}`` placeholders over an inclusive range given in n."""
    fam = check.get("family")
    if not fam:
        return [{}]
    lo, hi = _int_at(fam["from"], n), _int_at(fam["to"], n)
    return [{fam["var"]: v} for v in range(lo, hi + 1)]


def _coef_equal(a, b) -> bool:
    a, b = as_coef(a), as_coef(b)
    hits = 0
    for n in range(5, 80):
        try:
            if eval_at(a, n) != eval_at(b, n):
                return False
            hits += 1
        except ZeroDivisionError:
            continue
    return hits > 10


def _expected_multiplier(check: dict, n: int) -> Fraction:
    val = eval_at(parse_coef(str(check.get("multiplier", "1"))), n)
    alt = check.get("alternating")
    if alt is not None:
        val *= (-1) ** (n // 2 + int(alt))
    return val


def _jets(spec: dict, n: int, lc: LinComb):
    D = max([f.m for _, c in lc for f in c.factors] + [0])
    order = spec.get("order") or D + 2
    count = int(spec.get("jets", 1))
    seed = int(spec.get("seed", 0))
    for s in range(seed, seed + count):
        yield make_random_jet(n, order, seed=s, min_degree=int(spec.get("min_degree", 1)),
                              sparse=spec.get("sparse"))


def _numeric(spec: Optional[dict], n: int, residual: LinComb, sigma: int) -> tuple:
    """(ok, text) for the graded residual on seeded jets."""
    if not spec or n not in spec.get("dims", [n]):
        return True, ""
    residual = residual.at(n).collect()
    if not residual.terms:
        return True, f"numeric: residual vanishes identically"
    bad = []
    for jet in _jets(spec, n, residual):
        v = graded_coefficient(residual, jet, sigma)
        if v != 0:
            bad.append((jet.seed, v))
    k = int(spec.get("jets", 1))
    if bad:
        return False, f"numeric: t^{sigma} residual nonzero on {len(bad)}/{k} jets (seed {bad[0][0]}: {bad[0][1]})"
    return True, f"numeric: t^{sigma} residual 0 on {k} jets"


def _check_normal_form(check: dict, n: int) -> tuple:
    lc = parse(check["expr"], n)
    sigma = min(stats(c).sigma for _, c in lc)
    rules = check.get("rules")
    out = normalize(lc, n=n) if rules is None else normalize(lc, rules, n=n)
    if out.terms:
        return False, f"normal form has {len(out.terms)} terms: {format_lincomb(out)[:200]}"
    ok, txt = _numeric(check.get("numeric"), n, lc, sigma)
    return ok, "normal form empty" + (f"; {txt}" if txt else "")


def _check_exact_divergence(check: dict, n: int) -> tuple:
    lc = parse(check["expr"], n)
    (b, v), = parse(check["vector_field"], n).terms
    diff = (lc - divergence_terms(v, b)).collect()
    if diff.terms:
        return False, f"difference is {format_lincomb(diff)[:200]}"
    return True, "expression minus divergence is exactly 0"


def _check_reduce(check: dict, n: int) -> tuple:
    msgs, ok_all = [], True
    for sub in _family(check, n):
        text = check["expr"].format(**sub)
        (a, c), = parse(text, n).collect().terms
        ref = check.get("reference", "canonical-quadratic")
        if ref == "canonical-quadratic":
            cert, tgt = reduce_quadratic_weyl(c, n)
            lam = tgt.terms[0][0].eval_at(n) if tgt.terms else Fraction(0)
        else:
            (rb, rc), = parse(ref.format(**sub), n).collect().terms
            cert, lam = relate_mod_divergence(c, rc, n)
            lam = as_coef(lam).eval_at(n) / rb.eval_at(n)
        lam *= a.eval_at(n)
        want = _expected_multiplier(check, n)
        exact = cert.check(n)
        num_ok, txt = _numeric(check.get("numeric"), n, cert.residual(), cert.sigma)
        ok = lam == want and exact and num_ok
        ok_all &= ok
        tag = ",".join(f"{k}={v}" for k, v in sub.items())
        msgs.append(f"{tag + ': ' if tag else ''}multiplier {lam} (expected {want}), "
                    f"certificate {'exact' if exact else 'FAILED'}" + (f", {txt}" if txt else ""))
    return ok_all, "; ".join(msgs)


def _check_ambient(check: dict, n: int) -> tuple:
    cfg = AmbientConfig(multipliers=check.get("multipliers", "reduce"))
    if isinstance(check.get("multipliers"), dict):
        cfg = AmbientConfig(multipliers="reduce" if n in check["multipliers"].get("reduce", []) else "closed")
    red = reduce_to_canonical_quadratic(n, cfg)
    want = check.get("net_constant", {}).get(str(n))
    problems = []
    if not red.yrow_symbolic_zero:
        problems.append("y-row identity is not 0")
    if red.leftover != red.leftover_expected:
        problems.append(f"leftover {red.leftover} != {red.leftover_expected}")
    if red.net <= 0:
        problems.append("net constant not positive")
    if red.net != red.independent_sum:
        problems.append(f"independent sum {red.independent_sum} differs")
    if not red.certificates_ok:
        problems.append("a certificate failed")
    if want is not None and red.net != Fraction(want):
        problems.append(f"net constant {red.net} != expected {want}")
    elif want is None and red.net != red.closed_form:
        problems.append(f"net constant {red.net} != closed form {red.closed_form}")
    detail = f"net_constant {red.net}, leftover {red.leftover} ({cfg.multipliers} multipliers)"
    return not problems, detail + ("; " + "; ".join(problems) if problems else "")


def _check_rule_numeric(check: dict, n: int) -> tuple:
    rule = RULES[check["rule"]]
    spec = check.get("numeric", {"jets": 1})
    if n not in spec.get("dims", [n]):
        return True, "not run at this n"
    count = 0
    for text in check["exprs"]:
        lc = parse(text, n)
        (a, c), = lc.terms
        kw = {"policy": GradePolicy(mode="track")} if rule.name == "commute_derivatives" else {}
        out = None
        for at, f in enumerate(c.factors):
            if f.kind in rule.kinds:
                try:
                    out = rule(c, at, **kw).scale(a)
                    break
                except RewriteError:
                    continue
        if out is None:
            return False, f"{rule.name} does not apply to {text}"
        T = stats(c).sigma + 1
        D = max(f.m for f in c.factors)
        for s in range(int(spec.get("seed", 0)), int(spec.get("seed", 0)) + int(spec.get("jets", 1))):
            jet = make_random_jet(n, D + 3, seed=s, min_degree=1)
            lhs = evaluate(c, jet, T).scale(a.eval_at(n))
            rhs = [evaluate(t, jet, T).scale(b.eval_at(n)) for b, t in out]
            tot = lhs
            for r in rhs:
                tot = tot + r.scale(-1)
            if not tot.is_zero():
                return False, f"{rule.name}: residual {list(map(str, tot.coeffs))} on {text} seed {s}"
            count += 1
    return True, f"{rule.name}: residual exactly 0 on {count} evaluations"


def _check_constants(check: dict, n: int) -> tuple:
    if check["name"] == "weyl-divergence":
        got = dict(zip(("a", "c1", "c2"), weyl_divergence_constants()))
    elif check["name"] == "schouten":
        got = {}
        for b, c in parse(schouten_text(0)):
            got["ricci" if c.factors[0].kind.name == "RICCI" else "scalar"] = b
    else:
        raise UsageError(f"unknown constants {check['name']!r}")
    bad = [k for k, v in check["expect"].items() if not _coef_equal(got[k], parse_coef(v))]
    detail = ", ".join(f"{k}={got[k]}" for k in sorted(got))
    return not bad, detail + (f"; mismatch in {bad}" if bad else "")


def _check_silly(check: dict, n: int) -> tuple:
    msgs, ok_all = [], True
    for g in check["gammas"]:
        src = parse(check["source"].format(g=g, g1=g + 1), n)
        (_, tgt), = parse(check["target"].format(g=g, g1=g + 1), n).collect().terms
        out = (silly_spec(src, check.get("label", 1)) if check.get("decompose")
               else silly_integrate_by_parts(src, check.get("label", 1))).at(n).collect()
        got = sum((a.eval_at(n) for a, c in out if c == tgt), Fraction(0))
        want = Fraction(2) ** (g + int(check.get("power_offset", 0)))
        want *= eval_at(parse_coef(str(check.get("factor", "1"))), n)
        ok = got == want
        ok_all &= ok
        msgs.append(f"gamma={g}: {got} (expected {want})")
    return ok_all, "; ".join(msgs)


CHECKS = {
    "normal-form": _check_normal_form,
    "exact-divergence": _check_exact_divergence,
    "reduce": _check_reduce,
    "ambient": _check_ambient,
    "rule-numeric": _check_rule_numeric,
    "constants": _check_constants,
    "silly": _check_silly,
}


def _run_check(args) -> tuple:
    check, n = args
    t0 = time.perf_counter()
    try:
        ok, detail = CHECKS[check["kind"]](check, n)
    except (DivergenceError, NormalizeError, RewriteError, TcSyntaxError, ValueError) as e:
        ok, detail = False, f"error: {e}"
    label = check.get("label_text") or check["kind"]
    return ok, f"{label}: {detail}", (time.perf_counter() - t0) * 1000


def _workers() -> int:
    env = os.environ.get("TC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"TC_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def run_suite(name: str, dims=None, workers: Optional[int] = None) -> dict:
    """Run every check of suite ``name`` at each n of ``dims`` (default: the
    suite's own sweep).  Work items run concurrently; the report is ordered
    by n and check position."""
    suite = load_suite(name)
    ns = sorted(set(suite.dims if dims is None else dims))
    for n in ns:
        if n < 3:
            raise UsageError(f"dimension {n} is too small")
    for ch in suite.checks:
        if ch.get("kind") not in CHECKS:
            raise UsageError(f"suite {name}: unknown check kind {ch.get('kind')!r}")
    items = [(ch, n) for n in ns for ch in suite.checks]
    workers = _workers() if workers is None else workers
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(min(workers, len(items))) as ex:
            results = list(ex.map(_run_check, items))
    else:
        results = [_run_check(it) for it in items]
    dims_out = []
    k = len(suite.checks)
    for i, n in enumerate(ns):
        chunk = results[i * k:(i + 1) * k]
        ok = all(r[0] for r in chunk)
        dims_out.append({"n": n, "verdict": "PASS" if ok else "FAIL",
                         "detail": " | ".join(r[1] for r in chunk) or "no checks",
                         "ms": int(round(sum(r[2] for r in chunk)))})
    return {"suite": name, "dims": dims_out, "version": __version__}


def report_passed(report: dict) -> bool:
    return all(d["verdict"] == "PASS" for d in report["dims"])


# ---------------------------------------------------------------- subcommands

def _read(path: str) -> list:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(str(e))
    return text


def _statements(path: str, n: Optional[int]) -> list:
    return parse_file(_read(path), n)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def cmd_canon(a) -> int:
    for st in _statements(a.file, a.n):
        print(format_lincomb(st.value.collect()))
    return 0


def cmd_stats(a) -> int:
    out = []
    for st in _statements(a.file, a.n):
        for b, c in st.value.collect():
            s = stats(c)
            out.append({"line": st.line, "coef": str(b), "sigma": s.sigma, "delta": s.delta,
                        "laplacians": s.deltabar, "ricci_scalar": s.q, "weight": s.weight})
    print(_dump(out))
    return 0


def cmd_rewrite(a) -> int:
    if a.list:
        print(_dump(manifest()))
        return 0
    if not a.rule or not a.file:
        raise UsageError("rewrite needs --rule NAME and FILE (or --list)")
    if a.rule not in RULES:
        raise UsageError(f"unknown rule {a.rule!r}; known: {', '.join(sorted(RULES))}")
    rule = RULES[a.rule]
    policy = GradePolicy(mode="track")
    for st in _statements(a.file, a.n):
        if rule.name in DIRECTED:
            res = normalize(st.value, [rule.name], policy)
        else:
            terms = []
            for b, c in st.value.collect():
                done = False
                for at, f in enumerate(c.factors):
                    if f.kind in rule.kinds:
                        kw = {"policy": policy} if rule.name == "commute_derivatives" else {}
                        try:
                            terms += list(rule(c, at, **kw).scale(b))
                            done = True
                            break
                        except RewriteError:
                            continue
                if not done:
                    terms.append((b, c))
            res = LinComb(terms).collect()
        print(format_lincomb(res))
    return 0


def cmd_divergence(a) -> int:
    certs = []
    for st in _statements(a.file, a.n):
        cert = eliminate_internal_contractions(st.value, GradePolicy(mode="track" if a.track else "discard"))
        certs.append(cert.to_json())
    print(_dump(certs if len(certs) != 1 else certs[0]))
    return 0


def cmd_ibp(a) -> int:
    for st in _statements(a.file, a.n):
        print(format_lincomb(silly_integrate_by_parts(st.value, a.psi).collect()))
    return 0


def cmd_ambient(a) -> int:
    if a.n < 8 or a.n % 2:
        raise UsageError("ambient needs an even n >= 8")
    rep = verify_ambient_constant(a.n, AmbientConfig(multipliers=a.multipliers))
    text = _dump(rep)
    if a.json:
        Path(a.json).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    print(f"n={a.n} net_constant={rep['net_constant']} constant={rep['constant']} {rep['status']}",
          file=sys.stderr)
    return 0 if rep["status"] == "PASS" else 1


def cmd_numcheck(a) -> int:
    ok = True
    for st in _statements(a.file, a.n):
        lc = st.value.at(a.n).collect()
        for s in range(a.seed, a.seed + a.jets):
            if lc.terms:
                D = max(f.m for _, c in lc for f in c.factors)
                jet = make_random_jet(a.n, D + 2, seed=s, min_degree=1)
                v = graded_coefficient(lc, jet, a.grade)
            else:
                v = Fraction(0)
            ok &= v == 0
            print(f"line {st.line} seed {s}: {v}")
    return 0 if ok else 1


def _dims(text: Optional[str]):
    if text is None:
        return None
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out += [k for k in range(int(lo), int(hi) + 1) if k % 2 == 0]
        else:
            out.append(int(part))
    return out


def cmd_verify(a) -> int:
    if a.list:
        for name in list_suites():
            print(f"{name}: {load_suite(name).description}")
        return 0
    if not a.suite:
        raise UsageError("verify needs --suite NAME (or --list)")
    try:
        dims = _dims(a.n)
    except ValueError:
        raise UsageError(f"bad dimension list {a.n!r}")
    rep = run_suite(a.suite, dims)
    text = _dump(rep)
    if a.json:
        Path(a.json).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0 if report_passed(rep) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tcalc", description="Tensor calculus for local conformal invariants.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)

    def with_file(q, required=True):
        q.add_argument("file", nargs=None if required else "?", metavar="FILE")
        q.add_argument("--n", type=int, default=None, help="dimension for D^[..] and Lap^[..] counts")

    q = sub.add_parser("canon", help="print statements in canonical form")
    with_file(q)
    q.set_defaults(fn=cmd_canon)
    q = sub.add_parser("stats", help="sigma, delta and weight per term")
    with_file(q)
    q.set_defaults(fn=cmd_stats)
    q = sub.add_parser("rewrite", help="apply one rewrite rule")
    q.add_argument("--rule")
    q.add_argument("--list", action="store_true", help="print the rule manifest")
    with_file(q, required=False)
    q.set_defaults(fn=cmd_rewrite)
    q = sub.add_parser("divergence", help="divergence certificate")
    q.add_argument("--eliminate", action="store_true", required=True,
                   help="integrate internal contractions by parts")
    q.add_argument("--track", action="store_true", help="keep longer correction terms")
    with_file(q)
    q.set_defaults(fn=cmd_divergence)
    q = sub.add_parser("ibp", help="move all derivatives off one psi factor")
    q.add_argument("--psi", type=int, required=True, metavar="H")
    with_file(q)
    q.set_defaults(fn=cmd_ibp)
    q = sub.add_parser("ambient", help="ambient-metric constant at one n")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--json", metavar="OUT")
    q.add_argument("--multipliers", choices=("reduce", "closed"), default="reduce")
    q.set_defaults(fn=cmd_ambient)
    q = sub.add_parser("numcheck", help="graded numeric residuals on seeded jets")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--grade", type=int, required=True)
    q.add_argument("--jets", type=int, default=1)
    q.add_argument("file", metavar="FILE")
    q.set_defaults(fn=cmd_numcheck)
    q = sub.add_parser("verify", help="run a verification suite")
    q.add_argument("--suite")
    q.add_argument("--n", help="comma list of dimensions, ranges as 10..20")
    q.add_argument("--json", metavar="OUT")
    q.add_argument("--list", action="store_true")
    q.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, TcSyntaxError) as e:
        print(f"tcalc: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
