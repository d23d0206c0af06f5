"""Parser and printer for the ``.tc`` expression language.

    lincomb := term {("+"|"-") term}
    term    := [coef "*"] "contr" "(" factor {["*"] factor} ")"
    factor  := {"D[" idx {"," idx} "]" | "D^[" expr "][" block "]" | "Lap^[" expr "]"}
               kind ["[" [idx {"," idx}] "]"]

Letters used twice are contracted, letters used once are free; free slots
are ordered by (length, name).  ``D^[k][r]`` expands to ``k`` derivative
indices ``r#1..r#k`` and ``Lap^[k]`` to ``k`` self-contracted pairs; both
need a concrete ``n`` when ``k`` mentions it.  Files hold one statement per
line, ``#`` starts a comment and ``n := 10`` fixes the dimension for the
lines that follow.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Optional

from .expr import Contraction, Factor, Kind, LinComb, INTRINSIC
from .ratcoef import DimRatio, ProdRatio, parse_coef

__all__ = ["parse", "format_lincomb", "format_contraction", "parse_file",
           "TcSyntaxError", "Statement", "index_names"]


class TcSyntaxError(SyntaxError):
    def __init__(self, msg, text="", pos=0):
        span = f" at column {pos + 1}" if text else ""
        super().__init__(f"{msg}{span}")
        self.span = (pos, pos + 1)


_KINDS = {"Rm": Kind.RIEMANN, "W": Kind.WEYL, "Ric": Kind.RICCI, "R": Kind.SCALAR,
          "P": Kind.SCHOUTEN, "Omega": Kind.OMEGA, "g": Kind.METRIC, "h": Kind.H}
_KIND_RE = re.compile(r"(Ric|Rm|R|W|P|psi(\d+)|Omega|g|h)(?![A-Za-z0-9_])")


def _eval_count(expr: str, n: Optional[int], text: str, pos: int) -> int:
    try:
        v = parse_coef(expr)
    except SyntaxError as e:
        raise TcSyntaxError(f"bad count {expr!r}", text, pos) from e
    if isinstance(v, DimRatio) and v.is_const():
        val = v.const_value()
    elif n is None:
        raise TcSyntaxError(f"count {expr!r} needs a declared n", text, pos)
    else:
        val = v.eval_at(n)
    if val.denominator != 1 or val < 0:
        raise TcSyntaxError(f"count {expr!r} is not a nonnegative integer at n={n}", text, pos)
    return int(val)


class _Parser:
    def __init__(self, text: str, n: Optional[int]):
        self.text = text
        self.pos = 0
        self.n = n
        self.fresh = itertools.count()

    def err(self, msg):
        raise TcSyntaxError(msg, self.text, self.pos)

    def ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at(self, s: str) -> bool:
        self.ws()
        return self.text.startswith(s, self.pos)

    def eat(self, s: str):
        if not self.at(s):
            self.err(f"expected {s!r}")
        self.pos += len(s)

    def bracket_body(self) -> str:
        """Text up to the matching ']' (opening bracket already consumed)."""
        depth, start = 0, self.pos
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in "[(":
                depth += 1
            elif ch in "])":
                if depth == 0 and ch == "]":
                    body = self.text[start:self.pos]
                    self.pos += 1
                    return body
                depth -= 1
            self.pos += 1
        self.err("unclosed '['")

    def lincomb(self) -> LinComb:
        terms = []
        self.ws()
        if self.pos >= len(self.text):
            self.err("empty expression")
        if self.text.strip() == "0":
            self.pos = len(self.text)
            return LinComb()
        first = True
        while True:
            self.ws()
            if self.pos >= len(self.text):
                break
            sign = 1
            if self.at("+"):
                self.pos += 1
            elif self.at("-"):
                self.pos += 1
                sign = -1
            elif not first:
                self.err("expected '+' or '-' between terms")
            first = False
            coef = self.coef()
            terms.append((coef * sign, self.contr()))
        return LinComb(terms)

    def coef(self):
        self.ws()
        m = re.compile(r"contr\s*\(").match(self.text, self.pos)
        if m:
            return DimRatio.of(1)
        depth, i = 0, self.pos
        while i < len(self.text):
            ch = self.text[i]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif depth == 0 and self.text.startswith("contr", i):
                break
            i += 1
        raw = self.text[self.pos:i].rstrip()
        if not raw.endswith("*"):
            self.err("coefficient must be followed by '*'")
        try:
            c = parse_coef(raw[:-1])
        except SyntaxError as e:
            self.err(str(e))
        self.pos = i
        return c

    def contr(self) -> Contraction:
        self.eat("contr")
        self.eat("(")
        factors = []  # (Factor, [index names in slot order])
        while True:
            self.ws()
            if self.at(")"):
                self.pos += 1
                break
            if self.at("*") or self.at("⊗"):
                self.pos += 1
                continue
            factors.append(self.factor())
        if not factors:
            self.err("contraction without factors")
        return self._build(factors)

    def factor(self):
        derivs = []
        while True:
            if self.at("D^["):
                self.eat("D^[")
                cnt = _eval_count(self.bracket_body(), self.n, self.text, self.pos)
                self.eat("[")
                block = self.bracket_body().strip()
                if not re.fullmatch(r"[A-Za-z]\w*", block):
                    self.err(f"bad index block {block!r}")
                derivs += [f"{block}#{k + 1}" for k in range(cnt)]
            elif self.at("Lap^["):
                self.eat("Lap^[")
                cnt = _eval_count(self.bracket_body(), self.n, self.text, self.pos)
                for _ in range(cnt):
                    name = f"_l{next(self.fresh)}"
                    derivs += [name, name]
            elif self.at("D["):
                self.eat("D[")
                derivs += self.idx_list(self.bracket_body())
            else:
                break
        self.ws()
        m = _KIND_RE.match(self.text, self.pos)
        if not m:
            self.err("expected a factor kind")
        self.pos = m.end()
        if m.group(2) is not None:
            kind, label = Kind.PSI, int(m.group(2))
        else:
            kind, label = _KINDS[m.group(1)], 0
        idx = []
        if self.text.startswith("[", self.pos):
            self.pos += 1
            idx = self.idx_list(self.bracket_body())
        if len(idx) != INTRINSIC[kind]:
            self.err(f"{m.group(1)} takes {INTRINSIC[kind]} indices, got {len(idx)}")
        return Factor(kind, len(derivs), label), derivs + idx

    def idx_list(self, body: str):
        body = body.strip()
        if not body:
            return []
        out = [x.strip() for x in body.split(",")]
        for x in out:
            if not re.fullmatch(r"[A-Za-z]\w*", x):
                self.err(f"bad index name {x!r}")
        return out

    def _build(self, factors) -> Contraction:
        where: dict = {}
        for fi, (f, names) in enumerate(factors):
            for s, name in enumerate(names):
                where.setdefault(name, []).append((fi, s))
        pairs, free = [], []
        for name, slots in where.items():
            if len(slots) > 2:
                self.err(f"index {name.split('#')[0]!r} appears {len(slots)} times")
            if len(slots) == 2:
                pairs.append(tuple(slots))
            else:
                free.append((name, slots[0]))
        free.sort(key=lambda t: (len(t[0]), t[0]))
        return Contraction(tuple(f for f, _ in factors), tuple(pairs), tuple(s for _, s in free))


def parse(text: str, n: Optional[int] = None) -> LinComb:
    p = _Parser(text, n)
    out = p.lincomb()
    p.ws()
    if p.pos != len(text):
        p.err("trailing input")
    return out


# ---------------------------------------------------------------- printing

def index_names():
    letters = "abcdefghijklmnopqrstuvwxyz"
    for k in itertools.count(1):
        for t in itertools.product(letters, repeat=k):
            yield "".join(t)


def format_contraction(c: Contraction) -> str:
    names = {}
    gen = index_names()
    # free slots take the first names so that parse restores their order
    for s in c.free:
        names[s] = next(gen)
    for fi, f in enumerate(c.factors):
        for s in range(f.nslots):
            if (fi, s) in names:
                continue
            nm = next(gen)
            names[(fi, s)] = nm
            p = c.partner[(fi, s)]
            names[p] = nm
    parts = []
    for fi, f in enumerate(c.factors):
        ds = [names[(fi, s)] for s in range(f.m)]
        ins = [names[(fi, s)] for s in range(f.m, f.nslots)]
        kind = f"psi{f.label}" if f.kind is Kind.PSI else f.kind.value
        body = kind + (f"[{','.join(ins)}]" if f.nint else "")
        parts.append((f"D[{','.join(ds)}] " if ds else "") + body)
    return "contr(" + " ".join(parts) + ")"


def _coef_text(a) -> tuple:
    s = str(a)
    sign = 1
    if s.startswith("-"):
        sign, s = -1, s[1:]
    if re.search(r"[+\-]", re.sub(r"\([^()]*\)", "", s)) and not s.startswith("("):
        s = f"({s})"
    return sign, s


def format_lincomb(lc: LinComb, canonical: bool = True) -> str:
    terms = lc.collect().terms if canonical else lc.terms
    if not terms:
        return "0"
    out = []
    for i, (a, c) in enumerate(terms):
        sign, s = _coef_text(a)
        body = format_contraction(c) if s == "1" else f"{s} * {format_contraction(c)}"
        if i == 0:
            out.append(("- " if sign < 0 else "") + body)
        else:
            out.append((" - " if sign < 0 else " + ") + body)
    return "".join(out)


# ---------------------------------------------------------------- files

@dataclass(frozen=True)
class Statement:
    line: int
    text: str
    n: Optional[int]
    value: LinComb


def parse_file(text: str, n: Optional[int] = None) -> list:
    """Statements of a ``.tc`` file; a line ending in '\\' continues."""
    out = []
    buf, start = "", 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not buf:
            start = lineno
        if line.endswith("\\"):
            buf += line[:-1] + " "
            continue
        buf += line
        stmt, buf = buf.strip(), ""
        if not stmt:
            continue
        m = re.fullmatch(r"n\s*:=\s*(\d+)", stmt)
        if m:
            n = int(m.group(1))
            continue
        try:
            val = parse(stmt, n)
        except TcSyntaxError as e:
            raise TcSyntaxError(f"line {start}: {e}") from e
        out.append(Statement(start, stmt, n, val))
    return out
