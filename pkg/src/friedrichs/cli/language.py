"""Session mini-language: grammar, AST, pretty-printer and evaluation.

A session looks like::

    stats fermi
    op A[0,2]
    op B[2,0] from "b.npy"
    let X = comm(A, B)
    let Y = 1/2i a(x) * adag(y) - X

Coefficients are exact rationals, optionally imaginary (``2i``, ``1/2i``).
Decimal literals are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import json
from pathlib import Path
from typing import Mapping, Optional, Union

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError
import numpy as np

from ..algebra import anticommute, commute, multiply
from ..coefficient import Coefficient
from ..expression import Expression, canonicalize
from ..symbols import KernelKind, KernelSymbol, Statistics, annihilator, creator

__all__ = [
    "ParseError",
    "Definition",
    "Binding",
    "Session",
    "Num",
    "Ref",
    "Ladder",
    "Bracket",
    "Group",
    "Product",
    "Sum",
    "parse",
    "parse_expression",
    "pretty",
    "pretty_expr",
    "Environment",
]

GRAMMAR = r"""
    session: stats_decl decl* binding*
    stats_decl: "stats" STATS
    decl: "op" IDENT "[" INT "," INT "]" kernel_ref?
    kernel_ref: "from" STRING
    binding: "let" IDENT "=" expr

    ?start_expr: expr
    expr: SIGN? term (SIGN term)*
    term: (coeff "*"?)? atom ("*" atom)*
        | coeff
    coeff: RATIONAL | IMAG | DECIMAL
    ?atom: IDENT                          -> ref
         | "adag" "(" IDENT ")"           -> adag
         | "a" "(" IDENT ")"              -> ann
         | "comm" "(" expr "," expr ")"   -> comm
         | "acomm" "(" expr "," expr ")"  -> acomm
         | "(" expr ")"                   -> group

    STATS: "bose" | "fermi"
    SIGN: "+" | "-"
    DECIMAL.3: /\d+\.\d*/
    IMAG.2: /\d+(\/\d+)?i(?![A-Za-z0-9_])/
    RATIONAL.1: /\d+(\/\d+)?/
    IDENT: /(?!(stats|bose|fermi|op|let|a|adag|comm|acomm|from)(?![A-Za-z0-9_]))[A-Za-z_][A-Za-z0-9_]*/
    INT: /\d+/
    COMMENT: /#[^\n]*/

    %import common.ESCAPED_STRING -> STRING
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_session_parser = Lark(GRAMMAR, start="session", parser="lalr", propagate_positions=True)
_expr_parser = Lark(GRAMMAR, start="start_expr", parser="lalr", propagate_positions=True)

_TOKEN_NAMES = {
    "LSQB": "'['",
    "RSQB": "']'",
    "LPAR": "'('",
    "RPAR": "')'",
    "COMMA": "','",
    "EQUAL": "'='",
    "STAR": "'*'",
    "$END": "end of input",
}
_KEYWORDS = {"STATS", "OP", "LET", "A", "ADAG", "COMM", "ACOMM", "FROM"}


def _readable(name: str) -> str:
    if name in _KEYWORDS:
        return repr(name.lower())
    return _TOKEN_NAMES.get(name, name)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0, expected: frozenset[str] = frozenset()):
        where = f"{line}:{column}: " if line else ""
        exp = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{where}{message}{exp}")
        self.reason = message
        self.line = line
        self.column = column
        self.expected = expected


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction
    imaginary: bool = False

    def coefficient(self) -> Coefficient:
        return Coefficient(0, self.value) if self.imaginary else Coefficient(self.value)


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Ladder:
    dagger: bool
    label: str


@dataclass(frozen=True)
class Bracket:
    anti: bool
    left: "Sum"
    right: "Sum"


@dataclass(frozen=True)
class Group:
    body: "Sum"


Atom = Union[Ref, Ladder, Bracket, Group]


@dataclass(frozen=True)
class Product:
    sign: int
    coeff: Optional[Num]
    atoms: tuple[Atom, ...]


@dataclass(frozen=True)
class Sum:
    terms: tuple[Product, ...]


@dataclass(frozen=True)
class Definition:
    name: str
    n: int
    m: int
    kernel_file: Optional[str] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binding:
    name: str
    expr: Sum
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Session:
    statistics: Statistics
    definitions: tuple[Definition, ...]
    bindings: tuple[Binding, ...]


class _Located(Exception):
    def __init__(self, message: str, meta_or_token):
        super().__init__(message)
        self.line = getattr(meta_or_token, "line", 0)
        self.column = getattr(meta_or_token, "column", 0)


@v_args(inline=True)
class _Build(Transformer):
    def session(self, stats, *rest):
        defs = tuple(r for r in rest if isinstance(r, Definition))
        binds = tuple(r for r in rest if isinstance(r, Binding))
        return Session(stats, defs, binds)

    def stats_decl(self, tok):
        return Statistics.parse(str(tok))

    @v_args(inline=True, meta=True)
    def decl(self, meta, name, n, m, ref=None):
        return Definition(str(name), int(n), int(m), ref, meta.line)

    def kernel_ref(self, s):
        return json.loads(str(s))

    @v_args(inline=True, meta=True)
    def binding(self, meta, name, e):
        return Binding(str(name), e, meta.line)

    def expr(self, *items):
        terms = []
        sign = 1
        for it in items:
            if isinstance(it, Token) and it.type == "SIGN":
                sign = -1 if str(it) == "-" else 1
            else:
                terms.append(Product(sign, it[0], it[1]))
                sign = 1
        return Sum(tuple(terms))

    def term(self, *items):
        coeff = items[0] if items and isinstance(items[0], Num) else None
        atoms = tuple(items[1:] if coeff is not None else items)
        return coeff, atoms

    def coeff(self, tok):
        text = str(tok)
        if tok.type == "DECIMAL":
            raise _Located(f"decimal literal {text!r} is not allowed; write an exact rational such as 3/2", tok)
        imag = text.endswith("i")
        raw = text[:-1] if imag else text
        num, _, den = raw.partition("/")
        if den and int(den) == 0:
            raise _Located("zero denominator", tok)
        return Num(Fraction(int(num), int(den or 1)), imag)

    def ref(self, name):
        return Ref(str(name))

    def adag(self, label):
        return Ladder(True, str(label))

    def ann(self, label):
        return Ladder(False, str(label))

    def comm(self, a, b):
        return Bracket(False, a, b)

    def acomm(self, a, b):
        return Bracket(True, a, b)

    def group(self, e):
        return Group(e)


def _raise_from(exc: UnexpectedInput, text: str):
    expected: set[str] = set()
    if isinstance(exc, UnexpectedToken):
        expected = {_readable(t) for t in exc.accepts or exc.expected}
        tok = exc.token
        got = "end of input" if tok.type == "$END" else repr(str(tok))
        msg = f"unexpected {got}"
    elif isinstance(exc, UnexpectedCharacters):
        expected = {_readable(t) for t in exc.allowed or ()}
        msg = f"unexpected character {text[exc.pos_in_stream]!r}" if exc.pos_in_stream < len(text) else "unexpected input"
    elif isinstance(exc, UnexpectedEOF):
        expected = {_readable(t) for t in exc.expected}
        msg = "unexpected end of input"
    else:
        msg = str(exc)
    line = getattr(exc, "line", 0) or 0
    col = getattr(exc, "column", 0) or 0
    if line in (0, -1):
        line = text.count("\n") + 1
        col = len(text) - text.rfind("\n")
    raise ParseError(msg, line, col, frozenset(expected)) from None


def _run(parser: Lark, text: str):
    try:
        tree = parser.parse(text)
    except UnexpectedInput as exc:
        _raise_from(exc, text)
    try:
        return _Build().transform(tree)
    except VisitError as exc:
        inner = exc.orig_exc
        if isinstance(inner, _Located):
            raise ParseError(str(inner), inner.line, inner.column) from None
        raise


def _names(e: Sum, acc: list[str]):
    for t in e.terms:
        for a in t.atoms:
            if isinstance(a, Ref):
                acc.append(a.name)
            elif isinstance(a, Bracket):
                _names(a.left, acc)
                _names(a.right, acc)
            elif isinstance(a, Group):
                _names(a.body, acc)


def parse(text: str) -> Session:
    """Parse and check a session: unique names, no forward references."""
    session: Session = _run(_session_parser, text)
    seen: set[str] = set()
    for d in session.definitions:
        if d.name in seen:
            raise ParseError(f"duplicate name {d.name!r}", d.line, 1)
        seen.add(d.name)
    for b in session.bindings:
        used: list[str] = []
        _names(b.expr, used)
        for name in used:
            if name == b.name:
                raise ParseError(f"binding {b.name!r} refers to itself", b.line, 1)
            if name not in seen:
                raise ParseError(f"{b.name!r} refers to {name!r} before it is defined", b.line, 1)
        if b.name in seen:
            raise ParseError(f"duplicate name {b.name!r}", b.line, 1)
        seen.add(b.name)
    return session


def parse_expression(text: str) -> Sum:
    return _run(_expr_parser, text)


# --- pretty-printing -------------------------------------------------------


def _num(n: Num) -> str:
    return str(n.value) + ("i" if n.imaginary else "")


def _atom(a: Atom) -> str:
    if isinstance(a, Ref):
        return a.name
    if isinstance(a, Ladder):
        return f"{'adag' if a.dagger else 'a'}({a.label})"
    if isinstance(a, Bracket):
        return f"{'acomm' if a.anti else 'comm'}({pretty_expr(a.left)}, {pretty_expr(a.right)})"
    return f"({pretty_expr(a.body)})"


def _product(p: Product) -> str:
    parts = ([_num(p.coeff)] if p.coeff is not None else []) + [" * ".join(_atom(a) for a in p.atoms)]
    return " ".join(x for x in parts if x)


def pretty_expr(e: Sum) -> str:
    out = []
    for i, p in enumerate(e.terms):
        body = _product(p)
        if i == 0:
            out.append(("-" if p.sign < 0 else "") + body)
        else:
            out.append(("- " if p.sign < 0 else "+ ") + body)
    return " ".join(out)


def pretty(s: Session) -> str:
    lines = [f"stats {s.statistics.value}"]
    for d in s.definitions:
        ref = f" from {json.dumps(d.kernel_file)}" if d.kernel_file is not None else ""
        lines.append(f"op {d.name}[{d.n},{d.m}]{ref}")
    for b in s.bindings:
        lines.append(f"let {b.name} = {pretty_expr(b.expr)}")
    return "\n".join(lines) + "\n"


# --- evaluation ------------------------------------------------------------


class Environment:
    """Evaluates ASTs to canonical Expressions.

    ``modes`` binds ladder labels to lattice modes: a bound label becomes
    a discrete mode (δ-lines between modes evaluate to 0 or 1), an unbound
    one stays a formal point label.
    """

    def __init__(
        self,
        statistics: Statistics | str,
        session: Optional[Session] = None,
        modes: Optional[Mapping[str, str]] = None,
        base_dir: Optional[Path] = None,
    ):
        self.statistics = Statistics.parse(statistics)
        self.modes = dict(modes or {})
        self.base_dir = base_dir or Path(".")
        self.values: dict[str, Expression] = {}
        self.definitions: dict[str, Definition] = {}
        if session is not None:
            if session.statistics is not self.statistics:
                raise ValueError("session statistics differ from the requested statistics")
            for d in session.definitions:
                self.definitions[d.name] = d
                self.values[d.name] = Expression.of(self.statistics, KernelSymbol(d.name, d.n, d.m))
            for b in session.bindings:
                self.values[b.name] = self.evaluate(b.expr)

    @classmethod
    def from_session(cls, session: Session, modes=None, base_dir=None) -> "Environment":
        return cls(session.statistics, session, modes, base_dir)

    def kernels(self) -> dict[str, np.ndarray]:
        """Numeric kernels named by ``from`` references, shape-checked against the declared arity."""
        out = {}
        for d in self.definitions.values():
            if d.kernel_file is None:
                continue
            arr = load_kernel(self.base_dir / d.kernel_file)
            if arr.ndim != d.n + d.m or len(set(arr.shape)) > 1:
                raise ParseError(f"kernel file for {d.name} has shape {arr.shape}, arity is [{d.n},{d.m}]")
            out[d.name] = arr
        return out

    def _ladder(self, a: Ladder) -> Expression:
        if a.label in self.modes:
            name, kind = self.modes[a.label], KernelKind.MODE
        else:
            name, kind = a.label, KernelKind.POINT
        sym = creator(name, kind) if a.dagger else annihilator(name, kind)
        return Expression.of(self.statistics, sym)

    def _atom(self, a: Atom) -> Expression:
        if isinstance(a, Ref):
            try:
                return self.values[a.name]
            except KeyError:
                raise ParseError(f"unknown name {a.name!r}") from None
        if isinstance(a, Ladder):
            return self._ladder(a)
        if isinstance(a, Bracket):
            left, right = self.evaluate(a.left), self.evaluate(a.right)
            return anticommute(left, right) if a.anti else commute(left, right)
        return self.evaluate(a.body)

    def evaluate(self, e: Sum | str) -> Expression:
        if isinstance(e, str):
            e = parse_expression(e)
        total = Expression.zero(self.statistics)
        for p in e.terms:
            cur: Optional[Expression] = None
            for a in p.atoms:
                val = self._atom(a)
                cur = val if cur is None else multiply(cur, val)
            if cur is None:
                cur = Expression.identity(self.statistics)
            c = p.coeff.coefficient() if p.coeff is not None else Coefficient(1)
            total = total + cur.scale(c * p.sign)
        return canonicalize(total)


def load_kernel(path: Path) -> np.ndarray:
    """``.npy`` arrays, or JSON ``{"re": nested, "im": nested}`` / a nested real list."""
    path = Path(path)
    if path.suffix == ".npy":
        return np.asarray(np.load(path), dtype=complex)
    doc = json.loads(path.read_text())
    if isinstance(doc, dict):
        re_ = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc.get("im", np.zeros_like(re_)), dtype=float)
        return re_ + 1j * im
    return np.asarray(doc, dtype=complex)
