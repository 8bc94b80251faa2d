"""Line-oriented text format for transducers and equation systems.

    algebra free-term
    input { a, b }
    output { a/0, b/0, c/2 }
    state p : 0
    state q : 2 where x1 = x2
    init -> p [ () ]
    p -a-> q [ (a,a) ]
    halt q [ (c(x1,x2)) ]

Lines whose first non-blank character is ``#`` are comments.  Sequential
files list plain output letters and write updates as quoted strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .algebras import FREE, KINDS, LEAF, SEQUENTIAL, AlgebraError, Update, leaf, render_update
from .terms import RankedAlphabet, Term, TermError, TermSyntaxError, parse_term, parse_tuple, variables
from .transducer import Transducer, validate
from .unification import ConstrainedDomain, EquationSystem

SYNTAX_CODES = {"letter", "state", "symbol", "kind"}


class FormatError(ValueError):
    """Load error located at ``line``/``col`` (1-based).  ``semantic`` marks typing failures."""

    def __init__(self, message: str, line: int = 0, col: int = 1, semantic: bool = False):
        where = f"line {line}, col {col}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.col = col
        self.semantic = semantic
        self.reason = message


_NAME = r"[A-Za-z_][A-Za-z0-9_']*"
_LETTER = r"[A-Za-z0-9_]+"
_RE_ALGEBRA = re.compile(r"algebra\s+(\S+)\s*$")
_RE_SET = re.compile(r"(input|output)\s*\{(.*)\}\s*$")
_RE_STATE = re.compile(rf"state\s+({_NAME})\s*:\s*(\d+)\s*(?:where\s+(.*?))?\s*$")
_RE_INIT = re.compile(rf"init\s*->\s*({_NAME})\s*\[(.*)\]\s*$")
_RE_EDGE = re.compile(rf"({_NAME})\s+-({_LETTER})->\s*({_NAME})\s*\[(.*)\]\s*$")
_RE_HALT = re.compile(rf"halt\s+({_NAME})\s*\[(.*)\]\s*$")
_RE_ARITY = re.compile(r"arity\s+(\d+)\s*$")


def _lines(text: str):
    for n, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip())
        yield n, indent, stripped


def _parse_output_set(body: str, kind: str | None, line: int, col: int) -> RankedAlphabet:
    items = [x.strip() for x in body.split(",") if x.strip()]
    pairs = []
    for item in items:
        if kind == SEQUENTIAL:
            if len(item) != 1:
                raise FormatError(f"sequential output letters are single characters, got {item!r}", line, col)
            pairs.append((item, 0))
            continue
        m = re.fullmatch(r"([A-Za-z0-9][A-Za-z0-9_]*)\s*/\s*(\d+)", item)
        if not m:
            raise FormatError(f"expected NAME/RANK, got {item!r}", line, col)
        if re.fullmatch(r"x[1-9][0-9]*", m.group(1)):
            raise FormatError(f"symbol name {m.group(1)!r} is reserved for variables", line, col)
        pairs.append((m.group(1), int(m.group(2))))
    try:
        return RankedAlphabet(pairs)
    except TermError as exc:
        raise FormatError(str(exc), line, col) from None


def _parse_string(body: str, line: int, col: int) -> str:
    body = body.strip()
    if len(body) < 2 or body[0] != '"' or body[-1] != '"':
        raise FormatError("expected a quoted string", line, col)
    out = []
    i = 1
    while i < len(body) - 1:
        ch = body[i]
        if ch == "\\":
            if i + 1 >= len(body) - 1 or body[i + 1] not in '"\\':
                raise FormatError("bad escape in string", line, col + i)
            out.append(body[i + 1])
            i += 2
            continue
        if ch == '"':
            raise FormatError("unescaped quote in string", line, col + i)
        out.append(ch)
        i += 1
    return "".join(out)


@dataclass
class _Pending:
    line: int
    col: int
    text: str


class _Loader:
    def __init__(self, text: str):
        self.text = text
        self.kind: str | None = None
        self.inputs: tuple[str, ...] | None = None
        self.outputs: RankedAlphabet | None = None
        self.states: dict[str, int] = {}
        self.where: dict[str, _Pending] = {}
        self.init: tuple[str, _Pending] | None = None
        self.edges: dict[tuple[str, str], tuple[str, _Pending]] = {}
        self.halts: dict[str, _Pending] = {}
        self.lines: dict[str, int] = {}

    def load(self) -> Transducer:
        for n, indent, line in _lines(self.text):
            self.line(n, indent + 1, line)
        if self.kind is None:
            raise FormatError("missing 'algebra' line", 1)
        if self.inputs is None or self.outputs is None:
            raise FormatError("missing 'input' or 'output' line", 1)
        return self.build()

    def line(self, n: int, col: int, line: str) -> None:
        m = _RE_ALGEBRA.match(line)
        if m:
            if self.kind is not None:
                raise FormatError("duplicate 'algebra' line", n, col)
            if m.group(1) not in KINDS:
                raise FormatError(f"unknown algebra {m.group(1)!r}", n, col + line.index(m.group(1)))
            self.kind = m.group(1)
            return
        if self.kind is None:
            raise FormatError("the file must start with an 'algebra' line", n, col)
        m = _RE_SET.match(line)
        if m:
            body_col = col + m.start(2)
            if m.group(1) == "input":
                if self.inputs is not None:
                    raise FormatError("duplicate 'input' line", n, col)
                letters = [x.strip() for x in m.group(2).split(",") if x.strip()]
                for a in letters:
                    if not re.fullmatch(_LETTER, a):
                        raise FormatError(f"bad input letter {a!r}", n, body_col)
                if len(set(letters)) != len(letters):
                    raise FormatError("duplicate input letter", n, body_col)
                self.inputs = tuple(sorted(letters))
            else:
                if self.outputs is not None:
                    raise FormatError("duplicate 'output' line", n, col)
                self.outputs = _parse_output_set(m.group(2), self.kind, n, body_col)
            return
        m = _RE_STATE.match(line)
        if m:
            name = m.group(1)
            if name in self.states:
                raise FormatError(f"duplicate state {name!r}", n, col)
            self.states[name] = int(m.group(2))
            self.lines[f"state {name}"] = n
            if m.group(3):
                self.where[name] = _Pending(n, col + m.start(3), m.group(3))
            return
        m = _RE_INIT.match(line)
        if m:
            if self.init is not None:
                raise FormatError("duplicate 'init' line", n, col)
            self.init = (m.group(1), _Pending(n, col + m.start(2), m.group(2)))
            self.lines["init"] = n
            return
        m = _RE_HALT.match(line)
        if m:
            q = m.group(1)
            if q in self.halts:
                raise FormatError(f"duplicate halt for {q!r}", n, col)
            self.halts[q] = _Pending(n, col + m.start(2), m.group(2))
            self.lines[f"halt {q}"] = n
            return
        m = _RE_EDGE.match(line)
        if m:
            q, a, t = m.group(1), m.group(2), m.group(3)
            if (q, a) in self.edges:
                raise FormatError(f"nondeterministic: second transition {q} -{a}->", n, col)
            if self.inputs is not None and a not in self.inputs:
                raise FormatError(f"letter {a!r} not in the input alphabet", n, col + m.start(2))
            self.edges[(q, a)] = (t, _Pending(n, col + m.start(4), m.group(4)))
            self.lines[f"transition {q} -{a}->"] = n
            return
        raise FormatError(f"cannot parse line: {line!r}", n, col)

    def state_type(self, q: str, p: _Pending) -> int:
        if q not in self.states:
            raise FormatError(f"unknown state {q!r}", p.line, 1)
        return self.states[q]

    def update(self, p: _Pending, in_type: int) -> Update:
        assert self.kind is not None
        if self.kind == SEQUENTIAL:
            return Update(SEQUENTIAL, 1, 1, _parse_string(p.text, p.line, p.col))
        body = p.text.strip()
        offset = p.col + len(p.text) - len(p.text.lstrip())
        try:
            if self.kind == LEAF:
                return leaf(parse_tuple(body, self.outputs, placeholders=True))
            terms = parse_tuple(body, self.outputs, placeholders=False)
        except TermSyntaxError as exc:
            raise FormatError(str(exc).rsplit(" at offset", 1)[0], p.line, offset + exc.offset) from None
        except AlgebraError as exc:
            raise FormatError(str(exc), p.line, offset, semantic=True) from None
        return Update(FREE, in_type, len(terms), terms)

    def domain(self, q: str, p: _Pending) -> ConstrainedDomain:
        if self.kind != FREE:
            raise FormatError("'where' clauses apply to free-term states only", p.line, p.col)
        arity = self.states[q]
        if p.text.strip() == "false":
            return ConstrainedDomain.empty(arity)
        eqs = []
        for part in re.split(r"\s+and\s+", p.text.strip()):
            if part.count("=") != 1:
                raise FormatError(f"expected an equation 'lhs = rhs', got {part!r}", p.line, p.col)
            lhs, rhs = part.split("=")
            try:
                eqs.append((parse_term(lhs, self.outputs, placeholders=False), parse_term(rhs, self.outputs, placeholders=False)))
            except TermSyntaxError as exc:
                raise FormatError(str(exc), p.line, p.col) from None
        try:
            return ConstrainedDomain.of(EquationSystem(arity, tuple(eqs)), self.outputs)
        except AlgebraError as exc:
            raise FormatError(str(exc), p.line, p.col, semantic=True) from None

    def build(self) -> Transducer:
        assert self.kind and self.inputs is not None and self.outputs is not None
        init = None
        if self.init is not None:
            q, p = self.init
            self.state_type(q, p)
            init = (q, self.update(p, 0))
        delta = {}
        for (q, a), (t, p) in self.edges.items():
            tau = self.state_type(q, p)
            self.state_type(t, p)
            delta[(q, a)] = (t, self.update(p, tau))
        halt = {}
        for q, p in self.halts.items():
            halt[q] = self.update(p, self.state_type(q, p))
        domains = {q: self.domain(q, p) for q, p in self.where.items()}
        A = Transducer(self.kind, self.inputs, self.outputs, dict(self.states), init, delta, halt, domains)
        report = validate(A)
        if not report.ok:
            v = report.violations[0]
            line = self.lines.get(v.where, 0)
            raise FormatError(f"{v.where}: {v.message}", line, 1, semantic=v.code not in SYNTAX_CODES)
        return A


def parse_transducer(text: str) -> Transducer:
    return _Loader(text).load()


def load_transducer(path: str) -> Transducer:
    with open(path, encoding="utf-8") as fh:
        return parse_transducer(fh.read())


def render_transducer(A: Transducer) -> str:
    order = A.reachable_order()
    out = [f"algebra {A.kind}", "input { " + ", ".join(sorted(A.inputs)) + " }"]
    if A.kind == SEQUENTIAL:
        out.append("output { " + ", ".join(name for name, _ in A.outputs.items()) + " }")
    else:
        out.append("output { " + ", ".join(f"{name}/{rank}" for name, rank in A.outputs.items()) + " }")
    for q in order:
        line = f"state {q} : {A.states[q]}"
        d = A.domains.get(q)
        if d is not None and not d.is_full:
            line += " where " + d.render_where()
        out.append(line)
    if A.init is not None:
        out.append(f"init -> {A.init[0]} [ {render_update(A.init[1])} ]")
    for q in order:
        for a in sorted(A.inputs):
            step = A.delta.get((q, a))
            if step is not None:
                out.append(f"{q} -{a}-> {step[0]} [ {render_update(step[1])} ]")
        if q in A.halt:
            out.append(f"halt {q} [ {render_update(A.halt[q])} ]")
    return "\n".join(out) + "\n"


# -- equation systems ----------------------------------------------------------

def parse_equations(text: str) -> tuple[RankedAlphabet, EquationSystem]:
    """``output { ... }``, ``arity N`` and one ``lhs = rhs`` per line (terms or tuples)."""
    alphabet: RankedAlphabet | None = None
    arity: int | None = None
    pairs: list[tuple[tuple[Term, ...], tuple[Term, ...]]] = []
    for n, indent, line in _lines(text):
        col = indent + 1
        m = _RE_SET.match(line)
        if m and m.group(1) == "output":
            alphabet = _parse_output_set(m.group(2), None, n, col + m.start(2))
            continue
        m = _RE_ARITY.match(line)
        if m:
            arity = int(m.group(1))
            continue
        if line.count("=") != 1:
            raise FormatError(f"expected 'lhs = rhs', got {line!r}", n, col)
        lhs, rhs = line.split("=")
        sides = []
        for side, start in ((lhs, col), (rhs, col + len(lhs) + 1)):
            s = side.strip()
            try:
                sides.append(parse_tuple(s, alphabet, placeholders=False) if s.startswith("(") else (parse_term(s, alphabet, placeholders=False),))
            except TermSyntaxError as exc:
                raise FormatError(str(exc), n, start) from None
        if len(sides[0]) != len(sides[1]):
            raise FormatError("equation sides have different lengths", n, col)
        pairs.append((sides[0], sides[1]))
    if alphabet is None:
        raise FormatError("missing 'output' line", 1)
    if arity is None:
        arity = max((i for l, r in pairs for t in l + r for i in variables(t)), default=0)
    try:
        system = EquationSystem.of(arity, pairs)
    except AlgebraError as exc:
        raise FormatError(str(exc), 0, 1, semantic=True) from None
    return alphabet, system


__all__ = ["FormatError", "load_transducer", "parse_equations", "parse_transducer", "render_transducer"]
