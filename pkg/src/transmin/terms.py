"""Ranked terms, first-order substitution and linear terms.

Variables are positional: ``Var(1)`` is ``x1``.  The same class doubles as a
placeholder in linear terms (rendered ``_``) and as an MGU parameter
(rendered ``y1``), the index always being what matters.
"""

from __future__ import annotations

import re
from typing import Iterator, Mapping, Sequence


class TermError(ValueError):
    """Structural error on terms (bad arity, variable out of range, ...)."""


class TermSyntaxError(TermError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class Term:
    __slots__ = ()

    def is_var(self) -> bool:
        return False


class Var(Term):
    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 1:
            raise TermError(f"variable index must be positive, got {index}")
        object.__setattr__(self, "index", index)

    def __setattr__(self, name, value):
        raise AttributeError("terms are immutable")

    def is_var(self) -> bool:
        return True

    @property
    def size(self) -> int:
        return 1

    def __eq__(self, other):
        return isinstance(other, Var) and other.index == self.index

    def __hash__(self):
        return hash(("var", self.index))

    def __lt__(self, other):
        return render(self) < render(other)

    def __repr__(self):
        return f"Var({self.index})"


class App(Term):
    """A symbol applied to children; nullary symbols have ``args == ()``."""

    __slots__ = ("symbol", "args", "size", "_hash")

    def __init__(self, symbol: str, args: Sequence[Term] = ()):
        args = tuple(args)
        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "size", 1 + sum(a.size for a in args))
        object.__setattr__(self, "_hash", hash((symbol, args)))

    def __setattr__(self, name, value):
        raise AttributeError("terms are immutable")

    @property
    def rank(self) -> int:
        return len(self.args)

    def __eq__(self, other):
        if self is other:
            return True
        return (
            isinstance(other, App)
            and self._hash == other._hash
            and self.symbol == other.symbol
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return render(self) < render(other)

    def __repr__(self):
        return f"App({render(self)!r})"


def const(symbol: str) -> App:
    return App(symbol, ())


class RankedAlphabet:
    """Mapping from symbol names to fixed ranks."""

    def __init__(self, symbols: Mapping[str, int] | Sequence[tuple[str, int]] = ()):
        table: dict[str, int] = {}
        items = symbols.items() if isinstance(symbols, Mapping) else symbols
        for name, rank in items:
            if rank < 0:
                raise TermError(f"negative rank for {name!r}")
            if name in table and table[name] != rank:
                raise TermError(f"symbol {name!r} declared with ranks {table[name]} and {rank}")
            table[name] = rank
        self._ranks = table

    def __contains__(self, name):
        return name in self._ranks

    def __iter__(self):
        return iter(sorted(self._ranks))

    def __len__(self):
        return len(self._ranks)

    def __eq__(self, other):
        return isinstance(other, RankedAlphabet) and self._ranks == other._ranks

    def __hash__(self):
        return hash(frozenset(self._ranks.items()))

    def __repr__(self):
        return f"RankedAlphabet({self._ranks!r})"

    def rank(self, name: str) -> int:
        return self._ranks[name]

    def items(self):
        return sorted(self._ranks.items())

    def constants(self) -> list[str]:
        return [name for name, rank in self.items() if rank == 0]

    def has_ground_terms(self) -> bool:
        return any(rank == 0 for rank in self._ranks.values())

    def check(self, t: Term) -> None:
        """Raise :class:`TermError` on unknown symbols or rank mismatches."""
        for node in subterms(t):
            if isinstance(node, App):
                if node.symbol not in self._ranks:
                    raise TermError(f"unknown symbol {node.symbol!r}")
                if self._ranks[node.symbol] != node.rank:
                    raise TermError(
                        f"symbol {node.symbol!r} has rank {self._ranks[node.symbol]}, "
                        f"used with {node.rank} arguments"
                    )


# -- traversal ---------------------------------------------------------------

def subterms(t: Term) -> Iterator[Term]:
    """Pre-order (outermost, then left-to-right) enumeration of all subterms."""
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, App):
            stack.extend(reversed(node.args))


def positions(t: Term, prefix: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], Term]]:
    """Pre-order ``(path, subterm)`` pairs; paths are 1-based child indices."""
    yield prefix, t
    if isinstance(t, App):
        for i, arg in enumerate(t.args, start=1):
            yield from positions(arg, prefix + (i,))


def at(t: Term, path: Sequence[int]) -> Term:
    for i in path:
        t = t.args[i - 1]  # type: ignore[attr-defined]
    return t


def replace_at(t: Term, path: Sequence[int], new: Term) -> Term:
    if not path:
        return new
    assert isinstance(t, App)
    i = path[0] - 1
    args = list(t.args)
    args[i] = replace_at(args[i], path[1:], new)
    return App(t.symbol, args)


def variables(t: Term) -> list[int]:
    """Variable indices in left-to-right order, with repetitions."""
    return [node.index for node in subterms(t) if isinstance(node, Var)]


def is_ground(t: Term) -> bool:
    return not any(isinstance(node, Var) for node in subterms(t))


def depth(t: Term) -> int:
    if isinstance(t, App) and t.args:
        return 1 + max(depth(a) for a in t.args)
    return 0


def symbols_of(t: Term) -> set[tuple[str, int]]:
    return {(n.symbol, n.rank) for n in subterms(t) if isinstance(n, App)}


# -- substitution ------------------------------------------------------------

def substitute(t: Term, values: Sequence[Term]) -> Term:
    """Replace every ``x_i`` in ``t`` by ``values[i-1]``, simultaneously."""
    if isinstance(t, Var):
        if t.index > len(values):
            raise TermError(f"variable x{t.index} out of range for a {len(values)}-tuple")
        return values[t.index - 1]
    if not t.args:
        return t
    return App(t.symbol, [substitute(a, values) for a in t.args])


def substitute_all(ts: Sequence[Term], values: Sequence[Term]) -> tuple[Term, ...]:
    return tuple(substitute(t, values) for t in ts)


def shift(t: Term, offset: int) -> Term:
    """Rename ``x_i`` to ``x_{i+offset}``."""
    if offset == 0:
        return t
    if isinstance(t, Var):
        return Var(t.index + offset)
    if not t.args:
        return t
    return App(t.symbol, [shift(a, offset) for a in t.args])


def renumber(ts: Sequence[Term]) -> tuple[tuple[Term, ...], int]:
    """Renumber variables by first left-to-right occurrence across ``ts``."""
    mapping: dict[int, int] = {}
    for t in ts:
        for i in variables(t):
            if i not in mapping:
                mapping[i] = len(mapping) + 1
    if all(k == v for k, v in mapping.items()):
        return tuple(ts), len(mapping)
    top = max(mapping, default=0)
    image = [Var(mapping.get(i, 1)) for i in range(1, top + 1)]
    return tuple(substitute(t, image) for t in ts), len(mapping)


# -- linear terms ------------------------------------------------------------

def check_linear(t: Term | Sequence[Term]) -> tuple[bool, int]:
    """Return ``(linear?, placeholder count)``.

    Linear means the placeholders read left to right are exactly 1, 2, ..., n,
    so each occurs once and in order.  Tuples are scanned as one sequence.
    """
    ts = (t,) if isinstance(t, Term) else tuple(t)
    seen = [i for s in ts for i in variables(s)]
    return seen == list(range(1, len(seen) + 1)), len(seen)


def placeholder_count(t: Term) -> int:
    return len(variables(t))


def leaf_substitute(t: Term, values: Sequence[Term]) -> Term:
    """Plug linear terms into the placeholders of a linear term.

    Placeholders of the result are renumbered left to right, so the i-th
    placeholder of ``values[k]`` becomes placeholder ``offset_k + i``.
    """
    n = placeholder_count(t)
    if len(values) != n:
        raise TermError(f"linear term has {n} placeholders, got {len(values)} values")
    shifted = []
    offset = 0
    for v in values:
        shifted.append(shift(v, offset))
        offset += placeholder_count(v)
    return substitute(t, shifted)


# -- text --------------------------------------------------------------------

def render(t: Term, var: str = "x") -> str:
    """Canonical text: no whitespace, nullary symbols without parentheses.

    ``var`` is the variable prefix; ``"_"`` renders anonymous placeholders.
    """
    if isinstance(t, Var):
        return "_" if var == "_" else f"{var}{t.index}"
    if not t.args:
        return t.symbol
    return t.symbol + "(" + ",".join(render(a, var) for a in t.args) + ")"


def render_tuple(ts: Sequence[Term], var: str = "x") -> str:
    return "(" + ",".join(render(t, var) for t in ts) + ")"


_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z0-9][A-Za-z0-9_]*)|(?P<under>_)|(?P<punct>[(),]))")
_VARIABLE = re.compile(r"x([1-9][0-9]*)\Z")


class _Parser:
    def __init__(self, text: str, alphabet: RankedAlphabet | None, var_prefix: str = "x", placeholders: bool | None = None):
        self.text = text
        self.mode = placeholders
        self.pos = 0
        self.alphabet = alphabet
        self.var_re = re.compile(re.escape(var_prefix) + r"([1-9][0-9]*)\Z")
        self.placeholders = 0
        self.named_vars = False

    def error(self, message: str, offset: int | None = None):
        raise TermSyntaxError(message, self.pos if offset is None else offset)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = self.peek() or "end of input"
            self.error(f"expected {ch!r}, found {found!r}")
        self.pos += 1

    def term(self) -> Term:
        self.skip_ws()
        start = self.pos
        m = _TOKEN.match(self.text, self.pos)
        if not m or m.group("punct"):
            self.error("expected a term" if self.pos < len(self.text) else "unexpected end of input")
        self.pos = m.end()
        if m.group("under"):
            if self.mode is False:
                self.error("placeholder '_' not allowed here", start)
            if self.named_vars:
                self.error("cannot mix '_' placeholders with named variables", start)
            self.placeholders += 1
            return Var(self.placeholders)
        name = m.group("name")
        vm = self.var_re.match(name)
        if vm:
            if self.mode is True:
                self.error(f"variable {name!r} not allowed here; use '_'", start)
            if self.placeholders:
                self.error("cannot mix '_' placeholders with named variables", start)
            self.named_vars = True
            return Var(int(vm.group(1)))
        args: list[Term] = []
        if self.peek() == "(":
            self.pos += 1
            args.append(self.term())
            while self.peek() == ",":
                self.pos += 1
                args.append(self.term())
            self.expect(")")
        if self.alphabet is not None:
            if name not in self.alphabet:
                raise TermSyntaxError(f"unknown symbol {name!r}", start)
            if self.alphabet.rank(name) != len(args):
                raise TermSyntaxError(
                    f"symbol {name!r} has rank {self.alphabet.rank(name)}, used with {len(args)} arguments",
                    start,
                )
        return App(name, args)

    def tuple_(self) -> tuple[Term, ...]:
        self.expect("(")
        items: list[Term] = []
        if self.peek() == ")":
            self.pos += 1
            return ()
        items.append(self.term())
        while self.peek() == ",":
            self.pos += 1
            items.append(self.term())
        self.expect(")")
        return tuple(items)

    def end(self):
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")


def parse_term(
    text: str, alphabet: RankedAlphabet | None = None, var_prefix: str = "x", placeholders: bool | None = None
) -> Term:
    """Parse ``a(b,c(x3),b)`` style text.  ``_`` placeholders are numbered left to right.

    ``placeholders=True`` admits only ``_``, ``False`` only named variables.
    """
    p = _Parser(text, alphabet, var_prefix, placeholders)
    t = p.term()
    p.end()
    return t


def parse_tuple(
    text: str, alphabet: RankedAlphabet | None = None, var_prefix: str = "x", placeholders: bool | None = None
) -> tuple[Term, ...]:
    """Parse a parenthesised tuple; placeholders are numbered across the whole tuple."""
    p = _Parser(text, alphabet, var_prefix, placeholders)
    ts = p.tuple_()
    p.end()
    return ts
