"""Most general unifiers and constrained domains over tuples of ground terms.

A constrained domain of arity ``n`` is the set of ground ``n``-tuples solving a
finite system of term equations over ``x1 .. xn``.  It is kept in solved
parametric form: a tuple over parameters ``y1 .. yk`` whose ground instances
are exactly the solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .algebras import FREE, AlgebraError, Update
from .terms import (
    App,
    RankedAlphabet,
    Term,
    Var,
    render,
    render_tuple,
    renumber,
    substitute,
    substitute_all,
    variables,
)

SOLVED = "SOLVED"
UNSAT = "UNSAT"

Equation = tuple[Term, Term]


@dataclass(frozen=True)
class EquationSystem:
    arity: int
    equations: tuple[Equation, ...] = ()

    def __post_init__(self):
        for lhs, rhs in self.equations:
            for i in variables(lhs) + variables(rhs):
                if i > self.arity:
                    raise AlgebraError(f"variable x{i} exceeds arity {self.arity}")

    @classmethod
    def of(cls, arity: int, pairs: Iterable[tuple[Term | Sequence[Term], Term | Sequence[Term]]]) -> "EquationSystem":
        """Build a system; tuple-valued sides are split componentwise."""
        eqs: list[Equation] = []
        for lhs, rhs in pairs:
            if isinstance(lhs, Term) and isinstance(rhs, Term):
                eqs.append((lhs, rhs))
                continue
            ls = (lhs,) if isinstance(lhs, Term) else tuple(lhs)
            rs = (rhs,) if isinstance(rhs, Term) else tuple(rhs)
            if len(ls) != len(rs):
                raise AlgebraError(f"equation sides have lengths {len(ls)} and {len(rs)}")
            eqs.extend(zip(ls, rs))
        return cls(arity, tuple(eqs))

    def __add__(self, other: "EquationSystem") -> "EquationSystem":
        if self.arity != other.arity:
            raise AlgebraError(f"arity mismatch: {self.arity} vs {other.arity}")
        return EquationSystem(self.arity, self.equations + other.equations)


@dataclass(frozen=True)
class SolvedForm:
    status: str
    unifier: tuple[Term, ...] = ()
    parameter_count: int = 0

    @property
    def satisfiable(self) -> bool:
        return self.status == SOLVED

    def __str__(self):
        return render_tuple(self.unifier, "y") if self.satisfiable else UNSAT


# -- Robinson unification ------------------------------------------------------

def _walk(t: Term, binding: dict[int, Term]) -> Term:
    while isinstance(t, Var) and t.index in binding:
        t = binding[t.index]
    return t


def _occurs(index: int, t: Term, binding: dict[int, Term]) -> bool:
    stack = [t]
    while stack:
        s = _walk(stack.pop(), binding)
        if isinstance(s, Var):
            if s.index == index:
                return True
        else:
            stack.extend(s.args)  # type: ignore[attr-defined]
    return False


def _unify(pairs: list[Equation], binding: dict[int, Term]) -> bool:
    stack = list(pairs)
    while stack:
        s, t = stack.pop()
        s, t = _walk(s, binding), _walk(t, binding)
        if s == t:
            continue
        if isinstance(s, Var) or isinstance(t, Var):
            if not isinstance(s, Var):
                s, t = t, s
            if _occurs(s.index, t, binding):  # type: ignore[union-attr]
                return False
            binding[s.index] = t  # type: ignore[union-attr]
            continue
        if s.symbol != t.symbol or s.rank != t.rank:  # type: ignore[attr-defined]
            return False
        stack.extend(zip(s.args, t.args))  # type: ignore[attr-defined]
    return True


def _resolve(t: Term, binding: dict[int, Term], memo: dict[int, Term]) -> Term:
    t = _walk(t, binding)
    if isinstance(t, Var):
        return t
    if not t.args:  # type: ignore[attr-defined]
        return t
    return App(t.symbol, [_resolve(a, binding, memo) for a in t.args])  # type: ignore[attr-defined]


def mgu(system: EquationSystem, alphabet: RankedAlphabet | None = None) -> SolvedForm:
    """Solve ``system``; parameters are numbered by first occurrence.

    With an alphabet lacking constants no ground tuple of positive arity
    exists, so such systems are reported unsatisfiable.
    """
    if alphabet is not None and system.arity > 0 and not alphabet.has_ground_terms():
        return SolvedForm(UNSAT)
    binding: dict[int, Term] = {}
    if not _unify(list(system.equations), binding):
        return SolvedForm(UNSAT)
    memo: dict[int, Term] = {}
    raw = tuple(_resolve(Var(i), binding, memo) for i in range(1, system.arity + 1))
    unifier, count = renumber(raw)
    return SolvedForm(SOLVED, unifier, count)


def _as_tuple(side: Term | Sequence[Term]) -> tuple[Term, ...]:
    return (side,) if isinstance(side, Term) else tuple(side)


def entails(system: EquationSystem | SolvedForm, lhs: Term | Sequence[Term], rhs: Term | Sequence[Term]) -> bool:
    """Does every solution of ``system`` satisfy ``lhs = rhs``?"""
    solved = system if isinstance(system, SolvedForm) else mgu(system)
    ls, rs = _as_tuple(lhs), _as_tuple(rhs)
    if len(ls) != len(rs):
        raise AlgebraError(f"equation sides have lengths {len(ls)} and {len(rs)}")
    if not solved.satisfiable:
        return True
    return substitute_all(ls, solved.unifier) == substitute_all(rs, solved.unifier)


# -- constrained domains -------------------------------------------------------

def _canonical_equations(solved: SolvedForm) -> tuple[Equation, ...]:
    """Equations over ``x`` whose solved form is ``solved``.

    Each parameter ``y_j`` is named after the first component equal to it;
    other components become ``x_rep = x_i`` or ``x_i = term``.
    """
    u = solved.unifier
    rep: dict[int, int] = {}
    for i, t in enumerate(u, start=1):
        if isinstance(t, Var) and t.index not in rep:
            rep[t.index] = i
    back = [Var(rep[j]) for j in range(1, solved.parameter_count + 1)]
    eqs: list[Equation] = []
    for i, t in enumerate(u, start=1):
        if isinstance(t, Var):
            if rep[t.index] != i:
                eqs.append((Var(rep[t.index]), Var(i)))
        else:
            eqs.append((Var(i), substitute(t, back)))
    return tuple(eqs)


@dataclass(frozen=True)
class ConstrainedDomain:
    """Solution set of an equation system; ``system`` is kept canonical when satisfiable."""

    arity: int
    system: EquationSystem
    solved: SolvedForm = field(compare=False)

    @classmethod
    def of(cls, system: EquationSystem, alphabet: RankedAlphabet | None = None) -> "ConstrainedDomain":
        solved = mgu(system, alphabet)
        return cls._from_solved(system.arity, solved, system)

    @classmethod
    def _from_solved(cls, arity: int, solved: SolvedForm, original: EquationSystem | None = None) -> "ConstrainedDomain":
        if solved.satisfiable:
            system = EquationSystem(arity, _canonical_equations(solved))
        else:
            system = original if original is not None else EquationSystem(arity, ((App("a"), App("b")),))
        return cls(arity, system, solved)

    @classmethod
    def full(cls, arity: int) -> "ConstrainedDomain":
        return cls._from_solved(arity, SolvedForm(SOLVED, tuple(Var(i) for i in range(1, arity + 1)), arity))

    @classmethod
    def empty(cls, arity: int) -> "ConstrainedDomain":
        return cls._from_solved(arity, SolvedForm(UNSAT))

    @classmethod
    def from_unifier(cls, unifier: Sequence[Term]) -> "ConstrainedDomain":
        """Domain of all ground instances of a parametric tuple (parameters as ``Var``)."""
        u, count = renumber(tuple(unifier))
        return cls._from_solved(len(u), SolvedForm(SOLVED, u, count))

    def __eq__(self, other):
        if not isinstance(other, ConstrainedDomain) or self.arity != other.arity:
            return False
        if self.is_empty or other.is_empty:
            return self.is_empty and other.is_empty
        return self.solved.unifier == other.solved.unifier

    def __hash__(self):
        return hash((self.arity, self.solved.unifier if not self.is_empty else UNSAT))

    @property
    def is_empty(self) -> bool:
        return not self.solved.satisfiable

    @property
    def is_full(self) -> bool:
        return not self.is_empty and not self.system.equations

    @property
    def unifier(self) -> tuple[Term, ...]:
        return self.solved.unifier

    def contains(self, d: Sequence[Term]) -> bool:
        if self.is_empty or len(d) != self.arity:
            return False
        d = tuple(d)
        return all(substitute(l, d) == substitute(r, d) for l, r in self.system.equations)

    def includes(self, other: "ConstrainedDomain") -> bool:
        """``other`` is a subset of ``self``."""
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return all(entails(other.solved, l, r) for l, r in self.system.equations)

    def equal_modulo(self, u: Sequence[Term], v: Sequence[Term]) -> bool:
        """Do two tuples over ``x1 .. x_arity`` agree on every element of the domain?"""
        return entails(self.solved, tuple(u), tuple(v))

    def render_where(self) -> str:
        if self.is_empty:
            return "false"
        return " and ".join(f"{render(l)} = {render(r)}" for l, r in self.system.equations)

    def __str__(self):
        return str(self.solved)


def inverse_constraint(f: Update, system: EquationSystem) -> EquationSystem:
    """Equations on ``f``'s input whose solutions are mapped by ``f`` into ``Sol(system)``."""
    if f.kind != FREE:
        raise AlgebraError("constraints live on free-term data")
    if system.arity != f.out_type:
        raise AlgebraError(f"system arity {system.arity} differs from output type {f.out_type}")
    payload = f.payload
    eqs = tuple((substitute(l, payload), substitute(r, payload)) for l, r in system.equations)  # type: ignore[arg-type]
    return EquationSystem(f.in_type, eqs)


def intersect(d1: ConstrainedDomain, d2: ConstrainedDomain) -> ConstrainedDomain:
    if d1.arity != d2.arity:
        raise AlgebraError(f"arity mismatch: {d1.arity} vs {d2.arity}")
    if d1.is_empty or d2.is_empty:
        return ConstrainedDomain.empty(d1.arity)
    return ConstrainedDomain.of(d1.system + d2.system)


# -- closures ------------------------------------------------------------------

def closure_of(tuples: Sequence[Sequence[Term]], arity: int) -> ConstrainedDomain:
    """Smallest constrained domain containing the instances of every parametric tuple.

    Each tuple has its own parameters (``Var``).  The valid equations are the
    component identifications ``x_i = x_j`` and the decompositions
    ``x_i = s(...)`` whose arguments are again components or such terms.
    """
    rows = [tuple(t) for t in tuples]
    if not rows:
        return ConstrainedDomain.empty(arity)
    for r in rows:
        if len(r) != arity:
            raise AlgebraError(f"expected {arity}-tuples, got a {len(r)}-tuple")
    columns = [tuple(r[i] for r in rows) for i in range(arity)]
    first: dict[tuple[Term, ...], int] = {}
    for i, col in enumerate(columns, start=1):
        first.setdefault(col, i)
    memo: dict[tuple[Term, ...], Term | None] = {}

    def canon(col: tuple[Term, ...]) -> Term | None:
        if col in first:
            return Var(first[col])
        if col in memo:
            return memo[col]
        result = _decompose(col)
        memo[col] = result
        return result

    def _decompose(col: tuple[Term, ...]) -> Term | None:
        head = col[0]
        if not isinstance(head, App):
            return None
        for t in col[1:]:
            if not isinstance(t, App) or t.symbol != head.symbol or t.rank != head.rank:
                return None
        kids = []
        for k in range(head.rank):
            c = canon(tuple(t.args[k] for t in col))  # type: ignore[attr-defined]
            if c is None:
                return None
            kids.append(c)
        return App(head.symbol, kids)

    eqs: list[Equation] = []
    for i, col in enumerate(columns, start=1):
        if first[col] != i:
            eqs.append((Var(first[col]), Var(i)))
            continue
        d = _decompose(col)
        if d is not None:
            eqs.append((Var(i), d))
    return ConstrainedDomain.of(EquationSystem(arity, tuple(eqs)))


def closure_union(d1: ConstrainedDomain, d2: ConstrainedDomain) -> ConstrainedDomain:
    if d1.arity != d2.arity:
        raise AlgebraError(f"arity mismatch: {d1.arity} vs {d2.arity}")
    if d1.is_empty:
        return d2
    if d2.is_empty:
        return d1
    return closure_of([d1.unifier, d2.unifier], d1.arity)


def closure_image(f: Update, domain: ConstrainedDomain) -> ConstrainedDomain:
    if f.kind != FREE:
        raise AlgebraError("closures are computed on free-term data")
    if f.in_type != domain.arity:
        raise AlgebraError(f"domain arity {domain.arity} differs from input type {f.in_type}")
    if domain.is_empty:
        return ConstrainedDomain.empty(f.out_type)
    return closure_of([substitute_all(f.payload, domain.unifier)], f.out_type)  # type: ignore[arg-type]


def restrict_update(u: Update, domain: ConstrainedDomain | None) -> tuple[Term, ...]:
    """Payload of a free-term update instantiated on the domain's parametric form."""
    if domain is None or u.kind != FREE:
        return u.payload  # type: ignore[return-value]
    if domain.is_empty:
        return ()
    return substitute_all(u.payload, domain.unifier)  # type: ignore[arg-type]


def updates_agree(u: Update, v: Update, domain: ConstrainedDomain | None) -> bool:
    """``u`` and ``v`` coincide on ``domain`` (everywhere when ``None``)."""
    if (u.kind, u.in_type, u.out_type) != (v.kind, v.in_type, v.out_type):
        return False
    if domain is None or u.kind != FREE:
        return u == v
    if domain.is_empty:
        return True
    return restrict_update(u, domain) == restrict_update(v, domain)
