"""The three update algebras: sequential strings, leaf substitution, free terms.

An :class:`Update` carries its algebra tag, input/output types and a payload:

* ``sequential`` -- the string appended (types are always 1 -> 1);
* ``leaf-subst`` -- an ``in_type``-tuple of linear terms whose placeholders,
  read left to right across the whole tuple, are ``x1 .. x_out``;
* ``free-term``  -- an ``out_type``-tuple of terms over ``x1 .. x_in``.

Composition is diagrammatic: ``compose(u, v)`` applies ``u`` first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

from .terms import (
    App,
    Term,
    TermError,
    Var,
    check_linear,
    is_ground,
    render,
    render_tuple,
    substitute,
    substitute_all,
    variables,
)

SEQUENTIAL = "sequential"
LEAF = "leaf-subst"
FREE = "free-term"
KINDS = (SEQUENTIAL, LEAF, FREE)

Data = Union[str, Term, tuple]


class AlgebraError(ValueError):
    """Type or kind mismatch between updates and data."""


@dataclass(frozen=True)
class Update:
    kind: str
    in_type: int
    out_type: int
    payload: object

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AlgebraError(f"unknown algebra {self.kind!r}")

    def __str__(self):
        return render_update(self)


def sequential(w: str) -> Update:
    return Update(SEQUENTIAL, 1, 1, w)


def leaf(terms: Sequence[Term]) -> Update:
    terms = tuple(terms)
    ok, count = check_linear(terms)
    if not ok:
        raise AlgebraError(f"not a tuple of linear terms: {render_tuple(terms, '_')}")
    return Update(LEAF, len(terms), count, terms)


def free(terms: Sequence[Term], in_type: int) -> Update:
    terms = tuple(terms)
    for t in terms:
        for i in variables(t):
            if i > in_type:
                raise AlgebraError(f"variable x{i} exceeds input type {in_type}")
    return Update(FREE, in_type, len(terms), terms)


def identity(kind: str, n: int = 1) -> Update:
    if kind == SEQUENTIAL:
        if n != 1:
            raise AlgebraError("sequential data always has type 1")
        return sequential("")
    xs = tuple(Var(i) for i in range(1, n + 1))
    return Update(kind, n, n, xs)


def permutation(perm: Sequence[int]) -> Update:
    """Free-term update whose k-th output component is input component ``perm[k]`` (0-based)."""
    return Update(FREE, len(perm), len(perm), tuple(Var(p + 1) for p in perm))


def inverse_permutation(perm: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for k, p in enumerate(perm):
        inv[p] = k
    return tuple(inv)


def is_identity(u: Update) -> bool:
    if u.kind == SEQUENTIAL:
        return u.payload == ""
    return u.in_type == u.out_type and u.payload == tuple(Var(i) for i in range(1, u.in_type + 1))


# -- semantics -----------------------------------------------------------------

def data_type(kind: str, d: Data) -> int:
    if kind == SEQUENTIAL:
        return 1
    if kind == LEAF:
        return len(variables(d))  # type: ignore[arg-type]
    return len(d)  # type: ignore[arg-type]


def apply(u: Update, d: Data) -> Data:
    if u.kind == SEQUENTIAL:
        if not isinstance(d, str):
            raise AlgebraError("sequential updates apply to strings")
        return d + u.payload  # type: ignore[operator]
    if u.kind == LEAF:
        if not isinstance(d, Term) or len(variables(d)) != u.in_type:
            raise AlgebraError(f"leaf update expects a linear term with {u.in_type} placeholders")
        return substitute(d, u.payload)  # type: ignore[arg-type]
    if not isinstance(d, tuple) or len(d) != u.in_type:
        raise AlgebraError(f"free-term update expects a {u.in_type}-tuple")
    return substitute_all(u.payload, d)  # type: ignore[arg-type]


def compose(u: Update, v: Update) -> Update:
    """``u`` then ``v``."""
    if u.kind != v.kind:
        raise AlgebraError(f"cannot compose {u.kind} with {v.kind}")
    if u.out_type != v.in_type:
        raise AlgebraError(f"type mismatch: {u.out_type} -> {v.in_type}")
    if u.kind == SEQUENTIAL:
        return Update(SEQUENTIAL, 1, 1, u.payload + v.payload)  # type: ignore[operator]
    if u.kind == LEAF:
        return Update(LEAF, u.in_type, v.out_type, substitute_all(u.payload, v.payload))  # type: ignore[arg-type]
    return Update(FREE, u.in_type, v.out_type, substitute_all(v.payload, u.payload))  # type: ignore[arg-type]


def compose_all(u: Update, *rest: Update) -> Update:
    for v in rest:
        u = compose(u, v)
    return u


def _match_linear(pattern: Term, t: Term, out: dict[int, Term]) -> bool:
    if isinstance(pattern, Var):
        out[pattern.index] = t
        return True
    if not isinstance(t, App) or t.symbol != pattern.symbol or t.rank != pattern.rank:  # type: ignore[attr-defined]
        return False
    return all(_match_linear(p, s, out) for p, s in zip(pattern.args, t.args))  # type: ignore[attr-defined]


def residual_via_epi(g: Update, u: Update) -> Update | None:
    """The ``v`` with ``compose(g, v) == u``, or ``None`` when ``g`` does not divide ``u``.

    Free-term residuals are built from the leftmost-outermost subterm
    embedding; they are unique on the closure of ``g``'s range.
    """
    if g.kind != u.kind:
        raise AlgebraError(f"cannot divide {u.kind} by {g.kind}")
    if g.in_type != u.in_type:
        raise AlgebraError(f"input types differ: {g.in_type} vs {u.in_type}")
    if g.kind == SEQUENTIAL:
        w, p = u.payload, g.payload
        return sequential(w[len(p):]) if w.startswith(p) else None  # type: ignore[union-attr,arg-type,index]
    if g.kind == LEAF:
        found: dict[int, Term] = {}
        for pat, t in zip(g.payload, u.payload):  # type: ignore[call-overload]
            if not _match_linear(pat, t, found):
                return None
        rest = tuple(found[i] for i in range(1, g.out_type + 1))
        return Update(LEAF, g.out_type, u.out_type, rest)
    from .generalization import subterm_embedding

    witness = subterm_embedding(g, u)
    if witness is None:
        return None
    return witness.residual()


# -- classification ------------------------------------------------------------

class UpdateClass(NamedTuple):
    copyless: bool
    non_erasing: bool
    linear: bool


def classify(u: Update) -> UpdateClass:
    """Occurrence-based flags; for free-term these refer to the input variables."""
    if u.kind == SEQUENTIAL:
        return UpdateClass(True, True, True)
    occ = [i for t in u.payload for i in variables(t)]  # type: ignore[attr-defined]
    n = u.in_type if u.kind == FREE else u.out_type
    counts = [occ.count(i) for i in range(1, n + 1)]
    copyless = all(c <= 1 for c in counts)
    non_erasing = all(c >= 1 for c in counts)
    return UpdateClass(copyless, non_erasing, occ == list(range(1, n + 1)))


def is_ground_update(u: Update) -> bool:
    return u.kind == FREE and all(is_ground(t) for t in u.payload)  # type: ignore[attr-defined]


# -- canonical forms -----------------------------------------------------------

def sort_components(u: Update) -> tuple[Update, tuple[int, ...]]:
    """Sort free-term output components by rendering.

    Returns the sorted update and ``perm`` with ``sorted.payload[k] == u.payload[perm[k]]``,
    so that ``compose(u, permutation(perm)) == sorted``.
    """
    if u.kind != FREE:
        return u, tuple(range(u.out_type))
    keyed = sorted(range(u.out_type), key=lambda k: (render(u.payload[k]), k))  # type: ignore[index]
    perm = tuple(keyed)
    return Update(FREE, u.in_type, u.out_type, tuple(u.payload[k] for k in perm)), perm  # type: ignore[index]


def equal_up_to_permutation(u: Update, v: Update) -> bool:
    if u.kind != FREE:
        return u == v
    return (u.in_type, u.out_type) == (v.in_type, v.out_type) and sort_components(u)[0] == sort_components(v)[0]


def render_update(u: Update) -> str:
    if u.kind == SEQUENTIAL:
        return '"' + u.payload.replace("\\", "\\\\").replace('"', '\\"') + '"'  # type: ignore[union-attr]
    return render_tuple(u.payload, "_" if u.kind == LEAF else "x")  # type: ignore[arg-type]


def render_data(kind: str, d: Data) -> str:
    if kind == SEQUENTIAL:
        return d  # type: ignore[return-value]
    if kind == LEAF:
        return render(d, "_")  # type: ignore[arg-type]
    if len(d) == 1:  # type: ignore[arg-type]
        return render(d[0])  # type: ignore[index]
    return render_tuple(d)  # type: ignore[arg-type]


def check_types(u: Update, in_type: int, out_type: int) -> None:
    if (u.in_type, u.out_type) != (in_type, out_type):
        raise AlgebraError(f"update {render_update(u)} has type {u.in_type}->{u.out_type}, expected {in_type}->{out_type}")


__all__ = [
    "AlgebraError",
    "Data",
    "FREE",
    "KINDS",
    "LEAF",
    "SEQUENTIAL",
    "TermError",
    "Update",
    "UpdateClass",
    "apply",
    "check_types",
    "classify",
    "compose",
    "compose_all",
    "equal_up_to_permutation",
    "free",
    "identity",
    "inverse_permutation",
    "is_identity",
    "leaf",
    "permutation",
    "render_data",
    "render_update",
    "residual_via_epi",
    "sequential",
    "sort_components",
]
