"""Greatest common divisors in each algebra.

* sequential: longest common prefix;
* leaf-subst: least general (linear) generalization by anti-unification;
* free-term: greedy extension from the identity, with divisibility decided by
  subterm embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .algebras import (
    FREE,
    LEAF,
    SEQUENTIAL,
    AlgebraError,
    Update,
    classify,
    identity,
    render_update,
    residual_via_epi,
    sort_components,
)
from .terms import App, Term, Var, is_ground, positions, render, replace_at
from .unification import ConstrainedDomain, closure_image

Occurrence = tuple[int, tuple[int, ...]]  # (component index, path)


@dataclass(frozen=True)
class EmbeddingWitness:
    """Occurrence in ``target`` chosen for each component of ``source``."""

    source: Update
    target: Update
    assignment: tuple[Occurrence, ...]

    def residual(self) -> Update:
        comps = list(self.target.payload)  # type: ignore[call-overload]
        for i, (k, path) in enumerate(self.assignment, start=1):
            comps[k] = replace_at(comps[k], path, Var(i))
        return Update(FREE, self.source.out_type, self.target.out_type, tuple(comps))


@dataclass(frozen=True)
class GcdResult:
    gcd: Update
    inputs: tuple[Update, ...]
    residuals: tuple[Update, ...]
    iso_note: str = ""

    def residual_for(self, u: Update) -> Update:
        return self.residuals[self.inputs.index(u)]


class GcdError(AlgebraError):
    pass


def _overlaps(a: Occurrence, b: Occurrence) -> bool:
    if a[0] != b[0]:
        return False
    p, q = a[1], b[1]
    n = min(len(p), len(q))
    return p[:n] == q[:n]


def _occurrence_index(ts: Sequence[Term]) -> dict[Term, list[Occurrence]]:
    index: dict[Term, list[Occurrence]] = {}
    for k, t in enumerate(ts):
        for path, s in positions(t):
            index.setdefault(s, []).append((k, path))
    return index


def subterm_embedding(source: Update, target: Update) -> EmbeddingWitness | None:
    """Leftmost-outermost disjoint, variable-covering embedding of ``source`` into ``target``."""
    if source.kind != FREE or target.kind != FREE:
        raise AlgebraError("subterm embeddings relate free-term updates")
    if source.in_type != target.in_type:
        raise AlgebraError(f"input types differ: {source.in_type} vs {target.in_type}")
    S: tuple[Term, ...] = source.payload  # type: ignore[assignment]
    T: tuple[Term, ...] = target.payload  # type: ignore[assignment]
    index = _occurrence_index(T)
    var_occ = [(k, path) for k, t in enumerate(T) for path, s in positions(t) if isinstance(s, Var)]
    order = sorted(range(len(S)), key=lambda i: (is_ground(S[i]), S.index(S[i]), i))
    n_open = sum(1 for s in S if not is_ground(s))
    chosen: list[Occurrence | None] = [None] * len(S)
    used: list[Occurrence] = []

    def covered() -> bool:
        for vk, vp in var_occ:
            if not any(k == vk and vp[: len(p)] == p for k, p in used):
                return False
        return True

    failed: set[tuple[int, frozenset[Occurrence]]] = set()

    def search(pos: int) -> bool:
        if pos == n_open and not covered():
            return False
        if pos == len(order):
            return True
        key = (pos, frozenset(used))
        if key in failed:
            return False
        i = order[pos]
        occs = index.get(S[i], [])
        start = 0
        # equal components take occurrences in increasing order, which skips permuted retries
        if pos and S[order[pos - 1]] == S[i]:
            start = occs.index(chosen[order[pos - 1]]) + 1  # type: ignore[arg-type]
        for occ in occs[start:]:
            if any(_overlaps(occ, o) for o in used):
                continue
            chosen[i] = occ
            used.append(occ)
            if search(pos + 1):
                return True
            used.pop()
        chosen[i] = None
        failed.add(key)
        return False

    if not search(0):
        return None
    return EmbeddingWitness(source, target, tuple(chosen))  # type: ignore[arg-type]


def divides(g: Update, u: Update) -> bool:
    return residual_via_epi(g, u) is not None


def _need(updates: Iterable[Update], kind: str | None = None) -> tuple[Update, ...]:
    us = tuple(updates)
    if not us:
        raise GcdError("GCD of an empty set")
    kinds = {u.kind for u in us}
    if len(kinds) != 1 or (kind is not None and kinds != {kind}):
        raise GcdError(f"mixed or unexpected algebras: {sorted(kinds)}")
    if len({u.in_type for u in us}) != 1:
        raise GcdError("updates must share their input type")
    return us


def _result(g: Update, us: tuple[Update, ...], note: str = "") -> GcdResult:
    residuals = []
    for u in us:
        v = residual_via_epi(g, u)
        if v is None:
            raise GcdError(f"internal error: {render_update(g)} does not divide {render_update(u)}")
        residuals.append(v)
    return GcdResult(g, us, tuple(residuals), note)


# -- sequential ----------------------------------------------------------------

def lcp_gcd(updates: Iterable[Update]) -> GcdResult:
    us = _need(updates, SEQUENTIAL)
    words = [u.payload for u in us]
    prefix = words[0]
    for w in words[1:]:
        n = 0
        while n < min(len(prefix), len(w)) and prefix[n] == w[n]:  # type: ignore[arg-type,index]
            n += 1
        prefix = prefix[:n]  # type: ignore[index]
    return _result(Update(SEQUENTIAL, 1, 1, prefix), us)


# -- leaf substitution ---------------------------------------------------------

def lgg(updates: Iterable[Update]) -> GcdResult:
    """Least general linear generalization, component by component."""
    us = _need(updates, LEAF)
    counter = 0

    def anti(column: tuple[Term, ...]) -> Term:
        nonlocal counter
        head = column[0]
        if isinstance(head, App) and all(
            isinstance(t, App) and t.symbol == head.symbol and t.rank == head.rank for t in column[1:]
        ):
            return App(head.symbol, [anti(tuple(t.args[k] for t in column)) for k in range(head.rank)])  # type: ignore[attr-defined]
        counter += 1
        return Var(counter)

    comps = tuple(anti(tuple(u.payload[i] for u in us)) for i in range(us[0].in_type))  # type: ignore[index]
    return _result(Update(LEAF, us[0].in_type, counter, comps), us)


# -- free terms ----------------------------------------------------------------

def _check_restricted(u: Update) -> None:
    c = classify(u)
    if not (c.copyless and c.non_erasing):
        raise GcdError(f"update {render_update(u)} is not copyless and non-erasing")


def _extensions(g: tuple[Term, ...], pivot: Update) -> Iterable[tuple[Term, ...]]:
    """Candidate one-step refinements of ``g`` read off the pivot update."""
    seen: set[tuple[Term, ...]] = set()
    for t in pivot.payload:  # type: ignore[attr-defined]
        for _, s in positions(t):
            if not isinstance(s, App):
                continue
            free_slots = list(range(len(g)))
            taken: list[int] = []
            for child in s.args:
                slot = next((j for j in free_slots if g[j] == child), None)
                if slot is None:
                    break
                free_slots.remove(slot)
                taken.append(slot)
            else:
                cand = tuple(g[j] for j in range(len(g)) if j not in taken) + (s,)
                if cand not in seen:
                    seen.add(cand)
                    yield cand
            if is_ground(s):
                cand = g + (s,)
                if cand not in seen:
                    seen.add(cand)
                    yield cand


def multiset_gcd(updates: Iterable[Update]) -> GcdResult:
    """Maximal common divisor, grown from the identity; components sorted by render."""
    us = _need(updates, FREE)
    for u in us:
        _check_restricted(u)
    alpha = us[0].in_type
    g: tuple[Term, ...] = identity(FREE, alpha).payload  # type: ignore[assignment]
    pivot = min(us, key=lambda u: (sum(t.size for t in u.payload), render_update(u)))  # type: ignore[attr-defined]
    grown = True
    while grown:
        grown = False
        for cand in _extensions(g, pivot):
            upd = Update(FREE, alpha, len(cand), cand)
            if all(subterm_embedding(upd, u) is not None for u in us):
                g = cand
                grown = True
                break
    result, _ = sort_components(Update(FREE, alpha, len(g), g))
    return _result(result, us, note="components sorted by render")


def interpolant(s: Update, t: Update) -> Update:
    """Least common multiple-like upper bound of two term multisets (greedy forest).

    The result may repeat variables, so it is built without the copyless check.
    """
    if s.kind != FREE or t.kind != FREE:
        raise AlgebraError("interpolants relate free-term updates")
    if s.in_type != t.in_type:
        raise AlgebraError(f"input types differ: {s.in_type} vs {t.in_type}")
    items = [(e, 0) for e in s.payload] + [(e, 1) for e in t.payload]  # type: ignore[attr-defined]
    items.sort(key=lambda it: (-it[0].size, render(it[0]), it[1]))
    roots: list[tuple[Term, int, list[tuple[int, ...]]]] = []
    for elem, origin in items:
        placed = False
        for root, r_origin, taken in roots:
            if r_origin == origin:
                continue
            for path, sub in positions(root):
                if sub != elem:
                    continue
                if any(path[: len(p)] == p or p[: len(path)] == path for p in taken):
                    continue
                taken.append(path)
                placed = True
                break
            if placed:
                break
        if not placed:
            roots.append((elem, origin, []))
    return Update(FREE, s.in_type, len(roots), tuple(r for r, _, _ in roots))


def sub_multiset(s: Update, t: Update) -> bool:
    """``s`` divides ``t`` in the multiset sense (no copyless requirement on either side)."""
    return subterm_embedding(s, t) is not None


# -- dispatch ------------------------------------------------------------------

def gcd(updates: Iterable[Update]) -> GcdResult:
    us = _need(updates)
    kind = us[0].kind
    if kind == SEQUENTIAL:
        return lcp_gcd(us)
    if kind == LEAF:
        return lgg(us)
    return multiset_gcd(us)


def egcd(updates: Iterable[Update]) -> tuple[GcdResult, ConstrainedDomain]:
    """GCD together with the closure of its range (the full type outside free terms)."""
    res = gcd(updates)
    g = res.gcd
    if g.kind == FREE:
        return res, closure_image(g, ConstrainedDomain.full(g.in_type))
    return res, ConstrainedDomain.full(g.out_type)


__all__ = [
    "EmbeddingWitness",
    "GcdError",
    "GcdResult",
    "divides",
    "egcd",
    "gcd",
    "interpolant",
    "lcp_gcd",
    "lgg",
    "multiset_gcd",
    "sub_multiset",
    "subterm_embedding",
]
