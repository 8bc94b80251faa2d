"""Minimization pipeline: divisor fixpoint, normalization, reach, observational merge."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .algebras import (
    FREE,
    SEQUENTIAL,
    Update,
    apply,
    compose,
    equal_up_to_permutation,
    identity,
    inverse_permutation,
    permutation,
    render_update,
    residual_via_epi,
)
from .generalization import GcdError, divides, gcd
from .terms import Term, substitute_all
from .transducer import (
    INIT_DATA,
    SemanticError,
    Transducer,
    Transformation,
    UpdateVector,
    Word,
    require_valid,
)
from .unification import ConstrainedDomain, closure_image, closure_of

MAX_PERMUTATION_TYPE = 6
MAX_SWEEPS = 10_000


# -- step 1: divisor fixpoint --------------------------------------------------

@dataclass
class DivisorAssignment:
    """``f[q]`` is the GCD of everything departing from ``q`` (``None`` when nothing halts)."""

    f: dict[str, Update | None]
    sweeps: int
    codomains: dict[str, ConstrainedDomain] = field(default_factory=dict)


def _departing(A: Transducer, q: str, f: dict[str, Update | None]) -> list[Update]:
    cands = []
    if q in A.halt:
        cands.append(A.halt[q])
    for _, t, u in A.successors(q):
        if f.get(t) is not None:
            cands.append(compose(u, f[t]))  # type: ignore[arg-type]
    return cands


def gcd_fixpoint(A: Transducer, max_sweeps: int | None = None) -> DivisorAssignment:
    """Barrier-synchronized sweeps from all-undefined until no state changes."""
    f: dict[str, Update | None] = {q: None for q in A.states}
    limit = MAX_SWEEPS if max_sweeps is None else max_sweeps
    sweeps = 0
    while sweeps < limit:
        sweeps += 1
        new: dict[str, Update | None] = {}
        for q in A.states:
            cands = _departing(A, q, f)
            new[q] = gcd(dict.fromkeys(cands)).gcd if cands else None
        if new == f:
            break
        f = new
    else:
        if max_sweeps is None:
            raise GcdError(f"divisor fixpoint did not stabilize within {limit} sweeps")
    codomains = {}
    if A.kind == FREE:
        for q, g in f.items():
            if g is not None:
                codomains[q] = closure_image(g, A.domain(q) or ConstrainedDomain.full(A.states[q]))
    return DivisorAssignment(f, sweeps, codomains)


# -- step 2: normalization -----------------------------------------------------

def _residual(g: Update, u: Update, where: str) -> Update:
    v = residual_via_epi(g, u)
    if v is None:
        raise GcdError(f"internal error at {where}: {render_update(g)} does not divide {render_update(u)}")
    return v


def normalize(A: Transducer, D: DivisorAssignment) -> Transducer:
    f = D.f
    kept = {q for q in A.states if f.get(q) is not None}
    states = {q: f[q].out_type for q in A.states if q in kept}  # type: ignore[union-attr]
    init = None
    if A.init is not None and A.init[0] in kept:
        t, u = A.init
        init = (t, compose(u, f[t]))  # type: ignore[arg-type]
    delta = {}
    for (q, a), (t, u) in A.delta.items():
        if q in kept and t in kept:
            delta[(q, a)] = (t, _residual(f[q], compose(u, f[t]), f"{q} -{a}->"))  # type: ignore[arg-type]
    halt = {q: _residual(f[q], u, f"halt {q}") for q, u in A.halt.items() if q in kept}  # type: ignore[arg-type]
    domains = {q: D.codomains[q] for q in kept if q in A.domains and q in D.codomains}
    return A.copy(states=states, init=init, delta=delta, halt=halt, domains=domains)


# -- step 3: reach -------------------------------------------------------------

@dataclass
class ReachResult:
    transducer: Transducer
    sweeps: int


def reach_with_stats(B: Transducer) -> ReachResult:
    if B.kind != FREE:
        return ReachResult(_restrict(B, _reachable(B), {}), 0)
    dom = {q: ConstrainedDomain.empty(tau) for q, tau in B.states.items()}
    incoming: dict[str, list[tuple[str, Update]]] = {q: [] for q in B.states}
    for (p, _), (t, u) in sorted(B.delta.items()):
        incoming[t].append((p, u))
    sweeps = 0
    while True:
        sweeps += 1
        new = {}
        for q, tau in B.states.items():
            rows: list[Sequence[Term]] = []
            if not dom[q].is_empty:
                rows.append(dom[q].unifier)
            if B.init is not None and B.init[0] == q:
                rows.append(B.init[1].payload)  # type: ignore[arg-type]
            for p, u in incoming[q]:
                if not dom[p].is_empty:
                    rows.append(substitute_all(u.payload, dom[p].unifier))  # type: ignore[arg-type]
            new[q] = closure_of(rows, tau)
        if all(new[q] == dom[q] for q in B.states):
            break
        dom = new
    keep = {q for q, d in dom.items() if not d.is_empty}
    return ReachResult(_restrict(B, keep, {q: dom[q] for q in keep}), sweeps)


def reach(B: Transducer) -> Transducer:
    return reach_with_stats(B).transducer


def _reachable(B: Transducer) -> set[str]:
    if B.init is None:
        return set()
    seen = {B.init[0]}
    todo = [B.init[0]]
    while todo:
        for _, t, _ in B.successors(todo.pop()):
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return seen


def _restrict(B: Transducer, keep: set[str], domains: dict[str, ConstrainedDomain]) -> Transducer:
    return B.copy(
        states={q: tau for q, tau in B.states.items() if q in keep},
        init=B.init if B.init is not None and B.init[0] in keep else None,
        delta={k: v for k, v in B.delta.items() if k[0] in keep and v[0] in keep},
        halt={q: u for q, u in B.halt.items() if q in keep},
        domains=domains,
    )


# -- step 4: observational merge -----------------------------------------------

Perm = tuple[int, ...]
Triple = tuple[str, str, Perm]


def _perms(n: int) -> Iterator[Perm]:
    if n > MAX_PERMUTATION_TYPE:
        raise SemanticError(f"state type {n} exceeds the permutation search cap {MAX_PERMUTATION_TYPE}")
    return itertools.permutations(range(n))


def _instantiate(u: Update, dom: ConstrainedDomain | None) -> tuple:
    if u.kind != FREE or dom is None:
        return (u.payload,) if u.kind != FREE else u.payload  # type: ignore[return-value]
    return substitute_all(u.payload, dom.unifier)  # type: ignore[arg-type]


def _matchings(left: Sequence[Term], right: Sequence[Term]) -> Iterator[Perm]:
    """All ``perm`` with ``left[perm[k]] == right[k]`` for every ``k``."""
    n = len(left)
    if n != len(right):
        return
    cand = [[i for i in range(n) if left[i] == right[k]] for k in range(n)]
    chosen: list[int] = []
    used = [False] * n

    def go(k: int) -> Iterator[Perm]:
        if k == n:
            yield tuple(chosen)
            return
        for i in cand[k]:
            if not used[i]:
                used[i] = True
                chosen.append(i)
                yield from go(k + 1)
                chosen.pop()
                used[i] = False

    yield from go(0)


class _Bisimulation:
    """Search for a set of triples ``(p, p', pi)`` meaning ``V_p = pi ; V_p'``.

    ``A`` supplies the left states, ``B`` the right ones.  For free-term updates
    each triple is checked on the right state's domain pulled back along ``pi``:
    the identity only has to hold on data that can actually reach ``p'``, which is
    what absorbing ``p'`` into ``p`` needs.  Successor isos are chosen by backtracking.
    """

    def __init__(self, A: Transducer, B: Transducer, functional: bool = False):
        self.A = A
        self.B = B
        self.free = A.kind == FREE
        self.functional = functional
        self.letters = sorted(A.inputs)
        self._seen: dict[Triple, ConstrainedDomain] = {}

    def dom(self, T: Transducer, q: str) -> ConstrainedDomain | None:
        if not self.free:
            return None
        return T.domain(q) or ConstrainedDomain.full(T.states[q])

    def pi_update(self, pi: Perm) -> Update:
        return permutation(pi) if self.free else identity(self.A.kind, 1 if self.A.kind == SEQUENTIAL else len(pi))

    def seen(self, p: str, p2: str, pi: Perm) -> ConstrainedDomain | None:
        """``D_p2`` pulled back along ``pi`` into the coordinates of ``p``."""
        if not self.free:
            return None
        key = (p, p2, pi)
        if key not in self._seen:
            inv = permutation(inverse_permutation(pi))
            self._seen[key] = closure_image(inv, self.dom(self.B, p2))  # type: ignore[arg-type]
        return self._seen[key]

    def domains_match(self, p: str, p2: str, pi: Perm) -> bool:
        if not self.free:
            return True
        return closure_image(permutation(pi), self.dom(self.A, p)) == self.dom(self.B, p2)  # type: ignore[arg-type]

    def agree(self, u: Update, v: Update, dom: ConstrainedDomain | None) -> bool:
        if (u.in_type, u.out_type) != (v.in_type, v.out_type):
            return False
        return _instantiate(u, dom) == _instantiate(v, dom)

    def successor_isos(self, dom: ConstrainedDomain | None, pi: Perm, u: Update, u2: Update) -> list[Perm]:
        if not self.free:
            return [tuple(range(u.out_type))] if u == u2 else []
        if u.out_type != u2.out_type:
            return []
        lhs = _instantiate(u, dom)
        rhs = _instantiate(compose(permutation(pi), u2), dom)
        return list(_matchings(lhs, rhs))

    def local(self, p: str, p2: str, pi: Perm) -> list[list[Triple]] | None:
        A, B = self.A, self.B
        if A.states[p] != B.states[p2]:
            return None
        if (p in A.halt) != (p2 in B.halt):
            return None
        dom = self.seen(p, p2, pi)
        if p in A.halt and not self.agree(A.halt[p], compose(self.pi_update(pi), B.halt[p2]), dom):
            return None
        options: list[list[Triple]] = []
        for a in self.letters:
            s, s2 = A.delta.get((p, a)), B.delta.get((p2, a))
            if (s is None) != (s2 is None):
                return None
            if s is None:
                continue
            (t, u), (t2, u2) = s, s2  # type: ignore[misc]
            if A.states[t] != B.states[t2]:
                return None
            isos = self.successor_isos(dom, pi, u, u2)
            if not isos:
                return None
            options.append([(t, t2, sigma) for sigma in isos])
        return options

    def consistent(self, triple: Triple, assumed: frozenset[Triple]) -> bool:
        if not self.functional:
            return True
        p, p2, pi = triple
        for q, q2, _ in assumed:
            if (q == p) != (q2 == p2):
                return False
        return self.domains_match(p, p2, pi)

    def solve(self, todo: list[Triple], assumed: frozenset[Triple]) -> frozenset[Triple] | None:
        while todo and todo[0] in assumed:
            todo = todo[1:]
        if not todo:
            return assumed
        triple, rest = todo[0], todo[1:]
        if not self.consistent(triple, assumed):
            return None
        options = self.local(*triple)
        if options is None:
            return None
        assumed = assumed | {triple}
        for pick in itertools.product(*options):
            found = self.solve(list(pick) + rest, assumed)
            if found is not None:
                return found
        return None


def mergeable(C: Transducer, q: str, q2: str, j: Perm | None = None) -> frozenset[Triple] | None:
    """Witness triples showing ``V_q = j ; V_q2`` (``j`` defaults to the identity), or ``None``."""
    n = C.states[q]
    if n != C.states[q2]:
        return None
    if j is None:
        j = tuple(range(n))
    return _Bisimulation(C, C).solve([(q, q2, j)], frozenset())


def _merge_iso(C: Transducer, rep: str, q: str) -> Perm | None:
    n = C.states[rep]
    if n != C.states[q]:
        return None
    engine = _Bisimulation(C, C)
    candidates = _perms(n) if C.kind == FREE else [tuple(range(n))]
    for j in candidates:
        if engine.solve([(rep, q, j)], frozenset()) is not None:
            return j
    return None


def _merge_once(C: Transducer) -> Transducer:
    order = C.reachable_order()
    reps: list[str] = []
    # state -> (representative, update from its data type into the representative's)
    target: dict[str, tuple[str, Update | None]] = {}

    def hop(j: Perm) -> Update | None:
        return permutation(inverse_permutation(j)) if C.kind == FREE else None

    for q in order:
        for r in reps:
            j = _merge_iso(C, r, q)
            if j is not None:
                target[q] = (r, hop(j))
                break
        else:
            # q may still cover an earlier representative whose data it subsumes
            for r in reps:
                j = _merge_iso(C, q, r)
                if j is None:
                    continue
                h = hop(j)
                for x, (y, g) in list(target.items()):
                    if y == r:
                        target[x] = (q, h if g is None else compose(g, h) if h is not None else g)
                reps[reps.index(r)] = q
                break
            else:
                reps.append(q)
            target[q] = (q, None)

    def redirect(t: str, u: Update) -> tuple[str, Update]:
        r, h = target[t]
        return r, (u if h is None else compose(u, h))

    keep = set(reps)
    init = None if C.init is None else redirect(*C.init)
    delta = {(q, a): redirect(t, u) for (q, a), (t, u) in C.delta.items() if q in keep}
    return C.copy(
        states={q: C.states[q] for q in order if q in keep},
        init=init,
        delta=delta,
        halt={q: u for q, u in C.halt.items() if q in keep},
        domains={q: d for q, d in C.domains.items() if q in keep},
    )


def merge_observational(C: Transducer) -> Transducer:
    """Collapse states whose departing vectors agree up to a component iso.

    A state is absorbed into a representative when the two vectors agree on the
    data that reaches the absorbed state.  For free-term updates the merged
    representative receives more data, so domains are recomputed and the merge
    repeated until nothing changes.
    """
    while True:
        M = _merge_once(C)
        if C.kind != FREE or len(M.states) == len(C.states):
            return M
        C = reach(M)


# -- the whole pipeline --------------------------------------------------------

@dataclass
class Pipeline:
    divisors: DivisorAssignment
    normalized: Transducer
    reached: Transducer
    reach_sweeps: int
    minimal: Transducer


def minimize_stages(A: Transducer) -> Pipeline:
    require_valid(A)
    D = gcd_fixpoint(A)
    B = normalize(A, D)
    R = reach_with_stats(B)
    M = merge_observational(R.transducer)
    return Pipeline(D, B, R.transducer, R.sweeps, M)


def minimize(A: Transducer) -> Transducer:
    return minimize_stages(A).minimal


# -- isomorphism ---------------------------------------------------------------

def isomorphism(A: Transducer, B: Transducer) -> dict[str, tuple[str, Perm]] | None:
    """State bijection with per-state component isos relating ``A`` and ``B``, or ``None``."""
    if A.kind != B.kind or set(A.inputs) != set(B.inputs) or len(A.states) != len(B.states):
        return None
    if A.init is None or B.init is None:
        return {} if A.init is None and B.init is None and not A.states else None
    (t, u), (t2, u2) = A.init, B.init
    if A.states[t] != B.states[t2]:
        return None
    engine = _Bisimulation(A, B, functional=True)
    d0 = INIT_DATA[A.kind]
    if A.kind == FREE:
        starts = list(_matchings(apply(u, d0), apply(u2, d0)))  # type: ignore[arg-type]
    else:
        starts = [tuple(range(A.states[t]))] if apply(u, d0) == apply(u2, d0) else []
    for pi in starts:
        found = engine.solve([(t, t2, pi)], frozenset())
        if found is None:
            continue
        mapping = {p: (p2, sigma) for p, p2, sigma in found}
        if len(mapping) == len(A.states) and len({p2 for p2, _ in mapping.values()}) == len(B.states):
            return mapping
    return None


# -- divisor morphism and right invariance ------------------------------------

def divisor_morphism(A: Transducer, D: DivisorAssignment) -> Transformation:
    """The morphism ``A -> normalize(A, D)`` that applies ``f_q`` at every live state."""
    live = {q: g for q, g in D.f.items() if g is not None}
    return Transformation({q: q for q in live}, live)


@dataclass
class InvarianceReport:
    ok: bool
    checked: int
    failures: list[str]


def right_invariance_check(A: Transducer, maxlen: int = 4) -> InvarianceReport:
    """Recompute windowed row GCDs of the output table and test ``G[sa] = G[s] ; d_a[s]``.

    ``G_W[s]`` is the GCD of the outputs ``s t`` with ``|t| <= W``; the identity is
    checked between windows ``W`` and ``W-1`` for every ``|s| <= maxlen``, together
    with the fact that the run prefix composed with the fixpoint divisor divides ``G_W[s]``.
    """
    require_valid(A)
    W = maxlen
    fix = gcd_fixpoint(A).f
    vectors = {q: UpdateVector(A, q) for q in A.states}
    letters = sorted(A.inputs)
    words: dict[int, list[Word]] = {n: list(itertools.product(letters, repeat=n)) for n in range(W + 1)}
    failures: list[str] = []
    checked = 0

    def prefix(s: Word) -> tuple[str, Update] | None:
        if A.init is None:
            return None
        q, u = A.init
        for a in s:
            step = A.delta.get((q, a))
            if step is None:
                return None
            q, u = step[0], compose(u, step[1])
        return q, u

    def row(s: Word, w: int, first: str | None = None) -> list[Update]:
        p = prefix(s)
        if p is None:
            return []
        q, u = p
        out = []
        for n in range(w + 1):
            for t in words[n]:
                if first is not None and (not t or t[0] != first):
                    continue
                v = vectors[q][t]
                if v is not None:
                    out.append(compose(u, v))
        return out

    def G(s: Word, w: int) -> Update | None:
        r = row(s, w)
        return gcd(dict.fromkeys(r)).gcd if r else None

    def same(x: Update | None, y: Update | None) -> bool:
        if x is None or y is None:
            return x is None and y is None
        return equal_up_to_permutation(x, y)

    show = lambda s: "".join(s) if all(len(a) == 1 for a in s) else ",".join(s)
    for n in range(W + 1):
        for s in words[n]:
            g = G(s, W)
            p = prefix(s)
            if g is not None and p is not None and fix[p[0]] is not None:
                checked += 1
                if not divides(compose(p[1], fix[p[0]]), g):  # type: ignore[arg-type]
                    failures.append(f"s={show(s)!r}: prefix ; f_q does not divide G[s]")
            if n >= W:
                continue
            for a in letters:
                checked += 1
                lhs = G(s + (a,), W - 1)
                longer = row(s, W, first=a)
                if g is None or not longer:
                    if lhs is not None:
                        failures.append(f"s={show(s)!r}, a={a!r}: G[sa] defined but G[s] d_a[s] is not")
                    continue
                res = [residual_via_epi(g, h) for h in longer]
                if any(r is None for r in res):
                    failures.append(f"s={show(s)!r}, a={a!r}: G[s] does not divide its row")
                    continue
                if A.kind == FREE:
                    # ground entries have no unique residual; take it against G[sa] itself
                    d = residual_via_epi(g, lhs) if lhs is not None else None
                    if d is None:
                        failures.append(f"s={show(s)!r}, a={a!r}: G[s] does not divide G[sa]")
                        continue
                    if not all(divides(lhs, h) for h in longer):  # type: ignore[arg-type]
                        failures.append(f"s={show(s)!r}, a={a!r}: G[sa] does not divide its row")
                        continue
                else:
                    d = gcd(dict.fromkeys(res)).gcd  # type: ignore[arg-type]
                if not same(lhs, compose(g, d)):
                    failures.append(
                        f"s={show(s)!r}, a={a!r}: G[sa]={render_update(lhs) if lhs else 'undefined'} "
                        f"but G[s];d_a[s]={render_update(compose(g, d))}"
                    )
    return InvarianceReport(not failures, checked, failures)


__all__ = [
    "DivisorAssignment",
    "InvarianceReport",
    "MAX_PERMUTATION_TYPE",
    "Pipeline",
    "ReachResult",
    "divisor_morphism",
    "gcd_fixpoint",
    "isomorphism",
    "merge_observational",
    "mergeable",
    "minimize",
    "minimize_stages",
    "normalize",
    "reach",
    "reach_with_stats",
    "right_invariance_check",
]
