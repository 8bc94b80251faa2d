"""Random generators and brute-force oracles shared by the test modules.

The oracles deliberately avoid the library's search routines: divisors are
found by enumerating every cut of a term forest and divisibility is confirmed
by recomposing.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterator

from transmin.algebras import FREE, LEAF, SEQUENTIAL, Update, compose, free
from transmin.generalization import lgg, multiset_gcd
from transmin.terms import App, RankedAlphabet, Term, Var, parse_tuple, render, replace_at
from transmin.transducer import Transducer

ALPHABET3 = RankedAlphabet({"a": 0, "b": 1, "c": 2})
TREE_ALPHABET = RankedAlphabet({"a": 0, "b": 0, "n": 0, "g": 1, "c": 2})


# -- random terms --------------------------------------------------------------

def ground_term(rng: random.Random, depth: int, alphabet: RankedAlphabet = ALPHABET3) -> Term:
    items = alphabet.items()
    consts = [n for n, r in items if r == 0]
    if depth <= 0 or rng.random() < 0.35:
        return App(rng.choice(consts))
    name, rank = rng.choice(items)
    return App(name, [ground_term(rng, depth - 1, alphabet) for _ in range(rank)])


def term_with_leaves(rng: random.Random, leaves: list[Term], depth: int, alphabet: RankedAlphabet = ALPHABET3) -> Term:
    """Random term of depth <= ``depth`` containing ``leaves`` left to right, each once."""
    if not leaves:
        return ground_term(rng, depth, alphabet)
    if len(leaves) == 1 and (depth == 0 or rng.random() < 0.3):
        return leaves[0]
    if depth == 0:
        raise ValueError("too many leaves for the depth")
    wide = [(n, r) for n, r in alphabet.items() if r >= max(1, min(len(leaves), 2))]
    name, rank = rng.choice(wide)
    # split leaves into ``rank`` ordered chunks, each small enough for the depth
    for _ in range(50):
        cuts = sorted(rng.randint(0, len(leaves)) for _ in range(rank - 1))
        bounds = [0] + cuts + [len(leaves)]
        chunks = [leaves[bounds[i]:bounds[i + 1]] for i in range(rank)]
        if all(len(ch) <= 2 ** (depth - 1) for ch in chunks):
            break
    else:
        raise ValueError("cannot place leaves")
    return App(name, [term_with_leaves(rng, ch, depth - 1, alphabet) for ch in chunks])


def free_update(rng: random.Random, alpha: int, beta: int, depth: int = 3, alphabet: RankedAlphabet = ALPHABET3) -> Update:
    """Random copyless non-erasing update ``alpha -> beta``."""
    xs = [Var(i) for i in range(1, alpha + 1)]
    rng.shuffle(xs)
    slots: list[list[Term]] = [[] for _ in range(beta)]
    for x in xs:
        slots[rng.randrange(beta)].append(x)
    comps = tuple(term_with_leaves(rng, s, depth, alphabet) for s in slots)
    return Update(FREE, alpha, beta, comps)


def _number(t: Term, counter: list[int]) -> Term:
    if isinstance(t, Var):
        counter[0] += 1
        return Var(counter[0])
    if not t.args:  # type: ignore[attr-defined]
        return t
    return App(t.symbol, [_number(a, counter) for a in t.args])  # type: ignore[attr-defined]


def number_placeholders(ts) -> tuple[Term, ...]:
    counter = [0]
    return tuple(_number(t, counter) for t in ts)


def leaf_update(rng: random.Random, alpha: int, beta: int, depth: int = 2, alphabet: RankedAlphabet = ALPHABET3) -> Update:
    """Random tuple of ``alpha`` linear terms with ``beta`` placeholders in total."""
    counts = [0] * alpha
    for _ in range(beta):
        counts[rng.randrange(alpha)] += 1
    comps = []
    for k in counts:
        while k > 2 ** depth:
            raise ValueError("too many placeholders for the depth")
        comps.append(term_with_leaves(rng, [Var(1)] * k, depth, alphabet))
    return Update(LEAF, alpha, beta, number_placeholders(comps))


# -- cuts: the brute-force view of divisors ------------------------------------

def cuts(ts: tuple[Term, ...], must_cover_vars: bool) -> Iterator[tuple[tuple[int, tuple[int, ...]], ...]]:
    """Every set of pairwise disjoint occurrences in the forest ``ts``.

    With ``must_cover_vars`` every variable occurrence lies inside a chosen one.
    """

    def node(t: Term, k: int, path: tuple[int, ...]) -> Iterator[list]:
        yield [(k, path)]
        if isinstance(t, Var):
            if not must_cover_vars:
                yield []
            return
        child_opts = [list(node(a, k, path + (i,))) for i, a in enumerate(t.args, start=1)]  # type: ignore[attr-defined]
        for combo in itertools.product(*child_opts):
            yield [occ for part in combo for occ in part]

    per_tree = [list(node(t, k, ())) for k, t in enumerate(ts)]
    for combo in itertools.product(*per_tree):
        yield tuple(occ for part in combo for occ in part)


def _at(ts, occ):
    k, path = occ
    t = ts[k]
    for i in path:
        t = t.args[i - 1]
    return t


def free_divisors(u: Update) -> set[tuple[str, ...]]:
    """All divisors of ``u`` as sorted component renderings, each confirmed by recomposition."""
    out = set()
    for cut in cuts(u.payload, must_cover_vars=True):  # type: ignore[arg-type]
        comps = tuple(_at(u.payload, occ) for occ in cut)
        g = Update(FREE, u.in_type, len(comps), comps)
        ctx = list(u.payload)  # type: ignore[call-overload]
        for i, (k, path) in enumerate(cut, start=1):
            ctx[k] = replace_at(ctx[k], path, Var(i))
        v = Update(FREE, len(comps), u.out_type, tuple(ctx))
        assert compose(g, v) == u
        out.add(tuple(sorted(render(c) for c in comps)))
    return out


def leaf_generalizations(u: Update) -> set[str]:
    """All generalizations of a leaf-subst update, rendered with ``_`` placeholders."""
    out = set()
    for cut in cuts(u.payload, must_cover_vars=True):  # type: ignore[arg-type]
        ctx = list(u.payload)  # type: ignore[call-overload]
        for k, path in cut:
            ctx[k] = replace_at(ctx[k], path, Var(1))
        comps = number_placeholders(ctx)
        out.add("(" + ",".join(render(c, "_") for c in comps) + ")")
    return out


def random_free_set(rng: random.Random) -> list[Update]:
    """Up to three copyless non-erasing updates, often sharing a common factor."""
    alpha = rng.randint(0, 2)
    beta = rng.randint(1, 2)
    if rng.random() < 0.6:
        # depth 1 then depth 2 keeps the composite within depth 3
        mid = rng.randint(max(alpha, 1), 3)
        g = free_update(rng, alpha, mid, 1)
        return [compose(g, free_update(rng, mid, beta, 2)) for _ in range(rng.randint(1, 3))]
    return [free_update(rng, alpha, beta, 3) for _ in range(rng.randint(1, 3))]


def random_leaf_set(rng: random.Random) -> list[Update]:
    alpha = rng.randint(1, 2)
    beta = rng.randint(0, 3)
    return [leaf_update(rng, alpha, beta, 2) for _ in range(rng.randint(1, 3))]


# -- GCD oracles ---------------------------------------------------------------

def free_oracle(us: list[Update]) -> tuple[set, list]:
    common = set.intersection(*(free_divisors(u) for u in us))
    maximal = []
    for m in common:
        mu = as_update(m, us[0].in_type)
        above = free_divisors(mu)
        if all(d in above for d in common):
            maximal.append(m)
    return common, maximal


def as_update(rendered: tuple[str, ...], alpha: int) -> Update:
    return free(parse_tuple("(" + ",".join(rendered) + ")", placeholders=False), alpha)


def check_free_gcd(us: list[Update]) -> None:
    common, maximal = free_oracle(us)
    g = multiset_gcd(us).gcd
    key = tuple(sorted(render(t) for t in g.payload))
    assert maximal == [key]
    below = free_divisors(g)
    assert all(d in below for d in common)
    for u, v in zip(us, multiset_gcd(us).residuals):
        assert compose(g, v) == u


def check_lgg(us: list[Update]) -> None:
    common = set.intersection(*(leaf_generalizations(u) for u in us))
    g = lgg(us).gcd
    rendered = "(" + ",".join(render(t, "_") for t in g.payload) + ")"
    assert rendered in common
    # every common generalization generalizes the lgg, which pins it down uniquely
    assert common <= leaf_generalizations(g)


# -- random transducers --------------------------------------------------------

def random_sequential(rng: random.Random, n_states: int | None = None, letters=("a", "b")) -> Transducer:
    n = n_states or rng.randint(1, 4)
    states = {f"s{i}": 1 for i in range(n)}
    names = list(states)
    word = lambda: "".join(rng.choice("xy") for _ in range(rng.randint(0, 3)))
    seq = lambda w: Update(SEQUENTIAL, 1, 1, w)
    delta = {}
    for q in names:
        for a in letters:
            if rng.random() < 0.8:
                delta[(q, a)] = (rng.choice(names), seq(word()))
    halt = {q: seq(word()) for q in names if rng.random() < 0.7}
    if not halt:
        halt[rng.choice(names)] = seq(word())
    return Transducer(SEQUENTIAL, tuple(letters), RankedAlphabet({"x": 0, "y": 0}), states, (names[0], seq(word())), delta, halt)


def random_leaf(rng: random.Random, n_states: int | None = None, letters=("a", "b")) -> Transducer:
    n = n_states or rng.randint(1, 4)
    types = [rng.choice([1, 1, 2, 0]) for _ in range(n)]
    types[0] = rng.choice([1, 2])
    names = [f"s{i}" for i in range(n)]
    states = dict(zip(names, types))
    delta = {}
    for q in names:
        for a in letters:
            if rng.random() < 0.8:
                targets = [t for t in names if states[q] > 0 or states[t] == 0]
                if not targets:
                    continue
                t = rng.choice(targets)
                delta[(q, a)] = (t, leaf_update(rng, states[q], states[t], 2, TREE_ALPHABET)) if states[q] else (t, Update(LEAF, 0, 0, ()))
    halt = {}
    for q in names:
        if rng.random() < 0.7 or q == names[-1]:
            halt[q] = leaf_update(rng, states[q], 0, 2, TREE_ALPHABET) if states[q] else Update(LEAF, 0, 0, ())
    init = (names[0], leaf_update(rng, 1, states[names[0]], 2, TREE_ALPHABET))
    return Transducer(LEAF, tuple(letters), TREE_ALPHABET, states, init, delta, halt)


def random_free(rng: random.Random, n_states: int | None = None, letters=("a", "b")) -> Transducer:
    n = n_states or rng.randint(1, 3)
    names = [f"s{i}" for i in range(n)]
    types = [rng.choice([1, 1, 2]) for _ in range(n)]
    states = dict(zip(names, types))
    delta = {}
    for q in names:
        for a in letters:
            if rng.random() < 0.75:
                t = rng.choice(names)
                delta[(q, a)] = (t, free_update(rng, states[q], states[t], 2, TREE_ALPHABET))
    halt = {}
    for q in names:
        if rng.random() < 0.7 or q == names[-1]:
            halt[q] = free_update(rng, states[q], 1, 3, TREE_ALPHABET)
    init = (names[0], free_update(rng, 0, states[names[0]], 2, TREE_ALPHABET))
    return Transducer(FREE, tuple(letters), TREE_ALPHABET, states, init, delta, halt)


RANDOM = {SEQUENTIAL: random_sequential, LEAF: random_leaf, FREE: random_free}


# -- padding -------------------------------------------------------------------

def _outer_constants(ts: tuple[Term, ...], cut) -> bool:
    """Whether a constant survives outside the occurrences of ``cut``."""
    chosen = set(cut)

    def walk(t: Term, k: int, path: tuple[int, ...]) -> bool:
        if (k, path) in chosen or isinstance(t, Var):
            return False
        if not t.args:  # type: ignore[attr-defined]
            return True
        return any(walk(a, k, path + (i,)) for i, a in enumerate(t.args, start=1))  # type: ignore[attr-defined]

    return any(walk(t, k, ()) for k, t in enumerate(ts))


def split_update(rng: random.Random, u: Update) -> tuple[Update, Update]:
    """Random ``(u1, u2)`` with ``compose(u1, u2) == u``."""
    if u.kind == SEQUENTIAL:
        k = rng.randint(0, len(u.payload))  # type: ignore[arg-type]
        return Update(SEQUENTIAL, 1, 1, u.payload[:k]), Update(SEQUENTIAL, 1, 1, u.payload[k:])  # type: ignore[index]
    all_cuts = list(itertools.islice(cuts(u.payload, must_cover_vars=True), 200))  # type: ignore[arg-type]
    if u.kind == FREE:
        # keep constants on the inner side so the new state is not a specialization
        all_cuts = [c for c in all_cuts if not _outer_constants(u.payload, c)] or all_cuts[:1]
    cut = rng.choice(all_cuts)
    if u.kind == LEAF:
        ctx = list(u.payload)  # type: ignore[call-overload]
        fill = [_at(u.payload, occ) for occ in cut]
        for k, path in cut:
            ctx[k] = replace_at(ctx[k], path, Var(1))
        outer = number_placeholders(ctx)
        u1 = Update(LEAF, u.in_type, len(cut), outer)
        u2 = Update(LEAF, len(cut), u.out_type, tuple(fill))
    else:
        comps = tuple(_at(u.payload, occ) for occ in cut)
        ctx = list(u.payload)  # type: ignore[call-overload]
        for i, (k, path) in enumerate(cut, start=1):
            ctx[k] = replace_at(ctx[k], path, Var(i))
        u1 = Update(FREE, u.in_type, len(comps), comps)
        u2 = Update(FREE, len(comps), u.out_type, tuple(ctx))
    assert compose(u1, u2) == u
    return u1, u2


def pad(rng: random.Random, A: Transducer, rounds: int = 2) -> Transducer:
    """Semantics-preserving blow-up: split states on single edges and add unreachable copies."""
    B = A.copy()
    fresh = itertools.count()
    for _ in range(rounds):
        edges: list = [("init", None)] if B.init is not None else []
        edges += sorted(B.delta)
        if not edges:
            break
        e = rng.choice(edges)
        src, u = (B.init if e[0] == "init" else B.delta[e])  # type: ignore[misc]
        u1, u2 = split_update(rng, u)
        t2 = f"{src}_p{next(fresh)}"
        B.states[t2] = u1.out_type
        for a in B.inputs:
            step = B.delta.get((src, a))
            if step is not None:
                B.delta[(t2, a)] = (step[0], compose(u2, step[1]))
        if src in B.halt:
            B.halt[t2] = compose(u2, B.halt[src])
        if e[0] == "init":
            B.init = (t2, u1)
        else:
            B.delta[e] = (t2, u1)
        if rng.random() < 0.3:
            ghost = f"ghost{next(fresh)}"
            q = rng.choice(sorted(A.states))
            B.states[ghost] = B.states[q]
            for a in B.inputs:
                if (q, a) in B.delta:
                    B.delta[(ghost, a)] = B.delta[(q, a)]
            if q in B.halt:
                B.halt[ghost] = B.halt[q]
    return B
