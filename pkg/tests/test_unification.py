import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transmin.algebras import AlgebraError, apply, free, identity
from transmin.terms import App, RankedAlphabet, Var, parse_term, parse_tuple, render_tuple, substitute, substitute_all
from transmin.unification import (
    SOLVED,
    UNSAT,
    ConstrainedDomain,
    EquationSystem,
    closure_image,
    closure_of,
    closure_union,
    entails,
    intersect,
    inverse_constraint,
    mgu,
)

from support import ground_term, term_with_leaves

T = parse_term
SMALL = RankedAlphabet({"a": 0, "b": 0, "c": 2})


def system(arity: int, *pairs: str) -> EquationSystem:
    return EquationSystem.of(arity, [(T(l), T(r)) for l, r in (p.split("=") for p in pairs)])


def ground_terms(alphabet: RankedAlphabet, depth: int) -> list:
    level = [App(n) for n in alphabet.constants()]
    for _ in range(depth):
        new = list(level)
        for name, rank in alphabet.items():
            if rank:
                new += [App(name, args) for args in itertools.product(level, repeat=rank)]
        level = list(dict.fromkeys(new))
    return level


def test_mgu_golden():
    E = system(3, "a(b(x1),x2,x3)=a(x2,b(x1),x3)", "a(c(x1),x2,x3)=a(x3,x2,c(x1))")
    sol = mgu(E)
    assert sol.status == SOLVED
    assert str(sol) == "(y1,b(y1),c(y1))"
    assert sol.parameter_count == 1


def test_mgu_trivial_and_occurs():
    assert str(mgu(EquationSystem(2))) == "(y1,y2)"
    assert mgu(system(1, "x1=c(x1,b)")).status == UNSAT
    assert str(mgu(system(1, "x1=c(x1,b)"))) == UNSAT


def test_mgu_without_constants():
    unary = RankedAlphabet({"g": 1})
    assert mgu(EquationSystem(1), unary).status == UNSAT
    assert mgu(EquationSystem(0), unary).status == SOLVED


def test_mgu_parameters_numbered_by_first_occurrence():
    assert str(mgu(system(3, "x3=c(x2,x1)"))) == "(y1,y2,c(y2,y1))"


def test_entails_examples():
    assert entails(system(2, "x1=x2"), T("c(x1,x1)"), T("c(x1,x2)"))
    assert not entails(EquationSystem(2), T("x1"), T("x2"))
    assert entails(system(1, "a=b"), T("x1"), T("c(x1,a)"))
    with pytest.raises(AlgebraError):
        entails(EquationSystem(2), (T("x1"), T("x2")), (T("x1"),))


def test_inverse_constraint_example():
    f = free(parse_tuple("(c(x1,b))"), 1)
    E = system(1, "x1=c(a,b)")
    back = inverse_constraint(f, E)
    assert back.equations == ((T("c(x1,b)"), T("c(a,b)")),)
    assert str(mgu(back)) == "(a)"
    assert inverse_constraint(identity("free-term", 1), E) == E
    assert inverse_constraint(f, EquationSystem(1)).equations == ()


def test_intersect_examples():
    D1 = ConstrainedDomain.of(system(2, "x1=a"))
    D2 = ConstrainedDomain.of(system(2, "x2=b"))
    assert str(intersect(D1, D2)) == "(a,b)"
    assert intersect(D1, ConstrainedDomain.full(2)) == D1
    assert intersect(D1, ConstrainedDomain.of(system(2, "x1=b"))).is_empty


def test_closure_union_golden():
    D1 = ConstrainedDomain.of(system(2, "x1=a", "x2=a"))
    D2 = ConstrainedDomain.of(system(2, "x1=b", "x2=b"))
    cl = closure_union(D1, D2)
    assert str(cl) == "(y1,y1)"
    assert cl.render_where() == "x1 = x2"


def test_closure_union_trivial():
    D = ConstrainedDomain.of(system(2, "x1=c(x2,a)"))
    assert closure_union(D, ConstrainedDomain.empty(2)) == D
    assert closure_union(ConstrainedDomain.empty(2), D) == D
    assert closure_union(D, D) == D


def test_closure_union_keeps_shared_structure():
    D1 = ConstrainedDomain.from_unifier(parse_tuple("(c(a,x1),x1)"))
    D2 = ConstrainedDomain.from_unifier(parse_tuple("(c(b,x1),x1)"))
    # the first component is c(z, x2) for varying z: no equation over x1, x2 alone pins that
    assert closure_union(D1, D2).is_full
    D3 = ConstrainedDomain.from_unifier(parse_tuple("(c(x1,x2),x1,x2)"))
    D4 = ConstrainedDomain.from_unifier(parse_tuple("(c(a,b),a,b)"))
    assert closure_union(D3, D4).render_where() == "x1 = c(x2,x3)"


def test_closure_image_examples():
    f = free(parse_tuple("(c(x1,b))"), 1)
    # {c(t,b)} is not cut out by any equation on x1 alone, so its closure is everything
    assert closure_image(f, ConstrainedDomain.full(1)).is_full
    point = ConstrainedDomain.empty(0)
    assert closure_image(free(parse_tuple("(a)"), 0), point).is_empty
    assert closure_image(identity("free-term", 2), ConstrainedDomain.of(system(2, "x1=x2"))) == ConstrainedDomain.of(
        system(2, "x1=x2")
    )
    singleton = closure_image(free(parse_tuple("(c,d)"), 0), ConstrainedDomain.full(0))
    assert singleton.render_where() == "x1 = c and x2 = d"


def test_closure_of_pairs_components():
    rows = [parse_tuple("(a,c(a,b),b)"), parse_tuple("(b,c(b,a),a)")]
    assert closure_of(rows, 3).render_where() == "x2 = c(x1,x3)"


def test_domain_rendering_and_equality():
    D = ConstrainedDomain.of(system(3, "x2=x1", "x3=c(x1,a)"))
    assert D.render_where() == "x1 = x2 and x3 = c(x1,a)"
    assert ConstrainedDomain.empty(2).render_where() == "false"
    assert ConstrainedDomain.full(2).is_full
    assert D == ConstrainedDomain.from_unifier(D.unifier)


# -- brute-force oracles -----------------------------------------------------------

def _random_system(rng: random.Random, arity: int) -> EquationSystem:
    eqs = []
    for _ in range(rng.randint(1, 2)):
        vs = [Var(rng.randint(1, arity)) for _ in range(rng.randint(0, 2))]
        l = term_with_leaves(rng, vs, 2, SMALL)
        r = term_with_leaves(rng, [Var(rng.randint(1, arity))], 2, SMALL) if rng.random() < 0.7 else ground_term(rng, 2, SMALL)
        eqs.append((l, r))
    return EquationSystem(arity, tuple(eqs))


def _holds(E: EquationSystem, d) -> bool:
    return all(substitute(l, d) == substitute(r, d) for l, r in E.equations)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_mgu_sound_and_complete(seed):
    rng = random.Random(seed)
    E = _random_system(rng, 2)
    sol = mgu(E, SMALL)
    universe = ground_terms(SMALL, 2)
    solutions = [d for d in itertools.product(universe, repeat=2) if _holds(E, d)]
    if sol.status == UNSAT:
        assert not solutions
        return
    for _ in range(20):
        w = [ground_term(rng, 3, SMALL) for _ in range(sol.parameter_count)]
        assert _holds(E, substitute_all(sol.unifier, w))
    D = ConstrainedDomain.of(E, SMALL)
    for d in solutions:
        assert D.contains(d)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_entails_matches_ground_check(seed):
    rng = random.Random(seed)
    E = _random_system(rng, 2)
    if mgu(E, SMALL).status == UNSAT:
        return
    l = term_with_leaves(rng, [Var(1)], 2, SMALL)
    r = term_with_leaves(rng, [Var(rng.randint(1, 2))], 2, SMALL)
    universe = ground_terms(SMALL, 2)
    brute = all(substitute(l, d) == substitute(r, d) for d in itertools.product(universe, repeat=2) if _holds(E, d))
    # a depth bound can only make the ground check more permissive
    if entails(E, l, r):
        assert brute
    elif brute:
        sol = mgu(E, SMALL)
        deep = [substitute_all(sol.unifier, [ground_term(rng, 4, SMALL) for _ in range(sol.parameter_count)]) for _ in range(40)]
        assert any(substitute(l, d) != substitute(r, d) for d in deep)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_closure_image_contains_images(seed):
    rng = random.Random(seed)
    E = _random_system(rng, 2)
    D = ConstrainedDomain.of(E, SMALL)
    if D.is_empty:
        return
    f = free([term_with_leaves(rng, [Var(1)], 2, SMALL), term_with_leaves(rng, [Var(2)], 2, SMALL)], 2)
    img = closure_image(f, D)
    for _ in range(50):
        d = substitute_all(D.unifier, [ground_term(rng, 3, SMALL) for _ in range(D.solved.parameter_count)])
        assert img.contains(apply(f, d))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_closure_union_is_an_upper_bound(seed):
    rng = random.Random(seed)
    D1 = ConstrainedDomain.of(_random_system(rng, 2), SMALL)
    D2 = ConstrainedDomain.of(_random_system(rng, 2), SMALL)
    U = closure_union(D1, D2)
    assert U.includes(D1) and U.includes(D2)
    # every component identification valid on both inputs survives
    for i, j in [(1, 2)]:
        if entails(D1.solved, Var(i), Var(j)) and entails(D2.solved, Var(i), Var(j)):
            assert entails(U.solved, Var(i), Var(j))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_inverse_constraint_pulls_back(seed):
    rng = random.Random(seed)
    E = _random_system(rng, 2)
    f = free([term_with_leaves(rng, [Var(1)], 2, SMALL), term_with_leaves(rng, [Var(2)], 1, SMALL)], 2)
    back = inverse_constraint(f, E)
    for _ in range(30):
        d = (ground_term(rng, 2, SMALL), ground_term(rng, 2, SMALL))
        assert _holds(back, d) == _holds(E, apply(f, d))


def test_render_tuple_of_unifier():
    assert render_tuple(mgu(system(2, "x1=c(x2,a)")).unifier, "y") == "(c(y1,a),y1)"
