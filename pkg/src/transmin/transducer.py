"""Deterministic streaming transducers over one of the update algebras."""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .algebras import (
    FREE,
    LEAF,
    SEQUENTIAL,
    AlgebraError,
    Data,
    Update,
    apply,
    classify,
    compose,
    identity,
    render_data,
    render_update,
)
from .terms import RankedAlphabet, TermError, Var, check_linear, is_ground
from .unification import ConstrainedDomain, closure_image, closure_union, updates_agree

Word = tuple[str, ...]

INIT_DATA: dict[str, Data] = {SEQUENTIAL: "", LEAF: Var(1), FREE: ()}
INIT_TYPE = {SEQUENTIAL: 1, LEAF: 1, FREE: 0}
HALT_TYPE = {SEQUENTIAL: 1, LEAF: 0, FREE: 1}


class UsageError(ValueError):
    """Bad input from the caller (unknown letter, unknown state, ...)."""


class SemanticError(ValueError):
    """Ill-typed or otherwise invalid transducer."""


@dataclass(frozen=True)
class Transformation:
    """Partial state map together with the update used from each mapped state."""

    state_map: Mapping[str, str]
    update_map: Mapping[str, Update]

    def __post_init__(self):
        if set(self.state_map) != set(self.update_map):
            raise AlgebraError("state and update maps must share their domain")

    def get(self, q: str) -> tuple[str, Update] | None:
        if q not in self.state_map:
            return None
        return self.state_map[q], self.update_map[q]


@dataclass
class Transducer:
    """Control states with types, plus the init, per-letter and halt transformations.

    ``init`` is ``(target, update)`` or ``None``; ``delta`` maps ``(state, letter)``
    to ``(target, update)``; ``halt`` maps states to updates into the halt type.
    ``domains`` optionally restricts free-term states to a constrained domain.
    """

    kind: str
    inputs: tuple[str, ...]
    outputs: RankedAlphabet
    states: dict[str, int]
    init: tuple[str, Update] | None
    delta: dict[tuple[str, str], tuple[str, Update]] = field(default_factory=dict)
    halt: dict[str, Update] = field(default_factory=dict)
    domains: dict[str, ConstrainedDomain] = field(default_factory=dict)

    def domain(self, q: str) -> ConstrainedDomain | None:
        return self.domains.get(q)

    def successors(self, q: str) -> Iterator[tuple[str, str, Update]]:
        for a in self.inputs:
            step = self.delta.get((q, a))
            if step is not None:
                yield a, step[0], step[1]

    def init_transformation(self) -> Transformation:
        if self.init is None:
            return Transformation({}, {})
        return Transformation({"init": self.init[0]}, {"init": self.init[1]})

    def internal(self, letter: str) -> Transformation:
        pairs = {q: self.delta[(q, a)] for (q, a) in self.delta if a == letter}
        return Transformation({q: t for q, (t, _) in pairs.items()}, {q: u for q, (_, u) in pairs.items()})

    def final(self) -> Transformation:
        return Transformation({q: "halt" for q in self.halt}, dict(self.halt))

    def copy(self, **changes) -> "Transducer":
        fields = dict(
            kind=self.kind,
            inputs=self.inputs,
            outputs=self.outputs,
            states=dict(self.states),
            init=self.init,
            delta=dict(self.delta),
            halt=dict(self.halt),
            domains=dict(self.domains),
        )
        fields.update(changes)
        return Transducer(**fields)

    def reachable_order(self) -> list[str]:
        """States in BFS order from the init target (letters sorted), then the rest by name."""
        order: list[str] = []
        if self.init is not None and self.init[0] in self.states:
            order.append(self.init[0])
            seen = {self.init[0]}
            i = 0
            while i < len(order):
                for _, t, _ in self.successors(order[i]):
                    if t not in seen:
                        seen.add(t)
                        order.append(t)
                i += 1
        rest = sorted(q for q in self.states if q not in set(order))
        return order + rest


# -- validation ----------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, where: str, message: str) -> None:
        self.violations.append(Violation(code, where, message))

    def __str__(self):
        return "valid" if self.ok else "\n".join(str(v) for v in self.violations)


def _check_update(A: Transducer, report: ValidationReport, where: str, u: Update, tin: int, tout: int) -> None:
    if u.kind != A.kind:
        report.add("kind", where, f"update of algebra {u.kind} in a {A.kind} transducer")
        return
    if (u.in_type, u.out_type) != (tin, tout):
        report.add("type", where, f"update {render_update(u)} has type {u.in_type}->{u.out_type}, expected {tin}->{tout}")
        return
    if u.kind == SEQUENTIAL:
        bad = sorted({ch for ch in u.payload if ch not in A.outputs})  # type: ignore[union-attr]
        if bad:
            report.add("symbol", where, f"letters {''.join(bad)!r} not in the output alphabet")
        return
    for t in u.payload:  # type: ignore[attr-defined]
        try:
            A.outputs.check(t)
        except TermError as exc:
            report.add("symbol", where, str(exc))
    c = classify(u)
    if u.kind == LEAF:
        if not check_linear(u.payload)[0]:  # type: ignore[arg-type]
            report.add("linear", where, f"update {render_update(u)} is not a tuple of linear terms")
        return
    if not c.copyless:
        report.add("copyful", where, f"update {render_update(u)} is copyful: a variable occurs more than once")
    if not c.non_erasing:
        report.add("erasing", where, f"update {render_update(u)} is erasing: a variable does not occur")


def validate(A: Transducer) -> ValidationReport:
    report = ValidationReport()
    if A.kind not in INIT_TYPE:
        report.add("kind", "algebra", f"unknown algebra {A.kind!r}")
        return report
    if A.kind != SEQUENTIAL and any(t > 0 for t in A.states.values()) and not A.outputs.has_ground_terms():
        report.add("alphabet", "output", "the output alphabet has no constant, so no ground data exist")
    for q, tau in A.states.items():
        if tau < 0:
            report.add("type", f"state {q}", "negative type")
        if A.kind == SEQUENTIAL and tau != 1:
            report.add("type", f"state {q}", "sequential states have type 1")
    if A.init is not None:
        q, u = A.init
        if q not in A.states:
            report.add("state", "init", f"unknown state {q!r}")
        else:
            _check_update(A, report, "init", u, INIT_TYPE[A.kind], A.states[q])
    for (q, a), (t, u) in sorted(A.delta.items()):
        where = f"transition {q} -{a}->"
        if a not in A.inputs:
            report.add("letter", where, f"letter {a!r} not in the input alphabet")
        if q not in A.states or t not in A.states:
            report.add("state", where, f"unknown state {q if q not in A.states else t!r}")
            continue
        _check_update(A, report, where, u, A.states[q], A.states[t])
    for q, u in sorted(A.halt.items()):
        if q not in A.states:
            report.add("state", f"halt {q}", f"unknown state {q!r}")
            continue
        _check_update(A, report, f"halt {q}", u, A.states[q], HALT_TYPE[A.kind])
    if A.domains:
        _check_domains(A, report)
    return report


def _check_domains(A: Transducer, report: ValidationReport) -> None:
    if A.kind != FREE:
        report.add("domain", "states", "constrained domains are only meaningful for free-term data")
        return
    for q, d in A.domains.items():
        if q in A.states and d.arity != A.states[q]:
            report.add("domain", f"state {q}", f"domain arity {d.arity} differs from type {A.states[q]}")
            return
    if not report.ok:
        return
    if A.init is not None:
        q, u = A.init
        d = A.domains.get(q)
        if d is not None and not d.contains(apply(u, INIT_DATA[FREE])):  # type: ignore[arg-type]
            report.add("domain", "init", f"initial data of {q} lie outside its domain")
    for (q, a), (t, u) in sorted(A.delta.items()):
        target = A.domains.get(t)
        if target is None:
            continue
        src = A.domains.get(q, ConstrainedDomain.full(A.states[q]))
        if not target.includes(closure_image(u, src)):
            report.add("domain", f"transition {q} -{a}->", f"image leaves the domain of {t}")


def require_valid(A: Transducer) -> Transducer:
    report = validate(A)
    if not report.ok:
        raise SemanticError(str(report))
    return A


# -- running -------------------------------------------------------------------

def parse_word(A: Transducer, text: str | Sequence[str]) -> Word:
    """Split a command-line word: characters, or comma separated multi-character letters."""
    if not isinstance(text, str):
        letters = tuple(text)
    elif text == "":
        letters = ()
    elif "," in text:
        letters = tuple(x.strip() for x in text.split(","))
    else:
        letters = tuple(text)
    for a in letters:
        if a not in A.inputs:
            raise UsageError(f"letter {a!r} is not in the input alphabet {{{', '.join(A.inputs)}}}")
    return letters


def run_from(A: Transducer, q: str, word: Iterable[str]) -> tuple[str, Update] | None:
    """Target state and composed update of the run from ``q`` (no halt step)."""
    u = identity(A.kind, A.states[q])
    for a in word:
        step = A.delta.get((q, a))
        if step is None:
            return None
        q, v = step
        u = compose(u, v)
    return q, u


def induced_update(A: Transducer, q: str, word: Iterable[str], with_halt: bool = True) -> Update | None:
    if q not in A.states:
        raise UsageError(f"unknown state {q!r}")
    r = run_from(A, q, word)
    if r is None:
        return None
    q, u = r
    if not with_halt:
        return u
    h = A.halt.get(q)
    return None if h is None else compose(u, h)


def evaluate(A: Transducer, word: Iterable[str]) -> Data | None:
    """Output datum on ``word`` or ``None`` when undefined."""
    word = tuple(word)
    for a in word:
        if a not in A.inputs:
            raise UsageError(f"letter {a!r} is not in the input alphabet")
    if A.init is None:
        return None
    q, u = A.init
    d = apply(u, INIT_DATA[A.kind])
    for a in word:
        step = A.delta.get((q, a))
        if step is None:
            return None
        q, v = step
        d = apply(v, d)
    h = A.halt.get(q)
    return None if h is None else apply(h, d)


class UpdateVector:
    """The word-indexed family ``t -> U_q[t]`` of updates departing from ``q``.

    Entries are computed on demand and memoized; the cache is lock-protected so
    a vector may be shared between threads.
    """

    def __init__(self, A: Transducer, q: str, prefix: Update | None = None):
        self.A = A
        self.base_state = q
        self.prefix = prefix
        self._memo: dict[Word, tuple[str, Update] | None] = {}
        self._lock = threading.Lock()

    def _run(self, t: Word) -> tuple[str, Update] | None:
        with self._lock:
            if t in self._memo:
                return self._memo[t]
        if not t:
            start = identity(self.A.kind, self.A.states[self.base_state])
            r: tuple[str, Update] | None = (self.base_state, start if self.prefix is None else self.prefix)
        else:
            head = self._run(t[:-1])
            step = None if head is None else self.A.delta.get((head[0], t[-1]))
            r = None if step is None else (step[0], compose(head[1], step[1]))  # type: ignore[index]
        with self._lock:
            self._memo[t] = r
        return r

    def __getitem__(self, t: Sequence[str]) -> Update | None:
        r = self._run(tuple(t))
        if r is None:
            return None
        h = self.A.halt.get(r[0])
        return None if h is None else compose(r[1], h)

    def state_after(self, t: Sequence[str]) -> str | None:
        r = self._run(tuple(t))
        return None if r is None else r[0]

    def defined_words(self, maxlen: int) -> Iterator[Word]:
        for t in words_upto(self.A.inputs, maxlen):
            if self[t] is not None:
                yield t


def words_upto(letters: Sequence[str], maxlen: int) -> Iterator[Word]:
    for n in range(maxlen + 1):
        yield from itertools.product(letters, repeat=n)


# -- equivalence ---------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    counterexample: Word | None = None
    left: Data | None = None
    right: Data | None = None
    checked: int = 0

    def describe(self, kind: str) -> str:
        if self.equivalent:
            return f"equivalent on {self.checked} words"
        show = lambda d: "undefined" if d is None else render_data(kind, d)
        word = ",".join(self.counterexample or ()) if any(len(a) > 1 for a in self.counterexample or ()) else "".join(self.counterexample or ())
        return f"counterexample {word!r}: {show(self.left)} vs {show(self.right)}"


def equivalence_bounded(A: Transducer, B: Transducer, maxlen: int = 8, letters: Sequence[str] | None = None) -> EquivalenceResult:
    """Compare outputs on all words of length ``<= maxlen``, shortest first."""
    if A.kind != B.kind:
        raise UsageError(f"algebras differ: {A.kind} vs {B.kind}")
    if set(A.inputs) != set(B.inputs):
        raise UsageError("input alphabets differ")
    letters = tuple(sorted(A.inputs if letters is None else letters))

    def start(T: Transducer):
        if T.init is None:
            return None
        q, u = T.init
        return q, apply(u, INIT_DATA[T.kind])

    def out(T: Transducer, cfg):
        if cfg is None or cfg[0] not in T.halt:
            return None
        return apply(T.halt[cfg[0]], cfg[1])

    def step(T: Transducer, cfg, a):
        if cfg is None:
            return None
        s = T.delta.get((cfg[0], a))
        return None if s is None else (s[0], apply(s[1], cfg[1]))

    layer = [((), start(A), start(B))]
    checked = 0
    for n in range(maxlen + 1):
        nxt = []
        for w, ca, cb in layer:
            oa, ob = out(A, ca), out(B, cb)
            checked += 1
            if oa != ob:
                return EquivalenceResult(False, w, oa, ob, checked)
            if n < maxlen and (ca is not None or cb is not None):
                for a in letters:
                    nxt.append((w + (a,), step(A, ca, a), step(B, cb, a)))
        layer = nxt
    return EquivalenceResult(True, checked=checked)


# -- morphisms and strong factorization ---------------------------------------

@dataclass(frozen=True)
class Factorization:
    image: Transducer
    epi: Transformation
    inclusion: Transformation


def _then(first: tuple[str, Update] | None, h: Transformation) -> tuple[str, Update] | None:
    if first is None:
        return None
    nxt = h.get(first[0])
    return None if nxt is None else (nxt[0], compose(first[1], nxt[1]))


def morphism_failures(h: Transformation, A: Transducer, B: Transducer) -> list[str]:
    """Squares ``h ; B-step == A-step ; h`` that fail, checked modulo A's domains."""
    failures: list[str] = []

    def same(lhs, rhs, dom: ConstrainedDomain | None) -> bool:
        if lhs is None or rhs is None:
            return lhs is None and rhs is None
        return lhs[0] == rhs[0] and updates_agree(lhs[1], rhs[1], dom)

    lhs = _then(A.init, h)
    rhs = B.init
    if (lhs is None) != (rhs is None) or (
        lhs is not None and (lhs[0] != rhs[0] or apply(lhs[1], INIT_DATA[A.kind]) != apply(rhs[1], INIT_DATA[B.kind]))  # type: ignore[index]
    ):
        failures.append("init")
    for q in sorted(A.states):
        dom = A.domain(q)
        hq = h.get(q)
        for a in A.inputs:
            left = _then(A.delta.get((q, a)), h)
            right = None
            if hq is not None:
                s = B.delta.get((hq[0], a))
                right = None if s is None else (s[0], compose(hq[1], s[1]))
            if not same(left, right, dom):
                failures.append(f"{q} -{a}->")
        left_h = A.halt.get(q)
        right_h = None
        if hq is not None and hq[0] in B.halt:
            right_h = compose(hq[1], B.halt[hq[0]])
        if (left_h is None) != (right_h is None) or (
            left_h is not None and not updates_agree(left_h, right_h, dom)  # type: ignore[arg-type]
        ):
            failures.append(f"halt {q}")
    return failures


def strong_factorize(h: Transformation, B: Transducer, *, source: Transducer) -> Factorization:
    """Split a morphism ``source -> B`` into an epi onto its image and an inclusion."""
    failures = morphism_failures(h, source, B)
    if failures:
        raise SemanticError("not a morphism; failing squares: " + ", ".join(failures))
    kept = set(h.state_map.values())
    domains: dict[str, ConstrainedDomain] = {}
    if B.kind == FREE:
        for q, (t, u) in ((q, h.get(q)) for q in sorted(h.state_map)):  # type: ignore[misc]
            src = source.domain(q) or ConstrainedDomain.full(source.states[q])
            img = closure_image(u, src)
            domains[t] = img if t not in domains else closure_union(domains[t], img)
    C = B.copy(
        states={q: tau for q, tau in B.states.items() if q in kept},
        delta={k: v for k, v in B.delta.items() if k[0] in kept and v[0] in kept},
        halt={q: u for q, u in B.halt.items() if q in kept},
        domains=domains,
    )
    inclusion = Transformation({q: q for q in C.states}, {q: identity(B.kind, C.states[q]) for q in C.states})
    return Factorization(C, h, inclusion)


def epi_failures(h: Transformation, source: Transducer, C: Transducer) -> list[str]:
    """States of ``C`` not covered by ``h``, or whose domain exceeds the closure of the image."""
    bad = [q for q in sorted(C.states) if q not in set(h.state_map.values())]
    if C.kind != FREE:
        return bad
    for q in sorted(C.states):
        if q in bad:
            continue
        imgs = [
            closure_image(h.update_map[p], source.domain(p) or ConstrainedDomain.full(source.states[p]))
            for p in h.state_map
            if h.state_map[p] == q
        ]
        acc = imgs[0]
        for d in imgs[1:]:
            acc = closure_union(acc, d)
        dom = C.domain(q) or ConstrainedDomain.full(C.states[q])
        if not acc.includes(dom):
            bad.append(q)
    return bad


def ground_output(kind: str, d: Data) -> bool:
    if kind == SEQUENTIAL:
        return True
    if kind == LEAF:
        return is_ground(d)  # type: ignore[arg-type]
    return all(is_ground(t) for t in d)  # type: ignore[union-attr]
