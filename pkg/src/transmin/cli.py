"""Command-line front end.

Exit codes: 0 success, 1 parse or usage error, 2 semantic error (typing,
copyful or erasing updates), 3 undefined output or inequivalent transducers.
"""

from __future__ import annotations

import argparse
import sys

from .algebras import AlgebraError, render_data, render_update
from .fileformat import FormatError, load_transducer, parse_equations, render_transducer
from .generalization import GcdError
from .minimizer import gcd_fixpoint, isomorphism, minimize, right_invariance_check
from .transducer import SemanticError, UsageError, equivalence_bounded, evaluate, parse_word
from .unification import mgu

OK, USAGE, SEMANTIC, NEGATIVE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load(path: str):
    try:
        return load_transducer(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    except FormatError as exc:
        exc.args = (f"{path}: {exc}",)
        raise


def cmd_validate(args) -> int:
    A = _load(args.file)
    print(f"valid {A.kind} transducer with {len(A.states)} states")
    return OK


def cmd_run(args) -> int:
    A = _load(args.file)
    d = evaluate(A, parse_word(A, args.word))
    if d is None:
        print("undefined")
        return NEGATIVE
    print(render_data(A.kind, d))
    return OK


def cmd_minimize(args) -> int:
    text = render_transducer(minimize(_load(args.file)))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return OK


def cmd_equiv(args) -> int:
    A, B = _load(args.file1), _load(args.file2)
    if A.kind != B.kind:
        raise UsageError(f"algebras differ: {A.kind} vs {B.kind}")
    if args.exact:
        if isomorphism(minimize(A), minimize(B)) is not None:
            print("equivalent (isomorphic minimal transducers)")
            return OK
        res = equivalence_bounded(A, B, args.maxlen)
        detail = res.describe(A.kind) if not res.equivalent else "minimal transducers are not isomorphic"
        print(f"not equivalent: {detail}", file=sys.stderr)
        return NEGATIVE
    res = equivalence_bounded(A, B, args.maxlen)
    if res.equivalent:
        print(f"equivalent up to length {args.maxlen} ({res.checked} words)")
        return OK
    print(f"not equivalent: {res.describe(A.kind)}", file=sys.stderr)
    return NEGATIVE


def cmd_gcd(args) -> int:
    A = _load(args.file)
    if args.state not in A.states:
        raise UsageError(f"unknown state {args.state!r}")
    D = gcd_fixpoint(A, max_sweeps=args.depth)
    g = D.f[args.state]
    print("undefined" if g is None else render_update(g))
    return OK


def cmd_mgu(args) -> int:
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"{args.file}: {exc.strerror}") from None
    alphabet, system = parse_equations(text)
    print(mgu(system, alphabet))
    return OK


def cmd_check_invariance(args) -> int:
    report = right_invariance_check(_load(args.file), args.maxlen)
    for line in report.failures:
        print(line, file=sys.stderr)
    print(f"{'ok' if report.ok else 'FAILED'}: {report.checked} identities checked")
    return OK if report.ok else NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="transmin", description="Streaming transducer minimization")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="load and type-check a transducer")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("run", help="print the output on a word")
    s.add_argument("file")
    s.add_argument("word", help="letters, or comma separated multi-character letters")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("minimize", help="print the minimal equivalent transducer")
    s.add_argument("file")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_minimize)

    s = sub.add_parser("equiv", help="compare two transducers")
    s.add_argument("file1")
    s.add_argument("file2")
    s.add_argument("--maxlen", type=int, default=8)
    s.add_argument("--exact", action="store_true", help="compare minimal transducers up to isomorphism")
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("gcd", help="print the fixpoint divisor of a state")
    s.add_argument("file")
    s.add_argument("--state", required=True)
    s.add_argument("--depth", type=int, default=None, help="maximum number of fixpoint sweeps")
    s.set_defaults(func=cmd_gcd)

    s = sub.add_parser("mgu", help="solve an equation system file")
    s.add_argument("file")
    s.set_defaults(func=cmd_mgu)

    s = sub.add_parser("check-invariance", help="check the right-invariance identity on short words")
    s.add_argument("file")
    s.add_argument("--maxlen", type=int, default=4)
    s.set_defaults(func=cmd_check_invariance)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return SEMANTIC if exc.semantic else USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (SemanticError, AlgebraError, GcdError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return SEMANTIC


if __name__ == "__main__":
    sys.exit(main())
