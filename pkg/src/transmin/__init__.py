"""Deterministic streaming transducers and their algebraic minimization."""

from .algebras import Update, apply, compose, free, identity, leaf, residual_via_epi, sequential
from .fileformat import load_transducer, parse_transducer, render_transducer
from .minimizer import isomorphism, minimize
from .transducer import Transducer, equivalence_bounded, evaluate, validate

__version__ = "0.1.0"

__all__ = [
    "Transducer",
    "Update",
    "apply",
    "compose",
    "equivalence_bounded",
    "evaluate",
    "free",
    "identity",
    "isomorphism",
    "leaf",
    "load_transducer",
    "minimize",
    "parse_transducer",
    "render_transducer",
    "residual_via_epi",
    "sequential",
    "validate",
]
