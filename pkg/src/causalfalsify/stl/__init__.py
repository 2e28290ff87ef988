"""Signal temporal logic: formulas, parser, and sampled-trace semantics."""

from .formula import (
    HORIZON,
    Always,
    And,
    Atom,
    Eventually,
    Formula,
    Interval,
    Not,
    Or,
    Trace,
    Until,
    horizon,
    variables,
)
from .parser import ParseError, format_formula, parse_formula
from .semantics import TraceTooShort, boolean_sat, robustness, robustness_signal

__all__ = [
    "HORIZON",
    "Always",
    "And",
    "Atom",
    "Eventually",
    "Formula",
    "Interval",
    "Not",
    "Or",
    "ParseError",
    "Trace",
    "TraceTooShort",
    "Until",
    "boolean_sat",
    "format_formula",
    "horizon",
    "parse_formula",
    "robustness",
    "robustness_signal",
    "variables",
]
