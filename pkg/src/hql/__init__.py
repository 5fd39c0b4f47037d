"""Quasi-isometry invariants of purely real Heintze groups and numerical checks
of the Orlicz machinery behind them."""

from .errors import (
    ConditioningError,
    DomainError,
    HQLError,
    InputError,
    PreconditionError,
    SpecParseError,
    SpecValidationError,
)
from .lie import HeintzeSpec, make_spec, subgroup_chain, validate_spec
from .specio import dump_spec, load_spec, parse_spec
from .young import PKExponent, make_phi_pk

__version__ = "0.1.0"

__all__ = [
    "ConditioningError",
    "DomainError",
    "HQLError",
    "InputError",
    "PreconditionError",
    "SpecParseError",
    "SpecValidationError",
    "HeintzeSpec",
    "make_spec",
    "subgroup_chain",
    "validate_spec",
    "dump_spec",
    "load_spec",
    "parse_spec",
    "PKExponent",
    "make_phi_pk",
]
