"""Compile inverted-ICM circuits into lattice-surgery schedules and cost them."""

from __future__ import annotations

from importlib import resources as _resources

from .canonicalize import MultiTargetProgram, canonicalize, push_and_eliminate
from .circuit import CNOT, Basis, Circuit, Form, InitState, Measurement, parse_circuit, serialize_circuit, validate
from .icm import CorrectionRule, check_equivalence_small, invert_icm
from .pipeline import compile_circuit, verify
from .resources import BASELINES, ResourceEstimate, compare_table, estimate
from .schedule import (
    SurgerySchedule,
    emit_schedule,
    expand_general_cnot,
    interpret_schedule,
    load_placement,
    naive_layout,
    validate_schedule,
)
from .stabilizer import StabilizerMatrix, canonical_form, same_state

__version__ = "0.1.0"


def data_text(name: str) -> str:
    """Contents of a bundled circuit or placement file, e.g. ``steane.icm``."""
    return (_resources.files(__package__) / "data" / name).read_text()


__all__ = [
    "BASELINES",
    "CNOT",
    "Basis",
    "Circuit",
    "CorrectionRule",
    "Form",
    "InitState",
    "Measurement",
    "MultiTargetProgram",
    "ResourceEstimate",
    "StabilizerMatrix",
    "SurgerySchedule",
    "canonical_form",
    "canonicalize",
    "check_equivalence_small",
    "compare_table",
    "compile_circuit",
    "data_text",
    "emit_schedule",
    "estimate",
    "expand_general_cnot",
    "interpret_schedule",
    "invert_icm",
    "load_placement",
    "naive_layout",
    "parse_circuit",
    "push_and_eliminate",
    "same_state",
    "serialize_circuit",
    "validate",
    "validate_schedule",
    "verify",
]
