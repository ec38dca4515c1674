"""End-to-end compilation and self-checking of a circuit.

:func:`compile_circuit` runs the whole chain: an ICM circuit is first
inverted, the CNOT block is canonicalized into multi-target CNOTs, and the
program is lowered onto a placement.  :func:`verify` replays the result on
the stabilizer tableau and compares it with the state the circuit prepares.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import stabilizer as stab
from .canonicalize import MultiTargetProgram, canonicalize
from .circuit import ROTATED_INITS, Circuit, Form, validate
from .icm import CorrectionRule, invert_icm
from .schedule import (
    PlacementError,
    SurgerySchedule,
    emit_schedule,
    interpret_schedule,
    load_placement,
    validate_schedule,
)
from .semantics import prepared_state


class CircuitInvalid(ValueError):
    """The circuit breaks a structural rule of its form."""


class ScheduleInvalid(ValueError):
    """The emitted or loaded schedule breaks a geometric or causal rule."""


@dataclass(frozen=True)
class Compiled:
    circuit: Circuit
    program: MultiTargetProgram
    schedule: SurgerySchedule
    rules: tuple[CorrectionRule, ...] = ()


def to_inverted(c: Circuit) -> tuple[Circuit, list[CorrectionRule]]:
    """The inverted-ICM form of ``c`` and the rules the inversion needs."""
    if any(s in ROTATED_INITS for s in c.inits):
        return invert_icm(c)
    problems = validate(c, Form.INVERTED_ICM)
    if problems:
        raise CircuitInvalid("; ".join(problems))
    return c, []


def compile_circuit(c: Circuit, placement_text: str | None = None) -> Compiled:
    """Invert if needed, canonicalize, and lower onto a placement (naive if None)."""
    inverted, rules = to_inverted(c)
    program = canonicalize(inverted)
    placement = load_placement(placement_text, program) if placement_text is not None else None
    if placement is not None and placement.base != program.base:
        raise PlacementError(f"placement uses base {placement.base}, circuit uses base {program.base}")
    s = emit_schedule(program, placement, corrections=rules)
    problems = validate_schedule(s)
    if problems:
        raise ScheduleInvalid("; ".join(problems))
    return Compiled(inverted, program, s, tuple(rules))


def entangling_stop(s: SurgerySchedule) -> str | None:
    """Name of the first phase that injects or measures, where the Clifford part ends."""
    for name, step in zip(s.phases, s.steps):
        if any(op.kind in ("inject", "measure") for op in step):
            return name
    return None


def _merge_records(s: SurgerySchedule, stop: str | None) -> list[str]:
    out = []
    for name, step in zip(s.phases, s.steps):
        if name == stop:
            break
        for op in step:
            if op.kind in ("rough_merge", "smooth_merge"):
                out.extend(op.records)
    return out


@dataclass
class Verification:
    passed: bool
    expected: stab.StabilizerMatrix
    actual: stab.StabilizerMatrix | None
    branches_checked: int = 0
    failures: list[str] = field(default_factory=list)


def verify(circuit: Circuit, s: SurgerySchedule, seed: int = 0, branches: int = 8) -> Verification:
    """Compare the schedule's pre-injection state with the circuit's.

    Besides the all-+1 branch, ``branches`` random assignments of merge
    outcomes (drawn from ``seed``) are replayed; the recorded corrections
    must bring every one of them back to the same state.
    """
    expected = stab.canonical_form(prepared_state(circuit))
    stop = entangling_stop(s)
    records = _merge_records(s, stop)
    rng = random.Random(seed)
    assignments = [{}] + [{r: rng.randrange(2) for r in records} for _ in range(branches if records else 0)]
    failures, actual = [], None
    for k, branch in enumerate(assignments):
        try:
            got = interpret_schedule(s, branch=branch, stop_before=stop)
        except (stab.ZeroProbabilityBranch, ValueError, KeyError) as exc:
            failures.append(f"branch {k}: replay failed: {exc}")
            continue
        got = stab.canonical_form(got)
        if k == 0:
            actual = got
        if got.n != expected.n or got != expected:
            failures.append(f"branch {k}: state differs")
    return Verification(not failures, expected, actual, len(assignments), failures)
