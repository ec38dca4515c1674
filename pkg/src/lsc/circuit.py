"""Circuit intermediate representation for ICM and inverted-ICM circuits.

A circuit is a fixed set of qubits, each with one initialization, followed
by (multi-target) CNOTs and at most one measurement per qubit.  The text
format is line based::

    # comment
    base 1              # optional: ids in this file are 1-based
    qubits 3
    init 0 +
    init 1 0
    cnot 0 -> 1 2
    measure 0 X if m1,m2
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class InitState(str, enum.Enum):
    ZERO = "0"
    PLUS = "+"
    Y = "Y"
    A = "A"


class Basis(str, enum.Enum):
    X = "X"
    Z = "Z"
    Y = "Y"
    A = "A"


class Form(str, enum.Enum):
    ICM = "icm"
    INVERTED_ICM = "inverted_icm"


ROTATED_INITS = frozenset({InitState.Y, InitState.A})
ROTATED_BASES = frozenset({Basis.Y, Basis.A})


class CircuitSyntaxError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def measurement_id(qubit: int) -> str:
    return f"m{qubit}"


@dataclass(frozen=True)
class CNOT:
    control: int
    targets: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise ValueError("CNOT needs at least one target")
        if self.control in self.targets:
            raise ValueError(f"control {self.control} is also a target")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated target in {self.targets}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, *self.targets)

    def split(self) -> list[CNOT]:
        """Single-target CNOTs with the same effect (they commute)."""
        return [CNOT(self.control, (t,)) for t in self.targets]

    def __str__(self) -> str:
        return f"CNOT {self.control}->{','.join(map(str, self.targets))}"


@dataclass(frozen=True)
class Measurement:
    basis: Basis
    conditioned_on: tuple[str, ...] = ()


@dataclass(frozen=True)
class Circuit:
    """An ICM-style circuit.

    ``init_positions[q]`` and ``measure_positions[q]`` record how many gates
    preceded the statement in the source, which is what the ordering checks
    of :func:`validate` look at.  Constructors default them to the
    init/gates/measure block layout.
    """

    num_qubits: int
    inits: tuple[InitState, ...]
    gates: tuple[CNOT, ...] = ()
    measurements: dict[int, Measurement] = field(default_factory=dict)
    init_positions: tuple[int, ...] | None = None
    measure_positions: dict[int, int] | None = None
    base: int = 0

    def __post_init__(self):
        n = self.num_qubits
        object.__setattr__(self, "inits", tuple(InitState(s) for s in self.inits))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "measurements", dict(sorted(self.measurements.items())))
        if len(self.inits) != n:
            raise ValueError(f"expected {n} inits, got {len(self.inits)}")
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < n:
                    raise ValueError(f"qubit {q} out of range in {g}")
        for q in self.measurements:
            if not 0 <= q < n:
                raise ValueError(f"measured qubit {q} out of range")
        if self.init_positions is None:
            object.__setattr__(self, "init_positions", (0,) * n)
        if self.measure_positions is None:
            end = len(self.gates)
            object.__setattr__(self, "measure_positions", {q: end for q in self.measurements})
        else:
            object.__setattr__(self, "measure_positions", dict(sorted(self.measure_positions.items())))

    @property
    def outputs(self) -> list[int]:
        return [q for q in range(self.num_qubits) if q not in self.measurements]

    def flat_gates(self) -> list[CNOT]:
        return [s for g in self.gates for s in g.split()]

    def replace(self, **changes) -> Circuit:
        fields = dict(
            num_qubits=self.num_qubits,
            inits=self.inits,
            gates=self.gates,
            measurements=self.measurements,
            base=self.base,
        )
        fields.update(changes)
        if "gates" in changes or "measurements" in changes:
            # positions are only meaningful for the original statement order
            fields.setdefault("init_positions", None)
            fields.setdefault("measure_positions", None)
        else:
            fields.setdefault("init_positions", self.init_positions)
            fields.setdefault("measure_positions", self.measure_positions)
        return Circuit(**fields)


_INIT_TOKENS = {s.value: s for s in InitState}
_BASIS_TOKENS = {b.value: b for b in Basis}


def _parse_id(tok: str, base: int, n: int | None, lineno: int) -> int:
    try:
        q = int(tok) - base
    except ValueError:
        raise CircuitSyntaxError(lineno, f"expected qubit id, got {tok!r}") from None
    if q < 0 or (n is not None and q >= n):
        raise CircuitSyntaxError(lineno, f"qubit id {tok} out of range")
    return q


def _parse_condition(tok: str, base: int, lineno: int) -> tuple[str, ...]:
    ids = []
    for part in tok.split(","):
        part = part.strip()
        if not part:
            raise CircuitSyntaxError(lineno, "empty condition entry")
        body = part[1:] if part.startswith("m") else part
        if not body.isdigit():
            raise CircuitSyntaxError(lineno, f"bad measurement reference {part!r}")
        ids.append(measurement_id(int(body) - base))
    return tuple(ids)


def parse_circuit(text: str) -> Circuit:
    """Parse the line-based circuit format."""
    base = 0
    n = None
    inits: dict[int, InitState] = {}
    init_pos: dict[int, int] = {}
    gates: list[CNOT] = []
    meas: dict[int, Measurement] = {}
    meas_pos: dict[int, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0].lower()
        if kw == "base":
            if n is not None or len(tok) != 2 or tok[1] not in ("0", "1"):
                raise CircuitSyntaxError(lineno, "'base 0|1' must precede 'qubits'")
            base = int(tok[1])
        elif kw == "qubits":
            if n is not None:
                raise CircuitSyntaxError(lineno, "duplicate 'qubits' header")
            if len(tok) != 2 or not tok[1].isdigit():
                raise CircuitSyntaxError(lineno, "expected 'qubits <n>'")
            n = int(tok[1])
        elif n is None:
            raise CircuitSyntaxError(lineno, "'qubits <n>' must come first")
        elif kw == "init":
            if len(tok) != 3 or tok[2] not in _INIT_TOKENS:
                raise CircuitSyntaxError(lineno, "expected 'init <q> <0|+|Y|A>'")
            q = _parse_id(tok[1], base, n, lineno)
            if q in inits:
                raise CircuitSyntaxError(lineno, f"duplicate init for qubit {tok[1]}")
            inits[q] = _INIT_TOKENS[tok[2]]
            init_pos[q] = len(gates)
        elif kw == "cnot":
            if len(tok) < 4 or tok[2] != "->":
                raise CircuitSyntaxError(lineno, "expected 'cnot <c> -> <t1> ...'")
            c = _parse_id(tok[1], base, n, lineno)
            ts = tuple(_parse_id(t, base, n, lineno) for t in tok[3:])
            try:
                gates.append(CNOT(c, ts))
            except ValueError as exc:
                raise CircuitSyntaxError(lineno, str(exc)) from None
        elif kw == "measure":
            if len(tok) not in (3, 5) or tok[2] not in _BASIS_TOKENS:
                raise CircuitSyntaxError(lineno, "expected 'measure <q> <X|Z|Y|A> [if <m,...>]'")
            q = _parse_id(tok[1], base, n, lineno)
            if q in meas:
                raise CircuitSyntaxError(lineno, f"qubit {tok[1]} measured twice")
            cond: tuple[str, ...] = ()
            if len(tok) == 5:
                if tok[3] != "if":
                    raise CircuitSyntaxError(lineno, "expected 'if' before conditions")
                cond = _parse_condition(tok[4], base, lineno)
            meas[q] = Measurement(_BASIS_TOKENS[tok[2]], cond)
            meas_pos[q] = len(gates)
        else:
            raise CircuitSyntaxError(lineno, f"unknown statement {tok[0]!r}")

    if n is None:
        raise CircuitSyntaxError(0, "missing 'qubits <n>' header")
    missing = [q + base for q in range(n) if q not in inits]
    if missing:
        raise CircuitSyntaxError(0, f"qubits without init: {missing}")
    return Circuit(
        num_qubits=n,
        inits=tuple(inits[q] for q in range(n)),
        gates=tuple(gates),
        measurements=meas,
        init_positions=tuple(init_pos[q] for q in range(n)),
        measure_positions=meas_pos,
        base=base,
    )


def serialize_circuit(c: Circuit) -> str:
    """Canonical text: statements grouped by gate position, ids ascending."""
    b = c.base
    out = []
    if b:
        out.append(f"base {b}")
    out.append(f"qubits {c.num_qubits}")

    def flush(pos: int):
        for q in range(c.num_qubits):
            if c.init_positions[q] == pos:
                out.append(f"init {q + b} {c.inits[q].value}")
        for q, m in c.measurements.items():
            if c.measure_positions[q] == pos:
                line = f"measure {q + b} {m.basis.value}"
                if m.conditioned_on:
                    refs = ",".join(f"m{int(r[1:]) + b}" for r in m.conditioned_on)
                    line += f" if {refs}"
                out.append(line)

    for i, g in enumerate(c.gates):
        flush(i)
        out.append(f"cnot {g.control + b} -> " + " ".join(str(t + b) for t in g.targets))
    flush(len(c.gates))
    return "\n".join(out) + "\n"


def validate(c: Circuit, form: Form | str) -> list[str]:
    """Return every violated well-formedness constraint; empty means valid."""
    form = Form(form)
    problems: list[str] = []
    n_gates = len(c.gates)
    for g in c.gates:
        if not isinstance(g, CNOT):
            problems.append(f"non-CNOT gate {g!r}")
    for q, s in enumerate(c.inits):
        if form is Form.INVERTED_ICM and s in ROTATED_INITS:
            problems.append(f"rotated initialization forbidden: qubit {q + c.base} init {s.value}")
        if c.init_positions[q] != 0:
            problems.append(f"ordering violation: init of qubit {q + c.base} after a CNOT")
    for q, m in c.measurements.items():
        if form is Form.ICM and m.basis in ROTATED_BASES:
            problems.append(f"rotated measurement forbidden in ICM: qubit {q + c.base} basis {m.basis.value}")
        pos = c.measure_positions[q]
        later = [g for g in c.gates[pos:] if q in g.qubits]
        if later:
            problems.append(
                f"ordering violation: qubit {q + c.base} used by {later[0]} after its measurement"
            )
        elif pos != n_gates:
            problems.append(f"ordering violation: measurement of qubit {q + c.base} inside the CNOT block")
        known = {measurement_id(p) for p in c.measurements}
        for ref in m.conditioned_on:
            if ref not in known:
                problems.append(f"measurement of qubit {q + c.base} conditioned on unknown {ref}")
    return problems
