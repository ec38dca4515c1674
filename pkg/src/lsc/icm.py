"""ICM to inverted-ICM conversion and a small dense equivalence checker.

A qubit prepared in a rotated state |theta> (Y or A) takes part in exactly
one CNOT of a teleportation fragment.  Two fragment shapes are recognised:

* ``c -> r`` with ``c`` measured in X: reversed to ``r -> c`` with ``r``
  now prepared in |+> and ``c`` measured in the theta basis.
* ``r -> c`` with ``c`` measured in Z: reversed to ``c -> r`` with ``r``
  prepared in |0> and ``c`` measured in the theta basis.

In both cases outcome 1 of the new measurement leaves the output off by a
Pauli Z, which is tracked in software.  An A-basis measurement is realised
with a phase merge whose -1 outcome leaves ``X T^dagger`` applied instead
of ``T``; that case needs a physical P gate on the measured qubit before
its readout and gets its own rule, triggered by the merge outcome.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .circuit import (
    CNOT,
    Basis,
    Circuit,
    Form,
    InitState,
    Measurement,
    ROTATED_INITS,
    measurement_id,
    validate,
)

ACTIONS = ("track_x", "track_z", "track_xz", "apply_p")


class UnsupportedFragment(ValueError):
    """A rotated init is used in a way no known equivalence covers."""


@dataclass(frozen=True)
class CorrectionRule:
    """Apply ``action`` to ``qubit`` when the XOR of the trigger outcomes is 1.

    Triggers are measurement ids such as ``m3``.  The id ``m3.merge`` names
    the phase-merge outcome used to realise an A-basis measurement on 3.
    """

    trigger: tuple[str, ...]
    action: str
    qubit: int

    def __post_init__(self):
        object.__setattr__(self, "trigger", tuple(self.trigger))
        if self.action not in ACTIONS:
            raise ValueError(f"unknown correction action {self.action!r}")
        if not self.trigger:
            raise ValueError("correction rule needs a trigger")

    def to_json(self, base: int = 0) -> dict:
        return {"if": [_shift_id(t, base) for t in self.trigger], "do": self.action, "qubit": self.qubit + base}


def _shift_id(ref: str, base: int) -> str:
    return re.sub(r"\d+", lambda m: str(int(m.group()) + base), ref)


def merge_id(qubit: int) -> str:
    return measurement_id(qubit) + ".merge"


def _single_gate(gates, q):
    """Index of the only gate touching ``q`` and the flat pair, or None."""
    hits = [(i, g) for i, g in enumerate(gates) if q in g.qubits]
    if len(hits) != 1:
        return None
    i, g = hits[0]
    if g.control == q:
        if len(g.targets) != 1:
            return None
        return i, (q, g.targets[0])
    return i, (g.control, q)


def _last_use(gates, q) -> int:
    return max((i for i, g in enumerate(gates) if q in g.qubits), default=-1)


def invert_icm(c: Circuit) -> tuple[Circuit, list[CorrectionRule]]:
    """Replace every rotated init by a rotated measurement.

    Returns the inverted circuit and the correction rules it needs.
    Raises :class:`UnsupportedFragment` for rotated inits outside the two
    teleportation shapes described in the module docstring.
    """
    problems = validate(c, Form.ICM)
    if problems:
        raise ValueError("not a valid ICM circuit: " + "; ".join(problems))
    inits = list(c.inits)
    gates = list(c.gates)
    meas = dict(c.measurements)
    rules: list[CorrectionRule] = []

    for r in range(c.num_qubits):
        theta = inits[r]
        if theta not in ROTATED_INITS:
            continue
        found = _single_gate(gates, r)
        if found is None:
            raise UnsupportedFragment(f"rotated qubit {r} must take part in exactly one single-target CNOT")
        i, (ctrl, tgt) = found
        partner = tgt if ctrl == r else ctrl
        if inits[partner] in ROTATED_INITS:
            raise UnsupportedFragment(f"rotated qubit {r} is paired with rotated qubit {partner}")
        m = meas.get(partner)
        if m is None or _last_use(gates, partner) != i:
            raise UnsupportedFragment(f"qubit {partner} must be measured right after its CNOT with {r}")
        if ctrl == partner and m.basis is Basis.X:
            new_init = InitState.PLUS
        elif ctrl == r and m.basis is Basis.Z:
            new_init = InitState.ZERO
        else:
            raise UnsupportedFragment(
                f"qubit {partner} is measured in {m.basis.value}, which does not match its CNOT with {r}"
            )

        g = gates[i]
        rest = [t for t in g.targets if t != r] if ctrl == partner else []
        replacement = [CNOT(g.control, tuple(rest))] if rest else []
        replacement.append(CNOT(tgt, (ctrl,)))
        gates[i : i + 1] = replacement

        inits[r] = new_init
        meas[partner] = Measurement(Basis(theta.value), m.conditioned_on)
        rules.append(CorrectionRule((measurement_id(partner),), "track_z", r))
        if theta is InitState.A:
            rules.append(CorrectionRule((merge_id(partner),), "apply_p", partner))

    out = Circuit(num_qubits=c.num_qubits, inits=tuple(inits), gates=tuple(gates), measurements=meas, base=c.base)
    return out, rules


def icm_corrections(c: Circuit) -> list[CorrectionRule]:
    """Corrections the ICM circuit itself needs on its rotated fragments.

    For ``r -> c`` with ``c`` measured in Z, outcome 1 leaves
    ``X R(-theta)`` on the output; undoing it takes X then ``R(2 theta)``,
    which is Z for |Y> and P for |A>.  The ``c -> r`` shape needs nothing
    beyond what its inverted form tracks.
    """
    rules = []
    for r, theta in enumerate(c.inits):
        if theta not in ROTATED_INITS:
            continue
        found = _single_gate(list(c.gates), r)
        if found is None or found[1][0] != r:
            continue
        trig = (measurement_id(found[1][1]),)
        if theta is InitState.Y:
            rules.append(CorrectionRule(trig, "track_xz", r))
        else:
            rules.append(CorrectionRule(trig, "track_x", r))
            rules.append(CorrectionRule(trig, "apply_p", r))
    return rules


# ---------------------------------------------------------------------------
# Dense equivalence check


_PAULI = {"track_x": [sv.X], "track_z": [sv.Z], "track_xz": [sv.X, sv.Z], "apply_p": [sv.P]}


def _branch_map(c: Circuit, inputs, branch, rules, max_qubits) -> np.ndarray:
    """Unnormalized output amplitudes for every basis input, one column each."""
    if c.num_qubits > max_qubits:
        raise sv.OracleSizeError(f"{c.num_qubits} qubits exceeds the cap of {max_qubits}")
    order = list(c.measurements)
    ids = {measurement_id(q): branch[q] for q in order}
    cols = []
    for bits in itertools.product((0, 1), repeat=len(inputs)):
        override = dict(zip(inputs, bits))
        kets = [
            (sv.KET0, sv.KET1)[override[q]] if q in override else sv.INIT_KETS[s.value]
            for q, s in enumerate(c.inits)
        ]
        psi = sv.product(kets)
        for g in c.flat_gates():
            psi = sv.apply_cnot(psi, g.control, g.targets[0])
        live = list(range(c.num_qubits))
        done: set[str] = set()
        fired: set[int] = set()
        for q in order:
            basis = c.measurements[q].basis.value
            ax = live.index(q)
            if basis in sv.BASIS_ANGLES:
                psi = sv.apply_1q(psi, sv.phase_gate(sv.BASIS_ANGLES[basis]), ax)
            bra = (sv.KET0, sv.KET1)[branch[q]] if basis == "Z" else (sv.PLUS, sv.MINUS)[branch[q]]
            psi = sv.project_out(psi, ax, bra)
            live.remove(q)
            done.add(measurement_id(q))
            for k, rule in enumerate(rules):
                if k in fired or not set(rule.trigger) <= done or rule.qubit not in live:
                    continue
                fired.add(k)
                if sum(ids[t] for t in rule.trigger) % 2:
                    for u in _PAULI[rule.action]:
                        psi = sv.apply_1q(psi, u, live.index(rule.qubit))
        cols.append(sv.to_vector(psi))
    return np.stack(cols, axis=1)


def _proportional(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < tol or nb < tol:
        return na < tol and nb < tol
    a, b = a / na, b / nb
    lam = np.vdot(b.reshape(-1), a.reshape(-1))
    return abs(abs(lam) - 1) < tol and np.linalg.norm(a - lam * b) < 1e-7


def check_equivalence_small(
    a: Circuit,
    b: Circuit,
    rules: list[CorrectionRule] | tuple = (),
    inputs: list[int] | tuple = (),
    max_qubits: int = 12,
    rules_a: list[CorrectionRule] | tuple = (),
) -> bool:
    """Do ``a`` and ``b`` agree on every branch once their corrections are applied?

    ``rules`` correct ``b`` and ``rules_a`` correct ``a``.

    ``inputs`` are qubits whose init is replaced by each computational basis
    state in turn; the comparison is of the whole linear map per measurement
    branch, so relative phases between inputs count and only one global
    phase per branch is free.  Rules whose triggers are not measurements of
    ``b`` (such as phase-merge outcomes) model an ideal rotated measurement
    and are ignored.
    """
    if max_qubits > 12:
        raise sv.OracleSizeError("the equivalence oracle is limited to 12 qubits")
    if set(a.measurements) != set(b.measurements) or a.num_qubits != b.num_qubits:
        return False
    inputs = list(inputs)
    measured = list(a.measurements)
    known = {measurement_id(q) for q in measured}
    live_rules = [r for r in rules if set(r.trigger) <= known]
    live_rules_a = [r for r in rules_a if set(r.trigger) <= known]
    for bits in itertools.product((0, 1), repeat=len(measured)):
        branch = dict(zip(measured, bits))
        ma = _branch_map(a, inputs, branch, live_rules_a, max_qubits)
        mb = _branch_map(b, inputs, branch, live_rules, max_qubits)
        if not _proportional(ma, mb):
            return False
    return True
