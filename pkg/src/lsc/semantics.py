"""Reference semantics: the state a circuit or program prepares.

``prepared_state`` works on the stabilizer tableau and handles any size;
``simulate_statevector`` is the dense oracle and also follows measurement
branches.
"""

from __future__ import annotations

import numpy as np

from . import stabilizer as stab
from . import statevector as sv
from .canonicalize import MultiTargetProgram
from .circuit import Circuit, InitState


def _as_circuit(c) -> Circuit:
    return c.to_circuit() if isinstance(c, MultiTargetProgram) else c


def prepared_state(c: Circuit | MultiTargetProgram) -> stab.StabilizerMatrix:
    """Stabilizer state after the init and CNOT blocks (before measurement)."""
    c = _as_circuit(c)
    letters = []
    for s in c.inits:
        if s is InitState.A:
            raise ValueError("|A> is not a stabilizer state")
        letters.append(s.value)
    s = stab.StabilizerMatrix.product_state("".join(letters))
    for g in c.flat_gates():
        s = stab.apply_cnot(s, g.control, g.targets[0])
    return s


def circuit_statevector(
    c: Circuit | MultiTargetProgram,
    branch: dict[int, int] | None = None,
    inputs: dict[int, np.ndarray] | None = None,
    measure: bool = True,
) -> np.ndarray:
    """Dense state over the unmeasured qubits, in ascending qubit order.

    ``branch`` maps measured qubit -> outcome bit (default 0).  ``inputs``
    overrides the init of selected qubits with arbitrary kets.
    """
    c = _as_circuit(c)
    inputs = inputs or {}
    branch = branch or {}
    kets = [inputs.get(q, sv.INIT_KETS[s.value]) for q, s in enumerate(c.inits)]
    psi = sv.product(kets)
    for g in c.flat_gates():
        psi = sv.apply_cnot(psi, g.control, g.targets[0])
    if not measure:
        return psi
    live = list(range(c.num_qubits))
    for q, m in c.measurements.items():
        psi, _ = sv.measure(psi, live.index(q), m.basis.value, branch.get(q, 0))
        live.remove(q)
    return psi


def simulate_statevector(obj, branch=None, **kwargs) -> np.ndarray:
    """Dense oracle for a Circuit, MultiTargetProgram or SurgerySchedule."""
    from .schedule import SurgerySchedule, schedule_statevector

    if isinstance(obj, SurgerySchedule):
        return schedule_statevector(obj, branch, **kwargs)
    return circuit_statevector(obj, branch, **kwargs)
