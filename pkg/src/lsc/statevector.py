"""Dense state-vector oracle for small systems.

States are numpy tensors of shape ``(2,) * n``; axis ``i`` is logical qubit
``i``.  Merges apply the projection formulas literally::

    rough:  |psi> (M)_r |phi> = alpha |phi> + (-1)^M beta  X|phi>
    smooth: |psi> (M)_s |phi> = a     |phi> + (-1)^M b     Z|phi>

implemented as ``<0|_2 (I + (-1)^M X1 X2)`` and ``<+|_2 (I + (-1)^M Z1 Z2)``
followed by renormalization.  Nothing here shares code with the tableau
engine, so the two can check each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stabilizer import ZeroProbabilityBranch

MAX_QUBITS = 14
TOL = 1e-12

SQ2 = np.sqrt(0.5)
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQ2
P = np.diag([1, 1j])
T = np.diag([1, np.exp(1j * np.pi / 4)])
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) * SQ2
MINUS = np.array([1, -1], dtype=complex) * SQ2


def phase_gate(theta: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * theta)])


def phase_ket(theta: float) -> np.ndarray:
    """``(|0> + e^{i theta}|1>)/sqrt2``."""
    return np.array([1, np.exp(1j * theta)], dtype=complex) * SQ2


INIT_KETS = {
    "0": KET0,
    "+": PLUS,
    "Y": phase_ket(np.pi / 2),
    "A": phase_ket(np.pi / 4),
}
BASIS_ANGLES = {"Y": np.pi / 2, "A": np.pi / 4}


class OracleSizeError(ValueError):
    pass


def _check_size(n: int) -> None:
    if n > MAX_QUBITS:
        raise OracleSizeError(f"{n} live qubits exceeds the dense-oracle cap of {MAX_QUBITS}")


def product(kets: list[np.ndarray]) -> np.ndarray:
    _check_size(len(kets))
    out = np.array(1, dtype=complex)
    for k in kets:
        out = np.multiply.outer(out, np.asarray(k, dtype=complex))
    return out


def from_vector(vec, n: int) -> np.ndarray:
    return np.asarray(vec, dtype=complex).reshape((2,) * n)


def to_vector(psi: np.ndarray) -> np.ndarray:
    return np.asarray(psi).reshape(-1)


def norm(psi: np.ndarray) -> float:
    return float(np.linalg.norm(psi.reshape(-1)))


def normalize(psi: np.ndarray) -> np.ndarray:
    nrm = norm(psi)
    if nrm < TOL:
        raise ZeroProbabilityBranch("branch has probability zero")
    return psi / nrm


def apply_1q(psi: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    out = np.tensordot(u, psi, axes=([1], [q]))
    return np.moveaxis(out, 0, q)


def apply_cnot(psi: np.ndarray, c: int, t: int) -> np.ndarray:
    out = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[c] = 1
    sub = out[tuple(idx)]
    tt = t - (1 if t > c else 0)
    out[tuple(idx)] = np.flip(sub, axis=tt)
    return out


def insert_qubit(psi: np.ndarray, ket: np.ndarray, at: int) -> np.ndarray:
    _check_size(psi.ndim + 1)
    out = np.multiply.outer(psi, np.asarray(ket, dtype=complex))
    return np.moveaxis(out, -1, at)


def project_out(psi: np.ndarray, q: int, bra: np.ndarray) -> np.ndarray:
    """Contract qubit ``q`` with ``<bra|`` (unnormalized)."""
    return np.tensordot(np.conj(bra), psi, axes=([0], [q]))


def _split(psi: np.ndarray, q: int, pair: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    _check_size(psi.ndim + 1)
    b0, b1 = pair
    # Isometry |b_k> -> |b_k b_k> for the given basis.
    iso = np.einsum("a,b,c->abc", b0, b0, np.conj(b0)) + np.einsum("a,b,c->abc", b1, b1, np.conj(b1))
    out = np.tensordot(iso, psi, axes=([2], [q]))
    return np.moveaxis(out, [0, 1], [q, q + 1])


def smooth_split(psi: np.ndarray, q: int) -> np.ndarray:
    """``a|0> + b|1> -> a|00> + b|11>``; the copy lands at ``q+1``."""
    return _split(psi, q, (KET0, KET1))


def rough_split(psi: np.ndarray, q: int) -> np.ndarray:
    """``a|+> + b|-> -> a|++> + b|-->``; the copy lands at ``q+1``."""
    return _split(psi, q, (PLUS, MINUS))


def _merge(psi, q1, q2, pauli, bra, eigenvalue):
    if eigenvalue not in (1, -1):
        raise ValueError("eigenvalue must be +1 or -1")
    flipped = apply_1q(apply_1q(psi, pauli, q1), pauli, q2)
    projected = 0.5 * (psi + eigenvalue * flipped)
    prob = norm(projected) ** 2
    if prob < TOL:
        raise ZeroProbabilityBranch(f"merge outcome {eigenvalue} has probability zero")
    out = project_out(projected, q2, bra)
    return normalize(out), prob


def rough_merge(psi: np.ndarray, q1: int, q2: int, eigenvalue: int = 1):
    """Returns ``(state, probability)``; the survivor sits where ``q1`` was."""
    return _merge(psi, q1, q2, X, KET0, eigenvalue)


def smooth_merge(psi: np.ndarray, q1: int, q2: int, eigenvalue: int = 1):
    return _merge(psi, q1, q2, Z, PLUS, eigenvalue)


def measure(psi: np.ndarray, q: int, basis: str, outcome: int):
    """Project qubit ``q`` and remove it.  ``outcome`` is the bit 0/1.

    Y and A bases are a phase gate (P or T) followed by an X measurement.
    """
    if basis == "Z":
        bra = (KET0, KET1)[outcome]
    else:
        bra = (PLUS, MINUS)[outcome]
        if basis in BASIS_ANGLES:
            psi = apply_1q(psi, phase_gate(BASIS_ANGLES[basis]), q)
        elif basis != "X":
            raise ValueError(f"unknown basis {basis!r}")
    out = project_out(psi, q, bra)
    prob = norm(out) ** 2
    if prob < TOL:
        raise ZeroProbabilityBranch(f"outcome {outcome} on qubit {q} has probability zero")
    return normalize(out), prob


def equal_up_to_phase(a, b, tol: float = 1e-9) -> bool:
    va = np.asarray(a).reshape(-1)
    vb = np.asarray(b).reshape(-1)
    if va.shape != vb.shape:
        return False
    va = va / np.linalg.norm(va)
    vb = vb / np.linalg.norm(vb)
    return abs(abs(np.vdot(va, vb)) - 1) < tol


# ---------------------------------------------------------------------------
# Phase-state merge


@dataclass(frozen=True)
class PhaseMergeResult:
    state: np.ndarray
    corrections: tuple[str, ...]


def phase_merge(phi, p: complex, outcome: int) -> PhaseMergeResult:
    """Smooth merge of ``|P> = |0> + p|1>`` with the qubit ``phi``.

    ``outcome`` is the eigenvalue (+1 for M=0).  The phase-state wire
    survives, giving ``alpha|0> + p beta|1>`` or ``beta|0> + p alpha|1>``.
    ``corrections`` lists what must follow in order: for ``p = i`` and
    outcome -1 that is X then Z; for ``p = e^{i pi/4}`` it is X then a
    physically applied P gate.
    """
    if abs(abs(p) - 1) > 1e-12:
        raise ValueError(f"|p| must be 1, got {abs(p)}")
    phi = np.asarray(phi, dtype=complex).reshape(2)
    pstate = np.array([1, p], dtype=complex) * SQ2
    joint = product([pstate, phi])
    merged, _ = smooth_merge(joint, 0, 1, outcome)
    corrections: tuple[str, ...] = ()
    if outcome == -1:
        if np.isclose(p, 1j):
            corrections = ("X", "Z")
        elif np.isclose(p, np.exp(1j * np.pi / 4)):
            corrections = ("X", "P")
        else:
            corrections = ("X", f"phase({2 * np.angle(p):.12g})")
    return PhaseMergeResult(merged, corrections)


def apply_corrections(state, corrections) -> np.ndarray:
    gates = {"X": X, "Z": Z, "P": P, "T": T}
    out = np.asarray(state, dtype=complex).reshape(2)
    for c in corrections:
        out = gates[c] @ out
    return out
