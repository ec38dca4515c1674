from __future__ import annotations

import numpy as np
import pytest

from lsc import data_text, parse_circuit
from lsc import statevector as sv
from lsc.semantics import circuit_statevector, simulate_statevector
from lsc.stabilizer import ZeroProbabilityBranch

A = np.exp(1j * np.pi / 4)


def random_qubit(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def test_phase_merge_y_positive_is_p_gate():
    rng = np.random.default_rng(1)
    phi = random_qubit(rng)
    res = sv.phase_merge(phi, 1j, 1)
    assert res.corrections == ()
    assert sv.equal_up_to_phase(res.state, sv.P @ phi)


def test_phase_merge_a_negative_needs_x_then_p():
    rng = np.random.default_rng(2)
    alpha, beta = random_qubit(rng)
    res = sv.phase_merge([alpha, beta], A, -1)
    assert res.corrections == ("X", "P")
    assert sv.equal_up_to_phase(res.state, np.array([beta, A * alpha]))
    fixed = sv.apply_corrections(res.state, res.corrections)
    assert sv.equal_up_to_phase(fixed, sv.T @ np.array([alpha, beta]))


def test_phase_merge_y_negative_needs_x_and_z():
    rng = np.random.default_rng(3)
    phi = random_qubit(rng)
    res = sv.phase_merge(phi, 1j, -1)
    assert res.corrections == ("X", "Z")
    assert sv.equal_up_to_phase(sv.apply_corrections(res.state, res.corrections), sv.P @ phi)


@pytest.mark.parametrize("p", [1j, A, np.exp(0.3j)])
def test_phase_merge_of_zero(p):
    assert sv.equal_up_to_phase(sv.phase_merge(sv.KET0, p, 1).state, sv.KET0)


def test_phase_merge_rejects_non_unit_phase():
    with pytest.raises(ValueError):
        sv.phase_merge(sv.KET0, 0.5, 1)


def test_dense_merges_follow_projection_formulas():
    rng = np.random.default_rng(4)
    phi = random_qubit(rng)
    # the decoded patch a|0>+b|1> supplies the coefficients, phi survives
    a, b = random_qubit(rng)
    for ev in (1, -1):
        merged, _ = sv.rough_merge(sv.product([phi, np.array([a, b])]), 0, 1, ev)
        want = a * phi + ev * b * (sv.X @ phi)
        assert sv.equal_up_to_phase(sv.to_vector(merged), want / np.linalg.norm(want))
        merged, _ = sv.smooth_merge(sv.product([phi, np.array([a, b])]), 0, 1, ev)
        want = (a + b) * phi + ev * (a - b) * (sv.Z @ phi)
        assert sv.equal_up_to_phase(sv.to_vector(merged), want / np.linalg.norm(want))


def test_zero_probability_branch():
    with pytest.raises(ZeroProbabilityBranch):
        sv.smooth_merge(sv.product([sv.KET0, sv.KET0]), 0, 1, -1)


def test_shared_target_output_vector():
    psi = circuit_statevector(parse_circuit(data_text("shared_target.icm")))
    want = np.zeros(8)
    for bits in ("000", "110", "011", "101"):
        want[int(bits, 2)] = 0.5
    assert sv.equal_up_to_phase(sv.to_vector(psi), want)


def test_simulate_dispatches_on_circuits():
    c = parse_circuit(data_text("shared_target.icm"))
    assert np.allclose(simulate_statevector(c), circuit_statevector(c))


def test_injection_encoding_line():
    """A physical qubit a|0>+b|1> spread over a line of three becomes a|000>+b|111>."""
    rng = np.random.default_rng(5)
    alpha, beta = random_qubit(rng)
    psi = sv.product([np.array([alpha, beta]), sv.KET0, sv.KET0])
    psi = sv.apply_cnot(sv.apply_cnot(psi, 0, 1), 1, 2)
    want = np.zeros(8, complex)
    want[0], want[7] = alpha, beta
    assert np.allclose(sv.to_vector(psi), want)


def test_size_cap():
    with pytest.raises(sv.OracleSizeError):
        sv.product([sv.KET0] * (sv.MAX_QUBITS + 1))
