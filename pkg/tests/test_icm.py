from __future__ import annotations

import random

import pytest

from lsc import CNOT, Basis, Circuit, Form, InitState, Measurement, check_equivalence_small, data_text, invert_icm, parse_circuit, validate
from lsc.icm import CorrectionRule, UnsupportedFragment, icm_corrections
from lsc.statevector import OracleSizeError


def fragment(name: str, theta: InitState) -> Circuit:
    c = parse_circuit(data_text(name))
    return c.replace(inits=(c.inits[0], theta))


@pytest.mark.parametrize("name", ["rotation_x.icm", "rotation_z.icm"])
@pytest.mark.parametrize("theta", [InitState.Y, InitState.A])
def test_fragments_are_equivalent(name, theta):
    icm = fragment(name, theta)
    inv, rules = invert_icm(icm)
    assert validate(inv, Form.INVERTED_ICM) == []
    assert inv.measurements[0].basis.value == theta.value
    assert check_equivalence_small(icm, inv, rules, inputs=[0], rules_a=icm_corrections(icm))


def test_rotation_x_shape():
    inv, rules = invert_icm(fragment("rotation_x.icm", InitState.A))
    assert inv.inits == (InitState.PLUS, InitState.PLUS)
    assert inv.gates == (CNOT(1, (0,)),)
    assert CorrectionRule(("m0",), "track_z", 1) in rules
    assert CorrectionRule(("m0.merge",), "apply_p", 0) in rules


def test_rotation_z_shape():
    inv, rules = invert_icm(fragment("rotation_z.icm", InitState.A))
    assert inv.inits == (InitState.PLUS, InitState.ZERO)
    assert inv.gates == (CNOT(0, (1,)),)
    assert [r.action for r in rules if r.trigger == ("m0",)] == ["track_z"]


def test_dropping_the_rule_breaks_equivalence():
    icm = fragment("rotation_x.icm", InitState.A)
    inv, rules = invert_icm(icm)
    kept = [r for r in rules if r.action != "track_z"]
    assert not check_equivalence_small(icm, inv, kept, inputs=[0], rules_a=icm_corrections(icm))


def test_icm_side_corrections_are_needed_for_second_shape():
    icm = fragment("rotation_z.icm", InitState.Y)
    inv, rules = invert_icm(icm)
    assert not check_equivalence_small(icm, inv, rules, inputs=[0])
    assert [r.action for r in icm_corrections(icm)] == ["track_xz"]


def test_circuit_without_rotations_is_unchanged():
    c = parse_circuit(data_text("shared_target.icm"))
    out, rules = invert_icm(c)
    assert out == c and rules == []


def test_y_rules_never_apply_p():
    for name in ("rotation_x.icm", "rotation_z.icm"):
        _, rules = invert_icm(fragment(name, InitState.Y))
        assert all(r.action != "apply_p" for r in rules)


def test_unsupported_fragments():
    two_gates = Circuit(3, (InitState.PLUS, InitState.A, InitState.ZERO), (CNOT(0, (1,)), CNOT(1, (2,))), {0: Measurement(Basis.X)})
    with pytest.raises(UnsupportedFragment):
        invert_icm(two_gates)
    wrong_basis = Circuit(2, (InitState.PLUS, InitState.A), (CNOT(0, (1,)),), {0: Measurement(Basis.Z)})
    with pytest.raises(UnsupportedFragment):
        invert_icm(wrong_basis)
    with pytest.raises(ValueError):
        invert_icm(Circuit(2, (InitState.PLUS, InitState.ZERO), (CNOT(0, (1,)),), {0: Measurement(Basis.Y)}))


def test_oracle_size_cap():
    c = Circuit(13, (InitState.PLUS,) * 13)
    with pytest.raises(OracleSizeError):
        check_equivalence_small(c, c, max_qubits=13)
    with pytest.raises(OracleSizeError):
        check_equivalence_small(c, c)


def random_icm(rng: random.Random) -> Circuit:
    """Plain CNOTs among |0>/|+> qubits, then one teleportation fragment per rotated qubit."""
    n_rot = rng.randint(1, 3)
    n_plain = rng.randint(max(n_rot, 2), 6 - n_rot)
    n = n_plain + n_rot
    inits = [rng.choice((InitState.ZERO, InitState.PLUS)) for _ in range(n_plain)]
    inits += [rng.choice((InitState.Y, InitState.A)) for _ in range(n_rot)]
    gates = []
    for _ in range(rng.randint(0, 6)):
        a, b = rng.sample(range(n_plain), 2)
        gates.append(CNOT(a, (b,)))
    meas = {}
    partners = rng.sample(range(n_plain), n_rot)
    for r, p in zip(range(n_plain, n), partners):
        if rng.random() < 0.5:
            gates.append(CNOT(p, (r,)))
            meas[p] = Measurement(Basis.X)
        else:
            gates.append(CNOT(r, (p,)))
            meas[p] = Measurement(Basis.Z)
    return Circuit(n, tuple(inits), tuple(gates), meas)


def test_random_icm_circuits_invert_faithfully():
    rng = random.Random(7)
    for _ in range(40):
        icm = random_icm(rng)
        inv, rules = invert_icm(icm)
        assert validate(inv, Form.INVERTED_ICM) == []
        assert inv.num_qubits == icm.num_qubits
        inputs = [q for q in range(icm.num_qubits) if icm.inits[q] not in (InitState.Y, InitState.A)][:1]
        assert check_equivalence_small(icm, inv, rules, inputs=inputs, rules_a=icm_corrections(icm))
