from __future__ import annotations

import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsc import CNOT, Circuit, InitState, canonicalize, data_text, parse_circuit, push_and_eliminate
from lsc import stabilizer as stab
from lsc.canonicalize import NonCommutingPair, RewriteLimitExceeded, commute
from lsc.semantics import prepared_state

from conftest import random_circuits

P, Z = InitState.PLUS, InitState.ZERO


def unitary(gates, n=3):
    """Permutation matrix of a CNOT sequence, built column by column."""
    u = np.zeros((2**n, 2**n), dtype=int)
    for col, bits in enumerate(itertools.product((0, 1), repeat=n)):
        b = list(bits)
        for g in gates:
            for t in g.targets:
                b[t] ^= b[g.control]
        u[int("".join(map(str, b)), 2), col] = 1
    return u


def same_state(a, b):
    return stab.canonical_form(prepared_state(a)) == stab.canonical_form(prepared_state(b))


def test_rule_one_drops_cnot_onto_fresh_plus():
    c = Circuit(2, (P, P), (CNOT(0, (1,)),))
    assert push_and_eliminate(c).gates == ()


def test_rule_two_drops_cnot_from_zero():
    c = Circuit(2, (Z, Z), (CNOT(0, (1,)),))
    assert push_and_eliminate(c).gates == ()


def test_rule_three_cancels_pairs():
    c = Circuit(2, (P, Z), (CNOT(0, (1,)), CNOT(0, (1,))))
    assert push_and_eliminate(c).gates == ()


def test_useful_cnot_survives():
    c = Circuit(2, (P, Z), (CNOT(0, (1,)),))
    assert push_and_eliminate(c).gates == (CNOT(0, (1,)),)


def test_disjoint_pair_swaps():
    a, b = CNOT(0, (1,)), CNOT(2, (3,))
    assert commute(a, b) == [b, a]


@pytest.mark.parametrize("left, right", [(CNOT(0, (1,)), CNOT(1, (2,))), (CNOT(1, (2,)), CNOT(0, (1,)))])
def test_chained_pair_gains_one_gate(left, right):
    seq = commute(left, right)
    assert len(seq) == 3
    assert seq[0] == right and seq[-1] == left
    assert np.array_equal(unitary(seq), unitary([left, right]))


def test_shared_control_and_shared_target_swap():
    for a, b in [(CNOT(0, (1,)), CNOT(0, (2,))), (CNOT(0, (2,)), CNOT(1, (2,)))]:
        assert commute(a, b) == [b, a]
        assert np.array_equal(unitary([a, b]), unitary([b, a]))


def test_opposite_pair_does_not_commute():
    with pytest.raises(NonCommutingPair):
        commute(CNOT(0, (1,)), CNOT(1, (0,)))


def test_all_ordered_pairs_on_three_qubits():
    pairs = [CNOT(a, (b,)) for a in range(3) for b in range(3) if a != b]
    for left, right in itertools.product(pairs, repeat=2):
        try:
            seq = commute(left, right)
        except NonCommutingPair:
            continue
        assert seq[0] == right
        assert np.array_equal(unitary(seq), unitary([left, right]))


def test_shared_target_program():
    c = parse_circuit(data_text("shared_target.icm"))
    p = canonicalize(c)
    assert p.mtcnots == (CNOT(0, (1,)), CNOT(2, (1,)))
    assert all(p.inits[q] is P for q in p.controls)
    assert same_state(c, p.to_circuit())


def test_reed_muller_last_cnot_rewritten():
    c = parse_circuit(data_text("reed_muller.icm"))
    controls = {g.control for g in c.gates}
    assert controls & set(c.gates[-1].targets), "as written, the last CNOT targets other controls"
    p = canonicalize(c)
    assert len(p.mtcnots) == 5
    assert p.violations() == []
    assert same_state(c, p.to_circuit())
    last = {g.control: g for g in p.mtcnots}[c.gates[-1].control]
    assert not set(last.targets) & set(p.controls)


@pytest.mark.parametrize("name, count", [("steane.icm", 4), ("bravyi_haah.icm", 7)])
def test_fixture_programs(name, count):
    c = parse_circuit(data_text(name))
    p = canonicalize(c)
    assert len(p.mtcnots) == count
    assert p.violations() == []
    assert same_state(c, p.to_circuit())


def test_invalid_input_rejected():
    c = Circuit(2, (InitState.Y, P), (CNOT(0, (1,)),))
    with pytest.raises(ValueError):
        canonicalize(c)


def test_budget_guard():
    gates = tuple(CNOT(a, (b,)) for a, b in [(0, 1), (1, 2), (2, 3), (0, 3), (1, 3)])
    c = Circuit(4, (P, Z, Z, P), gates)
    with pytest.raises(RewriteLimitExceeded):
        push_and_eliminate(c, max_steps=0)


def test_random_soundness_and_budget():
    for c in random_circuits(200, seed=11, measure=False):
        p = canonicalize(c)
        assert p.violations() == []
        assert same_state(c, p.to_circuit())


@st.composite
def inverted_icm(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    from conftest import random_inverted_icm

    return random_inverted_icm(random.Random(seed), max_qubits=8, max_cnots=15, measure=False)


@settings(max_examples=100, deadline=None)
@given(inverted_icm())
def test_idempotent(c):
    p = canonicalize(c)
    again = canonicalize(p.to_circuit())
    assert again.inits == p.inits
    assert {(g.control, frozenset(g.targets)) for g in again.mtcnots} == {
        (g.control, frozenset(g.targets)) for g in p.mtcnots
    }


@settings(max_examples=100, deadline=None)
@given(inverted_icm())
def test_no_rule_applies_after_rewrite(c):
    flat = push_and_eliminate(c)
    seen: set[int] = set()
    for i, g in enumerate(flat.gates):
        t = g.targets[0]
        assert not (flat.inits[t] is P and t not in seen), "CNOT onto an untouched |+>"
        assert flat.inits[g.control] is not Z, "CNOT controlled by |0>"
        if i:
            assert flat.gates[i - 1] != g
        seen.update(g.qubits)
