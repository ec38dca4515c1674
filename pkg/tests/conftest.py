from __future__ import annotations

import random
from pathlib import Path

import pytest

from lsc import CNOT, Basis, Circuit, InitState, Measurement, data_text, parse_circuit

GOLDEN = Path(__file__).parent / "golden"


def random_inverted_icm(rng: random.Random, max_qubits: int = 10, max_cnots: int = 25, measure: bool = True) -> Circuit:
    """A random inverted-ICM circuit: |0>/|+> inits, CNOTs, then X/Z measurements."""
    n = rng.randint(2, max_qubits)
    inits = [rng.choice((InitState.ZERO, InitState.PLUS)) for _ in range(n)]
    gates = []
    for _ in range(rng.randint(0, max_cnots)):
        c = rng.randrange(n)
        others = [q for q in range(n) if q != c]
        k = 1 if rng.random() < 0.8 else rng.randint(1, min(3, len(others)))
        gates.append(CNOT(c, tuple(rng.sample(others, k))))
    meas = {}
    if measure:
        for q in range(n):
            if rng.random() < 0.3:
                meas[q] = Measurement(rng.choice((Basis.X, Basis.Z)))
    return Circuit(n, tuple(inits), tuple(gates), meas)


def random_circuits(count: int, seed: int, **kw) -> list[Circuit]:
    rng = random.Random(seed)
    return [random_inverted_icm(rng, **kw) for _ in range(count)]


@pytest.fixture
def fixture_circuit():
    return lambda name: parse_circuit(data_text(name))


@pytest.fixture
def golden():
    return lambda name: (GOLDEN / name).read_text()


# Outcome of each acceptance criterion, filled in by test_acceptance.py.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")
