"""Compile the Steane-code |Y> distillation circuit onto its hand placement.

Shows the schedule phase by phase, checks the state reached just before
injection against a direct tableau simulation of the circuit, and replays
a handful of random merge-outcome branches to exercise the corrections.

    python3 demos/steane_verify.py
"""

from __future__ import annotations

from lsc import compile_circuit, data_text, estimate, parse_circuit, verify


def main() -> None:
    circuit = parse_circuit(data_text("steane.icm"))
    comp = compile_circuit(circuit, data_text("steane.place"))
    s = comp.schedule

    rows, cols = s.grid
    print(f"grid {rows} x {cols}, {len(s.steps)} steps")
    for t, (name, step) in enumerate(zip(s.phases, s.steps)):
        kinds = sorted({op.kind for op in step})
        print(f"  step {t}: {name:<12} {len(step):>3} ops  ({', '.join(kinds)})")

    result = verify(comp.circuit, s, seed=1, branches=16)
    print(f"\npre-injection state over {result.branches_checked} branches: {'PASS' if result.passed else 'FAIL'}")
    for row in result.expected.to_strings():
        print(f"  {row}")

    est = estimate(s)
    print(f"\nP = {est.patches}, T = {est.timesteps}, volume = {est.volume_coefficient}d^3")


if __name__ == "__main__":
    main()
