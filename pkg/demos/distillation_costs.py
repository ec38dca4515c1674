"""Cost the three bundled distillation circuits and compare with braiding.

For each circuit the schedule is compiled from its placement file, the
space-time volume is read off, and the ratio to the matching braided
implementation is printed as an exact fraction.  A concrete distance is
plugged in at the end to turn the symbolic counts into numbers.

    python3 demos/distillation_costs.py [distance]
"""

from __future__ import annotations

import sys

from lsc import compare_table, compile_circuit, data_text, estimate, parse_circuit

CIRCUITS = [
    ("Steane |Y>", "steane", "Y_BRAID"),
    ("Reed-Muller |A>", "reed_muller", "A_BRAID"),
    ("Bravyi-Haah |A>", "bravyi_haah", "BH_BRAID"),
]


def main(distance: int = 7) -> None:
    print(f"{'circuit':<18}{'P':>5}{'T':>4}{'volume':>10}   vs braiding")
    for label, stem, baseline in CIRCUITS:
        comp = compile_circuit(parse_circuit(data_text(f"{stem}.icm")), data_text(f"{stem}.place"))
        est = estimate(comp.schedule)
        cmp = compare_table(est, baseline)
        frac = f"{cmp.ratio.numerator}/{cmp.ratio.denominator}"
        print(f"{label:<18}{est.patches:>5}{est.timesteps:>4}{est.volume_coefficient:>8}d^3   {frac} = {float(cmp.ratio):.4f}")

    print(f"\nat distance d = {distance}:")
    for label, stem, _ in CIRCUITS:
        comp = compile_circuit(parse_circuit(data_text(f"{stem}.icm")), data_text(f"{stem}.place"))
        n = estimate(comp.schedule).evaluate(distance)
        print(f"  {label:<18} {n['cycles']:>4} cycles, {n['phys_qubits']:>6} physical qubits")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 7)
