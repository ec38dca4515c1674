"""Space-time cost of a lattice-surgery schedule.

Costs are polynomials in the code distance ``d``: a schedule of ``T`` steps
takes ``T d`` error-correction cycles, each patch uses about ``2 d^2``
physical qubits (``d^2`` data plus ``d^2 - 1`` syndrome), so the volume is
``2 P T d^3`` for a peak of ``P`` occupied cells.  Only the coefficient
``c = 2 P T`` is reported unless a numeric distance is supplied.

Conditional corrections are counted as if they fire, so every figure is a
worst case.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .schedule import SurgerySchedule, frames

BASELINES: dict[str, int] = {"Y_BRAID": 140, "A_BRAID": 1500, "BH_BRAID": 4688}


class UnknownBaseline(KeyError):
    pass


@dataclass(frozen=True)
class ResourceEstimate:
    """``patches`` is the peak number of simultaneously occupied cells."""

    patches: int
    timesteps: int
    footprint: int
    grid: tuple[int, int]

    @property
    def volume_coefficient(self) -> int:
        return 2 * self.patches * self.timesteps

    @property
    def cycles(self) -> str:
        return f"{self.timesteps}d"

    @property
    def phys_qubits_per_patch(self) -> str:
        return "2d^2"

    def evaluate(self, distance: int) -> dict:
        """Numbers for a concrete distance; per-patch qubits use the exact ``2d^2 - 1``."""
        if distance < 1:
            raise ValueError("distance must be positive")
        d = distance
        return {
            "distance": d,
            "cycles": self.timesteps * d,
            "phys_qubits_per_patch": 2 * d * d - 1,
            "phys_qubits": self.patches * (2 * d * d - 1),
            "volume": self.volume_coefficient * d**3,
        }

    def to_json(self, distance: int | None = None) -> dict:
        out = {
            "patches": self.patches,
            "timesteps": self.timesteps,
            "footprint": self.footprint,
            "grid": list(self.grid),
            "cycles": self.cycles,
            "phys_qubits_per_patch": self.phys_qubits_per_patch,
            "volume_coefficient": self.volume_coefficient,
            "volume": f"{self.volume_coefficient}d^3",
        }
        if distance is not None:
            out["at_distance"] = self.evaluate(distance)
        return out


def occupancy(s: SurgerySchedule) -> list[set]:
    """Cells in use during each step.

    A step uses the cells its patches hold afterwards, the cells its ops
    touch on the way (a measured patch still occupies its cells while it is
    read out), and any zero-initialized filler that has not been reclaimed.
    """
    out = []
    for f in frames(s):
        held = set().union(*f.patches.values()) if f.patches else set()
        out.append(held | f.touched | f.filler)
    return out


def estimate(s: SurgerySchedule) -> ResourceEstimate:
    occ = occupancy(s)
    peak = max((len(c) for c in occ), default=0)
    ever = set().union(*occ) if occ else set()
    return ResourceEstimate(patches=peak, timesteps=s.num_timesteps, footprint=len(ever), grid=tuple(s.grid))


@dataclass(frozen=True)
class Comparison:
    baseline: str
    baseline_coefficient: int
    coefficient: int
    ratio: Fraction

    @property
    def note(self) -> str:
        if self.ratio > 1:
            return "lattice surgery needs more space-time volume than braiding"
        if self.ratio < 1:
            return "lattice surgery needs less space-time volume than braiding"
        return "lattice surgery and braiding need the same space-time volume"

    def to_json(self) -> dict:
        return {
            "baseline": self.baseline,
            "baseline_volume": f"{self.baseline_coefficient}d^3",
            "volume": f"{self.coefficient}d^3",
            "ratio": float(self.ratio),
            "ratio_exact": f"{self.ratio.numerator}/{self.ratio.denominator}",
            "note": self.note,
        }

    def __str__(self) -> str:
        return (
            f"{self.coefficient}d^3 vs {self.baseline} {self.baseline_coefficient}d^3: "
            f"ratio {float(self.ratio):.6g} ({self.note})"
        )


def compare_table(est: ResourceEstimate | int, baseline: str) -> Comparison:
    """Ratio of lattice-surgery volume to a named braiding baseline, kept exact."""
    if baseline not in BASELINES:
        raise UnknownBaseline(f"unknown baseline {baseline!r}; choose from {sorted(BASELINES)}")
    coeff = est if isinstance(est, int) else est.volume_coefficient
    base = BASELINES[baseline]
    return Comparison(baseline, base, coeff, Fraction(coeff, base))
