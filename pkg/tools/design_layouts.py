"""Search for line-per-CNOT placements of the two |A> distillation circuits.

Each multi-target CNOT owns one full line of the grid (a column for
Reed-Muller, a row for Bravyi-Haah) and every target owns one slot across
those lines; a last slot holds all the controls.  After the split each
target sits where its lines cross its slot, so the rough merge is a
straight segment through the cells the split released.  Targets are then
shrunk to one cell and given an |A> site plus a |Y> site for the
conditional P correction.

Line order minimizes segment length; slot order is shuffled per seed until
the injection sites can be assigned by backtracking.  Results are written
next to the circuits as ``.place`` files and are reproducible.

Run from the repository root:  python3 tools/design_layouts.py
"""

from __future__ import annotations

import itertools
import random
from pathlib import Path

from lsc.canonicalize import canonicalize
from lsc.circuit import parse_circuit
from lsc.schedule import Placement, dump_placement, emit_schedule, validate_schedule

DATA = Path(__file__).resolve().parents[1] / "src" / "lsc" / "data"


def neighbors(cell, shape):
    r, c = cell
    for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        rr, cc = r + dr, c + dc
        if 0 <= rr < shape[0] and 0 <= cc < shape[1]:
            yield rr, cc


def line_order(program):
    """Order of the group lines that keeps target segments shortest."""
    groups = {g.control: set(g.qubits) for g in program.mtcnots}
    targets = sorted({t for g in program.mtcnots for t in g.targets})
    best, best_len = None, None
    for order in itertools.permutations(sorted(groups)):
        idx = {c: i for i, c in enumerate(order)}
        total = 0
        for t in targets:
            at = [idx[c] for c in order if t in groups[c]]
            total += max(at) - min(at) + 1
        if best_len is None or total < best_len:
            best, best_len = list(order), total
    return best


def slot_layout(program, order, slots):
    """Split positions and merged regions when every target owns one slot.

    ``slots`` lists the targets in slot order with ``None`` marking the slot
    shared by all controls.  Cell ``(line, slot)`` is internal; the caller
    decides whether lines are rows or columns.
    """
    groups = {g.control: g.qubits for g in program.mtcnots}
    ctrl_slot = slots.index(None)
    pos = {}
    for i, ctrl in enumerate(order):
        pos[(i, ctrl)] = ctrl_slot
        for t in groups[ctrl]:
            if t != ctrl:
                pos[(i, t)] = slots.index(t)
    regions = {}
    for t in slots:
        if t is None:
            continue
        at = [i for i, c in enumerate(order) if t in groups[c]]
        regions[t] = {(i, slots.index(t)) for i in range(min(at), max(at) + 1)}
    return pos, regions


def assign_sites(program, occupied, regions, shape, seed):
    """Pick a kept cell, an |A> site and a |Y> site for every measured qubit."""
    rng = random.Random(seed)
    measured = sorted(program.measurements)
    kept_fixed = {q: cells for q, cells in occupied.items() if q not in program.measurements}
    taken = {c for cells in kept_fixed.values() for c in cells}
    options = {}
    for q in measured:
        opts = []
        for k in sorted(regions[q]):
            for a in neighbors(k, shape):
                for y in list(neighbors(k, shape)) + list(neighbors(a, shape)):
                    if len({k, a, y}) == 3:
                        opts.append((k, a, y))
        rng.shuffle(opts)
        options[q] = opts
    keeps_all = {q: set(regions[q]) for q in measured}
    choice = {}
    used = set(taken)

    def free_ok(cells, q):
        for c in cells:
            if c in used:
                return False
        return True

    def dfs():
        left = [q for q in measured if q not in choice]
        if not left:
            return True
        best, best_opts = None, None
        for q in left:
            ok = [o for o in options[q] if o[0] not in used and free_ok(o[1:], q) and not _steals(o[1:], q)]
            if best_opts is None or len(ok) < len(best_opts):
                best, best_opts = q, ok
            if not ok:
                return False
        for o in best_opts[:12]:
            choice[best] = o
            used.update(o)
            if dfs():
                return True
            used.difference_update(o)
            del choice[best]
        return False

    def _steals(cells, q):
        # an injection site must not be the last possible kept cell of another qubit
        for other in measured:
            if other == q or other in choice:
                continue
            if keeps_all[other] <= used | set(cells):
                return True
        return False

    return dict(choice) if dfs() else None


def build(name, orient, seeds):
    program = canonicalize(parse_circuit((DATA / f"{name}.icm").read_text()))
    order = line_order(program)
    groups = {g.control: g.qubits for g in program.mtcnots}
    targets = sorted({t for g in program.mtcnots for t in g.targets})
    shape = (len(order), len(targets) + 1)
    for seed in seeds:
        rng = random.Random(seed)
        slots = targets + [None]
        rng.shuffle(slots)
        pos, regions = slot_layout(program, order, slots)
        occupied = {}
        for (i, q), x in pos.items():
            occupied.setdefault(q, set()).add((i, x))
        for t, reg in regions.items():
            occupied[t] = set(reg)
        sites = assign_sites(program, occupied, occupied, shape, seed)
        if sites is None:
            continue
        placement = to_placement(program, order, groups, pos, occupied, sites, shape, orient)
        schedule = emit_schedule(program, placement)
        problems = validate_schedule(schedule)
        if problems:
            print(f"{name}: seed {seed} invalid: {problems[:3]}")
            continue
        header = (
            f"# {name.replace('_', '-')} placement found by tools/design_layouts.py (seed {seed}).\n"
            "# One grid line per multi-target CNOT and one slot per target; coordinates are 0-based.\n"
        )
        (DATA / f"{name}.place").write_text(header + dump_placement(placement))
        print(f"{name}: seed {seed} ok, grid {placement.grid}, {schedule.num_timesteps} steps")
        return
    raise SystemExit(f"{name}: no layout found")


def to_placement(program, order, groups, pos, occupied, sites, shape, orient):
    def cell(c):
        return c if orient == "rows" else (c[1], c[0])

    grid = shape if orient == "rows" else (shape[1], shape[0])
    phases = []
    snap = {cell((i, x)): ctrl for i, ctrl in enumerate(order) for x in range(shape[1])}
    phases.append(("init", dict(snap)))
    snap = {cell((i, x)): q for (i, q), x in pos.items()}
    phases.append(("split", dict(snap)))
    for q, cells in occupied.items():
        for c in cells:
            snap[cell(c)] = q
    phases.append(("merge", dict(snap)))
    for q, (keep, _, _) in sites.items():
        for c in occupied[q]:
            if c != keep:
                del snap[cell(c)]
    phases.append(("shrink", dict(snap)))
    for q, (_, a, _) in sites.items():
        snap[cell(a)] = ("A", q)
    phases.append(("inject", dict(snap)))
    for q, (_, a, _) in sites.items():
        snap[cell(a)] = q
    phases.append(("phase-merge", dict(snap)))
    for q, (_, _, y) in sites.items():
        snap[cell(y)] = ("Y", q)
    phases.append(("correct-inject", dict(snap)))
    for q, (_, _, y) in sites.items():
        snap[cell(y)] = q
    phases.append(("correct-merge", dict(snap)))
    snap = {c: t for c, t in snap.items() if t not in program.measurements}
    phases.append(("measure", dict(snap)))
    return Placement(grid, tuple(phases), program.base)


def main() -> None:
    build("reed_muller", "cols", seeds=range(1, 500))
    build("bravyi_haah", "rows", seeds=range(1, 500))


if __name__ == "__main__":
    main()
