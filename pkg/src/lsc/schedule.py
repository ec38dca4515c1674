"""Lattice-surgery schedules: patches on a grid, one op list per timestep.

A placement is a sequence of named phases, each a full snapshot of what
every grid cell holds.  :func:`emit_schedule` turns consecutive snapshots
into surgery operations: a column that breaks into several labels is a
smooth split, several patches of one qubit joined into one region are a
rough merge, an injected state absorbed into its qubit is a smooth (phase)
merge, and so on.  Each phase costs one timestep.

Everything here is 0-based; display numbering is applied only when a
schedule is printed.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import stabilizer as stab
from . import statevector as sv
from .canonicalize import MultiTargetProgram
from .circuit import InitState, ROTATED_BASES, measurement_id
from .icm import CorrectionRule, merge_id

Cell = tuple[int, int]

FILLER = "0"
OP_KINDS = (
    "init_plus",
    "init_zero",
    "inject",
    "smooth_split",
    "rough_split",
    "rough_merge",
    "smooth_merge",
    "move",
    "shrink",
    "grow",
    "measure",
    "correct",
)


class PlacementError(ValueError):
    """A placement file is malformed or does not fit the program."""


class PlacementInfeasible(PlacementError):
    """The placement cannot realise a required merge or injection."""


class NonStabilizerState(ValueError):
    """The tableau cannot represent an injected |A> state."""


def fix_id(qubit: int) -> str:
    """Record id of the corrective |Y> merge that applies a P gate."""
    return measurement_id(qubit) + ".fix"


def join_id(qubit: int, control: int) -> str:
    """Record id of merging the piece of ``qubit`` split from ``control``."""
    return f"{measurement_id(qubit)}.from{control}"


def display_id(ref: str, base: int) -> str:
    """Shift every number in a patch or record id by ``base``."""
    if not base:
        return ref
    return re.sub(r"\d+", lambda m: str(int(m.group()) + base), ref)


# ---------------------------------------------------------------------------
# Data types


@dataclass(frozen=True)
class SurgeryOp:
    """One patch-level instruction.

    ``cells`` is the footprint after the op (for splits, the source patch;
    for measurements, the cells freed).  ``records`` names the classical
    outcome the op produces, ``condition`` the outcomes whose parity must be
    1 for a conditional op to run.
    """

    kind: str
    patch: str | None
    cells: tuple[Cell, ...] = ()
    sources: tuple[str, ...] = ()
    pieces: tuple[tuple[str, tuple[Cell, ...]], ...] = ()
    basis: str | None = None
    records: tuple[str, ...] = ()
    condition: tuple[str, ...] = ()
    rule: CorrectionRule | None = None

    def __post_init__(self):
        if self.kind not in OP_KINDS:
            raise ValueError(f"unknown op kind {self.kind!r}")
        object.__setattr__(self, "cells", tuple(sorted(map(tuple, self.cells))))
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(
            self, "pieces", tuple((p, tuple(sorted(map(tuple, cs)))) for p, cs in self.pieces)
        )
        object.__setattr__(self, "condition", tuple(self.condition))
        recs = self.records
        object.__setattr__(self, "records", (recs,) if isinstance(recs, str) else tuple(recs or ()))


@dataclass(frozen=True)
class SurgerySchedule:
    grid: tuple[int, int]
    steps: tuple[tuple[SurgeryOp, ...], ...]
    qubit_map: dict[str, int]
    corrections: tuple[CorrectionRule, ...] = ()
    phases: tuple[str, ...] = ()
    inputs: tuple[tuple[str, tuple[Cell, ...]], ...] = ()
    base: int = 0

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(tuple(s) for s in self.steps))
        if not self.phases:
            object.__setattr__(self, "phases", tuple(f"step{i}" for i in range(len(self.steps))))
        if len(self.phases) != len(self.steps):
            raise ValueError("one phase name per timestep")

    @property
    def num_timesteps(self) -> int:
        return len(self.steps)

    def to_json(self) -> dict:
        b = self.base

        def op_json(op: SurgeryOp) -> dict:
            d = {
                "op": op.kind,
                "cells": [list(c) for c in op.cells],
                "patch": display_id(op.patch, b) if op.patch is not None else None,
            }
            if op.sources:
                d["sources"] = [display_id(p, b) for p in op.sources]
            if op.pieces:
                d["pieces"] = [
                    {"patch": display_id(p, b), "cells": [list(c) for c in cs]} for p, cs in op.pieces
                ]
            if op.basis is not None:
                d["basis"] = op.basis
            if op.records:
                d["records"] = [display_id(r, b) for r in op.records]
            if op.condition:
                d["if"] = [display_id(t, b) for t in op.condition]
            if op.rule is not None:
                d["rule"] = op.rule.to_json(b)
            return d

        out = {
            "grid": list(self.grid),
            "steps": [[op_json(op) for op in step] for step in self.steps],
            "corrections": [r.to_json(b) for r in self.corrections],
            "qubit_map": {display_id(p, b): q + b for p, q in self.qubit_map.items()},
            "phases": list(self.phases),
            "base": b,
        }
        return out


def schedule_from_json(data: dict) -> SurgerySchedule:
    """Inverse of :meth:`SurgerySchedule.to_json`."""
    base = data.get("base", 0)

    def back(ref):
        return display_id(ref, -base) if ref is not None else None

    def rule_back(d):
        return CorrectionRule(tuple(back(t) for t in d["if"]), d["do"], d["qubit"] - base)

    steps = []
    for step in data["steps"]:
        ops = []
        for d in step:
            ops.append(
                SurgeryOp(
                    kind=d["op"],
                    patch=back(d["patch"]),
                    cells=[tuple(c) for c in d["cells"]],
                    sources=[back(p) for p in d.get("sources", [])],
                    pieces=[(back(p["patch"]), [tuple(c) for c in p["cells"]]) for p in d.get("pieces", [])],
                    basis=d.get("basis"),
                    records=[back(r) for r in d.get("records", [])],
                    condition=[back(t) for t in d.get("if", [])],
                    rule=rule_back(d["rule"]) if "rule" in d else None,
                )
            )
        steps.append(tuple(ops))
    return SurgerySchedule(
        grid=tuple(data["grid"]),
        steps=tuple(steps),
        qubit_map={back(p): q - base for p, q in data["qubit_map"].items()},
        corrections=tuple(rule_back(r) for r in data["corrections"]),
        phases=tuple(data.get("phases", ())),
        base=base,
    )


def schedule_json_text(s: SurgerySchedule) -> str:
    """:meth:`SurgerySchedule.to_json` as text with one op per line.

    Key order is fixed, so equal schedules give identical bytes.
    """
    data = s.to_json()

    def dump(v):
        return json.dumps(v, separators=(", ", ": "))

    lines = ["{"]
    keys = list(data)
    for i, key in enumerate(keys):
        tail = "," if i + 1 < len(keys) else ""
        if key == "steps":
            lines.append('  "steps": [')
            for j, step in enumerate(data["steps"]):
                lines.append("    [")
                for k, op in enumerate(step):
                    lines.append("      " + dump(op) + ("," if k + 1 < len(step) else ""))
                lines.append("    ]" + ("," if j + 1 < len(data["steps"]) else ""))
            lines.append("  ]" + tail)
        else:
            lines.append(f"  {dump(key)}: {dump(data[key])}{tail}")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Placements

Token = object  # int qubit, FILLER, or (letter, qubit) for an injected state


@dataclass(frozen=True)
class Placement:
    """Grid snapshots, one per phase.  Cells missing from a snapshot are free."""

    grid: tuple[int, int]
    phases: tuple[tuple[str, dict], ...]
    base: int = 0

    def labels(self) -> set[int]:
        out = set()
        for _, snap in self.phases:
            for tok in snap.values():
                if isinstance(tok, int):
                    out.add(tok)
                elif isinstance(tok, tuple):
                    out.add(tok[1])
        return out


def _parse_token(tok: str, base: int, lineno: int):
    if tok == "free":
        return None
    if tok == "zero" or (tok == FILLER and base > 0):
        return FILLER
    letter = ""
    if tok[0] in "YA":
        letter, tok = tok[0], tok[1:]
    if not tok.isdigit() or int(tok) - base < 0:
        raise PlacementError(f"line {lineno}: bad cell label {letter + tok!r}")
    q = int(tok) - base
    return (letter, q) if letter else q


def load_placement(text: str, program: MultiTargetProgram | None = None) -> Placement:
    """Parse a placement file.

    Grammar: optional ``base 0|1``, then ``grid <rows> <cols>``, then
    ``phase <name>`` blocks of ``at <row> <col> <label|Y<label>|A<label>|0|free>``
    lines.  Each phase starts from the previous snapshot and overrides the
    listed cells.
    """
    base = 0
    grid = None
    phases: list[tuple[str, dict]] = []
    current: dict | None = None
    seen: dict[Cell, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0].lower()
        if kw == "base":
            if grid is not None or len(tok) != 2 or tok[1] not in ("0", "1"):
                raise PlacementError(f"line {lineno}: 'base 0|1' must precede 'grid'")
            base = int(tok[1])
        elif kw == "grid":
            if grid is not None or len(tok) != 3 or not (tok[1].isdigit() and tok[2].isdigit()):
                raise PlacementError(f"line {lineno}: expected a single 'grid <rows> <cols>'")
            grid = (int(tok[1]), int(tok[2]))
        elif grid is None:
            raise PlacementError(f"line {lineno}: 'grid' must come first")
        elif kw == "phase":
            if len(tok) != 2:
                raise PlacementError(f"line {lineno}: expected 'phase <name>'")
            current = dict(phases[-1][1]) if phases else {}
            phases.append((tok[1], current))
            seen = {}
        elif kw == "at":
            if current is None:
                raise PlacementError(f"line {lineno}: 'at' outside a phase")
            if len(tok) != 4 or not (tok[1].isdigit() and tok[2].isdigit()):
                raise PlacementError(f"line {lineno}: expected 'at <row> <col> <label>'")
            cell = (int(tok[1]), int(tok[2]))
            if not (cell[0] < grid[0] and cell[1] < grid[1]):
                raise PlacementError(f"line {lineno}: cell {cell} outside the {grid[0]}x{grid[1]} grid")
            value = _parse_token(tok[3], base, lineno)
            if cell in seen and current.get(cell) != value:
                raise PlacementError(f"line {lineno}: overlap at {cell}, already set on line {seen[cell]}")
            seen[cell] = lineno
            if value is None:
                current.pop(cell, None)
            else:
                current[cell] = value
        else:
            raise PlacementError(f"line {lineno}: unknown statement {tok[0]!r}")
    if grid is None:
        raise PlacementError("missing 'grid' header")
    placement = Placement(grid, tuple(phases), base)
    if program is not None:
        unknown = sorted(q for q in placement.labels() if q >= program.num_qubits)
        if unknown:
            raise PlacementInfeasible(f"unknown labels {[q + base for q in unknown]}")
    return placement


def _token_str(tok, base: int) -> str:
    if tok == FILLER:
        return FILLER if base > 0 else "zero"
    if isinstance(tok, tuple):
        return f"{tok[0]}{tok[1] + base}"
    return str(tok + base)


def dump_placement(p: Placement) -> str:
    """Text form of a placement, listing only cells that change per phase."""
    lines = []
    if p.base:
        lines.append(f"base {p.base}")
    lines.append(f"grid {p.grid[0]} {p.grid[1]}")
    prev: dict = {}
    for name, snap in p.phases:
        lines.append(f"phase {name}")
        for cell in sorted(set(prev) | set(snap)):
            if prev.get(cell) != snap.get(cell):
                tok = snap.get(cell)
                lines.append(f"at {cell[0]} {cell[1]} {'free' if tok is None else _token_str(tok, p.base)}")
        prev = snap
    return "\n".join(lines) + "\n"


def _rotated(program: MultiTargetProgram) -> dict[int, str]:
    return {q: m.basis.value for q, m in program.measurements.items() if m.basis in ROTATED_BASES}


def naive_layout(program: MultiTargetProgram) -> Placement:
    """One column per multi-target CNOT and one row per qubit.

    Columns are initialised over the rows their group spans, split into one
    cell per member, and the cells of a qubit present in several columns
    are merged along its row.  Rotated-basis measurements are then shrunk
    to one cell, fed an injected state from the same row, and read out.
    A single column is widened to two (three with |A> measurements) so that
    injection sites exist.
    """
    n = program.num_qubits
    rotated = _rotated(program)
    ncols = len(program.mtcnots)
    need = 3 if "A" in rotated.values() else 2 if rotated else 1
    ncols = max(ncols, need)
    grid = (n, ncols)
    member_cols: dict[int, list[int]] = {q: [] for q in range(n)}
    phases: list[tuple[str, dict]] = []

    snap: dict = {}
    for j, g in enumerate(program.mtcnots):
        rows = [q for q in g.qubits]
        for r in range(min(rows), max(rows) + 1):
            snap[(r, j)] = g.control
        for q in g.qubits:
            member_cols[q].append(j)
    lone = [q for q in range(n) if not member_cols[q]]
    deferred = []
    for q in lone:
        free = [c for c in range(ncols) if (q, c) not in snap]
        if free:
            snap[(q, free[0])] = q
        else:
            deferred.append(q)
    phases.append(("init", dict(snap)))

    if program.mtcnots:
        snap = {cell: tok for cell, tok in snap.items() if not isinstance(tok, int) or tok in lone}
        for j, g in enumerate(program.mtcnots):
            for q in g.qubits:
                snap[(q, j)] = q
        phases.append(("split", dict(snap)))

    merged = False
    for q in range(n):
        cols = member_cols[q]
        if len(cols) > 1:
            for c in range(min(cols), max(cols) + 1):
                snap[(q, c)] = q
            merged = True
    # lone qubits whose row was covered by columns use a cell the split released
    for q in deferred:
        snap[(q, 0)] = q
    if merged or deferred:
        phases.append(("merge" if merged else "init-late", dict(snap)))

    if rotated:
        keep: dict[int, int] = {}
        shrunk = False
        for q in rotated:
            cols = sorted(c for (r, c), tok in snap.items() if r == q and tok == q)
            keep[q] = cols[0]
            if len(cols) > 1:
                for c in cols[1:]:
                    del snap[(q, c)]
                shrunk = True
        if shrunk:
            phases.append(("shrink", dict(snap)))
        site: dict[int, int] = {}
        for q, letter in rotated.items():
            site[q] = keep[q] + 1 if keep[q] + 1 < ncols else keep[q] - 1
            snap[(q, site[q])] = (letter, q)
        phases.append(("inject", dict(snap)))
        for q in rotated:
            snap[(q, site[q])] = q
        phases.append(("phase-merge", dict(snap)))
        needs_fix = [q for q, letter in rotated.items() if letter == "A"]
        if needs_fix:
            fix_site = {}
            for q in needs_fix:
                lo, hi = sorted((keep[q], site[q]))
                fix_site[q] = hi + 1 if hi + 1 < ncols else lo - 1
                snap[(q, fix_site[q])] = ("Y", q)
            phases.append(("correct-inject", dict(snap)))
            for q in needs_fix:
                snap[(q, fix_site[q])] = q
            phases.append(("correct-merge", dict(snap)))

    if program.measurements:
        snap = {cell: tok for cell, tok in snap.items() if tok not in program.measurements}
        phases.append(("measure", dict(snap)))
    return Placement(grid, tuple(phases), program.base)


# ---------------------------------------------------------------------------
# Emission


def _neighbors(cell: Cell):
    r, c = cell
    return ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))


def connected(cells) -> bool:
    cells = set(cells)
    if not cells:
        return True
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        for nb in _neighbors(stack.pop()):
            if nb in cells and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(cells)


def _components(cells) -> list[frozenset]:
    cells = set(cells)
    out = []
    while cells:
        start = min(cells)
        comp = {start}
        stack = [start]
        while stack:
            for nb in _neighbors(stack.pop()):
                if nb in cells and nb not in comp:
                    comp.add(nb)
                    stack.append(nb)
        cells -= comp
        out.append(frozenset(comp))
    return out


def adjacent(a, b) -> bool:
    b = set(b)
    return any(nb in b for cell in a for nb in _neighbors(cell))


def phase_merge_rules(program: MultiTargetProgram) -> list[CorrectionRule]:
    """Frame rules for the injected-state merges of rotated measurements.

    The merge of |Y> with outcome -1 needs X then Z; with |A> it needs X
    then a physical P, which is itself a |Y> merge needing X then Z.
    """
    rules = []
    for q, letter in _rotated(program).items():
        if letter == "Y":
            rules.append(CorrectionRule((merge_id(q),), "track_xz", q))
        else:
            rules.append(CorrectionRule((merge_id(q),), "track_x", q))
            rules.append(CorrectionRule((merge_id(q),), "apply_p", q))
            rules.append(CorrectionRule((fix_id(q),), "track_xz", q))
    return rules


class _Emitter:
    def __init__(self, program: MultiTargetProgram, placement: Placement, rules):
        self.p = program
        self.pl = placement
        self.rules = list(rules)
        self.groups = {g.control: g.targets for g in program.mtcnots}
        self.order = {g.control: i for i, g in enumerate(program.mtcnots)}
        self.owners: dict[int, list[int]] = {}
        for g in program.mtcnots:
            for t in g.targets:
                self.owners.setdefault(t, []).append(g.control)
        self.patches: dict[str, frozenset] = {}
        self.qubit: dict[str, int] = {}
        self.kind: dict[str, str] = {}  # column | piece | qubit | inject
        self.filler: set[Cell] = set()
        self.created: set[int] = set()
        self.merged_inject: set[int] = set()
        self.qubit_map: dict[str, int] = {}
        self.steps: list[list[SurgeryOp]] = []
        self.names: list[str] = []

    # -- helpers -----------------------------------------------------------
    def _new(self, pid: str, q: int, kind: str, cells) -> None:
        self.patches[pid] = frozenset(cells)
        self.qubit[pid] = q
        self.kind[pid] = kind
        self.qubit_map[pid] = q

    def _drop(self, pid: str) -> None:
        del self.patches[pid]

    def _owner(self, cell: Cell):
        for pid, cells in self.patches.items():
            if cell in cells:
                return pid
        return None

    def _apply_p_condition(self, q: int) -> tuple[str, ...]:
        for r in self.rules:
            if r.action == "apply_p" and r.qubit == q:
                return r.trigger
        raise PlacementError(f"correction phase for qubit {q + self.p.base} has no apply_p rule")

    def _qubit_pid(self, q: int) -> str:
        return str(q)

    def _piece_pid(self, t: int, control: int) -> str:
        return str(t) if len(self.owners.get(t, [])) <= 1 else f"{t}.{control}"

    def _err(self, name: str, msg: str) -> PlacementInfeasible:
        return PlacementInfeasible(f"phase {name}: {msg}")

    # -- one phase -----------------------------------------------------------
    def phase(self, name: str, snap: dict) -> None:
        R, C = self.pl.grid
        conditional = name.startswith("correct")
        ops: list[SurgeryOp] = []
        handled: set[Cell] = set()
        b = self.p.base

        by_token: dict = {}
        for cell, tok in snap.items():
            if not (0 <= cell[0] < R and 0 <= cell[1] < C):
                raise self._err(name, f"cell {cell} outside the grid")
            if tok != FILLER:
                by_token.setdefault(tok, set()).add(cell)
        # Patches split or vanished in this phase.
        consumed: set[str] = set()
        splits: list[tuple[int, list]] = []
        for pid in sorted(self.patches):
            cells = self.patches[pid]
            toks = {snap.get(c) for c in cells}
            if toks == {None} or toks == {FILLER} or toks <= {None, FILLER}:
                q = self.qubit[pid]
                if self.kind[pid] == "inject":
                    raise self._err(name, f"injected state for qubit {q + b} discarded without a merge")
                m = self.p.measurements.get(q)
                if m is None:
                    raise self._err(name, f"patch of output qubit {q + b} vanished")
                if any(self.qubit[o] == q for o in self.patches if o != pid):
                    raise self._err(name, f"qubit {q + b} measured while still in several pieces")
                basis = m.basis.value
                if m.basis in ROTATED_BASES:
                    if q not in self.merged_inject:
                        raise self._err(name, f"qubit {q + b} needs a {basis} injection before its readout")
                    basis = "X"
                ops.append(SurgeryOp("measure", pid, cells, basis=basis, records=measurement_id(q)))
                consumed.add(pid)
                handled |= cells
                continue
            if self.kind[pid] != "column":
                continue
            ctrl = self.qubit[pid]
            if toks == {ctrl}:
                continue
            members = {ctrl, *self.groups[ctrl]}
            pieces = []
            for tok in sorted(toks - {None, FILLER}, key=str):
                if tok not in members:
                    raise self._err(name, f"label {_token_str(tok, b)} is not in the group of {ctrl + b}")
                pieces += [(tok, comp) for comp in _components(c for c in cells if snap.get(c) == tok)]
            labels = [t for t, _ in pieces]
            if sorted(labels) != sorted(members):
                raise self._err(name, f"column {ctrl + b} must split into exactly {sorted(x + b for x in members)}")
            out = []
            for tok, comp in sorted(pieces, key=lambda tc: (tc[0] != ctrl, tc[0])):
                ppid = self._qubit_pid(ctrl) if tok == ctrl else self._piece_pid(tok, ctrl)
                out.append((ppid, comp))
            ops.append(SurgeryOp("smooth_split", pid, cells, pieces=[(pp, c) for pp, c in out]))
            consumed.add(pid)
            handled |= cells
            splits.append((ctrl, out))

        split_results = {comp: (ppid, ctrl) for ctrl, out in splits for ppid, comp in out}
        split_cells = set().union(*split_results) if split_results else set()
        comps = [
            (tok, comp)
            for tok, cells in sorted(by_token.items(), key=lambda kv: str(kv[0]))
            for comp in _components(cells - split_cells)
        ]

        for tok, comp in comps:
            sources = sorted({self._owner(c) for c in comp} - {None})
            for s in sources:
                if s in consumed:
                    raise self._err(name, f"cells of patch {display_id(s, b)} reused in the same step")
            if isinstance(tok, tuple):
                letter, q = tok
                if sources:
                    raise self._err(name, f"{letter} injection for {q + b} overlaps a patch")
                pid = f"{letter}{q}" + (".fix" if conditional else "")
                cond = self._apply_p_condition(q) if conditional else ()
                if letter not in ("Y", "A") or (conditional and letter != "Y"):
                    raise self._err(name, f"cannot inject {letter} here")
                ops.append(SurgeryOp("inject", pid, comp, basis=letter, condition=cond))
                self._new(pid, q, "inject", comp)
                handled |= comp
                continue
            q = tok
            if not sources:
                if q in self.created:
                    raise self._err(name, f"qubit {q + b} appears in unexpected cells {sorted(comp)}")
                if q in self.groups:
                    kind, op = "column", "init_plus"
                elif q in self.owners:
                    raise self._err(name, f"target {q + b} can only appear by splitting a column")
                else:
                    kind = "qubit"
                    op = "init_plus" if self.p.inits[q] is InitState.PLUS else "init_zero"
                pid = self._qubit_pid(q)
                ops.append(SurgeryOp(op, pid, comp))
                self._new(pid, q, kind, comp)
                self.created.add(q)
                handled |= comp
                continue
            foreign = [s for s in sources if self.qubit[s] != q]
            if foreign:
                raise self._err(name, f"qubit {q + b} overlaps patch {display_id(foreign[0], b)}")
            old = frozenset().union(*(self.patches[s] for s in sources))
            injected = [s for s in sources if self.kind[s] == "inject"]
            plain = [s for s in sources if self.kind[s] != "inject"]
            extra = comp - old
            if old - comp and len(sources) > 1:
                raise self._err(name, f"merge of {q + b} cannot also drop cells")
            for c in extra:
                owner = self._owner(c)
                if owner is not None:
                    raise self._err(name, f"cell {c} is occupied by {display_id(owner, b)}")
            if injected:
                if len(injected) != 1 or len(plain) != 1:
                    raise self._err(name, f"phase merge of {q + b} needs one qubit patch and one injected state")
                inj = injected[0]
                fix = inj.endswith(".fix")
                record = fix_id(q) if fix else merge_id(q)
                cond = self._apply_p_condition(q) if fix else ()
                target = plain[0]
                ops.append(
                    SurgeryOp("smooth_merge", target, comp, sources=(inj, target), records=record, condition=cond)
                )
                self._drop(inj)
                self.patches[target] = comp
                if not fix:
                    self.merged_inject.add(q)
                handled |= comp | old
                continue
            if len(sources) == 1:
                pid = sources[0]
                cur = self.patches[pid]
                if comp == cur:
                    continue
                if comp < cur:
                    kind = "shrink"
                elif comp > cur:
                    kind = "grow"
                else:
                    if not connected(comp | cur):
                        raise self._err(name, f"move of {q + b} jumps more than one cell")
                    kind = "move"
                ops.append(SurgeryOp(kind, pid, comp))
                self.patches[pid] = comp
                handled |= comp | cur
                continue
            # Several pieces of one qubit: rough merge.
            if not connected(comp):
                raise self._err(name, f"merge of {q + b} is not connected")
            main = self._qubit_pid(q)
            ranked = sorted(plain, key=lambda s: (s != main, self.order.get(self._piece_owner(s), -1), s))
            records = [join_id(q, self._piece_owner(s)) for s in ranked[1:]]
            ops.append(SurgeryOp("rough_merge", main, comp, sources=ranked, records=records))
            for s in plain:
                self._drop(s)
            self._new(main, q, "qubit", comp)
            handled |= comp | old

        # filler cells
        new_filler = {c for c, tok in snap.items() if tok == FILLER}
        fresh = new_filler - self.filler
        for comp in _components(fresh):
            for c in comp:
                owner = self._owner(c)
                if owner is not None and owner not in consumed:
                    raise self._err(name, f"zero region at {c} overlaps {display_id(owner, b)}")
            ops.append(SurgeryOp("init_zero", None, comp))
        self.filler = new_filler

        for pid in consumed:
            if pid in self.patches:
                self._drop(pid)
        for comp, (ppid, ctrl) in split_results.items():
            q = int(ppid.split(".")[0])
            self._new(ppid, q, "piece" if "." in ppid else "qubit", comp)
            self.created.add(q)

        # every occupied cell in the snapshot must now be explained
        for cell, tok in snap.items():
            if tok == FILLER:
                continue
            owner = self._owner(cell)
            if owner is None:
                raise self._err(name, f"cell {cell} labelled {_token_str(tok, b)} has no patch")

        ops = self._attach_corrections(ops)
        self.steps.append(ops)
        self.names.append(name)

    def _piece_owner(self, pid: str) -> int:
        if "." in pid:
            return int(pid.split(".")[1])
        q = self.qubit[pid]
        owners = self.owners.get(q, [])
        return owners[0] if owners else q

    def _attach_corrections(self, ops):
        out = []
        for op in ops:
            out.append(op)
            if not op.records:
                continue
            self.recorded.update(op.records)
            for rule in self.frame_rules:
                if rule in self.placed_rules:
                    continue
                if set(op.records) & set(rule.trigger) and set(rule.trigger) <= self.recorded:
                    out.append(SurgeryOp("correct", self._qubit_pid(rule.qubit), (), rule=rule))
                    self.placed_rules.add(rule)
        return out

    def run(self) -> SurgerySchedule:
        byproduct = []
        for t, owners in self.owners.items():
            for c in owners:
                byproduct.append(CorrectionRule((join_id(t, c),), "track_z", c))
        self.frame_rules = [r for r in self.rules if r.action != "apply_p"] + byproduct
        self.recorded: set[str] = set()
        self.placed_rules: set[CorrectionRule] = set()
        for name, snap in self.pl.phases:
            self.phase(name, snap)
        live = {self.qubit[p] for p in self.patches if self.kind[p] != "inject"}
        outputs = [q for q in range(self.p.num_qubits) if q not in self.p.measurements]
        missing = [q + self.p.base for q in outputs if q not in live]
        unmeasured = [q + self.p.base for q in self.p.measurements if q in live]
        if missing:
            raise PlacementInfeasible(f"placement never produces output qubits {missing}")
        if unmeasured:
            raise PlacementInfeasible(f"placement never measures qubits {unmeasured}")
        count = Counter(self.qubit[p] for p in self.patches if self.kind[p] != "inject")
        split_up = [q + self.p.base for q in outputs if count[q] > 1]
        if split_up:
            raise PlacementInfeasible(f"placement leaves qubits {split_up} in several unmerged patches")
        # byproduct rules of merges that never happen (single-piece targets) are dropped
        unplaced = [r for r in self.rules if r.action != "apply_p" and r not in self.placed_rules]
        if unplaced:
            raise PlacementInfeasible(f"corrections never triggered: {[r.to_json(self.p.base) for r in unplaced]}")
        corrections = tuple(self.rules) + tuple(r for r in self.frame_rules if r in self.placed_rules and r not in self.rules)
        steps = [tuple(s) for s in self.steps if s]
        names = [n for s, n in zip(self.steps, self.names) if s]
        return SurgerySchedule(
            grid=self.pl.grid,
            steps=tuple(steps),
            qubit_map=dict(self.qubit_map),
            corrections=corrections,
            phases=tuple(names),
            base=self.p.base,
        )


def emit_schedule(
    program: MultiTargetProgram,
    placement: Placement | None = None,
    corrections=(),
) -> SurgerySchedule:
    """Lower ``program`` to a schedule following ``placement`` (naive if None).

    ``corrections`` are extra rules, typically from :func:`invert_icm`.
    The phase-merge rules of rotated measurements and the Z fix-ups of
    rough merges with outcome -1 are added here.
    """
    if placement is None:
        placement = naive_layout(program)
    if placement.base != program.base and placement.labels():
        raise PlacementError(f"placement uses base {placement.base}, program uses base {program.base}")
    unknown = sorted(q for q in placement.labels() if q >= program.num_qubits)
    if unknown:
        raise PlacementInfeasible(f"unknown labels {[q + program.base for q in unknown]}")
    rules = list(corrections) + [r for r in phase_merge_rules(program) if r not in corrections]
    return _Emitter(program, placement, rules).run()


# ---------------------------------------------------------------------------
# General multi-target CNOT


def expand_general_cnot(num_targets: int) -> SurgerySchedule:
    """Ancilla-based multi-target CNOT on an arbitrary control.

    Patch ``C`` sits at (0, 0), the ancilla column ``H`` at column 1 and
    target ``T<i>`` at (i, 2).  Steps: initialise the ancilla column to
    |+>, smooth-merge it with the control, smooth-split it into the control
    and ``N`` ancillas, then rough-merge each ancilla into its target.
    The qubit map sends ``C`` to 0 and ``T<i>`` to ``i``.
    """
    n = num_targets
    if n < 1:
        raise ValueError("need at least one target")
    col = tuple((r, 1) for r in range(n + 1))
    ctrl = ((0, 0),)
    targets = [(f"T{i}", ((i, 2),)) for i in range(1, n + 1)]
    merged = ctrl + col
    steps = [
        (SurgeryOp("init_plus", "H", col),),
        (SurgeryOp("smooth_merge", "C", merged, sources=("C", "H"), records="mC"),),
        (
            SurgeryOp(
                "smooth_split",
                "C",
                merged,
                pieces=[("C", ctrl)] + [(f"H{i}", ((i, 1),)) for i in range(1, n + 1)],
            ),
        ),
        tuple(
            SurgeryOp("rough_merge", f"T{i}", ((i, 1), (i, 2)), sources=(f"T{i}", f"H{i}"), records=f"mT{i}")
            for i in range(1, n + 1)
        ),
    ]
    qmap = {"C": 0, "H": 0, **{f"H{i}": 0 for i in range(1, n + 1)}, **{f"T{i}": i for i in range(1, n + 1)}}
    return SurgerySchedule(
        grid=(n + 1, 3),
        steps=tuple(steps),
        qubit_map=qmap,
        phases=("init", "merge", "split", "merge"),
        inputs=(("C", ctrl), *targets),
    )


# ---------------------------------------------------------------------------
# Validation


def _touched(op: SurgeryOp, occ_cells: dict[str, frozenset]) -> set:
    cells = set(op.cells)
    if op.kind == "correct":
        return cells
    for pid in (op.patch, *op.sources):
        if pid is not None and pid in occ_cells:
            cells |= occ_cells[pid]
    return cells


def validate_schedule(s: SurgerySchedule) -> list[str]:
    """Every geometric and causal problem of ``s``; empty means valid."""
    R, C = s.grid
    problems: list[str] = []
    b = s.base
    patches: dict[str, frozenset] = {pid: frozenset(cs) for pid, cs in s.inputs}
    filler: set[Cell] = set()
    recorded: set[str] = set()

    def say(t, msg):
        problems.append(f"step {t + 1}: {msg}")

    def owner(cell):
        for pid, cs in patches.items():
            if cell in cs:
                return pid
        return None

    def need_free(t, cells, what):
        for c in cells:
            o = owner(c)
            if o is not None:
                say(t, f"{what} needs cell {c} but it holds {display_id(o, b)}")

    for t, step in enumerate(s.steps):
        claimed: dict[Cell, int] = {}
        for i, op in enumerate(step):
            for c in _touched(op, patches):
                if c in claimed:
                    say(t, f"cell {c} used by two ops")
                claimed[c] = i
        step_records: set[str] = set()
        for op in step:
            pid = display_id(op.patch, b) if op.patch else "zero region"
            for c in op.cells:
                if not (0 <= c[0] < R and 0 <= c[1] < C):
                    say(t, f"{op.kind} of {pid} leaves the grid at {c}")
            for trig in op.condition:
                if trig not in recorded:
                    say(t, f"{op.kind} of {pid} is conditioned on {display_id(trig, b)} which is not yet known")
            k = op.kind
            if k in ("init_plus", "init_zero", "inject"):
                need_free(t, op.cells, f"{k} of {pid}")
                if not connected(op.cells):
                    say(t, f"{k} of {pid} is not connected")
                if k == "init_zero" and op.patch is None:
                    filler |= set(op.cells)
                    continue
                if op.patch in patches:
                    say(t, f"{pid} created twice")
                if k == "inject":
                    q = s.qubit_map.get(op.patch)
                    users = [p for p, cs in patches.items() if s.qubit_map.get(p) == q and p != op.patch]
                    if not any(adjacent(op.cells, patches[u]) for u in users):
                        say(t, f"injected {pid} is not adjacent to its qubit")
                filler -= set(op.cells)
                patches[op.patch] = frozenset(op.cells)
            elif k in ("smooth_split", "rough_split"):
                if op.patch not in patches:
                    say(t, f"split of unknown patch {pid}")
                    continue
                src = patches.pop(op.patch)
                seen: set = set()
                for ppid, cs in op.pieces:
                    cs = frozenset(cs)
                    if not cs <= src:
                        say(t, f"piece {display_id(ppid, b)} lies outside {pid}")
                    if cs & seen:
                        say(t, f"pieces of {pid} overlap")
                    if not connected(cs):
                        say(t, f"piece {display_id(ppid, b)} is not connected")
                    seen |= cs
                    patches[ppid] = cs
            elif k in ("rough_merge", "smooth_merge"):
                missing = [p for p in op.sources if p not in patches]
                if missing or len(op.sources) < 2:
                    say(t, f"merge into {pid} needs two existing patches")
                    continue
                old = frozenset().union(*(patches[p] for p in op.sources))
                if not old <= set(op.cells):
                    say(t, f"merge into {pid} drops cells of its sources")
                for p in op.sources:
                    del patches[p]
                need_free(t, set(op.cells) - old, f"merge into {pid}")
                if not connected(op.cells):
                    say(t, f"merge into {pid} joins patches that are not adjacent")
                filler -= set(op.cells)
                patches[op.patch] = frozenset(op.cells)
            elif k in ("move", "shrink", "grow"):
                if op.patch not in patches:
                    say(t, f"{k} of unknown patch {pid}")
                    continue
                cur = patches.pop(op.patch)
                new = frozenset(op.cells)
                if k == "shrink" and not new < cur:
                    say(t, f"shrink of {pid} is not a shrink")
                if k == "grow" and not new > cur:
                    say(t, f"grow of {pid} is not a grow")
                if k == "move" and not connected(new | cur):
                    say(t, f"move of {pid} jumps more than one cell")
                need_free(t, new - cur, f"{k} of {pid}")
                if not connected(new):
                    say(t, f"{pid} is not connected after {k}")
                filler -= set(new)
                patches[op.patch] = new
            elif k == "measure":
                if op.patch not in patches:
                    say(t, f"measurement of unknown patch {pid}")
                    continue
                if patches[op.patch] != frozenset(op.cells):
                    say(t, f"measurement of {pid} lists the wrong cells")
                del patches[op.patch]
            elif k == "correct":
                if op.rule is None:
                    say(t, "correction without a rule")
                    continue
                known = recorded | step_records
                for trig in op.rule.trigger:
                    if trig not in known:
                        say(t, f"correction on {display_id(trig, b)} before its trigger")
            step_records.update(op.records)
        recorded |= step_records
    for rule in s.corrections:
        for trig in rule.trigger:
            if trig not in recorded:
                problems.append(f"correction rule refers to {display_id(trig, b)}, which no op records")
    return problems


# ---------------------------------------------------------------------------
# Interpretation


class _Tableau:
    def __init__(self):
        self.s = stab.StabilizerMatrix.empty(0)

    def add(self, letter: str) -> None:
        if letter == "A":
            raise NonStabilizerState("|A> cannot be tracked by the stabilizer tableau")
        self.s = stab.tensor(self.s, stab.StabilizerMatrix.product_state(letter))

    def split(self, col: int, smooth: bool) -> None:
        self.s = (stab.smooth_split if smooth else stab.rough_split)(self.s, col)

    def merge(self, c1: int, c2: int, smooth: bool, bit: int) -> None:
        fn = stab.smooth_merge if smooth else stab.rough_merge
        self.s, _ = fn(self.s, c1, c2, forced=1 - 2 * bit)

    def measure(self, col: int, basis: str, bit: int) -> None:
        self.s = stab.measure_logical(self.s, col, basis, forced=1 - 2 * bit)[0]

    def pauli(self, col: int, letters: str) -> None:
        for letter in letters:
            self.s = stab.apply_pauli(self.s, {col: letter})


class _Dense:
    def __init__(self, kets=()):
        self.psi = sv.product(list(kets))

    def add(self, letter: str) -> None:
        self.psi = sv.insert_qubit(self.psi, sv.INIT_KETS[letter], self.psi.ndim)

    def add_ket(self, ket) -> None:
        self.psi = sv.insert_qubit(self.psi, ket, self.psi.ndim)

    def split(self, col: int, smooth: bool) -> None:
        self.psi = (sv.smooth_split if smooth else sv.rough_split)(self.psi, col)

    def merge(self, c1: int, c2: int, smooth: bool, bit: int) -> None:
        fn = sv.smooth_merge if smooth else sv.rough_merge
        self.psi, _ = fn(self.psi, c1, c2, 1 - 2 * bit)

    def measure(self, col: int, basis: str, bit: int) -> None:
        self.psi, _ = sv.measure(self.psi, col, basis, bit)

    def pauli(self, col: int, letters: str) -> None:
        for letter in letters:
            self.psi = sv.apply_1q(self.psi, sv.X if letter == "X" else sv.Z, col)


_FRAME = {"track_x": "X", "track_z": "Z", "track_xz": "XZ"}


@dataclass
class Replay:
    """Result of replaying a schedule: the state and which patch each column is."""

    backend: object
    columns: list[str]
    outcomes: dict[str, int] = field(default_factory=dict)


def _replay(s: SurgerySchedule, backend, branch, stop_before, columns) -> Replay:
    branch = dict(branch or {})
    cols = list(columns)
    outcomes: dict[str, int] = {}

    def choose(ref: str, attempt):
        want = branch.get(ref, 0)
        try:
            attempt(want)
            return want
        except stab.ZeroProbabilityBranch:
            if ref in branch:
                raise
        attempt(1 - want)
        return 1 - want

    for t, step in enumerate(s.steps):
        if stop_before is not None and s.phases[t] == stop_before:
            break
        for op in step:
            if op.condition and sum(outcomes.get(c, 0) for c in op.condition) % 2 == 0:
                continue
            k = op.kind
            if k == "init_zero" and op.patch is None:
                continue
            if k in ("init_plus", "init_zero", "inject"):
                letter = {"init_plus": "+", "init_zero": "0"}.get(k, op.basis)
                backend.add(letter)
                cols.append(op.patch)
            elif k in ("smooth_split", "rough_split"):
                col = cols.index(op.patch)
                first, *rest = op.pieces
                cols[col] = first[0]
                for ppid, _ in rest:
                    backend.split(col, k == "smooth_split")
                    cols.insert(col + 1, ppid)
            elif k in ("rough_merge", "smooth_merge"):
                survivor, *others = op.sources
                recs = list(op.records) + [None] * len(others)
                for other, ref in zip(others, recs):
                    c1, c2 = cols.index(survivor), cols.index(other)
                    ref = ref or f"{k}:{other}"
                    outcomes[ref] = choose(
                        ref, lambda bit: backend.merge(c1, c2, k == "smooth_merge", bit)
                    )
                    cols.pop(c2)
                cols[cols.index(survivor)] = op.patch
            elif k == "measure":
                col = cols.index(op.patch)
                ref = op.records[0] if op.records else f"measure:{op.patch}"
                outcomes[ref] = choose(ref, lambda bit: backend.measure(col, op.basis, bit))
                cols.pop(col)
            elif k == "correct":
                rule = op.rule
                if sum(outcomes.get(c, 0) for c in rule.trigger) % 2 and op.patch in cols:
                    backend.pauli(cols.index(op.patch), _FRAME[rule.action])
    return Replay(backend, cols, outcomes)


def _order(s: SurgerySchedule, cols: list[str]) -> list[int]:
    return sorted(range(len(cols)), key=lambda i: (s.qubit_map.get(cols[i], -1), cols[i]))


def interpret_schedule(
    s: SurgerySchedule, branch: dict[str, int] | None = None, stop_before: str | None = None
) -> stab.StabilizerMatrix:
    """Replay ``s`` on the stabilizer tableau.

    ``branch`` maps record ids to outcome bits; unlisted random outcomes
    take bit 0 (eigenvalue +1).  Replay halts at the first timestep whose
    phase is ``stop_before``.  Columns of the result are the surviving
    patches ordered by the qubit they encode.  Input patches start in |+>.
    """
    tab = _Tableau()
    for _ in s.inputs:
        tab.add("+")
    rep = _replay(s, tab, branch, stop_before, [p for p, _ in s.inputs])
    return stab.permute(tab.s, _order(s, rep.columns))


def schedule_statevector(
    s: SurgerySchedule,
    branch: dict[str, int] | None = None,
    inputs: dict[str, np.ndarray] | None = None,
    stop_before: str | None = None,
) -> np.ndarray:
    """Dense-oracle replay; same conventions as :func:`interpret_schedule`.

    ``inputs`` gives a ket for each input patch (default |+>).
    """
    inputs = inputs or {}
    dense = _Dense([inputs.get(p, sv.PLUS) for p, _ in s.inputs])
    rep = _replay(s, dense, branch, stop_before, [p for p, _ in s.inputs])
    order = _order(s, rep.columns)
    return np.transpose(dense.psi, order) if order else dense.psi


def _live_after(s: SurgerySchedule, upto: int) -> list[str]:
    cols = [p for p, _ in s.inputs]
    for step in s.steps[:upto]:
        for op in step:
            if op.condition:
                continue
            if op.kind in ("init_plus", "init_zero", "inject") and op.patch is not None:
                cols.append(op.patch)
            elif op.kind in ("smooth_split", "rough_split"):
                i = cols.index(op.patch)
                cols[i : i + 1] = [p for p, _ in op.pieces]
            elif op.kind in ("rough_merge", "smooth_merge"):
                for other in op.sources[1:]:
                    cols.remove(other)
                cols[cols.index(op.sources[0])] = op.patch
            elif op.kind == "measure":
                cols.remove(op.patch)
    return cols


def live_patches(s: SurgerySchedule, stop_before: str | None = None) -> list[str]:
    """Patch ids alive at the stopping point, in result-column order."""
    upto = s.phases.index(stop_before) if stop_before in s.phases else len(s.steps)
    cols = _live_after(s, upto)
    return [cols[i] for i in _order(s, cols)]


def max_live_patches(s: SurgerySchedule) -> int:
    """Peak number of simultaneously live logical patches."""
    return max(len(_live_after(s, t)) for t in range(len(s.steps) + 1))


# ---------------------------------------------------------------------------
# Geometry over time


@dataclass(frozen=True)
class Frame:
    """Grid contents after one timestep.

    ``patches`` maps live patch ids to their cells, ``filler`` holds
    zero-initialized cells not yet reclaimed, and ``touched`` every cell an
    op of the step used, including cells it released.
    """

    phase: str
    patches: dict
    filler: frozenset
    touched: frozenset


def frames(s: SurgerySchedule) -> list[Frame]:
    """One :class:`Frame` per timestep; conditional ops are assumed to run."""
    patches: dict[str, frozenset] = {pid: frozenset(cs) for pid, cs in s.inputs}
    filler: set[Cell] = set()
    out = []
    for name, step in zip(s.phases, s.steps):
        touched: set[Cell] = set()
        for op in step:
            touched |= set(op.cells)
            for pid in (op.patch, *op.sources):
                if pid in patches:
                    touched |= patches[pid]
            k = op.kind
            if k == "init_zero" and op.patch is None:
                filler |= set(op.cells)
            elif k in ("smooth_split", "rough_split"):
                patches.pop(op.patch, None)
                for ppid, cs in op.pieces:
                    patches[ppid] = frozenset(cs)
            elif k in ("rough_merge", "smooth_merge"):
                for p in op.sources:
                    patches.pop(p, None)
                patches[op.patch] = frozenset(op.cells)
            elif k == "measure":
                patches.pop(op.patch, None)
            elif k != "correct" and op.patch is not None:
                patches[op.patch] = frozenset(op.cells)
        held = set().union(*patches.values()) if patches else set()
        filler -= held
        out.append(Frame(name, dict(patches), frozenset(filler), frozenset(touched)))
    return out
