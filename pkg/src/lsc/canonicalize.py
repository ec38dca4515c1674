"""Rewrite an inverted-ICM CNOT block into multi-target CNOTs with |+> controls.

Three elimination rules drive the rewrite:

1. a CNOT whose target is an untouched |+> does nothing;
2. a CNOT whose control is an untouched |0> does nothing;
3. two equal CNOTs on the same pair cancel.

Gates are walked to the front with the CNOT commutation identities until
one of the first two rules applies.  Passes run in that order, leftmost
gate first, then a global pair cancellation.  Equal pairs that can meet
through free swaps are also cancelled after every deletion, which keeps
the gate list from growing.  The result has every control
initialized to |+> and never targeted, so all remaining gates commute.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import CNOT, Circuit, Form, InitState, Measurement, validate


class RewriteLimitExceeded(RuntimeError):
    """The rewrite ran past its step budget, which means a bug here."""


class NonCommutingPair(ValueError):
    pass


@dataclass(frozen=True)
class MultiTargetProgram:
    num_qubits: int
    inits: tuple[InitState, ...]
    mtcnots: tuple[CNOT, ...]
    measurements: dict[int, Measurement] = field(default_factory=dict)
    base: int = 0

    @property
    def controls(self) -> list[int]:
        return [g.control for g in self.mtcnots]

    def groups(self) -> list[tuple[int, ...]]:
        """Qubits of each multi-target CNOT, control first."""
        return [g.qubits for g in self.mtcnots]

    def violations(self) -> list[str]:
        out = []
        targeted = {t for g in self.mtcnots for t in g.targets}
        seen = set()
        for g in self.mtcnots:
            if self.inits[g.control] is not InitState.PLUS:
                out.append(f"control {g.control} not initialized to |+>")
            if g.control in targeted:
                out.append(f"control {g.control} is targeted")
            if g.control in seen:
                out.append(f"control {g.control} used by two multi-target CNOTs")
            seen.add(g.control)
        for q, s in enumerate(self.inits):
            if s not in (InitState.ZERO, InitState.PLUS):
                out.append(f"qubit {q} has rotated init {s.value}")
        return out

    def to_circuit(self) -> Circuit:
        return Circuit(
            num_qubits=self.num_qubits,
            inits=self.inits,
            gates=self.mtcnots,
            measurements=self.measurements,
            base=self.base,
        )


def commute(left: CNOT, right: CNOT) -> list[CNOT]:
    """Reorder two adjacent single-target CNOTs so ``right`` comes first.

    Returns the gates in time order.  Pairs sharing only a control, only a
    target, or nothing swap freely.  When one gate's target is the other's
    control an extra CNOT from the outer control to the outer target is
    placed between them::

        [a->b, b->c]  ==  [b->c, a->c, a->b]
        [b->c, a->b]  ==  [a->b, a->c, b->c]
    """
    if len(left.targets) != 1 or len(right.targets) != 1:
        raise ValueError("commute expects single-target CNOTs")
    c1, t1 = left.control, left.targets[0]
    c2, t2 = right.control, right.targets[0]
    if t1 == c2 and c1 == t2:
        raise NonCommutingPair(f"{left} and {right} act on the same pair in opposite directions")
    if t1 == c2:
        return [right, CNOT(c1, (t2,)), left]
    if c1 == t2:
        return [right, CNOT(c2, (t1,)), left]
    return [right, left]


def _blocks(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """True when ``a`` and ``b`` cannot be swapped without a new gate."""
    return a[1] == b[0] or a[0] == b[1]


class _Rewriter:
    def __init__(self, c: Circuit, max_steps: int | None):
        self.inits = list(c.inits)
        self.gates: list[tuple[int, int]] = [(g.control, g.targets[0]) for g in c.flat_gates()]
        n = len(self.gates)
        self.budget = max_steps if max_steps is not None else max(16, 4 * n * n)
        self.steps = 0

    def _tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise RewriteLimitExceeded(f"rewrite exceeded {self.budget} steps")

    def _touched_before(self, j: int, q: int) -> bool:
        return any(q in g for g in self.gates[:j])

    def _absorb_swap(self, j: int) -> None:
        # [t->c, c->t] == [SWAP, t->c]; the SWAP moves to the very front by
        # relabelling the earlier gates and exchanging the two inits.
        t, c = self.gates[j - 1]
        relabel = {t: c, c: t}
        self.gates[: j - 1] = [(relabel.get(a, a), relabel.get(b, b)) for a, b in self.gates[: j - 1]]
        self.inits[t], self.inits[c] = self.inits[c], self.inits[t]
        self.gates[j - 1 : j + 1] = [(t, c)]

    def _walk_and_delete(self, j: int, pivot: int) -> None:
        """Move gate ``j`` left until qubit ``pivot`` of it is untouched, then drop it.

        Only rewrites that change the gate list count against the budget;
        swapping two gates on disjoint or compatible qubits is free.
        """
        while True:
            g = self.gates[j]
            q = g[pivot]
            if not self._touched_before(j, q):
                self._tick()
                del self.gates[j]
                return
            h = self.gates[j - 1]
            if h == g:
                self._tick()
                del self.gates[j - 1 : j + 1]
                return
            if h[0] == g[1] and h[1] == g[0]:
                self._tick()
                self._absorb_swap(j)
                j -= 1
                continue
            seq = commute(CNOT(h[0], (h[1],)), CNOT(g[0], (g[1],)))
            if len(seq) == 3:
                self._tick()
            self.gates[j - 1 : j + 1] = [(s.control, s.targets[0]) for s in seq]
            j -= 1

    def _cancel_pairs(self) -> None:
        """Rule 3 wherever two equal gates can meet through free swaps."""
        i = 0
        while i < len(self.gates):
            g = self.gates[i]
            for k in range(i + 1, len(self.gates)):
                h = self.gates[k]
                if h == g:
                    self._tick()
                    del self.gates[k]
                    del self.gates[i]
                    i = max(i - 1, 0) - 1
                    break
                if _blocks(g, h):
                    break
            i += 1

    def eliminate(self, pivot: int, state: InitState) -> None:
        while True:
            hits = [i for i, g in enumerate(self.gates) if self.inits[g[pivot]] is state]
            if not hits:
                return
            self._walk_and_delete(hits[0], pivot)
            self._cancel_pairs()

    def cleanup(self) -> None:
        for i, a in enumerate(self.gates):
            for b in self.gates[i + 1 :]:
                if len(commute(CNOT(a[0], (a[1],)), CNOT(b[0], (b[1],)))) != 2:
                    raise RewriteLimitExceeded(f"gates {a} and {b} do not commute after elimination")
        count: dict[tuple[int, int], int] = {}
        for g in self.gates:
            count[g] = count.get(g, 0) + 1
        kept, done = [], set()
        for g in self.gates:
            if g in done:
                continue
            done.add(g)
            if count[g] % 2:
                kept.append(g)
        self.gates = kept


def push_and_eliminate(c: Circuit, max_steps: int | None = None) -> Circuit:
    """Apply the three elimination rules until none fires.

    Returns an equivalent circuit of single-target CNOTs.  Inits may be
    exchanged between two qubits when a SWAP is absorbed at the front; the
    prepared state on every qubit label is unchanged.
    """
    problems = validate(c, Form.INVERTED_ICM)
    if problems:
        raise ValueError("not a valid inverted-ICM circuit: " + "; ".join(problems))
    rw = _Rewriter(c, max_steps)
    rw.eliminate(1, InitState.PLUS)
    rw.eliminate(0, InitState.ZERO)
    rw.cleanup()
    return Circuit(
        num_qubits=c.num_qubits,
        inits=tuple(rw.inits),
        gates=tuple(CNOT(a, (b,)) for a, b in rw.gates),
        measurements=c.measurements,
        base=c.base,
    )


def canonicalize(c: Circuit, max_steps: int | None = None) -> MultiTargetProgram:
    flat = push_and_eliminate(c, max_steps)
    grouped: dict[int, list[int]] = {}
    for g in flat.gates:
        grouped.setdefault(g.control, []).append(g.targets[0])
    prog = MultiTargetProgram(
        num_qubits=c.num_qubits,
        inits=flat.inits,
        mtcnots=tuple(CNOT(ctrl, tuple(ts)) for ctrl, ts in grouped.items()),
        measurements=c.measurements,
        base=c.base,
    )
    bad = prog.violations()
    if bad:
        raise RewriteLimitExceeded("canonical program violates invariants: " + "; ".join(bad))
    return prog
