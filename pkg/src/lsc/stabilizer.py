"""Signed stabilizer matrices and the merge/split rules of lattice surgery.

Rows are Hermitian Pauli strings stored as X/Z bit matrices plus a sign bit
(``x=z=1`` is a Y).  Every operation returns a new matrix.  Merge and split
act on *logical* qubits, i.e. whole patches:

* smooth split  ``a|0> + b|1> -> a|00> + b|11>``  (new row ``ZZ``)
* rough split   ``a|+> + b|-> -> a|++> + b|-->``  (new row ``XX``)
* rough merge   measures ``X X`` and decodes the second qubit with ``<0|``
* smooth merge  measures ``Z Z`` and decodes the second qubit with ``<+|``

Merge outcomes are eigenvalues (+1/-1), never bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InconsistentStabilizerError(ValueError):
    """Rows anticommute or are not a valid pure stabilizer state."""


class ZeroProbabilityBranch(ValueError):
    """A forced measurement outcome has probability zero."""


@dataclass(frozen=True)
class MergeOutcome:
    eigenvalue: int
    deterministic: bool


def _g(x1, z1, x2, z2):
    # Exponent of i picked up when multiplying single-qubit Paulis.
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    return np.where(
        (x1 == 0) & (z1 == 0),
        0,
        np.where(
            (x1 == 1) & (z1 == 1),
            z2 - x2,
            np.where(x1 == 1, z2 * (2 * x2 - 1), x2 * (1 - 2 * z2)),
        ),
    )


def pauli_product(xa, za, ra, xb, zb, rb):
    """Product ``P_a P_b`` of two commuting signed Paulis."""
    total = 2 * int(ra) + 2 * int(rb) + int(_g(xa, za, xb, zb).sum())
    total %= 4
    if total % 2:
        raise InconsistentStabilizerError("product of anticommuting Paulis")
    return xa ^ xb, za ^ zb, total // 2


def _commutes(xa, za, xb, zb) -> bool:
    return int((xa & zb).sum() + (za & xb).sum()) % 2 == 0


class StabilizerMatrix:
    """Stabilizer generators over ``n`` logical qubits."""

    __slots__ = ("x", "z", "r")

    def __init__(self, x, z, r):
        self.x = np.array(x, dtype=np.uint8, ndmin=2)
        self.z = np.array(z, dtype=np.uint8, ndmin=2)
        self.r = np.array(r, dtype=np.uint8, ndmin=1)
        if self.x.shape != self.z.shape or self.x.shape[0] != self.r.shape[0]:
            raise ValueError("inconsistent stabilizer array shapes")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def num_rows(self) -> int:
        return self.x.shape[0]

    def copy(self) -> StabilizerMatrix:
        return StabilizerMatrix(self.x.copy(), self.z.copy(), self.r.copy())

    @classmethod
    def empty(cls, n: int = 0) -> StabilizerMatrix:
        return cls(np.zeros((0, n), np.uint8), np.zeros((0, n), np.uint8), np.zeros(0, np.uint8))

    @classmethod
    def from_strings(cls, rows: list[str]) -> StabilizerMatrix:
        """Build from strings such as ``"+XXI"``, ``"-ZIZ"`` or ``"IXY"``."""
        if not rows:
            return cls.empty()
        xs, zs, rs = [], [], []
        for s in rows:
            sign = 0
            if s[0] in "+-":
                sign = int(s[0] == "-")
                s = s[1:]
            xs.append([c in "XY" for c in s])
            zs.append([c in "ZY" for c in s])
            rs.append(sign)
        return cls(np.array(xs, np.uint8), np.array(zs, np.uint8), np.array(rs, np.uint8))

    @classmethod
    def product_state(cls, letters: str) -> StabilizerMatrix:
        """Single-qubit stabilizers per qubit: '+' -> X, '0' -> Z, 'Y' -> Y."""
        n = len(letters)
        pick = {"+": "X", "0": "Z", "Y": "Y", "X": "X", "Z": "Z"}
        rows = []
        for q, c in enumerate(letters):
            row = ["I"] * n
            row[q] = pick[c]
            rows.append("+" + "".join(row))
        return cls.from_strings(rows) if rows else cls.empty()

    def row_string(self, i: int) -> str:
        letters = "".join(
            "IXZY"[int(self.x[i, q]) + 2 * int(self.z[i, q])] for q in range(self.n)
        )
        return ("-" if self.r[i] else "+") + letters

    def to_strings(self) -> list[str]:
        return [self.row_string(i) for i in range(self.num_rows)]

    def __repr__(self) -> str:
        return f"StabilizerMatrix({self.to_strings()})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, StabilizerMatrix):
            return NotImplemented
        return (
            self.x.shape == other.x.shape
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r, other.r)
        )

    def _rowsum(self, h: int, i: int) -> None:
        # row h <- row i * row h
        x, z, r = pauli_product(self.x[i], self.z[i], self.r[i], self.x[h], self.z[h], self.r[h])
        self.x[h], self.z[h], self.r[h] = x, z, r

    def check_commuting(self) -> None:
        sym = (self.x.astype(np.int64) @ self.z.T.astype(np.int64) + self.z.astype(np.int64) @ self.x.T.astype(np.int64)) % 2
        if sym.any():
            i, j = map(int, np.argwhere(sym)[0])
            raise InconsistentStabilizerError(
                f"rows {self.row_string(i)} and {self.row_string(j)} anticommute"
            )


def format_grid(s: StabilizerMatrix) -> str:
    """Grid notation: one generator per line, sign then one letter per qubit."""
    return "\n".join(f"{row[0]} {' '.join(row[1:])}" for row in s.to_strings())


# ---------------------------------------------------------------------------
# Clifford action used for the direct (gate-level) semantics


def apply_cnot(s: StabilizerMatrix, control: int, target: int) -> StabilizerMatrix:
    out = s.copy()
    xc, zt = out.x[:, control], out.z[:, target]
    xt, zc = out.x[:, target], out.z[:, control]
    out.r ^= xc & zt & (xt ^ zc ^ 1)
    out.x[:, target] ^= xc
    out.z[:, control] ^= zt
    return out


# ---------------------------------------------------------------------------
# Canonical form


def canonical_form(s: StabilizerMatrix) -> StabilizerMatrix:
    """Reduced row-echelon form over GF(2), X block first, signs propagated.

    Two pure states are equal iff their canonical forms are identical.
    """
    s.check_commuting()
    out = s.copy()
    n = out.n
    cols = [(out.x, q) for q in range(n)] + [(out.z, q) for q in range(n)]
    row = 0
    for block, q in cols:
        if row == out.num_rows:
            break
        hits = np.nonzero(block[row:, q])[0]
        if len(hits) == 0:
            continue
        p = row + int(hits[0])
        if p != row:
            for arr in (out.x, out.z, out.r):
                arr[[row, p]] = arr[[p, row]]
        for h in range(out.num_rows):
            if h != row and block[h, q]:
                out._rowsum(h, row)
        row += 1
    keep = (out.x.any(axis=1) | out.z.any(axis=1))
    if (~keep & (out.r == 1)).any():
        raise InconsistentStabilizerError("-I generated by the rows")
    return StabilizerMatrix(out.x[keep], out.z[keep], out.r[keep])


def same_state(a: StabilizerMatrix, b: StabilizerMatrix) -> bool:
    return canonical_form(a) == canonical_form(b)


def rank(s: StabilizerMatrix) -> int:
    return canonical_form(s).num_rows


# ---------------------------------------------------------------------------
# Measurement


def _pauli_vectors(n: int, letters: dict[int, str]):
    x = np.zeros(n, np.uint8)
    z = np.zeros(n, np.uint8)
    for q, c in letters.items():
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")
        x[q] = c in "XY"
        z[q] = c in "ZY"
    return x, z


def _express(s: StabilizerMatrix, x, z) -> tuple[int, list[int]]:
    """Sign bit of Pauli (x, z) and the rows whose product it is."""
    work = np.concatenate([s.x, s.z], axis=1).astype(np.uint8)
    target = np.concatenate([x, z]).astype(np.uint8)
    m = work.shape[0]
    # Track which original rows make up each reduced row.
    combo = np.eye(m, dtype=np.uint8)
    pivots = []
    row = 0
    for col in range(work.shape[1]):
        hits = np.nonzero(work[row:, col])[0] if row < m else []
        if len(hits) == 0:
            continue
        p = row + int(hits[0])
        work[[row, p]] = work[[p, row]]
        combo[[row, p]] = combo[[p, row]]
        for h in range(m):
            if h != row and work[h, col]:
                work[h] ^= work[row]
                combo[h] ^= combo[row]
        pivots.append(col)
        row += 1
    use = np.zeros(m, np.uint8)
    rem = target.copy()
    for i, col in enumerate(pivots):
        if rem[col]:
            rem ^= work[i]
            use ^= combo[i]
    if rem.any():
        raise InconsistentStabilizerError("operator not in the stabilizer group")
    px = np.zeros(s.n, np.uint8)
    pz = np.zeros(s.n, np.uint8)
    pr = 0
    for i in np.nonzero(use)[0]:
        px, pz, pr = pauli_product(px, pz, pr, s.x[i], s.z[i], s.r[i])
    return pr, [int(i) for i in np.nonzero(use)[0]]


def _resolve_rng(rng):
    if rng is None:
        return np.random.default_rng(0)
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng))
    return rng


def measure_pauli(
    s: StabilizerMatrix,
    letters: dict[int, str],
    rng=None,
    forced: int | None = None,
) -> tuple[StabilizerMatrix, int, bool, int]:
    """Measure the Pauli ``letters`` (qubit -> 'X'|'Y'|'Z').

    Returns ``(state, eigenvalue, deterministic, row)`` where ``row`` indexes
    the generator equal to ``eigenvalue * P`` in the returned matrix.
    ``forced`` pins the outcome of a random measurement; forcing the
    impossible outcome of a deterministic one raises
    :class:`ZeroProbabilityBranch`.
    """
    x, z = _pauli_vectors(s.n, letters)
    out = s.copy()
    anti = [i for i in range(out.num_rows) if not _commutes(out.x[i], out.z[i], x, z)]
    if not anti:
        sign, used = _express(out, x, z)
        value = -1 if sign else 1
        if forced is not None and forced != value:
            raise ZeroProbabilityBranch(f"outcome {forced} impossible, measurement is fixed to {value}")
        # Swapping one contributing row for the product keeps the row span.
        i = used[0]
        out.x[i], out.z[i], out.r[i] = x, z, sign
        return out, value, True, i
    p = anti[0]
    for h in anti[1:]:
        out._rowsum(h, p)
    if forced is None:
        value = 1 if _resolve_rng(rng).integers(2) == 0 else -1
    else:
        if forced not in (1, -1):
            raise ValueError("forced outcome must be +1 or -1")
        value = forced
    out.x[p], out.z[p], out.r[p] = x, z, int(value == -1)
    return out, value, False, p


def _eliminate_drop(s: StabilizerMatrix, pivot: int, col: int, clear: str) -> StabilizerMatrix:
    """Clear ``clear`` bits of column ``col`` with row ``pivot``, then remove both."""
    out = s.copy()
    block = out.x if clear == "x" else out.z
    for h in range(out.num_rows):
        if h != pivot and block[h, col]:
            out._rowsum(h, pivot)
    rows = [i for i in range(out.num_rows) if i != pivot]
    cols = [q for q in range(out.n) if q != col]
    return StabilizerMatrix(out.x[np.ix_(rows, cols)], out.z[np.ix_(rows, cols)], out.r[rows])


def _check_index(s: StabilizerMatrix, *qs: int) -> None:
    for q in qs:
        if not 0 <= q < s.n:
            raise IndexError(f"qubit {q} out of range for {s.n} qubits")


def measure_logical(
    s: StabilizerMatrix,
    q: int,
    basis: str,
    rng=None,
    forced: int | None = None,
    discard: bool = True,
) -> tuple[StabilizerMatrix, int, bool]:
    """Measure qubit ``q`` in the X or Z basis, optionally removing its column."""
    if basis not in ("X", "Z"):
        raise ValueError(f"basis must be X or Z, got {basis!r}")
    _check_index(s, q)
    out, value, det, row = measure_pauli(s, {q: basis}, rng, forced)
    if discard:
        # Other rows commute with the result, so only the measured bit type can remain.
        out = _eliminate_drop(out, row, q, "z" if basis == "Z" else "x")
    return out, value, det


# ---------------------------------------------------------------------------
# Split and merge


def _insert_column(s: StabilizerMatrix, at: int, xcol, zcol) -> StabilizerMatrix:
    x = np.insert(s.x, at, xcol, axis=1)
    z = np.insert(s.z, at, zcol, axis=1)
    return StabilizerMatrix(x, z, s.r.copy())


def smooth_split(s: StabilizerMatrix, q: int) -> StabilizerMatrix:
    """Z -> ZI, X -> XX; new row ZZ on (q, q+1).  The copy is inserted at q+1."""
    _check_index(s, q)
    out = _insert_column(s, q + 1, s.x[:, q], 0)
    new_x = np.zeros(out.n, np.uint8)
    new_z = np.zeros(out.n, np.uint8)
    new_z[q] = new_z[q + 1] = 1
    return StabilizerMatrix(np.vstack([out.x, new_x]), np.vstack([out.z, new_z]), np.append(out.r, 0))


def rough_split(s: StabilizerMatrix, q: int) -> StabilizerMatrix:
    """X -> XI, Z -> ZZ; new row XX on (q, q+1)."""
    _check_index(s, q)
    out = _insert_column(s, q + 1, 0, s.z[:, q])
    new_x = np.zeros(out.n, np.uint8)
    new_z = np.zeros(out.n, np.uint8)
    new_x[q] = new_x[q + 1] = 1
    return StabilizerMatrix(np.vstack([out.x, new_x]), np.vstack([out.z, new_z]), np.append(out.r, 0))


def _merge(s, q1, q2, letter, rng, forced):
    _check_index(s, q1, q2)
    if q1 == q2:
        raise ValueError("cannot merge a qubit with itself")
    out, value, det, row = measure_pauli(s, {q1: letter, q2: letter}, rng, forced)
    # Decode q2 with <0| (rough) or <+| (smooth): its X resp. Z bits must go.
    out = _eliminate_drop(out, row, q2, "x" if letter == "X" else "z")
    return out, MergeOutcome(value, det)


def rough_merge(s: StabilizerMatrix, q1: int, q2: int, rng=None, forced: int | None = None):
    """Joint ``X X`` measurement; the merged qubit keeps the column of ``q1``.

    Rows become ``[X I] -> [X]``, ``[I X] -> [X]`` after the Z rows touching
    the pair are reduced to one per column, which the pivot elimination does.
    """
    return _merge(s, q1, q2, "X", rng, forced)


def smooth_merge(s: StabilizerMatrix, q1: int, q2: int, rng=None, forced: int | None = None):
    """Joint ``Z Z`` measurement; X/Z dual of :func:`rough_merge`."""
    return _merge(s, q1, q2, "Z", rng, forced)


def dual(s: StabilizerMatrix) -> StabilizerMatrix:
    """Exchange X and Z in every row (Y rows keep their letter)."""
    return StabilizerMatrix(s.z.copy(), s.x.copy(), s.r.copy())


def tensor(a: StabilizerMatrix, b: StabilizerMatrix) -> StabilizerMatrix:
    na, nb = a.n, b.n
    x = np.block([[a.x, np.zeros((a.num_rows, nb), np.uint8)], [np.zeros((b.num_rows, na), np.uint8), b.x]])
    z = np.block([[a.z, np.zeros((a.num_rows, nb), np.uint8)], [np.zeros((b.num_rows, na), np.uint8), b.z]])
    return StabilizerMatrix(x, z, np.concatenate([a.r, b.r]))


def permute(s: StabilizerMatrix, order: list[int]) -> StabilizerMatrix:
    """Reorder columns: new column ``i`` is old column ``order[i]``."""
    return StabilizerMatrix(s.x[:, order], s.z[:, order], s.r.copy())


def apply_pauli(s: StabilizerMatrix, letters: dict[int, str]) -> StabilizerMatrix:
    """Conjugate by a Pauli: flips the sign of every row it anticommutes with."""
    x, z = _pauli_vectors(s.n, letters)
    out = s.copy()
    for i in range(out.num_rows):
        if not _commutes(out.x[i], out.z[i], x, z):
            out.r[i] ^= 1
    return out
