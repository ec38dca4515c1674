"""Search for a 7x20 triorthogonal matrix and write the matching circuit.

Four odd-weight rows carry the outputs, three even-weight rows are pure
checks.  Triorthogonality (every pair and triple of rows overlaps on an
even number of columns) is linear in the choice of distinct nonzero
columns, so the search samples basic solutions of that GF(2) system until
one has exactly 20 columns.  The three check rows are forced to own a
unit column, which becomes the control of their multi-target CNOT.

Run from the repository root:  python3 tools/bravyi_haah_matrix.py
"""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np

K, CHECKS, N = 4, 3, 20
ROWS = K + CHECKS
OUT = Path(__file__).resolve().parents[1] / "src" / "lsc" / "data" / "bravyi_haah.icm"


def search(seed: int = 3) -> np.ndarray:
    vecs = [v for v in itertools.product((0, 1), repeat=ROWS) if any(v)]
    conds, rhs = [], []
    for size in (1, 2, 3):
        for rows in itertools.combinations(range(ROWS), size):
            conds.append([int(all(v[i] for i in rows)) for v in vecs])
            rhs.append(int(size == 1 and rows[0] < K))
    for j in range(K, ROWS):
        unit = vecs.index(tuple(int(i == j) for i in range(ROWS)))
        row = [0] * len(vecs)
        row[unit] = 1
        conds.append(row)
        rhs.append(1)
    a0 = np.array(conds, dtype=np.uint8)
    b0 = np.array(rhs, dtype=np.uint8)
    rng = np.random.default_rng(seed)
    n = len(vecs)
    while True:
        order = rng.permutation(n)
        a, b = a0[:, order].copy(), b0.copy()
        r, piv = 0, []
        for c in range(n):
            nz = np.nonzero(a[r:, c])[0]
            if len(nz) == 0:
                continue
            p = r + nz[0]
            if p != r:
                a[[r, p]] = a[[p, r]]
                b[[r, p]] = b[[p, r]]
            others = np.nonzero(a[:, c])[0]
            others = others[others != r]
            a[others] ^= a[r]
            b[others] ^= b[r]
            piv.append(c)
            r += 1
            if r == a.shape[0]:
                break
        if int(b[:r].sum()) == N:
            x = np.zeros(n, np.uint8)
            for i, c in enumerate(piv):
                x[order[c]] = b[i]
            cols = [vecs[i] for i in range(n) if x[i]]
            return np.array(cols, dtype=np.uint8).T


def check(g: np.ndarray) -> None:
    for size in (1, 2, 3):
        for rows in itertools.combinations(range(ROWS), size):
            w = int(np.prod(g[list(rows)], axis=0).sum())
            want = int(size == 1 and rows[0] < K)
            assert w % 2 == want, (rows, w)
    assert len({tuple(c) for c in g.T}) == N


def circuit_text(g: np.ndarray) -> str:
    units = {j: next(c for c in range(N) if g[:, c].sum() == 1 and g[j, c]) for j in range(K, ROWS)}
    plus = set(units.values())
    lines = [
        "# Bravyi-Haah style (3k+8)-to-k encoder, k=4, from a triorthogonal matrix.",
        "# Qubits 1-20 are code qubits measured in the A basis; 21-24 are outputs.",
        "base 1",
        f"qubits {N + K}",
    ]
    for q in range(N):
        lines.append(f"init {q + 1} {'+' if q in plus else '0'}")
    for i in range(K):
        lines.append(f"init {N + i + 1} +")
    for j in range(K, ROWS):
        ctrl = units[j]
        targets = [c + 1 for c in range(N) if g[j, c] and c != ctrl]
        lines.append(f"cnot {ctrl + 1} -> " + " ".join(map(str, targets)))
    for i in range(K):
        targets = [c + 1 for c in range(N) if g[i, c]]
        lines.append(f"cnot {N + i + 1} -> " + " ".join(map(str, targets)))
    for q in range(N):
        lines.append(f"measure {q + 1} A")
    return "\n".join(lines) + "\n"


def main() -> None:
    g = search()
    check(g)
    print(g)
    OUT.write_text(circuit_text(g))
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
