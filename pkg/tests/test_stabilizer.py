from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsc import stabilizer as stab
from lsc import statevector as sv
from lsc.stabilizer import StabilizerMatrix as SM


def rows(*strings):
    return SM.from_strings(list(strings))


def same(a, b):
    return stab.canonical_form(a) == stab.canonical_form(b)


def dense_of(s: SM) -> np.ndarray:
    """Projector onto the stabilized state, as a normalized vector (small n only)."""
    n = s.n
    dim = 2**n
    proj = np.eye(dim, dtype=complex)
    mats = {"I": sv.I2, "X": sv.X, "Z": sv.Z, "Y": 1j * sv.X @ sv.Z}
    for row in s.to_strings():
        sign = -1 if row[0] == "-" else 1
        op = np.array([[1]], dtype=complex)
        for ch in row[1:]:
            op = np.kron(op, mats[ch])
        proj = proj @ (np.eye(dim) + sign * op) / 2
    col = proj[:, np.argmax(np.linalg.norm(proj, axis=0))]
    return col / np.linalg.norm(col)


# -- splits -----------------------------------------------------------------


def test_smooth_split_of_plus():
    assert same(stab.smooth_split(rows("X"), 0), rows("XX", "ZZ"))


def test_smooth_split_of_zero():
    assert same(stab.smooth_split(rows("Z"), 0), rows("ZI", "ZZ"))


def test_smooth_split_of_bell_gives_ghz():
    out = stab.smooth_split(rows("XX", "ZZ"), 1)
    assert same(out, rows("XXX", "ZZI", "IZZ"))
    ghz = (np.eye(8)[0] + np.eye(8)[7]) / np.sqrt(2)
    assert sv.equal_up_to_phase(dense_of(out), ghz)


def test_rough_split_duals():
    assert same(stab.rough_split(rows("Z"), 0), rows("ZZ", "XX"))
    assert same(stab.rough_split(rows("X"), 0), rows("XI", "XX"))


def test_rough_split_of_zero_matches_dense_split():
    out = stab.rough_split(rows("Z"), 0)
    dense = sv.rough_split(sv.KET0, 0)
    assert sv.equal_up_to_phase(dense_of(out), sv.to_vector(dense))
    bell = (np.eye(4)[0] + np.eye(4)[3]) / np.sqrt(2)
    assert sv.equal_up_to_phase(dense_of(out), bell)


def test_split_out_of_range():
    with pytest.raises(IndexError):
        stab.smooth_split(rows("X"), 1)


# -- merges -----------------------------------------------------------------


def test_rough_merge_of_two_bell_pairs():
    pairs = stab.tensor(rows("XX", "ZZ"), rows("XX", "ZZ"))
    out, outcome = stab.rough_merge(pairs, 1, 2, forced=1)
    assert outcome.eigenvalue == 1 and not outcome.deterministic
    assert same(out, rows("ZZZ", "XXI", "IXX"))


def test_smooth_merge_is_dual_of_rough():
    pairs = stab.tensor(rows("ZZ", "XX"), rows("ZZ", "XX"))
    out, _ = stab.smooth_merge(pairs, 1, 2, forced=1)
    assert same(out, rows("XXX", "ZZI", "IZZ"))


def test_rough_merge_with_zero_keeps_state():
    phi = rows("Y")
    out, _ = stab.rough_merge(stab.tensor(rows("Z"), phi), 1, 0)
    assert same(out, phi)


def test_rough_merge_of_plus_pair_is_deterministic():
    out, outcome = stab.rough_merge(rows("XI", "IX"), 0, 1)
    assert outcome.deterministic and outcome.eigenvalue == 1
    assert same(out, rows("X"))


def test_smooth_merges_trivial_cases():
    out, outcome = stab.smooth_merge(rows("ZI", "IZ"), 0, 1)
    assert outcome.deterministic and outcome.eigenvalue == 1
    assert same(out, rows("Z"))
    out, _ = stab.smooth_merge(stab.tensor(rows("X"), rows("-Y")), 1, 0)
    assert same(out, rows("-Y"))


def test_impossible_forced_outcome():
    with pytest.raises(stab.ZeroProbabilityBranch):
        stab.rough_merge(rows("XI", "IX"), 0, 1, forced=-1)


def test_negative_merge_sign_matches_dense():
    pairs = stab.tensor(rows("XX", "ZZ"), rows("XX", "ZZ"))
    out, outcome = stab.rough_merge(pairs, 1, 2, forced=-1)
    assert outcome.eigenvalue == -1
    psi = sv.from_vector((np.eye(4)[0] + np.eye(4)[3]) / np.sqrt(2), 2)
    joint = sv.product([sv.to_vector(psi), sv.to_vector(psi)]).reshape((2,) * 4)
    merged, _ = sv.rough_merge(joint, 1, 2, eigenvalue=-1)
    assert sv.equal_up_to_phase(dense_of(out), sv.to_vector(merged))


def test_merge_self_rejected():
    with pytest.raises(ValueError):
        stab.rough_merge(rows("XX", "ZZ"), 1, 1)


def test_split_then_merge_is_identity():
    s = rows("XXX", "ZZI", "IZZ")
    for q in range(3):
        split = stab.smooth_split(s, q)
        back, outcome = stab.smooth_merge(split, q, q + 1)
        assert outcome.deterministic and outcome.eigenvalue == 1
        assert same(back, s)


# -- canonical form ---------------------------------------------------------


def test_canonical_bell_unchanged():
    s = rows("+XX", "+ZZ")
    assert stab.canonical_form(s) == s


def test_canonical_form_is_row_permutation_invariant():
    a = rows("ZZZ", "XXI", "IXX")
    b = rows("IXX", "ZZZ", "XXI")
    c = rows("XIX", "IXX", "ZZZ")
    assert stab.canonical_form(a) == stab.canonical_form(b) == stab.canonical_form(c)


def test_canonical_form_rejects_anticommuting_rows():
    with pytest.raises(stab.InconsistentStabilizerError):
        stab.canonical_form(rows("XI", "ZI"))


def test_grid_notation():
    assert stab.format_grid(stab.canonical_form(rows("ZZZ", "XXI", "IXX"))) == "+ X I X\n+ I X X\n+ Z Z Z"


# -- measurement ------------------------------------------------------------


def test_measure_x_on_plus():
    out, value, det = stab.measure_logical(rows("X"), 0, "X")
    assert (value, det) == (1, True)
    assert out.n == 0


def test_measure_z_on_plus_is_seeded():
    values = {stab.measure_logical(rows("X"), 0, "Z", rng=seed)[1] for seed in range(20)}
    assert values == {1, -1}
    for seed in range(5):
        a = stab.measure_logical(rows("X"), 0, "Z", rng=seed)
        b = stab.measure_logical(rows("X"), 0, "Z", rng=seed)
        assert a[1] == b[1] and not a[2]


def test_measure_keeps_column_when_asked():
    out, value, _ = stab.measure_logical(rows("XX", "ZZ"), 0, "Z", forced=-1, discard=False)
    assert value == -1
    assert same(out, rows("-ZI", "-IZ"))


def test_measure_out_of_range():
    with pytest.raises(IndexError):
        stab.measure_logical(rows("X"), 3, "X")


# -- properties -------------------------------------------------------------


@st.composite
def css_circuits(draw):
    n = draw(st.integers(1, 6))
    letters = "".join(draw(st.lists(st.sampled_from("0+"), min_size=n, max_size=n)))
    pairs = []
    if n >= 2:
        pair = st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True)
        pairs = [tuple(p) for p in draw(st.lists(pair, max_size=12))]
    return letters, pairs


def css_state(letters, pairs):
    s = SM.product_state(letters)
    for c, t in pairs:
        s = stab.apply_cnot(s, c, t)
    return s


css_states = css_circuits().map(lambda lp: css_state(*lp))


@settings(max_examples=150, deadline=None)
@given(css_states, st.data())
def test_duality_turns_smooth_into_rough(s, data):
    q = data.draw(st.integers(0, s.n - 1))
    assert stab.dual(stab.smooth_split(s, q)) == stab.rough_split(stab.dual(s), q)
    if s.n >= 2:
        q1, q2 = data.draw(st.lists(st.integers(0, s.n - 1), min_size=2, max_size=2, unique=True))
        a, oa = stab.smooth_merge(s, q1, q2, forced=1 if not _det(s, q1, q2, "Z") else None)
        b, ob = stab.rough_merge(stab.dual(s), q1, q2, forced=1 if not _det(s, q1, q2, "Z") else None)
        assert oa == ob
        assert stab.canonical_form(stab.dual(a)) == stab.canonical_form(b)


def _det(s, q1, q2, letter):
    return stab.measure_pauli(s, {q1: letter, q2: letter})[2]


@settings(max_examples=150, deadline=None)
@given(css_states, st.data())
def test_split_and_merge_change_size_by_one(s, data):
    q = data.draw(st.integers(0, s.n - 1))
    split = stab.rough_split(s, q)
    assert (split.n, stab.rank(split)) == (s.n + 1, s.n + 1)
    if s.n >= 2:
        q1, q2 = data.draw(st.lists(st.integers(0, s.n - 1), min_size=2, max_size=2, unique=True))
        merged, _ = stab.rough_merge(s, q1, q2, rng=0)
        assert (merged.n, stab.rank(merged)) == (s.n - 1, s.n - 1)


@settings(max_examples=150, deadline=None)
@given(css_states, st.randoms(use_true_random=False))
def test_canonical_form_idempotent_and_permutation_invariant(s, rnd):
    canon = stab.canonical_form(s)
    assert stab.canonical_form(canon) == canon
    order = list(range(s.num_rows))
    rnd.shuffle(order)
    shuffled = SM(s.x[order], s.z[order], s.r[order])
    assert stab.canonical_form(shuffled) == canon


@settings(max_examples=150, deadline=None)
@given(css_states, st.data())
def test_positive_branch_keeps_css_rows_positive(s, data):
    if s.n < 2:
        return
    q1, q2 = data.draw(st.lists(st.integers(0, s.n - 1), min_size=2, max_size=2, unique=True))
    kind = data.draw(st.sampled_from(("rough", "smooth")))
    merge = stab.rough_merge if kind == "rough" else stab.smooth_merge
    merged, _ = merge(s, q1, q2, forced=None if _det(s, q1, q2, "X" if kind == "rough" else "Z") else 1)
    for row in stab.canonical_form(merged).to_strings():
        assert row[0] == "+"
        assert not ("X" in row and "Z" in row) and "Y" not in row


@settings(max_examples=100, deadline=None)
@given(css_circuits())
def test_tableau_matches_dense_vector(circ):
    letters, pairs = circ
    psi = sv.product([sv.INIT_KETS[c] for c in letters])
    for c, t in pairs:
        psi = sv.apply_cnot(psi, c, t)
    assert sv.equal_up_to_phase(dense_of(css_state(letters, pairs)), sv.to_vector(psi))
