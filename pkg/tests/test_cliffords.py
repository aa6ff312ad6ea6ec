"""The single-qubit Clifford group tables against direct matrix algebra."""

import numpy as np

from paulilearn.cliffords import (CLIFFORD_ORDER_VERSION, GROUP_SIZE, MATRICES,
                                  MEASURE_WEIGHT, OUTCOME_PROB1,
                                  conjugated_letter)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
MATS = [I2, X, Z, Y]


def test_group_size_and_identity_first():
    assert GROUP_SIZE == 24
    assert np.allclose(MATRICES[0], I2)
    assert CLIFFORD_ORDER_VERSION == "SH-BFS-1"


def test_matrices_are_unitary_and_distinct_up_to_phase():
    for u in MATRICES:
        assert np.allclose(u @ u.conj().T, I2, atol=1e-12)
    # distinct conjugation action on (X, Z) including signs
    keys = set()
    for u in MATRICES:
        key = []
        for m in (X, Z):
            img = u @ m @ u.conj().T
            for letter, ref in enumerate(MATS[1:], start=1):
                if np.allclose(img, ref, atol=1e-12):
                    key.append((letter, 1))
                    break
                if np.allclose(img, -ref, atol=1e-12):
                    key.append((letter, -1))
                    break
        keys.add(tuple(key))
    assert len(keys) == 24


def test_tableau_matches_matrices():
    for c, u in enumerate(MATRICES):
        for letter in range(4):
            img, sign = conjugated_letter(c, letter)
            assert np.allclose(u @ MATS[letter] @ u.conj().T,
                               sign * MATS[img], atol=1e-12)


def test_group_closed_under_multiplication():
    def key_of(u):
        key = []
        for m in (X, Z):
            img = u @ m @ u.conj().T
            for letter, ref in enumerate(MATS[1:], start=1):
                if np.allclose(img, ref, atol=1e-12):
                    key.append((letter, 1))
                    break
                if np.allclose(img, -ref, atol=1e-12):
                    key.append((letter, -1))
                    break
        return tuple(key)

    table = {key_of(u) for u in MATRICES}
    rng = np.random.default_rng(3)
    for _ in range(50):
        a, b = rng.integers(0, 24, size=2)
        assert key_of(MATRICES[a] @ MATRICES[b]) in table


def test_measure_weight_against_matrix_conjugation():
    # factor <x|C'PC|x><0|C'PC|0>: zero unless C'PC is diagonal, else (-1)**x
    for c, u in enumerate(MATRICES):
        for letter in range(1, 4):
            conj = u.conj().T @ MATS[letter] @ u
            for x in (0, 1):
                want = (conj[x, x] * conj[0, 0]).real
                assert abs(MEASURE_WEIGHT[c, letter, x] - want) < 1e-12
        assert MEASURE_WEIGHT[c, 0, 0] == 1 and MEASURE_WEIGHT[c, 0, 1] == 1


def test_measure_weight_basis_probability():
    # each non-identity letter is hit by exactly one third of the group
    for letter in range(1, 4):
        hits = sum(1 for c in range(24) if MEASURE_WEIGHT[c, letter, 0] != 0)
        assert hits == 8


def test_outcome_prob_against_matrices():
    ket0 = np.array([1, 0], dtype=complex)
    for c, u in enumerate(MATRICES):
        for e in range(4):
            amp = u.conj().T @ MATS[e] @ u @ ket0
            assert abs(OUTCOME_PROB1[c, e] - abs(amp[1]) ** 2) < 1e-12


def test_outcome_prob_trivial_rows():
    # identity Clifford: outcome deterministic, set by whether E flips qubit 0
    assert abs(OUTCOME_PROB1[0, 0] - 0.0) < 1e-12
    assert abs(OUTCOME_PROB1[0, 1] - 1.0) < 1e-12   # X flips
    assert abs(OUTCOME_PROB1[0, 2] - 0.0) < 1e-12   # Z does not
    assert abs(OUTCOME_PROB1[0, 3] - 1.0) < 1e-12   # Y flips
    # E = I never flips: closing layer undoes the opening one exactly
    assert np.max(OUTCOME_PROB1[:, 0]) < 1e-12
