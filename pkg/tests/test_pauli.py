"""Pauli-string arithmetic against independent matrix and enumeration oracles."""

import numpy as np
import pytest

from paulilearn.errors import DimensionMismatchError, EnumerationCapError, RegionError
from paulilearn.pauli import (PauliString, char_synthesis, char_transform,
                              character_value, embed, embedded_index,
                              enumerate_paulis, letters_from_indices,
                              indices_from_letters, restrict,
                              restricted_indices, symplectic_product)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
MATS = {0: I2, 1: X, 2: Z, 3: Y}


def to_matrix(p):
    out = np.array([[1.0 + 0j]])
    for q in range(p.n):
        out = np.kron(MATS[p.letter(q)], out)
    return out


def test_text_round_trip():
    for text in ("I", "X", "Y", "Z", "IXZY", "YYXI", "IIII"):
        assert PauliString.from_text(text).text() == text
    with pytest.raises(ValueError):
        PauliString.from_text("IXQ")


def test_masks_and_letters():
    p = PauliString.from_text("IXZY")
    assert p.letter(0) == 0 and p.letter(1) == 1 and p.letter(2) == 2 and p.letter(3) == 3
    assert p.weight() == 3
    assert p.support() == (1, 2, 3)
    assert PauliString.identity(4).weight() == 0


def test_index_round_trip():
    for n in (1, 2, 3):
        seen = set()
        for p in enumerate_paulis(range(n)):
            assert PauliString.from_index(n, p.index) == p
            seen.add(p.index)
        assert seen == set(range(4**n))


def test_symplectic_trivial_cases():
    x = PauliString.from_text("X")
    z = PauliString.from_text("Z")
    assert symplectic_product(x, z) == 1
    for p in enumerate_paulis(range(2)):
        assert symplectic_product(p, p) == 0
    # two anticommuting sites cancel mod 2
    assert symplectic_product(PauliString.from_text("XZ"), PauliString.from_text("ZX")) == 0


def test_symplectic_matches_matrix_commutator():
    for n in (1, 2):
        for p in enumerate_paulis(range(n)):
            for q in enumerate_paulis(range(n)):
                a, b = to_matrix(p), to_matrix(q)
                commutes = np.allclose(a @ b, b @ a)
                assert (symplectic_product(p, q) == 0) == commutes


def test_symplectic_bilinearity_exhaustive():
    for p in enumerate_paulis(range(2)):
        for q in enumerate_paulis(range(2)):
            for r in enumerate_paulis(range(2)):
                assert symplectic_product(p, q * r) == (
                    symplectic_product(p, q) ^ symplectic_product(p, r))


def test_symplectic_dimension_error():
    with pytest.raises(DimensionMismatchError):
        symplectic_product(PauliString.from_text("X"), PauliString.from_text("XX"))


def test_character_values():
    identity = PauliString.identity(1)
    for p in enumerate_paulis(range(1)):
        assert character_value(p, identity) == 1
    assert character_value(PauliString.from_text("X"), PauliString.from_text("Z")) == -1
    # orthogonality: sum over the single-qubit strings of chi_X is zero
    x = PauliString.from_text("X")
    assert sum(character_value(x, q) for q in enumerate_paulis(range(1))) == 0


def test_character_orthogonality_exhaustive():
    for n in (1, 2):
        for p in enumerate_paulis(range(n)):
            for p2 in enumerate_paulis(range(n)):
                total = sum(character_value(p, q) * character_value(p2, q)
                            for q in enumerate_paulis(range(n)))
                assert total == (4**n if p == p2 else 0)


def test_restrict_examples():
    p = PauliString.from_text("XYZ")
    assert restrict(p, (1,)).text() == "Y"
    assert restrict(p, (0, 1, 2)) == p
    assert restrict(PauliString.identity(3), (0, 2)).weight() == 0
    # region order matters
    assert restrict(p, (2, 0)).text() == "ZX"
    with pytest.raises(RegionError):
        restrict(p, (0, 3))
    with pytest.raises(RegionError):
        restrict(p, (1, 1))


def test_embed_examples():
    y = PauliString.from_text("Y")
    assert embed(y, (1,), 3).text() == "IYI"
    assert embed(PauliString.identity(2), (0, 2), 3) == PauliString.identity(3)
    with pytest.raises(DimensionMismatchError):
        embed(y, (0, 1), 3)


def test_restrict_embed_round_trip_exhaustive():
    from itertools import combinations

    for n in (1, 2, 3, 4):
        regions = [r for size in range(1, n + 1)
                   for r in combinations(range(n), size)]
        for region in regions:
            for q in enumerate_paulis(range(len(region))):
                assert restrict(embed(q, region, n), region) == q


def test_symplectic_depends_only_on_restriction():
    # for Q supported on A the product only sees P's restriction to A
    for n in (2, 3):
        for region in [(0,), (n - 1,), (0, n - 1)]:
            for q_local in enumerate_paulis(range(len(region))):
                q = embed(q_local, region, n)
                for p in enumerate_paulis(range(n)):
                    assert symplectic_product(p, q) == symplectic_product(
                        restrict(p, region), q_local)


def test_enumerate_paulis_contract():
    assert [p.text() for p in enumerate_paulis(range(1))] == ["I", "X", "Z", "Y"]
    two = enumerate_paulis(range(2))
    assert len(two) == len(set(two)) == 16
    assert two[0] == PauliString.identity(2)
    with pytest.raises(EnumerationCapError):
        enumerate_paulis(range(13))


def test_restricted_indices_matches_scalar_restrict():
    rng = np.random.default_rng(5)
    for n in (2, 3, 4):
        for region in [(0,), (1, 0), (0, n - 1), tuple(range(n))]:
            ridx = restricted_indices(n, region)
            for idx in rng.integers(0, 4**n, size=40):
                p = PauliString.from_index(n, int(idx))
                assert ridx[idx] == restrict(p, region).index


def test_embedded_index_matches_embed():
    # embedding local strings into a larger region by position
    for k, positions in [(3, (0, 2)), (4, (1, 3)), (2, (1,))]:
        m = len(positions)
        for li in range(4**m):
            local = PauliString.from_index(m, li)
            direct = embed(local, positions, k).index
            assert embedded_index(li, positions, k) == direct


def test_letters_index_round_trip():
    for n in (1, 3):
        idx = np.arange(4**n)
        letters = letters_from_indices(idx, n)
        assert np.array_equal(indices_from_letters(letters), idx)


def test_char_transform_matches_enumeration_oracle():
    rng = np.random.default_rng(11)
    for n in (1, 2, 3):
        table = rng.random(4**n)
        table /= table.sum()
        paulis = enumerate_paulis(range(n))
        oracle = np.array([
            sum(character_value(q, p) * table[p.index] for p in paulis)
            for q in paulis]) / 4.0**n
        fast = char_transform(table, n)
        assert np.max(np.abs(oracle - fast)) < 1e-14
        assert np.max(np.abs(char_synthesis(fast, n) - table)) < 1e-14


def test_char_transform_of_uniform_is_delta():
    uniform = np.full(16, 1.0 / 16.0)
    coefs = char_transform(uniform, 2)
    assert coefs[0] == pytest.approx(1.0 / 16.0)
    assert np.max(np.abs(coefs[1:])) < 1e-16


def test_product_is_mask_xor():
    p = PauliString.from_text("XY")
    q = PauliString.from_text("YZ")
    assert (p * q).text() == "ZX"
