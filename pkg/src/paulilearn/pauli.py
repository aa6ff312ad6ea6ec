"""Exact arithmetic on n-qubit Pauli strings modulo phase.

A Pauli string is encoded by two n-bit integer masks (x, z), bit i describing
qubit i:

    (x_i, z_i) = (0, 0) -> I      (1, 0) -> X
                 (0, 1) -> Z      (1, 1) -> Y

Products of Pauli strings are taken modulo phase, so multiplication is XOR of
the masks.  Every table over the 4**k strings of a k-qubit region is indexed
by ``(z << k) | x``, which enumerates the single-qubit letters in the order
I, X, Z, Y and puts the identity string first.  This ordering is part of the
package contract: potential tables and serialized results rely on it.

Regions are tuples of distinct qubit indices; the tuple order defines the
qubit order of restricted strings and of all tables over the region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, EnumerationCapError, RegionError

# Largest region for which 4**k tables are built (4**12 ~ 1.7e7 entries).
ENUMERATION_CAP = 12

# Letter codes in table order; code = (z << 1) | x.
LETTERS = "IXZY"
_LETTER_CODE = {c: i for i, c in enumerate(LETTERS)}

Region = tuple


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator modulo phase, stored as two bit masks."""

    n: int
    x: int
    z: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"negative qubit count {self.n}")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("mask bits outside the first n qubits")

    @staticmethod
    def identity(n: int) -> "PauliString":
        return PauliString(n, 0, 0)

    @staticmethod
    def from_text(text: str) -> "PauliString":
        """Parse 'IXZY'-style text, qubit 0 leftmost."""
        x = z = 0
        for i, c in enumerate(text):
            try:
                code = _LETTER_CODE[c]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {c!r} in {text!r}") from None
            x |= (code & 1) << i
            z |= (code >> 1) << i
        return PauliString(len(text), x, z)

    @staticmethod
    def from_index(n: int, index: int) -> "PauliString":
        """Inverse of :attr:`index`."""
        if not 0 <= index < 4**n:
            raise ValueError(f"index {index} out of range for n={n}")
        mask = (1 << n) - 1
        return PauliString(n, index & mask, index >> n)

    @property
    def index(self) -> int:
        """Position of this string in the canonical enumeration, (z << n) | x."""
        return (self.z << self.n) | self.x

    def letter(self, qubit: int) -> int:
        """Letter code (0..3) at one qubit."""
        return (((self.z >> qubit) & 1) << 1) | ((self.x >> qubit) & 1)

    def text(self) -> str:
        return "".join(LETTERS[self.letter(i)] for i in range(self.n))

    def weight(self) -> int:
        """Number of non-identity sites."""
        return int.bit_count(self.x | self.z)

    def support(self) -> Region:
        m = self.x | self.z
        return tuple(i for i in range(self.n) if (m >> i) & 1)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise DimensionMismatchError(f"{self.n} != {other.n} qubits")
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z)

    def __repr__(self) -> str:
        return f"PauliString({self.text()!r})"


def symplectic_product(p: PauliString, q: PauliString) -> int:
    """Commutation bit: 0 if p and q commute, 1 if they anticommute."""
    if p.n != q.n:
        raise DimensionMismatchError(f"{p.n} != {q.n} qubits")
    return (int.bit_count(p.x & q.z) + int.bit_count(p.z & q.x)) & 1


def character_value(p: PauliString, q: PauliString) -> int:
    """The character sign (-1)**symplectic_product(p, q), either +1 or -1."""
    return 1 - 2 * symplectic_product(p, q)


def validate_region(region: Sequence[int], n: int) -> Region:
    """Check that region indices are distinct and inside [0, n)."""
    region = tuple(int(q) for q in region)
    if len(set(region)) != len(region):
        raise RegionError(f"repeated qubit in region {region}")
    for q in region:
        if not 0 <= q < n:
            raise RegionError(f"qubit {q} out of range for n={n}")
    return region


def restrict(p: PauliString, region: Sequence[int]) -> PauliString:
    """Sub-string of p on a region, in the region's qubit order."""
    region = validate_region(region, p.n)
    x = z = 0
    for j, q in enumerate(region):
        x |= ((p.x >> q) & 1) << j
        z |= ((p.z >> q) & 1) << j
    return PauliString(len(region), x, z)


def embed(q: PauliString, region: Sequence[int], n: int) -> PauliString:
    """Extend q (defined on a region) to n qubits with identity elsewhere."""
    region = validate_region(region, n)
    if q.n != len(region):
        raise DimensionMismatchError(f"string has {q.n} qubits, region has {len(region)}")
    x = z = 0
    for j, g in enumerate(region):
        x |= ((q.x >> j) & 1) << g
        z |= ((q.z >> j) & 1) << g
    return PauliString(n, x, z)


def enumerate_paulis(region: Sequence[int]) -> list:
    """All 4**|region| Pauli strings over a region, identity first.

    The order is ascending in the table index (z << k) | x, i.e. lexicographic
    in the (z, x) mask pair; for one qubit it reads I, X, Z, Y.
    """
    k = len(tuple(region))
    if k > ENUMERATION_CAP:
        raise EnumerationCapError(f"region size {k} exceeds cap {ENUMERATION_CAP}")
    return [PauliString.from_index(k, i) for i in range(4**k)]


# ---------------------------------------------------------------------------
# Vectorized index machinery for tables over P_n.
# ---------------------------------------------------------------------------

def restricted_indices(n: int, region: Sequence[int]) -> np.ndarray:
    """Map every full-table index to the index of its restriction to `region`.

    Returns an int64 array of length 4**n; entry i is restrict(P_i, region).index.
    Used to marginalize or look up sub-strings without Python loops.
    """
    region = validate_region(region, n)
    if n > ENUMERATION_CAP:
        raise EnumerationCapError(f"n={n} exceeds cap {ENUMERATION_CAP}")
    k = len(region)
    idx = np.arange(4**n, dtype=np.int64)
    x = idx & ((1 << n) - 1)
    z = idx >> n
    rx = np.zeros_like(idx)
    rz = np.zeros_like(idx)
    for j, q in enumerate(region):
        rx |= ((x >> q) & 1) << j
        rz |= ((z >> q) & 1) << j
    return (rz << k) | rx


def embedded_index(local_index: int, positions: Sequence[int], k: int) -> int:
    """Index over a k-qubit table of a string given by a local index on `positions`."""
    m = len(positions)
    lx = local_index & ((1 << m) - 1)
    lz = local_index >> m
    x = z = 0
    for j, pos in enumerate(positions):
        x |= ((lx >> j) & 1) << pos
        z |= ((lz >> j) & 1) << pos
    return (z << k) | x


def letters_from_indices(indices: np.ndarray, n: int) -> np.ndarray:
    """Per-qubit letter codes (0..3) for an array of table indices; shape (..., n)."""
    indices = np.asarray(indices, dtype=np.int64)
    x = indices & ((1 << n) - 1)
    z = indices >> n
    qubits = np.arange(n, dtype=np.int64)
    return (((z[..., None] >> qubits) & 1) << 1 | ((x[..., None] >> qubits) & 1)).astype(np.uint8)


def indices_from_letters(letters: np.ndarray) -> np.ndarray:
    """Inverse of :func:`letters_from_indices` along the last axis."""
    letters = np.asarray(letters, dtype=np.int64)
    n = letters.shape[-1]
    qubits = np.arange(n, dtype=np.int64)
    x = ((letters & 1) << qubits).sum(axis=-1)
    z = (((letters >> 1) & 1) << qubits).sum(axis=-1)
    return (z << n) | x


# ---------------------------------------------------------------------------
# Character (Fourier) transform over (Z_2 x Z_2)^k.
# ---------------------------------------------------------------------------

def _fwht(a: np.ndarray) -> np.ndarray:
    """In-place Walsh-Hadamard transform over all bits of the index."""
    m = a.shape[0]
    h = 1
    while h < m:
        a = a.reshape(-1, 2, h)
        top = a[:, 0, :].copy()
        bot = a[:, 1, :].copy()
        a[:, 0, :] = top + bot
        a[:, 1, :] = top - bot
        a = a.reshape(m)
        h *= 2
    return a


def char_transform(table: np.ndarray, k: int) -> np.ndarray:
    """Character coefficients of a table over P_k.

    Returns c with c[Q.index] = 4**(-k) * sum_P (-1)**(P.Q) table[P.index].
    Applied to a probability table this yields the Pauli eigenvalues alpha_Q.
    """
    table = np.asarray(table, dtype=np.float64)
    if table.shape != (4**k,):
        raise ValueError(f"expected table of length {4**k}")
    out = _fwht(table.copy())
    # The symplectic pairing couples the z bits of Q to the x bits of P and
    # vice versa, so the WHT output must have its two mask halves swapped.
    out = out.reshape(2**k, 2**k).T.reshape(4**k)
    out /= 4.0**k
    return out


def char_synthesis(coefs: np.ndarray, k: int) -> np.ndarray:
    """Inverse of :func:`char_transform`: table[P] = sum_Q coefs[Q] (-1)**(P.Q)."""
    coefs = np.asarray(coefs, dtype=np.float64)
    if coefs.shape != (4**k,):
        raise ValueError(f"expected coefficients of length {4**k}")
    out = _fwht(coefs.copy())
    return out.reshape(2**k, 2**k).T.reshape(4**k)
