"""The 24 single-qubit Cliffords in a fixed, serializable order.

The group is generated as words in {S, H} by breadth-first search from the
identity, deduplicated by the conjugation action on (X, Z) including signs
(i.e. up to a global phase of the unitary).  The discovery order is the
canonical ordering; it is stable and recorded with every shot bank under the
version tag below.

Two lookup tables drive the whole simulator and estimator:

    MEASURE_WEIGHT[c, p, b]  per-qubit factor <b|C' P C|b> * <0|C' P C|0>
                             (C' the adjoint), which is (-1)**b when C' P C
                             is diagonal (+-Z) and 0 otherwise;
    OUTCOME_PROB1[c, e]      probability of measuring 1 on C' E C |0>, i.e.
                             with the basis rotation undone before readout.
"""

from __future__ import annotations

import numpy as np

CLIFFORD_ORDER_VERSION = "SH-BFS-1"

# Letter codes as in pauli.py: 0=I, 1=X, 2=Z, 3=Y.
_MATRICES = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[1, 0], [0, -1]], dtype=complex),
    3: np.array([[0, -1j], [1j, 0]], dtype=complex),
}

# Conjugation action of the generators on (letter, sign) pairs.
#   S X S' = Y,  S Y S' = -X,  S Z S' = Z
#   H X H' = Z,  H Y H' = -Y,  H Z H' = X
_GEN_ACTION = {
    "S": {1: (3, 1), 3: (1, -1), 2: (2, 1)},
    "H": {1: (2, 1), 3: (3, -1), 2: (1, 1)},
}
_GEN_MATRIX = {
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0),
}


def _compose(outer: str, tableau: dict) -> dict:
    """Action of (generator . tableau) on the X and Z letters."""
    out = {}
    for letter, (img, sign) in tableau.items():
        img2, sign2 = _GEN_ACTION[outer][img]
        out[letter] = (img2, sign * sign2)
    return out


def _build_group():
    identity = {1: (1, 1), 2: (2, 1)}
    seen = {(identity[1], identity[2]): 0}
    tableaus = [identity]
    matrices = [np.eye(2, dtype=complex)]
    frontier = [0]
    while frontier:
        nxt = []
        for idx in frontier:
            for gen in ("S", "H"):
                tab = _compose(gen, tableaus[idx])
                key = (tab[1], tab[2])
                if key not in seen:
                    seen[key] = len(tableaus)
                    tableaus.append(tab)
                    matrices.append(_GEN_MATRIX[gen] @ matrices[idx])
                    nxt.append(seen[key])
        frontier = nxt
    return tableaus, np.stack(matrices)


_TABLEAUS, MATRICES = _build_group()
GROUP_SIZE = len(_TABLEAUS)
assert GROUP_SIZE == 24, f"Clifford BFS produced {GROUP_SIZE} elements"


def _conjugated_letter(c: int, letter: int) -> tuple:
    """Image (letter, sign) of C P C' for a group element c."""
    if letter == 0:
        return 0, 1
    if letter in (1, 2):
        return _TABLEAUS[c][letter]
    # Y = iXZ, so its image is i * img(X) * img(Z) with the product phase.
    (ix, sx), (iz, sz) = _TABLEAUS[c][1], _TABLEAUS[c][2]
    prod, phase = _single_product(ix, iz)
    val = 1j * phase * sx * sz
    return prod, int(round(val.real))


def _single_product(a: int, b: int) -> tuple:
    """Product of two single-qubit Pauli letters: returns (letter, phase)."""
    table = {
        (1, 2): (3, -1j), (2, 1): (3, 1j),
        (1, 3): (2, 1j), (3, 1): (2, -1j),
        (3, 2): (1, 1j), (2, 3): (1, -1j),
    }
    if a == 0:
        return b, 1
    if b == 0:
        return a, 1
    if a == b:
        return 0, 1
    return table[(a, b)]


def _build_measure_weight() -> np.ndarray:
    """MEASURE_WEIGHT[c, p, b] for all cliffords c, letters p, outcome bits b."""
    w = np.zeros((GROUP_SIZE, 4, 2), dtype=np.int8)
    w[:, 0, :] = 1
    for c in range(GROUP_SIZE):
        # C' P C is diagonal exactly when P is (up to sign) the image of Z
        # under conjugation by C; the sign squares away in the two factors.
        z_img = _TABLEAUS[c][2][0]
        w[c, z_img, 0] = 1
        w[c, z_img, 1] = -1
    return w


def _build_outcome_prob1() -> np.ndarray:
    """OUTCOME_PROB1[c, e] = |<1| C' E C |0>|**2.

    The closing layer is the adjoint of the opening one, so the measurement
    reads out in the basis the opening Cliffords prepared; this is what makes
    the mean of the weighted samples equal C_P * alpha_P**k.
    """
    p = np.zeros((GROUP_SIZE, 4), dtype=np.float64)
    ket0 = np.array([1.0, 0.0], dtype=complex)
    for c in range(GROUP_SIZE):
        u = MATRICES[c]
        for e in range(4):
            amp = (u.conj().T @ _MATRICES[e] @ u @ ket0)[1]
            p[c, e] = float(np.abs(amp) ** 2)
    return p


MEASURE_WEIGHT = _build_measure_weight()
OUTCOME_PROB1 = _build_outcome_prob1()


def conjugated_letter(c: int, letter: int) -> tuple:
    """Public wrapper: image (letter, sign) of C P C' for group element c."""
    return _conjugated_letter(c, letter)
