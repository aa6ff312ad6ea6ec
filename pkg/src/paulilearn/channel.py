"""Pauli channels and product SPAM models.

A Pauli channel applies error string P with probability mu(P); its action on
a Pauli observable Q is multiplication by the eigenvalue

    alpha_Q = sum_P (-1)**(P.Q) mu(P),

the character coefficient of mu.  SPAM is modeled as two layers of per-qubit
Pauli channels (state-preparation side and measurement side); only their
diagonal fidelities enter the estimator, as the attenuation constant

    C_P = prod over qubits of f_prep(P_i) * f_meas(P_i).
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, EnumerationCapError
from .gibbs import GibbsNoiseModel
from .pauli import ENUMERATION_CAP, PauliString, char_transform

# Single-qubit depolarizing channel with total error probability p.
def depolarizing_table(p: float) -> np.ndarray:
    return np.array([1.0 - p, p / 3.0, p / 3.0, p / 3.0])


class PauliChannel:
    """Error distribution wrapper with exact eigenvalue access at small n."""

    def __init__(self, source: Union[GibbsNoiseModel, np.ndarray, Sequence[float]],
                 n: Optional[int] = None):
        if isinstance(source, GibbsNoiseModel):
            self.model: Optional[GibbsNoiseModel] = source
            self.n = source.n
            self._table: Optional[np.ndarray] = None
        else:
            table = np.asarray(source, dtype=np.float64)
            if n is None:
                n = int(round(np.log2(table.size) / 2))
            if table.shape != (4**n,):
                raise ValueError(f"table length {table.size} is not 4**{n}")
            if np.any(table < 0) or abs(float(table.sum()) - 1.0) > 1e-9:
                raise ValueError("error table must be a probability distribution")
            self.model = None
            self.n = n
            self._table = table
        self._alphas: Optional[np.ndarray] = None

    @staticmethod
    def product(tables: Sequence[Sequence[float]]) -> "PauliChannel":
        """Channel applying independent single-qubit errors on each qubit."""
        full = np.array([1.0])
        for t in tables:
            t = np.asarray(t, dtype=np.float64)
            if t.shape != (4,):
                raise ValueError("per-qubit table must have 4 entries")
            # qubit i contributes bit i of each mask: combine as
            # index = (z << n) | x built site by site
            full = _product_extend(full, t)
        return PauliChannel(full, n=len(tables))

    def probabilities(self) -> np.ndarray:
        if self._table is None:
            if self.n > ENUMERATION_CAP:
                raise EnumerationCapError(f"n={self.n} exceeds enumeration cap")
            self._table = self.model.full_table()
        return self._table

    @property
    def p0(self) -> float:
        """Probability that no error occurs."""
        return float(self.probabilities()[0])

    def eigenvalues(self) -> np.ndarray:
        """All exact eigenvalues alpha_Q, indexed like a Pauli table."""
        if self._alphas is None:
            self._alphas = char_transform(self.probabilities(), self.n) * 4.0**self.n
        return self._alphas

    def eigenvalue(self, q: PauliString) -> float:
        if q.n != self.n:
            raise DimensionMismatchError(f"string has {q.n} qubits, channel has {self.n}")
        return float(self.eigenvalues()[q.index])

    def sample_errors(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Error indices drawn from mu (exact below the cap, MCMC above)."""
        if self._table is not None or self.n <= ENUMERATION_CAP:
            cum = np.cumsum(self.probabilities())
            idx = np.searchsorted(cum, rng.random(size), side="right")
            return np.minimum(idx, 4**self.n - 1).astype(np.int64)
        return self.model.sample_errors(rng, size)


def _product_extend(full: np.ndarray, site: np.ndarray) -> np.ndarray:
    """Extend a k-qubit product table by one qubit (letters I, X, Z, Y)."""
    k = int(round(np.log2(full.size) / 2))
    out = np.empty(4 ** (k + 1))
    old = full.reshape(2**k, 2**k)  # [z, x]
    new = out.reshape(2 ** (k + 1), 2 ** (k + 1))
    for letter in range(4):
        zb, xb = letter >> 1, letter & 1
        new[zb * 2**k:(zb + 1) * 2**k, xb * 2**k:(xb + 1) * 2**k] = old * site[letter]
    return out


class SPAMModel:
    """Product-of-single-qubit-Pauli-channel SPAM on both circuit ends."""

    def __init__(self, prep: np.ndarray, meas: np.ndarray, description: Optional[dict] = None):
        prep = np.asarray(prep, dtype=np.float64)
        meas = np.asarray(meas, dtype=np.float64)
        if prep.shape != meas.shape or prep.ndim != 2 or prep.shape[1] != 4:
            raise ValueError("SPAM tables must both have shape (n, 4)")
        for side in (prep, meas):
            if np.any(side < 0) or np.any(np.abs(side.sum(axis=1) - 1.0) > 1e-9):
                raise ValueError("each per-qubit SPAM row must be a distribution")
        self.prep = prep
        self.meas = meas
        self.n = prep.shape[0]
        self.description = description or {}
        # per-qubit fidelities f(letter) = sum_Q p(Q) * (-1)**(letter . Q)
        self._fid_prep = _letter_fidelities(prep)
        self._fid_meas = _letter_fidelities(meas)

    @staticmethod
    def ideal(n: int) -> "SPAMModel":
        row = np.zeros((n, 4))
        row[:, 0] = 1.0
        return SPAMModel(row, row.copy(), {"kind": "none"})

    @staticmethod
    def depolarizing(n: int, strength: float) -> "SPAMModel":
        # "Replace by the maximally mixed state with probability q": every
        # non-identity fidelity becomes 1 - q, so C_P = (1 - q)**(2 w(P)).
        q = strength
        row = np.tile([1.0 - 0.75 * q, 0.25 * q, 0.25 * q, 0.25 * q], (n, 1))
        return SPAMModel(row, row.copy(),
                         {"kind": "depolarizing", "strength": strength})

    def attenuation(self, p: PauliString) -> float:
        """SPAM attenuation constant C_P for a target Pauli string."""
        if p.n != self.n:
            raise DimensionMismatchError(f"string has {p.n} qubits, SPAM has {self.n}")
        c = 1.0
        for i in range(self.n):
            letter = p.letter(i)
            if letter:
                c *= self._fid_prep[i, letter] * self._fid_meas[i, letter]
        return c

    def min_attenuation(self, weight: int) -> float:
        """Lower bound on |C_P| over strings of at most the given weight."""
        per_site = np.abs(self._fid_prep[:, 1:] * self._fid_meas[:, 1:])
        worst = float(per_site.min()) if per_site.size else 1.0
        return min(1.0, worst) ** weight

    def sample_letters(self, rng: np.random.Generator, size: int, side: str) -> np.ndarray:
        """Per-qubit error letters for `size` shots; shape (size, n)."""
        table = self.prep if side == "prep" else self.meas
        out = np.empty((size, self.n), dtype=np.uint8)
        u = rng.random((size, self.n))
        for q in range(self.n):
            cdf = np.cumsum(table[q])
            out[:, q] = np.minimum(np.searchsorted(cdf, u[:, q], side="right"), 3)
        return out

    def to_dict(self) -> dict:
        if self.description.get("kind") in ("none", "depolarizing"):
            return dict(self.description)
        return {"kind": "explicit", "prep": self.prep.tolist(), "meas": self.meas.tolist()}

    @staticmethod
    def from_dict(d: Optional[dict], n: int) -> "SPAMModel":
        if d is None or d.get("kind") in (None, "none"):
            return SPAMModel.ideal(n)
        if d["kind"] == "depolarizing":
            return SPAMModel.depolarizing(n, float(d["strength"]))
        if d["kind"] == "explicit":
            return SPAMModel(np.array(d["prep"]), np.array(d["meas"]))
        raise ValueError(f"unknown SPAM kind {d.get('kind')!r}")


def _letter_fidelities(rows: np.ndarray) -> np.ndarray:
    """f[q, letter] = sum over error letters e of rows[q, e] * (-1)**(letter.e)."""
    # commutation of single-qubit letters: sym[a, b] = 1 iff a != b and both nonzero
    sym = np.zeros((4, 4))
    for a in range(4):
        for b in range(4):
            if a and b and a != b:
                sym[a, b] = 1.0
    signs = 1.0 - 2.0 * sym
    return rows @ signs.T


def convolve_channels(a: PauliChannel, b: PauliChannel) -> PauliChannel:
    """Composition of two Pauli channels: XOR-convolution of error tables."""
    if a.n != b.n:
        raise DimensionMismatchError("channel sizes differ")
    alphas = (a.eigenvalues() * b.eigenvalues())
    from .pauli import char_synthesis  # local import to avoid cycle at module load

    table = char_synthesis(alphas / 4.0**a.n, a.n)
    table = np.clip(table, 0.0, None)
    return PauliChannel(table / table.sum(), n=a.n)
