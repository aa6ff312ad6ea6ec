"""Gibbs (Markov-random-field) error distributions over Pauli strings.

A model is a hypergraph on the qubits together with one real-valued potential
table per hyperedge; the error distribution is

    mu(P) = exp( sum_h theta_h(P restricted to h) - C )

with C the log-partition constant.  Ground-truth models are generated in the
*centered gauge*: every potential is a combination of characters indexed by
Pauli strings with no identity inside the hyperedge, or equivalently summing
theta_h over any single site's letter (the others held fixed) gives zero.
This gauge makes the decomposition across overlapping hyperedges unique and
the coefficient learner's output directly comparable to the ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatchError, EnumerationCapError, RegionError
from .pauli import (
    ENUMERATION_CAP,
    PauliString,
    Region,
    char_synthesis,
    char_transform,
    enumerate_paulis,
    restricted_indices,
    validate_region,
)
from .seeding import stream

MODEL_FORMAT = "pauli-gibbs-model/1"


def full_support_mask(k: int) -> np.ndarray:
    """Boolean mask over P_k marking strings with no identity site."""
    mask = np.ones(4**k, dtype=bool)
    idx = np.arange(4**k, dtype=np.int64)
    x = idx & ((1 << k) - 1)
    z = idx >> k
    for j in range(k):
        mask &= (((x >> j) | (z >> j)) & 1).astype(bool)
    return mask


@dataclass(frozen=True)
class Hypergraph:
    n: int
    hyperedges: tuple
    r: int

    def __post_init__(self):
        seen = set()
        for h in self.hyperedges:
            validate_region(h, self.n)
            if not h:
                raise RegionError("empty hyperedge")
            if len(h) > self.r:
                raise RegionError(f"hyperedge {h} larger than range r={self.r}")
            key = frozenset(h)
            if key in seen:
                raise RegionError(f"duplicate hyperedge {h}")
            seen.add(key)


@dataclass(frozen=True)
class PotentialTable:
    """Potential values on one hyperedge, indexed by the canonical Pauli order."""

    hyperedge: Region
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (4 ** len(self.hyperedge),):
            raise ValueError("potential table has wrong length")

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def zero_sum_defect(self) -> float:
        return abs(float(self.values.sum()))

    def centered_gauge_defect(self) -> float:
        """Largest character coefficient outside the full-support sector."""
        k = len(self.hyperedge)
        coefs = char_transform(self.values, k)
        off = coefs[~full_support_mask(k)]
        return float(np.max(np.abs(off))) if off.size else 0.0


def centered_potential(hyperedge: Region, coefs: np.ndarray) -> PotentialTable:
    """Potential from character coefficients on full-support strings.

    `coefs` has one entry per full-support Pauli string of the hyperedge, in
    canonical enumeration order restricted to the full-support positions.
    """
    k = len(hyperedge)
    mask = full_support_mask(k)
    if coefs.shape != (int(mask.sum()),):
        raise ValueError(f"expected {int(mask.sum())} coefficients")
    dense = np.zeros(4**k)
    dense[mask] = coefs
    return PotentialTable(hyperedge, char_synthesis(dense, k))


class GibbsNoiseModel:
    """Hypergraph + potentials, with cached exact tables at small n."""

    def __init__(self, hypergraph: Hypergraph, potentials: Sequence[PotentialTable],
                 min_interaction: Optional[float] = None,
                 max_interaction: Optional[float] = None,
                 seed: Optional[int] = None):
        by_edge = {frozenset(p.hyperedge): p for p in potentials}
        if set(by_edge) != {frozenset(h) for h in hypergraph.hyperedges}:
            raise ConfigError("potentials do not match hyperedges")
        self.hypergraph = hypergraph
        self.potentials = tuple(by_edge[frozenset(h)] for h in hypergraph.hyperedges)
        self.min_interaction = min_interaction
        self.max_interaction = max_interaction
        self.seed = seed
        self._log_partition: Optional[float] = None
        self._table: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.hypergraph.n

    # -- exact quantities (enumeration-capped) ------------------------------

    def log_density_unnormalized(self, p: PauliString) -> float:
        """Sum of potentials at p; log mu(p) + C."""
        if p.n != self.n:
            raise DimensionMismatchError(f"string has {p.n} qubits, model has {self.n}")
        total = 0.0
        for pot in self.potentials:
            # restrict by direct bit gathers; cheap for the r-sized edges
            idx = 0
            k = len(pot.hyperedge)
            for j, q in enumerate(pot.hyperedge):
                idx |= ((p.x >> q) & 1) << j
                idx |= ((p.z >> q) & 1) << (k + j)
            total += float(pot.values[idx])
        return total

    def _log_weights(self) -> np.ndarray:
        if self.n > ENUMERATION_CAP:
            raise EnumerationCapError(
                f"n={self.n} exceeds enumeration cap; only sampling is available")
        logw = np.zeros(4**self.n)
        for pot in self.potentials:
            logw += pot.values[restricted_indices(self.n, pot.hyperedge)]
        return logw

    def partition(self) -> float:
        """Log-partition constant C; cached."""
        if self._log_partition is None:
            logw = self._log_weights()
            m = float(logw.max())
            self._log_partition = m + math.log(float(np.exp(logw - m).sum()))
        return self._log_partition

    def full_table(self) -> np.ndarray:
        """Exact probability table over P_n (enumeration-capped)."""
        if self._table is None:
            logw = self._log_weights()
            w = np.exp(logw - logw.max())
            self._table = w / w.sum()
        return self._table

    def exact_marginal(self, region: Sequence[int]) -> np.ndarray:
        """Marginal probability table over a region, in the region's order."""
        region = validate_region(region, self.n)
        ridx = restricted_indices(self.n, region)
        return np.bincount(ridx, weights=self.full_table(), minlength=4 ** len(region))

    # -- sampling ------------------------------------------------------------

    def sample_errors(self, rng: np.random.Generator, size: int,
                      mcmc: Optional[dict] = None) -> np.ndarray:
        """Draw `size` error indices from mu.

        Below the enumeration cap this is an exact inverse-CDF draw from the
        full table.  Above it, single-site Metropolis sweeps are used; `mcmc`
        may override {"burn_in_sweeps": ..., "thinning_sweeps": ...}
        (defaults 100*n and 10).
        """
        if self.n <= ENUMERATION_CAP:
            cum = np.cumsum(self.full_table())
            idx = np.searchsorted(cum, rng.random(size), side="right")
            return np.minimum(idx, 4**self.n - 1).astype(np.int64)
        if mcmc is None:
            mcmc = {}
        return self._sample_mcmc(rng, size,
                                 int(mcmc.get("burn_in_sweeps", 100 * self.n)),
                                 int(mcmc.get("thinning_sweeps", 10)))

    def sample_error(self, rng: np.random.Generator) -> PauliString:
        return PauliString.from_index(self.n, int(self.sample_errors(rng, 1)[0]))

    def _sample_mcmc(self, rng, size, burn_in, thinning) -> np.ndarray:
        touching = [[] for _ in range(self.n)]
        positions = [[] for _ in range(self.n)]
        for pot in self.potentials:
            for j, q in enumerate(pot.hyperedge):
                touching[q].append(pot)
                positions[q].append(j)
        letters = np.zeros(self.n, dtype=np.int64)

        def local_index(pot, state):
            idx = 0
            k = len(pot.hyperedge)
            for j, q in enumerate(pot.hyperedge):
                idx |= (state[q] & 1) << j
                idx |= ((state[q] >> 1) & 1) << (k + j)
            return idx

        def sweep():
            for q in range(self.n):
                old = letters[q]
                new = int(rng.integers(0, 4))
                if new == old:
                    continue
                delta = 0.0
                for pot in touching[q]:
                    before = float(pot.values[local_index(pot, letters)])
                    letters[q] = new
                    after = float(pot.values[local_index(pot, letters)])
                    letters[q] = old
                    delta += after - before
                if delta >= 0 or rng.random() < math.exp(delta):
                    letters[q] = new

        out = np.empty(size, dtype=np.int64)
        for _ in range(burn_in):
            sweep()
        for i in range(size):
            for _ in range(thinning):
                sweep()
            x = int(((letters & 1) << np.arange(self.n)).sum())
            z = int((((letters >> 1) & 1) << np.arange(self.n)).sum())
            out[i] = (z << self.n) | x
        return out

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        edges = []
        for pot in self.potentials:
            entries = {}
            for p in enumerate_paulis(range(len(pot.hyperedge))):
                v = float(pot.values[p.index])
                if v != 0.0:
                    entries[p.text()] = v
            edges.append({"qubits": list(pot.hyperedge), "potential": entries})
        d = {"format": MODEL_FORMAT, "n": self.n, "r": self.hypergraph.r,
             "hyperedges": edges}
        if self.min_interaction is not None:
            d["min_interaction"] = self.min_interaction
        if self.max_interaction is not None:
            d["max_interaction"] = self.max_interaction
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    @staticmethod
    def from_dict(d: dict) -> "GibbsNoiseModel":
        if d.get("format") != MODEL_FORMAT:
            raise ConfigError(f"unexpected model format {d.get('format')!r}")
        n, r = int(d["n"]), int(d["r"])
        edges, pots = [], []
        for e in d["hyperedges"]:
            region = tuple(int(q) for q in e["qubits"])
            values = np.zeros(4 ** len(region))
            for text, v in e["potential"].items():
                values[PauliString.from_text(text).index] = float(v)
            edges.append(region)
            pots.append(PotentialTable(region, values))
        return GibbsNoiseModel(Hypergraph(n, tuple(edges), r), pots,
                               d.get("min_interaction"), d.get("max_interaction"),
                               d.get("seed"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @staticmethod
    def load(path) -> "GibbsNoiseModel":
        return GibbsNoiseModel.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Derived graph and learning constants.
# ---------------------------------------------------------------------------

def derived_graph(hypergraph: Hypergraph) -> np.ndarray:
    """Adjacency matrix obtained by replacing every hyperedge with a clique."""
    adj = np.zeros((hypergraph.n, hypergraph.n), dtype=bool)
    for h in hypergraph.hyperedges:
        for a in h:
            for b in h:
                if a != b:
                    adj[a, b] = True
    return adj


def neighbor_sets(adj: np.ndarray) -> list:
    return [tuple(np.flatnonzero(adj[u]).tolist()) for u in range(adj.shape[0])]


def max_degree(adj: np.ndarray) -> int:
    return int(adj.sum(axis=1).max()) if adj.shape[0] else 0


@dataclass(frozen=True)
class LearningConstants:
    """Thresholding constants for the structure learner.

    interaction_strength  max over sites of the summed max-entries of the
                          potentials touching the site
    conditional_floor     (1/4) exp(-2 * interaction_strength), a lower bound
                          on single-site conditional probabilities
    score_threshold       dependence-score threshold tau
    superset_cap          bound L on the grown neighborhood superset
    """

    interaction_strength: float
    conditional_floor: float
    score_threshold: float
    superset_cap: int


def compute_constants(model: GibbsNoiseModel,
                      min_interaction: float,
                      max_interaction: float,
                      failure_prob: float = 0.05,
                      score_threshold: Optional[float] = None,
                      superset_cap: Optional[int] = None) -> LearningConstants:
    """Evaluate the default thresholding constants for a model.

    The score threshold follows the formula
        tau = 2 a^2 d^(r+1) / (r^(2r) 4^(r+1) binom(D, r-1) g exp(2g))
    with g the interaction strength, a = min_interaction and d the
    conditional-probability floor 4 * conditional_floor = exp(-2g).  The
    formula is extremely conservative; both tau and the superset cap can be
    overridden, and experiment configs normally do.  With zero interaction
    strength tau defaults to 1.0 (no score can exceed it).
    """
    gamma = 0.0
    for u in range(model.n):
        total = 0.0
        for pot in model.potentials:
            if u in pot.hyperedge:
                total += pot.max_abs()
        gamma = max(gamma, total)
    eta = 0.25 * math.exp(-2.0 * gamma)

    if score_threshold is None:
        r = model.hypergraph.r
        bigd = max(max_degree(derived_graph(model.hypergraph)), r - 1)
        if gamma > 0:
            delta = 4.0 * eta
            tau = (2.0 * min_interaction**2 * delta ** (r + 1)
                   / (r ** (2 * r) * 4 ** (r + 1) * math.comb(bigd, r - 1)
                      * gamma * math.exp(2.0 * gamma)))
        else:
            tau = 1.0
    else:
        tau = float(score_threshold)
    if tau <= 0:
        raise ConfigError(f"score threshold must be positive, got {tau}")

    if superset_cap is None:
        cap = max(1, math.ceil(8.0 / tau**2 * math.log(4.0)))
    else:
        cap = int(superset_cap)
        if cap < 1:
            raise ConfigError("superset cap must be >= 1")
    return LearningConstants(gamma, eta, tau, cap)


def structure_sample_budget(constants: LearningConstants, n: int, r: int,
                            p0: float, c_spam: float = 1.0,
                            failure_prob: float = 0.05,
                            desk_scale: float = 1e3) -> float:
    """Nominal copy count for structure learning, divided by the desk scale.

    Evaluates log(1/(1-p0)) * 4^(3r+5L) / (c_spam * tau * eta^L)^2
    * log(n^(r+L)/failure_prob) with unit constant.  The result is usually
    astronomically loose; experiments set explicit schedules and report the
    implied desk-scale factor instead.
    """
    tau, eta, cap = (constants.score_threshold, constants.conditional_floor,
                     constants.superset_cap)
    k_factor = max(1.0, math.log(1.0 / max(1.0 - p0, 1e-300)))
    log_terms = (r + cap) * math.log(max(n, 2)) - math.log(failure_prob)
    budget = (k_factor * 4.0 ** (3 * r + 5 * cap)
              / (c_spam * tau * eta**cap) ** 2 * log_terms)
    return budget / desk_scale


# ---------------------------------------------------------------------------
# Condition validation.
# ---------------------------------------------------------------------------

@dataclass
class ConditionReport:
    ok: bool
    uncovered_edges: list = field(default_factory=list)
    weak_maximal_hyperedges: list = field(default_factory=list)
    oversized_entries: list = field(default_factory=list)

    def summary(self) -> str:
        if self.ok:
            return "all conditions satisfied"
        parts = []
        if self.uncovered_edges:
            parts.append(f"edges not covered by a nonzero potential: {self.uncovered_edges}")
        if self.weak_maximal_hyperedges:
            parts.append(f"maximal hyperedges below the minimum interaction: "
                         f"{self.weak_maximal_hyperedges}")
        if self.oversized_entries:
            parts.append(f"entries above the maximum interaction: {self.oversized_entries}")
        return "; ".join(parts)


def validate_conditions(model: GibbsNoiseModel, min_interaction: float,
                        max_interaction: float, tol: float = 1e-12) -> ConditionReport:
    """Check coverage, minimum-interaction and maximum-interaction conditions."""
    report = ConditionReport(ok=True)
    nonzero = [pot for pot in model.potentials if pot.max_abs() > tol]
    covered = set()
    for pot in nonzero:
        for a in pot.hyperedge:
            for b in pot.hyperedge:
                if a < b:
                    covered.add((a, b))
    for h in model.hypergraph.hyperedges:
        for a in h:
            for b in h:
                if a < b and (a, b) not in covered:
                    report.uncovered_edges.append((a, b))

    edge_sets = [frozenset(h) for h in model.hypergraph.hyperedges]
    for pot in model.potentials:
        h = frozenset(pot.hyperedge)
        maximal = not any(h < other for other in edge_sets)
        if maximal and pot.max_abs() < min_interaction - tol:
            report.weak_maximal_hyperedges.append(tuple(pot.hyperedge))
        if pot.max_abs() > max_interaction + tol:
            report.oversized_entries.append(tuple(pot.hyperedge))
    report.uncovered_edges = sorted(set(report.uncovered_edges))
    report.ok = not (report.uncovered_edges or report.weak_maximal_hyperedges
                     or report.oversized_entries)
    return report


# ---------------------------------------------------------------------------
# Ground-truth model generators.
# ---------------------------------------------------------------------------

def _random_centered_table(hyperedge: Region, strength: float,
                           rng: np.random.Generator) -> PotentialTable:
    """Centered-gauge table whose largest entry is exactly `strength`."""
    k = len(hyperedge)
    m = int(full_support_mask(k).sum())
    while True:
        coefs = rng.uniform(-1.0, 1.0, size=m)
        pot = centered_potential(hyperedge, coefs)
        peak = pot.max_abs()
        if peak > 1e-9:
            return PotentialTable(hyperedge, pot.values * (strength / peak))


def generate_model(topology: str, n: int, r: int = 2,
                   min_interaction: float = 0.4, max_interaction: float = 0.4,
                   seed: int = 0, degree: int = 3,
                   hyperedges: Optional[Sequence[Sequence[int]]] = None) -> GibbsNoiseModel:
    """Generate a ground-truth model with validated conditions.

    Topologies: 'chain' (windows of r consecutive qubits), 'cycle' (the same
    with wrap-around), 'random-bounded-degree' (random size-r hyperedges kept
    while the derived graph degree stays within `degree`), and 'explicit'
    (hyperedges passed in).  Potentials are centered-gauge with peak value
    exactly `min_interaction` (feasible only when it is <= max_interaction).
    """
    if min_interaction > max_interaction:
        raise ConfigError("min_interaction exceeds max_interaction")
    if r < 1:
        raise ConfigError("range r must be >= 1")
    rng = stream(seed, "model", topology, n, r)

    if topology == "chain":
        if n < r:
            raise ConfigError(f"chain needs n >= r, got n={n}, r={r}")
        edges = [tuple(range(i, i + r)) for i in range(n - r + 1)]
    elif topology == "cycle":
        if n <= r:
            raise ConfigError(f"cycle needs n > r, got n={n}, r={r}")
        edges = [tuple(sorted((i + j) % n for j in range(r))) for i in range(n)]
    elif topology == "random-bounded-degree":
        edges = _random_bounded_degree_edges(n, r, degree, rng)
    elif topology == "explicit":
        if not hyperedges:
            raise ConfigError("explicit topology requires hyperedges")
        edges = [tuple(int(q) for q in h) for h in hyperedges]
    else:
        raise ConfigError(f"unknown topology {topology!r}")

    hg = Hypergraph(n, tuple(edges), r)
    pots = [_random_centered_table(h, min_interaction, rng) for h in hg.hyperedges]
    model = GibbsNoiseModel(hg, pots, min_interaction, max_interaction, seed)
    report = validate_conditions(model, min_interaction, max_interaction)
    if not report.ok:
        raise ConfigError(f"generated model failed validation: {report.summary()}")
    return model


def _random_bounded_degree_edges(n: int, r: int, degree: int,
                                 rng: np.random.Generator) -> list:
    if degree < r - 1:
        raise ConfigError(f"degree bound {degree} cannot host size-{r} hyperedges")
    adj = np.zeros((n, n), dtype=bool)
    edges: list = []
    seen = set()
    attempts = 8 * n * max(1, degree)
    for _ in range(attempts):
        h = tuple(sorted(rng.choice(n, size=r, replace=False).tolist()))
        if h in seen:
            continue
        trial = adj.copy()
        for a in h:
            for b in h:
                if a != b:
                    trial[a, b] = True
        if trial.sum(axis=1).max() > degree:
            continue
        seen.add(h)
        edges.append(h)
        adj = trial
    if not edges:
        raise ConfigError("failed to place any hyperedge under the degree bound")
    return edges
