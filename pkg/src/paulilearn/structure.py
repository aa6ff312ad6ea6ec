"""Conditional-independence structure recovery from local marginals.

The learner only ever touches marginal tables over small regions, obtained
from a provider: either an exact model (oracle mode) or eigenvalue estimates
inverted into marginals (protocol mode).  The score

    dependence_score(u, I | S) = E_{R,G uniform} E_{s ~ mu_S} | P(R, G | s)
                                                             - P(R | s) P(G | s) |

is zero whenever S shields u from I and bounded away from zero when I meets
the neighborhood of u, which drives a greedy grow-then-prune neighborhood
search per vertex.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .circuits import ShotBank
from .errors import RegionError
from .estimator import (DEFAULT_FLOOR_SIGMA, DEFAULT_GROUPS, EigenvalueTable,
                        MarginalTable, _tuple_index_perm, default_prob_floor,
                        estimate_region, exact_marginal_table,
                        marginal_from_alphas)
from .gibbs import GibbsNoiseModel
from .pauli import PauliString, Region, embed, validate_region

STRUCTURE_FORMAT = "learned-structure/1"


class MarginalProvider:
    """Cache of marginal tables keyed by (sorted) region."""

    mode = "abstract"

    def __init__(self):
        self._cache: Dict[Region, MarginalTable] = {}
        self.regions_queried: list = []

    def marginal(self, region: Sequence[int]) -> MarginalTable:
        key = tuple(sorted(int(q) for q in region))
        if len(set(key)) != len(key):
            raise RegionError(f"repeated qubit in region {region}")
        if key not in self._cache:
            self.regions_queried.append(key)
            self._cache[key] = self._compute(key)
        return self._cache[key]

    def _compute(self, region: Region) -> MarginalTable:
        raise NotImplementedError


class OracleProvider(MarginalProvider):
    """Exact marginals from a ground-truth model (floored for consistency)."""

    mode = "oracle"

    def __init__(self, model: GibbsNoiseModel, floor: Optional[float] = None):
        super().__init__()
        self.model = model
        self.n = model.n
        self.floor = floor

    def _compute(self, region: Region) -> MarginalTable:
        return exact_marginal_table(self.model, region, self.floor)


class ProtocolProvider(MarginalProvider):
    """Marginals reconstructed from shot-bank eigenvalue estimates."""

    mode = "protocol"

    def __init__(self, bank: ShotBank, groups: int = DEFAULT_GROUPS,
                 floor_sigma: float = DEFAULT_FLOOR_SIGMA,
                 floor: Optional[float] = None,
                 table: Optional[EigenvalueTable] = None,
                 fixed_amplitude: Optional[float] = None):
        super().__init__()
        self.bank = bank
        self.n = bank.n
        self.groups = groups
        self.floor_sigma = floor_sigma
        self.floor = floor
        self.fixed_amplitude = fixed_amplitude
        self.table = table if table is not None else EigenvalueTable(bank.n)

    def _have_all(self, region: Region) -> bool:
        t = len(region)
        for li in range(1, 4**t):
            if embed(PauliString.from_index(t, li), region, self.n) not in self.table:
                return False
        return True

    def _compute(self, region: Region) -> MarginalTable:
        if not self._have_all(region):
            for est in estimate_region(self.bank, region, self.groups,
                                       self.floor_sigma, self.fixed_amplitude):
                if est.pauli not in self.table:
                    self.table.add(est)
        return marginal_from_alphas(region, self.table, self.floor)


# ---------------------------------------------------------------------------
# Dependence score.
# ---------------------------------------------------------------------------

def _axes_table(table: MarginalTable) -> np.ndarray:
    """Reshape a region table into one base-4 letter axis per qubit."""
    t = len(table.region)
    arr = np.empty(4**t)
    arr[_tuple_index_perm(t)] = table.probs
    return arr.reshape((4,) * t)


def conditional_split(table: MarginalTable, u: int, group: Sequence[int],
                      given: Sequence[int]) -> tuple:
    """Joint and product conditionals of (u, group) given the rest.

    Returns (cond_joint, cond_product, given_weights) with shapes
    (4, 4**|group|, 4**|given|) for the first two and (4**|given|,) for the
    weights; conditioning states are weighted by the table's own marginal.
    """
    region = table.region
    u_pos = region.index(u)
    g_pos = [region.index(q) for q in group]
    s_pos = [region.index(q) for q in given]
    if len({u_pos, *g_pos, *s_pos}) != len(region):
        raise RegionError("u, group and given must partition the table region")
    arr = _axes_table(table).transpose([u_pos] + g_pos + s_pos)
    arr = arr.reshape(4, 4 ** len(g_pos), 4 ** len(s_pos))
    p_s = arr.sum(axis=(0, 1))
    cond_joint = arr / p_s
    cond_u = arr.sum(axis=1) / p_s
    cond_g = arr.sum(axis=0) / p_s
    cond_product = cond_u[:, None, :] * cond_g[None, :, :]
    return cond_joint, cond_product, p_s


def dependence_score(u: int, group: Sequence[int], given: Sequence[int],
                     provider: MarginalProvider) -> float:
    """Average absolute conditional-covariance score for (u, group | given)."""
    group = tuple(int(q) for q in group)
    given = tuple(int(q) for q in given)
    if u in group or u in given or set(group) & set(given):
        raise RegionError(f"overlapping u={u}, group={group}, given={given}")
    table = provider.marginal((u,) + group + given)
    cond_joint, cond_product, p_s = conditional_split(table, u, group, given)
    delta = np.abs(cond_joint - cond_product)
    per_state = delta.mean(axis=(0, 1))
    return float((per_state * p_s).sum())


# ---------------------------------------------------------------------------
# Greedy neighborhood learning.
# ---------------------------------------------------------------------------

def _candidate_groups(available: Sequence[int], max_size: int) -> list:
    out = []
    for size in range(1, max_size + 1):
        out.extend(itertools.combinations(sorted(available), size))
    return sorted(out)


def neighborhood_learning(u: int, provider: MarginalProvider, n: int, r: int,
                          score_threshold: float, superset_cap: int) -> Region:
    """Grow-then-prune estimate of the neighborhood of vertex u.

    Grow: while the superset is within the cap, add the candidate group of at
    most r-1 vertices with the largest score above the threshold (lexicographic
    tie-break).  Prune: against a snapshot of the grown superset, drop every
    vertex whose single-vertex score given the rest falls below the threshold.
    """
    grown: list = []
    while len(grown) <= superset_cap:
        available = [v for v in range(n) if v != u and v not in grown]
        best, best_score = None, score_threshold
        for cand in _candidate_groups(available, r - 1):
            score = dependence_score(u, cand, tuple(grown), provider)
            if score > best_score:
                best, best_score = cand, score
        if best is None:
            break
        grown.extend(best)

    snapshot = sorted(grown)
    kept = []
    for v in snapshot:
        rest = tuple(w for w in snapshot if w != v)
        if dependence_score(u, (v,), rest, provider) >= score_threshold:
            kept.append(v)
    return tuple(kept)


@dataclass
class LearnedStructure:
    n: int
    neighborhoods: Dict[int, Region]
    adjacency: np.ndarray
    clique_candidates: list
    score_threshold: float
    superset_cap: int
    provider_mode: str
    warnings: list = field(default_factory=list)

    def edges(self) -> list:
        return [(a, b) for a in range(self.n) for b in range(a + 1, self.n)
                if self.adjacency[a, b]]

    def to_dict(self) -> dict:
        return {"format": STRUCTURE_FORMAT, "n": self.n,
                "neighborhoods": {str(u): list(s) for u, s in self.neighborhoods.items()},
                "edges": [list(e) for e in self.edges()],
                "clique_candidates": [list(c) for c in self.clique_candidates],
                "score_threshold": self.score_threshold,
                "superset_cap": self.superset_cap,
                "provider_mode": self.provider_mode,
                "warnings": self.warnings}

    @staticmethod
    def from_dict(d: dict) -> "LearnedStructure":
        n = int(d["n"])
        adj = np.zeros((n, n), dtype=bool)
        for a, b in d["edges"]:
            adj[a, b] = adj[b, a] = True
        return LearnedStructure(
            n, {int(u): tuple(s) for u, s in d["neighborhoods"].items()}, adj,
            [tuple(c) for c in d["clique_candidates"]],
            float(d["score_threshold"]), int(d["superset_cap"]),
            d.get("provider_mode", "unknown"), list(d.get("warnings", [])))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @staticmethod
    def load(path) -> "LearnedStructure":
        return LearnedStructure.from_dict(json.loads(Path(path).read_text()))


def cliques_up_to(adjacency: np.ndarray, max_size: int) -> list:
    """All cliques of size 1..max_size, each sorted, in lexicographic order."""
    n = adjacency.shape[0]
    out = [(v,) for v in range(n)]
    frontier = out
    for _ in range(max_size - 1):
        nxt = []
        for clique in frontier:
            for v in range(clique[-1] + 1, n):
                if all(adjacency[w, v] for w in clique):
                    nxt.append(clique + (v,))
        out.extend(nxt)
        frontier = nxt
    return sorted(out)


def learn_graph(provider: MarginalProvider, n: int, r: int,
                score_threshold: float, superset_cap: int,
                symmetrize: str = "intersection") -> LearnedStructure:
    """Neighborhoods for every vertex, assembled into a graph.

    An edge requires membership in both endpoint neighborhoods (symmetrize =
    "intersection", the default) or in at least one ("union"); asymmetric
    pairs are recorded as warnings either way.
    """
    if symmetrize not in ("intersection", "union"):
        raise ValueError(f"unknown symmetrization {symmetrize!r}")
    neighborhoods = {u: neighborhood_learning(u, provider, n, r,
                                              score_threshold, superset_cap)
                     for u in range(n)}
    adj = np.zeros((n, n), dtype=bool)
    warnings = []
    for u in range(n):
        for v in range(u + 1, n):
            forward = v in neighborhoods[u]
            backward = u in neighborhoods[v]
            if forward and backward:
                adj[u, v] = adj[v, u] = True
            elif forward or backward:
                warnings.append(f"asymmetric neighborhood pair ({u}, {v})")
                if symmetrize == "union":
                    adj[u, v] = adj[v, u] = True
    return LearnedStructure(n, neighborhoods, adj, cliques_up_to(adj, r),
                            score_threshold, superset_cap, provider.mode,
                            warnings)


# ---------------------------------------------------------------------------
# Score-accuracy verification (test mode).
# ---------------------------------------------------------------------------

@dataclass
class ScoreAccuracyReport:
    max_deviation: float
    worst_triple: Optional[tuple]
    violations: list
    checked: int

    def ok(self) -> bool:
        return not self.violations


def iter_score_triples(n: int, r: int, max_given: int) -> Iterable[tuple]:
    for u in range(n):
        others = [v for v in range(n) if v != u]
        for gsize in range(1, r):
            for group in itertools.combinations(others, gsize):
                rest = [v for v in others if v not in group]
                for ssize in range(0, max_given + 1):
                    for given in itertools.combinations(rest, ssize):
                        yield u, group, given


def score_accuracy_report(provider: MarginalProvider, exact: MarginalProvider,
                          n: int, r: int, max_given: int, tolerance: float,
                          sample: Optional[int] = None,
                          seed: int = 0) -> ScoreAccuracyReport:
    """Compare provider scores against exact scores over (u, I, S) triples.

    Exhaustive below `sample`; otherwise a seeded random subset of triples is
    checked.  Triples whose deviation exceeds the tolerance are reported, not
    raised.
    """
    triples = list(iter_score_triples(n, r, max_given))
    if sample is not None and sample < len(triples):
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(triples), size=sample, replace=False)
        triples = [triples[i] for i in sorted(idx)]
    worst, worst_triple, violations = 0.0, None, []
    for u, group, given in triples:
        approx = dependence_score(u, group, given, provider)
        truth = dependence_score(u, group, given, exact)
        dev = abs(approx - truth)
        if dev > worst:
            worst, worst_triple = dev, (u, group, given)
        if dev > tolerance:
            violations.append((u, group, given, dev))
    return ScoreAccuracyReport(worst, worst_triple, violations, len(triples))
