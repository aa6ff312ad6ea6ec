"""Recovery of clique potentials from local marginals, and channel distances.

For a hyperedge h, the estimator reads the marginal over an enclosure region
R (h plus every overlapping hyperedge), takes the character transform of its
log, and keeps exactly the coefficients of characters indexed by strings
fully supported on h.  In the centered gauge those coefficients coincide with
the ground-truth potential: potentials of other hyperedges occupy different
character sectors, and the boundary terms of the marginal's effective
log-density live on the enclosure's inner boundary, which h avoids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import EnumerationCapError
from .estimator import MarginalTable
from .gibbs import (MODEL_FORMAT, GibbsNoiseModel, Hypergraph, PotentialTable,
                    full_support_mask)
from .pauli import (ENUMERATION_CAP, PauliString, Region, char_synthesis,
                    char_transform, embedded_index, validate_region)
from .structure import LearnedStructure, MarginalProvider

LEARNED_MODEL_FORMAT = "learned-pauli-gibbs-model/1"


@dataclass(frozen=True)
class RegionAssignment:
    """A hyperedge together with the enclosure its estimator reads."""

    hyperedge: Region
    enclosure: Region
    inner_boundary: Region


def enclosure(h: Sequence[int], hyperedges: Sequence[Sequence[int]],
              n: int) -> RegionAssignment:
    """One layer of hyperedge closure around h.

    The enclosure is h together with every hyperedge that overlaps it, which
    guarantees no vertex of h lies on the inner boundary (vertices contained
    in hyperedges that cross outside the enclosure).
    """
    h = tuple(sorted(validate_region(h, n)))
    region = set(h)
    for other in hyperedges:
        other = set(other)
        if other & set(h):
            region |= other
    region = tuple(sorted(region))
    if len(region) > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"enclosure of {h} has {len(region)} qubits, above the cap")
    boundary = set()
    for other in hyperedges:
        other = set(other)
        if other & set(region) and not other <= set(region):
            boundary |= other & set(region)
    if boundary & set(h):
        raise AssertionError(f"hyperedge {h} touches its inner boundary {boundary}")
    return RegionAssignment(h, region, tuple(sorted(boundary)))


def estimate_potential(h: Sequence[int], table: MarginalTable,
                       all_characters: bool = False) -> PotentialTable:
    """Character projection of the log-marginal onto hyperedge h.

    With `all_characters` the projection keeps every non-identity character
    supported inside h instead of only the fully-supported ones; this is the
    un-gauged variant and is not exact for overlapping hyperedges.
    """
    h = tuple(h)
    region = table.region
    positions = [region.index(q) for q in h]
    t = len(region)
    k = len(h)
    coefs = char_transform(np.log(table.probs), t)
    dense = np.zeros(4**k)
    keep = np.flatnonzero(full_support_mask(k)) if not all_characters \
        else np.arange(1, 4**k)
    for li in keep:
        dense[li] = coefs[embedded_index(int(li), positions, t)]
    return PotentialTable(h, char_synthesis(dense, k))


@dataclass
class LearnedModel:
    """Learned potentials plus the reconstructed error model."""

    structure: Optional[LearnedStructure]
    potentials: Dict[Region, PotentialTable]
    model: GibbsNoiseModel
    spurious: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def max_abs_entries(self) -> Dict[Region, float]:
        return {h: pot.max_abs() for h, pot in self.potentials.items()}

    def to_dict(self) -> dict:
        d = self.model.to_dict()
        d["format"] = LEARNED_MODEL_FORMAT
        d["spurious"] = [list(h) for h in self.spurious]
        d["provenance"] = self.provenance
        return d

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @staticmethod
    def load(path) -> "LearnedModel":
        d = json.loads(Path(path).read_text())
        if d.get("format") != LEARNED_MODEL_FORMAT:
            raise ValueError(f"unexpected learned-model format {d.get('format')!r}")
        d2 = dict(d)
        d2["format"] = MODEL_FORMAT
        model = GibbsNoiseModel.from_dict(
            {k: v for k, v in d2.items() if k not in ("spurious", "provenance")})
        potentials = {tuple(p.hyperedge): p for p in model.potentials}
        return LearnedModel(None, potentials, model,
                            [tuple(h) for h in d.get("spurious", [])],
                            d.get("provenance", {}))


def learn_potentials(candidates: Sequence[Sequence[int]],
                     provider: MarginalProvider, n: int, r: int,
                     report_threshold: float = 0.2,
                     structure: Optional[LearnedStructure] = None,
                     all_characters: bool = False,
                     provenance: Optional[dict] = None) -> LearnedModel:
    """Estimate a potential for every candidate hyperedge and reconstruct mu.

    Candidates whose largest estimated entry stays below `report_threshold`
    are flagged as plausibly spurious but retained in the reconstruction.
    """
    candidates = [tuple(sorted(validate_region(h, n))) for h in candidates]
    if len(set(candidates)) != len(candidates):
        raise ValueError("duplicate candidate hyperedges")
    potentials: Dict[Region, PotentialTable] = {}
    spurious = []
    for h in sorted(candidates):
        assignment = enclosure(h, candidates, n)
        table = provider.marginal(assignment.enclosure)
        pot = estimate_potential(h, table, all_characters)
        potentials[h] = pot
        if pot.max_abs() < report_threshold:
            spurious.append(h)
    model = GibbsNoiseModel(
        Hypergraph(n, tuple(sorted(candidates)), max(r, max(map(len, candidates)))),
        [potentials[h] for h in sorted(candidates)])
    return LearnedModel(structure, potentials, model, spurious, provenance or {})


def potential_errors(learned: LearnedModel, truth: GibbsNoiseModel) -> Dict[Region, float]:
    """Max-norm distance per hyperedge between learned and true potentials.

    Candidates missing from the truth are compared against zero, and true
    hyperedges missing from the learned set contribute their own peak value.
    """
    true_pots = {tuple(sorted(p.hyperedge)): p for p in truth.potentials}
    out: Dict[Region, float] = {}
    for h, pot in learned.potentials.items():
        if h in true_pots:
            ref = true_pots[h].values
            # align qubit order: both tables are stored in sorted-region order
            out[h] = float(np.max(np.abs(pot.values - ref)))
        else:
            out[h] = pot.max_abs()
    for h, pot in true_pots.items():
        if h not in learned.potentials:
            out[h] = pot.max_abs()
    return out


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance between two probability tables."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"table shapes differ: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def diamond_distance(truth: GibbsNoiseModel, learned: GibbsNoiseModel) -> float:
    """Diamond distance between the corresponding Pauli channels.

    For Pauli channels this is exactly twice the total variation distance
    between the error distributions; exact only below the enumeration cap.
    """
    if truth.n != learned.n:
        raise ValueError("model sizes differ")
    return 2.0 * tv_distance(truth.full_table(), learned.full_table())


def regional_tv_report(truth: GibbsNoiseModel, learned: GibbsNoiseModel,
                       regions: Sequence[Sequence[int]]) -> dict:
    """Per-region marginal TVs, the above-cap proxy for the diamond distance."""
    per_region = {}
    for region in regions:
        region = tuple(sorted(region))
        per_region[region] = tv_distance(truth.exact_marginal(region),
                                         learned.exact_marginal(region))
    return {"proxy": True, "per_region": per_region,
            "max_regional_tv": max(per_region.values()) if per_region else 0.0}
