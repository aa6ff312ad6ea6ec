"""SPAM-robust eigenvalue estimation and marginal reconstruction.

Every shot is reused for every target Pauli string.  For a target P, a shot
with Clifford layer C, twirls Qin/Qout and outcome x contributes the sample

    sample = weight * sign(P, Qin) * sign(P, Qout)

where `weight` is 3**w(P) times the product over the support of P of the
per-qubit measurement factors (zero unless the local Clifford maps Z onto the
local letter of P).  The mean of these samples over shots with repetition
count k equals C_P * alpha_P**k, with C_P the SPAM attenuation, so fitting an
exponential in k recovers alpha_P independently of SPAM.

Estimates use a median of means over deterministic contiguous blocks; decay
points below the configured noise floor are dropped before the fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from .circuits import ShotBank, ShotGroup, ShotRecord
from .cliffords import GROUP_SIZE, MEASURE_WEIGHT
from .errors import (DimensionMismatchError, IndeterminateDecayError,
                     InsufficientDataError)
from .pauli import (PauliString, Region, char_synthesis, embed,
                    letters_from_indices, validate_region)

# Default median-of-means group count: ceil(8 ln(1/delta)) at delta = 0.05.
DEFAULT_GROUPS = 24
# Default fit noise floor, in units of 3**(w/2) * sqrt(groups / shots).
DEFAULT_FLOOR_SIGMA = 3.0

# Single-site character signs: SIGN[a, b] = -1 iff letters a, b anticommute.
_SIGN = np.ones((4, 4), dtype=np.int8)
for _a in range(1, 4):
    for _b in range(1, 4):
        if _a != _b:
            _SIGN[_a, _b] = -1

# Measurement factor with the 3-per-site normalization folded into the
# non-identity letters, so products over sites come out as 3**w * (+-1 or 0).
_WEIGHTED_MW = MEASURE_WEIGHT.astype(np.float64).copy()
_WEIGHTED_MW[:, 1:, :] *= 3.0

_CHUNK = 131072


def measurement_weight(p: PauliString, shot: ShotRecord) -> float:
    """Per-shot factor 3**w(P) <x|C'PC|x><0|C'PC|0> from one record."""
    if p.n != shot.n:
        raise DimensionMismatchError(f"string has {p.n} qubits, shot has {shot.n}")
    value = 1.0
    for q in range(p.n):
        letter = p.letter(q)
        if letter:
            value *= _WEIGHTED_MW[shot.clifford_ids[q], letter, shot.outcome[q]]
    return value


def twirled_sample(p: PauliString, shot: ShotRecord) -> float:
    """Measurement weight times the twirl character signs."""
    value = measurement_weight(p, shot)
    for q in range(p.n):
        letter = p.letter(q)
        if letter:
            value *= _SIGN[letter, shot.q_in.letter(q)]
            value *= _SIGN[letter, shot.q_out.letter(q)]
    return float(value)


def twirled_samples(p: PauliString, group: ShotGroup) -> np.ndarray:
    """Vectorized twirled samples of one Pauli over a whole shot group."""
    if p.n != group.n:
        raise DimensionMismatchError(f"string has {p.n} qubits, group has {group.n}")
    acc = np.ones(group.count)
    for q in range(p.n):
        letter = p.letter(q)
        if letter:
            acc *= _WEIGHTED_MW[group.cliffords[:, q], letter, group.outcomes[:, q]]
            acc *= _SIGN[letter, group.q_in[:, q]]
            acc *= _SIGN[letter, group.q_out[:, q]]
    return acc


def median_of_means(samples: Sequence[float], groups: int) -> float:
    """Median of the means of `groups` deterministic contiguous blocks."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("median_of_means needs at least one sample")
    if groups < 1:
        raise ValueError("group count must be >= 1")
    groups = min(groups, samples.size)
    bounds = _block_bounds(samples.size, groups)
    means = [samples[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])]
    return float(np.median(means))


def _block_bounds(count: int, groups: int) -> np.ndarray:
    return np.round(np.linspace(0, count, groups + 1)).astype(np.int64)


@dataclass
class EigenvalueEstimate:
    """Fitted eigenvalue for one Pauli string, with diagnostics."""

    pauli: PauliString
    value: float
    per_k: Dict[int, float]
    stderr: float
    amplitude: float            # fitted SPAM attenuation estimate
    groups: int
    flags: tuple = ()


def fit_eigenvalue_decay(points: Dict[int, float],
                         stderrs: Optional[Dict[int, float]] = None,
                         floors: Optional[Dict[int, float]] = None) -> dict:
    """Fit points y_k ~ amplitude * alpha**k.

    Weighted least squares of log|y_k| against k with weights y_k**2; the sign
    of alpha comes from a majority vote over ratios of adjacent usable points
    separated by an odd number of repetitions (even gaps carry no sign
    information), defaulting to +1.  Points with |y_k| below their noise floor
    are dropped.  Raises IndeterminateDecayError when no point survives and
    InsufficientDataError when only one does.
    """
    floors = floors or {}
    stderrs = stderrs or {}
    usable = sorted(k for k, y in points.items() if abs(y) > floors.get(k, 0.0))
    if not usable:
        raise IndeterminateDecayError(
            "all decay points are below the noise floor (eigenvalue or SPAM "
            "attenuation too small for this budget)")
    if len(usable) < 2:
        raise InsufficientDataError("need at least two usable repetition counts")

    ks = np.array(usable, dtype=np.float64)
    ys = np.array([points[k] for k in usable])
    logs = np.log(np.abs(ys))
    weights = ys**2
    kbar = float((weights * ks).sum() / weights.sum())
    lbar = float((weights * logs).sum() / weights.sum())
    denom = float((weights * (ks - kbar) ** 2).sum())
    slope = float((weights * (ks - kbar) * (logs - lbar)).sum() / denom)
    intercept = lbar - slope * kbar

    votes = 0
    for a, b in zip(usable[:-1], usable[1:]):
        gap = b - a
        if gap % 2 == 1:
            ratio = points[b] / points[a]
            votes += 1 if (ratio > 0) else -1
    sign = -1.0 if votes < 0 else 1.0

    alpha = sign * math.exp(slope)
    alpha = max(-1.0, min(1.0, alpha))

    var_slope = 0.0
    for k in usable:
        se = stderrs.get(k)
        if se is None:
            continue
        w = points[k] ** 2
        var_log = (se / points[k]) ** 2
        var_slope += (w * (k - kbar) / denom) ** 2 * var_log
    stderr = abs(alpha) * math.sqrt(var_slope) if var_slope else 0.0
    return {"value": alpha, "amplitude": math.exp(intercept), "stderr": stderr,
            "used_ks": usable}


def noise_floor(weight: int, shots: int, groups: int,
                floor_sigma: float = DEFAULT_FLOOR_SIGMA) -> float:
    """Smallest decay-point magnitude the fit will trust."""
    return floor_sigma * 3.0 ** (weight / 2.0) * math.sqrt(groups) / math.sqrt(shots)


def fixed_amplitude_estimate(points: Dict[int, float],
                             stderrs: Optional[Dict[int, float]] = None,
                             floors: Optional[Dict[int, float]] = None,
                             amplitude: float = 1.0) -> dict:
    """Eigenvalue from decay points when the SPAM attenuation is known.

    Reads the smallest available repetition count k0 and returns
    sign * |y_k0 / amplitude|**(1/k0).  For k0 = 1 this is a plain linear
    estimator and needs no noise floor; root extraction at k0 > 1 keeps the
    floor guard.  This is the swap-in decoder for SPAM-free configurations,
    where the free exponential fit would have to resolve alpha**2 against
    shot noise even though the amplitude is known exactly.
    """
    floors = floors or {}
    stderrs = stderrs or {}
    k0 = min(points)
    y = points[k0] / amplitude
    if k0 > 1:
        if abs(points[k0]) <= floors.get(k0, 0.0):
            raise IndeterminateDecayError(
                "smallest repetition count is below the noise floor and root "
                "extraction would be unstable")
        sign = 1.0
        if k0 % 2 == 1:
            sign = math.copysign(1.0, y)
        value = sign * abs(y) ** (1.0 / k0)
        se = stderrs.get(k0)
        stderr = (abs(se / amplitude) / (k0 * max(abs(y), 1e-12) ** (1 - 1.0 / k0))
                  if se is not None else 0.0)
    else:
        value = y
        se = stderrs.get(k0)
        stderr = abs(se / amplitude) if se is not None else 0.0
    return {"value": max(-1.0, min(1.0, value)), "amplitude": amplitude,
            "stderr": stderr, "used_ks": [k0]}


def decay_points(p: PauliString, bank: ShotBank,
                 groups: int = DEFAULT_GROUPS) -> Dict[int, float]:
    """Median-of-means decay point for every repetition count in the bank."""
    return {k: median_of_means(twirled_samples(p, bank.groups[k]), groups)
            for k in bank.ks}


def _estimate_from_points(p: PauliString, points: dict, ses: dict, floors: dict,
                          groups: int,
                          fixed_amplitude: Optional[float]) -> EigenvalueEstimate:
    try:
        if fixed_amplitude is None:
            fit = fit_eigenvalue_decay(points, ses, floors)
        else:
            fit = fixed_amplitude_estimate(points, ses, floors, fixed_amplitude)
    except IndeterminateDecayError:
        return EigenvalueEstimate(p, 0.0, points, _floor_stderr(floors), 1.0,
                                  groups, ("indeterminate",))
    except InsufficientDataError:
        return EigenvalueEstimate(p, 0.0, points, _floor_stderr(floors), 1.0,
                                  groups, ("insufficient",))
    return EigenvalueEstimate(p, fit["value"], points, fit["stderr"],
                              fit["amplitude"], groups)


def estimate_pauli(p: PauliString, bank: ShotBank, groups: int = DEFAULT_GROUPS,
                   floor_sigma: float = DEFAULT_FLOOR_SIGMA,
                   fixed_amplitude: Optional[float] = None) -> EigenvalueEstimate:
    """Full per-Pauli pipeline: decay points, noise floor, decay decoding."""
    if p.weight() == 0:
        return EigenvalueEstimate(p, 1.0, {k: 1.0 for k in bank.ks}, 0.0, 1.0, groups)
    points, ses, floors = {}, {}, {}
    w = p.weight()
    for k in bank.ks:
        g = bank.groups[k]
        samples = twirled_samples(p, g)
        points[k], ses[k] = _mom_with_stderr(samples, groups)
        floors[k] = noise_floor(w, g.count, groups, floor_sigma)
    return _estimate_from_points(p, points, ses, floors, groups, fixed_amplitude)


def _floor_stderr(floors: Dict[int, float]) -> float:
    return min(floors.values()) if floors else 0.0


def _mom_with_stderr(samples: np.ndarray, groups: int) -> tuple:
    groups = min(groups, samples.size)
    bounds = _block_bounds(samples.size, groups)
    means = np.array([samples[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])])
    est = float(np.median(means))
    if groups > 1:
        stderr = math.sqrt(math.pi / (2.0 * groups)) * float(means.std(ddof=1))
    else:
        stderr = float(samples.std(ddof=1)) / math.sqrt(samples.size)
    return est, stderr


class EigenvalueTable:
    """Estimated eigenvalues keyed by Pauli string."""

    def __init__(self, n: int, estimates: Optional[Iterable[EigenvalueEstimate]] = None):
        self.n = n
        self.estimates: Dict[PauliString, EigenvalueEstimate] = {}
        for e in estimates or ():
            self.add(e)

    def add(self, estimate: EigenvalueEstimate) -> None:
        if estimate.pauli.n != self.n:
            raise DimensionMismatchError("estimate has wrong qubit count")
        self.estimates[estimate.pauli] = estimate

    def __contains__(self, p: PauliString) -> bool:
        return p in self.estimates

    def __len__(self) -> int:
        return len(self.estimates)

    def value(self, p: PauliString) -> float:
        if p.weight() == 0:
            return 1.0
        try:
            return self.estimates[p].value
        except KeyError:
            raise KeyError(f"no eigenvalue estimate for {p.text()}") from None

    def save(self, path) -> None:
        lines = [f"# n={self.n}", "# pauli\testimate\tstderr\tamplitude\tflags"]
        for p in sorted(self.estimates, key=lambda q: (q.n, q.index)):
            e = self.estimates[p]
            flags = ",".join(e.flags)
            lines.append(f"{p.text()}\t{e.value!r}\t{e.stderr!r}\t{e.amplitude!r}\t{flags}")
        Path(path).write_text("\n".join(lines) + "\n")

    @staticmethod
    def load(path) -> "EigenvalueTable":
        table = None
        for line in Path(path).read_text().splitlines():
            if line.startswith("# n="):
                table = EigenvalueTable(int(line.split("=", 1)[1]))
                continue
            if not line or line.startswith("#"):
                continue
            text, value, stderr, amplitude, flags = line.split("\t")
            p = PauliString.from_text(text)
            if table is None:
                table = EigenvalueTable(p.n)
            table.add(EigenvalueEstimate(
                p, float(value), {}, float(stderr), float(amplitude),
                0, tuple(f for f in flags.split(",") if f)))
        if table is None:
            raise ValueError(f"no eigenvalue table header found in {path}")
        return table


def batch_estimate(paulis: Sequence[PauliString], bank: ShotBank,
                   groups: int = DEFAULT_GROUPS,
                   floor_sigma: float = DEFAULT_FLOOR_SIGMA,
                   fixed_amplitude: Optional[float] = None) -> EigenvalueTable:
    """Estimate many Pauli eigenvalues from one bank (shots fully reused)."""
    table = EigenvalueTable(bank.n)
    for p in paulis:
        table.add(estimate_pauli(p, bank, groups, floor_sigma, fixed_amplitude))
    return table


# ---------------------------------------------------------------------------
# Region-batched estimation: all 4**t Paulis of a region in one pass.
# ---------------------------------------------------------------------------

_PERM_CACHE: Dict[int, np.ndarray] = {}


def _tuple_index_perm(t: int) -> np.ndarray:
    """Map table index (z << t | x) -> base-4 letter-tuple index (site 0 first)."""
    if t not in _PERM_CACHE:
        letters = letters_from_indices(np.arange(4**t), t)
        radix = 4 ** np.arange(t - 1, -1, -1, dtype=np.int64)
        _PERM_CACHE[t] = (letters.astype(np.int64) * radix).sum(axis=1)
    return _PERM_CACHE[t]


def _local_weights(t: int) -> np.ndarray:
    letters = letters_from_indices(np.arange(4**t), t)
    return (letters != 0).sum(axis=1)


# Fused per-site factor table: FACTOR[(c, qin, qout, x), letter] combines the
# measurement weight (3 folded into non-identity letters) with both twirl
# character signs, so each site costs one integer index plus one gather.
_FACTOR = np.zeros((GROUP_SIZE * 4 * 4 * 2, 4))
for _c in range(GROUP_SIZE):
    for _qi in range(4):
        for _qo in range(4):
            for _x in range(2):
                row = ((_c * 4 + _qi) * 4 + _qo) * 2 + _x
                _FACTOR[row] = (_WEIGHTED_MW[_c, :, _x]
                                * _SIGN[:, _qi] * _SIGN[:, _qo])


def _site_columns(group: ShotGroup, q: int, a: int, b: int) -> np.ndarray:
    """(b-a, 4) per-letter factors for one site over a slice of shots."""
    rows = (((group.cliffords[a:b, q].astype(np.int64) * 4
              + group.q_in[a:b, q]) * 4
             + group.q_out[a:b, q]) * 2
            + group.outcomes[a:b, q])
    return _FACTOR[rows]


def _product_matrix(group: ShotGroup, sites, a: int, b: int) -> np.ndarray:
    """(b-a, 4**len(sites)) products of per-site factors, site 0 outermost."""
    acc = _site_columns(group, sites[0], a, b)
    for q in sites[1:]:
        col = _site_columns(group, q, a, b)
        acc = (acc[:, :, None] * col[:, None, :]).reshape(b - a, -1)
    return acc


def region_block_means(group: ShotGroup, region: Region, groups: int) -> tuple:
    """Median-of-means inputs for every Pauli supported on a region.

    Returns (block_means, counts) with block_means of shape (groups, 4**t) in
    canonical table order.  The per-block sum over shots of the per-site
    factor products is evaluated as one matrix product between the two halves
    of the region's sites, which keeps the intermediates small.
    """
    t = len(region)
    groups = min(groups, group.count)
    bounds = _block_bounds(group.count, groups)
    perm = _tuple_index_perm(t)
    left = region[: (t + 1) // 2]
    right = region[(t + 1) // 2:]
    means = np.empty((len(bounds) - 1, 4**t))
    for bi, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        total = np.zeros(4**t)
        for c0 in range(a, b, _CHUNK):
            c1 = min(c0 + _CHUNK, b)
            lmat = _product_matrix(group, left, c0, c1)
            if right:
                rmat = _product_matrix(group, right, c0, c1)
                total += (lmat.T @ rmat).reshape(-1)
            else:
                total += lmat.sum(axis=0)
        means[bi] = total[perm] / (b - a)
    return means, np.diff(bounds)


def estimate_region(bank: ShotBank, region: Sequence[int],
                    groups: int = DEFAULT_GROUPS,
                    floor_sigma: float = DEFAULT_FLOOR_SIGMA,
                    fixed_amplitude: Optional[float] = None) -> list:
    """Eigenvalue estimates for every Pauli embedded in a region."""
    region = validate_region(region, bank.n)
    t = len(region)
    weights = _local_weights(t)
    per_k = {}
    for k in bank.ks:
        g = bank.groups[k]
        means, _ = region_block_means(g, region, groups)
        y = np.median(means, axis=0)
        if means.shape[0] > 1:
            se = np.sqrt(math.pi / (2.0 * means.shape[0])) * means.std(axis=0, ddof=1)
        else:
            se = np.zeros(4**t)
        per_k[k] = (y, se, g.count)

    out = []
    for li in range(4**t):
        local = PauliString.from_index(t, li)
        global_p = embed(local, region, bank.n)
        if weights[li] == 0:
            out.append(EigenvalueEstimate(global_p, 1.0,
                                          {k: 1.0 for k in bank.ks}, 0.0, 1.0, groups))
            continue
        points = {k: float(per_k[k][0][li]) for k in bank.ks}
        ses = {k: float(per_k[k][1][li]) for k in bank.ks}
        floors = {k: noise_floor(int(weights[li]), per_k[k][2], groups, floor_sigma)
                  for k in bank.ks}
        out.append(_estimate_from_points(global_p, points, ses, floors, groups,
                                         fixed_amplitude))
    return out


# ---------------------------------------------------------------------------
# Marginal reconstruction.
# ---------------------------------------------------------------------------

def default_prob_floor(region_size: int) -> float:
    return 1e-6 * 4.0 ** (-region_size)


@dataclass
class MarginalTable:
    """Probability table over the Pauli strings of a region."""

    region: Region
    probs: np.ndarray
    floor: float

    def prob(self, p: PauliString) -> float:
        return float(self.probs[p.index])


def project_to_simplex(raw: np.ndarray, floor: float) -> np.ndarray:
    """Clip below `floor`, then rescale the excess mass so the sum is 1.

    Keeps every entry >= floor exactly while moving as little total-variation
    mass as possible among the entries above the floor.
    """
    size = raw.size
    if floor <= 0 or floor * size >= 1.0:
        raise ValueError(f"floor {floor} infeasible for {size} entries")
    clipped = np.maximum(raw, floor)
    excess = clipped - floor
    total = float(excess.sum())
    target = 1.0 - floor * size
    if total <= 0.0:
        return np.full(size, 1.0 / size)
    return floor + excess * (target / total)


def marginal_from_alphas(region: Sequence[int], table: EigenvalueTable,
                         floor: Optional[float] = None,
                         project: bool = True) -> MarginalTable:
    """Invert eigenvalues into a marginal over a region.

    Computes 4**(-|A|) * sum_Q sign(P, Q) * alpha_Q over the strings Q
    supported in the region (the character inversion of the eigenvalue map),
    then floors and renormalizes unless `project` is false.
    """
    region = validate_region(region, table.n)
    t = len(region)
    alphas = np.empty(4**t)
    for li in range(4**t):
        local = PauliString.from_index(t, li)
        alphas[li] = table.value(embed(local, region, table.n))
    raw = char_synthesis(alphas / 4.0**t, t)
    if floor is None:
        floor = default_prob_floor(t)
    probs = project_to_simplex(raw, floor) if project else raw
    return MarginalTable(region, probs, floor)


def exact_marginal_table(model, region: Sequence[int],
                         floor: Optional[float] = None) -> MarginalTable:
    """Marginal table from an exact model, floored the same way."""
    region = validate_region(region, model.n)
    if floor is None:
        floor = default_prob_floor(len(region))
    probs = project_to_simplex(model.exact_marginal(region), floor)
    return MarginalTable(tuple(region), probs, floor)
