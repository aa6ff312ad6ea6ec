"""Per-shot simulation of the randomized benchmarking-style circuits.

One shot prepares |0..0>, applies a layer of random single-qubit Cliffords,
a prep-side SPAM error, a random Pauli twirl, k draws from the error
distribution, a second random twirl, a meas-side SPAM error, the adjoint of
the opening Clifford layer, and measures every qubit in the computational
basis (the closing layer undoes the basis rotation, so the readout happens in
the basis the opening layer prepared).

Because every layer between the two Clifford layers is a Pauli string, the
pre-measurement state factorizes per qubit as C_i' E_i C_i |0>, where E is
the mask-XOR of all sampled Pauli layers.  Outcome probabilities are read
from a precomputed 24 x 4 table, so simulation is exact and vectorizes over
shots.

Shots are generated in fixed-size blocks; block b of the group with
repetition count k draws from the random stream (master_seed, "shots", k, b),
making banks bit-identical regardless of execution order or worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel import PauliChannel, SPAMModel
from .cliffords import CLIFFORD_ORDER_VERSION, GROUP_SIZE, OUTCOME_PROB1
from .errors import ConfigError
from .pauli import PauliString, indices_from_letters, letters_from_indices
from .seeding import stream

BANK_FORMAT = "shot-bank/1"
BLOCK_SIZE = 8192


@dataclass(frozen=True)
class ShotRecord:
    """One circuit run: sampled layers, repetition count and outcome bits."""

    clifford_ids: tuple
    q_in: PauliString
    q_out: PauliString
    k: int
    outcome: tuple

    @property
    def n(self) -> int:
        return self.q_in.n


class ShotGroup:
    """All shots sharing one repetition count, stored as arrays."""

    def __init__(self, k: int, cliffords: np.ndarray, q_in: np.ndarray,
                 q_out: np.ndarray, outcomes: np.ndarray):
        self.k = int(k)
        self.cliffords = cliffords      # (N, n) uint8 in [0, 24)
        self.q_in = q_in                # (N, n) uint8 letter codes
        self.q_out = q_out              # (N, n) uint8 letter codes
        self.outcomes = outcomes        # (N, n) uint8 bits
        if not (cliffords.shape == q_in.shape == q_out.shape == outcomes.shape):
            raise ValueError("shot group arrays must share one shape")

    @property
    def count(self) -> int:
        return self.cliffords.shape[0]

    @property
    def n(self) -> int:
        return self.cliffords.shape[1]

    def record(self, j: int) -> ShotRecord:
        n = self.n
        return ShotRecord(
            tuple(int(c) for c in self.cliffords[j]),
            PauliString.from_index(n, int(indices_from_letters(self.q_in[j]))),
            PauliString.from_index(n, int(indices_from_letters(self.q_out[j]))),
            self.k,
            tuple(int(b) for b in self.outcomes[j]),
        )


class ShotBank:
    """Shot groups keyed by repetition count, plus reproducibility metadata."""

    def __init__(self, n: int, groups: Sequence[ShotGroup], master_seed: int,
                 spam_description: Optional[dict] = None):
        self.n = n
        self.groups = {g.k: g for g in groups}
        if len(self.groups) != len(groups):
            raise ConfigError("duplicate repetition count in schedule")
        self.master_seed = master_seed
        self.spam_description = spam_description or {"kind": "none"}
        for g in self.groups.values():
            if g.n != n:
                raise ConfigError("shot group qubit count mismatch")

    @property
    def ks(self) -> list:
        return sorted(self.groups)

    @property
    def schedule(self) -> list:
        return [(k, self.groups[k].count) for k in self.ks]

    @property
    def total_shots(self) -> int:
        return sum(g.count for g in self.groups.values())

    def save(self, path) -> None:
        header = {"format": BANK_FORMAT, "n": self.n, "seed": self.master_seed,
                  "clifford_order": CLIFFORD_ORDER_VERSION,
                  "spam": self.spam_description,
                  "schedule": [[k, c] for k, c in self.schedule]}
        from .pauli import LETTERS

        with open(path, "w") as fh:
            fh.write(json.dumps(header) + "\n")
            for k in self.ks:
                g = self.groups[k]
                for j in range(g.count):
                    cl = ",".join(str(int(c)) for c in g.cliffords[j])
                    qi = "".join(LETTERS[c] for c in g.q_in[j])
                    qo = "".join(LETTERS[c] for c in g.q_out[j])
                    ob = "".join(str(int(b)) for b in g.outcomes[j])
                    fh.write(f"{k}\t{cl}\t{qi}\t{qo}\t{ob}\n")

    @staticmethod
    def load(path) -> "ShotBank":
        from .pauli import LETTERS

        code = {c: i for i, c in enumerate(LETTERS)}
        with open(path) as fh:
            header = json.loads(fh.readline())
            if header.get("format") != BANK_FORMAT:
                raise ConfigError(f"unexpected bank format {header.get('format')!r}")
            if header.get("clifford_order") != CLIFFORD_ORDER_VERSION:
                raise ConfigError("bank was produced with a different Clifford ordering")
            n = int(header["n"])
            buckets: dict = {}
            for line in fh:
                k_s, cl, qi, qo, ob = line.rstrip("\n").split("\t")
                buckets.setdefault(int(k_s), []).append((cl, qi, qo, ob))
        groups = []
        for k, rows in buckets.items():
            count = len(rows)
            cliffords = np.empty((count, n), dtype=np.uint8)
            q_in = np.empty((count, n), dtype=np.uint8)
            q_out = np.empty((count, n), dtype=np.uint8)
            outcomes = np.empty((count, n), dtype=np.uint8)
            for j, (cl, qi, qo, ob) in enumerate(rows):
                cliffords[j] = [int(c) for c in cl.split(",")]
                q_in[j] = [code[c] for c in qi]
                q_out[j] = [code[c] for c in qo]
                outcomes[j] = [int(b) for b in ob]
            groups.append(ShotGroup(k, cliffords, q_in, q_out, outcomes))
        bank = ShotBank(n, groups, int(header["seed"]), header.get("spam"))
        expected = [[int(k), int(c)] for k, c in header.get("schedule", [])]
        if expected and [[k, c] for k, c in bank.schedule] != sorted(expected):
            raise ConfigError("bank schedule does not match its header")
        return bank


def _simulate_block(channel: PauliChannel, spam: SPAMModel, k: int, count: int,
                    rng: np.random.Generator) -> ShotGroup:
    """Vectorized simulation of `count` shots at repetition count k."""
    n = channel.n
    cliffords = rng.integers(0, GROUP_SIZE, size=(count, n), dtype=np.uint8)
    q_in = rng.integers(0, 4, size=(count, n), dtype=np.uint8)
    q_out = rng.integers(0, 4, size=(count, n), dtype=np.uint8)
    prep_err = spam.sample_letters(rng, count, "prep")
    meas_err = spam.sample_letters(rng, count, "meas")
    composite = q_in ^ q_out ^ prep_err ^ meas_err
    for _ in range(k):
        draws = channel.sample_errors(rng, count)
        composite ^= letters_from_indices(draws, n)
    p1 = OUTCOME_PROB1[cliffords, composite]
    outcomes = (rng.random((count, n)) < p1).astype(np.uint8)
    return ShotGroup(k, cliffords, q_in, q_out, outcomes)


def simulate_shot(channel: PauliChannel, spam: SPAMModel, k: int,
                  rng: np.random.Generator) -> ShotRecord:
    """Single-shot convenience wrapper around the block simulator."""
    if k < 1:
        raise ConfigError("repetition count must be >= 1")
    return _simulate_block(channel, spam, k, 1, rng).record(0)


def _block_args(schedule):
    for k, count in schedule:
        blocks = (count + BLOCK_SIZE - 1) // BLOCK_SIZE
        for b in range(blocks):
            size = min(BLOCK_SIZE, count - b * BLOCK_SIZE)
            yield k, b, size


_WORKER_STATE: dict = {}


def _worker_init(channel, spam, master_seed):
    _WORKER_STATE["args"] = (channel, spam, master_seed)


def _worker_block(task):
    k, b, size = task
    channel, spam, master_seed = _WORKER_STATE["args"]
    rng = stream(master_seed, "shots", k, b)
    g = _simulate_block(channel, spam, k, size, rng)
    return k, b, g.cliffords, g.q_in, g.q_out, g.outcomes


def batch_simulate(channel: PauliChannel, spam: Optional[SPAMModel],
                   schedule: Sequence, master_seed: int,
                   workers: int = 1) -> ShotBank:
    """Simulate a full schedule of (repetition count, shot count) groups.

    The result is bit-identical for a given (channel, spam, schedule, seed)
    regardless of `workers`, because every fixed-size block draws from its own
    derived stream.
    """
    if spam is None:
        spam = SPAMModel.ideal(channel.n)
    if spam.n != channel.n:
        raise ConfigError("SPAM and channel qubit counts differ")
    schedule = [(int(k), int(c)) for k, c in schedule]
    for k, count in schedule:
        if k < 1 or count < 1:
            raise ConfigError(f"invalid schedule entry ({k}, {count})")
    if len({k for k, _ in schedule}) != len(schedule):
        raise ConfigError("schedule repeats a repetition count")

    tasks = list(_block_args(schedule))
    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                                 initargs=(channel, spam, master_seed)) as pool:
            for k, b, cl, qi, qo, ob in pool.map(_worker_block, tasks, chunksize=4):
                results[(k, b)] = (cl, qi, qo, ob)
    else:
        _worker_init(channel, spam, master_seed)
        for task in tasks:
            k, b, cl, qi, qo, ob = _worker_block(task)
            results[(k, b)] = (cl, qi, qo, ob)

    groups = []
    for k, count in schedule:
        blocks = (count + BLOCK_SIZE - 1) // BLOCK_SIZE
        parts = [results[(k, b)] for b in range(blocks)]
        groups.append(ShotGroup(
            k,
            np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]),
            np.concatenate([p[2] for p in parts]),
            np.concatenate([p[3] for p in parts]),
        ))
    return ShotBank(channel.n, groups, master_seed, spam.to_dict())
