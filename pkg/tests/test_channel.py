"""Pauli channel, SPAM attenuation, and circuit-simulator contracts."""

import numpy as np
import pytest

from paulilearn.channel import (PauliChannel, SPAMModel, convolve_channels,
                                depolarizing_table)
from paulilearn.circuits import ShotBank, batch_simulate, simulate_shot
from paulilearn.errors import ConfigError
from paulilearn.gibbs import generate_model
from paulilearn.pauli import PauliString, character_value, enumerate_paulis
from paulilearn.seeding import stream


def xor_convolve(mu_a, mu_b, n):
    """Independent composition of error tables by mask XOR (oracle)."""
    out = np.zeros_like(mu_a)
    size = 1 << n
    for ia in range(4**n):
        xa, za = ia & (size - 1), ia >> n
        for ib in range(4**n):
            xb, zb = ib & (size - 1), ib >> n
            out[((za ^ zb) << n) | (xa ^ xb)] += mu_a[ia] * mu_b[ib]
    return out


def test_eigenvalue_identity_is_one():
    chan = PauliChannel.product([depolarizing_table(0.3)] * 2)
    assert chan.eigenvalue(PauliString.identity(2)) == pytest.approx(1.0)


def test_depolarizing_eigenvalue_closed_form():
    p = 0.3
    chan = PauliChannel.product([depolarizing_table(p)])
    # oracle: the four-term signed sum
    mu = depolarizing_table(p)
    x = PauliString.from_text("X")
    want = sum(character_value(x, q) * mu[q.index] for q in enumerate_paulis(range(1)))
    assert want == pytest.approx(1 - 4 * p / 3)
    assert chan.eigenvalue(x) == pytest.approx(want, abs=1e-14)


def test_composition_multiplies_eigenvalues():
    # convolution oracle at n=2: eigenvalues of the composite channel are
    # products, checked against a direct XOR-convolution of the table
    model = generate_model("chain", 2, r=2, seed=21)
    chan = PauliChannel(model)
    mu = chan.probabilities()
    mu2 = xor_convolve(mu, mu, 2)
    chan2 = PauliChannel(mu2, n=2)
    for q in enumerate_paulis(range(2)):
        assert chan2.eigenvalue(q) == pytest.approx(chan.eigenvalue(q) ** 2, abs=1e-12)
    # and the library composition helper agrees with the oracle
    conv = convolve_channels(chan, chan)
    assert np.max(np.abs(conv.probabilities() - mu2)) < 1e-12


def test_eigenvalues_within_unit_interval():
    model = generate_model("cycle", 4, r=2, seed=3)
    alphas = PauliChannel(model).eigenvalues()
    assert np.all(alphas <= 1 + 1e-12) and np.all(alphas >= -1 - 1e-12)


def test_spam_attenuation_values():
    spam = SPAMModel.ideal(3)
    for p in enumerate_paulis(range(3)):
        full = PauliString(3, p.x, p.z)
        assert spam.attenuation(full) == pytest.approx(1.0)

    q = 0.1
    spam = SPAMModel.depolarizing(3, q)
    for text, w in [("XII", 1), ("XYI", 2), ("XYZ", 3)]:
        assert spam.attenuation(PauliString.from_text(text)) == pytest.approx(
            (1 - q) ** (2 * w))
    assert spam.attenuation(PauliString.identity(3)) == pytest.approx(1.0)
    assert spam.min_attenuation(2) == pytest.approx((1 - q) ** 4)


def test_channel_p0():
    chan = PauliChannel.product([depolarizing_table(0.3)] * 2)
    assert chan.p0 == pytest.approx(0.7 ** 2)


def test_simulate_shot_trivial_cases():
    # noiseless channel, identity Cliffords: outcome all zero
    table = np.zeros(16)
    table[0] = 1.0
    chan = PauliChannel(table, n=2)
    spam = SPAMModel.ideal(2)
    rng = stream(0, "shot-trivial")
    for _ in range(20):
        rec = simulate_shot(chan, spam, k=3, rng=rng)
        if all(c == 0 for c in rec.clifford_ids) and rec.q_in == rec.q_out:
            assert rec.outcome == (0, 0)

    # deterministic bit flip: error X on qubit 0, identity elsewhere
    flip = np.zeros(16)
    flip[PauliString.from_text("XI").index] = 1.0
    chan = PauliChannel(flip, n=2)
    for _ in range(20):
        rec = simulate_shot(chan, spam, k=1, rng=rng)
        if all(c == 0 for c in rec.clifford_ids) and rec.q_in.weight() == 0 \
                and rec.q_out.weight() == 0:
            assert rec.outcome == (1, 0)


def test_batch_simulate_determinism_and_schedule():
    model = generate_model("chain", 2, r=2, seed=2)
    chan = PauliChannel(model)
    schedule = [(1, 100), (2, 100)]
    a = batch_simulate(chan, None, schedule, master_seed=5)
    b = batch_simulate(chan, None, schedule, master_seed=5)
    for k in (1, 2):
        for f in ("cliffords", "q_in", "q_out", "outcomes"):
            assert np.array_equal(getattr(a.groups[k], f), getattr(b.groups[k], f))
    assert a.schedule == [(1, 100), (2, 100)]
    assert a.total_shots == 200

    c = batch_simulate(chan, None, schedule, master_seed=6)
    assert any(not np.array_equal(getattr(a.groups[k], f), getattr(c.groups[k], f))
               for k in (1, 2) for f in ("cliffords", "q_in", "q_out"))


def test_batch_simulate_rejects_bad_schedules():
    chan = PauliChannel.product([depolarizing_table(0.1)])
    with pytest.raises(ConfigError):
        batch_simulate(chan, None, [(0, 10)], master_seed=1)
    with pytest.raises(ConfigError):
        batch_simulate(chan, None, [(1, 10), (1, 20)], master_seed=1)


def test_conditioned_measurement_mean_matches_decay():
    # conditioned on the Cliffords mapping onto the target's eigenbasis, the
    # unsigned measurement weight averages to alpha**k (no SPAM, no twirl bias)
    from paulilearn.estimator import measurement_weight, twirled_samples

    p = 0.2
    chan = PauliChannel.product([depolarizing_table(p)])
    alpha = 1 - 4 * p / 3
    bank = batch_simulate(chan, None, [(1, 60000), (2, 60000)], master_seed=9)
    z = PauliString.from_text("Z")
    for k in (1, 2):
        g = bank.groups[k]
        vals = twirled_samples(z, g)
        hit = vals != 0
        assert abs(hit.mean() - 1.0 / 3.0) < 3 * np.sqrt(2.0 / 9.0 / g.count)
        conditioned = vals[hit] / 3.0
        se = conditioned.std() / np.sqrt(hit.sum())
        assert abs(conditioned.mean() - alpha**k) <= 3 * se


def test_bank_file_round_trip(tmp_path):
    model = generate_model("chain", 3, r=2, seed=4)
    chan = PauliChannel(model)
    spam = SPAMModel.depolarizing(3, 0.05)
    bank = batch_simulate(chan, spam, [(1, 500), (3, 200)], master_seed=8)
    path = tmp_path / "bank.txt"
    bank.save(path)
    loaded = ShotBank.load(path)
    assert loaded.n == bank.n and loaded.master_seed == bank.master_seed
    assert loaded.schedule == bank.schedule
    assert loaded.spam_description == bank.spam_description
    for k in (1, 3):
        for f in ("cliffords", "q_in", "q_out", "outcomes"):
            assert np.array_equal(getattr(loaded.groups[k], f),
                                  getattr(bank.groups[k], f))


def test_record_view():
    chan = PauliChannel.product([depolarizing_table(0.2)] * 2)
    bank = batch_simulate(chan, None, [(2, 10)], master_seed=3)
    rec = bank.groups[2].record(4)
    assert rec.k == 2 and rec.n == 2
    assert len(rec.clifford_ids) == 2 and len(rec.outcome) == 2
    assert all(0 <= c < 24 for c in rec.clifford_ids)
