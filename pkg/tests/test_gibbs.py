"""Gibbs noise models: exact tables, marginals, sampling, constants, I/O."""

import math

import numpy as np
import pytest

from paulilearn.errors import ConfigError, RegionError
from paulilearn.gibbs import (GibbsNoiseModel, Hypergraph, PotentialTable,
                              centered_potential, compute_constants,
                              derived_graph, full_support_mask, generate_model,
                              max_degree, neighbor_sets, validate_conditions)
from paulilearn.pauli import PauliString, enumerate_paulis, restrict
from paulilearn.seeding import stream


def single_site_model(n, site, z_value):
    """One single-site hyperedge with theta(Z) = z, centered to sum zero."""
    values = np.zeros(4)
    values[PauliString.from_text("Z").index] = z_value
    values -= values.mean()
    hg = Hypergraph(n, ((site,),), 1)
    return GibbsNoiseModel(hg, [PotentialTable((site,), values)])


def brute_force_table(model):
    logw = np.array([model.log_density_unnormalized(p)
                     for p in enumerate_paulis(range(model.n))])
    w = np.exp(logw)
    return w / w.sum()


def test_hypergraph_validation():
    with pytest.raises(RegionError):
        Hypergraph(3, ((0, 1), (1, 0)), 2)       # duplicate modulo order
    with pytest.raises(RegionError):
        Hypergraph(3, ((0, 1, 2),), 2)           # larger than r
    with pytest.raises(RegionError):
        Hypergraph(3, ((),), 2)


def test_log_density_empty_and_single_table():
    uniform = GibbsNoiseModel(Hypergraph(2, (), 2), [])
    for p in enumerate_paulis(range(2)):
        assert uniform.log_density_unnormalized(p) == 0.0
    # single hyperedge {0}, theta(Z) = c: log density of Z tensor I is c
    c = 0.7
    values = np.zeros(4)
    values[PauliString.from_text("Z").index] = c
    model = GibbsNoiseModel(Hypergraph(3, ((0,),), 1),
                            [PotentialTable((0,), values)])
    assert model.log_density_unnormalized(PauliString.from_text("ZII")) == c
    assert model.log_density_unnormalized(PauliString.from_text("IZZ")) == 0.0


def test_log_density_matches_brute_force_normalization():
    model = generate_model("chain", 3, r=2, seed=9)
    table = model.full_table()
    logc = model.partition()
    for p in enumerate_paulis(range(3)):
        assert model.log_density_unnormalized(p) == pytest.approx(
            math.log(table[p.index]) + logc, abs=1e-10)


def test_partition_uniform():
    model = GibbsNoiseModel(Hypergraph(3, (), 2), [])
    assert model.partition() == pytest.approx(3 * math.log(4), abs=1e-12)


def test_partition_single_site_four_term_sum():
    t = 0.8
    model = single_site_model(1, 0, t)
    values = model.potentials[0].values
    want = math.log(sum(math.exp(v) for v in values))
    assert model.partition() == pytest.approx(want, abs=1e-12)


def test_gauge_shift_invariance():
    # adding a constant to a potential shifts C but not mu
    rng = stream(4, "test-gauge")
    base_vals = rng.normal(size=16) * 0.3
    hg = Hypergraph(2, ((0, 1),), 2)
    m1 = GibbsNoiseModel(hg, [PotentialTable((0, 1), base_vals)])
    m2 = GibbsNoiseModel(hg, [PotentialTable((0, 1), base_vals + 1.3)])
    assert np.max(np.abs(m1.full_table() - m2.full_table())) < 1e-14


def test_full_table_matches_scalar_log_density():
    model = generate_model("chain", 4, r=2, seed=12)
    assert np.max(np.abs(model.full_table() - brute_force_table(model))) < 1e-12


def test_normalization_of_generated_models():
    for n, topo in [(3, "chain"), (6, "cycle"), (8, "chain")]:
        model = generate_model(topo, n, r=2, seed=n)
        assert abs(model.full_table().sum() - 1.0) < 1e-12
        assert np.all(model.full_table() > 0)


def test_exact_marginal_definitional_sum():
    model = generate_model("chain", 3, r=2, seed=1)
    table = model.full_table()
    region = (0, 1)
    got = model.exact_marginal(region)
    want = np.zeros(16)
    for p in enumerate_paulis(range(3)):
        want[restrict(p, region).index] += table[p.index]
    assert np.max(np.abs(got - want)) < 1e-14
    assert got.sum() == pytest.approx(1.0, abs=1e-12)
    # full region returns mu itself; uniform model returns 4**-|A|
    assert np.array_equal(model.exact_marginal((0, 1, 2)), table)
    uniform = GibbsNoiseModel(Hypergraph(3, (), 2), [])
    assert np.allclose(uniform.exact_marginal((1, 2)), 1.0 / 16.0)


def test_conditional_independence_across_separator():
    # B = {1} separates A = {0} from C = {2} on a 3-chain
    model = generate_model("chain", 3, r=2, seed=7)
    arr = np.empty(64)
    from paulilearn.estimator import _tuple_index_perm

    arr[_tuple_index_perm(3)] = model.full_table()
    p = arr.reshape(4, 4, 4)          # axes: qubit 0, 1, 2
    p_b = p.sum(axis=(0, 2))
    joint_given_b = p / p_b[None, :, None]
    a_given_b = p.sum(axis=2) / p_b[None, :]
    c_given_b = p.sum(axis=0) / p_b[:, None]
    product = a_given_b[:, :, None] * c_given_b[None, :, :]
    assert np.max(np.abs(joint_given_b - product)) < 1e-10


def test_sampling_uniform_frequencies():
    model = GibbsNoiseModel(Hypergraph(2, (), 2), [])
    rng = stream(0, "test-sample-uniform")
    idx = model.sample_errors(rng, 100_000)
    letters = np.stack([(idx & 1) | (((idx >> 2) & 1) << 1),
                        ((idx >> 1) & 1) | (((idx >> 3) & 1) << 1)], axis=1)
    for q in range(2):
        freqs = np.bincount(letters[:, q], minlength=4) / letters.shape[0]
        assert np.max(np.abs(freqs - 0.25)) < 0.01


def test_sampling_matches_exact_table():
    model = generate_model("chain", 3, r=2, seed=3)
    rng = stream(1, "test-sample-exact")
    idx = model.sample_errors(rng, 1_000_000)
    hist = np.bincount(idx, minlength=64) / idx.size
    tv = 0.5 * np.abs(hist - model.full_table()).sum()
    assert tv <= 0.02


def test_sampling_deterministic_under_stream():
    model = generate_model("chain", 3, r=2, seed=3)
    a = model.sample_errors(stream(9, "s"), 1000)
    b = model.sample_errors(stream(9, "s"), 1000)
    assert np.array_equal(a, b)


def test_mcmc_sampler_converges_small_n():
    # force the MCMC path on a model small enough to compare exactly
    model = generate_model("chain", 3, r=2, seed=5)
    rng = stream(2, "test-mcmc")
    idx = model._sample_mcmc(rng, 4000, burn_in=300, thinning=10)
    hist = np.bincount(idx, minlength=64) / idx.size
    tv = 0.5 * np.abs(hist - model.full_table()).sum()
    assert tv <= 0.08


def test_derived_graph_and_neighbors():
    hg = Hypergraph(5, ((0, 1, 2),), 3)
    adj = derived_graph(hg)
    assert adj[0, 1] and adj[1, 2] and adj[0, 2] and not adj[0, 3]
    assert max_degree(adj) == 2
    chain = Hypergraph(4, ((0, 1), (1, 2), (2, 3)), 2)
    cadj = derived_graph(chain)
    assert neighbor_sets(cadj)[1] == (0, 2)
    assert max_degree(cadj) == 2


def test_compute_constants_zero_potentials():
    model = GibbsNoiseModel(Hypergraph(2, (), 2), [])
    consts = compute_constants(model, 0.4, 0.4)
    assert consts.interaction_strength == 0.0
    assert consts.conditional_floor == pytest.approx(0.25)
    assert consts.score_threshold == 1.0       # nothing to find convention
    assert consts.superset_cap >= 1


def test_compute_constants_single_edge():
    values = np.zeros(16)
    values[PauliString.from_text("XX").index] = 0.5
    values -= values.mean()
    model = GibbsNoiseModel(Hypergraph(3, ((0, 1),), 2),
                            [PotentialTable((0, 1), values)])
    consts = compute_constants(model, 0.4, 0.5)
    # interaction strength is the summed per-site max over touching hyperedges
    assert consts.interaction_strength == pytest.approx(model.potentials[0].max_abs())
    assert consts.conditional_floor == pytest.approx(
        0.25 * math.exp(-2 * consts.interaction_strength))
    assert consts.score_threshold > 0
    # overrides win exactly
    assert compute_constants(model, 0.4, 0.5, score_threshold=0.02,
                             superset_cap=3).score_threshold == 0.02
    assert compute_constants(model, 0.4, 0.5, superset_cap=3).superset_cap == 3


def test_validate_conditions_reports():
    zero = np.zeros(16)
    weak = GibbsNoiseModel(Hypergraph(2, ((0, 1),), 2),
                           [PotentialTable((0, 1), zero)])
    report = validate_conditions(weak, 0.4, 0.4)
    assert not report.ok
    assert (0, 1) in report.uncovered_edges
    assert (0, 1) in report.weak_maximal_hyperedges

    big = np.zeros(16)
    big[5] = 1.4
    big -= big.mean()
    loud = GibbsNoiseModel(Hypergraph(2, ((0, 1),), 2),
                           [PotentialTable((0, 1), big)])
    report = validate_conditions(loud, 0.4, 0.4)
    assert report.oversized_entries

    good = generate_model("chain", 4, r=2, seed=2)
    assert validate_conditions(good, 0.4, 0.4).ok


def test_generated_models_hit_peak_exactly():
    model = generate_model("chain", 5, r=2, min_interaction=0.4,
                           max_interaction=0.4, seed=8)
    for pot in model.potentials:
        assert pot.max_abs() == pytest.approx(0.4, abs=1e-12)


def test_generated_models_are_centered_gauge():
    model = generate_model("cycle", 5, r=2, seed=4)
    for pot in model.potentials:
        assert pot.zero_sum_defect() < 1e-12
        assert pot.centered_gauge_defect() < 1e-12


def test_centered_potential_full_support_sector():
    mask = full_support_mask(2)
    assert int(mask.sum()) == 9
    coefs = np.linspace(-1, 1, 9)
    pot = centered_potential((0, 1), coefs)
    # summing over any single site's letter with the other fixed gives zero
    vals = np.empty(16)
    from paulilearn.estimator import _tuple_index_perm

    vals[_tuple_index_perm(2)] = pot.values
    grid = vals.reshape(4, 4)
    assert np.max(np.abs(grid.sum(axis=0))) < 1e-12
    assert np.max(np.abs(grid.sum(axis=1))) < 1e-12


def test_chain_and_cycle_counts():
    assert len(generate_model("chain", 8, r=2, seed=0).hypergraph.hyperedges) == 7
    assert len(generate_model("cycle", 8, r=2, seed=0).hypergraph.hyperedges) == 8


def test_random_bounded_degree_models_validate():
    for seed in range(25):
        model = generate_model("random-bounded-degree", 7, r=2, degree=3, seed=seed)
        assert validate_conditions(model, 0.4, 0.4).ok
        assert max_degree(derived_graph(model.hypergraph)) <= 3


def test_generator_rejects_infeasible():
    with pytest.raises(ConfigError):
        generate_model("chain", 4, r=2, min_interaction=0.5, max_interaction=0.4)
    with pytest.raises(ConfigError):
        generate_model("hexagon", 4)


def test_model_file_round_trip(tmp_path):
    model = generate_model("chain", 4, r=2, seed=6)
    path = tmp_path / "model.json"
    model.save(path)
    loaded = GibbsNoiseModel.load(path)
    assert loaded.n == model.n
    assert loaded.hypergraph.hyperedges == model.hypergraph.hyperedges
    for a, b in zip(loaded.potentials, model.potentials):
        assert np.array_equal(a.values, b.values)     # bit-exact
    assert loaded.min_interaction == model.min_interaction
    assert loaded.seed == model.seed
