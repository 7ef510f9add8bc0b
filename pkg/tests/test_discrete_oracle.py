"""Exact-kernel oracle tests.

The oracle itself gets cross-checked against an independent textbook
construction for the single-chain case, hand algebra for a two-point toy,
and mutation controls that must fail loudly.
"""

import numpy as np
import pytest

from interchain.discrete_oracle import (
    DiscreteProposal,
    DiscreteScalarProposal,
    DiscreteSpec,
    DiscreteTarget,
    SizeGuardError,
    build_mwg_transition_matrix,
    build_sub_kernel,
    build_transition_matrix,
    check_conditional_detailed_balance,
    check_invariance,
    check_mwg_conditional_detailed_balance,
    product_pmf,
    random_mh_instance,
    random_mwg_scalar_proposal,
    unclipped_alpha,
)
from interchain.interacting_mh import ChainEnsemble, sweep
from interchain.interacting_mwg import mwg_sweep
from interchain.proposals import InteractionContext
from interchain.streams import StreamKeys
from interchain.targets import JointConditional


def uniform_proposal_spec(n_chains=2):
    """Uniform target, symmetric (uniform) proposals on 3 points."""
    pmf = np.full(3, 1.0 / 3.0)

    def proposal(i, j, others, from_idx):
        return np.full(3, 1.0 / 3.0)

    return DiscreteSpec(values=((0.0, 1.0, 2.0),), n_chains=n_chains, target_pmf=pmf, proposal=proposal)


def classical_mh_matrix(target_pmf, proposal_rows):
    """Independent textbook single-chain Metropolis-Hastings matrix."""
    m = len(target_pmf)
    P = np.zeros((m, m))
    for x in range(m):
        for z in range(m):
            if z == x:
                continue
            num = target_pmf[z] * proposal_rows[z][x]
            den = target_pmf[x] * proposal_rows[x][z]
            alpha = min(1.0, num / den) if num > 0 and den > 0 else 0.0
            P[x, z] = alpha * proposal_rows[x][z]
        P[x, x] = 1.0 - P[x].sum()
    return P


def test_sub_kernel_uniform_target_symmetric_proposal():
    # alpha is identically 1: the row is the proposal mixture itself
    spec = uniform_proposal_spec()
    row = build_sub_kernel(spec, 0, (1, 2))
    np.testing.assert_allclose(row, [1 / 3, 1 / 3, 1 / 3], rtol=1e-15)


def test_sub_kernel_point_mass_target_is_delta():
    pmf = np.array([1.0, 0.0, 0.0])

    def proposal(i, j, others, from_idx):
        return np.full(3, 1.0 / 3.0)

    spec = DiscreteSpec(values=((0.0, 1.0, 2.0),), n_chains=2, target_pmf=pmf, proposal=proposal)
    row = build_sub_kernel(spec, 0, (0, 1))
    np.testing.assert_array_equal(row, [1.0, 0.0, 0.0])


def test_sub_kernel_rows_sum_to_one():
    rng = np.random.default_rng(0)
    spec = random_mh_instance(rng)
    for e in range(spec.n_ensemble_states):
        row = build_sub_kernel(spec, 1, spec.ensemble_tuple(e))
        assert row.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(row >= 0.0)


def test_single_chain_matches_textbook_construction():
    rng = np.random.default_rng(1)
    target = rng.uniform(0.2, 1.0, 3)
    target /= target.sum()
    rows = rng.uniform(0.1, 1.0, (3, 3))
    rows /= rows.sum(axis=1, keepdims=True)

    def proposal(i, j, others, from_idx):
        return rows[from_idx]

    spec = DiscreteSpec(values=((0.0, 1.0, 2.0),), n_chains=1, target_pmf=target, proposal=proposal)
    ours = build_transition_matrix(spec).matrix
    textbook = classical_mh_matrix(target, rows)
    np.testing.assert_allclose(ours, textbook, atol=1e-15)


def test_identity_proposal_gives_identity_matrix():
    pmf = np.array([0.2, 0.3, 0.5])

    def proposal(i, j, others, from_idx):
        row = np.zeros(3)
        row[from_idx] = 1.0
        return row

    spec = DiscreteSpec(values=((0.0, 1.0, 2.0),), n_chains=2, target_pmf=pmf, proposal=proposal)
    P = build_transition_matrix(spec)
    np.testing.assert_array_equal(P.matrix, np.eye(9))
    assert check_invariance(P, pmf, 2) == 0.0


def test_invariance_and_mutation_control():
    rng = np.random.default_rng(2)
    spec = random_mh_instance(rng)
    P = build_transition_matrix(spec)
    assert check_invariance(P, spec.target_pmf, spec.n_chains) <= 1e-12
    bad = build_transition_matrix(spec, alpha_fn=unclipped_alpha)
    assert check_invariance(bad, spec.target_pmf, spec.n_chains) >= 1e-4


def test_invariance_with_zero_mass_point():
    rng = np.random.default_rng(3)
    target = np.array([0.5, 0.0, 0.5])
    rows = rng.uniform(0.1, 1.0, (2, 2, 3, 3))
    rows /= rows.sum(axis=-1, keepdims=True)

    def proposal(i, j, others, from_idx):
        return rows[i, j, from_idx]

    spec = DiscreteSpec(values=((0.0, 1.0, 2.0),), n_chains=2, target_pmf=target, proposal=proposal)
    P = build_transition_matrix(spec)
    assert check_invariance(P, target, 2) <= 1e-12


def test_conditional_detailed_balance():
    rng = np.random.default_rng(4)
    spec = random_mh_instance(rng)
    assert check_conditional_detailed_balance(spec) <= 1e-12
    assert check_conditional_detailed_balance(spec, alpha_fn=unclipped_alpha) >= 1e-4


def test_two_point_toy_by_hand():
    # symmetric proposal on two points: flow x->z is min(pi(x), pi(z)) * q / N
    target = np.array([0.3, 0.7])

    def proposal(i, j, others, from_idx):
        return np.array([0.5, 0.5])

    spec = DiscreteSpec(values=((0.0, 1.0),), n_chains=2, target_pmf=target, proposal=proposal)
    row = build_sub_kernel(spec, 0, (0, 1))
    # from x=0: alpha = 1 toward the heavier point, mass = q = 0.5 (both j's agree)
    assert row[1] == pytest.approx(0.5)
    row_back = build_sub_kernel(spec, 0, (1, 1))
    # from x=1: alpha = 0.3/0.7, mass = alpha * 0.5
    assert row_back[0] == pytest.approx(0.5 * 0.3 / 0.7)
    # hand detailed balance: pi(0) * P(0,1) == pi(1) * P(1,0)
    assert target[0] * row[1] == pytest.approx(target[1] * row_back[0], rel=1e-14)


def test_product_pmf_layout():
    target = np.array([0.25, 0.75])
    prod = product_pmf(target, 2)
    # chain 0 most significant: index = p0 * 2 + p1
    np.testing.assert_allclose(prod, [0.0625, 0.1875, 0.1875, 0.5625])


def test_mwg_oracle_invariance_and_controls():
    rng = np.random.default_rng(5)
    spec = random_mh_instance(rng, m=3, n=2, n_chains=2)
    scalar = random_mwg_scalar_proposal(rng, spec)
    P = build_mwg_transition_matrix(spec, scalar)
    assert check_invariance(P, spec.target_pmf, spec.n_chains) <= 1e-12
    bad = build_mwg_transition_matrix(spec, scalar, alpha_fn=unclipped_alpha)
    assert check_invariance(bad, spec.target_pmf, spec.n_chains) >= 1e-4
    assert check_mwg_conditional_detailed_balance(spec, scalar) <= 1e-12
    assert check_mwg_conditional_detailed_balance(spec, scalar, alpha_fn=unclipped_alpha) >= 1e-4


def test_size_guard():
    pmf = np.full(3, 1.0 / 3.0)

    def proposal(i, j, others, from_idx):
        return pmf

    spec = DiscreteSpec(values=((0.0, 1.0, 2.0),), n_chains=14, target_pmf=pmf, proposal=proposal)
    with pytest.raises(SizeGuardError):
        build_transition_matrix(spec)


def test_point_indexing_roundtrip():
    rng = np.random.default_rng(6)
    spec = random_mh_instance(rng, m=3, n=2, n_chains=2)
    for idx in range(spec.n_points):
        vec = spec.point_vector(idx)
        assert spec.vector_to_point(vec) == idx
    with pytest.raises(ValueError):
        spec.vector_to_point(np.array([123.456, 0.0]))
    for e in range(spec.n_ensemble_states):
        assert spec.ensemble_index(spec.ensemble_tuple(e)) == e


def test_adapters_expose_spec():
    rng = np.random.default_rng(7)
    spec = random_mh_instance(rng)
    target = DiscreteTarget(spec)
    kernel = DiscreteProposal(spec)
    x = spec.point_vector(1)
    assert target.log_density(x) == pytest.approx(np.log(spec.target_pmf[1]))
    ensemble = np.stack([spec.point_vector(1), spec.point_vector(2)])
    ctx = InteractionContext(0, 1, ensemble)
    pmf = spec.proposal(0, 1, (-1, 2), 1)
    assert kernel.log_density(ctx, x, spec.point_vector(0)) == pytest.approx(np.log(pmf[0]))
    draws = [kernel.sample(ctx, np.random.default_rng(k)) for k in range(300)]
    counts = np.bincount([spec.vector_to_point(d) for d in draws], minlength=3) / 300
    assert np.abs(counts - pmf).max() < 4 * np.sqrt(pmf * (1 - pmf) / 300).max()


def test_production_sweep_matches_oracle_row_small():
    rng = np.random.default_rng(8)
    spec = random_mh_instance(rng)
    P = build_transition_matrix(spec)
    target = DiscreteTarget(spec)
    kernel = DiscreteProposal(spec)
    keys = StreamKeys(321)
    start = (0, 2)
    start_states = np.stack([spec.point_vector(p) for p in start])
    trials = 20000
    counts = np.zeros(spec.n_ensemble_states)
    for k in range(trials):
        out, _, _ = sweep(ChainEnsemble(start_states, sweep_count=k), target, kernel, keys)
        counts[spec.ensemble_index([spec.vector_to_point(r) for r in out.states])] += 1
    freq = counts / trials
    row = P.matrix[spec.ensemble_index(start)]
    sigma = np.sqrt(row * (1 - row) / trials)
    assert np.all(np.abs(freq - row) <= 4 * np.maximum(sigma, 1e-12))


def test_production_mwg_sweep_matches_oracle_row():
    rng = np.random.default_rng(9)
    spec = random_mh_instance(rng, m=3, n=2, n_chains=2)
    scalar = random_mwg_scalar_proposal(rng, spec)
    P = build_mwg_transition_matrix(spec, scalar)
    ct = JointConditional(DiscreteTarget(spec))
    kernel = DiscreteScalarProposal(spec, scalar)
    keys = StreamKeys(654)
    start = (3, 7)
    start_states = np.stack([spec.point_vector(p) for p in start])
    trials = 20000
    counts = np.zeros(spec.n_ensemble_states)
    for k in range(trials):
        out, _ = mwg_sweep(ChainEnsemble(start_states, sweep_count=k), ct, kernel, keys)
        counts[spec.ensemble_index([spec.vector_to_point(r) for r in out.states])] += 1
    freq = counts / trials
    row = P.matrix[spec.ensemble_index(start)]
    sigma = np.sqrt(row * (1 - row) / trials)
    assert np.all(np.abs(freq - row) <= 4 * np.maximum(sigma, 1e-12))
    assert counts[row == 0.0].sum() == 0


def test_spec_validation():
    with pytest.raises(ValueError):
        DiscreteSpec(values=((0.0, 0.0),), n_chains=1, target_pmf=np.array([0.5, 0.5]), proposal=None)
    with pytest.raises(ValueError):
        DiscreteSpec(values=((0.0, 1.0),), n_chains=1, target_pmf=np.array([0.6, 0.6]), proposal=None)
