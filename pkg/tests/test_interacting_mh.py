"""Ensemble Metropolis-Hastings sweep tests.

The detailed-balance identity and the selection-law normalization are the
load-bearing properties; the N=1 case must collapse to classical
Metropolis-Hastings draw for draw.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interchain.interacting_mh import (
    ChainEnsemble,
    SelectionProbabilities,
    acceptance_alpha,
    run_sweeps,
    sub_iteration,
    sweep,
)
from interchain.proposals import DistanceAdaptiveGaussian, InteractionContext, ProposalKernel
from interchain.streams import StreamKeys
from interchain.targets import GaussianMixture, TargetDensity, three_mode_benchmark


class TableTarget(TargetDensity):
    """Log-density driven by a dict of point tuples, -inf elsewhere."""

    def __init__(self, table, dim=1):
        self.table = {k: float(v) for k, v in table.items()}
        self.dim = dim

    def log_density(self, x):
        key = tuple(np.asarray(x, dtype=float))
        mass = self.table.get(key, 0.0)
        return np.log(mass) if mass > 0.0 else -np.inf


class FixedCandidateKernel(ProposalKernel):
    """Proposes a fixed candidate; symmetric log-density."""

    def __init__(self, candidate):
        self.candidate = np.asarray(candidate, dtype=float)

    def sample(self, ctx, rng):
        rng.standard_normal(self.candidate.shape[0])  # keep consumption uniform
        return self.candidate.copy()

    def log_density(self, ctx, from_point, to_point):
        return 0.0


class IdentityKernel(ProposalKernel):
    """Always proposes the current state."""

    def sample(self, ctx, rng):
        return np.asarray(ctx.ensemble[ctx.i], dtype=float).copy()

    def log_density(self, ctx, from_point, to_point):
        return 0.0


def test_alpha_equal_densities_is_one():
    t = TableTarget({(0.0,): 0.5, (1.0,): 0.5})
    k = FixedCandidateKernel([1.0])
    ctx = InteractionContext(0, 0, np.array([[0.0]]))
    assert acceptance_alpha(t, k, ctx, np.array([0.0]), np.array([1.0])) == 1.0


def test_alpha_half_density_is_half():
    t = TableTarget({(0.0,): 0.5, (1.0,): 0.25})
    k = FixedCandidateKernel([1.0])
    ctx = InteractionContext(0, 0, np.array([[0.0]]))
    assert acceptance_alpha(t, k, ctx, np.array([0.0]), np.array([1.0])) == pytest.approx(0.5)


def test_alpha_zero_target_is_zero():
    t = TableTarget({(0.0,): 0.5})
    k = FixedCandidateKernel([1.0])
    ctx = InteractionContext(0, 0, np.array([[0.0]]))
    assert acceptance_alpha(t, k, ctx, np.array([0.0]), np.array([1.0])) == 0.0
    # zero-density current state is not an error either: alpha is 0
    assert acceptance_alpha(t, k, ctx, np.array([1.0]), np.array([0.0])) == 0.0


def test_alpha_nan_input_raises():
    t = TableTarget({(0.0,): 0.5})
    k = FixedCandidateKernel([1.0])
    ctx = InteractionContext(0, 0, np.array([[0.0]]))
    with pytest.raises(ValueError):
        acceptance_alpha(t, k, ctx, np.array([np.nan]), np.array([0.0]))


def test_detailed_balance_identity_random_triples():
    target = three_mode_benchmark()
    kern = DistanceAdaptiveGaussian()
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(300):
        ensemble = rng.uniform(-8, 8, size=(4, 2))
        i, j = rng.integers(0, 4, size=2)
        ctx = InteractionContext(int(i), int(j), ensemble)
        x = ensemble[i]
        y = x + rng.normal(0, 2, size=2)
        a_xy = acceptance_alpha(target, kern, ctx, x, y)
        a_yx = acceptance_alpha(target, kern, ctx, y, x)
        lhs = np.log(a_xy) + target.log_density(x) + kern.log_density(ctx, x, y)
        rhs = np.log(a_yx) + target.log_density(y) + kern.log_density(ctx, y, x)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    assert worst <= 1e-10


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=30))
def test_selection_probabilities_normalize(alphas):
    sel = SelectionProbabilities.from_alphas(np.array(alphas))
    assert abs(sel.stay + np.sum(sel.alphas) / len(sel.alphas) - 1.0) <= 1e-12


def test_selection_probabilities_validation():
    with pytest.raises(ValueError):
        SelectionProbabilities(alphas=np.array([1.5]), stay=0.0)
    with pytest.raises(ValueError):
        SelectionProbabilities(alphas=np.array([0.5, 0.5]), stay=0.9)


def test_chain_ensemble_validation():
    with pytest.raises(ValueError):
        ChainEnsemble(np.array([[np.inf, 0.0]]))
    with pytest.raises(ValueError):
        ChainEnsemble(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        ChainEnsemble(np.zeros((2, 2)), sweep_count=-1)


def test_all_alphas_zero_keeps_column():
    # candidates land outside the target support, so every alpha is 0
    t = TableTarget({(0.0,): 1.0})
    k = FixedCandidateKernel([5.0])
    states = np.zeros((3, 1))
    rng = np.random.default_rng(0)
    new_state, record = sub_iteration(states, 1, t, k, rng)
    assert record.proposer == -1
    assert record.selection.stay == 1.0
    np.testing.assert_array_equal(new_state, states[1])


def test_all_alphas_one_never_stays():
    # uniform target mass and symmetric kernel: every alpha is exactly 1
    t = TableTarget({(0.0,): 0.5, (7.0,): 0.5})
    k = FixedCandidateKernel([7.0])
    states = np.zeros((4, 1))
    rng = np.random.default_rng(1)
    new_state, record = sub_iteration(states, 0, t, k, rng)
    assert record.selection.stay == 0.0
    assert record.proposer >= 0
    np.testing.assert_array_equal(new_state, [7.0])


def test_identity_kernel_leaves_ensemble_unchanged():
    target = three_mode_benchmark()
    keys = StreamKeys(3)
    ens = ChainEnsemble(np.random.default_rng(2).uniform(-5, 5, size=(5, 2)))
    out, stats, _ = sweep(ens, target, IdentityKernel(), keys)
    np.testing.assert_array_equal(out.states, ens.states)
    assert out.sweep_count == 1


def test_single_chain_reduces_to_classical_mh():
    """With N=1 the sweep is classical Metropolis-Hastings, draw for draw."""
    target = GaussianMixture(weights=[1.0], means=[[0.0]], covariances=[[[1.0]]])
    kern = DistanceAdaptiveGaussian()
    keys = StreamKeys(17)
    state = np.array([[2.0]])

    ens = ChainEnsemble(state.copy())
    interacting_path = []
    for _ in range(400):
        ens, _, _ = sweep(ens, target, kern, keys)
        interacting_path.append(ens.states[0, 0])

    classical = state[0].copy()
    classical_path = []
    for k in range(400):
        rng = keys.sweep_stream(k, 0, 0)
        ctx = InteractionContext(0, 0, classical[None, :])
        y = classical + rng.standard_normal(1)  # the self-kernel is a unit walk
        alpha = acceptance_alpha(target, kern, ctx, classical, y)
        if rng.uniform() < alpha:
            classical = y
        classical_path.append(classical[0])

    np.testing.assert_array_equal(interacting_path, classical_path)


class SnapshotKernel(DistanceAdaptiveGaussian):
    """Records the ensemble snapshot each sub-iteration sees."""

    def __init__(self):
        super().__init__()
        object.__setattr__(self, "seen", [])

    def sample_all(self, i, ensemble, rng):
        self.seen.append((i, ensemble.copy()))
        return super().sample_all(i, ensemble, rng)


def test_sub_iteration_ordering_sees_updated_earlier_columns():
    target = three_mode_benchmark()
    kern = SnapshotKernel()
    keys = StreamKeys(23)
    ens = ChainEnsemble(np.random.default_rng(4).uniform(-8, 4, size=(6, 2)))
    out, _, _ = sweep(ens, target, kern, keys)
    for i, snap in kern.seen:
        # rows before i already hold this sweep's values, rows from i on the old ones
        np.testing.assert_array_equal(snap[:i], out.states[:i])
        np.testing.assert_array_equal(snap[i:], ens.states[i:])


def test_sweep_deterministic_and_parallel_identical():
    target = three_mode_benchmark()
    kern = DistanceAdaptiveGaussian()
    ens = ChainEnsemble(np.random.default_rng(6).uniform(-10, 5, size=(12, 2)))
    out_a = run_sweeps(ens, target, kern, StreamKeys(9), 20)
    out_b = run_sweeps(ens, target, kern, StreamKeys(9), 20)
    out_c = run_sweeps(ens, target, kern, StreamKeys(9), 20, parallel=True)
    np.testing.assert_array_equal(out_a.states, out_b.states)
    np.testing.assert_array_equal(out_a.states, out_c.states)
    assert out_a.sweep_count == 20


def test_sweep_stats_shapes():
    target = three_mode_benchmark()
    kern = DistanceAdaptiveGaussian()
    ens = ChainEnsemble(np.random.default_rng(8).uniform(-5, 5, size=(7, 2)))
    _, stats, logs = sweep(ens, target, kern, StreamKeys(1))
    assert stats.proposer.shape == (7,)
    assert stats.jump_norms.shape == (7,)
    assert 0.0 <= stats.acceptance_rate <= 1.0
    assert logs.shape == (7,)
