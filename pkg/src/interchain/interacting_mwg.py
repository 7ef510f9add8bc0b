"""Component-wise samplers.

Three related algorithms live here:

* the interacting Metropolis-within-Gibbs sweep, where N chains update one
  scalar component at a time and every chain proposes scalar candidates for
  every other chain;
* the plain single-chain Metropolis-within-Gibbs sweep;
* the parallel/independent runner, N non-interacting copies of the plain
  sweep used as a baseline.

The interacting sweep walks components in ascending order and, within a
component, chains in ascending order; its acceptance ratios condition on the
proposing-target chain's own other components (already-updated ones below
the current component, original ones above).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .interacting_mh import ChainEnsemble, _alphas_from_logs
from .streams import StreamKeys
from .targets import ConditionalTarget

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class ComponentContext:
    """One (component, target chain, proposing chain) triple.

    ``bracket`` is the working matrix in its mixed state: components before
    ``ell`` already updated for all chains, component ``ell`` updated for
    chains before ``i`` only, components after ``ell`` untouched.  It is a
    consistent snapshot for the whole (ell, i) inner step.
    """

    ell: int
    i: int
    j: int
    bracket: np.ndarray  # (N, n), row per chain

    def rest_of_chain(self) -> np.ndarray:
        """Chain i's conditioning vector: its other components, in order."""
        row = self.bracket[self.i]
        return np.concatenate([row[: self.ell], row[self.ell + 1 :]])


class ScalarProposalKernel(ABC):
    """Scalar candidate sampler with its exact log-density, per (ell, i, j)."""

    @abstractmethod
    def sample(self, cctx: ComponentContext, rng: np.random.Generator) -> float:
        ...

    @abstractmethod
    def log_density(self, cctx: ComponentContext, from_value: float, to_value: float) -> float:
        ...

    def sample_all(
        self, ell: int, i: int, bracket: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        """One candidate per proposer, consuming the generator in j order."""
        n_chains = bracket.shape[0]
        return np.array(
            [self.sample(ComponentContext(ell, i, j, bracket), rng) for j in range(n_chains)]
        )

    def log_density_all(
        self, ell: int, i: int, bracket: np.ndarray, from_values: np.ndarray, to_values: np.ndarray
    ) -> np.ndarray:
        n_chains = bracket.shape[0]
        from_values = np.broadcast_to(from_values, (n_chains,))
        to_values = np.broadcast_to(to_values, (n_chains,))
        return np.array(
            [
                self.log_density(
                    ComponentContext(ell, i, j, bracket), float(from_values[j]), float(to_values[j])
                )
                for j in range(n_chains)
            ]
        )


@dataclass(frozen=True)
class ScalarDistanceAdaptiveGaussian(ScalarProposalKernel):
    """Scalar analog of the cross-chain distance-adaptive Gaussian.

    Self-proposals are a Gaussian step of width ``self_step``.  Cross
    proposals use variance 1/d with d the distance from the conditioning
    value to the proposing chain's value of the same component, clamped to
    [d_min, d_max].
    """

    self_step: float = 1.0
    d_min: float = 1e-3
    d_max: float = 1e6
    center_on_proposer: bool = False

    def __post_init__(self):
        if self.self_step <= 0.0:
            raise ValueError("self_step must be positive")
        if not 0.0 < self.d_min <= self.d_max:
            raise ValueError(f"need 0 < d_min <= d_max, got ({self.d_min}, {self.d_max})")

    def _moments(self, cctx: ComponentContext, from_value: float):
        if cctx.i == cctx.j:
            return from_value, self.self_step
        anchor = float(cctx.bracket[cctx.j, cctx.ell])
        d = min(max(abs(from_value - anchor), self.d_min), self.d_max)
        mean = anchor if self.center_on_proposer else from_value
        return mean, d ** -0.5

    def sample(self, cctx: ComponentContext, rng: np.random.Generator) -> float:
        mean, sd = self._moments(cctx, float(cctx.bracket[cctx.i, cctx.ell]))
        return mean + sd * float(rng.standard_normal())

    def log_density(self, cctx: ComponentContext, from_value: float, to_value: float) -> float:
        mean, sd = self._moments(cctx, from_value)
        return -0.5 * (_LOG_2PI + (to_value - mean) ** 2 / (sd * sd)) - np.log(sd)

    def _moments_all(self, ell: int, i: int, bracket: np.ndarray, from_values):
        """Per-proposer (means, sds); ``from_values`` may be scalar or (N,)."""
        anchors = bracket[:, ell]
        d = np.clip(np.abs(from_values - anchors), self.d_min, self.d_max)
        sd = d ** -0.5
        sd[i] = self.self_step
        if self.center_on_proposer:
            means = anchors.copy()
            means[i] = from_values if np.ndim(from_values) == 0 else from_values[i]
        else:
            means = from_values
        return means, sd

    def sample_all(
        self, ell: int, i: int, bracket: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        means, sd = self._moments_all(ell, i, bracket, float(bracket[i, ell]))
        return means + sd * rng.standard_normal(bracket.shape[0])

    def log_density_all(
        self, ell: int, i: int, bracket: np.ndarray, from_values, to_values
    ) -> np.ndarray:
        means, sd = self._moments_all(ell, i, bracket, from_values)
        return -0.5 * (_LOG_2PI + (to_values - means) ** 2 / (sd * sd)) - np.log(sd)


def scalar_acceptance_alpha(
    ct: ConditionalTarget,
    kernel: ScalarProposalKernel,
    cctx: ComponentContext,
    xi: float,
    xi_cand: float,
) -> float:
    """min(1, conditional-density ratio times reverse/forward kernel ratio).

    Conditions on chain i's own other components from the bracket; zero mass
    on either side gives 0.
    """
    if np.isnan(xi) or np.isnan(xi_cand):
        raise ValueError("scalar_acceptance_alpha got NaN input")
    rest = cctx.rest_of_chain()
    log_py = np.array([ct.log_conditional(cctx.ell, xi_cand, rest)])
    log_px = ct.log_conditional(cctx.ell, xi, rest)
    log_q_rev = np.array([kernel.log_density(cctx, xi_cand, xi)])
    log_q_fwd = np.array([kernel.log_density(cctx, xi, xi_cand)])
    return float(_alphas_from_logs(log_py, log_q_rev, log_px, log_q_fwd)[0])


@dataclass(frozen=True)
class MwgSweepStats:
    """Acceptance summary of one interacting MwG sweep."""

    accepted: np.ndarray  # (n, N) whether component ell of chain i moved
    mean_alpha: float

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted))


def _component_step(
    bracket: np.ndarray,
    ell: int,
    i: int,
    ct: ConditionalTarget,
    kernel: ScalarProposalKernel,
    rng: np.random.Generator,
    executor: ThreadPoolExecutor | None,
) -> tuple[float, bool, float]:
    """One inner (ell, i) update; returns (new value, accepted, mean alpha)."""
    xi = float(bracket[i, ell])
    row = bracket[i]
    rest = np.concatenate([row[:ell], row[ell + 1 :]])
    candidates = kernel.sample_all(ell, i, bracket, rng)
    values = np.append(candidates, xi)  # one conditional evaluation covers x too
    if executor is None:
        log_cond = ct.log_conditional_many(ell, values, rest)
        log_q_fwd = kernel.log_density_all(ell, i, bracket, xi, candidates)
        log_q_rev = kernel.log_density_all(ell, i, bracket, candidates, xi)
    else:
        fut_cond = executor.submit(ct.log_conditional_many, ell, values, rest)
        fut_fwd = executor.submit(kernel.log_density_all, ell, i, bracket, xi, candidates)
        fut_rev = executor.submit(kernel.log_density_all, ell, i, bracket, candidates, xi)
        log_cond = fut_cond.result()
        log_q_fwd = fut_fwd.result()
        log_q_rev = fut_rev.result()
    alphas = _alphas_from_logs(log_cond[:-1], log_q_rev, log_cond[-1], log_q_fwd)
    u = rng.uniform()
    cumulative = np.cumsum(alphas) / len(alphas)
    chosen = int(np.searchsorted(cumulative, u, side="right"))
    if chosen < len(alphas):
        return float(candidates[chosen]), True, float(np.mean(alphas))
    return xi, False, float(np.mean(alphas))


def mwg_sweep(
    ensemble: ChainEnsemble,
    ct: ConditionalTarget,
    kernel: ScalarProposalKernel,
    keys: StreamKeys,
    parallel: bool = False,
) -> tuple[ChainEnsemble, MwgSweepStats]:
    """One interacting Metropolis-within-Gibbs sweep.

    For each component ell (ascending) and each chain i (ascending), N
    scalar candidates are drawn and resolved by the multinomial selection
    rule.  The (ell, i) inner step consumes the substream keyed by
    (sweep_count, ell, i); with a single component this reproduces the
    whole-vector ensemble Metropolis-Hastings sweep draw for draw.
    """
    states = ensemble.states.copy()
    n_chains, dim = states.shape
    accepted = np.zeros((dim, n_chains), dtype=bool)
    alpha_sum = 0.0
    executor = ThreadPoolExecutor(max_workers=4) if parallel else None
    try:
        for ell in range(dim):
            for i in range(n_chains):
                rng = keys.sweep_stream(ensemble.sweep_count, ell, i)
                value, moved, mean_alpha = _component_step(
                    states, ell, i, ct, kernel, rng, executor
                )
                states[i, ell] = value
                accepted[ell, i] = moved
                alpha_sum += mean_alpha
    finally:
        if executor is not None:
            executor.shutdown()
    stats = MwgSweepStats(accepted=accepted, mean_alpha=alpha_sum / (dim * n_chains))
    return ChainEnsemble(states, ensemble.sweep_count + 1), stats


class PlainComponentKernel(ABC):
    """Scalar proposal for the plain (single chain) Metropolis-within-Gibbs."""

    @abstractmethod
    def sample(self, from_value: float, rng: np.random.Generator) -> float:
        ...

    @abstractmethod
    def log_density(self, from_value: float, to_value: float) -> float:
        ...


@dataclass(frozen=True)
class GaussianStep(PlainComponentKernel):
    """Symmetric Gaussian random-walk step."""

    step: float = 1.0

    def __post_init__(self):
        if self.step <= 0.0:
            raise ValueError("step must be positive")

    def sample(self, from_value: float, rng: np.random.Generator) -> float:
        return from_value + self.step * float(rng.standard_normal())

    def log_density(self, from_value: float, to_value: float) -> float:
        z = (to_value - from_value) / self.step
        return -0.5 * (_LOG_2PI + z * z) - np.log(self.step)


@dataclass(frozen=True)
class IndependenceGaussian(PlainComponentKernel):
    """Fixed Gaussian proposal, independent of the current value."""

    mean: float
    sd: float

    def __post_init__(self):
        if self.sd <= 0.0:
            raise ValueError("sd must be positive")

    def sample(self, from_value: float, rng: np.random.Generator) -> float:
        return self.mean + self.sd * float(rng.standard_normal())

    def log_density(self, from_value: float, to_value: float) -> float:
        z = (to_value - self.mean) / self.sd
        return -0.5 * (_LOG_2PI + z * z) - np.log(self.sd)


def _as_kernel_list(kernels, dim: int) -> list[PlainComponentKernel]:
    if isinstance(kernels, PlainComponentKernel):
        return [kernels] * dim
    kernels = list(kernels)
    if len(kernels) != dim:
        raise ValueError(f"need one kernel per component ({dim}), got {len(kernels)}")
    return kernels


def plain_mwg_sweep(
    state: np.ndarray,
    ct: ConditionalTarget,
    kernels,
    rng: np.random.Generator,
    randomize_order: bool = False,
) -> np.ndarray:
    """One plain Metropolis-within-Gibbs pass over all components.

    Components are visited in ascending order by default; with
    ``randomize_order`` a fresh permutation is drawn first.  Each candidate
    is accepted with probability
    min(1, [pi_ell(y|rest) q(x|y)] / [pi_ell(x|rest) q(y|x)]).
    """
    state = np.asarray(state, dtype=float).copy()
    dim = state.shape[0]
    kernel_list = _as_kernel_list(kernels, dim)
    order = rng.permutation(dim) if randomize_order else range(dim)
    for ell in order:
        ell = int(ell)
        kern = kernel_list[ell]
        xi = float(state[ell])
        rest = np.concatenate([state[:ell], state[ell + 1 :]])
        cand = kern.sample(xi, rng)
        log_py = np.array([ct.log_conditional(ell, cand, rest)])
        log_px = ct.log_conditional(ell, xi, rest)
        log_q_rev = np.array([kern.log_density(cand, xi)])
        log_q_fwd = np.array([kern.log_density(xi, cand)])
        alpha = float(_alphas_from_logs(log_py, log_q_rev, log_px, log_q_fwd)[0])
        if rng.uniform() < alpha:
            state[ell] = cand
    return state


def independent_parallel_run(
    initial: np.ndarray,
    ct: ConditionalTarget,
    kernels,
    n_sweeps: int,
    keys: StreamKeys,
    randomize_order: bool = False,
    callback=None,
) -> np.ndarray:
    """N non-interacting plain MwG chains advanced for ``n_sweeps`` sweeps.

    Chain i consumes only its own substream, so each column of the result is
    a pure function of (its initial state, seed, i).  ``callback(k, states)``
    runs after every sweep k with the current (N, n) state matrix.
    """
    states = np.asarray(initial, dtype=float).copy()
    n_chains = states.shape[0]
    rngs = [keys.chain_stream(i) for i in range(n_chains)]
    for k in range(n_sweeps):
        for i in range(n_chains):
            states[i] = plain_mwg_sweep(
                states[i], ct, kernels, rngs[i], randomize_order=randomize_order
            )
        if callback is not None:
            callback(k, states)
    return states
