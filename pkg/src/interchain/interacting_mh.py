"""The interacting ensemble Metropolis-Hastings sweep.

One sweep updates the N chains sequentially.  At sub-iteration i every chain
j (including chain i itself) proposes one candidate for chain i; a single
multinomial draw then either moves chain i to candidate j with probability
alpha_{i,j}/N or keeps the current state with the leftover probability.
Later sub-iterations see the columns already updated by earlier ones.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .proposals import InteractionContext, ProposalKernel
from .streams import StreamKeys
from .targets import TargetDensity

# Log-ratios are clamped here before exponentiation; the min with 1 caps the
# acceptance probability anyway, the clamp only prevents overflow for
# far-apart chain states.
_LOG_RATIO_CAP = 50.0


@dataclass(frozen=True)
class ChainEnsemble:
    """States of the N chains, one chain per row, plus the sweep counter."""

    states: np.ndarray  # (N, n)
    sweep_count: int = 0

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 1 or states.shape[1] < 1:
            raise ValueError(f"states must be a (N, n) matrix with N, n >= 1, got {states.shape}")
        if not np.all(np.isfinite(states)):
            raise ValueError("ensemble states must be finite")
        if self.sweep_count < 0:
            raise ValueError("sweep_count must be non-negative")
        object.__setattr__(self, "states", states)

    @property
    def n_chains(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class SelectionProbabilities:
    """The multinomial selection law of one sub-iteration.

    Candidate j is selected with probability alphas[j]/N; the current state
    is kept with the complementary mass ``stay``.
    """

    alphas: np.ndarray
    stay: float

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=float)
        if np.any(alphas < 0.0) or np.any(alphas > 1.0):
            raise ValueError("acceptance probabilities must lie in [0, 1]")
        total = self.stay + alphas.sum() / len(alphas)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"selection probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def from_alphas(cls, alphas: np.ndarray) -> "SelectionProbabilities":
        alphas = np.asarray(alphas, dtype=float)
        return cls(alphas=alphas, stay=1.0 - alphas.sum() / len(alphas))


@dataclass(frozen=True)
class SubIterationRecord:
    """What happened when one chain was updated: which branch fired."""

    proposer: int  # index j of the accepted candidate, or -1 if the chain stayed
    selection: SelectionProbabilities
    new_log_density: float

    @property
    def accepted(self) -> bool:
        return self.proposer >= 0


def _alphas_from_logs(
    log_py: np.ndarray, log_q_rev: np.ndarray, log_px: float, log_q_fwd: np.ndarray
) -> np.ndarray:
    """Vector of min(1, r) acceptance probabilities with the zero guard.

    The guard: whenever either side pi(y) q(x|y) or pi(x) q(y|x) has zero
    mass, the pair is outside the admissible set and alpha is 0.
    """
    log_num = log_py + log_q_rev
    log_den = log_px + log_q_fwd
    zero = np.isneginf(log_num) | np.isneginf(log_den)
    diff = np.subtract(log_num, log_den, out=np.zeros_like(log_num), where=~zero)
    np.minimum(diff, _LOG_RATIO_CAP, out=diff)
    alphas = np.exp(diff, out=diff)
    np.minimum(alphas, 1.0, out=alphas)
    alphas[zero] = 0.0
    return alphas


def acceptance_alpha(
    target: TargetDensity,
    kernel: ProposalKernel,
    ctx: InteractionContext,
    x: np.ndarray,
    y: np.ndarray,
) -> float:
    """min(1, [pi(y) q_{i,j}(x|y)] / [pi(x) q_{i,j}(y|x)]) in log space.

    Returns 0 whenever either product vanishes: a zero-density current state
    is not an error, the pair is simply outside the admissible set.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.isnan(x)) or np.any(np.isnan(y)):
        raise ValueError("acceptance_alpha got NaN input")
    log_py = np.array([target.log_density(y)])
    log_px = target.log_density(x)
    log_q_rev = np.array([kernel.log_density(ctx, y, x)])
    log_q_fwd = np.array([kernel.log_density(ctx, x, y)])
    return float(_alphas_from_logs(log_py, log_q_rev, log_px, log_q_fwd)[0])


def _evaluate_candidates(
    states: np.ndarray,
    i: int,
    candidates: np.ndarray,
    target: TargetDensity,
    kernel: ProposalKernel,
    executor: ThreadPoolExecutor | None,
):
    """Target and proposal log-densities for all candidates of sub-iteration i.

    The three evaluations are pure functions of already-drawn values, so
    running them on an executor returns bit-identical results.
    """
    x = states[i]
    if executor is None:
        log_py = target.log_density_many(candidates)
        log_q_fwd = kernel.log_density_all(i, states, x, candidates)
        log_q_rev = kernel.log_density_all(i, states, candidates, x)
    else:
        fut_py = executor.submit(target.log_density_many, candidates)
        fut_fwd = executor.submit(kernel.log_density_all, i, states, x, candidates)
        fut_rev = executor.submit(kernel.log_density_all, i, states, candidates, x)
        log_py = fut_py.result()
        log_q_fwd = fut_fwd.result()
        log_q_rev = fut_rev.result()
    return log_py, log_q_fwd, log_q_rev


def sub_iteration(
    states: np.ndarray,
    i: int,
    target: TargetDensity,
    kernel: ProposalKernel,
    rng: np.random.Generator,
    current_log_density: float | None = None,
    executor: ThreadPoolExecutor | None = None,
) -> tuple[np.ndarray, SubIterationRecord]:
    """Update chain i given the partially-updated ensemble ``states``.

    Draws one candidate per proposing chain, forms the selection law and
    resolves it with a single uniform against cumulative probabilities in
    candidate order followed by the stay mass (a fixed randomness
    consumption order, for reproducibility).  ``states`` is not modified;
    the new state for chain i is returned.
    """
    x = states[i]
    candidates = kernel.sample_all(i, states, rng)
    log_py, log_q_fwd, log_q_rev = _evaluate_candidates(
        states, i, candidates, target, kernel, executor
    )
    log_px = target.log_density(x) if current_log_density is None else current_log_density
    alphas = _alphas_from_logs(log_py, log_q_rev, log_px, log_q_fwd)
    selection = SelectionProbabilities.from_alphas(alphas)

    u = rng.uniform()
    cumulative = np.cumsum(alphas) / len(alphas)
    chosen = int(np.searchsorted(cumulative, u, side="right"))
    if chosen < len(alphas):
        record = SubIterationRecord(chosen, selection, float(log_py[chosen]))
        return candidates[chosen], record
    record = SubIterationRecord(-1, selection, float(log_px))
    return x, record


@dataclass(frozen=True)
class SweepStats:
    """Per-sweep acceptance and jump summaries for diagnostics."""

    proposer: np.ndarray    # (N,) accepted proposer per chain, -1 for stayed
    mean_alpha: float
    jump_norms: np.ndarray  # (N,) Euclidean move size per chain (0 if stayed)

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.proposer >= 0))


def sweep(
    ensemble: ChainEnsemble,
    target: TargetDensity,
    kernel: ProposalKernel,
    keys: StreamKeys,
    parallel: bool = False,
    log_densities: np.ndarray | None = None,
) -> tuple[ChainEnsemble, SweepStats, np.ndarray]:
    """One full pass updating all chains, strictly in order i = 0..N-1.

    Sub-iteration i consumes the substream keyed by
    (sweep_count, component=0, chain=i), so the trajectory is a pure
    function of (ensemble, seed) whatever the execution schedule.  Returns
    the advanced ensemble, per-sweep stats, and the chains' target
    log-densities (reusable as the ``log_densities`` argument of the next
    sweep to avoid recomputation).

    Cost is Theta(N^2) target and proposal evaluations.
    """
    states = ensemble.states.copy()
    if log_densities is None:
        log_densities = target.log_density_many(states)
    else:
        log_densities = np.asarray(log_densities, dtype=float).copy()
    n_chains = ensemble.n_chains
    proposer = np.full(n_chains, -1, dtype=int)
    jump_norms = np.zeros(n_chains)
    alpha_sum = 0.0
    executor = ThreadPoolExecutor(max_workers=4) if parallel else None
    try:
        for i in range(n_chains):
            rng = keys.sweep_stream(ensemble.sweep_count, 0, i)
            new_state, record = sub_iteration(
                states, i, target, kernel, rng,
                current_log_density=float(log_densities[i]),
                executor=executor,
            )
            proposer[i] = record.proposer
            alpha_sum += float(np.mean(record.selection.alphas))
            if record.accepted:
                jump_norms[i] = float(np.linalg.norm(new_state - states[i]))
                states[i] = new_state
                log_densities[i] = record.new_log_density
    finally:
        if executor is not None:
            executor.shutdown()
    stats = SweepStats(proposer=proposer, mean_alpha=alpha_sum / n_chains, jump_norms=jump_norms)
    return ChainEnsemble(states, ensemble.sweep_count + 1), stats, log_densities


def run_sweeps(
    ensemble: ChainEnsemble,
    target: TargetDensity,
    kernel: ProposalKernel,
    keys: StreamKeys,
    n_sweeps: int,
    parallel: bool = False,
    callback=None,
) -> ChainEnsemble:
    """Apply ``n_sweeps`` sweeps, invoking ``callback(ensemble, stats)`` after each."""
    log_densities = None
    for _ in range(n_sweeps):
        ensemble, stats, log_densities = sweep(
            ensemble, target, kernel, keys, parallel=parallel, log_densities=log_densities
        )
        if callback is not None:
            callback(ensemble, stats)
    return ensemble
