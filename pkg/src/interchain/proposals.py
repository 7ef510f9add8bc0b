"""Cross-chain proposal kernels.

A kernel ``q_{i,j}`` is the distribution of the candidate that chain ``j``
offers to chain ``i``.  Besides sampling, the acceptance ratio needs the
kernel's log-density evaluated in both directions, so ``log_density`` takes
an explicit conditioning point: ``log_density(ctx, a, b)`` is the log-density
of proposing ``b`` when the current state is ``a``, for the same (i, j) pair
and the same ensemble snapshot.

State that identifies the kernel within one sub-iteration (which chain is
proposing, where it sits) comes from the context; state that swaps between
the forward and reverse evaluation (the conditioning point) is the ``from``
argument.  Kernels must never read ``ctx.ensemble[ctx.i]`` inside
``log_density`` -- that value is the forward conditioning point and would be
wrong in the reverse evaluation.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class InteractionContext:
    """One (target chain, proposing chain) pair against an ensemble snapshot.

    ``ensemble`` has one chain per row, in the partially-updated state of the
    current sub-iteration: rows before ``i`` already hold this sweep's values,
    rows from ``i`` on still hold the previous ones.  The snapshot is fixed
    for the whole sub-iteration.
    """

    i: int
    j: int
    ensemble: np.ndarray  # (N, n), row per chain

    def __post_init__(self):
        n_chains = self.ensemble.shape[0]
        if not (0 <= self.i < n_chains and 0 <= self.j < n_chains):
            raise ValueError(f"chain indices ({self.i}, {self.j}) out of range for N={n_chains}")


class ProposalKernel(ABC):
    """Candidate sampler plus exact log-density of what it samples."""

    @abstractmethod
    def sample(self, ctx: InteractionContext, rng: np.random.Generator) -> np.ndarray:
        """Draw one candidate for chain ``ctx.i`` proposed by chain ``ctx.j``."""

    @abstractmethod
    def log_density(self, ctx: InteractionContext, from_point: np.ndarray, to_point: np.ndarray) -> float:
        """log q_{i,j}(to_point | from_point) for the pair in ``ctx``."""

    def sample_all(self, i: int, ensemble: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Candidates from every proposer j = 0..N-1, in order, as rows.

        Overrides must consume the generator exactly as this loop does so
        that the vectorized and sequential paths yield identical draws.
        """
        n_chains = ensemble.shape[0]
        return np.stack(
            [self.sample(InteractionContext(i, j, ensemble), rng) for j in range(n_chains)]
        )

    def log_density_all(
        self,
        i: int,
        ensemble: np.ndarray,
        from_points: np.ndarray,
        to_points: np.ndarray,
    ) -> np.ndarray:
        """log q_{i,j}(to_points[j] | from_points[j]) for every proposer j."""
        n_chains = ensemble.shape[0]
        from_points = np.broadcast_to(from_points, ensemble.shape)
        to_points = np.broadcast_to(to_points, ensemble.shape)
        return np.array(
            [
                self.log_density(InteractionContext(i, j, ensemble), from_points[j], to_points[j])
                for j in range(n_chains)
            ]
        )


@dataclass(frozen=True)
class DistanceAdaptiveGaussian(ProposalKernel):
    """Isotropic Gaussian whose variance is the inverse distance between chains.

    Self-proposals (i == j) are a unit-variance random walk.  Cross-proposals
    use variance 1/d with d the Euclidean distance from the conditioning
    point to the proposing chain's state, clamped to [d_min, d_max]; the
    clamp keeps the variance inside [1/d_max, 1/d_min] and removes the d=0
    singularity.

    By default the cross-proposal is centered on the conditioning point.
    ``center_on_proposer=True`` centers it on the proposing chain's state
    instead, an alternative reading of the same construction kept around for
    experimentation; only the variance then depends on the conditioning
    point.
    """

    d_min: float = 1e-3
    d_max: float = 1e6
    center_on_proposer: bool = False

    def __post_init__(self):
        if not 0.0 < self.d_min <= self.d_max:
            raise ValueError(f"need 0 < d_min <= d_max, got ({self.d_min}, {self.d_max})")

    def _moments(self, ctx: InteractionContext, from_point: np.ndarray):
        if ctx.i == ctx.j:
            return from_point, 1.0
        anchor = ctx.ensemble[ctx.j]
        d = float(np.linalg.norm(from_point - anchor))
        d = min(max(d, self.d_min), self.d_max)
        mean = anchor if self.center_on_proposer else from_point
        return mean, d ** -0.5

    def sample(self, ctx: InteractionContext, rng: np.random.Generator) -> np.ndarray:
        from_point = ctx.ensemble[ctx.i]
        mean, sd = self._moments(ctx, from_point)
        return mean + sd * rng.standard_normal(from_point.shape[0])

    def log_density(self, ctx: InteractionContext, from_point: np.ndarray, to_point: np.ndarray) -> float:
        from_point = np.asarray(from_point, dtype=float)
        to_point = np.asarray(to_point, dtype=float)
        mean, sd = self._moments(ctx, from_point)
        n = from_point.shape[0]
        quad = float(np.sum((to_point - mean) ** 2)) / (sd * sd)
        return -0.5 * (n * _LOG_2PI + quad) - n * np.log(sd)

    def _moments_all(self, i: int, ensemble: np.ndarray, from_points: np.ndarray):
        """Per-proposer (means, sds); ``from_points`` is (n,) or (N, n)."""
        diff = np.atleast_2d(from_points) - ensemble
        d = np.clip(np.sqrt(np.einsum("ij,ij->i", diff, diff)), self.d_min, self.d_max)
        sd = d ** -0.5
        sd[i] = 1.0
        if self.center_on_proposer:
            means = ensemble.copy()
            means[i] = from_points if from_points.ndim == 1 else from_points[i]
        else:
            means = from_points
        return means, sd

    def sample_all(self, i: int, ensemble: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        means, sd = self._moments_all(i, ensemble, ensemble[i])
        noise = rng.standard_normal(ensemble.shape)
        return means + sd[:, None] * noise

    def log_density_all(
        self,
        i: int,
        ensemble: np.ndarray,
        from_points: np.ndarray,
        to_points: np.ndarray,
    ) -> np.ndarray:
        means, sd = self._moments_all(i, ensemble, from_points)
        n = ensemble.shape[1]
        resid = np.atleast_2d(to_points - means)
        quad = np.einsum("ij,ij->i", resid, resid) / (sd * sd)
        return -0.5 * (n * _LOG_2PI + quad) - n * np.log(sd)
