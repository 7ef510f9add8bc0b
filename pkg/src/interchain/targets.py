"""Target distributions as unnormalized log-densities.

All densities are handled in log space; a density of zero is represented by
``-inf`` (never NaN).  Normalizing constants are never needed because every
acceptance ratio cancels them, but the Gaussian mixture is normalized anyway
since its constants are cheap.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky

_LOG_2PI = float(np.log(2.0 * np.pi))


class TargetDensity(ABC):
    """An unnormalized log-density on R^dim.

    ``log_density`` must be deterministic and return ``-inf`` exactly where
    the density vanishes.  Instances are immutable after construction and
    safe for concurrent reads.
    """

    dim: int

    @abstractmethod
    def log_density(self, x: np.ndarray) -> float:
        """Log-density at a single point, up to an additive constant."""

    def log_density_many(self, points: np.ndarray) -> np.ndarray:
        """Log-density at each row of ``points`` (m, dim).

        Subclasses may override with a vectorized version; it must return
        exactly the same values as the scalar path.
        """
        points = np.asarray(points, dtype=float)
        return np.array([self.log_density(p) for p in points])

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected point of dimension {self.dim}, got shape {x.shape}")
        return x


class ConditionalTarget(ABC):
    """Component conditionals of a joint target, up to additive constants.

    ``log_conditional(ell, xi, rest)`` evaluates the log conditional density
    of component ``ell`` at value ``xi`` given the other components ``rest``
    (the joint vector with entry ``ell`` removed, order preserved).  Only
    differences in ``xi`` at fixed ``rest`` are meaningful.
    """

    dim: int

    @abstractmethod
    def log_conditional(self, ell: int, xi: float, rest: np.ndarray) -> float:
        ...

    def log_conditional_many(self, ell: int, xis: np.ndarray, rest: np.ndarray) -> np.ndarray:
        """Vectorized conditional over candidate values ``xis``."""
        return np.array([self.log_conditional(ell, float(v), rest) for v in np.asarray(xis)])


def insert_component(rest: np.ndarray, ell: int, xi: float) -> np.ndarray:
    """Rebuild a full point from ``rest`` with value ``xi`` in slot ``ell``."""
    rest = np.asarray(rest, dtype=float)
    return np.concatenate([rest[:ell], [xi], rest[ell:]])


def conditional_from_joint(target: TargetDensity, ell: int, xi: float, rest: np.ndarray) -> float:
    """Default conditional: the joint log-density with component ``ell`` set to ``xi``.

    Valid up to an additive constant in ``xi``, which is all any acceptance
    ratio needs.  ``ell`` is a 0-based component index.
    """
    if not 0 <= ell < target.dim:
        raise ValueError(f"component index {ell} out of range for dim {target.dim}")
    rest = np.asarray(rest, dtype=float)
    if rest.shape != (target.dim - 1,):
        raise ValueError(f"expected rest of dimension {target.dim - 1}, got shape {rest.shape}")
    return target.log_density(insert_component(rest, ell, xi))


class JointConditional(ConditionalTarget):
    """ConditionalTarget view of a joint TargetDensity via substitution."""

    def __init__(self, target: TargetDensity):
        self.target = target
        self.dim = target.dim

    def log_conditional(self, ell: int, xi: float, rest: np.ndarray) -> float:
        return conditional_from_joint(self.target, ell, xi, rest)

    def log_conditional_many(self, ell: int, xis: np.ndarray, rest: np.ndarray) -> np.ndarray:
        xis = np.asarray(xis, dtype=float)
        points = np.tile(insert_component(rest, ell, 0.0), (len(xis), 1))
        points[:, ell] = xis
        return self.target.log_density_many(points)


@dataclass(frozen=True)
class GaussianMixture(TargetDensity):
    """Finite Gaussian mixture with positive weights summing to one.

    Cholesky factors of the covariances are precomputed so that one density
    evaluation costs O(dim^2); the ensemble sweep evaluates densities N^2
    times per iteration.
    """

    weights: np.ndarray
    means: np.ndarray        # (K, dim)
    covariances: np.ndarray  # (K, dim, dim)
    _chols: np.ndarray = field(init=False, repr=False)
    _log_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covariances, dtype=float)
        if covs.ndim == 2:
            covs = covs[None, :, :]
        if np.any(w <= 0):
            raise ValueError("mixture weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {w.sum()!r}")
        k, dim = means.shape
        if w.shape != (k,) or covs.shape != (k, dim, dim):
            raise ValueError("inconsistent mixture component shapes")
        chols = np.empty_like(covs)
        log_norms = np.empty(k)
        for idx in range(k):
            cov = covs[idx]
            if not np.allclose(cov, cov.T):
                raise ValueError(f"covariance {idx} is not symmetric")
            try:
                chols[idx] = cholesky(cov, lower=True)
            except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises its own
                raise ValueError(f"covariance {idx} is not positive definite") from exc
            log_norms[idx] = -0.5 * dim * _LOG_2PI - np.sum(np.log(np.diag(chols[idx])))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)
        object.__setattr__(self, "_chols", chols)
        object.__setattr__(self, "_log_norms", log_norms)
        object.__setattr__(self, "dim", dim)

    def log_density(self, x: np.ndarray) -> float:
        x = self._check_dim(x)
        return float(self.log_density_many(x[None, :])[0])

    def log_density_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise ValueError(f"expected points of shape (m, {self.dim}), got {points.shape}")
        m = points.shape[0]
        comp_logs = np.empty((m, len(self.weights)))
        for idx, (mean, chol, log_norm) in enumerate(
            zip(self.means, self._chols, self._log_norms)
        ):
            diff = points - mean
            sol = cho_solve((chol, True), diff.T, check_finite=False)
            quad = np.einsum("ij,ji->i", diff, sol)
            comp_logs[:, idx] = np.log(self.weights[idx]) + log_norm - 0.5 * quad
        # log-sum-exp across components, stable for far-out points
        top = comp_logs.max(axis=1)
        return top + np.log(np.exp(comp_logs - top[:, None]).sum(axis=1))


def mixture_log_density(mixture: GaussianMixture, x: np.ndarray) -> float:
    """Stable log-density of a Gaussian mixture at ``x``."""
    return mixture.log_density(x)


def three_mode_benchmark(variance: float = 1.0) -> GaussianMixture:
    """The 2-D three-mode benchmark mixture used by the multimodal experiment.

    Weights (0.1, 0.3, 0.6) on modes (-10, -10), (5, 0), (-5, 5) with
    isotropic covariance ``variance * I`` (identity by default).
    """
    eye = variance * np.eye(2)
    return GaussianMixture(
        weights=np.array([0.1, 0.3, 0.6]),
        means=np.array([[-10.0, -10.0], [5.0, 0.0], [-5.0, 5.0]]),
        covariances=np.stack([eye, eye, eye]),
    )
