"""Convergence indicators.

The main diagnostic treats the reference sampler's marginal kernel density
estimates as frozen truths and tracks, for each component, the L1 distance
between them and the running sampler's marginal KDE; the mean across
components is the summary indicator.  Mode occupancy serves the multimodal
experiment: the fraction of chains nearest to each mixture mode should
converge to the mixture weights.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


class DegenerateSampleError(ValueError):
    """Raised when a KDE is requested for a constant sample."""


class CoverageWarning(UserWarning):
    """The quadrature grid does not cover the padded supports."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform quadrature grid on [lo, hi]."""

    lo: float
    hi: float
    points: int = 1024

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got ({self.lo}, {self.hi})")
        if self.points < 2:
            raise ValueError("grid needs at least 2 points")

    def array(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class Kde1D:
    """Gaussian-kernel density estimate of a 1-D sample."""

    sample: np.ndarray
    bandwidth: float

    def __post_init__(self):
        sample = np.asarray(self.sample, dtype=float)
        if sample.ndim != 1 or sample.size < 2:
            raise ValueError("KDE needs a 1-D sample of size >= 2")
        if not np.all(np.isfinite(sample)):
            raise ValueError("KDE sample must be finite")
        if self.bandwidth <= 0.0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "sample", sample)

    def evaluate(self, grid: np.ndarray) -> np.ndarray:
        """Density values on ``grid``, chunked to bound memory."""
        grid = np.asarray(grid, dtype=float)
        out = np.empty(grid.shape)
        h = self.bandwidth
        scale = 1.0 / (self.sample.size * h * _SQRT_2PI)
        chunk = max(1, 4_000_000 // self.sample.size)
        for lo in range(0, grid.size, chunk):
            z = (grid[lo : lo + chunk, None] - self.sample[None, :]) / h
            out[lo : lo + chunk] = scale * np.exp(-0.5 * z * z).sum(axis=1)
        return out

    def padded_range(self, pad_bandwidths: float = 4.0) -> tuple[float, float]:
        pad = pad_bandwidths * self.bandwidth
        return float(self.sample.min() - pad), float(self.sample.max() + pad)


def kde_fit(sample: np.ndarray, bandwidth_rule="silverman") -> Kde1D:
    """Fit a Gaussian-kernel KDE.

    ``bandwidth_rule`` is either the string ``"silverman"`` (the default,
    h = 1.06 * sd * m^(-1/5)) or an explicit positive bandwidth.
    """
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 1 or sample.size < 2:
        raise ValueError("KDE needs a 1-D sample of size >= 2")
    if isinstance(bandwidth_rule, str):
        if bandwidth_rule != "silverman":
            raise ValueError(f"unknown bandwidth rule {bandwidth_rule!r}")
        sd = float(np.std(sample, ddof=1))
        if sd == 0.0:
            raise DegenerateSampleError("constant sample has no data-driven bandwidth")
        bandwidth = 1.06 * sd * sample.size ** (-1.0 / 5.0)
    else:
        bandwidth = float(bandwidth_rule)
    return Kde1D(sample=sample, bandwidth=bandwidth)


def grid_for_pair(p: Kde1D, q: Kde1D, points: int = 1024, pad_bandwidths: float = 4.0) -> Grid1D:
    """Grid covering the union of both padded sample ranges."""
    p_lo, p_hi = p.padded_range(pad_bandwidths)
    q_lo, q_hi = q.padded_range(pad_bandwidths)
    return Grid1D(lo=min(p_lo, q_lo), hi=max(p_hi, q_hi), points=points)


def l1_error(p: Kde1D, q: Kde1D, grid: Grid1D) -> float:
    """Trapezoidal quadrature of |p - q| over ``grid``; lies in [0, 2].

    Warns (CoverageWarning) if the grid fails to cover both samples' ranges
    padded by 4 bandwidths, since mass outside the grid is silently dropped.
    """
    for kde in (p, q):
        lo, hi = kde.padded_range()
        if grid.lo > lo or grid.hi < hi:
            warnings.warn(
                f"grid [{grid.lo}, {grid.hi}] does not cover the padded sample "
                f"range [{lo}, {hi}]; the L1 value underestimates the distance",
                CoverageWarning,
                stacklevel=2,
            )
    xs = grid.array()
    return float(np.trapezoid(np.abs(p.evaluate(xs) - q.evaluate(xs)), xs))


def epsilon_mean(per_component: np.ndarray) -> float:
    """Arithmetic mean of the per-component L1 indicators."""
    per_component = np.asarray(per_component, dtype=float)
    if per_component.size == 0:
        raise ValueError("epsilon_mean needs at least one component value")
    return float(per_component.mean())


def marginal_kdes(samples: np.ndarray, bandwidth_rule="silverman") -> list[Kde1D]:
    """One KDE per column of an (m, d) sample matrix."""
    samples = np.asarray(samples, dtype=float)
    return [kde_fit(samples[:, k], bandwidth_rule) for k in range(samples.shape[1])]


def epsilon_against_reference(
    samples: np.ndarray, reference: list[Kde1D], points: int = 1024
) -> tuple[float, np.ndarray]:
    """Per-component L1 distances to frozen reference KDEs, and their mean."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[1] != len(reference):
        raise ValueError("component count mismatch between samples and reference")
    per_component = np.empty(len(reference))
    for k, ref in enumerate(reference):
        kde = kde_fit(samples[:, k])
        per_component[k] = l1_error(kde, ref, grid_for_pair(kde, ref, points=points))
    return epsilon_mean(per_component), per_component


def mode_occupancy(states, centers) -> np.ndarray:
    """Fraction of chains nearest (Euclidean) to each center; sums to 1.

    Ties go to the lowest center index.  ``states`` is an (N, n) matrix or
    anything with a ``states`` attribute holding one.
    """
    states = np.asarray(getattr(states, "states", states), dtype=float)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[0] < 1:
        raise ValueError("need at least one center")
    dist2 = ((states[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    nearest = dist2.argmin(axis=1)
    counts = np.bincount(nearest, minlength=centers.shape[0])
    return counts / states.shape[0]


def write_occupancy_csv(path, rows: list[tuple[int, np.ndarray]]) -> None:
    """Write (sweep, proportions) rows as ``sweep,p_1..p_K``."""
    if not rows:
        raise ValueError("no occupancy rows to write")
    n_modes = len(rows[0][1])
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("sweep," + ",".join(f"p_{k + 1}" for k in range(n_modes)) + "\n")
        for sweep_idx, props in rows:
            fh.write(str(sweep_idx) + "," + ",".join(f"{p:.17g}" for p in props) + "\n")


def write_epsilon_csv(path, rows: list[tuple[int, float, float, np.ndarray]]) -> None:
    """Write (sweep, cpu_seconds, mean, per-component) rows."""
    if not rows:
        raise ValueError("no epsilon rows to write")
    n_comp = len(rows[0][3])
    header = "sweep,cpu_seconds,epsilon_mean," + ",".join(
        f"epsilon_{k + 1}" for k in range(n_comp)
    )
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for sweep_idx, cpu, mean, per_comp in rows:
            fh.write(
                f"{sweep_idx},{cpu:.17g},{mean:.17g},"
                + ",".join(f"{v:.17g}" for v in per_comp)
                + "\n"
            )
