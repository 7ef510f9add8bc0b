"""Linear-Gaussian state-space experiment pieces.

The model is a scalar AR(1) state observed in Gaussian noise,

    s_{l+1} = a s_l + w_l,   y_l = b s_l + v_l,

with known b and unknown transition coefficient theta = a carrying a
Gaussian prior.  The sampler state is x = (s_1..s_n, theta).  The posterior
is not Gaussian jointly, but every full conditional is, so an exact Gibbs
sweep is available and serves as the reference method; a joint-Gaussian
oracle (the tridiagonal precision matrix of s given theta) verifies the
conditional formulas independently.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .targets import ConditionalTarget, TargetDensity

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class LgssmModel:
    """Model parameters; ``a_true`` is the value used to generate data."""

    a_true: float = 2.0
    b: float = 2.0
    sigma2_w: float = 9.0
    sigma2_v: float = 25.0
    s1_mean: float = 4.0
    s1_var: float = 9.0
    theta_mean: float = 1.0
    theta_var: float = 4.0
    n: int = 10

    def __post_init__(self):
        for name in ("sigma2_w", "sigma2_v", "s1_var", "theta_var"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.n < 1:
            raise ValueError("horizon n must be at least 1")


@dataclass(frozen=True)
class LgssmPosteriorState:
    """Sampler state (s_1..s_n, theta)."""

    s: np.ndarray
    theta: float

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if not (np.all(np.isfinite(s)) and np.isfinite(self.theta)):
            raise ValueError("posterior state entries must be finite")
        object.__setattr__(self, "s", s)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.s, [self.theta]])


@dataclass(frozen=True)
class ObservationRecord:
    """One simulated dataset, with the seed that regenerates it."""

    y: np.ndarray
    s_true: np.ndarray
    seed: int

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        s_true = np.asarray(self.s_true, dtype=float)
        if y.shape != s_true.shape or y.ndim != 1:
            raise ValueError("y and s_true must be equal-length vectors")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s_true", s_true)


def simulate(model: LgssmModel, rng: np.random.Generator, seed: int = 0) -> ObservationRecord:
    """Draw one trajectory and its observations from the generative model.

    ``seed`` is only stamped on the record for replay bookkeeping; callers
    derive ``rng`` from it.
    """
    s = np.empty(model.n)
    s[0] = model.s1_mean + np.sqrt(model.s1_var) * rng.standard_normal()
    w = np.sqrt(model.sigma2_w) * rng.standard_normal(model.n - 1)
    for ell in range(model.n - 1):
        s[ell + 1] = model.a_true * s[ell] + w[ell]
    y = model.b * s + np.sqrt(model.sigma2_v) * rng.standard_normal(model.n)
    return ObservationRecord(y=y, s_true=s, seed=seed)


def state_conditional(
    model: LgssmModel, y: np.ndarray, s: np.ndarray, theta: float, ell: int
) -> tuple[float, float]:
    """Exact Gaussian full conditional of s[ell] given everything else.

    ``ell`` is 0-based.  Interior components see both neighbors; the first
    component replaces the left dynamics term by the initial-state prior,
    and the last has no right neighbor (both endpoint forms follow from the
    joint density and are checked against the joint-Gaussian oracle).
    """
    n = model.n
    if not 0 <= ell < n:
        raise ValueError(f"component index {ell} out of range for horizon {n}")
    prec = model.b**2 / model.sigma2_v
    num = model.b * y[ell] / model.sigma2_v
    if ell == 0:
        prec += 1.0 / model.s1_var
        num += model.s1_mean / model.s1_var
    else:
        prec += 1.0 / model.sigma2_w
        num += theta * s[ell - 1] / model.sigma2_w
    if ell < n - 1:
        prec += theta**2 / model.sigma2_w
        num += theta * s[ell + 1] / model.sigma2_w
    return num / prec, 1.0 / prec


def theta_conditional(model: LgssmModel, s: np.ndarray) -> tuple[float, float]:
    """Exact Gaussian full conditional of theta given the state trajectory."""
    s = np.asarray(s, dtype=float)
    if s.shape != (model.n,):
        raise ValueError(f"expected trajectory of length {model.n}, got shape {s.shape}")
    if model.n < 2:
        raise ValueError("theta has no likelihood information for a horizon below 2")
    prec = 1.0 / model.theta_var + np.sum(s[:-1] ** 2) / model.sigma2_w
    num = model.theta_mean / model.theta_var + np.sum(s[:-1] * s[1:]) / model.sigma2_w
    return num / prec, 1.0 / prec


def gibbs_sweep(
    model: LgssmModel,
    y: np.ndarray,
    state: LgssmPosteriorState,
    rng: np.random.Generator,
    update_theta: bool = True,
) -> LgssmPosteriorState:
    """One exact Gibbs sweep: each s[ell] in order, then theta.

    Every draw comes straight from its full conditional, so nothing is ever
    rejected.
    """
    s = state.s.copy()
    theta = state.theta
    for ell in range(model.n):
        mean, var = state_conditional(model, y, s, theta, ell)
        s[ell] = mean + np.sqrt(var) * rng.standard_normal()
    if update_theta:
        mean, var = theta_conditional(model, s)
        theta = mean + np.sqrt(var) * rng.standard_normal()
    return LgssmPosteriorState(s=s, theta=float(theta))


def gibbs_reference_run(
    model: LgssmModel,
    y: np.ndarray,
    n_chains: int,
    n_sweeps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Final states of ``n_chains`` independent Gibbs chains, vectorized.

    Chains start from the priors (theta from its prior, every s entry from
    the initial-state prior).  Returns an (n_chains, n+1) array of the final
    (s, theta) values; the marginal kernel density estimate built from it is
    the frozen reference of the convergence indicator.
    """
    n = model.n
    theta = model.theta_mean + np.sqrt(model.theta_var) * rng.standard_normal(n_chains)
    s = model.s1_mean + np.sqrt(model.s1_var) * rng.standard_normal((n_chains, n))
    obs_prec = model.b**2 / model.sigma2_v
    for _ in range(n_sweeps):
        for ell in range(n):
            obs_num = model.b * y[ell] / model.sigma2_v
            if ell == 0:
                prec = obs_prec + 1.0 / model.s1_var + theta**2 / model.sigma2_w
                num = obs_num + model.s1_mean / model.s1_var + theta * s[:, 1] / model.sigma2_w
            elif ell == n - 1:
                prec = obs_prec + 1.0 / model.sigma2_w
                num = obs_num + theta * s[:, n - 2] / model.sigma2_w
            else:
                prec = obs_prec + (1.0 + theta**2) / model.sigma2_w
                num = obs_num + theta * (s[:, ell - 1] + s[:, ell + 1]) / model.sigma2_w
            s[:, ell] = num / prec + rng.standard_normal(n_chains) / np.sqrt(prec)
        prec = 1.0 / model.theta_var + np.sum(s[:, :-1] ** 2, axis=1) / model.sigma2_w
        num = model.theta_mean / model.theta_var + np.sum(s[:, :-1] * s[:, 1:], axis=1) / model.sigma2_w
        theta = num / prec + rng.standard_normal(n_chains) / np.sqrt(prec)
    return np.column_stack([s, theta])


def joint_gaussian_oracle(
    model: LgssmModel, y: np.ndarray, theta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact posterior mean and covariance of s given y at fixed theta.

    Builds the tridiagonal precision matrix of the conditionally Gaussian
    trajectory and solves it directly; used to verify ``state_conditional``
    (including the endpoint forms) rather than to run any sampler.
    """
    n = model.n
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise ValueError(f"expected observations of length {n}, got shape {y.shape}")
    prec = np.zeros((n, n))
    obs_prec = model.b**2 / model.sigma2_v
    for ell in range(n):
        prec[ell, ell] = obs_prec + (1.0 / model.s1_var if ell == 0 else 1.0 / model.sigma2_w)
        if ell < n - 1:
            prec[ell, ell] += theta**2 / model.sigma2_w
            prec[ell, ell + 1] = prec[ell + 1, ell] = -theta / model.sigma2_w
    eta = model.b * y / model.sigma2_v
    eta[0] += model.s1_mean / model.s1_var
    try:
        cov = np.linalg.inv(prec)
        mean = cov @ eta
    except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD for positive variances
        raise RuntimeError("posterior precision matrix is singular") from exc
    if not np.all(np.isfinite(mean)):
        raise RuntimeError("posterior solve produced non-finite values")
    return mean, cov


class LgssmPosterior(TargetDensity):
    """Joint log-density of x = (s, theta) given observations, up to a constant."""

    def __init__(self, model: LgssmModel, y: np.ndarray):
        self.model = model
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != (model.n,):
            raise ValueError(f"expected observations of length {model.n}")
        self.dim = model.n + 1

    def log_density(self, x: np.ndarray) -> float:
        x = self._check_dim(x)
        return float(self.log_density_many(x[None, :])[0])

    def log_density_many(self, points: np.ndarray) -> np.ndarray:
        m = self.model
        points = np.asarray(points, dtype=float)
        s = points[:, : m.n]
        theta = points[:, m.n]
        out = -0.5 * (s[:, 0] - m.s1_mean) ** 2 / m.s1_var
        out -= 0.5 * np.sum((s[:, 1:] - theta[:, None] * s[:, :-1]) ** 2, axis=1) / m.sigma2_w
        out -= 0.5 * np.sum((self.y - m.b * s) ** 2, axis=1) / m.sigma2_v
        out -= 0.5 * (theta - m.theta_mean) ** 2 / m.theta_var
        return out


class LgssmConditional(ConditionalTarget):
    """Closed-form conditionals of the posterior, for Gibbs-style samplers.

    Components 0..n-1 are the trajectory entries; component n is theta.
    """

    def __init__(self, model: LgssmModel, y: np.ndarray):
        self.model = model
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != (model.n,):
            raise ValueError(f"expected observations of length {model.n}")
        self.dim = model.n + 1

    def _moments(self, ell: int, rest: np.ndarray) -> tuple[float, float]:
        m = self.model
        rest = np.asarray(rest, dtype=float)
        if rest.shape != (self.dim - 1,):
            raise ValueError(f"expected rest of dimension {self.dim - 1}, got {rest.shape}")
        if ell == m.n:
            return theta_conditional(m, rest)
        theta = float(rest[-1])
        s = np.empty(m.n)
        s[:ell] = rest[:ell]
        s[ell] = np.nan  # never read by the conditional
        s[ell + 1 :] = rest[ell : m.n - 1]
        return state_conditional(m, self.y, s, theta, ell)

    def log_conditional(self, ell: int, xi: float, rest: np.ndarray) -> float:
        mean, var = self._moments(ell, rest)
        return float(-0.5 * (_LOG_2PI + np.log(var) + (xi - mean) ** 2 / var))

    def log_conditional_many(self, ell: int, xis: np.ndarray, rest: np.ndarray) -> np.ndarray:
        mean, var = self._moments(ell, rest)
        xis = np.asarray(xis, dtype=float)
        return -0.5 * (_LOG_2PI + np.log(var) + (xis - mean) ** 2 / var)


def write_dataset(path, record: ObservationRecord) -> None:
    """Serialize a dataset as CSV with the seed in a header comment."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# seed = {record.seed}\n")
        fh.write("ell,y,s_true\n")
        for ell, (obs, truth) in enumerate(zip(record.y, record.s_true), start=1):
            fh.write(f"{ell},{obs:.17g},{truth:.17g}\n")


def read_dataset(path) -> ObservationRecord:
    """Read back a dataset written by :func:`write_dataset`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith("# seed ="):
            raise ValueError(f"missing seed header in {path}")
        seed = int(header.split("=", 1)[1])
        body = fh.read()
    data = np.loadtxt(io.StringIO(body), delimiter=",", skiprows=1, ndmin=2)
    return ObservationRecord(y=data[:, 1], s_true=data[:, 2], seed=seed)
