"""Brute-force verification on tiny discrete state spaces.

On a finite grid the one-sweep kernel of the interacting samplers can be
assembled exactly: each sub-iteration contributes, for every candidate state
z != x, the mass (1/N) * sum_j alpha_{i,j}(x, z) q_{i,j}(z | x), plus an atom
at x carrying the rest.  Composing the N sub-kernels in order gives the
exact transition matrix over the full ensemble space, against which
invariance of the product target, conditional detailed balance, and the
production sweep's empirical behavior are all checked numerically.

Discrete proposal probabilities stand in for the continuous densities
directly; the zero guard (alpha = 0 whenever either side of the ratio has
zero mass) applies verbatim.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .interacting_mwg import ScalarProposalKernel
from .proposals import InteractionContext, ProposalKernel
from .targets import TargetDensity

# Refuse to enumerate ensembles beyond this many joint states.
MAX_ENSEMBLE_STATES = 1_000_000


class SizeGuardError(ValueError):
    """The requested discrete state space is too large to enumerate."""


# proposal(i, j, others, from_point) -> pmf over the chain's point space.
# ``others`` is the tuple of chain point indices with entry i set to -1:
# the proposal may depend on the frozen other columns but never on the
# conditioning point through the ensemble (that is what ``from_point`` is for).
ProposalPmf = Callable[[int, int, tuple, int], np.ndarray]

# scalar_proposal(ell, i, j, others_digits, from_digit) -> pmf over component
# ell's values. ``others_digits`` is the (N, n) digit matrix with entry
# (i, ell) set to -1.
ScalarProposalPmf = Callable[[int, int, int, np.ndarray, int], np.ndarray]


def _default_alpha(num: float, den: float) -> float:
    if num <= 0.0 or den <= 0.0:
        return 0.0
    return min(1.0, num / den)


def unclipped_alpha(num: float, den: float) -> float:
    """Mutated acceptance dropping the min with 1: a negative control.

    The resulting kernel is not a Markov kernel and must visibly break the
    invariance checks.
    """
    if num <= 0.0 or den <= 0.0:
        return 0.0
    return num / den


@dataclass(frozen=True)
class DiscreteSpec:
    """A finite target plus a proposal family on a product grid.

    ``values[ell]`` lists the distinct reals component ell may take; a chain
    point is one value per component, indexed in mixed radix with component
    0 most significant.  ``target_pmf`` lives on chain points, ``proposal``
    is the cross-chain family q_{i,j}.
    """

    values: tuple
    n_chains: int
    target_pmf: np.ndarray
    proposal: ProposalPmf

    def __post_init__(self):
        values = tuple(tuple(float(v) for v in comp) for comp in self.values)
        for comp in values:
            if len(set(comp)) != len(comp):
                raise ValueError("component values must be distinct")
        pmf = np.asarray(self.target_pmf, dtype=float)
        n_points = int(np.prod([len(c) for c in values]))
        if pmf.shape != (n_points,):
            raise ValueError(f"target_pmf must have {n_points} entries, got {pmf.shape}")
        if np.any(pmf < 0.0):
            raise ValueError("target_pmf entries must be non-negative")
        if abs(pmf.sum() - 1.0) > 1e-14:
            raise ValueError(f"target_pmf sums to {pmf.sum()!r}, not 1")
        if self.n_chains < 1:
            raise ValueError("need at least one chain")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "target_pmf", pmf)
        sizes = tuple(len(c) for c in values)
        object.__setattr__(self, "_sizes", sizes)
        object.__setattr__(self, "_n_points", n_points)
        table = np.empty((n_points, len(values)))
        lookup = {}
        for idx in range(n_points):
            table[idx] = [values[ell][d] for ell, d in enumerate(self.point_digits(idx))]
            lookup[table[idx].tobytes()] = idx
        object.__setattr__(self, "_point_table", table)
        object.__setattr__(self, "_vector_lookup", lookup)

    @property
    def n_components(self) -> int:
        return len(self.values)

    @property
    def component_sizes(self) -> tuple:
        return self._sizes

    @property
    def n_points(self) -> int:
        return self._n_points

    @property
    def n_ensemble_states(self) -> int:
        return self.n_points**self.n_chains

    def point_digits(self, idx: int) -> tuple:
        digits = []
        for size in reversed(self.component_sizes):
            digits.append(idx % size)
            idx //= size
        return tuple(reversed(digits))

    def digits_to_point(self, digits) -> int:
        idx = 0
        for digit, size in zip(digits, self.component_sizes):
            if not 0 <= digit < size:
                raise ValueError(f"digit {digit} out of range for component size {size}")
            idx = idx * size + int(digit)
        return idx

    def point_vector(self, idx: int) -> np.ndarray:
        return self._point_table[idx].copy()

    def vector_to_point(self, vec) -> int:
        key = np.ascontiguousarray(vec, dtype=float).tobytes()
        idx = self._vector_lookup.get(key)
        if idx is None:
            raise ValueError(f"point {vec!r} is not on the grid")
        return idx

    def ensemble_tuple(self, idx: int) -> tuple:
        chains = []
        for _ in range(self.n_chains):
            chains.append(idx % self.n_points)
            idx //= self.n_points
        return tuple(reversed(chains))

    def ensemble_index(self, chains) -> int:
        idx = 0
        for point in chains:
            idx = idx * self.n_points + int(point)
        return idx

    def guard_size(self) -> None:
        if self.n_ensemble_states > MAX_ENSEMBLE_STATES:
            raise SizeGuardError(
                f"{self.n_ensemble_states} ensemble states exceed the "
                f"{MAX_ENSEMBLE_STATES} enumeration guard"
            )


@dataclass(frozen=True)
class TransitionMatrix:
    """Dense one-sweep kernel over the full ensemble space."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("transition matrix must be square")
        object.__setattr__(self, "matrix", mat)

    def assert_stochastic(self, tol: float = 1e-12) -> None:
        if np.any(self.matrix < -tol):
            raise ValueError("transition matrix has negative entries")
        sums = self.matrix.sum(axis=1)
        worst = float(np.abs(sums - 1.0).max())
        if worst > tol:
            raise ValueError(f"row sums deviate from 1 by {worst}")


def _fetch_pmf(raw: np.ndarray, expected: int, what: str) -> np.ndarray:
    pmf = np.asarray(raw, dtype=float)
    if pmf.shape != (expected,):
        raise ValueError(f"{what} must have {expected} entries, got {pmf.shape}")
    if np.any(pmf < 0.0):
        raise ValueError(f"{what} has negative entries")
    if abs(pmf.sum() - 1.0) > 1e-14:
        raise ValueError(f"{what} sums to {pmf.sum()!r}, not 1")
    return pmf


def build_sub_kernel(
    spec: DiscreteSpec,
    i: int,
    ensemble_point,
    alpha_fn: Callable[[float, float], float] | None = None,
) -> np.ndarray:
    """Exact pmf row of sub-iteration i from a partially-updated ensemble.

    The atom at the current point is computed as one minus the off-atom
    mass and cross-checked against the integral form of the rejection mass;
    a disagreement beyond rounding means the construction is buggy.
    """
    spec.guard_size()
    alpha = _default_alpha if alpha_fn is None else alpha_fn
    n_points = spec.n_points
    x = int(ensemble_point[i])
    others = tuple(-1 if k == i else int(p) for k, p in enumerate(ensemble_point))
    pi = spec.target_pmf

    row = np.zeros(n_points)
    alpha_q_total = 0.0  # integral form accumulator, includes z == x
    self_mass = 0.0
    for j in range(spec.n_chains):
        q_fwd = _fetch_pmf(spec.proposal(i, j, others, x), n_points, f"proposal row ({i},{j})")
        for z in range(n_points):
            q_rev = _fetch_pmf(
                spec.proposal(i, j, others, z), n_points, f"proposal row ({i},{j})"
            )[x]
            a = alpha(pi[z] * q_rev, pi[x] * q_fwd[z])
            mass = a * q_fwd[z] / spec.n_chains
            alpha_q_total += mass
            if z == x:
                self_mass += mass
            else:
                row[z] += mass
    atom_direct = 1.0 - row.sum()
    atom_integral = (1.0 - alpha_q_total) + self_mass
    if abs(atom_direct - atom_integral) > 1e-12 * max(1.0, abs(alpha_q_total)):
        raise AssertionError(
            f"rejection-mass forms disagree by {abs(atom_direct - atom_integral)}"
        )
    row[x] = atom_direct
    return row


def build_transition_matrix(
    spec: DiscreteSpec, alpha_fn: Callable[[float, float], float] | None = None
) -> TransitionMatrix:
    """Compose the N sub-kernels into the exact one-sweep ensemble kernel.

    Sub-kernel i is evaluated on states whose earlier columns already carry
    this sweep's values, which is exactly what the matrix product encodes.
    With ``alpha_fn`` overridden (mutation testing) the result need not be
    stochastic and no validation is applied.
    """
    spec.guard_size()
    n_states = spec.n_ensemble_states
    n_points = spec.n_points
    total = np.eye(n_states)
    for i in range(spec.n_chains):
        step = np.zeros((n_states, n_states))
        for e_idx in range(n_states):
            chains = spec.ensemble_tuple(e_idx)
            row = build_sub_kernel(spec, i, chains, alpha_fn)
            base = list(chains)
            for z in range(n_points):
                if row[z] == 0.0:
                    continue
                base[i] = z
                step[e_idx, spec.ensemble_index(base)] = row[z]
        total = total @ step
    result = TransitionMatrix(total)
    if alpha_fn is None:
        result.assert_stochastic()
    return result


def product_pmf(target_pmf: np.ndarray, n_chains: int) -> np.ndarray:
    """The product measure over the ensemble space (chain 0 most significant)."""
    out = np.asarray(target_pmf, dtype=float)
    for _ in range(n_chains - 1):
        out = np.multiply.outer(out, target_pmf).ravel()
    return out


def check_invariance(matrix: TransitionMatrix, target_pmf: np.ndarray, n_chains: int) -> float:
    """L1 residual of the product target under one application of the kernel."""
    product = product_pmf(target_pmf, n_chains)
    return float(np.abs(product @ matrix.matrix - product).sum())


def check_conditional_detailed_balance(
    spec: DiscreteSpec, alpha_fn: Callable[[float, float], float] | None = None
) -> float:
    """Max violation of pi(x) K_i(x, z) = pi(z) K_i(z, x) over all contexts.

    For every chain i and every frozen configuration of the other columns
    the sub-kernel must be in detailed balance with the single-chain target;
    that symmetry is what makes the product measure invariant under the
    composed sweep.
    """
    spec.guard_size()
    n_points = spec.n_points
    pi = spec.target_pmf
    worst = 0.0
    for i in range(spec.n_chains):
        other_axes = [range(n_points)] * (spec.n_chains - 1)
        for others in itertools.product(*other_axes):
            template = list(others[:i]) + [-1] + list(others[i:])
            kernel = np.empty((n_points, n_points))
            for x in range(n_points):
                point = list(template)
                point[i] = x
                kernel[x] = build_sub_kernel(spec, i, point, alpha_fn)
            flow = pi[:, None] * kernel
            worst = max(worst, float(np.abs(flow - flow.T).max()))
    return worst


def build_mwg_sub_kernel(
    spec: DiscreteSpec,
    scalar_proposal: ScalarProposalPmf,
    ell: int,
    i: int,
    ensemble_digits: np.ndarray,
    alpha_fn: Callable[[float, float], float] | None = None,
) -> np.ndarray:
    """Exact pmf row of the component-wise (ell, i) inner step.

    Conditional target ratios are pmf ratios of chain i's point with
    component ell substituted, conditioning on that chain's current other
    components.
    """
    alpha = _default_alpha if alpha_fn is None else alpha_fn
    m_ell = spec.component_sizes[ell]
    digits = np.asarray(ensemble_digits, dtype=int)
    xi = int(digits[i, ell])
    others = digits.copy()
    others[i, ell] = -1

    chain_digits = digits[i].copy()

    def cond_mass(digit: int) -> float:
        chain_digits[ell] = digit
        return float(spec.target_pmf[spec.digits_to_point(chain_digits)])

    cond = np.array([cond_mass(d) for d in range(m_ell)])
    row = np.zeros(m_ell)
    alpha_q_total = 0.0
    self_mass = 0.0
    for j in range(spec.n_chains):
        q_fwd = _fetch_pmf(
            scalar_proposal(ell, i, j, others, xi), m_ell, f"scalar proposal ({ell},{i},{j})"
        )
        for z in range(m_ell):
            q_rev = _fetch_pmf(
                scalar_proposal(ell, i, j, others, z), m_ell, f"scalar proposal ({ell},{i},{j})"
            )[xi]
            a = alpha(cond[z] * q_rev, cond[xi] * q_fwd[z])
            mass = a * q_fwd[z] / spec.n_chains
            alpha_q_total += mass
            if z == xi:
                self_mass += mass
            else:
                row[z] += mass
    atom_direct = 1.0 - row.sum()
    atom_integral = (1.0 - alpha_q_total) + self_mass
    if abs(atom_direct - atom_integral) > 1e-12 * max(1.0, abs(alpha_q_total)):
        raise AssertionError(
            f"rejection-mass forms disagree by {abs(atom_direct - atom_integral)}"
        )
    row[xi] = atom_direct
    return row


def build_mwg_transition_matrix(
    spec: DiscreteSpec,
    scalar_proposal: ScalarProposalPmf,
    alpha_fn: Callable[[float, float], float] | None = None,
) -> TransitionMatrix:
    """Exact one-sweep kernel of the component-wise sampler.

    Inner steps compose in (component, chain) order, components outermost,
    matching the production sweep.
    """
    spec.guard_size()
    n_states = spec.n_ensemble_states
    total = np.eye(n_states)
    for ell in range(spec.n_components):
        m_ell = spec.component_sizes[ell]
        for i in range(spec.n_chains):
            step = np.zeros((n_states, n_states))
            for e_idx in range(n_states):
                chains = spec.ensemble_tuple(e_idx)
                digits = np.array([spec.point_digits(p) for p in chains])
                row = build_mwg_sub_kernel(spec, scalar_proposal, ell, i, digits, alpha_fn)
                for z in range(m_ell):
                    if row[z] == 0.0:
                        continue
                    new_digits = digits[i].copy()
                    new_digits[ell] = z
                    new_chains = list(chains)
                    new_chains[i] = spec.digits_to_point(new_digits)
                    step[e_idx, spec.ensemble_index(new_chains)] = row[z]
            total = total @ step
    result = TransitionMatrix(total)
    if alpha_fn is None:
        result.assert_stochastic()
    return result


def check_mwg_conditional_detailed_balance(
    spec: DiscreteSpec,
    scalar_proposal: ScalarProposalPmf,
    alpha_fn: Callable[[float, float], float] | None = None,
) -> float:
    """Max detailed-balance violation of the (ell, i) inner kernels.

    Each inner kernel must be reversible with respect to chain i's
    conditional target given every frozen configuration of everything else
    (unnormalized conditional masses suffice, both sides scale alike).
    """
    spec.guard_size()
    worst = 0.0
    n_points = spec.n_points
    for ell in range(spec.n_components):
        m_ell = spec.component_sizes[ell]
        for i in range(spec.n_chains):
            for e_idx in range(n_points**spec.n_chains):
                chains = spec.ensemble_tuple(e_idx)
                digits = np.array([spec.point_digits(p) for p in chains])
                if digits[i, ell] != 0:
                    continue  # one representative per frozen context
                kernel = np.empty((m_ell, m_ell))
                cond = np.empty(m_ell)
                for xi in range(m_ell):
                    digits[i, ell] = xi
                    chain_point = spec.digits_to_point(digits[i])
                    cond[xi] = spec.target_pmf[chain_point]
                    kernel[xi] = build_mwg_sub_kernel(
                        spec, scalar_proposal, ell, i, digits, alpha_fn
                    )
                digits[i, ell] = 0
                flow = cond[:, None] * kernel
                worst = max(worst, float(np.abs(flow - flow.T).max()))
    return worst


class DiscreteTarget(TargetDensity):
    """TargetDensity view of a DiscreteSpec, for running the production sweep."""

    def __init__(self, spec: DiscreteSpec):
        self.spec = spec
        self.dim = spec.n_components
        with np.errstate(divide="ignore"):
            self._log_pmf = np.log(spec.target_pmf)

    def log_density(self, x: np.ndarray) -> float:
        return float(self._log_pmf[self.spec.vector_to_point(x)])


class DiscreteProposal(ProposalKernel):
    """ProposalKernel view of a DiscreteSpec's cross-chain pmf family.

    Rows are validated once and cached (with their cumulative sums) per
    (i, j, frozen-others, conditioning point); the production sweep hits
    the same handful of rows hundreds of thousands of times.
    """

    def __init__(self, spec: DiscreteSpec):
        self.spec = spec
        self._row_cache: dict = {}

    def _others(self, ctx: InteractionContext) -> tuple:
        return tuple(
            -1 if k == ctx.i else self.spec.vector_to_point(row)
            for k, row in enumerate(ctx.ensemble)
        )

    def _row(self, i: int, j: int, others: tuple, from_idx: int):
        key = (i, j, others, from_idx)
        entry = self._row_cache.get(key)
        if entry is None:
            pmf = _fetch_pmf(
                self.spec.proposal(i, j, others, from_idx),
                self.spec.n_points,
                f"proposal row ({i},{j})",
            )
            with np.errstate(divide="ignore"):
                log_pmf = np.log(pmf)
            entry = (np.cumsum(pmf), log_pmf)
            self._row_cache[key] = entry
        return entry

    def sample(self, ctx: InteractionContext, rng: np.random.Generator) -> np.ndarray:
        from_idx = self.spec.vector_to_point(ctx.ensemble[ctx.i])
        cumulative, _ = self._row(ctx.i, ctx.j, self._others(ctx), from_idx)
        z = int(np.searchsorted(cumulative, rng.uniform(), side="right"))
        return self.spec.point_vector(min(z, self.spec.n_points - 1))

    def log_density(self, ctx: InteractionContext, from_point, to_point) -> float:
        from_idx = self.spec.vector_to_point(from_point)
        _, log_pmf = self._row(ctx.i, ctx.j, self._others(ctx), from_idx)
        return float(log_pmf[self.spec.vector_to_point(to_point)])


class DiscreteScalarProposal(ScalarProposalKernel):
    """ScalarProposalKernel view of a discrete scalar pmf family.

    Lets the production component-wise sweep run on a DiscreteSpec so its
    one-sweep behavior can be compared against the exact matrix.
    """

    def __init__(self, spec: DiscreteSpec, scalar_proposal: ScalarProposalPmf):
        self.spec = spec
        self.scalar_proposal = scalar_proposal

    def _digits(self, bracket: np.ndarray, skip_i: int, skip_ell: int) -> np.ndarray:
        digits = np.empty(bracket.shape, dtype=int)
        for chain, row in enumerate(bracket):
            digits[chain] = self.spec.point_digits(self.spec.vector_to_point(row))
        digits[skip_i, skip_ell] = -1
        return digits

    def _value_to_digit(self, ell: int, value: float) -> int:
        grid = self.spec.values[ell]
        for digit, grid_value in enumerate(grid):
            if grid_value == value:
                return digit
        raise ValueError(f"value {value!r} is not on the grid of component {ell}")

    def _row(self, cctx, from_value: float) -> np.ndarray:
        others = self._digits(cctx.bracket, cctx.i, cctx.ell)
        return _fetch_pmf(
            self.scalar_proposal(
                cctx.ell, cctx.i, cctx.j, others, self._value_to_digit(cctx.ell, from_value)
            ),
            self.spec.component_sizes[cctx.ell],
            f"scalar proposal ({cctx.ell},{cctx.i},{cctx.j})",
        )

    def sample(self, cctx, rng: np.random.Generator) -> float:
        pmf = self._row(cctx, float(cctx.bracket[cctx.i, cctx.ell]))
        z = int(np.searchsorted(np.cumsum(pmf), rng.uniform(), side="right"))
        grid = self.spec.values[cctx.ell]
        return grid[min(z, len(grid) - 1)]

    def log_density(self, cctx, from_value: float, to_value: float) -> float:
        mass = self._row(cctx, from_value)[self._value_to_digit(cctx.ell, to_value)]
        return float(np.log(mass)) if mass > 0.0 else -np.inf

def random_mh_instance(
    rng: np.random.Generator, m: int = 3, n: int = 1, n_chains: int = 2
) -> DiscreteSpec:
    """Random strictly positive target and positive proposal family.

    The proposal depends on (i, j), the conditioning point, and the frozen
    other columns, exercising the full generality of the acceptance ratio.
    """
    values = tuple(tuple(sorted(rng.normal(0.0, 3.0, size=m))) for _ in range(n))
    n_points = m**n
    target = rng.uniform(0.2, 1.0, size=n_points)
    target /= target.sum()
    n_codes = n_points ** (n_chains - 1)
    table = rng.uniform(0.1, 1.0, size=(n_chains, n_chains, n_codes, n_points, n_points))
    table /= table.sum(axis=-1, keepdims=True)

    def proposal(i: int, j: int, others: tuple, from_idx: int) -> np.ndarray:
        code = 0
        for k, point in enumerate(others):
            if k == i:
                continue
            code = code * n_points + int(point)
        return table[i, j, code, from_idx]

    return DiscreteSpec(values=values, n_chains=n_chains, target_pmf=target, proposal=proposal)


def random_mwg_scalar_proposal(
    rng: np.random.Generator, spec: DiscreteSpec
) -> ScalarProposalPmf:
    """Random positive scalar proposal family for the component-wise oracle."""
    sizes = spec.component_sizes
    tables = []
    for m_ell in sizes:
        n_codes = spec.n_points ** (spec.n_chains - 1) * (spec.n_points // m_ell)
        t = rng.uniform(0.1, 1.0, size=(spec.n_chains, spec.n_chains, n_codes, m_ell, m_ell))
        t /= t.sum(axis=-1, keepdims=True)
        tables.append(t)

    def scalar_proposal(ell, i, j, others_digits, from_digit):
        sizes_flat = [spec.component_sizes[c] for c in range(spec.n_components)]
        code = 0
        digits = np.asarray(others_digits)
        for chain in range(spec.n_chains):
            for comp in range(spec.n_components):
                d = int(digits[chain, comp])
                if d < 0:
                    continue
                code = code * sizes_flat[comp] + d
        code %= tables[ell].shape[2]
        return tables[ell][i, j, code, from_digit]

    return scalar_proposal
