"""Experiment drivers: the multimodal benchmark, the state-space comparison,
and the exact-kernel checks, with CSV emission and CPU accounting."""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import RunConfig
from .diagnostics import (
    epsilon_against_reference,
    marginal_kdes,
    mode_occupancy,
    write_epsilon_csv,
    write_occupancy_csv,
)
from .discrete_oracle import (
    build_mwg_transition_matrix,
    build_transition_matrix,
    check_conditional_detailed_balance,
    check_invariance,
    check_mwg_conditional_detailed_balance,
    random_mh_instance,
    random_mwg_scalar_proposal,
    unclipped_alpha,
)
from .interacting_mh import ChainEnsemble, sweep
from .interacting_mwg import (
    GaussianStep,
    IndependenceGaussian,
    ScalarDistanceAdaptiveGaussian,
    independent_parallel_run,
    mwg_sweep,
)
from .lgssm import LgssmConditional, LgssmModel, gibbs_reference_run, simulate, write_dataset
from .proposals import DistanceAdaptiveGaussian
from .streams import StreamKeys
from .targets import three_mode_benchmark

# Initialization square of the multimodal benchmark: chains start uniform on
# [-15, 10] x [0, 10], which leaves the low-weight mode uncovered.
INIT_SQUARE_LOW = (-15.0, 0.0)
INIT_SQUARE_HIGH = (10.0, 10.0)


def write_manifest(path, cfg: RunConfig) -> None:
    """Record the fully resolved configuration and the library versions."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("# resolved run configuration\n")
        for key, value in cfg.manifest_items():
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            fh.write(f"{key} = {value}\n")
        fh.write(f"interchain_version = {__version__}\n")
        fh.write(f"numpy_version = {np.__version__}\n")
        fh.write(f"scipy_version = {scipy.__version__}\n")
        fh.write(f"python_version = {sys.version.split()[0]}\n")


def write_positions_csv(path, states: np.ndarray) -> None:
    """Chain positions as ``chain,x1..xn`` rows."""
    dim = states.shape[1]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("chain," + ",".join(f"x{k + 1}" for k in range(dim)) + "\n")
        for idx, row in enumerate(states, start=1):
            fh.write(str(idx) + "," + ",".join(f"{v:.17g}" for v in row) + "\n")


def run_multimodal(cfg: RunConfig) -> dict:
    """The three-mode benchmark: interacting MH on the 2-D mixture.

    Emits occupancy.csv at the diagnostic cadence, positions_<k>.csv at the
    configured snapshot sweeps, and the run manifest.  Returns a summary
    with the final occupancy vector.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    target = three_mode_benchmark()
    kernel = DistanceAdaptiveGaussian(
        d_min=cfg.d_min, d_max=cfg.d_max, center_on_proposer=cfg.center_on_proposer
    )
    keys = StreamKeys(cfg.seed)
    init_rng = keys.init_stream()
    states = init_rng.uniform(INIT_SQUARE_LOW, INIT_SQUARE_HIGH, size=(cfg.chains, 2))
    ensemble = ChainEnsemble(states)

    snapshots = {k for k in cfg.snapshot_sweeps if k <= cfg.sweeps}
    centers = target.means
    occupancy_rows = [(0, mode_occupancy(ensemble, centers))]
    if 0 in snapshots:
        write_positions_csv(out / "positions_0.csv", ensemble.states)

    log_densities = None
    acceptance = 0.0
    for k in range(1, cfg.sweeps + 1):
        ensemble, stats, log_densities = sweep(
            ensemble, target, kernel, keys, parallel=cfg.parallel, log_densities=log_densities
        )
        acceptance += stats.acceptance_rate
        if k % cfg.diag_every == 0 or k == cfg.sweeps:
            occupancy_rows.append((k, mode_occupancy(ensemble, centers)))
        if k in snapshots:
            write_positions_csv(out / f"positions_{k}.csv", ensemble.states)

    write_occupancy_csv(out / "occupancy.csv", occupancy_rows)
    write_manifest(out / "run_manifest", cfg)
    final = occupancy_rows[-1][1]
    return {
        "final_occupancy": final,
        "mean_acceptance_rate": acceptance / cfg.sweeps,
        "out": str(out),
    }


def run_hmm(cfg: RunConfig) -> dict:
    """The state-space comparison: interacting vs independent MwG.

    One dataset is simulated and shared; the long Gibbs run freezes the
    reference marginal KDEs; both comparison methods then report the
    indicator at their own cadence with per-method CPU accounting
    (sampling time only, so the indicator cost does not pollute the axis).

    The dataset and the reference derive from ``data_seed`` so that several
    sampler seeds can be compared on one posterior; sampler initialization
    and sweeps derive from ``seed``.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    model = LgssmModel(
        a_true=cfg.a_true,
        b=cfg.b,
        sigma2_w=cfg.sigma2_w,
        sigma2_v=cfg.sigma2_v,
        s1_mean=cfg.s1_mean,
        s1_var=cfg.s1_var,
        theta_mean=cfg.theta_mean,
        theta_var=cfg.theta_var,
        n=cfg.horizon,
    )
    data_seed = cfg.resolved_data_seed()
    data_keys = StreamKeys(data_seed)
    keys = StreamKeys(cfg.seed)
    record = simulate(model, data_keys.data_stream(), seed=data_seed)
    write_dataset(out / "dataset.csv", record)

    reference = gibbs_reference_run(
        model, record.y, cfg.ref_chains, cfg.ref_sweeps, data_keys.reference_stream()
    )
    ref_kdes = marginal_kdes(reference)

    ct = LgssmConditional(model, record.y)
    init_rng = keys.init_stream()
    init = np.column_stack(
        [
            model.s1_mean + np.sqrt(model.s1_var) * init_rng.standard_normal((cfg.chains, model.n)),
            model.theta_mean + np.sqrt(model.theta_var) * init_rng.standard_normal(cfg.chains),
        ]
    )

    # method (i): interacting MwG
    kernel = ScalarDistanceAdaptiveGaussian(
        self_step=cfg.self_step,
        d_min=cfg.d_min,
        d_max=cfg.d_max,
        center_on_proposer=cfg.center_on_proposer,
    )
    ensemble = ChainEnsemble(init)
    int_rows = []
    cpu = 0.0
    for k in range(1, cfg.sweeps + 1):
        t0 = time.process_time()
        ensemble, _ = mwg_sweep(ensemble, ct, kernel, keys, parallel=cfg.parallel)
        cpu += time.process_time() - t0
        if k % cfg.diag_every == 0 or k == cfg.sweeps:
            mean, per_comp = epsilon_against_reference(ensemble.states, ref_kdes)
            int_rows.append((k, cpu, mean, per_comp))
    write_epsilon_csv(out / "epsilon_interacting.csv", int_rows)

    # method (ii): independent MwG from the same initial states.  The
    # default per-component proposal is the state-independent prior draw;
    # "rw" switches to the same Gaussian step the interacting run uses for
    # its self-proposals.
    if cfg.indep_proposal == "prior":
        plain_kernels = [
            IndependenceGaussian(model.s1_mean, float(np.sqrt(model.s1_var)))
        ] * model.n + [IndependenceGaussian(model.theta_mean, float(np.sqrt(model.theta_var)))]
    else:
        plain_kernels = GaussianStep(cfg.self_step)
    indep_sweeps = cfg.resolved_indep_sweeps()
    indep_cadence = cfg.resolved_indep_diag_every()
    ind_rows = []
    clock = {"cpu": 0.0, "mark": time.process_time()}

    def on_sweep(k: int, states: np.ndarray) -> None:
        done = k + 1
        if done % indep_cadence == 0 or done == indep_sweeps:
            clock["cpu"] += time.process_time() - clock["mark"]
            mean, per_comp = epsilon_against_reference(states, ref_kdes)
            ind_rows.append((done, clock["cpu"], mean, per_comp))
            clock["mark"] = time.process_time()

    independent_parallel_run(init, ct, plain_kernels, indep_sweeps, keys, callback=on_sweep)
    write_epsilon_csv(out / "epsilon_independent.csv", ind_rows)
    write_manifest(out / "run_manifest", cfg)
    return {
        "interacting_final_epsilon": int_rows[-1][2],
        "interacting_cpu_seconds": int_rows[-1][1],
        "independent_final_epsilon": ind_rows[-1][2],
        "independent_cpu_seconds": ind_rows[-1][1],
        "out": str(out),
    }


def run_oracle_check(cfg: RunConfig) -> list:
    """Exact-kernel checks on random small instances; returns report rows.

    Each row is (name, value, bound, direction, passed): the invariance
    residual and conditional detailed balance of the whole-vector kernel on
    a (M=3, n=1, N=2) instance and of the component-wise kernel on a
    (M=3, n=2, N=2) instance, each with a corrupted-acceptance negative
    control that must visibly fail.
    """
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 97)))
    rows = []

    spec = random_mh_instance(rng, m=3, n=1, n_chains=2)
    matrix = build_transition_matrix(spec)
    res = check_invariance(matrix, spec.target_pmf, spec.n_chains)
    rows.append(("mh_invariance_residual", res, 1e-12, "<=", res <= 1e-12))
    bad = build_transition_matrix(spec, alpha_fn=unclipped_alpha)
    bad_res = check_invariance(bad, spec.target_pmf, spec.n_chains)
    rows.append(("mh_mutated_alpha_residual", bad_res, 1e-4, ">=", bad_res >= 1e-4))
    cdb = check_conditional_detailed_balance(spec)
    rows.append(("mh_conditional_detailed_balance", cdb, 1e-12, "<=", cdb <= 1e-12))

    spec2 = random_mh_instance(rng, m=3, n=2, n_chains=2)
    scalar = random_mwg_scalar_proposal(rng, spec2)
    matrix2 = build_mwg_transition_matrix(spec2, scalar)
    res2 = check_invariance(matrix2, spec2.target_pmf, spec2.n_chains)
    rows.append(("mwg_invariance_residual", res2, 1e-12, "<=", res2 <= 1e-12))
    bad2 = build_mwg_transition_matrix(spec2, scalar, alpha_fn=unclipped_alpha)
    bad2_res = check_invariance(bad2, spec2.target_pmf, spec2.n_chains)
    rows.append(("mwg_mutated_alpha_residual", bad2_res, 1e-4, ">=", bad2_res >= 1e-4))
    cdb2 = check_mwg_conditional_detailed_balance(spec2, scalar)
    rows.append(("mwg_conditional_detailed_balance", cdb2, 1e-12, "<=", cdb2 <= 1e-12))
    return rows
