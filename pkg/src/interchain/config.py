"""Run configuration: flat key=value files, flag overrides, validation.

The config file format is one ``key = value`` pair per line with ``#``
comments; no nesting.  Command-line flags override file values.  Unknown
keys are rejected by name, as are type mismatches and out-of-range values.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

EXPERIMENTS = ("multimodal", "hmm", "oracle-check")


class ConfigError(ValueError):
    """A configuration problem, always naming the offending key."""


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_int_list(raw) -> tuple:
    if isinstance(raw, (tuple, list)):
        return tuple(int(v) for v in raw)
    return tuple(int(part) for part in str(raw).split(",") if part.strip() != "")


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment run needs, fully resolved."""

    experiment: str
    seed: int = 0
    chains: int = 50
    sweeps: int = 5000
    out: str = "runs"
    parallel: bool = False
    diag_every: int = 50
    # proposal parameters
    d_min: float = 1e-3
    d_max: float = 1e6
    center_on_proposer: bool = False
    self_step: float = 1.0
    # multimodal experiment
    snapshot_sweeps: tuple = (0, 1000, 5000)
    # state-space model
    a_true: float = 2.0
    b: float = 2.0
    sigma2_w: float = 9.0
    sigma2_v: float = 25.0
    s1_mean: float = 4.0
    s1_var: float = 9.0
    theta_mean: float = 1.0
    theta_var: float = 4.0
    horizon: int = 10
    # state-space experiment scales
    data_seed: int = -1  # -1 resolves to the run seed
    ref_chains: int = 2000
    ref_sweeps: int = 2000
    indep_proposal: str = "prior"  # "prior" (state-independent) or "rw"
    indep_sweeps: int = 0  # 0 resolves to 5 * sweeps (to overshoot the CPU budget)
    indep_diag_every: int = 0  # 0 resolves to 4 * diag_every

    def validate(self) -> "RunConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}"
            )
        positive = (
            "chains", "sweeps", "diag_every", "horizon", "ref_chains", "ref_sweeps",
        )
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if not 0.0 < self.d_min <= self.d_max:
            raise ConfigError(f"need 0 < d_min <= d_max, got ({self.d_min}, {self.d_max})")
        if self.self_step <= 0.0:
            raise ConfigError(f"self_step must be positive, got {self.self_step}")
        for name in ("sigma2_w", "sigma2_v", "s1_var", "theta_var"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.horizon < 2:
            raise ConfigError(f"horizon must be >= 2, got {self.horizon}")
        if any(s < 0 for s in self.snapshot_sweeps):
            raise ConfigError(f"snapshot_sweeps must be non-negative, got {self.snapshot_sweeps}")
        if self.indep_sweeps < 0 or self.indep_diag_every < 0:
            raise ConfigError("indep_sweeps and indep_diag_every must be non-negative")
        if self.indep_proposal not in ("prior", "rw"):
            raise ConfigError(
                f"indep_proposal must be 'prior' or 'rw', got {self.indep_proposal!r}"
            )
        if self.data_seed < -1:
            raise ConfigError(f"data_seed must be -1 (use seed) or non-negative, got {self.data_seed}")
        return self

    def resolved_data_seed(self) -> int:
        return self.seed if self.data_seed < 0 else self.data_seed

    def resolved_indep_sweeps(self) -> int:
        return self.indep_sweeps if self.indep_sweeps else 5 * self.sweeps

    def resolved_indep_diag_every(self) -> int:
        return self.indep_diag_every if self.indep_diag_every else 4 * self.diag_every

    def manifest_items(self) -> list:
        items = [(f.name, getattr(self, f.name)) for f in fields(self)]
        items.append(("resolved_data_seed", self.resolved_data_seed()))
        items.append(("resolved_indep_sweeps", self.resolved_indep_sweeps()))
        items.append(("resolved_indep_diag_every", self.resolved_indep_diag_every()))
        return items


_PARSERS = {
    "experiment": str,
    "seed": int,
    "chains": int,
    "sweeps": int,
    "out": str,
    "parallel": _parse_bool,
    "diag_every": int,
    "d_min": float,
    "d_max": float,
    "center_on_proposer": _parse_bool,
    "self_step": float,
    "snapshot_sweeps": _parse_int_list,
    "a_true": float,
    "b": float,
    "sigma2_w": float,
    "sigma2_v": float,
    "s1_mean": float,
    "s1_var": float,
    "theta_mean": float,
    "theta_var": float,
    "horizon": int,
    "data_seed": int,
    "ref_chains": int,
    "ref_sweeps": int,
    "indep_proposal": str,
    "indep_sweeps": int,
    "indep_diag_every": int,
}

# Experiment-specific defaults applied when a key appears in neither the
# file nor the flags.
_EXPERIMENT_DEFAULTS = {
    "multimodal": {"sweeps": 5000},
    "hmm": {"sweeps": 3000},
    "oracle-check": {"sweeps": 1},
}


def read_config_file(path) -> dict:
    """Parse a flat key=value file into raw string values."""
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if key in raw:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value
    return raw


def parse_config(experiment: str, path=None, overrides: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from an optional file plus flag overrides.

    Precedence: flags beat file values beat experiment defaults beat field
    defaults.  Unknown keys, in either source, are an error naming the key.
    """
    merged: dict = {}
    if path is not None:
        for key, value in read_config_file(path).items():
            if key not in _PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                merged[key] = _PARSERS[key](value)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, str) or key == "snapshot_sweeps":
            try:
                value = _PARSERS[key](value)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
        merged[key] = value
    if merged.pop("experiment", experiment) != experiment:
        raise ConfigError("experiment in config file disagrees with the subcommand")
    for key, value in _EXPERIMENT_DEFAULTS.get(experiment, {}).items():
        merged.setdefault(key, value)
    try:
        cfg = RunConfig(experiment=experiment, **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()
