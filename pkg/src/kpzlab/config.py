"""Flat key-value experiment configuration with a typed schema.

The on-disk format is one ``key = value`` per line, ``#`` comments allowed;
it round-trips losslessly (floats serialized with repr) so a config file is
diff-able experiment provenance.  Every default is also stated in
docs/defaults.
"""

from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError


def _parse_bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_list(s) -> tuple:
    if isinstance(s, (tuple, list)):
        return tuple(int(v) for v in s)
    return tuple(int(v) for v in str(s).split(",") if v.strip())


_CHOICES = {
    "initial": ("flat", "cosine", "brownian"),
    "kernel": ("bump", "quartic"),
    "scheme": ("exponential", "euler"),
    "gradient": ("spectral", "central"),
    "route": ("grid", "bridge", "both"),
    "out_format": ("csv", "binary"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    # domain and grids
    half_length: float = 16.0
    n_points: int = 512
    horizon: float = 1.0
    n_steps: int = 1000
    # mollifier
    k: int = 2
    k_list: tuple = (1, 2, 4, 8)
    kernel: str = "bump"
    # initial condition
    initial: str = "flat"
    initial_amplitude: float = 0.5
    initial_seed: int = 9001
    # randomness and ensembles
    seed: int = 1
    n_seeds: int = 32
    zero_noise: bool = False
    refine_factors: tuple = (4, 2, 1)
    window: float = 4.0
    # fbsde
    base_point: float = 0.0
    n_drivers: int = 1000
    n_bridges: int = 10000
    n_probes: int = 100
    gh_nodes: int = 64
    gh_span: float = 6.0
    route: str = "both"
    # k-convergence
    ensemble: int = 1000
    bootstrap_resamples: int = 200
    # schemes
    scheme: str = "exponential"
    gradient: str = "spectral"
    # statistical thresholds
    se_tolerance: float = 3.0
    qv_sd_tolerance: float = 4.0
    batch_pass_fraction: float = 0.95
    min_order: float = 0.4
    monotone_fraction: float = 0.90
    # output
    out_format: str = "csv"
    plots: bool = True

    def validated(self) -> "ExperimentConfig":
        """Check every field against the module preconditions it feeds."""
        if self.half_length <= 0:
            raise ConfigError("half_length must be > 0", field="half_length")
        if self.n_points < 8:
            raise ConfigError("n_points must be >= 8", field="n_points")
        if self.horizon <= 0:
            raise ConfigError("horizon must be > 0", field="horizon")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1", field="n_steps")
        if self.k < 1:
            raise ConfigError("k must be a positive integer", field="k")
        if not self.k_list or any(k < 1 for k in self.k_list):
            raise ConfigError("k_list must hold positive integers", field="k_list")
        dx = 2.0 * self.half_length / self.n_points
        worst_k = max((self.k,) + tuple(self.k_list))
        if 1.0 / worst_k < dx:
            raise ConfigError(
                f"kernel at k={worst_k} unresolved: need dx <= 1/k, have dx={dx:.4g} "
                f"(n_points >= {int(2 * self.half_length * worst_k)})",
                field="n_points",
            )
        for name in ("n_seeds", "n_drivers", "n_probes", "ensemble", "bootstrap_resamples",
                     "gh_nodes", "n_bridges", "initial_seed"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", field=name)
        if self.seed < 0:
            raise ConfigError("seed must be >= 0", field="seed")
        if not self.refine_factors or sorted(self.refine_factors) != sorted(set(self.refine_factors)):
            raise ConfigError("refine_factors must be distinct", field="refine_factors")
        if any(self.n_steps % f for f in self.refine_factors):
            raise ConfigError(
                f"every refine factor must divide n_steps={self.n_steps}",
                field="refine_factors",
            )
        if not (0 < self.window <= self.half_length):
            raise ConfigError("window must lie in (0, half_length]", field="window")
        if abs(self.base_point) > self.window:
            raise ConfigError("base_point must lie inside the window", field="base_point")
        if self.gh_span <= 0:
            raise ConfigError("gh_span must be > 0", field="gh_span")
        for name, choices in _CHOICES.items():
            if getattr(self, name) not in choices:
                raise ConfigError(
                    f"{name} must be one of {choices}, got {getattr(self, name)!r}",
                    field=name,
                )
        for name in ("se_tolerance", "qv_sd_tolerance", "min_order"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0", field=name)
        for name in ("batch_pass_fraction", "monotone_fraction"):
            v = getattr(self, name)
            if not (0 < v <= 1):
                raise ConfigError(f"{name} must lie in (0, 1]", field=name)
        return self

    def override(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw).validated()


_PARSERS = {
    float: float,
    int: int,
    bool: _parse_bool,
    str: lambda s: s.strip(),
    tuple: _parse_int_list,
}


def _field_types():
    return {f.name: type(getattr(ExperimentConfig(), f.name)) for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    types = _field_types()
    values = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in types:
            raise ConfigError(f"line {ln}: unknown configuration key {key!r}", field=key)
        try:
            values[key] = _PARSERS[types[key]](val)
        except ValueError as exc:
            raise ConfigError(f"line {ln}: bad value for {key}: {exc}", field=key) from exc
    return ExperimentConfig(**values).validated()


def to_text(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_text(cfg))
