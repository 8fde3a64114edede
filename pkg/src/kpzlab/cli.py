"""Command-line entry points.

Exit status encodes contract outcomes: 0 all pass, 2 statistical-contract
failure, 3 invalid config or incompatible input file, 4 numerical
instability.
"""

import sys
from pathlib import Path

import click

from .config import ExperimentConfig, load_config, save_config
from .errors import ConfigError, InstabilityError, KpzLabError, NoiseFileError, PositivityError
from .experiments import (
    BAD_CONFIG,
    UNSTABLE,
    noise_dump,
    noise_gen,
    run_cross_validation,
    run_fbsde_verify,
    run_k_convergence,
    run_replay,
)


def _load_cfg(config, seed, fmt, plots) -> ExperimentConfig:
    cfg = load_config(config) if config else ExperimentConfig()
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if fmt is not None:
        overrides["out_format"] = fmt
    if plots is not None:
        overrides["plots"] = plots
    return cfg.override(**overrides) if overrides else cfg.validated()


def _finish(outcome):
    click.echo(outcome.summary)
    for f in outcome.files:
        click.echo(f"  wrote {f}")
    sys.exit(outcome.exit_code)


def _run(fn, *args, **kwargs):
    try:
        _finish(fn(*args, **kwargs))
    except ConfigError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(BAD_CONFIG)
    except NoiseFileError as exc:
        click.echo(f"noise file error: {exc}", err=True)
        sys.exit(BAD_CONFIG)
    except (InstabilityError, PositivityError) as exc:
        click.echo(f"numerical instability: {exc}", err=True)
        sys.exit(UNSTABLE)


def common_options(fn):
    fn = click.option("--config", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="Flat key=value config file.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the config seed.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default="out",
                      show_default=True, help="Report directory.")(fn)
    fn = click.option("--threads", type=int, default=1, show_default=True,
                      help="Worker processes for independent realizations.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "binary"]),
                      default=None, help="Trajectory dump format.")(fn)
    fn = click.option("--plots/--no-plots", "plots", default=None,
                      help="Render figures beside the CSV output.")(fn)
    return fn


@click.group()
def main():
    """Numerical laboratory for the mollified KPZ equation and its
    forward-backward SDE representation."""


@main.command("cross-validate")
@common_options
def cross_validate_cmd(config, seed, out, threads, fmt, plots):
    """Direct KPZ solve vs -log of the heat-equation route on shared noise."""
    cfg = _cfg_or_exit(config, seed, fmt, plots)
    _run(run_cross_validation, cfg, out, threads)


@main.command("fbsde-verify")
@common_options
def fbsde_verify_cmd(config, seed, out, threads, fmt, plots):
    """Bridge-vs-grid probes, Z quadratic variation, residual regressions."""
    cfg = _cfg_or_exit(config, seed, fmt, plots)
    _run(run_fbsde_verify, cfg, out, threads)


@main.command("k-convergence")
@common_options
def k_convergence_cmd(config, seed, out, threads, fmt, plots):
    """One-point distributions across mollification levels with KS distances."""
    cfg = _cfg_or_exit(config, seed, fmt, plots)
    _run(run_k_convergence, cfg, out, threads)


@main.command("replay")
@common_options
@click.option("--noise", "noise_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Persisted noise file to replay.")
@click.option("--reference", type=click.Path(exists=True, dir_okay=False), default=None,
              help="hashes.json from a previous run to compare against.")
@click.option("--frames", default=None,
              help="Comma-separated frame indices for the trajectory dump.")
def replay_cmd(config, seed, out, threads, fmt, plots, noise_path, reference, frames):
    """Deterministic solve from persisted noise; verifies bit-exact outputs."""
    cfg = _cfg_or_exit(config, seed, fmt, plots)
    frame_list = None
    if frames:
        try:
            frame_list = [int(v) for v in frames.split(",")]
        except ValueError:
            click.echo(f"invalid --frames {frames!r}: expected comma-separated integers",
                       err=True)
            sys.exit(BAD_CONFIG)
    _run(run_replay, cfg, out, noise_path=noise_path, reference=reference, frames=frame_list)


@main.group("noise")
def noise_group():
    """Generate and inspect persisted white-noise realizations."""


@noise_group.command("gen")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default="noise.bin", show_default=True)
def noise_gen_cmd(config, seed, out):
    """Write the white-noise matrix for (config, seed) to a binary file."""
    cfg = _cfg_or_exit(config, seed, None, None)
    try:
        path = noise_gen(cfg, out)
    except KpzLabError as exc:
        click.echo(str(exc), err=True)
        sys.exit(BAD_CONFIG)
    click.echo(f"wrote {path}")


@noise_group.command("dump")
@click.option("--noise", "noise_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Also export the matrix into this directory.")
@click.option("--format", "fmt", type=click.Choice(["csv", "binary"]), default="csv",
              show_default=True)
def noise_dump_cmd(noise_path, out, fmt):
    """Print the header and summary statistics of a noise file."""
    try:
        info, written = noise_dump(noise_path, out_dir=out, out_format=fmt)
    except NoiseFileError as exc:
        click.echo(f"noise file error: {exc}", err=True)
        sys.exit(BAD_CONFIG)
    for key, val in info.items():
        click.echo(f"{key} = {val}")
    if written:
        click.echo(f"wrote {written}")


@main.command("write-config")
@click.option("--out", type=click.Path(dir_okay=False), default="experiment.cfg",
              show_default=True)
def write_config_cmd(out):
    """Write a config file populated with every default."""
    save_config(ExperimentConfig(), out)
    click.echo(f"wrote {out}")


def _cfg_or_exit(config, seed, fmt, plots) -> ExperimentConfig:
    try:
        return _load_cfg(config, seed, fmt, plots)
    except ConfigError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(BAD_CONFIG)


if __name__ == "__main__":
    main()
