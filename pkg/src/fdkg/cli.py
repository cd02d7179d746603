"""Command-line interface for running experiments and inspecting artifacts."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import ConfigError, FormatError
from .keygen import read_key_dump, write_key_dump
from .model_io import load_model
from .pipeline import (
    ExperimentConfig,
    desk_profile,
    emit_report,
    paper_profile,
    run_pipeline,
    sweep as run_sweep,
)
from .randomness import run_battery

EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ERROR = 3


def _load_config(config: str | None, profile: str, seed: int | None) -> ExperimentConfig:
    if config is not None:
        cfg = ExperimentConfig.from_json(config)
        if seed is not None:
            raise ConfigError("--seed with --config is ambiguous; set the seed in the file")
        return cfg
    base = {"desk": desk_profile, "paper": paper_profile}.get(profile)
    if base is None:
        raise ConfigError(f"unknown profile {profile!r}")
    return base(seed if seed is not None else 0)


def _guarded(fn):
    try:
        fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    except FormatError as exc:
        click.echo(f"format error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    except (FloatingPointError, ZeroDivisionError, ArithmeticError) as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC_ERROR)


@click.group()
def main() -> None:
    """Multi-environment FDD-OFDM key generation experiments."""


@main.command()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(file_okay=False), default="out")
@click.option("--seed", type=int, default=None, help="Seed for the built-in profiles.")
@click.option("--profile", type=click.Choice(["desk", "paper"]), default="desk", show_default=True)
@click.option("--dump-keys", is_flag=True, help="Write per-cell ASCII key dumps for `fdkg nist`.")
def run(config: str | None, out: str, seed: int | None, profile: str, dump_keys: bool) -> None:
    """Run the full pipeline and write report.csv / report.json."""

    def go() -> None:
        cfg = _load_config(config, profile, seed)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)

        sink = None
        if dump_keys:

            def sink(alg, env_id, snr_db, alice_keys, bob_keys):
                name = f"keys_{alg}_env{env_id}_snr{snr_db:g}.txt"
                write_key_dump(alice_keys, out_dir / name)

        report = run_pipeline(cfg, key_sink=sink)
        emit_report(report, "csv", out_dir / "report.csv")
        emit_report(report, "json", out_dir / "report.json")
        for row in report.rows:
            click.echo(
                f"{row.algorithm:8s} env={row.env} snr={row.snr_db:g} dB  "
                f"nmse={row.nmse:.4f} ker={row.ker:.4f} kgr={row.kgr:.4f}"
            )
        click.echo(f"wrote {out_dir / 'report.csv'}")

    _guarded(go)


@main.command(name="sweep")
@click.option("--axis", required=True, type=click.Choice(["snr", "n_ad", "g_ad", "g_tr", "e_batch"]))
@click.option("--values", required=True, help="Comma-separated axis values, e.g. 1,2,4.")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(file_okay=False), default="out")
@click.option("--seed", type=int, default=None)
@click.option("--profile", type=click.Choice(["desk", "paper"]), default="desk", show_default=True)
def sweep_cmd(axis: str, values: str, config: str | None, out: str, seed: int | None, profile: str) -> None:
    """Sweep one hyper-parameter axis with shared seeds across values."""

    def go() -> None:
        try:
            parsed = [float(v) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad sweep values {values!r}: {exc}") from exc
        cfg = _load_config(config, profile, seed)
        report = run_sweep(cfg, axis, parsed)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        emit_report(report, "csv", out_dir / f"sweep_{axis}.csv")
        emit_report(report, "json", out_dir / f"sweep_{axis}.json")
        click.echo(f"wrote {out_dir / f'sweep_{axis}.csv'}")

    _guarded(go)


@main.command()
@click.option("--keys", "keys_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def nist(keys_path: str, out_path: str) -> None:
    """Run the randomness battery over an ASCII key dump and write a CSV."""

    def go() -> None:
        keys = read_key_dump(keys_path)
        if not keys:
            raise ConfigError(f"{keys_path}: no keys found")
        rows = run_battery(keys)
        with open(out_path, "w") as fh:
            fh.write("test,mode,params,n_keys,pass_ratio,p_values\n")
            for row in rows:
                params = ";".join(f"{k}={v}" for k, v in sorted(row.params.items()))
                pvals = ";".join(f"{p:.9g}" for p in row.p_values)
                fh.write(
                    f"{row.test_name},{row.mode},{params},{row.n_keys},"
                    f"{row.pass_ratio:.9g},{pvals}\n"
                )
        for row in rows:
            click.echo(f"{row.test_name:22s} {row.mode:13s} pass ratio {row.pass_ratio:.4f}")

    _guarded(go)


@main.group()
def model() -> None:
    """Model file utilities."""


@model.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def inspect(path: str) -> None:
    """Print the layer layout and normalizer summary of a model file."""

    def go() -> None:
        net, norm = load_model(path)
        size = Path(path).stat().st_size
        click.echo(f"dims: {list(net.layer_dims)}")
        click.echo(f"parameters: {net.n_parameters}")
        click.echo(f"file size: {size} bytes ({size / 1e6:.2f} MB)")
        click.echo(
            f"normalizer: min in [{norm.col_min.min():.6g}, {norm.col_min.max():.6g}], "
            f"max in [{norm.col_max.min():.6g}, {norm.col_max.max():.6g}]"
        )

    _guarded(go)


if __name__ == "__main__":
    main()
