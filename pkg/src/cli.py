#!/usr/bin/env python3
"""
Command-Line Interface

This module provides the commands run by `python -m src`:

    synth      generate a preset scenario
    sswpt      synchrosqueezed transform, ridges and fundamental profiles
    decompose  recursive shape regression (with --auto, sswpt first)
    bench      sweep experiments and write bench.json

Every command accepts --seed, --config, --out and --log-level; flags override
the config file, which overrides the environment and the project defaults.
A ShapeDecompError ends the command with exit code 1.
"""

from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional

import typer

from src.exceptions import ShapeDecompError, ValidationError
from src.pipeline import BENCH_SUITES, run_bench, run_decompose, run_sswpt, run_synth
from src.utils.config import RunConfig, load_config
from src.utils.logging import configure_logging, get_logger
from src.utils.tables import read_profile_csv, read_signal_csv

logger = get_logger(__name__)

app = typer.Typer(no_args_is_help=True, help="Shape decomposition of generalized mode signals.")

SEED_OPTION = typer.Option(None, "--seed", help="Seed for every random draw")
CONFIG_OPTION = typer.Option(None, "--config", help="Config file (.env, .yaml or a meta/report .json)")
OUT_OPTION = typer.Option(Path("out"), "--out", help="Output directory")
LOG_LEVEL_OPTION = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR")


def _resolve_config(config_file: Optional[Path], overrides: Dict[str, Any]) -> RunConfig:
    cfg = load_config(config_file, overrides)
    configure_logging(cfg)
    logger.debug(f"Resolved configuration: {cfg.to_dict()}")
    return cfg


def _fail(e: ShapeDecompError) -> NoReturn:
    logger.error(str(e))
    raise typer.Exit(code=1)


@app.command()
def synth(
    preset: Optional[str] = typer.Option(None, "--preset", help="ex1, ex2, ex3, ecg_pair, pwc_pair or cosine"),
    L: Optional[int] = typer.Option(None, "--L", help="Number of samples"),
    N: Optional[float] = typer.Option(None, "--N", help="Fundamental frequency of preset ex2"),
    sigma2: Optional[float] = typer.Option(None, "--sigma2", help="Noise variance"),
    snr: Optional[float] = typer.Option(None, "--snr", help="Target SNR in dB (overrides --sigma2)"),
    grid: Optional[str] = typer.Option(None, "--grid", help="uniform or iid_uniform"),
    seed: Optional[int] = SEED_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    log_level: Optional[str] = LOG_LEVEL_OPTION,
):
    """Write signal.csv, mode_k.csv, profile_k.csv and meta.json for a preset."""
    try:
        cfg = _resolve_config(config, {
            "PRESET": preset, "L": L, "N": N, "SIGMA2": sigma2, "SNR": snr,
            "GRID": grid, "SEED": seed, "LOG_LEVEL": log_level,
        })
        written = run_synth(cfg, out)
    except ShapeDecompError as e:
        _fail(e)
    typer.echo(f"Wrote {len(written)} files to {out}")


@app.command()
def sswpt(
    signal: Path = typer.Argument(..., help="Signal CSV (t,value or t,re,im)"),
    k: Optional[int] = typer.Option(None, "--k", help="Number of fundamental profiles"),
    nbins: Optional[int] = typer.Option(None, "--tf-nbins", help="Frequency bins of the distribution"),
    penalty: Optional[float] = typer.Option(None, "--ridge-penalty", help="Ridge smoothness penalty"),
    freq_max: Optional[float] = typer.Option(None, "--freq-max", help="Highest analysed frequency"),
    seed: Optional[int] = SEED_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    log_level: Optional[str] = LOG_LEVEL_OPTION,
):
    """Write tf.csv, tf.bin, ridges.csv, profile_k.csv and meta.json for a signal."""
    try:
        cfg = _resolve_config(config, {
            "K": k, "TF_NBINS": nbins, "RIDGE_PENALTY": penalty, "FREQ_MAX": freq_max,
            "SEED": seed, "LOG_LEVEL": log_level,
        })
        result = run_sswpt(read_signal_csv(signal), cfg, out)
    except ShapeDecompError as e:
        _fail(e)
    typer.echo(f"Found {len(result.ridges)} ridges and {len(result.profiles)} fundamental profiles")


@app.command()
def decompose(
    signal: Path = typer.Argument(..., help="Real signal CSV (t,value)"),
    profiles: Optional[List[Path]] = typer.Option(None, "--profiles", help="Profile CSV per mode (repeat)"),
    auto: bool = typer.Option(False, "--auto", help="Estimate the profiles with sswpt first"),
    k: Optional[int] = typer.Option(None, "--k", help="Number of modes for --auto"),
    method: Optional[str] = typer.Option(None, "--method", help="partition or spline"),
    max_iter: Optional[int] = typer.Option(None, "--max-iter", help="Iteration cap"),
    eps: Optional[float] = typer.Option(None, "--eps", help="Stopping tolerance"),
    guard: Optional[str] = typer.Option(None, "--guard", help="strict or residual_only"),
    update: Optional[str] = typer.Option(None, "--update", help="simultaneous or sequential"),
    dump_folded: bool = typer.Option(False, "--dump-folded", help="Also write folded_k.csv"),
    seed: Optional[int] = SEED_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    log_level: Optional[str] = LOG_LEVEL_OPTION,
):
    """Write shape_k.csv, mode_k.csv, residual.csv and report.json."""
    try:
        cfg = _resolve_config(config, {
            "K": k, "METHOD": method, "MAX_ITER": max_iter, "EPS": eps, "GUARD": guard, "UPDATE": update,
            "SEED": seed, "LOG_LEVEL": log_level,
        })
        if auto == bool(profiles):
            raise ValidationError("Give either --profiles (one per mode) or --auto")
        sig = read_signal_csv(signal)
        loaded = None if auto else [read_profile_csv(path, sig.grid) for path in profiles]
        decomposition = run_decompose(sig, cfg, out, profiles=loaded, dump_folded=dump_folded)
    except ShapeDecompError as e:
        _fail(e)
    report = decomposition.report
    typer.echo(
        f"Stopped after {report.iterations} iterations ({report.stop_reason}), "
        f"residual {report.final_residual_norm:.3e}"
    )


@app.command()
def bench(
    suite: str = typer.Option(..., "--suite", help=", ".join(BENCH_SUITES)),
    workers: int = typer.Option(1, "--workers", help="Cells run in parallel"),
    snr: Optional[float] = typer.Option(None, "--snr", help="Noisy cell SNR of the noise suite"),
    seed: Optional[int] = SEED_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    log_level: Optional[str] = LOG_LEVEL_OPTION,
):
    """Run a bench suite and write bench.json."""
    try:
        cfg = _resolve_config(config, {"SNR": snr, "SEED": seed, "LOG_LEVEL": log_level})
        result = run_bench(suite, cfg, out, workers=workers)
    except ShapeDecompError as e:
        _fail(e)
    typer.echo(f"Bench '{suite}' wrote {len(result['cells'])} cells to {out}")


def main() -> None:
    app()


if __name__ == "__main__":
    main()
