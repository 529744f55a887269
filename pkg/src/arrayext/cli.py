"""Batch command-line interface.

Subcommands: synth, train, predict, music, mc, plot-data. Every subcommand
accepts a scenario config file and a seed; exit status 0 on success,
nonzero with a diagnostic on failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import containers
from .evaluation import (
    ConfigError,
    ResultsTable,
    ScenarioConfig,
    load_config,
    load_results,
    make_test_scene,
    parse_interval,
    persist_results,
    run_monte_carlo,
    train_bank_for,
)
from .music import estimate_doa
from .prediction import predict_high, select_grid
from .radar_model import synth_coupled


class CliError(Exception):
    """Fatal, user-facing command error."""


def _load_scenario(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "grid", None) is not None:
        updates["test_grid"] = parse_interval(args.grid)
    if getattr(args, "snr", None) is not None:
        updates["test_snr_db"] = tuple(
            float(s) for s in args.snr.split(",") if s.strip()
        )
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    if getattr(args, "paper_scale", False):
        cfg = cfg.with_paper_scale()
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_synth(args) -> int:
    cfg = _load_scenario(args)
    out = _out_dir(args)
    snr = cfg.test_snr_db[0]
    scene = make_test_scene(
        cfg.test_grid, cfg.k_targets, cfg.seed, n_pulses=cfg.n_snapshots_test
    )
    y_low, y_high = synth_coupled(scene, cfg.low_config, cfg.high_config, snr, cfg.seed + 1)
    containers.save_signal(out / "low.sig", y_low)
    containers.save_signal(out / "high.sig", y_high)
    (out / "scene.json").write_text(json.dumps({
        "angles_deg": list(scene.angles_deg),
        "snr_db": snr,
        "n_snapshots": cfg.n_snapshots_test,
        "seed": cfg.seed,
    }, indent=2))
    print(f"wrote {out / 'low.sig'} and {out / 'high.sig'}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_scenario(args)
    out = _out_dir(args)
    bank = train_bank_for(cfg)
    containers.save_bank(out, bank)
    for pair in bank.pairs:
        print(
            f"grid {pair.grid[0]:g}:{pair.grid[1]:g} "
            f"lambda={pair.lambda_train:g} train_error={pair.train_error:.4f}"
        )
    print(f"bank written to {out}")
    return 0


def _cmd_predict(args) -> int:
    cfg = _load_scenario(args)
    out = _out_dir(args)
    bank = containers.load_bank(args.bank)
    signal = containers.load_signal(args.signal)
    expected = bank.pairs[0].low_config.n_virtual
    if signal.data.shape[0] != expected:
        raise CliError(
            f"signal has {signal.data.shape[0]} virtual elements but the bank "
            f"was trained for a {expected}-element low array"
        )
    k = args.k if args.k is not None else cfg.k_targets
    pair = select_grid(signal, bank, k, cfg.angle_grid())
    result = predict_high(signal, pair, cfg.prediction_config())
    containers.save_signal(out / "predicted.sig", result.signal)
    (out / "predict_log.json").write_text(json.dumps({
        "grid_selected": list(result.grid),
        "n_iterations": result.n_iterations,
        "objectives": result.objectives,
    }, indent=2))
    print(f"predicted signal written to {out / 'predicted.sig'} "
          f"(grid {result.grid[0]:g}:{result.grid[1]:g}, {result.n_iterations} iterations)")
    return 0


def _cmd_music(args) -> int:
    cfg = _load_scenario(args)
    out = _out_dir(args)
    signal = containers.load_signal(args.signal)
    k = args.k if args.k is not None else cfg.k_targets
    est = estimate_doa(signal, k, cfg.angle_grid())
    containers.export_spectrum_csv(out / "spectrum.csv", est.spectrum)
    (out / "doa.json").write_text(json.dumps({
        "angles_deg": list(est.angles_deg),
        "degraded": est.degraded,
        "k": k,
    }, indent=2))
    print(f"estimated angles: {[round(a, 3) for a in est.angles_deg]}"
          + (" (degraded)" if est.degraded else ""))
    return 0


def _cmd_mc(args) -> int:
    cfg = _load_scenario(args)
    out = _out_dir(args)
    bank = containers.load_bank(args.bank) if args.bank else train_bank_for(cfg)
    table = run_monte_carlo(cfg, bank)
    persist_results(table, out / "results.csv")
    for row in table.rows:
        print(
            f"snr {row['snr_db']:+.1f} dB: rmse low {row['mean_rmse_low']:.3f} "
            f"pred {row['mean_rmse_pred']:.3f} high {row['mean_rmse_high']:.3f} "
            f"({row['n_ok']} ok, {row['n_degraded']} degraded)"
        )
    print(f"results written to {out / 'results.csv'}")
    return 0


def _cmd_plot_data(args) -> int:
    out = _out_dir(args)
    if args.results:
        table = load_results(args.results)
        norm = table.metadata.get("normalization") or max(
            (row[c] for row in table.rows
             for c in ("mean_rmse_low", "mean_rmse_pred", "mean_rmse_high")
             if row[c] is not None and np.isfinite(row[c])),
            default=1.0,
        )
        target = out / "normalized_results.csv"
        with open(target, "w") as fh:
            fh.write("snr_db,norm_rmse_low,norm_rmse_pred,norm_rmse_high\n")
            for row in table.rows:
                fh.write(
                    f"{row['snr_db']:g},{row['mean_rmse_low'] / norm:.6f},"
                    f"{row['mean_rmse_pred'] / norm:.6f},{row['mean_rmse_high'] / norm:.6f}\n"
                )
        print(f"normalized curve written to {target} (normalization {norm:.4f})")
        return 0
    # Spectrum comparison: low / predicted / high for one synthesized scene.
    if not args.bank:
        raise CliError("plot-data needs --results or --bank")
    cfg = _load_scenario(args)
    bank = containers.load_bank(args.bank)
    snr = cfg.test_snr_db[0]
    scene = make_test_scene(cfg.test_grid, cfg.k_targets, cfg.seed, cfg.n_snapshots_test)
    y_low, y_high = synth_coupled(scene, cfg.low_config, cfg.high_config, snr, cfg.seed + 1)
    pair = select_grid(y_low, bank, cfg.k_targets, cfg.angle_grid())
    predicted = predict_high(y_low, pair, cfg.prediction_config()).signal
    for name, sig in (("low", y_low), ("predicted", predicted), ("high", y_high)):
        est = estimate_doa(sig, cfg.k_targets, cfg.angle_grid())
        containers.export_spectrum_csv(out / f"spectrum_{name}.csv", est.spectrum)
    (out / "scene.json").write_text(json.dumps(
        {"angles_deg": list(scene.angles_deg), "snr_db": snr}, indent=2))
    print(f"spectrum CSVs written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arrayext",
        description="Antenna-array extrapolation via coupled dictionary learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, bank=False, signal=False):
        p.add_argument("--config", help="scenario config file (INI-style)")
        p.add_argument("--seed", type=int, help="base seed override")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--paper-scale", action="store_true",
                       help="use the published simulation sizes")
        p.add_argument("--grid", help="test angle interval lo:hi")
        p.add_argument("--snr", help="comma-separated test SNR list in dB")
        if bank:
            p.add_argument("--bank", help="dictionary bank directory")
        if signal:
            p.add_argument("--signal", required=True, help="signal container file")
            p.add_argument("--k", type=int, help="target count override")

    common(sub.add_parser("synth", help="generate coupled test signals"))
    common(sub.add_parser("train", help="train a grid dictionary bank"))
    p = sub.add_parser("predict", help="predict the high-array signal")
    common(p, bank=True, signal=True)
    p = sub.add_parser("music", help="spectrum and DoA of a signal file")
    common(p, signal=True)
    p = sub.add_parser("mc", help="Monte-Carlo SNR sweep")
    common(p, bank=True)
    p = sub.add_parser("plot-data", help="emit plot-ready CSVs")
    common(p, bank=True)
    p.add_argument("--results", help="results CSV to normalize")
    return parser


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "music": _cmd_music,
    "mc": _cmd_mc,
    "plot-data": _cmd_plot_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (CliError, ConfigError, containers.ContainerError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
