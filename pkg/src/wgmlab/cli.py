"""Command-line interface.

Subcommands map one-to-one onto the library operations:

    spectrum        synthesize one doublet spectrum
    scan-equator    tip sweep along the equator (phi)
    scan-theta      tip sweep across the equator (theta)
    scan-radial     sphere-tip gap sweep
    weak-to-strong  theta sweep from outside the mode, singlet -> doublet
    fit             doublet fit of a spectrum CSV
    infer-radius    scatterer radius from splitting/broadening
    purcell         cavity enhancement factor

Simulation commands read a JSON config (--config); --out overrides the
output directory, --seed every stochastic seed, --channel the channel
list.  Exit code 0 on success; failures print one machine-readable JSON
line on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import analysis, reporting, scans
from .config import ExperimentConfig, load_config
from .errors import WgmlabError
from .physics import OpticalContext, purcell_factor


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = replace(cfg, output=replace(cfg.output, directory=args.out))
    if args.channel:
        cfg = replace(cfg, output=replace(cfg.output, channels=tuple(args.channel)))
    return cfg


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _cmd_spectrum(args) -> int:
    cfg = _load(args)
    spec = scans.run_spectrum(cfg)
    out = Path(cfg.output.directory)
    reporting.emit_spectrum(spec, out / "spectrum.csv", cfg.output.channels)
    if cfg.output.plots:
        reporting.save_spectrum_figure(spec, out / "spectrum.png", cfg.output.channels)
    reporting.emit_summary({"config_hash": cfg.config_hash()}, out / "summary.json")
    _say(args, f"spectrum written to {out / 'spectrum.csv'}")
    return 0


def _run_scan(args, runner, kind: str) -> int:
    cfg = _load(args)
    result = runner(cfg)
    result.summary["config_hash"] = cfg.config_hash()
    out = Path(cfg.output.directory)
    reporting.emit_scan_outputs(result, out, cfg.output.channels, cfg.output.plots)
    failed = sum(1 for r in result.rows if not r.fit_ok)
    _say(args, f"{kind}: {len(result.rows)} rows ({failed} fit failures) -> {out}")
    for key in ("sinusoid", "profile", "quadratic",
                "inferred_radius_nm", "inference_error"):
        if key in result.summary:
            _say(args, f"  {key}: {result.summary[key]}")
    return 0


def _cmd_fit(args) -> int:
    with open(args.input, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "detuning_mhz" not in reader.fieldnames:
            raise WgmlabError(f"{args.input} has no detuning_mhz column")
        channel = args.channel[0] if args.channel else None
        if channel is None:
            candidates = [c for c in reader.fieldnames if c != "detuning_mhz"]
            if not candidates:
                raise WgmlabError(f"{args.input} has no signal column")
            channel = candidates[0]
        elif channel not in reader.fieldnames:
            raise WgmlabError(f"column {channel!r} not present in {args.input}")
        freq, signal = [], []
        for record in reader:
            freq.append(float(record["detuning_mhz"]))
            signal.append(float(record[channel]))
    fit = analysis.fit_doublet(freq, signal)
    report = {
        "channel": channel,
        "center1_mhz": fit.center1_mhz,
        "center2_mhz": fit.center2_mhz,
        "splitting_mhz": fit.splitting_mhz,
        "fwhm1_mhz": fit.fwhm1_mhz,
        "fwhm2_mhz": fit.fwhm2_mhz,
        "added_broadening_mhz": fit.added_broadening_mhz,
        "amplitude1": fit.amplitude1,
        "amplitude2": fit.amplitude2,
        "baseline_offset": fit.baseline_offset,
        "baseline_slope": fit.baseline_slope,
        "residual_rms": fit.residual_rms,
        "degenerate": fit.degenerate,
        "stderr": fit.stderr,
    }
    out = Path(args.out or ".")
    reporting.emit_summary(report, out / "fit.json")
    if not args.no_plot:
        import numpy as np

        from .engine import Spectrum

        grid = np.asarray(freq) * 2e6 * np.pi
        sig = np.asarray(signal)
        spec = Spectrum(detuning_rad_s=grid, pd1=sig, pd2=sig, pd3=sig)
        reporting.save_spectrum_figure(spec, out / "fit.png", ("pd2",), fit=fit)
    _say(args, json.dumps(report, sort_keys=True))
    return 0


def _cmd_infer_radius(args) -> int:
    radius = analysis.infer_scatterer_radius(
        args.splitting_mhz, args.broadening_mhz,
        args.wavelength_nm * 1e-9, args.tip_index,
    )
    alpha = analysis.polarizability_from_ratio(
        args.splitting_mhz, args.broadening_mhz, args.wavelength_nm * 1e-9
    )
    print(json.dumps({
        "radius_nm": radius * 1e9,
        "polarizability_um3": alpha * 1e18,
        "tip_index": args.tip_index,
    }, sort_keys=True))
    return 0


def _cmd_purcell(args) -> int:
    ctx = OpticalContext(wavelength_m=args.wavelength_nm * 1e-9)
    factor = purcell_factor(args.q, ctx, args.mode_volume_um3 * 1e-18)
    print(json.dumps({"purcell_factor": factor}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wgmlab",
        description="Coupled whispering-gallery-mode doublet simulator and analyzer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None,
                       help="override every stochastic seed in the config")
        p.add_argument("--channel", action="append", default=None,
                       choices=["pd1", "pd2", "pd3"],
                       help="detector channel(s); repeatable")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    add_common(sub.add_parser("spectrum", help="synthesize one spectrum"))
    add_common(sub.add_parser("scan-equator", help="tip sweep along phi"))
    add_common(sub.add_parser("scan-theta", help="tip sweep along theta"))
    add_common(sub.add_parser("scan-radial", help="sphere-tip gap sweep"))
    add_common(sub.add_parser("weak-to-strong",
                              help="theta sweep from outside the mode"))

    fit = sub.add_parser("fit", help="doublet fit of a spectrum CSV")
    fit.add_argument("input", help="CSV with detuning_mhz plus signal column(s)")
    fit.add_argument("--no-plot", action="store_true")
    add_common(fit, needs_config=False)

    infer = sub.add_parser("infer-radius",
                           help="scatterer radius from splitting/broadening")
    infer.add_argument("--splitting-mhz", type=float, required=True)
    infer.add_argument("--broadening-mhz", type=float, required=True)
    infer.add_argument("--wavelength-nm", type=float, required=True)
    infer.add_argument("--tip-index", type=float, default=1.45)

    purcell = sub.add_parser("purcell", help="cavity enhancement factor")
    purcell.add_argument("--q", type=float, required=True)
    purcell.add_argument("--wavelength-nm", type=float, required=True)
    purcell.add_argument("--mode-volume-um3", type=float, required=True)
    return parser


_HANDLERS = {
    "spectrum": _cmd_spectrum,
    "scan-equator": lambda a: _run_scan(a, scans.run_equatorial_scan, "scan-equator"),
    "scan-theta": lambda a: _run_scan(a, scans.run_polar_scan, "scan-theta"),
    "scan-radial": lambda a: _run_scan(a, scans.run_radial_scan, "scan-radial"),
    "weak-to-strong": lambda a: _run_scan(a, scans.run_weak_to_strong,
                                          "weak-to-strong"),
    "fit": _cmd_fit,
    "infer-radius": _cmd_infer_radius,
    "purcell": _cmd_purcell,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (WgmlabError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
