"""Delimited output and figure rendering.

CSV files carry a header row, UTF-8, '.' decimals, one row per grid point
or scan stop; floats are written with shortest round-trip formatting so a
given run is byte-reproducible.  Figures are rendered to PNG next to the
CSVs with the headless Agg backend.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import DoubletFit, _doublet_model
from .engine import Spectrum
from .scans import ScanResult

_SAVEFIG = dict(dpi=150, metadata={"Software": None})


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def _write_rows(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def emit_spectrum(spec: Spectrum, path, channels=("pd1", "pd2", "pd3")) -> None:
    """Write one spectrum: detuning_mhz plus the selected channels."""
    header = ["detuning_mhz", *channels]
    detuning = spec.detuning_mhz
    columns = [spec.channel(ch) for ch in channels]
    rows = (
        [float(detuning[i]), *(float(col[i]) for col in columns)]
        for i in range(detuning.size)
    )
    _write_rows(path, header, rows)


def emit_csv(result: ScanResult, path) -> None:
    """Write the per-position scan table."""
    header = [
        "index", result.position_name, "splitting_mhz",
        "peak1_height", "peak2_height", "fwhm1_mhz", "fwhm2_mhz",
        "regime", "degenerate", "fit_ok", "fit_error",
    ]
    rows = (
        [
            r.index, float(r.position), float(r.splitting_mhz),
            float(r.peak1_height), float(r.peak2_height),
            float(r.fwhm1_mhz), float(r.fwhm2_mhz),
            r.regime, r.degenerate, r.fit_ok, r.fit_error,
        ]
        for r in result.rows
    )
    _write_rows(path, header, rows)


def emit_summary(summary: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def save_spectrum_figure(spec: Spectrum, path, channels=("pd2",),
                         fit: DoubletFit | None = None, title="") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    x = spec.detuning_mhz
    for ch in channels:
        ax.plot(x, spec.channel(ch), lw=1.2, label=ch)
    if fit is not None:
        params = [
            fit.center1_mhz, fit.center2_mhz, fit.fwhm1_mhz, fit.fwhm2_mhz,
            fit.amplitude1, fit.amplitude2, fit.baseline_offset, fit.baseline_slope,
        ]
        dense = np.linspace(x[0], x[-1], 4 * x.size)
        ax.plot(dense, _doublet_model(params, dense), "k--", lw=1.0, label="fit")
    ax.set_xlabel("detuning (MHz)")
    ax.set_ylabel("signal (arb. u.)")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def save_scan_figures(result: ScanResult, out_dir) -> list[Path]:
    """Render the standard figures for a scan; returns the files written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ok = [r for r in result.rows if r.fit_ok]
    if not ok:
        return []
    pos = np.array([r.position for r in ok])
    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(pos, [r.splitting_mhz for r in ok], "o", ms=3.5)
    summary = result.summary
    dense = np.linspace(pos.min(), pos.max(), 512)
    if "sinusoid" in summary:
        s = summary["sinusoid"]
        ax.plot(
            dense,
            s["mean_mhz"] + s["amplitude_mhz"]
            * np.sin(2 * np.pi * dense / s["period_rad"] + s["phase_rad"]),
            "-", lw=1.0,
        )
    if "profile" in summary:
        p = summary["profile"]
        ax.plot(
            dense,
            p["base_mhz"] + p["amplitude_mhz"]
            * np.exp(-((dense - p["center_rad"]) ** 2) / p["width_rad"] ** 2),
            "-", lw=1.0,
        )
    ax.set_xlabel(result.position_name)
    ax.set_ylabel("splitting (MHz)")
    fig.tight_layout()
    split_path = out_dir / "scan_splitting.png"
    fig.savefig(split_path, **_SAVEFIG)
    plt.close(fig)
    written.append(split_path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(pos, [r.peak1_height for r in ok], "o-", ms=3, lw=0.8, label="peak 1")
    ax.plot(pos, [r.peak2_height for r in ok], "s-", ms=3, lw=0.8, label="peak 2")
    ax.set_xlabel(result.position_name)
    ax.set_ylabel("peak height (arb. u.)")
    ax.legend(frameon=False)
    fig.tight_layout()
    peaks_path = out_dir / "scan_peaks.png"
    fig.savefig(peaks_path, **_SAVEFIG)
    plt.close(fig)
    written.append(peaks_path)

    if result.kind == "radial" and "quadratic" in summary:
        not_degenerate = [r for r in ok if not r.degenerate]
        s_mhz = np.array([r.splitting_mhz for r in not_degenerate])
        b_mhz = np.array(
            [abs(r.fwhm2_mhz - r.fwhm1_mhz) / 2.0 for r in not_degenerate]
        )
        quad = summary["quadratic"]
        two_pi_mhz = 2 * np.pi * 1e6
        dense_s = np.linspace(0.0, s_mhz.max() * 1.05, 256)
        model_b = (
            quad["c0_rad_s"]
            + quad["c1"] * dense_s * two_pi_mhz
            + quad["c2_s"] * (dense_s * two_pi_mhz) ** 2
        ) / two_pi_mhz
        fig, ax = plt.subplots(figsize=(6, 4.5))
        ax.plot(s_mhz, b_mhz, "o", ms=4)
        ax.plot(dense_s, model_b, "-", lw=1.0)
        ax.set_xlabel("splitting (MHz)")
        ax.set_ylabel("added broadening (MHz)")
        fig.tight_layout()
        quad_path = out_dir / "quadratic.png"
        fig.savefig(quad_path, **_SAVEFIG)
        plt.close(fig)
        written.append(quad_path)

    if result.kind == "weak_to_strong":
        fig, ax = plt.subplots(figsize=(6, 7))
        offset = 0.0
        for i, spec in enumerate(result.spectra):
            y = spec.pd2 / max(float(spec.pd2.max()), 1e-300)
            ax.plot(spec.detuning_mhz, y + offset, lw=1.0)
            offset += 1.1
        ax.set_xlabel("detuning (MHz)")
        ax.set_ylabel("pd2, frames offset vertically")
        fig.tight_layout()
        frames_path = out_dir / "frames.png"
        fig.savefig(frames_path, **_SAVEFIG)
        plt.close(fig)
        written.append(frames_path)
    return written


def emit_scan_outputs(result: ScanResult, out_dir, channels=("pd2",),
                      plots=True) -> None:
    """Standard report bundle: scan table, per-point spectra, summary JSON
    and (optionally) the figures."""
    out_dir = Path(out_dir)
    emit_csv(result, out_dir / "scan.csv")
    for i, spec in enumerate(result.spectra):
        emit_spectrum(spec, out_dir / "spectra" / f"spectrum_{i:04d}.csv", channels)
    emit_summary(result.summary, out_dir / "summary.json")
    if plots:
        save_scan_figures(result, out_dir)
