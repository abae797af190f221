"""Reproducible drivers for the four tip-scan experiments.

Each driver sweeps the probe tip along one coordinate, synthesizes the
detector spectra at every stop, inverts them with the doublet fitter, and
packages per-position rows plus a scan-level regression summary.

Tip model: the tip couples with the mode intensity at its angular
position on the sphere surface, while the sphere-tip gap acts exclusively
through the effective polarizability alpha_eff(gap).  This keeps the
radial scan a pure polarizability sweep at fixed mode overlap, which is
what makes the broadening-vs-splitting relation exactly quadratic.

Fit failures are recorded per row and the scan continues; failed rows
carry NaNs and an error note.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .analysis import DoubletFit, ScanSeries, fit_doublet
from .config import ExperimentConfig
from .engine import ScattererPlacement, Spectrum, build_generator, spectrum
from .errors import ConfigError, FitError
from .geometry import Position, effective_polarizability, equatorial_period, mode_amplitude
from .physics import classify_regime
from .units import SPEED_OF_LIGHT, mhz_to_rad_s, rad_s_to_mhz


@dataclass(frozen=True)
class ScanRow:
    """One scan stop: fitted doublet summary plus its regime label."""

    index: int
    position: float
    splitting_mhz: float
    peak1_height: float
    peak2_height: float
    fwhm1_mhz: float
    fwhm2_mhz: float
    regime: str
    degenerate: bool
    fit_ok: bool
    fit_error: str = ""


@dataclass
class ScanResult:
    """Rows, per-point spectra and the scan-level regression summary."""

    kind: str
    position_name: str
    rows: list[ScanRow]
    spectra: list[Spectrum]
    summary: dict = field(default_factory=dict)

    def series(self) -> ScanSeries:
        ok = [r for r in self.rows if r.fit_ok]
        return ScanSeries(
            abscissa=np.array([r.position for r in ok]),
            abscissa_unit=self.position_name,
            splitting_mhz=np.array([r.splitting_mhz for r in ok]),
            peak1_height=np.array([r.peak1_height for r in ok]),
            peak2_height=np.array([r.peak2_height for r in ok]),
            fwhm1_mhz=np.array([r.fwhm1_mhz for r in ok]),
            fwhm2_mhz=np.array([r.fwhm2_mhz for r in ok]),
        )


def _tip_placement(cfg: ExperimentConfig, mode, phi_rad=None, theta_rad=None,
                   gap_nm=None) -> ScattererPlacement:
    tip = cfg.tip
    phi = tip.phi_rad if phi_rad is None else float(phi_rad)
    theta = tip.theta_rad if theta_rad is None else float(theta_rad)
    gap = tip.gap_nm if gap_nm is None else float(gap_nm)
    alpha_eff = effective_polarizability(
        tip.bulk_polarizability_m3(), gap * 1e-9, tip.overlap_length_m(mode)
    )
    return ScattererPlacement(
        position=Position(r_m=mode.sphere_radius_m, theta_rad=theta, phi_rad=phi),
        alpha_eff_m3=alpha_eff,
    )


def _noise_streams(cfg: ExperimentConfig, count: int):
    if cfg.noise is None or cfg.noise.relative_sigma == 0.0:
        return [None] * count
    seq = np.random.SeedSequence(cfg.noise.seed)
    return [np.random.default_rng(child) for child in seq.spawn(count)]


def _apply_noise(spec: Spectrum, rng, sigma_rel: float) -> Spectrum:
    if rng is None:
        return spec
    def jitter(channel):
        scale = sigma_rel * float(np.max(np.abs(channel))) if channel.size else 0.0
        return channel + rng.normal(0.0, scale, channel.shape) if scale > 0 else channel
    return Spectrum(
        detuning_rad_s=spec.detuning_rad_s,
        pd1=jitter(spec.pd1),
        pd2=jitter(spec.pd2),
        pd3=jitter(spec.pd3),
    )


def _fit_signal(spec: Spectrum, channel: str) -> np.ndarray:
    # pd1 is a transmission dip; invert it so the fitter sees peaks
    signal = spec.channel(channel)
    return 1.0 - signal if channel == "pd1" else signal


def _row_from_fit(index: int, position: float, fit: DoubletFit) -> ScanRow:
    broadening = mhz_to_rad_s(fit.added_broadening_mhz)
    half_linewidth = mhz_to_rad_s(min(fit.fwhm1_mhz, fit.fwhm2_mhz)) / 2.0
    regime = classify_regime(
        mhz_to_rad_s(fit.splitting_mhz), broadening, half_linewidth
    )
    return ScanRow(
        index=index,
        position=position,
        splitting_mhz=fit.splitting_mhz,
        peak1_height=fit.amplitude1,
        peak2_height=fit.amplitude2,
        fwhm1_mhz=fit.fwhm1_mhz,
        fwhm2_mhz=fit.fwhm2_mhz,
        regime=regime.value,
        degenerate=fit.degenerate,
        fit_ok=True,
    )


def _failed_row(index: int, position: float, exc: Exception) -> ScanRow:
    nan = float("nan")
    return ScanRow(
        index=index, position=position, splitting_mhz=nan,
        peak1_height=nan, peak2_height=nan, fwhm1_mhz=nan, fwhm2_mhz=nan,
        regime="", degenerate=False, fit_ok=False, fit_error=str(exc),
    )


def _sweep(cfg: ExperimentConfig, kind: str, position_name: str,
           positions, make_tip) -> ScanResult:
    mode = cfg.resonator.mode()
    ctx = cfg.resonator.context()
    intrinsic = cfg.intrinsic_placements(mode)
    grid = cfg.laser.detuning_rad_s()
    channel = cfg.output.channels[0]
    streams = _noise_streams(cfg, len(positions))
    sigma = cfg.noise.relative_sigma if cfg.noise is not None else 0.0

    rows: list[ScanRow] = []
    spectra: list[Spectrum] = []
    for i, pos in enumerate(positions):
        tip = make_tip(mode, pos)
        gen = build_generator(mode, intrinsic + [tip], ctx)
        spec = spectrum(gen, grid, tip, pd1_dip_fraction=cfg.laser.pd1_dip_fraction)
        spec = _apply_noise(spec, streams[i], sigma)
        spectra.append(spec)
        try:
            fit = fit_doublet(spec.detuning_mhz, _fit_signal(spec, channel))
            rows.append(_row_from_fit(i, float(pos), fit))
        except FitError as exc:
            rows.append(_failed_row(i, float(pos), exc))
    return ScanResult(kind=kind, position_name=position_name, rows=rows,
                      spectra=spectra)


def run_equatorial_scan(cfg: ExperimentConfig) -> ScanResult:
    """Sweep the tip along the equator and trace the standing-wave pattern.

    The summary carries a sinusoid fit of the splitting, its expected
    angular period pi/m, and the Pearson correlation of the two peak
    heights (strongly negative when the tip alternately damps one
    standing wave then the other).
    """
    _require_scan(cfg, "phi")
    positions = cfg.tip.scan.grid()
    result = _sweep(
        cfg, "equatorial", "phi_rad", positions,
        lambda mode, p: _tip_placement(cfg, mode, phi_rad=p),
    )
    series = result.series()
    mode = cfg.resonator.mode()
    angular_period, arc_period = equatorial_period(mode)
    summary: dict = {
        "expected_period_rad": angular_period,
        "expected_arc_period_m": arc_period,
    }
    if series.abscissa.size >= 8:
        try:
            sin_fit = analysis.fit_sinusoid(series.abscissa, series.splitting_mhz)
            summary["sinusoid"] = {
                "mean_mhz": sin_fit.mean,
                "amplitude_mhz": sin_fit.amplitude,
                "period_rad": sin_fit.period,
                "phase_rad": sin_fit.phase_rad,
                "residual_rms": sin_fit.residual_rms,
            }
        except FitError as exc:
            summary["sinusoid_error"] = str(exc)
        if series.peak1_height.size >= 3 and np.std(series.peak1_height) > 0:
            summary["peak_height_pearson"] = float(
                np.corrcoef(series.peak1_height, series.peak2_height)[0, 1]
            )
    result.summary = summary
    return result


def run_polar_scan(cfg: ExperimentConfig) -> ScanResult:
    """Sweep the tip across the equator in theta; the splitting follows the
    polar mode profile with a sign set by the azimuthal interference."""
    _require_scan(cfg, "theta")
    positions = cfg.tip.scan.grid()
    result = _sweep(
        cfg, "polar", "theta_rad", positions,
        lambda mode, p: _tip_placement(cfg, mode, theta_rad=p),
    )
    series = result.series()
    summary: dict = {}
    if series.abscissa.size >= 5:
        try:
            prof = analysis.fit_gaussian_profile(series.abscissa, series.splitting_mhz)
            summary["profile"] = {
                "base_mhz": prof.base,
                "amplitude_mhz": prof.amplitude,
                "center_rad": prof.center,
                "width_rad": prof.width,
                "residual_rms": prof.residual_rms,
            }
        except FitError as exc:
            summary["profile_error"] = str(exc)
    result.summary = summary
    return result


def run_radial_scan(cfg: ExperimentConfig) -> ScanResult:
    """Sweep the sphere-tip gap; emits (splitting, broadening) pairs and a
    quadratic regression against the coupled-mode prediction.

    The quadratic is fitted with both rates in rad/s, where the predicted
    curvature is V*omega^2/(6*pi*c^3*f^2) with f^2 the (fixed) mode
    intensity at the tip's angular position.
    """
    _require_scan(cfg, "radial")
    positions = cfg.tip.scan.grid()
    result = _sweep(
        cfg, "radial", "gap_nm", positions,
        lambda mode, p: _tip_placement(cfg, mode, gap_nm=p),
    )
    series = result.series()
    mode = cfg.resonator.mode()
    ctx = cfg.resonator.context()
    tip_surface = _tip_placement(cfg, mode, gap_nm=0.0)
    f_sq = mode_amplitude(mode, tip_surface.position) ** 2
    expected_c2 = (
        mode.mode_volume_m3 * ctx.angular_frequency**2
        / (6.0 * math.pi * SPEED_OF_LIGHT**3 * f_sq)
    )
    summary: dict = {"expected_c2_s": expected_c2, "mode_intensity_at_tip": f_sq}
    ok = [r for r in result.rows if r.fit_ok and not r.degenerate]
    if len(ok) >= 4:
        s_rad = np.array([mhz_to_rad_s(r.splitting_mhz) for r in ok])
        b_rad = np.array(
            [mhz_to_rad_s(abs(r.fwhm2_mhz - r.fwhm1_mhz) / 2.0) for r in ok]
        )
        quad = analysis.fit_quadratic(s_rad, b_rad)
        summary["quadratic"] = {
            "c0_rad_s": quad.c0,
            "c1": quad.c1,
            "c2_s": quad.c2,
            "stderr": list(quad.stderr),
            "residual_rms": quad.residual_rms,
        }
    result.summary = summary
    return result


def run_weak_to_strong(cfg: ExperimentConfig) -> ScanResult:
    """Bring the tip from outside the mode toward the equator with no
    intrinsic backscatter: a singlet grows into a resolved doublet.

    The final frame's fitted splitting and added broadening feed the
    scatterer-size inversion; the summary reports the inferred
    polarizability and radius next to the configured tip values.
    """
    _require_scan(cfg, "theta")
    mode = cfg.resonator.mode()
    if cfg.intrinsic_placements(mode):
        raise ConfigError(
            "weak-to-strong runs need a clean singlet: remove intrinsic scatterers"
        )
    positions = cfg.tip.scan.grid()
    result = _sweep(
        cfg, "weak_to_strong", "theta_rad", positions,
        lambda mode_, p: _tip_placement(cfg, mode_, theta_rad=p),
    )
    final = result.rows[-1]
    summary: dict = {
        "baseline_fwhm_mhz": rad_s_to_mhz(2.0 * mode.half_linewidth),
        "configured_alpha_eff_um3": _tip_placement(cfg, mode).alpha_eff_m3 * 1e18,
    }
    if final.fit_ok and not final.degenerate and final.splitting_mhz > 0:
        splitting = final.splitting_mhz
        broadening = abs(final.fwhm2_mhz - final.fwhm1_mhz) / 2.0
        tip_index = cfg.tip.refractive_index or 1.45
        wavelength = cfg.resonator.wavelength_nm * 1e-9
        summary["final_splitting_mhz"] = splitting
        summary["final_broadening_mhz"] = broadening
        if broadening > 0:
            alpha = analysis.polarizability_from_ratio(splitting, broadening, wavelength)
            summary["inferred_polarizability_um3"] = alpha * 1e18
            summary["inferred_radius_nm"] = (
                analysis.infer_scatterer_radius(
                    splitting, broadening, wavelength, tip_index
                ) * 1e9
            )
            summary["tip_index_assumed"] = tip_index
    else:
        summary["inference_error"] = "final frame did not resolve a doublet"
    result.summary = summary
    return result


def run_spectrum(cfg: ExperimentConfig) -> Spectrum:
    """One spectrum at the configured (fixed) tip position, or without a
    tip when the config has none."""
    mode = cfg.resonator.mode()
    ctx = cfg.resonator.context()
    scatterers = cfg.intrinsic_placements(mode)
    tip = None
    if cfg.tip is not None:
        tip = _tip_placement(cfg, mode)
        scatterers = scatterers + [tip]
    gen = build_generator(mode, scatterers, ctx)
    spec = spectrum(gen, cfg.laser.detuning_rad_s(), tip,
                    pd1_dip_fraction=cfg.laser.pd1_dip_fraction)
    stream = _noise_streams(cfg, 1)[0]
    sigma = cfg.noise.relative_sigma if cfg.noise is not None else 0.0
    return _apply_noise(spec, stream, sigma)


def _require_scan(cfg: ExperimentConfig, axis: str) -> None:
    if cfg.tip is None or cfg.tip.scan is None:
        raise ConfigError("this command needs a tip block with a scan")
    if cfg.tip.scan.axis != axis:
        raise ConfigError(
            f"scan axis is {cfg.tip.scan.axis!r}; this command needs {axis!r}"
        )
