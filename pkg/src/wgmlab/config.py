"""Experiment configuration: a single JSON document with explicit units in
the key names.

Unknown keys are hard errors (no silent defaults for misspellings);
missing optional blocks fall back to documented defaults.  Random
ensembles are fully determined by their 64-bit seed, with independent
substreams derived per consumer so that execution order can never change
the numbers.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import ScattererPlacement
from .errors import ConfigError
from .geometry import Position, WgmMode, consistent_azimuthal_order
from .physics import OpticalContext, ScattererSpec, polarizability


def _require(block: dict, key: str, context: str):
    if key not in block:
        raise ConfigError(f"missing required key {key!r} in {context}")
    return block[key]


def _check_keys(block: dict, allowed: set[str], context: str):
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in {context}; allowed: {sorted(allowed)}"
        )


def _positive(value, key: str):
    if not isinstance(value, (int, float)) or value <= 0:
        raise ConfigError(f"{key} must be a positive number, got {value!r}")
    return float(value)


def _number(value, key: str):
    if not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class ResonatorConfig:
    sphere_radius_um: float
    wavelength_nm: float
    refractive_index: float
    intrinsic_q: float
    mode_volume_um3: float
    azimuthal_order: int | None = None
    polar_width_rad: float | None = None
    evanescent_decay_nm: float | None = None

    def mode(self) -> WgmMode:
        radius = self.sphere_radius_um * 1e-6
        wavelength = self.wavelength_nm * 1e-9
        order = self.azimuthal_order
        if order is None:
            order = consistent_azimuthal_order(radius, wavelength, self.refractive_index)
        return WgmMode(
            sphere_radius_m=radius,
            wavelength_m=wavelength,
            azimuthal_order=order,
            sphere_index=self.refractive_index,
            intrinsic_q=self.intrinsic_q,
            mode_volume_m3=self.mode_volume_um3 * 1e-18,
            polar_width_rad=self.polar_width_rad or 0.0,
            evanescent_decay_m=(self.evanescent_decay_nm or 0.0) * 1e-9,
        )

    def context(self) -> OpticalContext:
        return OpticalContext(wavelength_m=self.wavelength_nm * 1e-9)


@dataclass(frozen=True)
class PlacementConfig:
    phi_rad: float
    theta_rad: float = 0.0
    radius_nm: float | None = None
    refractive_index: float | None = None
    polarizability_um3: float | None = None

    def placement(self, mode: WgmMode) -> ScattererPlacement:
        pos = Position(r_m=mode.sphere_radius_m, theta_rad=self.theta_rad,
                       phi_rad=self.phi_rad)
        if self.polarizability_um3 is not None:
            return ScattererPlacement(position=pos,
                                      alpha_eff_m3=self.polarizability_um3 * 1e-18)
        spec = ScattererSpec(radius_m=self.radius_nm * 1e-9,
                             refractive_index=self.refractive_index)
        return ScattererPlacement(position=pos, spec=spec)


@dataclass(frozen=True)
class EnsembleConfig:
    count: int
    alpha_min_um3: float
    alpha_max_um3: float
    seed: int

    def placements(self, mode: WgmMode) -> list[ScattererPlacement]:
        """Seeded random surface ensemble: azimuths uniform, polarizability
        log-uniform over the configured range, all at the equator surface."""
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        phis = rng.uniform(0.0, 2.0 * math.pi, self.count)
        alphas = np.exp(
            rng.uniform(
                math.log(self.alpha_min_um3), math.log(self.alpha_max_um3), self.count
            )
        )
        return [
            ScattererPlacement(
                position=Position(r_m=mode.sphere_radius_m, phi_rad=float(p)),
                alpha_eff_m3=float(a) * 1e-18,
            )
            for p, a in zip(phis, alphas)
        ]


@dataclass(frozen=True)
class ScanConfig:
    axis: str  # phi | theta | radial
    start: float  # rad for phi/theta, nm of gap for radial
    stop: float
    steps: int

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class TipConfig:
    radius_nm: float | None = None
    refractive_index: float | None = None
    polarizability_um3: float | None = None
    phi_rad: float = 0.0
    theta_rad: float = 0.0
    gap_nm: float = 0.0
    overlap_length_nm: float | None = None
    scan: ScanConfig | None = None

    def bulk_polarizability_m3(self) -> float:
        if self.polarizability_um3 is not None:
            return self.polarizability_um3 * 1e-18
        return polarizability(
            ScattererSpec(radius_m=self.radius_nm * 1e-9,
                          refractive_index=self.refractive_index)
        )

    def overlap_length_m(self, mode: WgmMode) -> float:
        if self.overlap_length_nm is not None:
            return self.overlap_length_nm * 1e-9
        return mode.evanescent_decay_m


@dataclass(frozen=True)
class LaserConfig:
    span_mhz: float
    points: int
    center_mhz: float = 0.0
    pd1_dip_fraction: float = 0.5

    def detuning_rad_s(self) -> np.ndarray:
        half = 0.5 * self.span_mhz
        grid_mhz = np.linspace(self.center_mhz - half, self.center_mhz + half,
                               self.points)
        return grid_mhz * 2.0 * math.pi * 1e6


@dataclass(frozen=True)
class NoiseConfig:
    relative_sigma: float
    seed: int


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    channels: tuple[str, ...] = ("pd2",)
    plots: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    resonator: ResonatorConfig
    laser: LaserConfig
    placements: tuple[PlacementConfig, ...] = ()
    ensemble: EnsembleConfig | None = None
    tip: TipConfig | None = None
    noise: NoiseConfig | None = None
    output: OutputConfig = field(default_factory=OutputConfig)

    def intrinsic_placements(self, mode: WgmMode) -> list[ScattererPlacement]:
        out = [p.placement(mode) for p in self.placements]
        if self.ensemble is not None:
            out.extend(self.ensemble.placements(mode))
        return out

    def config_hash(self) -> str:
        """Deterministic digest of the normalized config document."""
        doc = json.dumps(to_document(self), sort_keys=True)
        return hashlib.sha256(doc.encode("utf-8")).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Override every stochastic seed with substreams of one master."""
        children = np.random.SeedSequence(seed).spawn(2)
        ensemble = self.ensemble
        if ensemble is not None:
            ensemble = EnsembleConfig(
                count=ensemble.count,
                alpha_min_um3=ensemble.alpha_min_um3,
                alpha_max_um3=ensemble.alpha_max_um3,
                seed=int(children[0].generate_state(1)[0]),
            )
        noise = self.noise
        if noise is not None:
            noise = NoiseConfig(
                relative_sigma=noise.relative_sigma,
                seed=int(children[1].generate_state(1)[0]),
            )
        return ExperimentConfig(
            resonator=self.resonator, laser=self.laser, placements=self.placements,
            ensemble=ensemble, tip=self.tip, noise=noise, output=self.output,
        )


_RESONATOR_KEYS = {
    "sphere_radius_um", "wavelength_nm", "refractive_index", "intrinsic_q",
    "mode_volume_um3", "azimuthal_order", "polar_width_rad", "evanescent_decay_nm",
}
_PLACEMENT_KEYS = {
    "phi_rad", "theta_rad", "radius_nm", "refractive_index", "polarizability_um3",
}
_ENSEMBLE_KEYS = {"count", "alpha_min_um3", "alpha_max_um3", "seed"}
_SCAN_KEYS = {
    "axis", "start_rad", "stop_rad", "start_nm", "stop_nm", "steps",
}
_TIP_KEYS = {
    "radius_nm", "refractive_index", "polarizability_um3",
    "phi_rad", "theta_rad", "gap_nm", "overlap_length_nm", "scan",
}
_LASER_KEYS = {"span_mhz", "points", "center_mhz", "pd1_dip_fraction"}
_NOISE_KEYS = {"relative_sigma", "seed"}
_OUTPUT_KEYS = {"directory", "channels", "plots"}
_TOP_KEYS = {"resonator", "intrinsic_scatterers", "tip", "laser", "noise", "output"}
_CHANNELS = {"pd1", "pd2", "pd3"}


def _parse_resonator(block: dict) -> ResonatorConfig:
    _check_keys(block, _RESONATOR_KEYS, "resonator")
    order = block.get("azimuthal_order")
    if order is not None and (not isinstance(order, int) or order <= 0):
        raise ConfigError("azimuthal_order must be a positive integer")
    return ResonatorConfig(
        sphere_radius_um=_positive(_require(block, "sphere_radius_um", "resonator"),
                                   "sphere_radius_um"),
        wavelength_nm=_positive(_require(block, "wavelength_nm", "resonator"),
                                "wavelength_nm"),
        refractive_index=_positive(_require(block, "refractive_index", "resonator"),
                                   "refractive_index"),
        intrinsic_q=_positive(_require(block, "intrinsic_q", "resonator"),
                              "intrinsic_q"),
        mode_volume_um3=_positive(_require(block, "mode_volume_um3", "resonator"),
                                  "mode_volume_um3"),
        azimuthal_order=order,
        polar_width_rad=(
            _positive(block["polar_width_rad"], "polar_width_rad")
            if "polar_width_rad" in block else None
        ),
        evanescent_decay_nm=(
            _positive(block["evanescent_decay_nm"], "evanescent_decay_nm")
            if "evanescent_decay_nm" in block else None
        ),
    )


def _parse_size(block: dict, context: str):
    direct = "polarizability_um3" in block
    geometric = "radius_nm" in block or "refractive_index" in block
    if direct == geometric:
        raise ConfigError(
            f"{context} needs either polarizability_um3 or radius_nm+refractive_index"
        )
    if direct:
        return None, None, _number(block["polarizability_um3"], "polarizability_um3")
    if "radius_nm" not in block or "refractive_index" not in block:
        raise ConfigError(f"{context} needs both radius_nm and refractive_index")
    return (
        _positive(block["radius_nm"], "radius_nm"),
        _positive(block["refractive_index"], "refractive_index"),
        None,
    )


def _parse_placements(block) -> tuple[PlacementConfig, ...]:
    if not isinstance(block, list):
        raise ConfigError("intrinsic_scatterers.placements must be a list")
    out = []
    for i, item in enumerate(block):
        context = f"intrinsic_scatterers.placements[{i}]"
        _check_keys(item, _PLACEMENT_KEYS, context)
        radius, index, alpha = _parse_size(item, context)
        out.append(PlacementConfig(
            phi_rad=_number(_require(item, "phi_rad", context), "phi_rad"),
            theta_rad=_number(item.get("theta_rad", 0.0), "theta_rad"),
            radius_nm=radius, refractive_index=index, polarizability_um3=alpha,
        ))
    return tuple(out)


def _parse_ensemble(block: dict) -> EnsembleConfig:
    _check_keys(block, _ENSEMBLE_KEYS, "intrinsic_scatterers.ensemble")
    count = _require(block, "count", "ensemble")
    if not isinstance(count, int) or count <= 0:
        raise ConfigError("ensemble count must be a positive integer")
    seed = _require(block, "seed", "ensemble")
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("ensemble seed must be a non-negative integer")
    amin = _positive(_require(block, "alpha_min_um3", "ensemble"), "alpha_min_um3")
    amax = _positive(_require(block, "alpha_max_um3", "ensemble"), "alpha_max_um3")
    if amax < amin:
        raise ConfigError("alpha_max_um3 must be >= alpha_min_um3")
    return EnsembleConfig(count=count, alpha_min_um3=amin, alpha_max_um3=amax,
                          seed=seed)


def _parse_scan(block: dict) -> ScanConfig:
    _check_keys(block, _SCAN_KEYS, "tip.scan")
    axis = _require(block, "axis", "tip.scan")
    if axis not in ("phi", "theta", "radial"):
        raise ConfigError("scan axis must be one of phi, theta, radial")
    steps = _require(block, "steps", "tip.scan")
    if not isinstance(steps, int) or steps < 2:
        raise ConfigError("scan steps must be an integer >= 2")
    if axis == "radial":
        start = _number(_require(block, "start_nm", "tip.scan"), "start_nm")
        stop = _number(_require(block, "stop_nm", "tip.scan"), "stop_nm")
        if "start_rad" in block or "stop_rad" in block:
            raise ConfigError("radial scans use start_nm/stop_nm, not *_rad")
        if start < 0 or stop < 0:
            raise ConfigError("radial scan gaps must be >= 0")
    else:
        start = _number(_require(block, "start_rad", "tip.scan"), "start_rad")
        stop = _number(_require(block, "stop_rad", "tip.scan"), "stop_rad")
        if "start_nm" in block or "stop_nm" in block:
            raise ConfigError(f"{axis} scans use start_rad/stop_rad, not *_nm")
    if start == stop:
        raise ConfigError("scan span must be nonzero")
    return ScanConfig(axis=axis, start=start, stop=stop, steps=steps)


def _parse_tip(block: dict) -> TipConfig:
    _check_keys(block, _TIP_KEYS, "tip")
    radius, index, alpha = _parse_size(block, "tip")
    gap = _number(block.get("gap_nm", 0.0), "gap_nm")
    if gap < 0:
        raise ConfigError("gap_nm must be >= 0")
    return TipConfig(
        radius_nm=radius, refractive_index=index, polarizability_um3=alpha,
        phi_rad=_number(block.get("phi_rad", 0.0), "phi_rad"),
        theta_rad=_number(block.get("theta_rad", 0.0), "theta_rad"),
        gap_nm=gap,
        overlap_length_nm=(
            _positive(block["overlap_length_nm"], "overlap_length_nm")
            if "overlap_length_nm" in block else None
        ),
        scan=_parse_scan(block["scan"]) if "scan" in block else None,
    )


def _parse_laser(block: dict) -> LaserConfig:
    _check_keys(block, _LASER_KEYS, "laser")
    points = _require(block, "points", "laser")
    if not isinstance(points, int) or points < 2:
        raise ConfigError("laser points must be an integer >= 2")
    dip = _number(block.get("pd1_dip_fraction", 0.5), "pd1_dip_fraction")
    if not 0.0 < dip <= 1.0:
        raise ConfigError("pd1_dip_fraction must lie in (0, 1]")
    return LaserConfig(
        span_mhz=_positive(_require(block, "span_mhz", "laser"), "span_mhz"),
        points=points,
        center_mhz=_number(block.get("center_mhz", 0.0), "center_mhz"),
        pd1_dip_fraction=dip,
    )


def _parse_noise(block: dict) -> NoiseConfig:
    _check_keys(block, _NOISE_KEYS, "noise")
    sigma = _number(_require(block, "relative_sigma", "noise"), "relative_sigma")
    if sigma < 0:
        raise ConfigError("relative_sigma must be >= 0")
    seed = _require(block, "seed", "noise")
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("noise seed must be a non-negative integer")
    return NoiseConfig(relative_sigma=sigma, seed=seed)


def _parse_output(block: dict) -> OutputConfig:
    _check_keys(block, _OUTPUT_KEYS, "output")
    channels = block.get("channels", ["pd2"])
    if (not isinstance(channels, list) or not channels
            or any(ch not in _CHANNELS for ch in channels)):
        raise ConfigError(f"output channels must be a non-empty subset of {_CHANNELS}")
    plots = block.get("plots", True)
    if not isinstance(plots, bool):
        raise ConfigError("output.plots must be a boolean")
    directory = block.get("directory", "out")
    if not isinstance(directory, str):
        raise ConfigError("output.directory must be a string")
    return OutputConfig(directory=directory, channels=tuple(channels), plots=plots)


def parse_config(document: dict) -> ExperimentConfig:
    """Validate and materialize a config document (already JSON-decoded)."""
    if not isinstance(document, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(document, _TOP_KEYS, "config root")
    resonator = _parse_resonator(_require(document, "resonator", "config root"))
    laser = _parse_laser(_require(document, "laser", "config root"))

    placements: tuple[PlacementConfig, ...] = ()
    ensemble = None
    if "intrinsic_scatterers" in document:
        block = document["intrinsic_scatterers"]
        _check_keys(block, {"placements", "ensemble"}, "intrinsic_scatterers")
        if "placements" in block:
            placements = _parse_placements(block["placements"])
        if "ensemble" in block:
            ensemble = _parse_ensemble(block["ensemble"])

    tip = _parse_tip(document["tip"]) if "tip" in document else None
    noise = _parse_noise(document["noise"]) if "noise" in document else None
    output = _parse_output(document.get("output", {}))
    return ExperimentConfig(
        resonator=resonator, laser=laser, placements=placements,
        ensemble=ensemble, tip=tip, noise=noise, output=output,
    )


def load_config(path) -> ExperimentConfig:
    """Load and validate a JSON experiment configuration."""
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(document)


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def to_document(cfg: ExperimentConfig) -> dict:
    """Normalized JSON-serializable document; load(save(cfg)) == cfg."""
    doc: dict = {
        "resonator": _drop_none({
            "sphere_radius_um": cfg.resonator.sphere_radius_um,
            "wavelength_nm": cfg.resonator.wavelength_nm,
            "refractive_index": cfg.resonator.refractive_index,
            "intrinsic_q": cfg.resonator.intrinsic_q,
            "mode_volume_um3": cfg.resonator.mode_volume_um3,
            "azimuthal_order": cfg.resonator.azimuthal_order,
            "polar_width_rad": cfg.resonator.polar_width_rad,
            "evanescent_decay_nm": cfg.resonator.evanescent_decay_nm,
        }),
        "laser": {
            "span_mhz": cfg.laser.span_mhz,
            "points": cfg.laser.points,
            "center_mhz": cfg.laser.center_mhz,
            "pd1_dip_fraction": cfg.laser.pd1_dip_fraction,
        },
        "output": {
            "directory": cfg.output.directory,
            "channels": list(cfg.output.channels),
            "plots": cfg.output.plots,
        },
    }
    intrinsic: dict = {}
    if cfg.placements:
        intrinsic["placements"] = [
            _drop_none({
                "phi_rad": p.phi_rad,
                "theta_rad": p.theta_rad,
                "radius_nm": p.radius_nm,
                "refractive_index": p.refractive_index,
                "polarizability_um3": p.polarizability_um3,
            })
            for p in cfg.placements
        ]
    if cfg.ensemble is not None:
        intrinsic["ensemble"] = {
            "count": cfg.ensemble.count,
            "alpha_min_um3": cfg.ensemble.alpha_min_um3,
            "alpha_max_um3": cfg.ensemble.alpha_max_um3,
            "seed": cfg.ensemble.seed,
        }
    if intrinsic:
        doc["intrinsic_scatterers"] = intrinsic
    if cfg.tip is not None:
        tip = _drop_none({
            "radius_nm": cfg.tip.radius_nm,
            "refractive_index": cfg.tip.refractive_index,
            "polarizability_um3": cfg.tip.polarizability_um3,
            "phi_rad": cfg.tip.phi_rad,
            "theta_rad": cfg.tip.theta_rad,
            "gap_nm": cfg.tip.gap_nm,
            "overlap_length_nm": cfg.tip.overlap_length_nm,
        })
        if cfg.tip.scan is not None:
            scan: dict = {"axis": cfg.tip.scan.axis, "steps": cfg.tip.scan.steps}
            if cfg.tip.scan.axis == "radial":
                scan["start_nm"] = cfg.tip.scan.start
                scan["stop_nm"] = cfg.tip.scan.stop
            else:
                scan["start_rad"] = cfg.tip.scan.start
                scan["stop_rad"] = cfg.tip.scan.stop
            tip["scan"] = scan
        doc["tip"] = tip
    if cfg.noise is not None:
        doc["noise"] = {
            "relative_sigma": cfg.noise.relative_sigma,
            "seed": cfg.noise.seed,
        }
    return doc


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(
        json.dumps(to_document(cfg), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
