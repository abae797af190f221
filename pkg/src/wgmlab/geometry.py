"""Spatial description of the fundamental whispering-gallery mode.

The normalized mode amplitude is modeled as a separable product of an
exponential evanescent tail outside the sphere surface and a Gaussian
polar envelope,

    f(r, theta) = exp(-(r - R)/d) * exp(-theta^2 / (2*sigma^2)),   r >= R,

which is the standard fundamental-WGM approximation.  Azimuthally the
traveling mode is uniform; the standing-wave structure of the coupled
eigenmodes is carried separately by :func:`standing_wave_weight`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import DomainError
from .units import SPEED_OF_LIGHT


def default_evanescent_decay(wavelength_m: float, sphere_index: float) -> float:
    """Amplitude decay length d = lambda / (4*pi*sqrt(n^2 - 1)) outside the surface."""
    if sphere_index <= 1:
        raise DomainError("sphere index must be > 1 for an evanescent exterior")
    return wavelength_m / (4.0 * math.pi * math.sqrt(sphere_index**2 - 1.0))


def consistent_azimuthal_order(
    sphere_radius_m: float, wavelength_m: float, sphere_index: float
) -> int:
    """Nearest integer to the circumference in intra-sphere wavelengths."""
    return round(2.0 * math.pi * sphere_radius_m * sphere_index / wavelength_m)


@dataclass(frozen=True)
class WgmMode:
    """Geometry and loss of one fundamental WGM resonance.

    polar_width_rad is the Gaussian width sigma of the polar amplitude
    envelope; evanescent_decay_m is the exterior amplitude decay length.
    Both default to the standard fundamental-mode values when omitted.
    """

    sphere_radius_m: float
    wavelength_m: float
    azimuthal_order: int
    sphere_index: float
    intrinsic_q: float
    mode_volume_m3: float
    polar_width_rad: float = 0.0
    evanescent_decay_m: float = 0.0

    def __post_init__(self):
        for name in (
            "sphere_radius_m",
            "wavelength_m",
            "azimuthal_order",
            "sphere_index",
            "intrinsic_q",
            "mode_volume_m3",
        ):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")
        if self.polar_width_rad == 0.0:
            object.__setattr__(
                self, "polar_width_rad", 1.0 / math.sqrt(self.azimuthal_order)
            )
        if self.evanescent_decay_m == 0.0:
            object.__setattr__(
                self,
                "evanescent_decay_m",
                default_evanescent_decay(self.wavelength_m, self.sphere_index),
            )
        if self.polar_width_rad < 0 or self.evanescent_decay_m < 0:
            raise DomainError("polar width and evanescent decay must be > 0")
        expected = 2.0 * math.pi * self.sphere_radius_m * self.sphere_index / self.wavelength_m
        if abs(self.azimuthal_order - expected) > 0.2 * expected:
            warnings.warn(
                f"azimuthal order {self.azimuthal_order} deviates more than 20% "
                f"from 2*pi*R*n/lambda = {expected:.1f}",
                stacklevel=2,
            )

    @property
    def angular_frequency(self) -> float:
        return 2.0 * math.pi * SPEED_OF_LIGHT / self.wavelength_m

    @property
    def half_linewidth(self) -> float:
        """Amplitude decay rate gamma0 = omega/(2*Q0); the intensity FWHM is twice this."""
        return self.angular_frequency / (2.0 * self.intrinsic_q)


@dataclass(frozen=True)
class Position:
    """Point near the resonator: radial from sphere center, polar offset
    from the equator, azimuth wrapped to [0, 2*pi)."""

    r_m: float
    theta_rad: float = 0.0
    phi_rad: float = 0.0

    def __post_init__(self):
        if self.r_m < 0:
            raise DomainError("radial coordinate must be >= 0")
        object.__setattr__(self, "phi_rad", self.phi_rad % (2.0 * math.pi))


def mode_amplitude(mode: WgmMode, pos: Position) -> float:
    """Normalized traveling-mode amplitude f in [0, 1] at an exterior point.

    f(R, 0) = 1; interior evaluation (r < R) is unsupported.
    """
    if pos.r_m < mode.sphere_radius_m:
        raise DomainError("mode amplitude is only defined outside the sphere surface")
    radial = math.exp(-(pos.r_m - mode.sphere_radius_m) / mode.evanescent_decay_m)
    polar = math.exp(-(pos.theta_rad**2) / (2.0 * mode.polar_width_rad**2))
    return radial * polar


def standing_wave_weight(mode: WgmMode, phi_rad: float, phase_rad: float) -> float:
    """Normalized intensity cos^2(m*phi + psi) of a standing-wave eigenmode.

    The orthogonal eigenmode carries sin^2(m*phi + psi); the two sum to 1.
    """
    return math.cos(mode.azimuthal_order * phi_rad + phase_rad) ** 2


def equatorial_period(mode: WgmMode) -> tuple[float, float]:
    """(angular, arc) period of the standing-wave intensity along the equator.

    The angular period is pi/m; the arc period pi*R/m is close to
    lambda/(2*n) when m satisfies the consistency relation.
    """
    angular = math.pi / mode.azimuthal_order
    return angular, angular * mode.sphere_radius_m


def effective_polarizability(
    bulk_polarizability_m3: float, gap_m: float, overlap_length_m: float
) -> float:
    """Single-exponential overlap model for a finite probe entering the mode.

    alpha_eff(gap) = alpha_bulk * exp(-gap/d_ov): equals the bulk value at
    contact, decays monotonically with the probe-surface gap.  The probe's
    finite taper is collapsed into this scalar; no volumetric overlap
    integral is attempted.
    """
    if gap_m < 0:
        raise DomainError("gap must be >= 0")
    if overlap_length_m <= 0:
        raise DomainError("overlap length must be > 0")
    if bulk_polarizability_m3 < 0:
        raise DomainError("polarizability must be >= 0")
    return bulk_polarizability_m3 * math.exp(-gap_m / overlap_length_m)
