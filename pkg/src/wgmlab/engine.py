"""Coupled-mode engine for the driven cw/ccw amplitude pair.

A set of point scatterers turns the two degenerate traveling waves into a
coupled 2x2 system.  Scatterer j with effective polarizability alpha_j at
azimuth phi_j contributes the complex rate

    v_j = i*shift_j/2 - broadening_j/2            [rad/s]

where (shift_j, broadening_j) come from :func:`wgmlab.physics.coupling_rates`
evaluated with the mode intensity at the scatterer.  The full generator is
the rank-one phasor sum

    M = -gamma0*I + sum_j v_j * [[1,           e^{+i*2m*phi_j}],
                                 [e^{-i*2m*phi_j}, 1          ]],

which reduces exactly to the single-scatterer equations of motion for one
scatterer and produces phase-dependent interference for several.  The
momentum transfer between counterpropagating modes is 2m, hence the
doubled azimuthal phase.

Amplitudes are tracked in the frame rotating at the drive frequency; the
detuning enters the steady state through (i*Delta*I - M) E = kappa.  The
local field sampled at azimuth phi is E_c*e^{-i*m*phi} + E_cc*e^{+i*m*phi}
(the sign pairing that puts the unbroadened eigenmode's node exactly on a
lone scatterer).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EngineError
from .geometry import Position, WgmMode, mode_amplitude
from .physics import OpticalContext, ScattererSpec, coupling_rates, polarizability


@dataclass(frozen=True)
class ScattererPlacement:
    """One scatterer: a position plus either a material spec or a direct
    effective polarizability (exactly one of the two)."""

    position: Position
    spec: ScattererSpec | None = None
    alpha_eff_m3: float | None = None

    def __post_init__(self):
        if (self.spec is None) == (self.alpha_eff_m3 is None):
            raise DomainError("provide exactly one of spec or alpha_eff_m3")
        if self.alpha_eff_m3 is not None and self.alpha_eff_m3 < 0:
            raise DomainError("effective polarizability must be >= 0")

    def effective_polarizability(self) -> float:
        if self.alpha_eff_m3 is not None:
            return self.alpha_eff_m3
        return polarizability(self.spec)


def placement_rates(
    placement: ScattererPlacement, mode: WgmMode, ctx: OpticalContext
) -> tuple[float, float]:
    """(shift, broadening) in rad/s for one placement, using the mode
    intensity f^2 at its position."""
    f = mode_amplitude(mode, placement.position)
    return coupling_rates(
        placement.effective_polarizability(), f * f, ctx, mode.mode_volume_m3
    )


@dataclass(frozen=True)
class Generator:
    """Immutable 2x2 generator of the driven cw/ccw pair (entries in rad/s),
    with the bare loss, drive amplitude and mode context cached for the
    detector models."""

    m11: complex
    m12: complex
    m21: complex
    m22: complex
    gamma0: float
    kappa0: float
    mode: WgmMode
    ctx: OpticalContext

    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)


@dataclass(frozen=True)
class Eigenmode:
    """One standing-wave eigenmode of the generator.

    frequency_shift_rad_s is where the mode peaks on the detuning axis
    (red shifts negative); half_linewidth_rad_s its amplitude decay rate.
    (amplitude_cw, amplitude_ccw) is the unit eigenvector; the azimuthal
    intensity pattern is cos^2(m*phi + standing_phase_rad).
    """

    frequency_shift_rad_s: float
    half_linewidth_rad_s: float
    amplitude_cw: complex
    amplitude_ccw: complex
    standing_phase_rad: float


@dataclass(frozen=True)
class Spectrum:
    """Detuning grid plus per-detector signals.

    pd1: prism transmission (dimensionless, baseline 1, phenomenological);
    pd2: global scattered power, proportional to |E_c|^2 + |E_cc|^2;
    pd3: near-field tip pickup, proportional to the tip's scattering rate
    times the local standing-wave intensity.
    """

    detuning_rad_s: np.ndarray
    pd1: np.ndarray
    pd2: np.ndarray
    pd3: np.ndarray

    @property
    def detuning_mhz(self) -> np.ndarray:
        return self.detuning_rad_s / (2.0 * math.pi * 1e6)

    def channel(self, name: str) -> np.ndarray:
        try:
            return getattr(self, name)
        except AttributeError:
            raise DomainError(f"unknown detector channel {name!r}") from None


def build_generator(
    mode: WgmMode,
    scatterers: list[ScattererPlacement],
    ctx: OpticalContext,
    kappa0: float | None = None,
) -> Generator:
    """Assemble the generator from any number of scatterers (zero included)."""
    gamma0 = mode.half_linewidth
    m11 = complex(-gamma0, 0.0)
    m12 = 0.0 + 0.0j
    m21 = 0.0 + 0.0j
    for sc in scatterers:
        shift, broadening = placement_rates(sc, mode, ctx)
        v = 0.5j * shift - 0.5 * broadening
        phase = cmath.exp(2j * mode.azimuthal_order * sc.position.phi_rad)
        m11 += v
        m12 += v * phase
        m21 += v / phase
    return Generator(
        m11=m11,
        m12=m12,
        m21=m21,
        m22=m11,
        gamma0=gamma0,
        kappa0=gamma0 if kappa0 is None else kappa0,
        mode=mode,
        ctx=ctx,
    )


def _eigen_pairs(gen: Generator) -> list[tuple[complex, complex, complex]]:
    """Eigenvalues and (unnormalized) eigenvectors of the 2x2 generator."""
    b, c = gen.m12, gen.m21
    s = cmath.sqrt(b * c)
    if s == 0 and max(abs(b), abs(c)) > 0:
        raise EngineError("defective generator: off-diagonal product vanishes")
    pairs = []
    for sign in (+1, -1):
        lam = gen.m11 + sign * s
        if abs(b) >= abs(c) and b != 0:
            vec = (1.0 + 0.0j, sign * s / b)
        elif c != 0:
            vec = (sign * s / c, 1.0 + 0.0j)
        else:
            vec = (1.0 + 0.0j, 0.0j) if sign > 0 else (0.0j, 1.0 + 0.0j)
        pairs.append((lam, vec[0], vec[1]))
    return pairs


def eigenmodes(gen: Generator) -> tuple[Eigenmode, Eigenmode]:
    """Both eigenmodes, ordered by frequency shift (red-most first)."""
    modes = []
    for lam, a, b in _eigen_pairs(gen):
        norm = math.hypot(abs(a), abs(b))
        a, b = a / norm, b / norm
        # canonical global phase: cw component real and non-negative
        if a != 0:
            rot = abs(a) / a
            a, b = a * rot, b * rot
        psi = 0.5 * cmath.phase(b / a) if (a != 0 and b != 0) else 0.0
        modes.append(
            Eigenmode(
                frequency_shift_rad_s=lam.imag,
                half_linewidth_rad_s=-lam.real,
                amplitude_cw=a,
                amplitude_ccw=b,
                standing_phase_rad=psi,
            )
        )
    modes.sort(key=lambda em: em.frequency_shift_rad_s)
    return modes[0], modes[1]


def doublet_splitting(gen: Generator) -> float:
    """Observed splitting |Im 2*sqrt(M12*M21)| in rad/s."""
    return abs((2.0 * cmath.sqrt(gen.m12 * gen.m21)).imag)


def _check_stable(gen: Generator) -> None:
    for lam, _, _ in _eigen_pairs(gen):
        if lam.real >= 0:
            raise EngineError(
                "generator is not strictly stable; steady state undefined"
            )


def steady_state(gen: Generator, detuning_rad_s, kappa0: float | None = None):
    """Driven steady-state amplitudes (E_c, E_cc) at the given detuning(s).

    Solves (i*Delta*I - M) E = (kappa0, 0): the drive injects into the cw
    mode only.  Accepts a scalar or an array of detunings.
    """
    _check_stable(gen)
    kappa = gen.kappa0 if kappa0 is None else kappa0
    if not np.isfinite(kappa):
        raise DomainError("drive must be finite")
    delta = np.asarray(detuning_rad_s, dtype=float)
    diag = 1j * delta - gen.m11
    det = diag * diag - gen.m12 * gen.m21
    e_c = kappa * diag / det
    e_cc = kappa * gen.m21 / det
    if delta.ndim == 0:
        return complex(e_c), complex(e_cc)
    return e_c, e_cc


def local_intensity(gen: Generator, e_c, e_cc, phi_rad: float):
    """Standing-wave intensity |E_c e^{-i m phi} + E_cc e^{+i m phi}|^2."""
    phase = cmath.exp(1j * gen.mode.azimuthal_order * phi_rad)
    return np.abs(e_c / phase + e_cc * phase) ** 2


def spectrum(
    gen: Generator,
    detuning_rad_s,
    tip: ScattererPlacement | None = None,
    pd1_dip_fraction: float = 0.5,
) -> Spectrum:
    """Synthesize the three detector channels over a detuning grid.

    The generator must already contain every scatterer, the tip included;
    the tip argument only localizes the pd3 pickup.  pd1 is a
    phenomenological transmission dip of configurable depth, normalized so
    the bare cavity on resonance dips by pd1_dip_fraction.
    """
    grid = np.asarray(detuning_rad_s, dtype=float)
    if grid.size == 0:
        raise DomainError("detuning grid is empty")
    steps = np.diff(grid)
    if grid.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise DomainError("detuning grid must be monotone")
    if not 0.0 < pd1_dip_fraction <= 1.0:
        raise DomainError("pd1 dip fraction must lie in (0, 1]")

    e_c, e_cc = steady_state(gen, grid)
    pd2 = np.abs(e_c) ** 2 + np.abs(e_cc) ** 2
    pd1 = 1.0 - pd1_dip_fraction * (gen.gamma0 / gen.kappa0) ** 2 * np.abs(e_c) ** 2
    if tip is not None:
        _, tip_broadening = placement_rates(tip, gen.mode, gen.ctx)
        pd3 = tip_broadening * local_intensity(gen, e_c, e_cc, tip.position.phi_rad)
    else:
        pd3 = np.zeros_like(grid)
    return Spectrum(detuning_rad_s=grid, pd1=pd1, pd2=pd2, pd3=pd3)


def time_evolution(
    gen: Generator,
    kappa0: float,
    detuning_rad_s: float,
    t_final: float,
    step: float,
    initial_state: tuple[complex, complex] = (0.0j, 0.0j),
):
    """Fixed-step RK4 trajectory of dE/dt = M E + (kappa0, 0) e^{+i*Delta*t}.

    Verification oracle only: the drive phase convention makes the
    long-time envelope E(t)*e^{-i*Delta*t} converge to
    :func:`steady_state` at the same detuning.  Returns (times, states)
    with states of shape (n_steps + 1, 2).
    """
    if step <= 0:
        raise DomainError("step must be > 0")
    scale = max(
        abs(lam) for lam, _, _ in _eigen_pairs(gen)
    )
    scale = max(scale, abs(detuning_rad_s))
    if scale > 0 and step >= 0.1 / scale:
        raise EngineError(
            f"step {step:g} too coarse for rate scale {scale:g}; "
            "need step < 0.1/max|eigenvalue|"
        )
    m11, m12, m21, m22 = gen.m11, gen.m12, gen.m21, gen.m22
    n = max(1, int(round(t_final / step)))
    h = step
    half = 0.5 * h
    rot_half = cmath.exp(0.5j * detuning_rad_s * h)
    rot_full = rot_half * rot_half
    drive = complex(kappa0)

    ec, ecc = complex(initial_state[0]), complex(initial_state[1])
    times = np.empty(n + 1)
    states = np.empty((n + 1, 2), dtype=complex)
    times[0] = 0.0
    states[0] = (ec, ecc)
    z = drive  # kappa0 * e^{i*Delta*t} at the current step start
    for i in range(n):
        zm = z * rot_half
        ze = z * rot_full
        k1c = m11 * ec + m12 * ecc + z
        k1cc = m21 * ec + m22 * ecc
        ec1, ecc1 = ec + half * k1c, ecc + half * k1cc
        k2c = m11 * ec1 + m12 * ecc1 + zm
        k2cc = m21 * ec1 + m22 * ecc1
        ec2, ecc2 = ec + half * k2c, ecc + half * k2cc
        k3c = m11 * ec2 + m12 * ecc2 + zm
        k3cc = m21 * ec2 + m22 * ecc2
        ec3, ecc3 = ec + h * k3c, ecc + h * k3cc
        k4c = m11 * ec3 + m12 * ecc3 + ze
        k4cc = m21 * ec3 + m22 * ecc3
        ec += h / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
        ecc += h / 6.0 * (k1cc + 2.0 * k2cc + 2.0 * k3cc + k4cc)
        z = ze
        times[i + 1] = (i + 1) * h
        states[i + 1] = (ec, ecc)
    return times, states
