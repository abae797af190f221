"""Inverse problems: doublet line fitting, scan-series regressions, and
scatterer-size inference from the splitting-to-broadening ratio.

All fits run on I/O units (MHz, arbitrary signal units).  The doublet
model is two peak-normalized Lorentzians on a linear baseline,

    y(x) = A1*L(x; c1, w1) + A2*L(x; c2, w2) + b0 + b1*x,
    L(x; c, w) = (w/2)^2 / ((x - c)^2 + (w/2)^2),

fitted by a trust-region least-squares solve on the analytic Jacobian.
Interference cross terms between non-orthogonal eigenmodes are ignored; a
known limitation that only matters when the splitting is buried inside the
linewidths.  The linear baseline absorbs slow detection drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks, peak_widths

from .errors import DomainError, FitError
from .physics import radius_from_polarizability

_XTOL = 1e-8
_MAX_ITER = 200


@dataclass(frozen=True)
class DoubletFit:
    """Fitted doublet parameters; centers are canonically ordered."""

    center1_mhz: float
    center2_mhz: float
    fwhm1_mhz: float
    fwhm2_mhz: float
    amplitude1: float
    amplitude2: float
    baseline_offset: float
    baseline_slope: float
    residual_rms: float
    stderr: dict[str, float] = field(default_factory=dict)
    degenerate: bool = False

    def __post_init__(self):
        if self.fwhm1_mhz < 0 or self.fwhm2_mhz < 0:
            raise DomainError("fitted widths must be >= 0")
        if self.center1_mhz > self.center2_mhz:
            raise DomainError("centers must be canonically ordered")

    @property
    def splitting_mhz(self) -> float:
        return self.center2_mhz - self.center1_mhz

    @property
    def added_broadening_mhz(self) -> float:
        """Added half-linewidth of the broader peak, in rate units (MHz),
        taking the narrower peak as the unperturbed reference:
        (fwhm_broad - fwhm_narrow)/2."""
        return abs(self.fwhm2_mhz - self.fwhm1_mhz) / 2.0


@dataclass(frozen=True)
class ScanSeries:
    """Per-position doublet summaries along a scan trajectory."""

    abscissa: np.ndarray
    abscissa_unit: str
    splitting_mhz: np.ndarray
    peak1_height: np.ndarray
    peak2_height: np.ndarray
    fwhm1_mhz: np.ndarray
    fwhm2_mhz: np.ndarray

    def __post_init__(self):
        steps = np.diff(self.abscissa)
        if self.abscissa.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise DomainError("scan abscissa must be strictly monotone")


@dataclass(frozen=True)
class SinusoidFit:
    mean: float
    amplitude: float
    period: float
    phase_rad: float
    residual_rms: float
    stderr: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class QuadraticFit:
    c0: float
    c1: float
    c2: float
    stderr: tuple[float, float, float]
    residual_rms: float


@dataclass(frozen=True)
class GaussianProfileFit:
    base: float
    amplitude: float
    center: float
    width: float
    residual_rms: float


def _lorentzian(x, center, fwhm, amplitude):
    half_sq = (0.5 * fwhm) ** 2
    return amplitude * half_sq / ((x - center) ** 2 + half_sq)


def _doublet_model(params, x):
    c1, c2, w1, w2, a1, a2, b0, b1 = params
    return (
        _lorentzian(x, c1, w1, a1)
        + _lorentzian(x, c2, w2, a2)
        + b0
        + b1 * x
    )


def _doublet_jacobian(params, x):
    c1, c2, w1, w2, a1, a2, _, _ = params
    jac = np.empty((x.size, 8))
    for i, (c, w, a) in enumerate(((c1, w1, a1), (c2, w2, a2))):
        u = (0.5 * w) ** 2
        dx = x - c
        den = dx * dx + u
        jac[:, 0 + i] = a * u * 2.0 * dx / den**2
        jac[:, 2 + i] = a * (0.5 * w) * dx * dx / den**2
        jac[:, 4 + i] = u / den
    jac[:, 6] = 1.0
    jac[:, 7] = x
    return jac


def _single_model(params, x):
    c, w, a, b0, b1 = params
    return _lorentzian(x, c, w, a) + b0 + b1 * x


def _single_jacobian(params, x):
    c, w, a, _, _ = params
    u = (0.5 * w) ** 2
    dx = x - c
    den = dx * dx + u
    jac = np.empty((x.size, 5))
    jac[:, 0] = a * u * 2.0 * dx / den**2
    jac[:, 1] = a * (0.5 * w) * dx * dx / den**2
    jac[:, 2] = u / den
    jac[:, 3] = 1.0
    jac[:, 4] = x
    return jac


def _run_least_squares(model, jacobian, p0, x, y, bounds):
    result = least_squares(
        lambda p: model(p, x) - y,
        p0,
        jac=lambda p: jacobian(p, x),
        bounds=bounds,
        method="trf",
        x_scale="jac",
        xtol=_XTOL,
        ftol=None,
        gtol=None,
        max_nfev=_MAX_ITER,
    )
    rms = math.sqrt(np.mean(result.fun**2))
    if result.status == 0:
        raise FitError(
            "least-squares did not converge within the iteration budget",
            last_params=result.x,
            residual_rms=rms,
        )
    return result, rms


def _standard_errors(result, n_points, names):
    dof = max(n_points - result.x.size, 1)
    jtj = result.jac.T @ result.jac
    cov = np.linalg.pinv(jtj) * (2.0 * result.cost / dof)
    return {name: math.sqrt(max(cov[i, i], 0.0)) for i, name in enumerate(names)}


def _detect_peaks(yy):
    """Indices of the doublet maxima, largest first.

    A clean two-Lorentzian signal has at most two local maxima, so more
    hits means noise: in that case re-detect on a lightly smoothed copy
    with a prominence floor and a minimum separation of one linewidth.
    """
    top = float(yy.max())
    peaks, _ = find_peaks(yy, prominence=0.02 * top)
    signal = yy
    if peaks.size > 2:
        window = max(3, yy.size // 100)
        window += (window + 1) % 2
        signal = np.convolve(yy, np.ones(window) / window, mode="same")
        tallest = int(np.argmax(signal))
        width = peak_widths(signal, [tallest], rel_height=0.5)[0][0]
        peaks, _ = find_peaks(
            signal,
            prominence=0.05 * float(signal.max()),
            distance=max(3.0, width),
        )
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(signal))])
    order = np.argsort(signal[peaks])[::-1]
    return np.sort(peaks[order[:2]]), signal


def _seed_from_peaks(x, y):
    """Seed the doublet from the two most prominent local maxima."""
    b0 = float(np.percentile(y, 10))
    yy = y - b0
    peaks, signal = _detect_peaks(yy)
    dx = abs(x[1] - x[0])
    widths = peak_widths(signal, peaks, rel_height=0.5)[0] * dx
    widths = np.maximum(widths, 2.0 * dx)
    if peaks.size == 2:
        return [
            x[peaks[0]], x[peaks[1]],
            widths[0], widths[1],
            signal[peaks[0]], signal[peaks[1]],
            b0, 0.0,
        ], False
    # single visible maximum: try pulling two overlapping lines apart
    c = x[peaks[0]]
    w = widths[0]
    a = signal[peaks[0]]
    return [c - w / 4.0, c + w / 4.0, w, w, 0.6 * a, 0.6 * a, b0, 0.0], True


def _fit_degenerate(x, y, seed):
    span = x[-1] - x[0]
    lb = [x[0] - abs(span), 0.0, 0.0, -np.inf, -np.inf]
    ub = [x[-1] + abs(span), 10.0 * abs(span), np.inf, np.inf, np.inf]
    result, rms = _run_least_squares(
        _single_model, _single_jacobian, seed, x, y, (lb, ub)
    )
    c, w, a, b0, b1 = result.x
    err = _standard_errors(result, x.size, ["center", "fwhm", "amplitude", "b0", "b1"])
    stderr = {
        "center1_mhz": err["center"], "center2_mhz": err["center"],
        "fwhm1_mhz": err["fwhm"], "fwhm2_mhz": err["fwhm"],
        "amplitude1": err["amplitude"], "amplitude2": err["amplitude"],
        "baseline_offset": err["b0"], "baseline_slope": err["b1"],
    }
    return DoubletFit(
        center1_mhz=c, center2_mhz=c,
        fwhm1_mhz=w, fwhm2_mhz=w,
        amplitude1=a / 2.0, amplitude2=a / 2.0,
        baseline_offset=b0, baseline_slope=b1,
        residual_rms=rms, stderr=stderr, degenerate=True,
    )


_DOUBLET_NAMES = [
    "center1_mhz", "center2_mhz", "fwhm1_mhz", "fwhm2_mhz",
    "amplitude1", "amplitude2", "baseline_offset", "baseline_slope",
]


def fit_doublet(freq_mhz, signal, seed=None) -> DoubletFit:
    """Least-squares doublet inversion of one spectrum channel.

    Parameters
    ----------
    freq_mhz : detuning grid, MHz, >= 16 points spanning both peaks.
    signal : detector samples on the grid.
    seed : optional 8-vector [c1, c2, w1, w2, A1, A2, b0, b1]; when
        omitted the two most prominent local maxima seed the fit.

    Single-peak data comes back with the degenerate flag set and
    center1 == center2.  Non-convergence raises :class:`FitError` with
    the last iterate attached.
    """
    x = np.asarray(freq_mhz, dtype=float)
    y = np.asarray(signal, dtype=float)
    if x.size < 16:
        raise DomainError("need at least 16 grid points to fit a doublet")
    if x.size != y.size:
        raise DomainError("grid and signal sizes differ")
    if x[0] > x[-1]:
        x, y = x[::-1], y[::-1]

    single_hint = False
    if seed is None:
        seed, single_hint = _seed_from_peaks(x, y)
    seed = list(map(float, seed))
    if len(seed) != 8:
        raise DomainError("seed must have 8 entries")
    if seed[0] > seed[1]:
        seed = [seed[1], seed[0], seed[3], seed[2], seed[5], seed[4], seed[6], seed[7]]

    span = x[-1] - x[0]
    dx = span / (x.size - 1)
    lb = [x[0] - span, x[0] - span, 0.0, 0.0, 0.0, 0.0, -np.inf, -np.inf]
    ub = [x[-1] + span, x[-1] + span, 10 * span, 10 * span, np.inf, np.inf, np.inf, np.inf]

    degenerate_error = None
    try:
        result, rms = _run_least_squares(
            _doublet_model, _doublet_jacobian, seed, x, y, (lb, ub)
        )
    except FitError as exc:
        if not single_hint:
            raise
        result, rms, degenerate_error = None, None, exc

    if result is not None and abs(result.x[1] - result.x[0]) >= 0.5 * dx:
        p = result.x
        stderr = _standard_errors(result, x.size, _DOUBLET_NAMES)
        if p[0] > p[1]:
            p = [p[1], p[0], p[3], p[2], p[5], p[4], p[6], p[7]]
            for a, b in (("center1_mhz", "center2_mhz"),
                         ("fwhm1_mhz", "fwhm2_mhz"),
                         ("amplitude1", "amplitude2")):
                stderr[a], stderr[b] = stderr[b], stderr[a]
        return DoubletFit(
            center1_mhz=p[0], center2_mhz=p[1],
            fwhm1_mhz=p[2], fwhm2_mhz=p[3],
            amplitude1=p[4], amplitude2=p[5],
            baseline_offset=p[6], baseline_slope=p[7],
            residual_rms=rms, stderr=stderr,
        )

    # centers collapsed (or the split fit stalled on single-peak data):
    # refit as one line and flag the doublet as degenerate
    if result is not None:
        p = result.x
        single_seed = [
            0.5 * (p[0] + p[1]), 0.5 * (p[2] + p[3]), p[4] + p[5], p[6], p[7]
        ]
    else:
        c = 0.5 * (seed[0] + seed[1])
        single_seed = [c, seed[2], seed[4] + seed[5], seed[6], seed[7]]
    try:
        return _fit_degenerate(x, y, single_seed)
    except FitError:
        if degenerate_error is not None:
            raise degenerate_error
        raise


def polarizability_from_ratio(
    splitting_mhz: float, broadening_mhz: float, wavelength_m: float
) -> float:
    """Polarizability alpha = 3*lambda^3*B/(4*pi^2*S) from the observed
    splitting S and added broadening B (same units each, MHz here)."""
    if splitting_mhz <= 0 or broadening_mhz <= 0:
        raise DomainError("splitting and broadening must be > 0")
    return 3.0 * wavelength_m**3 * broadening_mhz / (4.0 * math.pi**2 * splitting_mhz)


def infer_scatterer_radius(
    splitting_mhz: float,
    broadening_mhz: float,
    wavelength_m: float,
    tip_index: float = 1.45,
) -> float:
    """Scatterer radius (m) from the splitting-to-broadening ratio.

    Only the ratio B/S enters, so any common rescaling of the two rates
    cancels.  The tip index defaults to fused silica.
    """
    alpha = polarizability_from_ratio(splitting_mhz, broadening_mhz, wavelength_m)
    return radius_from_polarizability(alpha, tip_index)


def _sinusoid_model(params, x):
    mean, amp, period, phase = params
    return mean + amp * np.sin(2.0 * math.pi * x / period + phase)


def _sinusoid_jacobian(params, x):
    _, amp, period, phase = params
    arg = 2.0 * math.pi * x / period + phase
    jac = np.empty((x.size, 4))
    jac[:, 0] = 1.0
    jac[:, 1] = np.sin(arg)
    jac[:, 2] = -amp * np.cos(arg) * 2.0 * math.pi * x / period**2
    jac[:, 3] = amp * np.cos(arg)
    return jac


def fit_sinusoid(abscissa, values) -> SinusoidFit:
    """Least-squares sinusoid mean + A*sin(2*pi*x/period + phase).

    Seeded from the dominant FFT bin with the in-phase/quadrature
    amplitudes solved linearly, then refined with the period free.  The
    caller should supply at least two full periods of data.
    """
    x = np.asarray(abscissa, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 8:
        raise DomainError("need at least 8 points to fit a sinusoid")
    dx = np.diff(x)
    if not np.all(dx > 0):
        raise DomainError("abscissa must be strictly increasing")

    # FFT on a uniform resample for the period seed
    n = x.size
    step = (x[-1] - x[0]) / (n - 1)
    spectrum = np.fft.rfft(y - y.mean())
    freqs = np.fft.rfftfreq(n, step)
    k = 1 + int(np.argmax(np.abs(spectrum[1:])))
    period0 = 1.0 / freqs[k] if freqs[k] > 0 else (x[-1] - x[0])
    arg = 2.0 * math.pi * x / period0
    design = np.column_stack([np.ones_like(x), np.sin(arg), np.cos(arg)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    mean0, a_sin, a_cos = coef
    amp0 = math.hypot(a_sin, a_cos)
    phase0 = math.atan2(a_cos, a_sin)

    span = x[-1] - x[0]
    lb = [-np.inf, 0.0, 2.0 * step, -2.0 * math.pi]
    ub = [np.inf, np.inf, 10.0 * span, 2.0 * math.pi]
    p0 = [mean0, amp0, period0, phase0]
    result, rms = _run_least_squares(
        _sinusoid_model, _sinusoid_jacobian, p0, x, y, (lb, ub)
    )
    mean, amp, period, phase = result.x
    stderr = _standard_errors(result, x.size, ["mean", "amplitude", "period", "phase"])
    return SinusoidFit(
        mean=mean,
        amplitude=amp,
        period=period,
        phase_rad=phase % (2.0 * math.pi),
        residual_rms=rms,
        stderr=stderr,
    )


def fit_quadratic(splitting, broadening) -> QuadraticFit:
    """Ordinary least squares of broadening = c0 + c1*S + c2*S^2.

    The design is scaled internally so widely different magnitudes of S
    (rad/s vs MHz) stay well conditioned; coefficients come back in the
    caller's units.
    """
    s = np.asarray(splitting, dtype=float)
    b = np.asarray(broadening, dtype=float)
    if s.size < 4:
        raise DomainError("need at least 4 points for a quadratic fit")
    if s.size != b.size:
        raise DomainError("splitting and broadening sizes differ")
    scale = float(np.max(np.abs(s)))
    if scale == 0.0:
        scale = 1.0
    sn = s / scale
    design = np.column_stack([np.ones_like(sn), sn, sn**2])
    coef, _, rank, _ = np.linalg.lstsq(design, b, rcond=None)
    if rank < 3:
        raise DomainError("rank-deficient quadratic design (degenerate abscissa)")
    resid = design @ coef - b
    rms = math.sqrt(np.mean(resid**2))
    dof = max(s.size - 3, 1)
    cov = np.linalg.inv(design.T @ design) * np.sum(resid**2) / dof
    err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    powers = np.array([1.0, scale, scale**2])
    c = coef / powers
    e = err / powers
    return QuadraticFit(
        c0=c[0], c1=c[1], c2=c[2], stderr=(e[0], e[1], e[2]), residual_rms=rms
    )


def _gaussian_profile_model(params, x):
    base, amp, center, width = params
    return base + amp * np.exp(-((x - center) ** 2) / width**2)


def _gaussian_profile_jacobian(params, x):
    _, amp, center, width = params
    u = (x - center) / width
    g = np.exp(-(u**2))
    jac = np.empty((x.size, 4))
    jac[:, 0] = 1.0
    jac[:, 1] = g
    jac[:, 2] = amp * g * 2.0 * u / width
    jac[:, 3] = amp * g * 2.0 * u**2 / width
    return jac


def fit_gaussian_profile(abscissa, values) -> GaussianProfileFit:
    """Fit base + A*exp(-(x-x0)^2/w^2), the polar intensity envelope of
    the fundamental mode.  A may come out negative (destructive side)."""
    x = np.asarray(abscissa, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 5:
        raise DomainError("need at least 5 points for a profile fit")
    base0 = float(y[np.argmax(np.abs(x))])
    bump = y - base0
    peak = int(np.argmax(np.abs(bump)))
    amp0 = float(bump[peak])
    width0 = max(float(np.ptp(x)) / 4.0, 1e-12)
    span = float(np.ptp(x))
    p0 = [base0, amp0, float(x[peak]), width0]
    lb = [-np.inf, -np.inf, float(x.min()) - span, 1e-3 * width0]
    ub = [np.inf, np.inf, float(x.max()) + span, 10.0 * span]
    result, rms = _run_least_squares(
        _gaussian_profile_model, _gaussian_profile_jacobian, p0, x, y, (lb, ub)
    )
    base, amp, center, width = result.x
    return GaussianProfileFit(
        base=base, amplitude=amp, center=center, width=width, residual_rms=rms
    )
