"""Discretized frequency grids and one/two-photon spectral amplitudes.

All frequencies are angular frequencies in rad/ps and all times are in ps,
so that exp(i*omega*t) is dimensionless.  Amplitudes are stored unconjugated;
measurement formulas apply any conjugation they need.  Every container here
is frozen and holds read-only arrays, so instances can be shared freely
between threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CoverageError",
    "FrequencyGrid",
    "SourceParams",
    "SpectralAmplitude1D",
    "TwoPhotonAmplitude",
    "EncodingShift",
    "make_grid",
    "default_grids",
    "gaussian_jsa",
    "encode_shift",
    "square_norm",
    "marginal_mean",
    "pump_envelope_on",
    "phase_matching_on",
    "flat_phase_matching",
]

# Default half-width of auto-built grids, in units of the largest bandwidth.
# 7 sigma leaves less than 1e-10 of a Gaussian's probability outside the
# window even when sigma_plus == sigma_minus (the widest marginal case).
GRID_SIGMA_MULTIPLIER = 7.0
DEFAULT_GRID_POINTS = 512

# Fraction of the analytic norm that may fall outside a grid before
# construction fails.
COVERAGE_TOL = 1e-6


class CoverageError(ValueError):
    """A grid window truncates a non-negligible part of an amplitude."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform 1-D angular-frequency axis (rad/ps)."""

    center: float
    half_width: float
    n_points: int

    def __post_init__(self) -> None:
        if self.n_points < 8:
            raise ValueError(f"n_points must be >= 8, got {self.n_points}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        pts = self.center + self.spacing * (
            np.arange(self.n_points) - (self.n_points - 1) / 2.0
        )
        return _readonly(pts)

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return _readonly(w)


def make_grid(center: float, half_width: float, n_points: int) -> FrequencyGrid:
    """Build a uniform frequency grid; spacing = 2*half_width/(n_points-1)."""
    return FrequencyGrid(float(center), float(half_width), int(n_points))


@dataclass(frozen=True)
class SourceParams:
    """Gaussian photon-pair source.

    sigma_plus and sigma_minus are the pump and photon bandwidths of the
    downconversion source (rad/ps), omega0 the pump center frequency, and
    eps2_lambda0 the dimensionless per-pass conversion probability of the
    nonlinear medium (2.1e-8 for a millimeter-scale waveguide).
    """

    sigma_plus: float
    sigma_minus: float
    omega0: float = 0.0
    eps2_lambda0: float = 2.1e-8

    def __post_init__(self) -> None:
        if not self.sigma_plus > 0:
            raise ValueError(f"sigma_plus must be positive, got {self.sigma_plus}")
        if not self.sigma_minus > 0:
            raise ValueError(f"sigma_minus must be positive, got {self.sigma_minus}")
        if not 0 < self.eps2_lambda0 <= 1:
            raise ValueError(
                f"eps2_lambda0 must be in (0, 1], got {self.eps2_lambda0}"
            )
        if self.sigma_plus >= self.sigma_minus:
            warnings.warn(
                "sigma_plus >= sigma_minus: the pair source is outside the "
                "strong time-frequency-entanglement regime",
                stacklevel=3,
            )

    @property
    def eps2(self) -> float:
        """Bare interaction strength epsilon^2 = sqrt(2) * eps2_lambda0.

        eps2_lambda0 is the per-pass peak conversion probability, which
        equals epsilon^2/sqrt(2); analytic spectral densities need the
        unfolded epsilon^2.
        """
        return math.sqrt(2.0) * self.eps2_lambda0


@dataclass(frozen=True)
class SpectralAmplitude1D:
    """Complex amplitude density on a frequency grid, units (rad/ps)^-1/2."""

    grid: FrequencyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(
                f"values shape {vals.shape} does not match grid "
                f"({self.grid.n_points} points)"
            )
        object.__setattr__(self, "values", _readonly(vals))

    def square_norm(self) -> float:
        w = self.grid.trapezoid_weights()
        return float(np.real(np.sum(w * np.abs(self.values) ** 2)))

    def normalized(self) -> "SpectralAmplitude1D":
        norm = self.square_norm()
        if norm <= 0:
            raise ValueError("cannot normalize a zero amplitude")
        return SpectralAmplitude1D(self.grid, self.values / math.sqrt(norm))


@dataclass(frozen=True)
class TwoPhotonAmplitude:
    """Joint spectral amplitude phi(omega_s, omega_i), units (rad/ps)^-1."""

    grid_s: FrequencyGrid
    grid_i: FrequencyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid_s.n_points, self.grid_i.n_points):
            raise ValueError(
                f"values shape {vals.shape} does not match grids "
                f"({self.grid_s.n_points} x {self.grid_i.n_points})"
            )
        object.__setattr__(self, "values", _readonly(vals))

    def square_norm(self) -> float:
        return square_norm(self)


@dataclass(frozen=True)
class EncodingShift:
    """Frequency shift d_omega (rad/ps) and time shift d_t (ps) of the signal photon."""

    d_omega: float = 0.0
    d_t: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.d_omega) and math.isfinite(self.d_t)):
            raise ValueError("shift components must be finite")


def square_norm(state: TwoPhotonAmplitude) -> float:
    """Trapezoid-rule double integral of |phi|^2."""
    w_s = state.grid_s.trapezoid_weights()
    w_i = state.grid_i.trapezoid_weights()
    return float(np.real(w_s @ (np.abs(state.values) ** 2) @ w_i))


def marginal_mean(state: TwoPhotonAmplitude, axis: str = "s") -> float:
    """First moment of |phi|^2 along the signal ('s') or idler ('i') axis."""
    dens = np.abs(state.values) ** 2
    w_s = state.grid_s.trapezoid_weights()
    w_i = state.grid_i.trapezoid_weights()
    total = w_s @ dens @ w_i
    if axis == "s":
        num = (w_s * state.grid_s.points) @ dens @ w_i
    elif axis == "i":
        num = w_s @ dens @ (w_i * state.grid_i.points)
    else:
        raise ValueError(f"axis must be 's' or 'i', got {axis!r}")
    return float(num / total)


# --- Gaussian source -------------------------------------------------------

def _sum_profile(params: SourceParams, x: np.ndarray) -> np.ndarray:
    """Amplitude profile over the scaled frequency sum (omega_s+omega_i)/sqrt(2).

    Unit square norm in its own argument; |profile((w-omega0)/sqrt2)|^2
    integrates over w to a normalized Gaussian of std sigma_plus.
    """
    pref = 2.0 ** 0.25 / ((2.0 * math.pi) ** 0.25 * math.sqrt(params.sigma_plus))
    return pref * np.exp(
        -((math.sqrt(2.0) * x - params.omega0) ** 2) / (4.0 * params.sigma_plus ** 2)
    )


def _difference_profile(params: SourceParams, x: np.ndarray) -> np.ndarray:
    """Amplitude profile over the scaled frequency difference, std sigma_minus."""
    pref = 1.0 / ((2.0 * math.pi) ** 0.25 * math.sqrt(params.sigma_minus))
    return pref * np.exp(-(x ** 2) / (4.0 * params.sigma_minus ** 2))


def pump_envelope_on(grid: FrequencyGrid, params: SourceParams) -> SpectralAmplitude1D:
    """Spectral amplitude of the coherent pump mode that sources the pair state.

    A normalized Gaussian amplitude centered at omega0 with intensity
    std sigma_plus, sampled on `grid`.
    """
    w = grid.points
    pref = 1.0 / ((2.0 * math.pi) ** 0.25 * math.sqrt(params.sigma_plus))
    vals = pref * np.exp(-((w - params.omega0) ** 2) / (4.0 * params.sigma_plus ** 2))
    return SpectralAmplitude1D(grid, vals)


def phase_matching_on(grid: FrequencyGrid, params: SourceParams) -> SpectralAmplitude1D:
    """Phase-matching amplitude over the scaled signal-idler difference frequency.

    This is the factor evaluated at (omega_s - omega_i)/sqrt(2) in the joint
    amplitude; unit square norm, intensity std sigma_minus.
    """
    return SpectralAmplitude1D(grid, _difference_profile(params, grid.points))


def flat_phase_matching(grid: FrequencyGrid) -> SpectralAmplitude1D:
    """Constant (value 1) phase-matching profile for broadband-limit studies.

    Not square-normalizable; used only for shape comparisons.
    """
    return SpectralAmplitude1D(grid, np.ones(grid.n_points))


def profile_interpolator(profile: SpectralAmplitude1D, lo: float, hi: float):
    """Cubic interpolant of a sampled profile, zero-filled where it has decayed.

    Raises CoverageError if values are requested beyond a grid edge where the
    profile is still significant.
    """
    from scipy.interpolate import CubicSpline

    g = profile.grid
    vmax = float(np.abs(profile.values).max())
    if lo < g.lo or hi > g.hi:
        edge = max(abs(profile.values[0]), abs(profile.values[-1]))
        if vmax > 0 and edge > 1e-6 * vmax:
            raise CoverageError(
                "profile grid does not cover the requested range "
                f"[{lo:.3g}, {hi:.3g}] and has not decayed at its edges"
            )
    spline = CubicSpline(g.points, profile.values, extrapolate=False)

    def evaluate(x: np.ndarray) -> np.ndarray:
        out = spline(x)
        return np.nan_to_num(out, nan=0.0)

    return evaluate


def default_grids(
    params: SourceParams,
    max_abs_d_omega: float = 0.0,
    n_points: int = DEFAULT_GRID_POINTS,
    multiplier: float = GRID_SIGMA_MULTIPLIER,
) -> tuple[FrequencyGrid, FrequencyGrid]:
    """Signal and idler grids sized to hold the source (and planned shifts).

    Both grids are centered at omega0/2 so the frequency sum is centered at
    omega0; the half-width is `multiplier` times the largest bandwidth plus
    the largest planned signal-frequency shift.
    """
    half = multiplier * max(params.sigma_plus, params.sigma_minus) + abs(max_abs_d_omega)
    g = make_grid(params.omega0 / 2.0, half, n_points)
    return g, g


def _coverage_deficit(params: SourceParams, grid_s: FrequencyGrid,
                      grid_i: FrequencyGrid) -> float:
    """Upper bound on the analytic |phi|^2 mass outside the grid rectangle.

    Union bound over the four half-planes using the Gaussian marginals of
    the source, each with mean omega0/2 and std sqrt((s+^2 + s-^2)/2).
    """
    m_std = math.sqrt((params.sigma_plus ** 2 + params.sigma_minus ** 2) / 2.0)
    mean = params.omega0 / 2.0

    def upper_tail(z: float) -> float:
        return 0.5 * math.erfc(z / math.sqrt(2.0))

    deficit = 0.0
    for g in (grid_s, grid_i):
        deficit += upper_tail((g.hi - mean) / m_std)
        deficit += upper_tail((mean - g.lo) / m_std)
    return deficit


def gaussian_jsa(
    params: SourceParams,
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
) -> TwoPhotonAmplitude:
    """Joint spectral amplitude of the Gaussian pair source on a grid pair.

    The amplitude factorizes into a Gaussian over the scaled frequency sum
    (bandwidth sigma_plus, centered so omega_s+omega_i is centered at omega0)
    and a Gaussian over the scaled difference (bandwidth sigma_minus).  The
    result is renormalized to unit trapezoid square norm on the grids.

    Raises CoverageError if the grids truncate more than 1e-6 of the
    analytic norm.
    """
    deficit = _coverage_deficit(params, grid_s, grid_i)
    if deficit > COVERAGE_TOL:
        raise CoverageError(
            f"grids truncate ~{deficit:.3e} of the source norm "
            f"(limit {COVERAGE_TOL:.0e}); widen the grids"
        )
    ws = grid_s.points[:, None]
    wi = grid_i.points[None, :]
    vals = _sum_profile(params, (ws + wi) / math.sqrt(2.0)) * _difference_profile(
        params, (ws - wi) / math.sqrt(2.0)
    )
    state = TwoPhotonAmplitude(grid_s, grid_i, vals)
    norm = square_norm(state)
    return TwoPhotonAmplitude(grid_s, grid_i, vals / math.sqrt(norm))


# --- Encoding --------------------------------------------------------------

def _fft_translate_rows(values: np.ndarray, shift: float, spacing: float) -> np.ndarray:
    """Translate values along axis 0 by `shift` using the periodic band-limited
    interpolant: output(x) = input(x - shift)."""
    n = values.shape[0]
    freqs = np.fft.fftfreq(n, d=spacing)
    ramp = np.exp(-2j * np.pi * freqs * shift)
    return np.fft.ifft(np.fft.fft(values, axis=0) * ramp[:, None], axis=0)


def encode_shift(state: TwoPhotonAmplitude, shift: EncodingShift) -> TwoPhotonAmplitude:
    """Shift the signal photon: phi(omega_s - d_omega, omega_i) * exp(i omega_s d_t).

    The frequency shift is a band-limited (FFT phase-ramp) resampling, so
    sub-spacing shifts compose exactly and the grid norm is preserved.  The
    time shift is an exact phase factor.

    Raises CoverageError if a non-negligible part of the amplitude would
    wrap around the signal-grid boundary.
    """
    vals = state.values
    d_omega = shift.d_omega
    if d_omega != 0.0:
        grid = state.grid_s
        if abs(d_omega) >= 2.0 * grid.half_width:
            raise CoverageError(
                f"|d_omega|={abs(d_omega):.3g} exceeds the signal grid span"
            )
        # Mass in the strip that would wrap past the departing edge.
        pts = grid.points
        if d_omega > 0:
            strip = pts > grid.hi - d_omega
        else:
            strip = pts < grid.lo - d_omega
        w_s = grid.trapezoid_weights()
        w_i = state.grid_i.trapezoid_weights()
        dens = np.abs(vals) ** 2
        wrapped = float((w_s * strip) @ dens @ w_i)
        total = float(w_s @ dens @ w_i)
        if total > 0 and wrapped > 1e-9 * total:
            raise CoverageError(
                f"shift d_omega={d_omega:.3g} would wrap {wrapped / total:.2e} "
                "of the state past the grid edge"
            )
        vals = _fft_translate_rows(vals, d_omega, grid.spacing)
    if shift.d_t != 0.0:
        vals = vals * np.exp(1j * state.grid_s.points * shift.d_t)[:, None]
    return TwoPhotonAmplitude(state.grid_s, state.grid_i, vals)
