"""Upconversion readout of a photon pair: pump spectrum, totals, moments.

Only pairs whose frequencies sum to omega_p can convert into a pump photon
at omega_p, so the emitted spectral density is a line integral of the joint
amplitude along the anti-diagonal omega_s + omega_i = omega_p, weighted by
the phase-matching profile:

    S(omega_p) = eps2 * | integral dw_s profile((2 w_s - omega_p)/sqrt2)
                                      * phi(w_s, omega_p - w_s) |^2

A time offset between the photons dephases the integrand and suppresses the
total conversion probability, which is what makes the readout a joint
measurement of frequency sum and time difference.  The closed forms for the
Gaussian source and the grid quadrature cross-validate each other.

The line integrals use trapezoid quadrature.  Pump frequencies that land on
the signal+idler sum lattice are sampled exactly; off-lattice frequencies
fall back to cubic-spline interpolation of the amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .spectral import (
    CoverageError,
    EncodingShift,
    FrequencyGrid,
    SourceParams,
    SpectralAmplitude1D,
    TwoPhotonAmplitude,
    profile_interpolator,
)

__all__ = [
    "PumpSpectrum",
    "SfgMoments",
    "sum_aligned_grid",
    "sfg_spectrum_numeric",
    "sfg_spectrum_analytic",
    "n_sfg",
    "sfg_moments",
    "spectrum_moments",
    "pair_density",
    "pair_density_map",
]

# Integrands clipped by the grid edge must have decayed to this fraction of
# their per-line peak, otherwise the line integral is untrustworthy.
_EDGE_TOL = 1e-6


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PumpSpectrum:
    """Spectral density of the generated pump photon (probability per rad/ps)."""

    grid_p: FrequencyGrid
    density: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        dens = np.asarray(self.density, dtype=float)
        if dens.shape != (self.grid_p.n_points,):
            raise ValueError("density shape does not match grid")
        object.__setattr__(self, "density", _readonly(dens))

    def total(self) -> float:
        """Trapezoid integral of the density over the pump grid."""
        return float(self.grid_p.trapezoid_weights() @ self.density)


@dataclass(frozen=True)
class SfgMoments:
    """Total conversion probability, mean and variance of the pump frequency."""

    total: float
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if self.total < 0:
            raise ValueError("total probability cannot be negative")
        if not self.variance > 0:
            raise ValueError("variance must be positive")


def sum_aligned_grid(
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    center: float | None = None,
    n_points: int | None = None,
) -> FrequencyGrid:
    """Pump grid whose points lie exactly on the signal+idler sum lattice.

    Keeps the signal/idler spacing; the center snaps to the nearest
    achievable sum and n_points is rounded up to odd so the grid stays on
    the lattice.  Line integrals on such a grid need no interpolation.
    """
    spacing = grid_s.spacing
    if abs(grid_i.spacing - spacing) > 1e-9 * spacing:
        raise ValueError("signal and idler grids must share one spacing")
    if center is None:
        center = grid_s.center + grid_i.center
    if n_points is None:
        n_points = grid_s.n_points
    n_points = int(n_points)
    if n_points % 2 == 0:
        n_points += 1
    base = grid_s.lo + grid_i.lo
    snapped = base + round((center - base) / spacing) * spacing
    return FrequencyGrid(snapped, spacing * (n_points - 1) / 2.0, n_points)


def _antidiagonal_samples(
    state: TwoPhotonAmplitude, omega_ps: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Sample phi(w_s_j, omega_p - w_s_j) for every requested pump frequency.

    Returns (samples, weights): (M, Ns) arrays where weights are trapezoid
    weights over the portion of each line that stays inside the idler grid,
    zero outside.
    """
    grid_s, grid_i = state.grid_s, state.grid_i
    s_pts = grid_s.points
    ni = grid_i.n_points
    # Fractional idler-grid coordinate of omega_p - w_s_j for every (m, j).
    cols = (omega_ps[:, None] - s_pts[None, :] - grid_i.lo) / grid_i.spacing
    aligned = np.max(np.abs(cols - np.round(cols))) < 1e-6 if cols.size else True
    valid = (cols > -1e-9) & (cols < ni - 1 + 1e-9)
    if aligned:
        idx = np.clip(np.round(cols).astype(int), 0, ni - 1)
        samples = state.values[np.arange(len(s_pts))[None, :], idx]
    else:
        rows = np.broadcast_to(np.arange(len(s_pts), dtype=float), cols.shape)
        coords = np.stack([rows.ravel(), np.clip(cols, 0, ni - 1).ravel()])
        re = map_coordinates(state.values.real, coords, order=3, mode="nearest")
        im = map_coordinates(state.values.imag, coords, order=3, mode="nearest")
        samples = (re + 1j * im).reshape(cols.shape)
    samples = np.where(valid, samples, 0.0)

    weights = np.where(valid, grid_s.spacing, 0.0)
    any_valid = valid.any(axis=1)
    first = valid.argmax(axis=1)
    last = len(s_pts) - 1 - valid[:, ::-1].argmax(axis=1)
    rows_idx = np.arange(len(omega_ps))
    weights[rows_idx[any_valid], first[any_valid]] *= 0.5
    weights[rows_idx[any_valid], last[any_valid]] *= 0.5
    return samples, weights


def _check_line_coverage(integrand: np.ndarray, what: str) -> None:
    """Line integrals clipped while still significant are coverage errors.

    A line whose first or last in-grid sample has not decayed below 1e-6 of
    the global integrand scale is being truncated by the grid window.
    """
    mags = np.abs(integrand)
    global_peak = mags.max() if mags.size else 0.0
    if global_peak == 0.0:
        return
    nonzero = mags > 0
    any_valid = nonzero.any(axis=1)
    first = nonzero.argmax(axis=1)
    last = mags.shape[1] - 1 - nonzero[:, ::-1].argmax(axis=1)
    rows = np.arange(mags.shape[0])
    ends = np.zeros(mags.shape[0])
    ends[any_valid] = np.maximum(
        mags[rows[any_valid], first[any_valid]],
        mags[rows[any_valid], last[any_valid]],
    )
    bad = any_valid & (ends > _EDGE_TOL * global_peak)
    if np.any(bad):
        raise CoverageError(
            f"{what}: integrand not decayed at the state-grid edge for "
            f"{int(bad.sum())} pump frequencies; widen the signal/idler grids"
        )


def sfg_spectrum_numeric(
    state: TwoPhotonAmplitude,
    phase_matching: SpectralAmplitude1D,
    eps2: float,
    grid_p: FrequencyGrid,
) -> PumpSpectrum:
    """Pump spectral density by line integration of the joint amplitude.

    eps2 is the bare interaction strength (SourceParams.eps2 for source
    states).  The term that needs pump photons at the input is dropped.
    """
    if eps2 < 0:
        raise ValueError("eps2 must be non-negative")
    omega_ps = grid_p.points
    samples, weights = _antidiagonal_samples(state, omega_ps)
    args = (2.0 * state.grid_s.points[None, :] - omega_ps[:, None]) / math.sqrt(2.0)
    masked = args[weights > 0]
    if masked.size:
        feval = profile_interpolator(
            phase_matching, float(masked.min()), float(masked.max())
        )
    else:
        feval = lambda x: np.zeros_like(x)
    integrand = samples * feval(args)
    _check_line_coverage(np.where(weights > 0, integrand, 0.0), "sfg spectrum")
    amplitude = np.sum(integrand * weights, axis=1)
    density = eps2 * np.abs(amplitude) ** 2
    return PumpSpectrum(grid_p, density)


def sfg_spectrum_analytic(
    params: SourceParams,
    shift: EncodingShift,
    omega_p: float | np.ndarray,
) -> float | np.ndarray:
    """Closed-form pump spectral density for the Gaussian source.

    A Gaussian of intensity std sigma_plus centered at omega0 + d_omega,
    scaled by the dephasing factor from the time shift and by the
    frequency-shift overlap penalty.
    """
    w = np.asarray(omega_p, dtype=float)
    sp, sm = params.sigma_plus, params.sigma_minus
    exponent = 0.125 * (
        -4.0 * shift.d_t ** 2 * sm ** 2
        - shift.d_omega ** 2 / sm ** 2
        - 4.0 * (shift.d_omega + params.omega0 - w) ** 2 / sp ** 2
    )
    out = params.eps2 * np.exp(exponent) / (2.0 * math.sqrt(math.pi) * sp)
    return float(out) if np.isscalar(omega_p) else out


def n_sfg(params: SourceParams, shift: EncodingShift) -> float:
    """Total per-pass conversion probability.

    Peaks at eps2_lambda0 for zero shifts and falls off Gaussianly, with
    e-fold scales sigma_minus*|d_t| = sqrt(2) and |d_omega| = 2*sqrt(2)*sigma_minus.
    """
    sm = params.sigma_minus
    return params.eps2_lambda0 * math.exp(
        -shift.d_omega ** 2 / (8.0 * sm ** 2) - sm ** 2 * shift.d_t ** 2 / 2.0
    )


def sfg_moments(params: SourceParams, shift: EncodingShift) -> SfgMoments:
    """Exact total, mean and variance of the generated pump spectrum.

    The mean follows the encoded frequency shift; the variance equals the
    source pump bandwidth squared, independent of both shifts.
    """
    return SfgMoments(
        total=n_sfg(params, shift),
        mean=params.omega0 + shift.d_omega,
        variance=params.sigma_plus ** 2,
    )


def spectrum_moments(spectrum: PumpSpectrum) -> SfgMoments:
    """Grid (trapezoid) moments of a numeric spectrum, for cross-validation."""
    w = spectrum.grid_p.trapezoid_weights()
    pts = spectrum.grid_p.points
    total = float(w @ spectrum.density)
    if total <= 0:
        raise ValueError("spectrum has no weight; moments undefined")
    mean = float((w * pts) @ spectrum.density / total)
    var = float((w * (pts - mean) ** 2) @ spectrum.density / total)
    return SfgMoments(total=total, mean=mean, variance=var)


def pair_density_map(
    state: TwoPhotonAmplitude,
    omegas: np.ndarray,
    times: np.ndarray,
) -> np.ndarray:
    """Joint density of frequency sum and time difference on a value grid.

    Returns a (len(omegas), len(times)) array of

        P(omega, t) = (1/2pi) | integral dw_s exp(i (omega - w_s) t)
                                          phi(w_s, omega - w_s) |^2

    The phase factor exp(i omega t) is global to each line integral and is
    dropped.  Integrates to 1 over (omega, t) for a normalized state.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    times = np.atleast_1d(np.asarray(times, dtype=float))
    samples, weights = _antidiagonal_samples(state, omegas)
    integrand = samples * weights
    _check_line_coverage(integrand, "pair density")
    phases = np.exp(-1j * np.outer(state.grid_s.points, times))
    g = integrand @ phases
    return np.abs(g) ** 2 / (2.0 * math.pi)


def pair_density(state: TwoPhotonAmplitude, omega: float, t: float) -> float:
    """P(omega, t) at a single point; see pair_density_map."""
    return float(pair_density_map(state, np.array([omega]), np.array([t]))[0, 0])
