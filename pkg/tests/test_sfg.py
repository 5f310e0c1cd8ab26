import math

import numpy as np
import pytest

from tfesim import (
    CoverageError,
    EncodingShift,
    SourceParams,
    TwoPhotonAmplitude,
    default_grids,
    encode_shift,
    flat_phase_matching,
    gaussian_jsa,
    make_grid,
    n_sfg,
    pair_density,
    pair_density_map,
    phase_matching_on,
    sfg_moments,
    sfg_spectrum_analytic,
    sfg_spectrum_numeric,
    spectrum_moments,
    square_norm,
    sum_aligned_grid,
)


def _setup(sp=0.3, sm=1.0, d_omega=0.0, d_t=0.0, n_points=512):
    p = SourceParams(sp, sm, eps2_lambda0=0.5)
    grid_s, grid_i = default_grids(p, max_abs_d_omega=abs(d_omega), n_points=n_points)
    state = encode_shift(gaussian_jsa(p, grid_s, grid_i),
                         EncodingShift(d_omega, d_t))
    profile = phase_matching_on(make_grid(0.0, 10.0 * sm + 2 * abs(d_omega), 513), p)
    cover = 7.0 * sp + abs(d_omega)
    grid_p = sum_aligned_grid(
        grid_s, grid_i, center=p.omega0 + d_omega,
        n_points=2 * math.ceil(cover / grid_s.spacing) + 1,
    )
    return p, state, profile, grid_p


def test_numeric_matches_closed_form():
    p, state, profile, grid_p = _setup(d_omega=0.6, d_t=0.8)
    spectrum = sfg_spectrum_numeric(state, profile, p.eps2, grid_p)
    analytic = sfg_spectrum_analytic(p, EncodingShift(0.6, 0.8), grid_p.points)
    mask = analytic > 1e-6 * analytic.max()
    rel = np.abs(spectrum.density[mask] - analytic[mask]) / analytic[mask]
    assert rel.max() < 1e-4


def test_numeric_off_lattice_pump_frequencies():
    p, state, profile, grid_p = _setup()
    # a pump grid deliberately off the sum lattice exercises the spline path
    offset = make_grid(grid_p.center + 0.3 * grid_p.spacing,
                       grid_p.half_width, grid_p.n_points)
    spectrum = sfg_spectrum_numeric(state, profile, p.eps2, offset)
    analytic = sfg_spectrum_analytic(p, EncodingShift(), offset.points)
    mask = analytic > 1e-6 * analytic.max()
    rel = np.abs(spectrum.density[mask] - analytic[mask]) / analytic[mask]
    assert rel.max() < 1e-4


def test_large_time_shift_kills_conversion():
    p, state, profile, grid_p = _setup(d_t=10.0)
    spectrum = sfg_spectrum_numeric(state, profile, p.eps2, grid_p)
    assert spectrum.total() < 1e-10 * p.eps2


def test_out_of_band_pump_window_is_dark():
    p, state, profile, _ = _setup()
    grid_s = state.grid_s
    far = sum_aligned_grid(grid_s, state.grid_i, center=40.0, n_points=65)
    spectrum = sfg_spectrum_numeric(state, profile, p.eps2, far)
    assert np.all(spectrum.density < 1e-30)


def test_density_never_negative():
    p, state, profile, grid_p = _setup(d_omega=0.4, d_t=0.5)
    spectrum = sfg_spectrum_numeric(state, profile, p.eps2, grid_p)
    assert spectrum.density.min() >= -1e-12


def test_coverage_error_for_undecayed_lines():
    g = make_grid(0.0, 4.0, 64)
    state = TwoPhotonAmplitude(g, g, np.full((64, 64), 0.125))
    profile = flat_phase_matching(make_grid(0.0, 50.0, 257))
    grid_p = sum_aligned_grid(g, g, n_points=33)
    with pytest.raises(CoverageError):
        sfg_spectrum_numeric(state, profile, 1.0, grid_p)


def test_analytic_peak_value():
    p = SourceParams(0.3, 1.0, eps2_lambda0=0.5)
    peak = sfg_spectrum_analytic(p, EncodingShift(), p.omega0)
    assert peak == pytest.approx(p.eps2 / (2.0 * math.sqrt(math.pi) * p.sigma_plus))


def test_analytic_regression_pin():
    # sigma_plus = 0.1 with unit interaction strength: 1/(2 sqrt(pi) 0.1)
    p = SourceParams(0.1, 1.0, omega0=0.0, eps2_lambda0=2.0 ** -0.5)
    assert p.eps2 == pytest.approx(1.0)
    assert sfg_spectrum_analytic(p, EncodingShift(), 0.0) == pytest.approx(
        2.82095, abs=5e-6
    )


def test_analytic_half_width():
    p = SourceParams(0.25, 1.0, eps2_lambda0=0.5)
    shift = EncodingShift(0.4, 0.0)
    peak = sfg_spectrum_analytic(p, shift, p.omega0 + shift.d_omega)
    half_point = p.omega0 + shift.d_omega + p.sigma_plus * math.sqrt(2.0 * math.log(2.0))
    assert sfg_spectrum_analytic(p, shift, half_point) == pytest.approx(
        peak / 2.0, rel=1e-12
    )


def test_n_sfg_zero_shift_peak():
    p = SourceParams(0.3, 1.0, eps2_lambda0=0.37)
    assert n_sfg(p, EncodingShift()) == pytest.approx(0.37)


def test_n_sfg_frequency_efold():
    p = SourceParams(0.3, 1.2, eps2_lambda0=0.37)
    d_omega = math.sqrt(8.0) * p.sigma_minus
    assert n_sfg(p, EncodingShift(d_omega, 0.0)) == pytest.approx(
        0.37 * math.exp(-1.0), rel=1e-12
    )


def test_n_sfg_matches_quadrature():
    p, state, profile, grid_p = _setup(d_omega=0.5, d_t=0.7)
    spectrum = sfg_spectrum_numeric(state, profile, p.eps2, grid_p)
    assert spectrum.total() == pytest.approx(
        n_sfg(p, EncodingShift(0.5, 0.7)), rel=1e-4
    )


def test_n_sfg_shift_sign_symmetry():
    p = SourceParams(0.3, 1.0, eps2_lambda0=0.5)
    for d_omega, d_t in [(0.7, 0.0), (0.0, 1.1), (0.4, 0.9)]:
        base = n_sfg(p, EncodingShift(d_omega, d_t))
        assert n_sfg(p, EncodingShift(-d_omega, d_t)) == base
        assert n_sfg(p, EncodingShift(d_omega, -d_t)) == base


def test_n_sfg_scale_invariance():
    # depends on the shifts only through sigma_minus*d_t and d_omega/sigma_minus
    p1 = SourceParams(0.3, 1.0, eps2_lambda0=0.5)
    c = 3.7
    p2 = SourceParams(0.3, c * 1.0, eps2_lambda0=0.5)
    a = n_sfg(p1, EncodingShift(0.8, 1.3))
    b = n_sfg(p2, EncodingShift(0.8 * c, 1.3 / c))
    assert abs(a - b) < 1e-10 * a


def test_moments_exact_values():
    p = SourceParams(0.3, 1.0, omega0=2.0, eps2_lambda0=0.5)
    m = sfg_moments(p, EncodingShift(0.6, 5.0))
    assert m.mean == pytest.approx(2.6)
    assert m.variance == pytest.approx(0.09)
    assert m.total == pytest.approx(n_sfg(p, EncodingShift(0.6, 5.0)))


def test_variance_independent_of_time_shift():
    p = SourceParams(0.3, 1.0, eps2_lambda0=0.5)
    assert sfg_moments(p, EncodingShift(0.0, 0.0)).variance == sfg_moments(
        p, EncodingShift(0.0, 3.0)
    ).variance


def test_grid_moments_match_exact():
    p, state, profile, grid_p = _setup(d_omega=0.5, d_t=0.3)
    spectrum = sfg_spectrum_numeric(state, profile, p.eps2, grid_p)
    grid_m = spectrum_moments(spectrum)
    exact = sfg_moments(p, EncodingShift(0.5, 0.3))
    assert abs(grid_m.mean - exact.mean) < 1e-3 * max(abs(exact.mean), p.sigma_plus)
    assert grid_m.variance == pytest.approx(exact.variance, rel=1e-3)


def test_pair_density_normalized():
    p, state, _, grid_p = _setup(sp=0.4)
    times = np.linspace(-8.0 / p.sigma_minus, 8.0 / p.sigma_minus, 801)
    dens = pair_density_map(state, grid_p.points, times)
    w_p = grid_p.trapezoid_weights()
    w_t = np.full(times.size, times[1] - times[0])
    w_t[0] *= 0.5
    w_t[-1] *= 0.5
    assert w_p @ dens @ w_t == pytest.approx(1.0, abs=1e-3)


def test_pair_density_matches_flat_profile_spectrum():
    p, state, _, grid_p = _setup(sp=0.4)
    flat = flat_phase_matching(make_grid(0.0, 60.0, 257))
    spectrum = sfg_spectrum_numeric(state, flat, 1.0, grid_p)
    lhs = 2.0 * math.pi * pair_density_map(state, grid_p.points, np.array([0.0]))[:, 0]
    mask = spectrum.density > 1e-9 * spectrum.density.max()
    rel = np.abs(lhs[mask] - spectrum.density[mask]) / spectrum.density[mask]
    assert rel.max() < 1e-6


def test_pair_density_shifts_with_encoded_delay():
    p, state, _, grid_p = _setup(sp=0.4)
    d_t = 0.9
    shifted = encode_shift(state, EncodingShift(0.0, d_t))
    times = np.linspace(-3.0, 3.0, 41)
    moved = pair_density_map(shifted, grid_p.points, times)
    reference = pair_density_map(state, grid_p.points, times - d_t)
    mask = reference > 1e-9 * reference.max()
    rel = np.abs(moved[mask] - reference[mask]) / reference[mask]
    assert rel.max() < 1e-6


def test_pair_density_scalar_wrapper():
    _, state, _, grid_p = _setup(sp=0.4)
    w = float(grid_p.center)
    assert pair_density(state, w, 0.0) == pytest.approx(
        pair_density_map(state, np.array([w]), np.array([0.0]))[0, 0]
    )


def test_sum_aligned_grid_lands_on_lattice():
    p = SourceParams(0.3, 1.0, eps2_lambda0=0.5)
    grid_s, grid_i = default_grids(p, n_points=257)
    grid_p = sum_aligned_grid(grid_s, grid_i, center=0.83, n_points=101)
    offs = (grid_p.points[:, None] - grid_s.points[None, :]
            - grid_i.points[0]) / grid_i.spacing
    assert np.max(np.abs(offs - np.round(offs))) < 1e-9
