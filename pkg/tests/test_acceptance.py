"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and recorded values.  Tolerances are fixed here, not configurable.
"""

import json
import math
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

import tfesim.cli as cli
from tfesim import (
    EncodingShift,
    QiChannel,
    QiSource,
    SchmidtSpectrum,
    SdcConfig,
    SourceParams,
    default_grids,
    encode_shift,
    flat_phase_matching,
    gaussian_jsa,
    make_grid,
    n_sfg,
    pair_density_map,
    pd_qi,
    phase_matching_on,
    pump_envelope_on,
    qi_expectation_oracle,
    run_discrimination,
    run_sdc_ensemble,
    schmidt_lambdas,
    schmidt_number,
    sfg_spectrum_analytic,
    sfg_spectrum_numeric,
    spectrum_moments,
    sum_aligned_grid,
    two_step_decompose,
)
from tfesim.schmidt import assemble_sfg_kernel, first_step_decompose, reconstruct_two_step


@contextmanager
def _criterion(number, label):
    start = time.time()
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] criterion {number} ({label}): FAIL")
        raise
    print(f"[ACCEPTANCE] criterion {number} ({label}): PASS "
          f"[{time.time() - start:.1f}s]")


# --- criteria 1 and 3: closed form vs quadrature, and spectral moments ------

SWEEP_SIGMA_PLUS = (0.25, 0.5, 0.75, 1.0, 1.25)
SWEEP_SIGMA_MINUS = (0.3, 0.6, 1.0, 1.5, 2.0)
SWEEP_D_OMEGA = np.linspace(-1.5, 1.5, 5)
SWEEP_D_T = np.linspace(-1.2, 1.2, 5)


@pytest.fixture(scope="module")
def spectrum_sweep():
    t0 = time.time()
    worst_point = worst_integral = worst_mean = worst_var = 0.0
    for sp in SWEEP_SIGMA_PLUS:
        for sm in SWEEP_SIGMA_MINUS:
            params = SourceParams(sp, sm, eps2_lambda0=0.5)
            grid_s, grid_i = default_grids(params, max_abs_d_omega=1.5, n_points=512)
            jsa = gaussian_jsa(params, grid_s, grid_i)
            profile = phase_matching_on(make_grid(0.0, 10.0 * sm + 3.0, 513), params)
            for d_omega in SWEEP_D_OMEGA:
                for d_t in SWEEP_D_T:
                    shift = EncodingShift(d_omega, d_t)
                    coded = encode_shift(jsa, shift)
                    cover = 6.0 * sp + abs(d_omega)
                    grid_p = sum_aligned_grid(
                        grid_s, grid_i, center=params.omega0 + d_omega,
                        n_points=2 * math.ceil(cover / grid_s.spacing) + 1,
                    )
                    spectrum = sfg_spectrum_numeric(coded, profile, params.eps2, grid_p)
                    analytic = sfg_spectrum_analytic(params, shift, grid_p.points)
                    mask = analytic > 1e-6 * analytic.max()
                    worst_point = max(worst_point, float(np.max(
                        np.abs(spectrum.density[mask] - analytic[mask]) / analytic[mask]
                    )))
                    worst_integral = max(worst_integral, abs(
                        spectrum.total() / n_sfg(params, shift) - 1.0
                    ))
                    moments = spectrum_moments(spectrum)
                    exact_mean = params.omega0 + d_omega
                    worst_mean = max(worst_mean, abs(moments.mean - exact_mean)
                                     / max(abs(exact_mean), sp))
                    worst_var = max(worst_var, abs(moments.variance / sp ** 2 - 1.0))
    return {
        "elapsed": time.time() - t0,
        "worst_point": worst_point,
        "worst_integral": worst_integral,
        "worst_mean": worst_mean,
        "worst_var": worst_var,
    }


def test_criterion_1_closed_form_vs_quadrature(spectrum_sweep):
    with _criterion(1, "closed form vs quadrature"):
        assert spectrum_sweep["worst_point"] < 1e-4
        assert spectrum_sweep["worst_integral"] < 1e-4
        assert spectrum_sweep["elapsed"] < 60.0
    print(f"    worst pointwise {spectrum_sweep['worst_point']:.2e}, "
          f"integral {spectrum_sweep['worst_integral']:.2e}, "
          f"elapsed {spectrum_sweep['elapsed']:.1f}s")


def test_criterion_3_spectral_moments(spectrum_sweep):
    with _criterion(3, "pump spectrum moments"):
        assert spectrum_sweep["worst_mean"] < 1e-3
        assert spectrum_sweep["worst_var"] < 1e-3


# --- criterion 2: conversion-probability surfaces ----------------------------

def test_criterion_2_sweep_surfaces(tmp_path):
    eps2_lambda0 = 0.01
    sigmas = [0.2, 0.4, 0.6, 0.8, 1.0]
    config = {
        "source": {"sigma_plus": 0.05, "sigma_minus": 1.0,
                   "eps2_lambda0": eps2_lambda0},
        "sweep": {
            "sigma_minus_list": sigmas,
            "d_omega": {"min": -3.0, "max": 3.0, "n": 41},
            "d_t": {"min": -8.0, "max": 8.0, "n": 41},
        },
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(config))
    out = str(tmp_path / "out")
    with _criterion(2, "conversion-probability surfaces"):
        assert cli.main(["sdc-sweep", "--config", str(path), "--out", out]) == 0
        rows = np.loadtxt(os.path.join(out, "sdc_sweep.csv"),
                          delimiter=",", skiprows=2)
        assert rows.shape[0] == len(sigmas) * 41 * 41
        peaks = rows[(rows[:, 1] == 0.0) & (rows[:, 2] == 0.0), 3]
        assert len(peaks) == len(sigmas)
        assert np.max(np.abs(peaks - eps2_lambda0)) < 1e-10
        for sm in sigmas:
            params = SourceParams(0.05, sm, eps2_lambda0=eps2_lambda0)
            peak = n_sfg(params, EncodingShift())
            efold_t = n_sfg(params, EncodingShift(0.0, math.sqrt(2.0) / sm))
            efold_w = n_sfg(params, EncodingShift(2.0 * math.sqrt(2.0) * sm, 0.0))
            assert abs(efold_t - peak / math.e) < 1e-10
            assert abs(efold_w - peak / math.e) < 1e-10
            assert os.path.exists(os.path.join(out, f"sdc_sweep_sigma_{sm:g}.svg"))


# --- criterion 4: broadband-limit correspondence -----------------------------

def test_criterion_4_flat_profile_limit():
    rng = np.random.default_rng(404)
    with _criterion(4, "flat-profile pair-density correspondence"):
        for _ in range(5):
            sp = float(rng.uniform(0.2, 0.8))
            sm = float(rng.uniform(0.8, 1.6))
            d_omega = float(rng.uniform(-0.5, 0.5))
            d_t = float(rng.uniform(-0.5, 0.5))
            params = SourceParams(sp, sm, eps2_lambda0=0.5)
            grid_s, grid_i = default_grids(params, max_abs_d_omega=1.0, n_points=384)
            state = encode_shift(gaussian_jsa(params, grid_s, grid_i),
                                 EncodingShift(d_omega, d_t))
            cover = 7.0 * sp + abs(d_omega)
            grid_p = sum_aligned_grid(
                grid_s, grid_i, center=params.omega0 + d_omega,
                n_points=2 * math.ceil(cover / grid_s.spacing) + 1,
            )
            flat = flat_phase_matching(make_grid(0.0, 100.0, 257))
            spectrum = sfg_spectrum_numeric(state, flat, 1.0, grid_p)
            lhs = 2.0 * math.pi * pair_density_map(
                state, grid_p.points, np.array([0.0])
            )[:, 0]
            lhs /= lhs.max()
            rhs = spectrum.density / spectrum.density.max()
            mask = rhs > 1e-6
            assert np.max(np.abs(lhs[mask] - rhs[mask]) / rhs[mask]) < 1e-6


# --- criterion 5: Schmidt structure ------------------------------------------

def test_criterion_5_schmidt_structure():
    with _criterion(5, "Schmidt structure"):
        # Exact separability: the pump envelope carries intensity std
        # sigma_plus in the pump frequency (forced by the closed-form
        # spectrum of criteria 1-3), so the rotated widths are
        # sigma_plus/sqrt(2) vs sigma_minus and the amplitude factorizes at
        # sigma_plus = sqrt(2)*sigma_minus (boundary pinned by the SVD oracle).
        params = SourceParams(math.sqrt(2.0), 1.0, eps2_lambda0=0.5)
        lam = schmidt_lambdas(gaussian_jsa(params, *default_grids(params)))
        lam /= lam.sum()
        sn_boundary = schmidt_number(lam)
        assert abs(sn_boundary - 1.0) < 1e-6

        # Mode count grows linearly with the bandwidth ratio.
        ratios = np.array([10.0, 25.0, 40.0, 55.0, 70.0, 85.0, 100.0])
        sns = []
        for ratio in ratios:
            params = SourceParams(1.0 / ratio, 1.0, eps2_lambda0=0.5)
            half = 6.0 * math.sqrt((params.sigma_plus ** 2 + 1.0) / 2.0)
            n = int(2.0 * half / (math.sqrt(2.0) * params.sigma_plus / 3.5)) + 1
            grid = make_grid(0.0, half, n)
            lam = schmidt_lambdas(gaussian_jsa(params, grid, grid))
            lam /= lam.sum()
            sns.append(schmidt_number(lam))
        design = np.vstack([ratios, np.ones_like(ratios)]).T
        coef, *_ = np.linalg.lstsq(design, np.array(sns), rcond=None)
        predicted = design @ coef
        ss_res = float(np.sum((sns - predicted) ** 2))
        ss_tot = float(np.sum((sns - np.mean(sns)) ** 2))
        r_squared = 1.0 - ss_res / ss_tot
        assert r_squared > 0.999

        # Two-step decomposition: reconstruction and first-step degeneracy.
        source = SourceParams(0.5, 1.0, eps2_lambda0=0.5)
        g = make_grid(0.0, 7.0, 65)
        profile = phase_matching_on(make_grid(0.0, 30.0, 257), source)
        envelope = pump_envelope_on(g, source)
        dec = two_step_decompose(envelope, profile, (g, g, g), pump_envelope=envelope)
        kernel = assemble_sfg_kernel(profile, g, g, g, pump_envelope=envelope)
        err = (np.linalg.norm(reconstruct_two_step(dec).values - kernel.values)
               / np.linalg.norm(kernel.values))
        assert err < 1e-6

        flat = flat_phase_matching(make_grid(0.0, 30.0, 257))
        lam1, _, _ = first_step_decompose(assemble_sfg_kernel(flat, g, g, g))
        assert lam1.max() / lam1.min() < 1.0 + 1e-6
    print(f"    SN at separability boundary: {sn_boundary:.9f} "
          "(boundary sigma_plus = sqrt(2)*sigma_minus)")
    print(f"    SN linearity R^2 = {r_squared:.7f}, slope = {coef[0]:.6f} "
          f"(1/sqrt(2) = {1/math.sqrt(2):.6f})")
    print(f"    two-step reconstruction error {err:.2e}")


# --- criterion 6: dense-coding readout statistics ----------------------------

def test_criterion_6_sdc_statistics(tmp_path):
    t0 = time.time()
    sigma_plus, sigma_minus = 0.05, 1.0
    eps2_lambda0 = 0.05  # tuned: ~50 expected passes per trial
    messages = [[0.0, 0.0], [0.6, 1.2], [-0.9, -0.7]]
    config = {
        "seed": 2026,
        "source": {"sigma_plus": sigma_plus, "sigma_minus": sigma_minus,
                   "eps2_lambda0": eps2_lambda0},
        "sdc": {"messages": messages, "sweep_min": -4.0, "sweep_max": 4.0,
                "sweep_step": 0.1, "n_trials": 10_000},
    }
    path = tmp_path / "sdc.json"
    path.write_text(json.dumps(config))
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    with _criterion(6, "dense-coding readout statistics"):
        params = SourceParams(sigma_plus, sigma_minus, eps2_lambda0=eps2_lambda0)
        sdc_config = SdcConfig(sweep_min=-4.0, sweep_max=4.0, sweep_step=0.1,
                               n_trials=10_000, seed=2026)
        stats = run_sdc_ensemble(
            params, [EncodingShift(*m) for m in messages], sdc_config
        )
        assert stats.var_d_omega == pytest.approx(sigma_plus ** 2, rel=0.05)
        assert stats.var_d_t == pytest.approx(1.0 / sigma_minus ** 2, rel=0.15)
        target = (sigma_plus / sigma_minus) ** 2
        assert target / 2.0 < stats.var_product < target * 2.0

        assert cli.main(["sdc-run", "--config", str(path), "--out", out1]) == 0
        assert cli.main(["sdc-run", "--config", str(path), "--out", out2]) == 0
        for name in sorted(os.listdir(out1)):
            with open(os.path.join(out1, name), "rb") as fa, \
                    open(os.path.join(out2, name), "rb") as fb:
                assert fa.read() == fb.read(), f"artifact {name} not reproducible"
        elapsed = time.time() - t0
        assert elapsed < 300.0
    print(f"    var product {stats.var_product:.3e} "
          f"(target {target:.3e}), elapsed {elapsed:.1f}s")


# --- criterion 7: detection-probability oracle -------------------------------

def test_criterion_7_qi_oracle():
    rng = np.random.default_rng(777)
    with _criterion(7, "detection-probability oracle"):
        worst = 0.0
        for _ in range(100):
            k = int(rng.integers(1, 64))
            lam = rng.random(k) + 1e-6
            lam /= lam.sum()
            source = QiSource(SchmidtSpectrum.from_lambdas(lam),
                              float(rng.uniform(1e-8, 1.0)))
            channel = QiChannel(float(rng.random()), float(rng.random() * 3.0))
            closed = pd_qi(source, channel)
            oracle = qi_expectation_oracle(source, channel)
            worst = max(worst, abs(closed - oracle) / max(closed, 1e-30))
        assert worst < 1e-10

        source = QiSource(SchmidtSpectrum.from_lambdas(np.full(100, 0.01)), 1e-3)
        present = QiChannel(0.1, 1.0)
        absent = QiChannel(0.0, 1.0)
        shots = 100_000
        result = run_discrimination(source, present, absent, shots, seed=77)
        for p, count in ((pd_qi(source, present), result.count_present),
                         (pd_qi(source, absent), result.count_absent)):
            sd = math.sqrt(shots * p * (1.0 - p))
            assert abs(count - shots * p) <= 3.0 * sd
    print(f"    worst oracle disagreement {worst:.2e}")


# --- criterion 8: background suppression law ----------------------------------

def test_criterion_8_noise_suppression():
    eps2_lambda0 = 1e-3
    mu_b = 0.8
    with _criterion(8, "background suppression 1/SN"):
        noise_terms = {}
        for sn in (1, 10, 100, 10 ** 6):
            source = QiSource(
                SchmidtSpectrum.from_lambdas(np.full(sn, 1.0 / sn)), eps2_lambda0
            )
            noise_terms[sn] = pd_qi(source, QiChannel(eta=0.0, mu_b=mu_b))
        for sn, value in noise_terms.items():
            assert value == pytest.approx(eps2_lambda0 * mu_b / sn, rel=1e-9)
        assert noise_terms[1] / noise_terms[10] == pytest.approx(10.0, rel=1e-9)
        assert noise_terms[10] / noise_terms[100] == pytest.approx(10.0, rel=1e-9)
        assert noise_terms[100] / noise_terms[10 ** 6] == pytest.approx(1e4, rel=1e-9)
    print(f"    noise term at SN=1e6: {noise_terms[10**6]:.3e} "
          f"(SN=1: {noise_terms[1]:.3e})")
