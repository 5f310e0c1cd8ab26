"""Desk-scale simulator of joint time-frequency measurements on photon pairs.

The library builds discretized two-photon spectral amplitudes, decomposes
them into orthonormal mode pairs, models the upconversion measurement that
reads out the frequency sum and time difference of a pair, and simulates the
two protocols built on that measurement: continuous-variable dense coding
through a conversion feedback loop, and target detection in loss and noise.
"""

from .spectral import (
    CoverageError,
    EncodingShift,
    FrequencyGrid,
    SourceParams,
    SpectralAmplitude1D,
    TwoPhotonAmplitude,
    default_grids,
    encode_shift,
    flat_phase_matching,
    gaussian_jsa,
    make_grid,
    marginal_mean,
    phase_matching_on,
    pump_envelope_on,
    square_norm,
)
from .schmidt import (
    SchmidtSpectrum,
    ThreeWaveKernel,
    TwoStepDecomposition,
    assemble_sfg_kernel,
    first_step_decompose,
    reconstruct_two_step,
    schmidt_decompose,
    schmidt_lambdas,
    schmidt_number,
    two_step_decompose,
)
from .sfg import (
    PumpSpectrum,
    SfgMoments,
    n_sfg,
    pair_density,
    pair_density_map,
    sfg_moments,
    sfg_spectrum_analytic,
    sfg_spectrum_numeric,
    spectrum_moments,
    sum_aligned_grid,
)
from .sdc import (
    SdcConfig,
    SdcStats,
    SdcTrialResult,
    decode,
    expected_passes,
    run_sdc_ensemble,
    run_sdc_trial,
    sweep_schedule,
)
from .qi import (
    QiChannel,
    QiDiscriminationResult,
    QiSource,
    pd_ci,
    pd_qi,
    qi_expectation_oracle,
    run_discrimination,
)

__version__ = "0.1.0"
