"""Monte Carlo model of the conversion-feedback dense-coding readout.

One trial stores an encoded photon pair and passes it repeatedly through the
upconversion medium while an extra delay line sweeps a triangular schedule.
Each pass converts with probability

    p(k) = eps2_lambda0 * exp(-d_omega^2 / (8 sigma_minus^2)
                              - sigma_minus^2 (d_t + t_extra(k))^2 / 2)

so conversion fires almost only when the swept delay cancels the encoded
time shift.  On success the spectrometer samples the pump frequency from a
normal law centered at omega0 + d_omega with std sigma_plus, and the message
is decoded as (omega_measured - omega0, -t_extra).  The time and frequency
readout variances multiply to (sigma_plus/sigma_minus)^2, which an entangled
source can make arbitrarily small.

Trials draw from counter-based substreams keyed by (seed, trial index), so
ensembles are bit-for-bit reproducible no matter how trials are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import EncodingShift, SourceParams

__all__ = [
    "SdcConfig",
    "SdcTrialResult",
    "SdcMessageStats",
    "SdcStats",
    "sweep_schedule",
    "pass_probabilities",
    "decode",
    "run_sdc_trial",
    "run_sdc_ensemble",
    "expected_passes",
]

_MAX_PASS_CAP = 10_000_000


@dataclass(frozen=True)
class SdcConfig:
    """Feedback-loop schedule, trial budget and RNG seed.

    max_passes=None derives a budget of ~10x the expected pass count from
    the schedule duty cycle (capped at 1e7).  survival < 1 makes the pair
    vanish with that per-pass probability after a failed conversion;
    spectrometer_sigma adds readout blur in quadrature.

    random_start_phase models a free-running sweep: each trial enters the
    cyclic schedule at a uniformly random position (drawn from the trial
    substream).  Without it every trial climbs the conversion peak from the
    same side first, which skews the decoded delay at usable efficiencies.
    """

    sweep_min: float
    sweep_max: float
    sweep_step: float
    n_trials: int
    seed: int = 0
    max_passes: int | None = None
    survival: float = 1.0
    spectrometer_sigma: float = 0.0
    random_start_phase: bool = True

    def __post_init__(self) -> None:
        if not self.sweep_step > 0:
            raise ValueError(f"sweep_step must be positive, got {self.sweep_step}")
        if not self.sweep_max >= self.sweep_min:
            raise ValueError("sweep_max must be >= sweep_min")
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {self.n_trials}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.max_passes is not None and self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")
        if not 0 < self.survival <= 1:
            raise ValueError("survival must be in (0, 1]")
        if self.spectrometer_sigma < 0:
            raise ValueError("spectrometer_sigma must be >= 0")


@dataclass(frozen=True)
class SdcTrialResult:
    """Outcome of one feedback-loop trial; measurement fields are NaN on failure."""

    passes: int
    t_extra_at_success: float
    omega_measured: float
    decoded_d_omega: float
    decoded_d_t: float
    succeeded: bool


@dataclass(frozen=True)
class SdcMessageStats:
    """Per-message readout statistics (variances are about the true values)."""

    message: EncodingShift
    var_d_t: float
    var_d_omega: float
    var_product: float
    mean_passes: float
    success_rate: float
    n_success: int


@dataclass(frozen=True)
class SdcStats:
    """Pooled ensemble statistics plus the per-message breakdown."""

    var_d_t: float
    var_d_omega: float
    var_product: float
    mean_passes: float
    success_rate: float
    n_trials: int
    per_message: tuple[SdcMessageStats, ...] = ()
    trials: tuple[SdcTrialResult, ...] = field(default=(), repr=False)


def sweep_schedule(config: SdcConfig) -> np.ndarray:
    """One period of the cyclic triangular delay schedule.

    Ascends from sweep_min to sweep_max in sweep_step increments, then
    descends through the interior points, so every interior value is visited
    twice per period and the endpoints once.
    """
    n_up = int(round((config.sweep_max - config.sweep_min) / config.sweep_step))
    ascending = config.sweep_min + config.sweep_step * np.arange(n_up + 1)
    if n_up < 2:
        return ascending
    return np.concatenate([ascending, ascending[-2:0:-1]])


def pass_probabilities(
    params: SourceParams, message: EncodingShift, schedule: np.ndarray
) -> np.ndarray:
    """Per-pass conversion probability at each scheduled extra delay."""
    sm = params.sigma_minus
    total_t = message.d_t + schedule
    return params.eps2_lambda0 * np.exp(
        -message.d_omega ** 2 / (8.0 * sm ** 2) - sm ** 2 * total_t ** 2 / 2.0
    )


def decode(t_extra: float, omega_measured: float, omega0: float) -> EncodingShift:
    """Invert the readout: the delay that fired cancels d_t, the pump
    frequency offset is d_omega."""
    return EncodingShift(d_omega=omega_measured - omega0, d_t=-t_extra)


def _resolved_max_passes(params: SourceParams, config: SdcConfig) -> int:
    if config.max_passes is not None:
        return config.max_passes
    schedule = sweep_schedule(config)
    duty = float(np.mean(np.exp(-params.sigma_minus ** 2 * schedule ** 2 / 2.0)))
    if duty <= 0:
        return _MAX_PASS_CAP
    budget = math.ceil(10.0 / (params.eps2_lambda0 * duty))
    return max(len(schedule), min(budget, _MAX_PASS_CAP))


def trial_generator(seed: int, stream: int) -> np.random.Generator:
    """Counter-based substream for one trial; independent for each stream id."""
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _run_trial(
    params: SourceParams,
    message: EncodingShift,
    config: SdcConfig,
    rng: np.random.Generator,
    schedule: np.ndarray,
    probs: np.ndarray,
    max_passes: int,
) -> SdcTrialResult:
    period = len(schedule)
    if config.random_start_phase:
        phase = int(rng.integers(period))
        schedule = np.roll(schedule, -phase)
        probs = np.roll(probs, -phase)
    omega_std = math.sqrt(params.sigma_plus ** 2 + config.spectrometer_sigma ** 2)
    passes_done = 0
    while passes_done < max_passes:
        n = min(period, max_passes - passes_done)
        u = rng.random(n)
        converted = u < probs[:n]
        if config.survival < 1.0:
            lost = rng.random(n) > config.survival
        else:
            lost = np.zeros(n, dtype=bool)
        stopped = converted | lost
        if stopped.any():
            i = int(np.argmax(stopped))
            passes = passes_done + i + 1
            if not converted[i]:
                return SdcTrialResult(
                    passes, math.nan, math.nan, math.nan, math.nan, False
                )
            t_extra = float(schedule[i])
            omega = float(
                rng.normal(params.omega0 + message.d_omega, omega_std)
            )
            shift = decode(t_extra, omega, params.omega0)
            return SdcTrialResult(
                passes, t_extra, omega, shift.d_omega, shift.d_t, True
            )
        passes_done += n
    return SdcTrialResult(max_passes, math.nan, math.nan, math.nan, math.nan, False)


def run_sdc_trial(
    params: SourceParams,
    message: EncodingShift,
    config: SdcConfig,
    rng: np.random.Generator,
) -> SdcTrialResult:
    """Run one feedback-loop trial with the supplied random stream.

    Never raises on exhaustion; a trial that runs out of passes (or loses
    the pair when survival < 1) returns succeeded=False.
    """
    schedule = sweep_schedule(config)
    probs = pass_probabilities(params, message, schedule)
    return _run_trial(
        params, message, config, rng, schedule, probs,
        _resolved_max_passes(params, config),
    )


def _message_stats(
    message: EncodingShift, results: list[SdcTrialResult]
) -> SdcMessageStats:
    succ = [r for r in results if r.succeeded]
    n_success = len(succ)
    if n_success:
        err_t = np.array([r.decoded_d_t - message.d_t for r in succ])
        err_w = np.array([r.decoded_d_omega - message.d_omega for r in succ])
        var_t = float(np.mean(err_t ** 2))
        var_w = float(np.mean(err_w ** 2))
        mean_passes = float(np.mean([r.passes for r in succ]))
    else:
        var_t = var_w = mean_passes = math.nan
    return SdcMessageStats(
        message=message,
        var_d_t=var_t,
        var_d_omega=var_w,
        var_product=var_t * var_w,
        mean_passes=mean_passes,
        success_rate=n_success / len(results),
        n_success=n_success,
    )


def run_sdc_ensemble(
    params: SourceParams,
    messages: list[EncodingShift],
    config: SdcConfig,
    collect_trials: bool = False,
) -> SdcStats:
    """Run n_trials feedback loops per message and aggregate the statistics.

    Variances are mean squared errors about the true message values, pooled
    over messages for the headline numbers.  Trial substreams are keyed by
    the global trial index, so results do not depend on evaluation order.
    """
    if not messages:
        raise ValueError("messages must be non-empty")
    schedule = sweep_schedule(config)
    max_passes = _resolved_max_passes(params, config)
    per_message: list[SdcMessageStats] = []
    all_results: list[SdcTrialResult] = []
    pooled_sq_t: list[np.ndarray] = []
    pooled_sq_w: list[np.ndarray] = []
    pooled_passes: list[int] = []
    n_success_total = 0
    for mi, message in enumerate(messages):
        probs = pass_probabilities(params, message, schedule)
        results = []
        for ti in range(config.n_trials):
            rng = trial_generator(config.seed, mi * config.n_trials + ti)
            results.append(
                _run_trial(params, message, config, rng, schedule, probs, max_passes)
            )
        per_message.append(_message_stats(message, results))
        succ = [r for r in results if r.succeeded]
        n_success_total += len(succ)
        if succ:
            pooled_sq_t.append(
                np.array([(r.decoded_d_t - message.d_t) ** 2 for r in succ])
            )
            pooled_sq_w.append(
                np.array([(r.decoded_d_omega - message.d_omega) ** 2 for r in succ])
            )
            pooled_passes.extend(r.passes for r in succ)
        if collect_trials:
            all_results.extend(results)
    total_trials = config.n_trials * len(messages)
    if n_success_total:
        var_t = float(np.mean(np.concatenate(pooled_sq_t)))
        var_w = float(np.mean(np.concatenate(pooled_sq_w)))
        mean_passes = float(np.mean(pooled_passes))
    else:
        var_t = var_w = mean_passes = math.nan
    return SdcStats(
        var_d_t=var_t,
        var_d_omega=var_w,
        var_product=var_t * var_w,
        mean_passes=mean_passes,
        success_rate=n_success_total / total_trials,
        n_trials=total_trials,
        per_message=tuple(per_message),
        trials=tuple(all_results),
    )


def _chain_stats(
    probs: np.ndarray, survival: float, max_passes: int
) -> tuple[float, float]:
    """(pass-weighted success mass, total success probability) for one entry
    phase, using geometric-series closed forms across whole periods."""
    period = len(probs)
    cont = (1.0 - probs) * survival
    prefix = np.concatenate([[1.0], np.cumprod(cont)])  # survive first k passes

    s1 = float(np.sum(probs * prefix[:period]))
    t1 = float(np.sum((np.arange(period) + 1) * probs * prefix[:period]))
    q = float(prefix[period])  # survive a whole period unconverted

    full_cycles, remainder = divmod(max_passes, period)
    if q >= 1.0 - 1e-15:
        total_success = s1 * full_cycles
        weighted = t1 * full_cycles + s1 * period * (full_cycles - 1) * full_cycles / 2
    else:
        qc = q ** full_cycles
        geo = (1.0 - qc) / (1.0 - q)
        # sum_{c<C} c q^c
        geo_lin = (q - full_cycles * q ** full_cycles
                   + (full_cycles - 1) * q ** (full_cycles + 1)) / (1.0 - q) ** 2
        total_success = s1 * geo
        weighted = t1 * geo + s1 * period * geo_lin
    if remainder:
        qc = q ** full_cycles
        s_r = float(np.sum(probs[:remainder] * prefix[:remainder]))
        t_r = float(
            np.sum((np.arange(remainder) + 1) * probs[:remainder] * prefix[:remainder])
        )
        total_success += qc * s_r
        weighted += qc * (t_r + full_cycles * period * s_r)
    return weighted, total_success


def expected_passes(
    params: SourceParams, message: EncodingShift, config: SdcConfig
) -> tuple[float, float]:
    """Analytic (mean passes given success, success probability) for one trial.

    Geometric-trial oracle: chains the per-pass probabilities through the
    cyclic schedule, including the survival factor and the pass budget.
    With random_start_phase the chain is averaged over all entry phases.
    """
    schedule = sweep_schedule(config)
    probs = pass_probabilities(params, message, schedule)
    max_passes = _resolved_max_passes(params, config)
    phases = range(len(schedule)) if config.random_start_phase else range(1)
    weighted = total = 0.0
    for phase in phases:
        w, s = _chain_stats(np.roll(probs, -phase), config.survival, max_passes)
        weighted += w
        total += s
    weighted /= len(phases)
    total /= len(phases)
    if total <= 0:
        return math.nan, 0.0
    return weighted / total, total
