"""Command-line driver: JSON config in, CSV/SVG artifacts and a manifest out.

Subcommands: sfg-spectrum, sdc-sweep, sdc-run, qi-run, schmidt.  Every
artifact is a pure function of (config, seed); files are written atomically
and the manifest records the effective config plus sha256 checksums, so a
re-run with the same inputs is byte-identical.  Exit codes: 0 success,
2 config/validation error, 3 oracle disagreement, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .qi import QiChannel, QiSource, pd_ci, pd_qi, qi_expectation_oracle, run_discrimination
from .schmidt import SchmidtSpectrum, schmidt_decompose, schmidt_lambdas
from .sdc import SdcConfig, run_sdc_ensemble
from .sfg import (
    n_sfg,
    pair_density_map,
    sfg_spectrum_analytic,
    sfg_spectrum_numeric,
    sum_aligned_grid,
)
from .spectral import (
    CoverageError,
    EncodingShift,
    FrequencyGrid,
    SourceParams,
    default_grids,
    encode_shift,
    gaussian_jsa,
    make_grid,
    phase_matching_on,
)

EXPERIMENTS = ("sfg-spectrum", "sdc-sweep", "sdc-run", "qi-run", "schmidt")

ORACLE_TOL = 1e-8


class ConfigError(ValueError):
    """Bad or missing configuration value."""


class OracleMismatchError(RuntimeError):
    """Closed form and independent oracle disagree beyond tolerance."""


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    seed: int
    units: str
    out_dir: str
    source: SourceParams
    raw: dict


# --- config parsing ---------------------------------------------------------

def _get(section: dict, key: str, kind, default=None, required: bool = False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    value = section[key]
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from exc


def _parse_source(raw: dict) -> SourceParams:
    section = raw.get("source")
    if not isinstance(section, dict):
        raise ConfigError("config must contain a 'source' object")
    try:
        return SourceParams(
            sigma_plus=_get(section, "sigma_plus", float, required=True),
            sigma_minus=_get(section, "sigma_minus", float, required=True),
            omega0=_get(section, "omega0", float, 0.0),
            eps2_lambda0=_get(section, "eps2_lambda0", float, 2.1e-8),
        )
    except ValueError as exc:
        raise ConfigError(f"source: {exc}") from exc


def _parse_shift(value) -> EncodingShift:
    if value is None:
        return EncodingShift()
    if isinstance(value, dict):
        return EncodingShift(
            d_omega=float(value.get("d_omega", 0.0)),
            d_t=float(value.get("d_t", 0.0)),
        )
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return EncodingShift(d_omega=float(value[0]), d_t=float(value[1]))
    raise ConfigError(f"cannot parse shift {value!r}; use [d_omega, d_t]")


def load_config(path: str, experiment: str, seed_override: int | None,
                out_override: str | None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top-level config must be an object")
    declared = raw.get("experiment")
    if declared is not None and declared != experiment:
        raise ConfigError(
            f"config declares experiment {declared!r} but subcommand is {experiment!r}"
        )
    units = raw.get("units", "rad/ps")
    if units not in ("rad/ps", "THz-angular"):
        raise ConfigError(f"unsupported units {units!r}; use 'rad/ps' or 'THz-angular'")
    seed = seed_override if seed_override is not None else int(raw.get("seed", 0))
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    out_dir = out_override if out_override is not None else raw.get("out_dir", "tfe-out")
    return RunConfig(
        experiment=experiment,
        seed=seed,
        units=units,
        out_dir=str(out_dir),
        source=_parse_source(raw),
        raw=raw,
    )


# --- artifact emission ------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _atomic_write(path: str, data: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_csv(path: str, schema: str, header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    lines = [f"# schema: {schema}", ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class ArtifactWriter:
    """Collects emitted files and their schema ids for the manifest."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.entries: list[dict] = []
        self.notes: list[str] = []
        os.makedirs(config.out_dir, exist_ok=True)
        if config.units == "THz-angular":
            self.notes.append(
                "units 'THz-angular' passed through at factor 1.0 (rad/ps)"
            )

    def path(self, name: str) -> str:
        return os.path.join(self.config.out_dir, name)

    def csv(self, name: str, schema: str, header: Sequence[str],
            rows: Iterable[Sequence]) -> None:
        write_csv(self.path(name), schema, header, rows)
        self.entries.append({"name": name, "schema": schema})

    def svg(self, name: str, draw: Callable) -> None:
        import matplotlib

        matplotlib.use("Agg")
        matplotlib.rcParams["svg.hashsalt"] = "tfe"  # deterministic element ids
        import matplotlib.pyplot as plt

        fig = draw(plt)
        fig.savefig(self.path(name), format="svg", metadata={"Date": None})
        plt.close(fig)
        self.entries.append({"name": name, "schema": "svg"})

    def finish(self) -> None:
        for entry in self.entries:
            entry["sha256"] = _sha256(self.path(entry["name"]))
        manifest = {
            "experiment": self.config.experiment,
            "version": __version__,
            "seed": self.config.seed,
            "units": self.config.units,
            "config": self.config.raw,
            "artifacts": self.entries,
            "notes": self.notes,
        }
        data = json.dumps(manifest, indent=2, sort_keys=True).encode("utf-8")
        _atomic_write(self.path("manifest.json"), data)


# --- subcommands ------------------------------------------------------------

def cmd_sfg_spectrum(config: RunConfig) -> None:
    section = config.raw.get("sfg", {})
    params = config.source
    shift = _parse_shift(section.get("shift"))
    n_points = _get(section, "n_points", int, 512)
    multiplier = _get(section, "grid_multiplier", float, 7.0)
    grid_s, grid_i = default_grids(
        params, abs(shift.d_omega), n_points=n_points, multiplier=multiplier
    )
    state = encode_shift(gaussian_jsa(params, grid_s, grid_i), shift)

    f_grid = make_grid(0.0, 10.0 * params.sigma_minus, 1025)
    profile = phase_matching_on(f_grid, params)

    center = params.omega0 + shift.d_omega
    cover = 7.0 * params.sigma_plus
    pump_points = _get(section, "pump_points", int,
                       2 * math.ceil(cover / grid_s.spacing) + 1)
    grid_p = sum_aligned_grid(grid_s, grid_i, center=center, n_points=pump_points)
    spectrum = sfg_spectrum_numeric(state, profile, params.eps2, grid_p)
    analytic = sfg_spectrum_analytic(params, shift, grid_p.points)

    writer = ArtifactWriter(config)
    writer.csv(
        "sfg_spectrum.csv", "tfe.sfg_spectrum.v1",
        ("omega_p", "density"),
        zip(grid_p.points, spectrum.density),
    )

    def draw(plt):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(grid_p.points, spectrum.density, label="grid quadrature")
        ax.plot(grid_p.points, analytic, "--", label="closed form")
        ax.set_xlabel("omega_p (rad/ps)")
        ax.set_ylabel("density (1/(rad/ps))")
        ax.legend()
        fig.tight_layout()
        return fig

    writer.svg("sfg_spectrum.svg", draw)

    if section.get("emit_pair_density"):
        t_half = 6.0 / params.sigma_minus
        times = np.linspace(-t_half - shift.d_t, t_half + shift.d_t, 201)
        dens = pair_density_map(state, grid_p.points, times)
        rows = (
            (w, t, dens[iw, it])
            for iw, w in enumerate(grid_p.points)
            for it, t in enumerate(times)
        )
        writer.csv("pair_density.csv", "tfe.pair_density.v1",
                   ("omega", "t", "density"), rows)
    if section.get("dump_amplitude"):
        s_pts, i_pts = grid_s.points, grid_i.points
        rows = (
            (s_pts[j], i_pts[k], state.values[j, k].real, state.values[j, k].imag)
            for j in range(grid_s.n_points)
            for k in range(grid_i.n_points)
        )
        writer.csv("amplitude.csv", "tfe.amplitude.v1",
                   ("omega_s", "omega_i", "re", "im"), rows)
    writer.finish()


def _axis_values(section: dict, key: str) -> np.ndarray:
    axis = section.get(key)
    if not isinstance(axis, dict):
        raise ConfigError(f"sweep.{key} must be an object with min/max/n")
    lo = _get(axis, "min", float, required=True)
    hi = _get(axis, "max", float, required=True)
    n = _get(axis, "n", int, required=True)
    if n < 1 or hi < lo:
        raise ConfigError(f"sweep.{key}: need n >= 1 and max >= min")
    return np.linspace(lo, hi, n)


def cmd_sdc_sweep(config: RunConfig) -> None:
    section = config.raw.get("sweep", {})
    sigmas = section.get("sigma_minus_list")
    if not isinstance(sigmas, list) or not sigmas:
        raise ConfigError("sweep.sigma_minus_list must be a non-empty list")
    sigmas = [float(s) for s in sigmas]
    if any(s <= 0 for s in sigmas):
        raise ConfigError("sweep.sigma_minus_list entries must be positive")
    d_omegas = _axis_values(section, "d_omega")
    d_ts = _axis_values(section, "d_t")
    base = config.source

    rows = []
    surfaces = {}
    for sm in sigmas:
        params = SourceParams(
            sigma_plus=base.sigma_plus, sigma_minus=sm,
            omega0=base.omega0, eps2_lambda0=base.eps2_lambda0,
        )
        surface = np.empty((len(d_omegas), len(d_ts)))
        for iw, dw in enumerate(d_omegas):
            for it, dt in enumerate(d_ts):
                surface[iw, it] = n_sfg(params, EncodingShift(dw, dt))
        surfaces[sm] = surface
        rows.extend(
            (sm, d_omegas[iw], d_ts[it], surface[iw, it])
            for iw in range(len(d_omegas))
            for it in range(len(d_ts))
        )

    writer = ArtifactWriter(config)
    writer.csv("sdc_sweep.csv", "tfe.sdc_sweep.v1",
               ("sigma_minus", "d_omega", "d_t", "n_sfg"), rows)
    for sm, surface in surfaces.items():
        def draw(plt, sm=sm, surface=surface):
            fig, ax = plt.subplots(figsize=(5, 4))
            mesh = ax.contourf(d_ts, d_omegas, surface, levels=21)
            fig.colorbar(mesh, ax=ax, label="conversion probability")
            ax.set_xlabel("d_t (ps)")
            ax.set_ylabel("d_omega (rad/ps)")
            ax.set_title(f"sigma_minus = {sm:g} rad/ps")
            fig.tight_layout()
            return fig

        writer.svg(f"sdc_sweep_sigma_{sm:g}.svg", draw)
    writer.finish()


def _parse_sdc_config(config: RunConfig) -> tuple[list[EncodingShift], SdcConfig]:
    section = config.raw.get("sdc")
    if not isinstance(section, dict):
        raise ConfigError("config must contain an 'sdc' object")
    messages_raw = section.get("messages")
    if not isinstance(messages_raw, list) or not messages_raw:
        raise ConfigError("sdc.messages must be a non-empty list of [d_omega, d_t]")
    messages = [_parse_shift(m) for m in messages_raw]
    try:
        sdc_config = SdcConfig(
            sweep_min=_get(section, "sweep_min", float, required=True),
            sweep_max=_get(section, "sweep_max", float, required=True),
            sweep_step=_get(section, "sweep_step", float, required=True),
            n_trials=_get(section, "n_trials", int, required=True),
            seed=config.seed,
            max_passes=_get(section, "max_passes", int),
            survival=_get(section, "survival", float, 1.0),
            spectrometer_sigma=_get(section, "spectrometer_sigma", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"sdc: {exc}") from exc
    return messages, sdc_config


def cmd_sdc_run(config: RunConfig) -> None:
    messages, sdc_config = _parse_sdc_config(config)
    stats = run_sdc_ensemble(config.source, messages, sdc_config, collect_trials=True)

    writer = ArtifactWriter(config)
    writer.csv(
        "sdc_trials.csv", "tfe.sdc_trials.v1",
        ("trial", "passes", "t_extra", "omega_measured", "d_omega_hat", "d_t_hat"),
        (
            (i, r.passes, r.t_extra_at_success, r.omega_measured,
             r.decoded_d_omega, r.decoded_d_t)
            for i, r in enumerate(stats.trials)
        ),
    )
    writer.csv(
        "sdc_summary.csv", "tfe.sdc_summary.v1",
        ("message_d_omega", "message_d_t", "var_d_t", "var_d_omega",
         "var_product", "mean_passes", "success_rate"),
        (
            (m.message.d_omega, m.message.d_t, m.var_d_t, m.var_d_omega,
             m.var_product, m.mean_passes, m.success_rate)
            for m in stats.per_message
        ),
    )

    def draw(plt):
        fig, ax = plt.subplots(figsize=(5, 4))
        xs = [r.decoded_d_omega for r in stats.trials if r.succeeded]
        ys = [r.decoded_d_t for r in stats.trials if r.succeeded]
        ax.plot(xs, ys, ".", markersize=2, alpha=0.3)
        for m in stats.per_message:
            ax.plot([m.message.d_omega], [m.message.d_t], "r+", markersize=12)
        ax.set_xlabel("decoded d_omega (rad/ps)")
        ax.set_ylabel("decoded d_t (ps)")
        fig.tight_layout()
        return fig

    writer.svg("sdc_decoded.svg", draw)
    writer.finish()


def _qi_sources(config: RunConfig) -> list[tuple[float, QiSource]]:
    section = config.raw.get("qi")
    if not isinstance(section, dict):
        raise ConfigError("config must contain a 'qi' object")
    eps2_lambda0 = _get(section, "eps2_lambda0", float,
                        config.source.eps2_lambda0)
    sources: list[tuple[float, QiSource]] = []
    try:
        if "lambdas" in section:
            spec = SchmidtSpectrum.from_lambdas(
                [float(v) for v in section["lambdas"]]
            )
            src = QiSource(spec, eps2_lambda0)
            sources.append((1.0 / float(np.sum(spec.lambdas ** 2)), src))
        elif "sn_list" in section:
            for sn in section["sn_list"]:
                k = int(sn)
                if k < 1 or k != sn:
                    raise ConfigError("qi.sn_list entries must be positive integers")
                spec = SchmidtSpectrum.from_lambdas(np.full(k, 1.0 / k))
                sources.append((float(k), QiSource(spec, eps2_lambda0)))
        else:
            n_points = _get(section, "n_points", int, 512)
            grid_s, grid_i = default_grids(config.source, n_points=n_points)
            lam = schmidt_lambdas(gaussian_jsa(config.source, grid_s, grid_i))
            spec = SchmidtSpectrum.from_lambdas(lam[lam > 1e-300])
            src = QiSource(spec, eps2_lambda0)
            sources.append((1.0 / float(np.sum(spec.lambdas ** 2)), src))
    except ValueError as exc:
        raise ConfigError(f"qi source: {exc}") from exc
    return sources


def cmd_qi_run(config: RunConfig) -> None:
    section = config.raw.get("qi")
    if not isinstance(section, dict):
        raise ConfigError("config must contain a 'qi' object")
    channel = QiChannel(
        eta=_get(section, "eta", float, required=True),
        mu_b=_get(section, "mu_b", float, required=True),
    )
    shots = _get(section, "shots", int, 100_000)
    sources = _qi_sources(config)

    summary_rows = []
    mc_rows = []
    roc_qi_rows = []
    roc_ci_rows = []
    for sn, source in sources:
        p_closed = pd_qi(source, channel)
        n_modes = min(4096, len(source.spectrum.lambdas))
        p_oracle = qi_expectation_oracle(source, channel, n_modes=n_modes)
        if abs(p_closed - p_oracle) > ORACLE_TOL * max(p_closed, 1e-300):
            raise OracleMismatchError(
                f"closed form {p_closed!r} vs oracle {p_oracle!r} at SN={sn}"
            )
        noise_term = source.eps2_lambda0 * channel.mu_b / sn
        summary_rows.append(
            (sn, channel.eta, channel.mu_b, source.eps2_lambda0,
             p_closed, p_oracle, pd_ci(channel), noise_term)
        )
        absent = QiChannel(eta=0.0, mu_b=channel.mu_b)
        for protocol, roc_rows in (("qi", roc_qi_rows), ("ci-matched", roc_ci_rows)):
            result = run_discrimination(
                source, channel, absent, shots, seed=config.seed, protocol=protocol
            )
            mc_rows.append(
                (sn, protocol, "present", shots, result.count_present,
                 result.p_hat_present, *result.ci_present)
            )
            mc_rows.append(
                (sn, protocol, "absent", shots, result.count_absent,
                 result.p_hat_absent, *result.ci_absent)
            )
            roc_rows.extend((sn, t, pf, pd) for t, pf, pd in result.roc)

    writer = ArtifactWriter(config)
    writer.notes.append(
        "roc_ci_matched.csv rescales the classical baseline by eps2_lambda0 "
        "for a like-for-like overlay; qi_summary.csv pd_ci is the bare baseline"
    )
    writer.csv(
        "qi_summary.csv", "tfe.qi_summary.v1",
        ("sn", "eta", "mu_b", "eps2_lambda0", "pd_qi", "pd_oracle", "pd_ci",
         "noise_term"),
        summary_rows,
    )
    writer.csv(
        "qi_mc.csv", "tfe.qi_mc.v1",
        ("sn", "protocol", "hypothesis", "shots", "detections", "p_hat",
         "ci_low", "ci_high"),
        mc_rows,
    )
    writer.csv("roc_qi.csv", "tfe.qi_roc.v1",
               ("sn", "threshold", "p_fa", "p_detect"), roc_qi_rows)
    writer.csv("roc_ci_matched.csv", "tfe.qi_roc.v1",
               ("sn", "threshold", "p_fa", "p_detect"), roc_ci_rows)

    def draw(plt):
        fig, ax = plt.subplots(figsize=(5, 4))
        sns = sorted({row[0] for row in roc_qi_rows})
        for sn in sns:
            pts = [(r[2], r[3]) for r in roc_qi_rows if r[0] == sn]
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    label=f"pair probe, SN={sn:g}")
        pts = [(r[2], r[3]) for r in roc_ci_rows if r[0] == sns[-1]]
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "--",
                label="matched classical")
        ax.plot([0, 1], [0, 1], ":", color="gray")
        ax.set_xlabel("false-alarm rate")
        ax.set_ylabel("detection rate")
        ax.legend()
        fig.tight_layout()
        return fig

    writer.svg("qi_roc.svg", draw)
    writer.finish()


def cmd_schmidt(config: RunConfig) -> None:
    section = config.raw.get("schmidt", {})
    n_points = _get(section, "n_points", int, 512)
    multiplier = _get(section, "grid_multiplier", float, 7.0)
    rank_cut = _get(section, "rank_cut", int)
    grid_s, grid_i = default_grids(config.source, n_points=n_points,
                                   multiplier=multiplier)
    state = gaussian_jsa(config.source, grid_s, grid_i)
    spectrum = schmidt_decompose(state, rank_cut=rank_cut)

    writer = ArtifactWriter(config)
    writer.csv("lambdas.csv", "tfe.schmidt.v1", ("n", "lambda"),
               ((n, lam) for n, lam in enumerate(spectrum.lambdas)))

    def draw(plt):
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.semilogy(np.arange(len(spectrum.lambdas)), spectrum.lambdas, "o-")
        ax.set_xlabel("mode index")
        ax.set_ylabel("mode weight")
        fig.tight_layout()
        return fig

    writer.svg("lambdas.svg", draw)
    writer.finish()


COMMANDS = {
    "sfg-spectrum": cmd_sfg_spectrum,
    "sdc-sweep": cmd_sdc_sweep,
    "sdc-run": cmd_sdc_run,
    "qi-run": cmd_qi_run,
    "schmidt": cmd_schmidt,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfe",
        description="Photon-pair joint time-frequency measurement experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.experiment, args.seed, args.out)
        COMMANDS[args.experiment](config)
    except (ConfigError, CoverageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OracleMismatchError as exc:
        print(f"oracle mismatch: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
