"""The named batch experiments and their CSV/JSON emission.

Every experiment is a pure function of its resolved configuration: trials
derive per-index sub-seeds, reductions run in trial order, and floats are
written in shortest round-trip form, so reruns are byte-identical no matter
how many workers execute the trials.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import __version__, capacity, channel, pilots, transceiver
from .config import ExperimentConfig
from .errors import ConfigError
from .numerics import EmpiricalCdf, Seed, singular_value_spread_db
from .parallel import ordered_trial_map


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: list[tuple]


@dataclass(frozen=True)
class ExperimentResult:
    experiment: str
    summary: dict
    tables: dict[str, Table]
    resolved_config: dict
    config_hash: str
    seed: int


def run(config: ExperimentConfig) -> ExperimentResult:
    """Execute the configured experiment and collect its tables and summary."""
    runner = _RUNNERS[config.experiment]
    summary, tables = runner(config)
    return ExperimentResult(
        experiment=config.experiment,
        summary=summary,
        tables=tables,
        resolved_config=config.resolved(),
        config_hash=config.config_hash(),
        seed=config.seed,
    )


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def emit_tables(result: ExperimentResult, output_dir) -> list[str]:
    """Write one CSV per table plus summary.json; returns the file paths."""
    os.makedirs(output_dir, exist_ok=True)
    written = []
    for name, table in result.tables.items():
        path = os.path.join(output_dir, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(table.header) + "\n")
            for row in table.rows:
                fh.write(",".join(_format_cell(cell) for cell in row) + "\n")
        written.append(path)
    summary_path = os.path.join(output_dir, "summary.json")
    payload = {
        "experiment": result.experiment,
        "seed": result.seed,
        "config_hash": result.config_hash,
        "version": __version__,
        "resolved_config": result.resolved_config,
        "metrics": result.summary,
    }
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    written.append(summary_path)
    return written


# ---------------------------------------------------------------------------
# svd-spread
# ---------------------------------------------------------------------------


def _run_svd_spread(config: ExperimentConfig):
    rows: list[tuple] = []
    medians: dict[str, float] = {}
    if config.channels_path is not None:
        measured = channel.load_measured_channels(config.channels_path)
        spreads = [
            singular_value_spread_db(measured.matrices[f]) for f in range(measured.f)
        ]
        rows.extend((measured.m, measured.k, f, s) for f, s in enumerate(spreads))
        medians[str(measured.m)] = EmpiricalCdf.from_samples(spreads, unit="dB").median
    else:
        k = config.params["k"]
        seed = Seed(config.seed)
        for mi, m in enumerate(config.params["m_list"]):
            def one_trial(t: int, mi=mi, m=m) -> float:
                h = channel.gen_iid_channel(seed.child(mi, t), m, k)
                return singular_value_spread_db(h)

            spreads = list(ordered_trial_map(one_trial, config.trials, config.workers))
            rows.extend((m, k, t, s) for t, s in enumerate(spreads))
            medians[str(m)] = EmpiricalCdf.from_samples(spreads, unit="dB").median
    summary = {"median_spread_db": medians}
    return summary, {"spread": Table(("M", "K", "trial", "spread_db"), rows)}


# ---------------------------------------------------------------------------
# mrt-sumrate
# ---------------------------------------------------------------------------


def _mrt_sum_rate(h: np.ndarray, snr_linear: float) -> float:
    budget = transceiver.budget_for_mean_desired_snr(h, snr_linear, noise_power=1.0)
    precoder = transceiver.mrt_precoder(h, budget)
    return transceiver.evaluate_downlink(h, precoder, noise_power=1.0).sum_rate


def _run_mrt_sumrate(config: ExperimentConfig):
    snr = 10.0 ** (config.params["target_snr_db"] / 10.0)
    k = config.params["k"]
    rows: list[tuple] = []
    means: dict[str, float] = {}
    if config.channels_path is not None:
        measured = channel.load_measured_channels(config.channels_path)
        rates = [_mrt_sum_rate(measured.matrices[f], snr) for f in range(measured.f)]
        rows.extend((measured.m, measured.k, f, r) for f, r in enumerate(rates))
        means[str(measured.m)] = float(np.mean(rates))
        k = measured.k
    else:
        seed = Seed(config.seed)
        for mi, m in enumerate(config.params["m_list"]):
            def one_trial(t: int, mi=mi, m=m) -> float:
                h = channel.gen_iid_channel(seed.child(mi, t), m, k)
                return _mrt_sum_rate(h, snr)

            rates = list(ordered_trial_map(one_trial, config.trials, config.workers))
            rows.extend((m, k, t, r) for t, r in enumerate(rates))
            means[str(m)] = float(np.mean(rates))
    summary = {
        "mean_sum_rate_bps_hz": means,
        "interference_free_ceiling_bps_hz": k * math.log2(1.0 + snr),
    }
    return summary, {"sumrate": Table(("M", "K", "realization", "sum_rate_bps_hz"), rows)}


# ---------------------------------------------------------------------------
# focusing-map
# ---------------------------------------------------------------------------


def _run_focusing_map(config: ExperimentConfig):
    p = config.params
    schemes = ("mrt", "zf") if p["scheme"] == "both" else (p["scheme"],)
    if any(s not in ("mrt", "zf") for s in schemes):
        raise ConfigError(f"focusing-map.scheme must be mrt, zf, or both, got {p['scheme']!r}")
    seed = Seed(config.seed)
    scene = channel.make_focusing_scene(
        seed.child(0),
        m_antennas=p["m"],
        n_scatterers=p["n_scatterers"],
        region_side_lambda=p["region_side_lambda"],
        bs_distance_lambda=p["bs_distance_lambda"],
        antenna_spacing_lambda=p["antenna_spacing_lambda"],
        other_user_offset_lambda=p["other_user_offset_lambda"],
    )
    grid = np.linspace(-p["grid_extent_lambda"], p["grid_extent_lambda"], p["grid_points"])
    tables: dict[str, Table] = {}
    summary: dict = {}
    for scheme in schemes:
        fmap = transceiver.field_map(
            scene,
            scheme,
            grid,
            grid,
            config.trials,
            seed.child(1),
            workers=config.workers,
        )
        rows = []
        for iy, y in enumerate(fmap.y_lambda):
            for ix, x in enumerate(fmap.x_lambda):
                rows.append((float(x), float(y), float(fmap.power_db[iy, ix])))
        tables[f"focusing_map_{scheme}"] = Table(("x_lambda", "y_lambda", "avg_power_db"), rows)
        summary[scheme] = {
            "target_gain_db": fmap.target_gain_db,
            "terminal_power_db": [float(v) for v in fmap.terminal_power_db],
        }
    return summary, tables


# ---------------------------------------------------------------------------
# ee-se-tradeoff
# ---------------------------------------------------------------------------


def _run_ee_se(config: ExperimentConfig):
    p = config.params
    rho_db = np.linspace(p["rho_min_db"], p["rho_max_db"], p["rho_points"])
    systems = capacity.default_tradeoff_systems(
        m_massive=p["m_massive"], k_massive=p["k_massive"], m_beamforming=p["m_beamforming"]
    )
    curves = capacity.ee_se_sweep(systems, 10.0 ** (rho_db / 10.0), p["coherence_symbols"])
    ref_se, ref_ee = curves["reference"].peak_ee_point()
    rows = []
    summary: dict = {"reference_peak": {"se_bps_hz": ref_se, "ee": ref_ee}}
    for label, curve in curves.items():
        ee_rel = curve.energy_efficiency / ref_ee
        for i in range(rho_db.size):
            rows.append(
                (
                    label,
                    float(rho_db[i]),
                    float(curve.spectral_efficiency[i]),
                    float(curve.energy_efficiency[i]),
                    float(ee_rel[i]),
                )
            )
        se_rel = curve.spectral_efficiency / ref_se
        witness = (se_rel >= 10.0) & (ee_rel >= 100.0)
        summary[label] = {
            "max_ee_relative": float(np.max(ee_rel)),
            "max_se_relative": float(np.max(se_rel)),
            "max_ee_relative_at_10x_se": float(np.max(ee_rel[se_rel >= 10.0], initial=0.0)),
            "has_10x_se_100x_ee_point": bool(np.any(witness)),
        }
    table = Table(("system", "rho_db", "se_bps_hz", "ee_bits_per_joule", "ee_relative"), rows)
    return summary, {"tradeoff": table}


# ---------------------------------------------------------------------------
# pilot-contamination
# ---------------------------------------------------------------------------


def _run_pilot_contamination(config: ExperimentConfig):
    p = config.params
    seed = Seed(config.seed)
    m_values = list(p["m_list"])
    rows = []
    mean_desired = []
    mean_directed = []
    for mi, m in enumerate(m_values + [p["m_limit"]]):
        sample = pilots.simulate_contamination(
            m,
            p["beta_home"],
            p["betas_contaminating"],
            p["rho_pilot"],
            p["tau"],
            config.trials,
            seed.child(mi),
        )
        for t in range(config.trials):
            rows.append((m, t, float(sample.desired[t]), float(sample.directed[t]), float(sample.noise[t])))
        if mi < len(m_values):
            mean_desired.append(float(np.mean(sample.desired)))
            mean_directed.append(float(np.mean(sample.directed)))
        elif float(np.mean(sample.directed)) == 0.0:
            sir_at_limit = math.inf
        else:
            sir_at_limit = 10.0 * math.log10(float(np.mean(sample.desired)) / float(np.mean(sample.directed)))
    log_m = np.log(np.asarray(m_values, dtype=float))
    desired_slope = float(np.polyfit(log_m, np.log(mean_desired), 1)[0])
    directed_slope = float(np.polyfit(log_m, np.log(mean_directed), 1)[0])
    limit = pilots.contamination_sir_limit_db(p["beta_home"], p["betas_contaminating"])
    summary = {
        "desired_power_loglog_slope": desired_slope,
        "directed_power_loglog_slope": directed_slope,
        "sir_limit_db": limit if math.isfinite(limit) else "unbounded",
        "sir_at_m_limit_db": sir_at_limit if math.isfinite(sir_at_limit) else "unbounded",
        "m_limit": p["m_limit"],
    }
    table = Table(("M", "trial", "desired_power", "directed_power", "noise_power"), rows)
    return summary, {"contamination": table}


# ---------------------------------------------------------------------------
# rural-broadband
# ---------------------------------------------------------------------------


def _run_rural(config: ExperimentConfig):
    p = dict(config.params)
    rural_config = capacity.RuralConfig(**p)
    result = capacity.rural_broadband(rural_config, Seed(config.seed), config.trials, config.workers)
    rows = []
    for d in range(config.trials):
        rows.append(
            (
                d,
                result.served,
                float(10.0 * np.log10(result.sinr[d])),
                float(result.equal_rate_mbps[d]),
                float(result.sum_throughput_gbps[d]),
            )
        )
    table = Table(("drop", "served", "sinr_db", "throughput_mbps", "sum_gbps"), rows)
    return result.summary(), {"rural": table}


_RUNNERS = {
    "svd-spread": _run_svd_spread,
    "mrt-sumrate": _run_mrt_sumrate,
    "focusing-map": _run_focusing_map,
    "ee-se-tradeoff": _run_ee_se,
    "pilot-contamination": _run_pilot_contamination,
    "rural-broadband": _run_rural,
}
