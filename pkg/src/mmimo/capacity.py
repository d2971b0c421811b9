"""Achievable-rate lower bounds with pilot overhead, energy/spectral
efficiency sweeps, max-min power control, and the rural broadband scenario.

All closed forms assume i.i.d. Rayleigh small-scale fading with MMSE channel
estimates of per-terminal quality gamma = rho_p tau beta^2 / (1 + rho_p tau
beta). They are lower bounds: the Monte Carlo simulators in this module
evaluate the same estimator and receiver directly and must always sit at or
above them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import build_large_scale_profile, place_terminals
from .errors import ConfigError, DimensionError, DomainError, RankError
from .numerics import Seed, draw_complex_gaussian
from .parallel import ordered_trial_map

THERMAL_NOISE_DBM_PER_HZ = -174.0

_SCHEMES = ("mrc", "zf")


def noise_power_w(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Receiver noise floor in watts for the given bandwidth and noise figure."""
    if bandwidth_hz <= 0.0:
        raise DomainError("bandwidth must be positive")
    dbm = THERMAL_NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return 10.0 ** (dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class SystemParams:
    """Scalar system description for the closed-form bounds.

    Transmit SNRs are linear and per terminal unless noted; `tau` and
    `coherence_symbols` fix the pilot overhead prefactor 1 - tau/T.
    """

    m: int
    k: int
    tau: int
    coherence_symbols: int
    rho_ul: float | None = None
    rho_dl: float | None = None
    rho_pilot: float | None = None

    def __post_init__(self):
        if self.m < 1 or self.k < 1:
            raise DomainError("antenna and terminal counts must be >= 1")
        if not 0 < self.tau <= self.coherence_symbols:
            raise DomainError("need 0 < tau <= coherence interval (no payload left beyond tau = T)")
        for name in ("rho_ul", "rho_dl", "rho_pilot"):
            value = getattr(self, name)
            if value is not None and value <= 0.0:
                raise DomainError(f"{name} must be positive when given")

    @property
    def overhead_prefactor(self) -> float:
        return 1.0 - self.tau / self.coherence_symbols

    @property
    def pilot_snr(self) -> float:
        rho = self.rho_pilot if self.rho_pilot is not None else self.rho_ul
        if rho is None:
            raise DomainError("neither rho_pilot nor rho_ul is set")
        return rho


def estimate_quality(betas, rho_pilot: float, tau: int) -> np.ndarray:
    """Mean-square of the MMSE channel estimate per terminal (gamma <= beta)."""
    b = np.asarray(betas, dtype=float)
    energy = rho_pilot * tau
    return energy * b**2 / (1.0 + energy * b)


def ul_mrc_sinr(m: int, rho_ul: float, betas, gammas) -> np.ndarray:
    """Effective uplink SINR of the conjugate combiner with estimated CSI.

    Two standard lower-bound forms exist for this receiver; the (m - 1)
    variant is usually tighter but degenerates at m = 1, so the elementwise
    best of the two is used (both individually lower-bound the same rate).
    """
    b = np.asarray(betas, dtype=float)
    g = np.asarray(gammas, dtype=float)
    total = float(np.sum(b))
    tight = rho_ul * (m - 1) * g / (1.0 + rho_ul * total - rho_ul * g)
    hardening = rho_ul * m * g / (1.0 + rho_ul * total)
    return np.maximum(tight, hardening)


def ul_zf_sinr(m: int, rho_ul: float, betas, gammas) -> np.ndarray:
    """Effective uplink SINR of the zero-forcing receiver with estimated CSI."""
    b = np.asarray(betas, dtype=float)
    g = np.asarray(gammas, dtype=float)
    if b.size >= m:
        raise RankError(f"zero-forcing bound needs K < M, got K={b.size}, M={m}")
    residual = float(np.sum(b - g))
    return rho_ul * (m - b.size) * g / (1.0 + rho_ul * residual)


def dl_mrt_sinr(m: int, rho_dl: float, betas, gammas, eta) -> np.ndarray:
    """Effective downlink SINR under conjugate beamforming with power
    fractions `eta` (statistically normalised streams, total-power budget)."""
    b = np.asarray(betas, dtype=float)
    g = np.asarray(gammas, dtype=float)
    e = np.asarray(eta, dtype=float)
    if np.any(e < 0.0):
        raise DomainError("power fractions must be >= 0")
    if float(np.sum(e)) > 1.0 + 1e-9:
        raise DomainError("power fractions must sum to at most 1")
    return rho_dl * m * e * g / (1.0 + rho_dl * b * float(np.sum(e)))


def ul_rate_bound(params: SystemParams, scheme: str, betas) -> np.ndarray:
    """Per-terminal net uplink rate bound in bits/s/Hz, pilot overhead included."""
    if scheme not in _SCHEMES:
        raise DomainError(f"scheme must be one of {_SCHEMES}")
    if params.rho_ul is None:
        raise DomainError("uplink bound needs rho_ul")
    b = np.asarray(betas, dtype=float)
    if b.size != params.k:
        raise DimensionError(f"need {params.k} slow-fading coefficients, got {b.size}")
    g = estimate_quality(b, params.pilot_snr, params.tau)
    if scheme == "mrc":
        sinr = ul_mrc_sinr(params.m, params.rho_ul, b, g)
    else:
        sinr = ul_zf_sinr(params.m, params.rho_ul, b, g)
    return params.overhead_prefactor * np.log2(1.0 + sinr)


# ---------------------------------------------------------------------------
# Monte Carlo rate simulation (validation oracle for the closed forms)
# ---------------------------------------------------------------------------


def _draw_estimated_channels(seed: Seed, m: int, betas: np.ndarray, rho_pilot: float, tau: int, draws: int):
    """True channels and their MMSE estimates for a batch of realisations.

    Pilot reception is reduced to its sufficient statistic: the per-terminal
    least-squares estimate equals the true channel plus CN(0, 1/(rho_p tau))
    noise, then MMSE-rescaled.
    """
    k = betas.size
    h = draw_complex_gaussian(seed.child(0), m, k * draws).reshape(m, k, draws) * np.sqrt(
        betas[None, :, None]
    )
    est_noise = draw_complex_gaussian(seed.child(1), m, k * draws).reshape(m, k, draws)
    energy = rho_pilot * tau
    scale = (energy * betas / (1.0 + energy * betas))[None, :, None]
    h_hat = scale * (h + est_noise / math.sqrt(energy))
    return h, h_hat


def simulate_ul_rates(
    params: SystemParams,
    scheme: str,
    betas,
    seed: Seed,
    n_draws: int = 10_000,
    batch: int = 250,
) -> np.ndarray:
    """Ergodic per-terminal net uplink rate of the actual receiver, averaged
    over channel and estimation noise. Upper-bounds the closed forms."""
    if scheme not in _SCHEMES:
        raise DomainError(f"scheme must be one of {_SCHEMES}")
    if params.rho_ul is None:
        raise DomainError("uplink simulation needs rho_ul")
    b = np.asarray(betas, dtype=float)
    rho = params.rho_ul
    total_rate = np.zeros(b.size)
    done = 0
    index = 0
    while done < n_draws:
        count = min(batch, n_draws - done)
        h, h_hat = _draw_estimated_channels(seed.child(index), params.m, b, params.pilot_snr, params.tau, count)
        if scheme == "mrc":
            combiner = h_hat
        else:
            combiner = np.empty_like(h_hat)
            for d in range(count):
                # rows of pinv(H_hat^H)^H = combiner columns satisfying A^H H_hat = I
                combiner[:, :, d] = np.linalg.pinv(h_hat[:, :, d]).conj().T
        cross = np.einsum("mkd,mjd->kjd", combiner.conj(), h)
        powers = np.abs(cross) ** 2
        signal = np.einsum("kkd->kd", powers)
        interference = powers.sum(axis=1) - signal
        combiner_norm = np.sum(np.abs(combiner) ** 2, axis=0)
        sinr = rho * signal / (rho * interference + combiner_norm)
        total_rate += np.sum(np.log2(1.0 + sinr), axis=1)
        done += count
        index += 1
    return params.overhead_prefactor * total_rate / n_draws


def simulate_dl_rates(
    params: SystemParams,
    betas,
    eta,
    seed: Seed,
    n_draws: int = 10_000,
    batch: int = 250,
) -> np.ndarray:
    """Ergodic per-terminal net downlink rate under conjugate beamforming with
    statistically normalised streams (the convention of `dl_mrt_sinr`)."""
    if params.rho_dl is None:
        raise DomainError("downlink simulation needs rho_dl")
    b = np.asarray(betas, dtype=float)
    e = np.asarray(eta, dtype=float)
    g = estimate_quality(b, params.pilot_snr, params.tau)
    stream_scale = np.sqrt(params.rho_dl * e / (params.m * g))
    total_rate = np.zeros(b.size)
    done = 0
    index = 0
    while done < n_draws:
        count = min(batch, n_draws - done)
        h, h_hat = _draw_estimated_channels(seed.child(index), params.m, b, params.pilot_snr, params.tau, count)
        w = np.conj(h_hat) * stream_scale[None, :, None]
        cross = np.einsum("mkd,mjd->kjd", h, w)
        powers = np.abs(cross) ** 2
        signal = np.einsum("kkd->kd", powers)
        interference = powers.sum(axis=1) - signal
        sinr = signal / (interference + 1.0)
        total_rate += np.sum(np.log2(1.0 + sinr), axis=1)
        done += count
        index += 1
    return params.overhead_prefactor * total_rate / n_draws


# ---------------------------------------------------------------------------
# Energy efficiency / spectral efficiency tradeoff
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSystem:
    """One curve of the tradeoff sweep."""

    label: str
    m: int
    k: int
    scheme: str = "mrc"

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise DomainError(f"scheme must be one of {_SCHEMES}")


@dataclass(frozen=True)
class SweepCurve:
    rho: np.ndarray
    spectral_efficiency: np.ndarray  # sum bits/s/Hz, overhead included
    energy_efficiency: np.ndarray  # bits per unit radiated energy

    def peak_ee_point(self) -> tuple[float, float]:
        i = int(np.argmax(self.energy_efficiency))
        return float(self.spectral_efficiency[i]), float(self.energy_efficiency[i])


def default_tradeoff_systems(m_massive: int = 100, k_massive: int = 40, m_beamforming: int = 100):
    """Reference single-antenna link, single-terminal beamforming, and the
    multi-terminal array with both linear receivers."""
    return (
        SweepSystem("reference", 1, 1, "mrc"),
        SweepSystem("beamforming", m_beamforming, 1, "mrc"),
        SweepSystem("mrc", m_massive, k_massive, "mrc"),
        SweepSystem("zf", m_massive, k_massive, "zf"),
    )


def ee_se_sweep(
    systems,
    rho_grid,
    coherence_symbols: int = 196,
) -> dict[str, SweepCurve]:
    """Sweep per-terminal transmit SNR and trace each system's (SE, EE) curve.

    Pilots are as short as orthogonality allows (tau = K) and are sent at the
    data power, so the average radiated power per terminal equals rho and
    EE = SE / (K rho). Unit slow fading throughout.
    """
    rho = np.asarray(rho_grid, dtype=float)
    if rho.size == 0:
        raise DomainError("transmit SNR sweep grid is empty")
    if np.any(rho <= 0.0):
        raise DomainError("sweep grid must be positive")
    curves = {}
    for system in systems:
        betas = np.ones(system.k)
        se = np.empty(rho.size)
        for i, r in enumerate(rho):
            params = SystemParams(
                m=system.m,
                k=system.k,
                tau=system.k,
                coherence_symbols=coherence_symbols,
                rho_ul=float(r),
            )
            se[i] = float(np.sum(ul_rate_bound(params, system.scheme, betas)))
        ee = se / (system.k * rho)
        curves[system.label] = SweepCurve(rho=rho.copy(), spectral_efficiency=se, energy_efficiency=ee)
    return curves


def power_scaling_check(
    exponent: float,
    m_values,
    *,
    energy: float = 1.0,
    k: int = 1,
    tau: int | None = None,
    coherence_symbols: int = 196,
) -> np.ndarray:
    """Per-terminal rate along an antenna ladder when transmit power is cut
    as energy / M^exponent (pilot power scales identically)."""
    if exponent not in (0.0, 0.5, 1.0):
        raise DomainError("scale exponent must be 0, 0.5, or 1")
    tau = k if tau is None else tau
    betas = np.ones(k)
    rates = np.empty(len(m_values))
    for i, m in enumerate(m_values):
        rho = energy / float(m) ** exponent
        params = SystemParams(m=int(m), k=k, tau=tau, coherence_symbols=coherence_symbols, rho_ul=rho)
        rates[i] = float(ul_rate_bound(params, "mrc", betas)[0])
    return rates


# ---------------------------------------------------------------------------
# Max-min power control
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerControl:
    """Per-terminal downlink power fractions with the excluded set."""

    eta: np.ndarray
    dropped: tuple[int, ...]
    sinr: float

    @property
    def served(self) -> np.ndarray:
        mask = np.ones(self.eta.size, dtype=bool)
        mask[list(self.dropped)] = False
        return np.flatnonzero(mask)


def maxmin_power_control(
    betas,
    gammas,
    rho_dl: float,
    m: int,
    drop_fraction: float = 0.05,
) -> PowerControl:
    """Equalise the downlink conjugate-beamforming SINR across served terminals.

    The weakest `drop_fraction` of terminals by slow fading are excluded
    (ties broken by terminal index), then the full power budget is split so
    every served terminal sees the same effective SINR. With the total-power
    constraint the equalising split is closed-form:
    eta_k proportional to (1 + rho_dl beta_k) / gamma_k.
    """
    b = np.asarray(betas, dtype=float)
    g = np.asarray(gammas, dtype=float)
    if b.size == 0:
        raise DomainError("no terminals to serve")
    if b.shape != g.shape:
        raise DimensionError("betas and gammas must align")
    if np.any(b <= 0.0) or np.any(g <= 0.0):
        raise DomainError("slow-fading and estimate-quality coefficients must be positive")
    if not 0.0 <= drop_fraction < 1.0:
        raise DomainError("drop fraction must be in [0, 1)")
    n_drop = int(math.floor(drop_fraction * b.size))
    order = np.argsort(b, kind="stable")
    dropped = tuple(sorted(int(i) for i in order[:n_drop]))
    served = order[n_drop:]
    if served.size == 0:
        raise DomainError("power control dropped every terminal")
    cost = (1.0 + rho_dl * b[served]) / (rho_dl * m * g[served])
    sinr = 1.0 / float(np.sum(cost))
    eta = np.zeros(b.size)
    eta[served] = sinr * cost
    return PowerControl(eta=eta, dropped=dropped, sinr=sinr)


# ---------------------------------------------------------------------------
# Rural broadband scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuralConfig:
    """Fixed-wireless scenario: one large array serving a rural cell.

    The defaults are the pinned scenario; changing any of them raises unless
    `allow_override` is set (sensitivity studies only).
    """

    m: int = 6400
    n_terminals: int = 1000
    total_power_w: float = 120.0
    bandwidth_hz: float = 20e6
    carrier_hz: float = 1.9e9
    radius_km: float = 6.0
    exclusion_km: float = 0.035
    pilot_fraction: float = 0.25
    coherence_s: float = 0.164
    noise_figure_db: float = 9.0
    terminal_gain_db: float = 8.0
    base_gain_db: float = 0.0
    shadow_sigma_db: float = 8.0
    drop_fraction: float = 0.05
    terminal_pilot_power_w: float = 0.1
    allow_override: bool = False

    # Scenario invariants; terminal_pilot_power_w is deliberately free because
    # the scenario only requires pilots accurate enough that gamma ~ beta.
    _PINNED = (
        ("m", 6400),
        ("n_terminals", 1000),
        ("total_power_w", 120.0),
        ("bandwidth_hz", 20e6),
        ("carrier_hz", 1.9e9),
        ("radius_km", 6.0),
        ("pilot_fraction", 0.25),
        ("noise_figure_db", 9.0),
        ("terminal_gain_db", 8.0),
        ("shadow_sigma_db", 8.0),
    )

    def __post_init__(self):
        if self.allow_override:
            return
        for name, pinned in self._PINNED:
            if getattr(self, name) != pinned:
                raise ConfigError(
                    f"rural scenario pins {name}={pinned}; set allow_override to study {getattr(self, name)}"
                )


@dataclass(frozen=True)
class RuralResult:
    """Monte Carlo outcome over placement/shadow drops."""

    equal_rate_mbps: np.ndarray  # per drop, the rate every served terminal gets
    sinr: np.ndarray
    served: int
    n_terminals: int
    pilot_quality_min: float  # min over drops of min_k gamma_k / beta_k
    sensitivity_mbps: dict

    @property
    def sum_throughput_gbps(self) -> np.ndarray:
        return self.equal_rate_mbps * self.served / 1000.0

    def throughput_95_likely_mbps(self) -> float:
        """Throughput exceeded by 95% of served terminals over the ensemble.

        Every served terminal in a drop gets the drop's equalised rate, so
        this is the 5th percentile of that rate across drops."""
        return float(np.quantile(self.equal_rate_mbps, 0.05))

    def summary(self) -> dict:
        rate = self.equal_rate_mbps
        return {
            "served_per_drop": self.served,
            "throughput_95_likely_mbps": self.throughput_95_likely_mbps(),
            "throughput_per_terminal_mbps_mean": float(np.mean(rate)),
            "throughput_per_terminal_mbps_median": float(np.median(rate)),
            "sum_throughput_gbps_mean": float(np.mean(self.sum_throughput_gbps)),
            "sum_spectral_efficiency_bps_hz": float(
                np.mean(self.sum_throughput_gbps) * 1e9 / 20e6
            ),
            "pilot_quality_min": self.pilot_quality_min,
            "sensitivity_mbps": self.sensitivity_mbps,
        }


def _rural_equal_rate(config: RuralConfig, betas: np.ndarray, pilot_scale: float = 1.0):
    """Equalised per-terminal throughput for one drop's slow-fading draw."""
    noise = noise_power_w(config.bandwidth_hz, config.noise_figure_db)
    rho_dl = config.total_power_w / noise
    rho_pilot = pilot_scale * config.terminal_pilot_power_w / noise
    tau = int(round(config.pilot_fraction * config.coherence_s * config.bandwidth_hz))
    gammas = estimate_quality(betas, rho_pilot, tau)
    control = maxmin_power_control(betas, gammas, rho_dl, config.m, config.drop_fraction)
    prefactor = 1.0 - config.pilot_fraction
    rate_mbps = prefactor * math.log2(1.0 + control.sinr) * config.bandwidth_hz / 1e6
    served = control.served
    quality = float(np.min(gammas[served] / betas[served]))
    return rate_mbps, control, quality


def rural_broadband(config: RuralConfig, seed: Seed, drops: int, workers: int = 1) -> RuralResult:
    """Monte Carlo over terminal placement and shadow fading.

    Each drop re-places the terminals, rebuilds the slow-fading profile, runs
    max-min power control over the served set, and evaluates the conjugate
    beamforming rate bound. Only slow-fading scalars are handled, so the
    array size never materialises as a matrix. The summary also reports the
    throughput under 10x weaker and 10x stronger pilots, since the scenario
    fixes only that pilots are accurate enough.
    """
    if drops < 1:
        raise DomainError("need at least one drop")

    def one_drop(index: int):
        drop_seed = seed.child(index)
        positions = place_terminals(
            drop_seed.child(0), config.n_terminals, config.radius_km, config.exclusion_km
        )
        profile = build_large_scale_profile(
            positions,
            drop_seed.child(1),
            base_gain_db=config.base_gain_db,
            terminal_gain_db=config.terminal_gain_db,
            shadow_sigma_db=config.shadow_sigma_db,
        )
        rate, control, quality = _rural_equal_rate(config, profile.beta)
        weaker, _, _ = _rural_equal_rate(config, profile.beta, pilot_scale=0.1)
        stronger, _, _ = _rural_equal_rate(config, profile.beta, pilot_scale=10.0)
        return rate, control.sinr, len(control.served), quality, weaker, stronger

    rows = list(ordered_trial_map(one_drop, drops, workers))
    rates = np.array([r[0] for r in rows])
    sinrs = np.array([r[1] for r in rows])
    served_counts = {r[2] for r in rows}
    if len(served_counts) != 1:
        raise DomainError(f"served count varied across drops: {sorted(served_counts)}")
    return RuralResult(
        equal_rate_mbps=rates,
        sinr=sinrs,
        served=served_counts.pop(),
        n_terminals=config.n_terminals,
        pilot_quality_min=float(min(r[3] for r in rows)),
        sensitivity_mbps={
            "pilot_power_x0.1_mean": float(np.mean([r[4] for r in rows])),
            "pilot_power_x10_mean": float(np.mean([r[5] for r in rows])),
        },
    )


__all__ = [
    "SystemParams",
    "SweepSystem",
    "SweepCurve",
    "PowerControl",
    "RuralConfig",
    "RuralResult",
    "noise_power_w",
    "estimate_quality",
    "ul_mrc_sinr",
    "ul_zf_sinr",
    "dl_mrt_sinr",
    "ul_rate_bound",
    "simulate_ul_rates",
    "simulate_dl_rates",
    "default_tradeoff_systems",
    "ee_se_sweep",
    "power_scaling_check",
    "maxmin_power_control",
    "rural_broadband",
]
