"""Linear precoding (MRT, ZF), maximum-ratio combining, link evaluation,
and averaged spatial field maps for the scatterer scene."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ScattererScene, redraw_scatterers, scatterer_channel_matrix
from .errors import DegenerateChannelError, DimensionError, DomainError, RankError
from .numerics import Seed, pseudo_inverse
from .parallel import ordered_trial_map

POWER_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Precoder:
    """Downlink precoding matrix with columns per terminal stream."""

    w: np.ndarray  # M x K
    scheme: str
    power_budget: float

    def __post_init__(self):
        radiated = float(np.sum(np.abs(self.w) ** 2))
        if abs(radiated - self.power_budget) > POWER_TOLERANCE * max(self.power_budget, 1.0):
            raise DomainError(
                f"precoder radiates {radiated:.12g}, budget is {self.power_budget:.12g}"
            )


@dataclass(frozen=True)
class LinkReport:
    """Per-terminal downlink link quality (all powers linear)."""

    signal_power: np.ndarray
    interference_power: np.ndarray
    noise_power: float
    sinr: np.ndarray
    rate_bits_per_s_per_hz: np.ndarray

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rate_bits_per_s_per_hz))


def _stream_weights(k: int, per_user_weights) -> np.ndarray:
    if per_user_weights is None:
        return np.full(k, 1.0 / k)
    w = np.asarray(per_user_weights, dtype=float)
    if w.shape != (k,):
        raise DimensionError(f"need {k} per-user weights, got shape {w.shape}")
    if np.any(w < 0.0) or abs(float(np.sum(w)) - 1.0) > 1e-9:
        raise DomainError("per-user weights must be non-negative and sum to 1")
    return w


def mrt_precoder(h_hat: np.ndarray, power_budget: float, per_user_weights=None) -> Precoder:
    """Maximum-ratio transmission: columns proportional to the conjugated
    channel estimates, scaled so stream k radiates weights_k * power_budget."""
    h = np.asarray(h_hat, dtype=complex)
    if power_budget <= 0.0:
        raise DomainError("power budget must be positive")
    weights = _stream_weights(h.shape[1], per_user_weights)
    norms = np.linalg.norm(h, axis=0)
    if np.any((norms == 0.0) & (weights > 0.0)):
        raise DegenerateChannelError("cannot beamform toward an all-zero channel column")
    scale = np.sqrt(power_budget * weights) / np.where(norms == 0.0, 1.0, norms)
    return Precoder(w=np.conj(h) * scale, scheme="mrt", power_budget=power_budget)


def zf_precoder(h_hat: np.ndarray, power_budget: float, per_user_weights=None) -> Precoder:
    """Zero-forcing: columns from the channel pseudo-inverse, so the effective
    channel H^T W is diagonal under perfect CSI. Total-power normalisation."""
    h = np.asarray(h_hat, dtype=complex)
    if power_budget <= 0.0:
        raise DomainError("power budget must be positive")
    m, k = h.shape
    if k > m:
        raise RankError(f"zero-forcing needs K <= M, got K={k}, M={m}")
    weights = _stream_weights(k, per_user_weights)
    # pinv(H^T) = pinv(conj(H))^H; conj(H) is tall, so the column-rank check applies.
    directions = pseudo_inverse(np.conj(h)).conj().T
    norms = np.linalg.norm(directions, axis=0)
    scale = np.sqrt(power_budget * weights) / norms
    return Precoder(w=directions * scale, scheme="zf", power_budget=power_budget)


def mrc_combine(h_hat: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-terminal soft outputs: conjugate-channel combining H_hat^H Y."""
    h = np.asarray(h_hat, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != h.shape[0]:
        raise DimensionError(f"received block has {y.shape[0]} rows, channel has {h.shape[0]}")
    return h.conj().T @ y


def evaluate_downlink(h_true: np.ndarray, precoder: Precoder, noise_power: float) -> LinkReport:
    """Signal, interference, SINR, and rate per terminal for a precoded downlink."""
    h = np.asarray(h_true, dtype=complex)
    if noise_power < 0.0:
        raise DomainError("noise power must be >= 0")
    if h.shape != precoder.w.shape:
        raise DimensionError(f"channel {h.shape} and precoder {precoder.w.shape} differ")
    effective = h.T @ precoder.w  # entry (k, j): terminal k hearing stream j
    powers = np.abs(effective) ** 2
    signal = np.diag(powers).copy()
    interference = powers.sum(axis=1) - signal
    sinr = signal / (interference + noise_power)
    return LinkReport(
        signal_power=signal,
        interference_power=interference,
        noise_power=float(noise_power),
        sinr=sinr,
        rate_bits_per_s_per_hz=np.log2(1.0 + sinr),
    )


def budget_for_mean_desired_snr(
    h_true: np.ndarray, snr_linear: float, noise_power: float, per_user_weights=None
) -> float:
    """Transmit budget making the interference-free per-terminal SNR equal
    `snr_linear` on average over terminals, for this channel realisation."""
    h = np.asarray(h_true, dtype=complex)
    weights = _stream_weights(h.shape[1], per_user_weights)
    desired_per_budget = float(np.mean(weights * np.linalg.norm(h, axis=0) ** 2))
    if desired_per_budget == 0.0:
        raise DegenerateChannelError("all channel columns are zero")
    return snr_linear * noise_power / desired_per_budget


# ---------------------------------------------------------------------------
# Spatial field maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldMap:
    """Trial-averaged radiated power of the target stream over a grid.

    Powers are stored in dB relative to the spatial mean over the grid.
    `terminal_power_db` holds the same quantity at the exact terminal
    positions (index 0 is the target)."""

    x_lambda: np.ndarray
    y_lambda: np.ndarray
    power_db: np.ndarray  # (len(y), len(x))
    terminal_power_db: np.ndarray
    scheme: str
    trials: int

    @property
    def target_gain_db(self) -> float:
        return float(self.terminal_power_db[0])


def field_map(
    scene: ScattererScene,
    precoder_scheme: str,
    grid_x,
    grid_y,
    trials: int,
    seed: Seed,
    *,
    target_index: int = 0,
    power_budget: float = 1.0,
    min_amplitude_distance: float = 2.0,
    workers: int = 1,
) -> FieldMap:
    """Average |field|^2 of the target terminal's stream over random scatterer
    placements.

    Each trial redraws the scatterers, builds perfect-CSI channels to the
    scene terminals, forms the requested precoder, and evaluates the target
    stream's field at every grid point and at the terminals themselves. The
    terminal channels reuse the same ray sums, so zero-forcing nulls land on
    the exact terminal coordinates.

    The default amplitude floor of two wavelengths caps the near-field gain
    of rays whose scatterer lands next to an evaluation point; without it
    the trial average is dominated by those rare close encounters and the
    map needs far more than a few hundred placements to settle.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    if precoder_scheme not in ("mrt", "zf"):
        raise DomainError(f"unknown precoder scheme {precoder_scheme!r}")
    gx = np.asarray(grid_x, dtype=float)
    gy = np.asarray(grid_y, dtype=float)
    xs, ys = np.meshgrid(gx, gy)
    grid_points = np.column_stack([xs.ravel(), ys.ravel()])
    terminals = scene.terminal_positions
    eval_points = np.vstack([grid_points, terminals])
    n_grid = grid_points.shape[0]

    def one_trial(index: int) -> np.ndarray:
        trial_scene = redraw_scatterers(scene, seed.child(index))
        rays = scatterer_channel_matrix(trial_scene, eval_points, min_amplitude_distance)
        h = rays[n_grid:].T  # perfect CSI toward the K terminals
        if precoder_scheme == "mrt":
            precoder = mrt_precoder(h, power_budget)
        else:
            precoder = zf_precoder(h, power_budget)
        field = rays @ precoder.w[:, target_index]
        return np.abs(field) ** 2

    total = np.zeros(eval_points.shape[0])
    for trial_power in ordered_trial_map(one_trial, trials, workers):
        total += trial_power
    mean_power = total / trials
    spatial_mean = float(np.mean(mean_power[:n_grid]))
    with np.errstate(divide="ignore"):
        rel_db = 10.0 * np.log10(mean_power / spatial_mean)
    return FieldMap(
        x_lambda=gx,
        y_lambda=gy,
        power_db=rel_db[:n_grid].reshape(gy.size, gx.size),
        terminal_power_db=rel_db[n_grid:],
        scheme=precoder_scheme,
        trials=trials,
    )
