"""Channel generation: i.i.d. Rayleigh fading, geometric scatterer rays,
large-scale link budgets, terminal placement, and measured-channel files.

Conventions: channel matrices are M x K (rows = base-station antennas,
columns = terminals). Scatterer-scene coordinates are in wavelengths.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, GeometryError, ParseError
from .numerics import Seed, draw_complex_gaussian

# Rural link-budget anchors: 127 dB loss at 1 km with range-decay exponent 3.52.
PATH_LOSS_AT_1KM_DB = 127.0
PATH_LOSS_EXPONENT = 3.52

BASE_HEIGHT_M = 30.0
TERMINAL_HEIGHT_M = 5.0


def gen_iid_channel(seed: Seed, m: int, k: int) -> np.ndarray:
    """M x K channel with i.i.d. CN(0, 1) entries (unit average power)."""
    return draw_complex_gaussian(seed, m, k)


def path_loss_db(distance_km) -> np.ndarray | float:
    """Distance-dependent path loss in dB."""
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0.0):
        raise DomainError("path loss requires a strictly positive distance")
    loss = PATH_LOSS_AT_1KM_DB + 10.0 * PATH_LOSS_EXPONENT * np.log10(d)
    return float(loss) if np.isscalar(distance_km) else loss


def draw_shadow_db(seed: Seed, sigma_db: float, n: int | None = None):
    """Zero-mean log-normal shadow fading in dB with the given std deviation."""
    if sigma_db < 0.0:
        raise DomainError("shadow fading standard deviation must be >= 0 dB")
    rng = seed.generator()
    draws = sigma_db * rng.standard_normal(n if n is not None else 1)
    return draws if n is not None else float(draws[0])


def place_terminals(seed: Seed, n: int, radius_km: float, exclusion_km: float = 0.0) -> np.ndarray:
    """Drop `n` terminals uniformly over the annulus between the exclusion
    radius and the cell radius. Returns (n, 2) ground coordinates in km."""
    if n < 0:
        raise DomainError("terminal count must be >= 0")
    if not 0.0 <= exclusion_km < radius_km:
        raise DomainError("need 0 <= exclusion radius < cell radius")
    rng = seed.generator()
    # Uniform over area: CDF of the radial coordinate is (r^2 - r0^2)/(R^2 - r0^2).
    r = np.sqrt(rng.uniform(exclusion_km**2, radius_km**2, size=n))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def terminal_distance_km(
    positions: np.ndarray,
    base_height_m: float = BASE_HEIGHT_M,
    terminal_height_m: float = TERMINAL_HEIGHT_M,
) -> np.ndarray:
    """3-D distance from the array to each terminal, accounting for heights."""
    xy = np.asarray(positions, dtype=float).reshape(-1, 2)
    dz_km = (base_height_m - terminal_height_m) / 1000.0
    return np.sqrt(xy[:, 0] ** 2 + xy[:, 1] ** 2 + dz_km**2)


@dataclass(frozen=True)
class LargeScaleProfile:
    """Per-terminal slow-fading record.

    `beta` is the linear power gain composed from path loss, shadow fading,
    and antenna gains: beta = 10^((-path_loss + shadow + gains)/10). Receiver
    noise is accounted scenario-side, never inside beta.
    """

    distance_km: np.ndarray
    path_loss_db: np.ndarray
    shadow_db: np.ndarray
    beta: np.ndarray
    antenna_gains_db: tuple[float, float]  # (base station, terminal)

    def __len__(self) -> int:
        return self.beta.size


def build_large_scale_profile(
    positions: np.ndarray,
    seed: Seed,
    *,
    base_gain_db: float = 0.0,
    terminal_gain_db: float = 8.0,
    shadow_sigma_db: float = 8.0,
    base_height_m: float = BASE_HEIGHT_M,
    terminal_height_m: float = TERMINAL_HEIGHT_M,
) -> LargeScaleProfile:
    """Compose per-terminal slow-fading coefficients for the given drop."""
    xy = np.asarray(positions, dtype=float).reshape(-1, 2)
    if xy.shape[0] == 0:
        raise DomainError("need at least one terminal position")
    distance = terminal_distance_km(xy, base_height_m, terminal_height_m)
    loss = path_loss_db(distance)
    shadow = draw_shadow_db(seed, shadow_sigma_db, n=xy.shape[0])
    gains = base_gain_db + terminal_gain_db
    beta = 10.0 ** ((-loss + shadow + gains) / 10.0)
    return LargeScaleProfile(
        distance_km=distance,
        path_loss_db=loss,
        shadow_db=shadow,
        beta=beta,
        antenna_gains_db=(base_gain_db, terminal_gain_db),
    )


# ---------------------------------------------------------------------------
# Geometric scatterer model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScattererScene:
    """Single-bounce ray geometry: antennas, scatterers, and terminals in a
    rectangular region, all coordinates in wavelengths."""

    region: tuple[float, float]
    antenna_positions: np.ndarray
    scatterer_positions: np.ndarray
    terminal_positions: np.ndarray
    wavelength: float = 1.0

    def __post_init__(self):
        for name in ("antenna_positions", "scatterer_positions", "terminal_positions"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1, 2)
            object.__setattr__(self, name, arr)
        if self.wavelength <= 0.0:
            raise GeometryError("wavelength must be positive")
        if self.scatterer_positions.shape[0] < 1:
            raise GeometryError("scene needs at least one scatterer")
        if self.antenna_positions.shape[0] < 1:
            raise GeometryError("scene needs at least one antenna")

    @property
    def n_antennas(self) -> int:
        return self.antenna_positions.shape[0]


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=2))


def scatterer_channel_matrix(
    scene: ScattererScene,
    points,
    min_amplitude_distance: float = 0.0,
) -> np.ndarray:
    """Channels from every antenna to every evaluation point via single-bounce rays.

    Each path contributes exp(-j*2*pi*(d1+d2)/lambda) / (d1*d2) where d1 and
    d2 are the antenna-scatterer and scatterer-point legs. The phase always
    uses the exact distances; `min_amplitude_distance` floors only the leg
    lengths in the amplitude denominator, which keeps field maps finite when
    an evaluation point falls next to a scatterer. Returns (P, M) complex.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    d_ant = _pairwise_distances(scene.antenna_positions, scene.scatterer_positions)
    d_pts = _pairwise_distances(pts, scene.scatterer_positions)
    if np.any(d_ant == 0.0) or np.any(d_pts == 0.0):
        raise GeometryError("coincident antenna/scatterer/point produces a zero-length ray")
    d_ant = d_ant / scene.wavelength
    d_pts = d_pts / scene.wavelength
    floor = min_amplitude_distance
    amp_ant = 1.0 / (d_ant if floor <= 0.0 else np.maximum(d_ant, floor))
    amp_pts = 1.0 / (d_pts if floor <= 0.0 else np.maximum(d_pts, floor))
    # The ray sum factorises over the shared scatterer index.
    ant_leg = amp_ant * np.exp(-2j * np.pi * d_ant)
    pts_leg = amp_pts * np.exp(-2j * np.pi * d_pts)
    return pts_leg @ ant_leg.T


def scatterer_channel(scene: ScattererScene, target, min_amplitude_distance: float = 0.0) -> np.ndarray:
    """Length-M channel vector from the antenna array to one target point."""
    return scatterer_channel_matrix(scene, [target], min_amplitude_distance)[0]


def make_focusing_scene(
    seed: Seed,
    *,
    m_antennas: int = 64,
    n_scatterers: int = 400,
    region_side_lambda: float = 800.0,
    bs_distance_lambda: float = 1600.0,
    antenna_spacing_lambda: float = 4.0,
    other_user_offset_lambda: float = 40.0,
    n_other_users: int = 4,
) -> ScattererScene:
    """Scene with a target terminal at the region centre, nearby co-scheduled
    terminals, and a linear array placed `bs_distance_lambda` to the left.

    The default antenna spacing is several wavelengths so that the array
    aperture resolves the scatterer cloud; with half-wavelength spacing the
    channel would offer far fewer effective dimensions than antennas.
    """
    if n_other_users > 0 and other_user_offset_lambda <= 0.0:
        raise GeometryError("other users need a positive offset from the target")
    half = region_side_lambda / 2.0
    scatterers = draw_scatterers(seed, n_scatterers, region_side_lambda)
    array_y = (np.arange(m_antennas) - (m_antennas - 1) / 2.0) * antenna_spacing_lambda
    antennas = np.column_stack([np.full(m_antennas, -half - bs_distance_lambda), array_y])
    users = [(0.0, 0.0)]
    offsets = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)]
    for i in range(n_other_users):
        ox, oy = offsets[i % len(offsets)]
        users.append((ox * other_user_offset_lambda, oy * other_user_offset_lambda))
    return ScattererScene(
        region=(region_side_lambda, region_side_lambda),
        antenna_positions=antennas,
        scatterer_positions=scatterers,
        terminal_positions=np.asarray(users, dtype=float),
    )


def draw_scatterers(seed: Seed, n_scatterers: int, region_side_lambda: float) -> np.ndarray:
    """Uniform scatterer placement over the square region centred at the origin."""
    if n_scatterers < 1:
        raise GeometryError("need at least one scatterer")
    half = region_side_lambda / 2.0
    rng = seed.generator()
    return rng.uniform(-half, half, size=(n_scatterers, 2))


def redraw_scatterers(scene: ScattererScene, seed: Seed) -> ScattererScene:
    """Same geometry with a fresh scatterer placement (one Monte Carlo trial)."""
    scatterers = draw_scatterers(seed, scene.scatterer_positions.shape[0], scene.region[0])
    return dataclasses.replace(scene, scatterer_positions=scatterers)


# ---------------------------------------------------------------------------
# Measured-channel files (CFCSV v1)
# ---------------------------------------------------------------------------
#
# Line 1: "M,K,F" in ASCII decimal. Then F blocks of M lines; each line holds
# 2K comma-separated floats, re/im interleaved per terminal (k = 1..K).
# LF line endings, UTF-8/ASCII.


@dataclass(frozen=True)
class MeasuredChannelSet:
    """Channel matrices measured at F narrowband frequency points."""

    matrices: np.ndarray  # (F, M, K) complex

    def __post_init__(self):
        arr = np.asarray(self.matrices, dtype=complex)
        if arr.ndim != 3 or arr.shape[0] < 1:
            raise DimensionError("measured set must be (F, M, K) with F >= 1")
        object.__setattr__(self, "matrices", arr)

    @property
    def f(self) -> int:
        return self.matrices.shape[0]

    @property
    def m(self) -> int:
        return self.matrices.shape[1]

    @property
    def k(self) -> int:
        return self.matrices.shape[2]


def load_measured_channels(path) -> MeasuredChannelSet:
    """Parse a CFCSV v1 file; errors carry the offending line number."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty file", line=1)
    header = lines[0].split(",")
    if len(header) != 3:
        raise ParseError(f"header must be 'M,K,F', got {lines[0]!r}", line=1)
    try:
        m, k, f = (int(tok.strip()) for tok in header)
    except ValueError:
        raise ParseError(f"non-integer header field in {lines[0]!r}", line=1) from None
    if m < 1 or k < 1 or f < 1:
        raise ParseError("header dimensions must all be >= 1", line=1)
    expected = 1 + m * f
    if len(lines) != expected:
        raise ParseError(
            f"expected {expected} lines for M={m}, F={f}, found {len(lines)}",
            line=len(lines),
        )
    matrices = np.empty((f, m, k), dtype=complex)
    for block in range(f):
        for row in range(m):
            lineno = 2 + block * m + row
            tokens = lines[lineno - 1].split(",")
            if len(tokens) != 2 * k:
                raise ParseError(
                    f"expected {2 * k} values (re,im per terminal), found {len(tokens)}",
                    line=lineno,
                )
            try:
                values = [float(tok) for tok in tokens]
            except ValueError:
                raise ParseError(f"non-numeric token in {lines[lineno - 1]!r}", line=lineno) from None
            re = np.array(values[0::2])
            im = np.array(values[1::2])
            matrices[block, row, :] = re + 1j * im
    return MeasuredChannelSet(matrices=matrices)


def save_measured_channels(matrices, path) -> None:
    """Write a CFCSV v1 file; shortest round-trip decimal formatting."""
    arr = np.asarray(matrices, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise DimensionError("expected (F, M, K) or (M, K) channel data")
    f, m, k = arr.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{m},{k},{f}\n")
        for block in range(f):
            for row in range(m):
                parts = []
                for col in range(k):
                    z = arr[block, row, col]
                    parts.append(repr(float(z.real)))
                    parts.append(repr(float(z.imag)))
                fh.write(",".join(parts) + "\n")
