"""Downlink link budget and ground-level coverage of an airborne cell.

All powers are in dBm, gains in dBi and losses/margins in dB. Propagation is
line-of-sight free space over a flat earth, with no co-channel interference::

    P_r = P_t + G_t - L_fs + G_UE - F
    SNR = P_r - N_th - F_UE,   N_th = 10 log10(k_B T BW) + 30
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _marching
from .errors import DomainError, GridSizeError

BOLTZMANN = 1.380649e-23  # J/K
SPEED_OF_LIGHT = 2.998e8  # m/s
_FSPL_CONST_DB = 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)

ALTITUDE_RANGE_M = (300.0, 4000.0)
DEFAULT_MAX_CELLS = 25_000_000


@dataclass(frozen=True)
class LinkBudgetParams:
    carrier_freq_hz: float = 795.5e6
    bandwidth_hz: float = 10e6
    tx_power_dbm: float = 30.0
    tx_antenna_gain_dbi: float = 3.0
    ue_antenna_gain_dbi: float = 0.0
    ue_noise_figure_db: float = 7.0
    fading_margin_db: float = 4.0
    temperature_k: float = 293.15

    def __post_init__(self):
        for name in ("carrier_freq_hz", "bandwidth_hz", "temperature_k"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        for name in ("fading_margin_db", "ue_noise_figure_db"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be non-negative, got {v!r}")
        for name in ("tx_power_dbm", "tx_antenna_gain_dbi", "ue_antenna_gain_dbi"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class AerialPlatform:
    ground_position: tuple[float, float] = (0.0, 0.0)
    altitude_m: float = 300.0

    def __post_init__(self):
        if not (math.isfinite(self.altitude_m) and self.altitude_m > 0):
            raise DomainError(f"altitude_m must be positive, got {self.altitude_m!r}")
        lo, hi = ALTITUDE_RANGE_M
        if not lo <= self.altitude_m <= hi:
            warnings.warn(
                f"altitude {self.altitude_m} m outside the usual {lo:g}-{hi:g} m range",
                stacklevel=3,
            )
        object.__setattr__(self, "ground_position",
                           (float(self.ground_position[0]), float(self.ground_position[1])))


@dataclass(frozen=True)
class SnrGrid:
    """Cell-centre samples; ``values[j, i]`` sits at ``origin + (i, j) * spacing_m``."""

    origin: tuple[float, float]
    spacing_m: float
    nx: int
    ny: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.spacing_m > 0:
            raise DomainError("spacing_m must be positive")
        if self.nx < 1 or self.ny < 1:
            raise DomainError("grid must have at least one cell")
        values = np.asarray(self.values, dtype=np.float64).reshape(self.ny, self.nx)
        if not np.all(np.isfinite(values)):
            raise DomainError("grid values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.spacing_m * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.spacing_m * np.arange(self.ny)

    def to_text(self, header: dict | None = None) -> str:
        xs, ys = self.x, self.y
        lines = _comment_header(header)
        lines.append("x_m,y_m,snr_db")
        for j in range(self.ny):
            row = self.values[j]
            y = ys[j]
            lines.extend(f"{xs[i]:.6f},{y:.6f},{row[i]:.6f}" for i in range(self.nx))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Isoline:
    level_db: float
    polylines: list  # of (m, 2) arrays in metres

    def to_text(self) -> str:
        blocks = []
        for line in self.polylines:
            rows = [f"level_db={self.level_db:.6f}", "x_m,y_m"]
            rows.extend(f"{x:.6f},{y:.6f}" for x, y in line)
            blocks.append("\n".join(rows))
        return "\n\n".join(blocks)


def _comment_header(header):
    return [f"# {k}={v}" for k, v in (header or {}).items()]


def isolines_to_text(isolines: list[Isoline], header: dict | None = None) -> str:
    parts = ["\n".join(_comment_header(header))] if header else []
    parts.extend(iso.to_text() for iso in isolines if iso.polylines)
    return "\n\n".join(parts) + "\n"


def _check_positive(name, value):
    if not (np.all(np.isfinite(value)) and np.all(np.asarray(value) > 0)):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


def free_space_path_loss_db(distance_m, freq_hz):
    """Friis free-space loss; accepts scalars or arrays of distance."""
    _check_positive("distance_m", distance_m)
    _check_positive("freq_hz", freq_hz)
    loss = 20.0 * np.log10(distance_m) + 20.0 * np.log10(freq_hz) + _FSPL_CONST_DB
    return float(loss) if np.ndim(loss) == 0 else loss


def thermal_noise_dbm(bandwidth_hz: float, temperature_k: float = 293.15) -> float:
    _check_positive("bandwidth_hz", bandwidth_hz)
    _check_positive("temperature_k", temperature_k)
    return 10.0 * math.log10(BOLTZMANN * temperature_k * bandwidth_hz) + 30.0


def received_power_dbm(params: LinkBudgetParams, slant_distance_m):
    loss = free_space_path_loss_db(slant_distance_m, params.carrier_freq_hz)
    return (params.tx_power_dbm + params.tx_antenna_gain_dbi - loss
            + params.ue_antenna_gain_dbi - params.fading_margin_db)


def snr_db(params: LinkBudgetParams, slant_distance_m):
    noise = thermal_noise_dbm(params.bandwidth_hz, params.temperature_k)
    return received_power_dbm(params, slant_distance_m) - noise - params.ue_noise_figure_db


def snr_grid(platform: AerialPlatform, params: LinkBudgetParams, half_extent_m: float,
             spacing_m: float, *, max_cells: int = DEFAULT_MAX_CELLS,
             workers: int = 1) -> SnrGrid:
    """SNR on a square ground grid centred on the platform nadir.

    The grid has ``2 * round(half_extent_m / spacing_m) + 1`` cells per side so
    that the nadir is a cell centre. Rows may be evaluated by several threads;
    the values do not depend on ``workers``.
    """
    _check_positive("half_extent_m", half_extent_m)
    _check_positive("spacing_m", spacing_m)
    half = int(round(half_extent_m / spacing_m))
    n = 2 * half + 1
    if n * n > max_cells:
        raise GridSizeError(f"{n}x{n} grid exceeds the cap of {max_cells} cells")
    px, py = platform.ground_position
    offsets = spacing_m * np.arange(-half, half + 1)
    dx2 = offsets * offsets
    h2 = platform.altitude_m ** 2
    values = np.empty((n, n))

    def fill(rows):
        for j in rows:
            values[j] = snr_db(params, np.sqrt(h2 + dx2[j] + dx2))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, np.array_split(np.arange(n), workers)))
    else:
        fill(range(n))
    return SnrGrid(origin=(px + offsets[0], py + offsets[0]), spacing_m=spacing_m,
                   nx=n, ny=n, values=values)


def contour_radius_m(platform: AerialPlatform, params: LinkBudgetParams,
                     target_snr_db: float) -> float | None:
    """Ground radius at which the SNR equals ``target_snr_db``.

    ``None`` when the target exceeds the nadir SNR.
    """
    if not math.isfinite(target_snr_db):
        raise DomainError("target_snr_db must be finite")
    h = platform.altitude_m
    margin = snr_db(params, h) - target_snr_db
    if margin < 0:
        return None
    # SNR falls 20 dB/decade of slant range: d^2 = h^2 * 10^(margin/10)
    return h * math.sqrt(math.expm1(margin * math.log(10.0) / 10.0))


def extract_isolines(grid: SnrGrid, levels) -> list[Isoline]:
    """Marching-squares contours of ``grid`` at each level, in metres."""
    if grid.nx < 2 or grid.ny < 2:
        raise DomainError("contouring needs a grid of at least 2x2 cells")
    out = []
    for level in levels:
        level = float(level)
        if not math.isfinite(level):
            raise DomainError(f"isoline level must be finite, got {level!r}")
        pts, ids = _marching.segments(grid.values, level, _marching.SEGMENT_TABLE)
        lines = [np.column_stack((grid.origin[0] + grid.spacing_m * line[:, 0],
                                  grid.origin[1] + grid.spacing_m * line[:, 1]))
                 for line in _marching.stitch(pts, ids)]
        out.append(Isoline(level, lines))
    return out
