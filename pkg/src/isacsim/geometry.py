"""Geometry, planar-array steering, free-space path loss, and Rician fading.

Conventions used throughout the package:

* positions are ground-fixed Cartesian coordinates in meters, z = altitude;
* directions are (azimuth, elevation) in radians, azimuth in [-pi, pi),
  elevation in [-pi/2, pi/2], with elevation +pi/2 along +z;
* steering vectors are unnormalized (unit-modulus entries, ||a||^2 = N);
* all gains and powers are linear unless a name says dB/dBm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class DegenerateGeometryError(ValueError):
    """Two positions coincide where a direction or path is required."""


@dataclass(frozen=True)
class Position:
    """Point in the ground-fixed frame, meters; z is altitude (>= 0)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("position coordinates must be finite")
        if self.z < 0:
            raise ValueError(f"altitude must be non-negative, got {self.z}")


def distance(a: Position, b: Position) -> float:
    """Euclidean distance in meters."""
    return math.dist((a.x, a.y, a.z), (b.x, b.y, b.z))


@dataclass(frozen=True)
class Direction:
    """Azimuth/elevation pair in radians.

    azimuth in [-pi, pi) measured in the xy-plane from +x toward +y,
    elevation in [-pi/2, pi/2] measured from the xy-plane toward +z.
    """

    azimuth: float
    elevation: float

    def __post_init__(self):
        if not (-math.pi <= self.azimuth < math.pi):
            raise ValueError(f"azimuth {self.azimuth} outside [-pi, pi)")
        if not (-math.pi / 2 <= self.elevation <= math.pi / 2):
            raise ValueError(f"elevation {self.elevation} outside [-pi/2, pi/2]")

    def unit_vector(self) -> np.ndarray:
        """Cartesian unit vector (cos el cos az, cos el sin az, sin el)."""
        ce = math.cos(self.elevation)
        return np.array([
            ce * math.cos(self.azimuth),
            ce * math.sin(self.azimuth),
            math.sin(self.elevation),
        ])


def direction_between(frm: Position, to: Position) -> Direction:
    """Direction of the ray from ``frm`` to ``to``.

    Raises DegenerateGeometryError when the positions coincide.
    """
    dx, dy, dz = to.x - frm.x, to.y - frm.y, to.z - frm.z
    if dx == 0.0 and dy == 0.0 and dz == 0.0:
        raise DegenerateGeometryError(f"coincident positions {frm}")
    az = math.atan2(dy, dx)
    if az >= math.pi:  # atan2 returns (-pi, pi]; fold pi onto -pi
        az = -math.pi
    el = math.atan2(dz, math.hypot(dx, dy))
    return Direction(az, el)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array: rows along x, cols along y, pitch in wavelengths."""

    rows: int
    cols: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array needs at least one element per axis")
        if self.spacing <= 0:
            raise ValueError("element spacing must be positive")

    @property
    def size(self) -> int:
        return self.rows * self.cols


def steering_vector(geom: ArrayGeometry, direction: Direction) -> np.ndarray:
    """Unnormalized UPA steering vector, row-major over (row, col).

    Entry (m, n) is exp(j 2 pi d (m cos(el) cos(az) + n cos(el) sin(az)))
    with d the element pitch in wavelengths.  Entries are unit modulus, so
    ||a||^2 equals the element count; boresight (el = +-pi/2) gives all ones.
    """
    ce = math.cos(direction.elevation)
    ux = ce * math.cos(direction.azimuth)
    uy = ce * math.sin(direction.azimuth)
    m = np.arange(geom.rows)[:, None]
    n = np.arange(geom.cols)[None, :]
    phase = 2.0 * math.pi * geom.spacing * (m * ux + n * uy)
    return np.exp(1j * phase).ravel()


def fspl_gain(dist_m: float, freq_hz: float) -> float:
    """Free-space (Friis) power gain, (c / (4 pi d f))^2."""
    if dist_m <= 0:
        raise ValueError(f"distance must be positive, got {dist_m}")
    if freq_hz <= 0:
        raise ValueError(f"frequency must be positive, got {freq_hz}")
    return (SPEED_OF_LIGHT / (4.0 * math.pi * dist_m * freq_hz)) ** 2


@dataclass(frozen=True)
class LinkBudget:
    """Carrier frequency, receiver noise power, and bandwidth (all SI)."""

    carrier_freq: float
    noise_power: float
    bandwidth: float

    def __post_init__(self):
        if self.carrier_freq <= 0 or self.noise_power <= 0 or self.bandwidth <= 0:
            raise ValueError("link budget fields must be strictly positive")


@dataclass(frozen=True)
class RicianParams:
    """Rician K-factor (linear) and large-scale power gain beta (linear)."""

    k_factor: float
    large_scale_gain: float

    def __post_init__(self):
        if self.k_factor < 0:
            raise ValueError("K-factor must be non-negative")
        if self.large_scale_gain <= 0:
            raise ValueError("large-scale gain must be positive")


def rician_channel(
    rng: np.random.Generator,
    params: RicianParams,
    a_rx: np.ndarray | float,
    a_tx: np.ndarray,
) -> np.ndarray:
    """Draw one Rician channel matrix H (M_rx x N_tx), linear amplitude.

    H = sqrt(beta) (sqrt(K/(K+1)) a_rx a_tx^H + sqrt(1/(K+1)) G) with G
    i.i.d. CN(0, 1), so E||H||_F^2 = beta * M * N.  ``a_rx`` may be the
    scalar 1 for a single-antenna receiver.  K = inf yields the
    deterministic LoS rank-one channel.
    """
    a_rx = np.atleast_1d(np.asarray(a_rx, dtype=complex))
    a_tx = np.asarray(a_tx, dtype=complex)
    los = np.outer(a_rx, a_tx.conj())
    beta, k = params.large_scale_gain, params.k_factor
    if math.isinf(k):
        return math.sqrt(beta) * los
    m, n = los.shape
    scatter = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
    scatter *= math.sqrt(0.5)
    return math.sqrt(beta) * (
        math.sqrt(k / (k + 1.0)) * los + math.sqrt(1.0 / (k + 1.0)) * scatter
    )


def dbm_to_watts(p_dbm: float) -> float:
    """dBm to watts."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: float) -> float:
    """Watts to dBm; rejects non-positive powers."""
    if p_w <= 0:
        raise ValueError(f"power must be positive, got {p_w}")
    return 10.0 * math.log10(p_w) + 30.0


def db_to_linear(x_db: float) -> float:
    """Power ratio from dB."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """dB from a positive power ratio."""
    if x <= 0:
        raise ValueError(f"ratio must be positive, got {x}")
    return 10.0 * math.log10(x)
