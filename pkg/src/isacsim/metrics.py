"""ISAC performance metrics: beampattern gain, SINR, rates, sensing echo power.

Precoder sets are (K, N_tx) complex arrays (one row per downlink beam, linear
amplitude in sqrt-watts); channels are (M_rx, N_tx) complex arrays.  All
functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ArrayGeometry,
    DegenerateGeometryError,
    Position,
    direction_between,
    distance,
    fspl_gain,
    steering_vector,
)

# Relative eigenvalue floor below which a ZF Gram matrix counts as singular.
_ZF_RANK_TOL = 1e-12


class DecoderSingularError(np.linalg.LinAlgError):
    """ZF requested on a rank-deficient stack of effective channels."""


class DecoderKind(enum.Enum):
    ZF = "zf"
    MMSE = "mmse"
    MRC = "mrc"
    SINGLE_ANTENNA = "single"


@dataclass(frozen=True)
class SensingTarget:
    """Passive point target with radar cross-section sigma (m^2, linear)."""

    position: Position
    rcs: float = 1.0

    def __post_init__(self):
        if self.rcs <= 0:
            raise ValueError("radar cross-section must be positive")


@dataclass(frozen=True)
class LinkMetrics:
    """Per-entity metrics of one precoder set on one frozen instance."""

    sinr_per_user: np.ndarray
    rate_per_user: np.ndarray
    min_sinr: float
    beampattern_gain_per_target: np.ndarray
    min_beampattern_gain: float
    sensing_power: float

    @classmethod
    def from_parts(cls, sinr_per_user, gain_per_target, sensing_power=0.0):
        sinr = np.asarray(sinr_per_user, dtype=float)
        gains = np.asarray(gain_per_target, dtype=float)
        if (sinr < 0).any() or (gains < 0).any() or sensing_power < 0:
            raise ValueError("metrics must be non-negative")
        return cls(
            sinr_per_user=sinr,
            rate_per_user=achievable_rate(sinr),
            min_sinr=float(sinr.min()) if sinr.size else 0.0,
            beampattern_gain_per_target=gains,
            min_beampattern_gain=float(gains.min()) if gains.size else 0.0,
            sensing_power=float(sensing_power),
        )


def _as_precoders(precoders) -> np.ndarray:
    w = np.asarray(precoders, dtype=complex)
    if w.ndim == 1:
        w = w[None, :]
    if w.ndim != 2:
        raise ValueError(f"precoder set must be (K, N), got shape {w.shape}")
    return w


def total_power(precoders) -> float:
    """Sum of ||w_k||^2 over all beams, watts."""
    w = _as_precoders(precoders)
    return float(np.sum(np.abs(w) ** 2))


def precoder_covariance(precoders) -> np.ndarray:
    """Transmit covariance R = sum_k w_k w_k^H."""
    w = _as_precoders(precoders)
    return np.einsum("ki,kj->ij", w, w.conj())


def beampattern_gain(precoders, steer: np.ndarray) -> float:
    """Radiated power density toward a direction: sum_k |a^H w_k|^2."""
    w = _as_precoders(precoders)
    a = np.asarray(steer, dtype=complex)
    if w.shape[1] != a.shape[0]:
        raise ValueError(f"dimension mismatch: beams have {w.shape[1]} antennas, steering has {a.shape[0]}")
    return float(np.sum(np.abs(w @ a.conj()) ** 2))


def sinr_miso(channel, precoders, k: int, noise_power: float) -> float:
    """Downlink SINR of user k with a single-antenna receiver.

    ``channel`` is the user's (N,) or (1, N) row channel;
    SINR = |h w_k|^2 / (sum_{i != k} |h w_i|^2 + sigma^2).
    """
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    w = _as_precoders(precoders)
    h = np.asarray(channel, dtype=complex).reshape(-1)
    if h.shape[0] != w.shape[1]:
        raise ValueError("channel/precoder dimension mismatch")
    if not 0 <= k < w.shape[0]:
        raise IndexError(f"user index {k} out of range for {w.shape[0]} beams")
    rx = np.abs(w @ h) ** 2
    signal = rx[k]
    interference = float(rx.sum() - signal)
    return float(signal / (interference + noise_power))


def effective_channels(channel, precoders) -> np.ndarray:
    """Post-precoding effective channels g_i = H w_i, stacked as (K, M)."""
    w = _as_precoders(precoders)
    h = np.asarray(channel, dtype=complex)
    if h.ndim == 1:
        h = h[None, :]
    if h.shape[1] != w.shape[1]:
        raise ValueError("channel/precoder dimension mismatch")
    return w @ h.T  # (K, M): row i is (H w_i)^T


def compute_decoder(kind: DecoderKind, channel, precoders, k: int, noise_power: float) -> np.ndarray:
    """Receive combining vector v_k (length M) for user k.

    MRC returns g_k; MMSE returns (sum_i g_i g_i^H + sigma^2 I)^-1 g_k;
    ZF returns the k-th column of G (G^H G)^-1 (so v^H g_i = delta_ik),
    raising DecoderSingularError when G is rank deficient.
    SINGLE_ANTENNA is the M = 1 pass-through combiner.
    """
    g = effective_channels(channel, precoders)  # (K, M)
    n_beams, m = g.shape
    if not 0 <= k < n_beams:
        raise IndexError(f"user index {k} out of range")
    if kind is DecoderKind.SINGLE_ANTENNA:
        if m != 1:
            raise ValueError("single-antenna decoder requires an M = 1 channel")
        return np.ones(1, dtype=complex)
    if kind is DecoderKind.MRC:
        return g[k].copy()
    if kind is DecoderKind.MMSE:
        if noise_power <= 0:
            raise ValueError("noise power must be positive")
        cov = g.T @ g.conj() + noise_power * np.eye(m)  # sum_i g_i g_i^H + sigma^2 I
        return np.linalg.solve(cov, g[k])
    if kind is DecoderKind.ZF:
        gmat = g.T  # (M, K), columns g_i
        gram = gmat.conj().T @ gmat
        eig = np.linalg.eigvalsh(gram)
        if n_beams > m or eig[0] <= _ZF_RANK_TOL * max(eig[-1], np.finfo(float).tiny):
            raise DecoderSingularError("effective channel stack is rank deficient")
        return gmat @ np.linalg.solve(gram, np.eye(n_beams)[:, k])
    raise ValueError(f"unknown decoder kind {kind!r}")


def sinr_mimo(channel, precoders, decoder, k: int, noise_power: float) -> float:
    """Post-combining SINR |v^H g_k|^2 / (sum_{i != k} |v^H g_i|^2 + sigma^2 ||v||^2)."""
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    v = np.asarray(decoder, dtype=complex).reshape(-1)
    vnorm2 = float(np.sum(np.abs(v) ** 2))
    if vnorm2 == 0.0:
        raise ValueError("decoder vector must be nonzero")
    g = effective_channels(channel, precoders)  # (K, M)
    rx = np.abs(g @ v.conj()) ** 2
    signal = rx[k]
    interference = float(rx.sum() - signal)
    return float(signal / (interference + noise_power * vnorm2))


def achievable_rate(sinr):
    """Shannon spectral efficiency log2(1 + SINR), elementwise."""
    return np.log2(1.0 + np.asarray(sinr, dtype=float))


def echo_hop_gains(
    targets: list[SensingTarget],
    uav: Position,
    haps: Position,
    n_haps: int,
    access_freq: float,
    backhaul_freq: float,
) -> np.ndarray:
    """Per-target product fspl(UAV->target) * rcs * fspl(target->HAPS) * N_haps.

    N_haps is the matched-filter gain of the HAPS receive array.  Raises
    DegenerateGeometryError when a target sits on either platform.
    """
    if not targets:
        raise ValueError("at least one sensing target required")
    hops = np.empty(len(targets))
    for j, tgt in enumerate(targets):
        p = tgt.position
        if (p.x, p.y, p.z) in ((uav.x, uav.y, uav.z), (haps.x, haps.y, haps.z)):
            raise DegenerateGeometryError("target colocated with a platform")
        hops[j] = (
            fspl_gain(distance(uav, p), access_freq)
            * tgt.rcs
            * fspl_gain(distance(p, haps), backhaul_freq)
            * n_haps
        )
    return hops


def sensing_echo_power(
    precoders,
    tx_geom: ArrayGeometry,
    targets: list[SensingTarget],
    uav: Position,
    haps: Position,
    n_haps: int,
    access_freq: float,
    backhaul_freq: float,
) -> float:
    """Aggregate one-bounce echo power collected at the HAPS, watts.

    Each target contributes its hop-gain product (see ``echo_hop_gains``)
    times the transmit beampattern gain of the UAV array toward it.
    """
    w = _as_precoders(precoders)
    if w.shape[1] != tx_geom.size:
        raise ValueError("precoder length does not match the transmit array")
    hops = echo_hop_gains(targets, uav, haps, n_haps, access_freq, backhaul_freq)
    gains = np.array([
        beampattern_gain(w, steering_vector(tx_geom, direction_between(uav, t.position)))
        for t in targets
    ])
    return float(gains @ hops)
