"""Quasi-static fading, relay processing and received-signal assembly."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coding import CodeMatrix, alamouti_encode, complex_normal, sas_allocate_row
from .system_model import (
    CHANNEL_POOL,
    SYMBOLS_PER_BLOCK,
    SystemConfig,
    Topology,
    slot_delay_operator,
)

# Offsets into the per-trial channel pool.
_RELAY_OFF, _DL_OFF, _FIRST_HOP_OFF = 0, 32, 48


@dataclass(frozen=True)
class ChannelRealization:
    """One block's channel coefficients (leading batch axes allowed).

    relay: MAS (..., n_r, N, N) matrices G_k; SAS (..., n_r, N) vectors g_k.
    direct: (..., N, N) source-destination matrix, or None without a direct link.
    first_hop: (..., n_r, B, N) source-relay matrices F_k.
    """

    relay: np.ndarray
    direct: np.ndarray | None
    first_hop: np.ndarray


def _matrices(flat, count: int, rows: int, cols: int):
    # column-major fill so consecutive pool entries form columns; a SAS vector g_k
    # then equals column k of a MAS matrix drawn from the same pool
    m = flat[..., :count * rows * cols].reshape(flat.shape[:-1] + (count, cols, rows))
    return np.swapaxes(m, -1, -2)


def channel_from_pool(pool, cfg: SystemConfig) -> ChannelRealization:
    """Map unit-variance complex Gaussian pool entries onto the channel layout."""
    pool = np.asarray(pool)
    N, n_r = cfg.N, cfg.n_r
    if cfg.topology is Topology.MAS:
        relay = _matrices(pool[..., _RELAY_OFF:], n_r, N, N)
    else:
        relay = pool[..., _RELAY_OFF:_RELAY_OFF + n_r * N].reshape(pool.shape[:-1] + (n_r, N))
    direct = _matrices(pool[..., _DL_OFF:], 1, N, N)[..., 0, :, :] if cfg.direct_link else None
    first_hop = _matrices(pool[..., _FIRST_HOP_OFF:], n_r, cfg.B, N)
    return ChannelRealization(relay, direct, first_hop)


def draw_channel(rng: np.random.Generator, cfg: SystemConfig) -> ChannelRealization:
    """Fresh i.i.d. CN(0, 1) realization, held constant over one block."""
    return channel_from_pool(complex_normal(rng, (CHANNEL_POOL,)), cfg)


# --- relays -------------------------------------------------------------------

def relay_process(s_detected, code: CodeMatrix, k: int, cfg: SystemConfig) -> np.ndarray:
    """Decode-and-forward re-encoding at relay k.

    MAS returns Phi_k M(s) (N x T); SAS returns phi_k * m_k(s) (length T).
    """
    M = alamouti_encode(s_detected)
    phi_k = np.asarray(code.phi)[k]
    if cfg.topology is Topology.MAS:
        if phi_k.shape != (cfg.N, cfg.N):
            raise ValueError(f"MAS code matrix must be {cfg.N}x{cfg.N}, got {phi_k.shape}")
        return phi_k @ M
    if phi_k.shape != (cfg.T,):
        raise ValueError(f"SAS code vector must have length {cfg.T}, got {phi_k.shape}")
    return phi_k * sas_allocate_row(M, k)


def af_relay_process(received_first_hop, power_budget: float) -> np.ndarray:
    """Amplify-and-forward: rescale the relay's block to exactly ``power_budget``.

    A zero block is forwarded as zeros.
    """
    y = np.asarray(received_first_hop, dtype=complex)
    energy = np.sum(np.abs(y) ** 2)
    if energy == 0:
        return np.zeros_like(y)
    return y * np.sqrt(power_budget / energy)


def first_hop_map(channel: ChannelRealization, cfg: SystemConfig) -> np.ndarray:
    """Per-relay map from s to the relay's first-hop samples, (..., n_r, 2B/N, 2).

    With N = 2 the source sends both symbols in one slot from two antennas; with
    N = 1 it sends them in two consecutive slots.
    """
    return _block_diag_repeat(channel.first_hop, SYMBOLS_PER_BLOCK // cfg.N)


def _block_diag_repeat(F, reps: int) -> np.ndarray:
    if reps == 1:
        return F
    rows, cols = F.shape[-2:]
    out = np.zeros(F.shape[:-2] + (reps * rows, reps * cols), dtype=complex)
    for r in range(reps):
        out[..., r * rows:(r + 1) * rows, r * cols:(r + 1) * cols] = F
    return out


def direct_link_map(channel: ChannelRealization, cfg: SystemConfig) -> np.ndarray:
    """Map from s to the direct-link samples, (..., 2, 2)."""
    return _block_diag_repeat(channel.direct, SYMBOLS_PER_BLOCK // cfg.N)


# --- received signal ------------------------------------------------------------

def relay_linear_maps(channel: ChannelRealization, phi, cfg: SystemConfig) -> np.ndarray:
    """Per-relay maps from the codeword vector [s1, s2, -s2*, s1*] to received samples.

    Shape (..., n_r, N(delta_max+T), 4). Relay k's block occupies slots
    delta_k .. delta_k+T-1 of the time-slot-major received vector.
    """
    N, T = cfg.N, cfg.T
    rel = channel.relay
    phi = np.asarray(phi)
    lead = np.broadcast_shapes(rel.shape[:-3 if cfg.topology is Topology.MAS else -2],
                               phi.shape[:-3 if cfg.topology is Topology.MAS else -2])
    L = np.zeros(lead + (cfg.n_r, cfg.relay_length, SYMBOLS_PER_BLOCK * T), dtype=complex)
    if cfg.topology is Topology.MAS:
        A = rel @ phi
        for k, d in enumerate(cfg.delays):
            for t in range(T):
                L[..., k, (d + t) * N:(d + t + 1) * N, t * N:(t + 1) * N] = A[..., k, :, :]
    else:
        for k, d in enumerate(cfg.delays):
            for t in range(T):
                # codeword entry M[k, t] sits at index t*2 + k of the vector
                L[..., k, (d + t) * N:(d + t + 1) * N, t * 2 + k] = (
                    rel[..., k, :] * phi[..., k, t, None])
    return L


def assemble_received(channel: ChannelRealization, relay_blocks, cfg: SystemConfig,
                      sigma_d2: float = 0.0, rng: np.random.Generator | None = None,
                      s=None) -> np.ndarray:
    """Sum of delayed relay contributions plus noise; direct-link samples appended.

    ``relay_blocks[k]`` is relay k's transmit block (N x T for MAS, length T for SAS).
    ``s`` is required when the direct link is enabled.
    """
    N, T = cfg.N, cfg.T
    r = np.zeros(cfg.relay_length, dtype=complex)
    for k, block in enumerate(relay_blocks):
        if cfg.topology is Topology.MAS:
            rx = channel.relay[k] @ np.asarray(block)
        else:
            rx = np.outer(channel.relay[k], np.asarray(block))
        vec = rx.reshape(-1, order="F")  # time-slot-major
        r += slot_delay_operator(cfg.delays[k], cfg.delta_max, T, N) @ vec
    if cfg.direct_link:
        if s is None:
            raise ValueError("direct link needs the source symbols")
        r = np.concatenate([r, direct_link_map(channel, cfg) @ np.asarray(s, dtype=complex)])
    if sigma_d2 > 0:
        if rng is None:
            raise ValueError("noise needs an rng")
        r = r + complex_normal(rng, r.shape, sigma_d2)
    return r


def received_snr(gain_matrix, sigma_d2: float, sigma_s2: float = 1.0) -> float:
    """Received SNR in dB: sigma_s2 ||D_D||_F^2 / (M sigma_d2), M = number of rows.

    Returns -inf for an all-zero gain matrix.
    """
    if sigma_d2 <= 0:
        raise ValueError("noise variance must be positive")
    D = np.asarray(gain_matrix)
    energy = sigma_s2 * np.sum(np.abs(D) ** 2)
    if energy == 0:
        return float("-inf")
    return float(10 * np.log10(energy / (D.shape[0] * sigma_d2)))


def mean_signal_energy(cfg: SystemConfig) -> float:
    """E ||D_D||_F^2 over i.i.d. unit-variance channels at relay power P_R.

    Each relay contributes N times its transmit power; the direct link adds
    N per source symbol.
    """
    energy = cfg.N * cfg.P_R
    if cfg.direct_link:
        energy += cfg.N * SYMBOLS_PER_BLOCK
    return energy


def noise_variance(cfg: SystemConfig, snr_db: float) -> float:
    """Destination noise variance that puts the ensemble received SNR at ``snr_db``."""
    return mean_signal_energy(cfg) / (cfg.received_length * 10 ** (snr_db / 10))
