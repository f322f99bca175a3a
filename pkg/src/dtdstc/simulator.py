"""Monte Carlo BER engine.

Randomness is organised for common random numbers: every batch of trials at
an SNR index draws its symbols, channels and noise from streams keyed only by
(seed, snr index, batch index, stream), in fixed-size pools. Two configurations
or schemes evaluated with the same seed and grid therefore see identical
channel and noise draws at every trial index.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (
    af_relay_process,
    assemble_received,
    channel_from_pool,
    direct_link_map,
    first_hop_map,
    noise_variance,
    relay_linear_maps,
    relay_process,
)
from .coding import (
    CodeMatrix,
    alamouti_encode,
    build_equivalent_model,
    codeword_vector,
    complex_normal,
    identity_code_matrix,
    normalize_power,
    sas_allocate_row,
)
from .detection import ml_detect, ml_detect_batch
from .dtacmo import DtacmoState, dtacmo_sweep, rls_init
from .system_model import (
    CHANNEL_POOL,
    MAX_RELAYS,
    NOISE_POOL,
    SYMBOLS_PER_BLOCK,
    RelayStrategy,
    Scheme,
    SystemConfig,
    Topology,
    build_candidate_set,
    candidate_bits,
    delay_label,
    qpsk_map,
    validate_config,
)

BITS_PER_BLOCK = 2 * SYMBOLS_PER_BLOCK
RELAY_NOISE_POOL = 2 * MAX_RELAYS
CANDIDATES = build_candidate_set(SYMBOLS_PER_BLOCK)  # 2 x 16
CANDIDATE_BITS = candidate_bits(SYMBOLS_PER_BLOCK)  # 16 x 4
_Z95 = 1.959963984540054

# stream ids; warm-up blocks use the same layout shifted by _WARMUP
_BITS, _CHANNEL, _NOISE, _RELAY_NOISE, _SCHEME = range(5)
_WARMUP = 16


@dataclass(frozen=True)
class BerPoint:
    scheme: str
    delay_profile: str
    snr_db: float
    bits: int
    errors: int
    trials: int
    ci_low: float
    ci_high: float

    @property
    def ber(self) -> float:
        return self.errors / self.bits


@dataclass
class RunResult:
    config: SystemConfig
    points: list[BerPoint] = field(default_factory=list)
    duration_s: float = 0.0
    seed: int = 0

    def curve(self, scheme) -> tuple[np.ndarray, np.ndarray]:
        """(snr_db, ber) arrays of one scheme, SNR ascending."""
        name = Scheme(scheme).value
        pts = sorted((p for p in self.points if p.scheme == name), key=lambda p: p.snr_db)
        return np.array([p.snr_db for p in pts]), np.array([p.ber for p in pts])


@dataclass(frozen=True)
class BlockDraws:
    """Raw randomness for ``n`` blocks, in the shared pool layout."""

    bits: np.ndarray         # (n, 4) int8
    channel: np.ndarray      # (n, CHANNEL_POOL) unit-variance
    noise: np.ndarray        # (n, NOISE_POOL) unit-variance
    relay_noise: np.ndarray  # (n, RELAY_NOISE_POOL) unit-variance

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    def take(self, sl) -> "BlockDraws":
        return BlockDraws(self.bits[sl], self.channel[sl], self.noise[sl], self.relay_noise[sl])


def draw_blocks(rngs, n: int) -> BlockDraws:
    """Draw ``n`` blocks; ``rngs`` is one Generator or a per-stream sequence of four."""
    if isinstance(rngs, np.random.Generator):
        rngs = [rngs] * 4
    return BlockDraws(
        rngs[_BITS].integers(0, 2, size=(n, BITS_PER_BLOCK), dtype=np.int8),
        complex_normal(rngs[_CHANNEL], (n, CHANNEL_POOL)),
        complex_normal(rngs[_NOISE], (n, NOISE_POOL)),
        complex_normal(rngs[_RELAY_NOISE], (n, RELAY_NOISE_POOL)),
    )


def stream(seed: int, snr_idx: int, batch_idx: int, stream_id: int) -> np.random.Generator:
    """Position-keyed generator: independent of scheduling and of other cells."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(snr_idx, batch_idx, stream_id))
    return np.random.default_rng(ss)


def _streams(seed, snr_idx, batch_idx, offset=0):
    return [stream(seed, snr_idx, batch_idx, offset + i) for i in range(_SCHEME + 1)]


# --- one batch through the chain ---------------------------------------------------

def symbols_from_bits(bits) -> np.ndarray:
    bits = np.asarray(bits)
    return qpsk_map(bits.reshape(bits.shape[:-1] + (SYMBOLS_PER_BLOCK, 2)))


def scheme_code(cfg: SystemConfig, rng: np.random.Generator, n: int) -> CodeMatrix:
    """Code parameters for ``n`` blocks (or chains) of the configured scheme."""
    if cfg.scheme is Scheme.DAlamouti:
        base = identity_code_matrix(cfg.topology, cfg.n_r, cfg.N, cfg.P_R, cfg.T).phi
        return CodeMatrix(cfg.topology, np.broadcast_to(base, (n,) + base.shape).copy())
    shape = (cfg.n_r, cfg.N, cfg.N) if cfg.topology is Topology.MAS else (cfg.n_r, cfg.T)
    return normalize_power(CodeMatrix(cfg.topology, complex_normal(rng, (n,) + shape)), cfg.P_R)


def _embed_symbols(H) -> np.ndarray:
    """Lift a map acting on s to one acting on the codeword vector [s, ...]."""
    out = np.zeros(H.shape[:-1] + (4,), dtype=complex)
    out[..., :2] = H
    return out


def transmit(cfg: SystemConfig, draws: BlockDraws, phi, sigma_d2: float):
    """Push a batch of blocks through both hops.

    Returns (r, detection_map, channel, s): the received vectors, the
    (n, M, 4) map the destination uses for ML detection, the channel and the
    transmitted symbols.
    """
    n = draws.n
    s = symbols_from_bits(draws.bits)
    ch = channel_from_pool(draws.channel, cfg)
    n_r, Mr = cfg.n_r, cfg.relay_length
    sigma_r = math.sqrt(sigma_d2)
    if cfg.relay_strategy is RelayStrategy.AF:
        F = first_hop_map(ch, cfg)  # (n, n_r, 2, 2)
        y = (F @ s[:, None, :, None])[..., 0]
        y = y + sigma_r * draws.relay_noise[:, :n_r * 2].reshape(n, n_r, 2)
        # relay k forwards its Alamouti row of y at its power share
        energy = np.sum(np.abs(y) ** 2, axis=-1)
        gain = np.sqrt((cfg.P_R / n_r) / np.where(energy > 0, energy, 1.0)) * (energy > 0)
        phi_af = np.repeat(gain[..., None], cfg.T, axis=-1).astype(complex)
        L = relay_linear_maps(ch, phi_af, cfg)
        r = np.einsum("nkmv,nkv->nm", L, codeword_vector(y))
        f = ch.first_hop[..., 0, 0]  # (n, n_r)
        scale = np.stack([f, f, np.conj(f), np.conj(f)], axis=-1)
        det = np.einsum("nkmv,nkv->nmv", L, scale)
    else:
        L = relay_linear_maps(ch, phi, cfg)
        det = L.sum(axis=-3)
        if cfg.first_hop_noisy:
            F = first_hop_map(ch, cfg)  # (n, n_r, rows, 2)
            rows = F.shape[-2]
            y = (F @ s[:, None, :, None])[..., 0]
            y = y + sigma_r * draws.relay_noise[:, :n_r * rows].reshape(n, n_r, rows)
            idx, _ = ml_detect_batch(y, _embed_symbols(F), CANDIDATES)
            s_relay = CANDIDATES.T[idx]  # (n, n_r, 2)
            r = np.einsum("nkmv,nkv->nm", L, codeword_vector(s_relay))
        else:
            r = (det @ codeword_vector(s)[..., None])[..., 0]
    r = np.broadcast_to(r, (n, Mr))
    if cfg.direct_link:
        D = direct_link_map(ch, cfg)
        r = np.concatenate([r, (D @ s[..., None])[..., 0]], axis=-1)
        det = np.concatenate([det, _embed_symbols(D)], axis=-2)
    r = r + math.sqrt(sigma_d2) * draws.noise[:, :cfg.received_length]
    return r, det, ch, s


def detect_and_count(r, det, bits):
    """ML decisions and per-block bit-error counts."""
    idx, _ = ml_detect_batch(r, det, CANDIDATES)
    errors = np.count_nonzero(CANDIDATE_BITS[idx] != np.asarray(bits), axis=-1)
    return idx, errors


def _static_batch(cfg, draws, code_rng, sigma_d2) -> int:
    code = scheme_code(cfg, code_rng, draws.n)
    r, det, _, _ = transmit(cfg, draws, code.phi, sigma_d2)
    return int(detect_and_count(r, det, draws.bits)[1].sum())


def _adaptive_step(cfg, state: DtacmoState, draws: BlockDraws, sigma_d2):
    r, det, ch, _ = transmit(cfg, draws, state.code.phi, sigma_d2)
    idx, errors = detect_and_count(r, det, draws.bits)
    s_hat = CANDIDATES.T[idx]
    state = dtacmo_sweep(state, r[:, :cfg.relay_length], ch.relay, s_hat, cfg)
    return state, errors


def _adaptive_batch(cfg, n, seed, snr_idx, batch_idx, sigma_d2) -> int:
    """``n`` measured blocks spread over independent chains, each warmed up first."""
    chains = min(cfg.chains, n)
    steps = -(-n // chains)
    rngs = _streams(seed, snr_idx, batch_idx)
    draws = draw_blocks(rngs, steps * chains)
    wrngs = _streams(seed, snr_idx, batch_idx, _WARMUP)
    warm = draw_blocks(wrngs, cfg.warmup_blocks * chains)
    state = rls_init(rngs[_SCHEME], cfg, scheme_code(cfg, rngs[_SCHEME], chains))
    for t in range(cfg.warmup_blocks):
        state, _ = _adaptive_step(cfg, state, warm.take(slice(t * chains, (t + 1) * chains)), sigma_d2)
    total = 0
    for t in range(steps):
        # trial index = t * chains + c, so the first n trials match the static layout
        live = min(chains, n - t * chains)
        state, errors = _adaptive_step(cfg, state, draws.take(slice(t * chains, (t + 1) * chains)),
                                       sigma_d2)
        total += int(errors[:live].sum())
    return total


def simulate_point(cfg: SystemConfig, snr_db: float, snr_idx: int = 0) -> BerPoint:
    """All trials of one (scheme, SNR) cell."""
    sigma_d2 = noise_variance(cfg, snr_db)
    done = errors = batch = 0
    while done < cfg.trials_per_point:
        n = min(cfg.batch_size, cfg.trials_per_point - done)
        if cfg.adaptive:
            errors += _adaptive_batch(cfg, n, cfg.seed, snr_idx, batch, sigma_d2)
        else:
            rngs = _streams(cfg.seed, snr_idx, batch)
            errors += _static_batch(cfg, draw_blocks(rngs, n), rngs[_SCHEME], sigma_d2)
        done += n
        batch += 1
        if cfg.min_errors and errors >= cfg.min_errors:
            break
    bits = done * BITS_PER_BLOCK
    lo, hi = wilson_interval(errors, bits)
    return BerPoint(cfg.scheme.value, delay_label(cfg.delays), float(snr_db), bits, errors,
                    done, lo, hi)


def run_sweep(cfg: SystemConfig) -> RunResult:
    """One BerPoint per (scheme, SNR), schemes in configured order, SNR ascending.

    Every scheme reuses the same per-position random streams (common random numbers).
    """
    validate_config(cfg)
    start = time.perf_counter()
    points = []
    order = sorted(range(len(cfg.snr_grid_db)), key=lambda i: cfg.snr_grid_db[i])
    for scheme in cfg.sweep_schemes:
        sub = validate_config(cfg.with_scheme(scheme))
        for i in order:
            points.append(simulate_point(sub, cfg.snr_grid_db[i], i))
    return RunResult(cfg, points, time.perf_counter() - start, cfg.seed)


# --- single-block reference path ---------------------------------------------------------

def run_trial(rng: np.random.Generator, cfg: SystemConfig, snr_db: float,
              state: DtacmoState | None = None):
    """Push one block through the chain using the per-relay building blocks.

    Returns (bit_errors, bits_sent, state). With an adaptive configuration the
    state carries the code matrices across calls (created on first use); each
    call detects first, then runs one optimizer sweep and feeds the normalized
    code back for the next block.
    """
    validate_config(cfg)
    sigma_d2 = noise_variance(cfg, snr_db)
    if cfg.adaptive and state is None:
        state = rls_init(rng, cfg, scheme_code(cfg, rng, 1))
        state = DtacmoState(CodeMatrix(cfg.topology, state.code.phi[0]),
                            [_unbatch(st) for st in state.relays], state.P_R)
    draws = draw_blocks(rng, 1)
    if state is not None:
        code = state.code
    else:
        code = CodeMatrix(cfg.topology, scheme_code(cfg, rng, 1).phi[0])
    r, models, dl_map = reference_received(cfg, draws, code, sigma_d2)
    if cfg.relay_strategy is RelayStrategy.AF:
        idx, _ = ml_detect_batch(r, _reference_af_map(cfg, draws, code, sigma_d2), CANDIDATES)
        s_hat = CANDIDATES[:, int(idx)]
        best = int(idx)
    else:
        res = ml_detect(r, models, code.phi, CANDIDATES, dl_map)
        s_hat, best = res.s_hat, res.candidate_index
    errors = int(np.count_nonzero(CANDIDATE_BITS[best] != draws.bits[0]))
    if state is not None:
        ch = channel_from_pool(draws.channel[0], cfg)
        state = dtacmo_sweep(state, r[:cfg.relay_length], ch.relay, s_hat, cfg)
    return errors, BITS_PER_BLOCK, state


def _unbatch(st):
    return replace(st, P=st.P[0], Z=st.Z[0], W=st.W[0])


def reference_received(cfg: SystemConfig, draws: BlockDraws, code: CodeMatrix, sigma_d2: float):
    """Received vector of the first block in ``draws``, built relay by relay.

    Returns (r, per-relay equivalent models, direct-link map or None).
    """
    s = symbols_from_bits(draws.bits[0])
    ch = channel_from_pool(draws.channel[0], cfg)
    sigma_r = math.sqrt(sigma_d2)
    blocks = []
    for k in range(cfg.n_r):
        if cfg.relay_strategy is RelayStrategy.AF:
            y = first_hop_map(ch, cfg)[k] @ s + sigma_r * draws.relay_noise[0, 2 * k:2 * k + 2]
            row = sas_allocate_row(alamouti_encode(y), k)
            blocks.append(af_relay_process(row, cfg.P_R / cfg.n_r))
            continue
        s_k = s
        if cfg.first_hop_noisy:
            F = first_hop_map(ch, cfg)[k]
            rows = F.shape[0]
            y = F @ s + sigma_r * draws.relay_noise[0, k * rows:(k + 1) * rows]
            metrics = np.sum(np.abs(y[:, None] - F @ CANDIDATES) ** 2, axis=0)
            s_k = CANDIDATES[:, int(np.argmin(metrics))]
        blocks.append(relay_process(s_k, code, k, cfg))
    r = assemble_received(ch, blocks, cfg, s=s)
    r = r + sigma_r * draws.noise[0, :cfg.received_length]
    channel_k = ch.relay
    models = [build_equivalent_model(channel_k[k], cfg.topology, k, cfg.delays[k],
                                     cfg.delta_max, cfg.T) for k in range(cfg.n_r)]
    dl_map = direct_link_map(ch, cfg) if cfg.direct_link else None
    return r, models, dl_map


def _reference_af_map(cfg, draws, code, sigma_d2):
    # the destination knows each relay's gain and first-hop coefficient
    _, det, _, _ = transmit(cfg, draws.take(slice(0, 1)), code.phi, sigma_d2)
    return det[0]


# --- analysis helpers --------------------------------------------------------------------

def theoretical_alamouti_ber(snr_db) -> np.ndarray | float:
    """Closed-form BER of Gray-mapped QPSK over two-branch Alamouti (2 x 1) Rayleigh fading.

    ``snr_db`` is the received SNR per sample; the two transmit branches share the
    power, so each branch carries a per-bit SNR gamma = snr / 4. With
    mu = sqrt(gamma / (1 + gamma)) and p = (1 - mu) / 2, BER = p^2 (1 + 2 (1 - p)).
    """
    gamma = 10 ** (np.asarray(snr_db, dtype=float) / 10) / 4
    mu = np.sqrt(gamma / (1 + gamma))
    p = 0.5 * (1 - mu)
    ber = p ** 2 * (1 + 2 * (1 - p))
    return float(ber) if np.ndim(ber) == 0 else ber


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("no trials")
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def snr_at_ber(snr_db, ber, target: float) -> float:
    """SNR where the curve first crosses ``target``, interpolating log10(BER) linearly.

    Returns nan when the curve never reaches the target or starts below it.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    if ber.size == 0 or ber[0] <= target:
        return float("nan")
    for i in range(1, ber.size):
        if ber[i] <= target:
            if ber[i] <= 0:
                return float(snr_db[i])
            a, b = np.log10(ber[i - 1]), np.log10(ber[i])
            frac = (a - np.log10(target)) / (a - b)
            return float(snr_db[i - 1] + frac * (snr_db[i] - snr_db[i - 1]))
    return float("nan")


def ber_slope(snr_db, ber, lo: float, hi: float) -> float:
    """log10(BER) change per decade of SNR between two grid points (minus the diversity order)."""
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    i, j = int(np.argmin(np.abs(snr_db - lo))), int(np.argmin(np.abs(snr_db - hi)))
    if ber[i] <= 0 or ber[j] <= 0:
        return float("nan")
    return float((np.log10(ber[j]) - np.log10(ber[i])) / ((snr_db[j] - snr_db[i]) / 10))
