"""Shared configuration, QPSK constellation and delay-profile machinery."""
from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, replace

import numpy as np

# Alamouti family: two symbols per block, two symbol slots.
SYMBOLS_PER_BLOCK = 2
BLOCK_LENGTH = 2

# Fixed per-trial draw pools; prefixes are shared across configurations so that
# common random numbers line up between topologies (see simulator).
CHANNEL_POOL = 96
NOISE_POOL = 64
MAX_RELAYS = 8


class Topology(str, enum.Enum):
    MAS = "MAS"
    SAS = "SAS"


class RelayStrategy(str, enum.Enum):
    DF = "DF"
    AF = "AF"


class Scheme(str, enum.Enum):
    DAlamouti = "DAlamouti"
    RAlamouti = "RAlamouti"
    FullAlamoutiPerRelay = "FullAlamoutiPerRelay"


class ConfigError(ValueError):
    """Raised when a configuration violates a model invariant."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SystemConfig:
    topology: Topology = Topology.MAS
    n_r: int = 2
    N: int = 2
    T: int = BLOCK_LENGTH
    delays: tuple[int, ...] = (0, 0)
    direct_link: bool = False
    relay_strategy: RelayStrategy = RelayStrategy.DF
    scheme: Scheme = Scheme.DAlamouti
    P_R: float = 4.0
    sigma_s2: float = 1.0
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    trials_per_point: int = 10_000
    seed: int = 1
    # optimizer (DT-ACMO)
    adapt: bool = False
    forgetting: float = 0.998
    delta_init: float = 0.01
    warmup_blocks: int = 200
    # sweep; ``chains`` independent adaptation streams run side by side
    schemes: tuple[Scheme, ...] = ()
    min_errors: int = 0
    chains: int = 256
    batch_size: int = 4096
    first_hop_noisy: bool = False

    @property
    def delta_max(self) -> int:
        return max(self.delays)

    @property
    def B(self) -> int:
        """Antennas per relay."""
        return self.N if self.topology is Topology.MAS else 1

    @property
    def adaptive(self) -> bool:
        return self.adapt or self.scheme is Scheme.FullAlamoutiPerRelay

    @property
    def relay_length(self) -> int:
        """Length of the summed relay part of the received vector, N(δ_max+T)."""
        return self.N * (self.delta_max + self.T)

    @property
    def dl_length(self) -> int:
        return SYMBOLS_PER_BLOCK if self.direct_link else 0

    @property
    def received_length(self) -> int:
        return self.relay_length + self.dl_length

    @property
    def sweep_schemes(self) -> tuple[Scheme, ...]:
        return self.schemes or (self.scheme,)

    def with_scheme(self, scheme: Scheme) -> "SystemConfig":
        return replace(self, scheme=Scheme(scheme), schemes=())


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return ``cfg`` unchanged if every model invariant holds, else raise ConfigError."""
    if cfg.n_r < 1:
        raise ConfigError("n_r", "at least one relay is required")
    if cfg.n_r > MAX_RELAYS:
        raise ConfigError("n_r", f"at most {MAX_RELAYS} relays are supported")
    if cfg.N not in (1, 2):
        raise ConfigError("N", "antennas per node must be 1 or 2")
    if cfg.T != BLOCK_LENGTH:
        raise ConfigError("T", "Alamouti-family schemes need T = 2")
    if len(cfg.delays) != cfg.n_r:
        raise ConfigError("delays", f"expected {cfg.n_r} delays, got {len(cfg.delays)}")
    if any(int(d) != d or d < 0 for d in cfg.delays):
        raise ConfigError("delays", "delays must be non-negative integers")
    if min(cfg.delays) != 0:
        raise ConfigError("delays", "delays are relative to the earliest relay; one must be 0")
    if cfg.received_length > NOISE_POOL:
        raise ConfigError("delays", "delay spread too large for the noise pool")
    if cfg.topology is Topology.MAS:
        if cfg.N != 2:
            raise ConfigError("N", "MAS relays re-encode the full Alamouti code and need N = 2")
    else:
        if cfg.n_r > BLOCK_LENGTH:
            raise ConfigError("n_r", "SAS allocates one Alamouti row per relay; n_r <= 2")
        if cfg.scheme is Scheme.FullAlamoutiPerRelay:
            raise ConfigError("scheme", "FullAlamoutiPerRelay needs multi-antenna (MAS) relays")
    for s in cfg.schemes:
        if cfg.topology is Topology.SAS and Scheme(s) is Scheme.FullAlamoutiPerRelay:
            raise ConfigError("schemes", "FullAlamoutiPerRelay needs multi-antenna (MAS) relays")
    if cfg.relay_strategy is RelayStrategy.AF:
        if cfg.topology is not Topology.SAS:
            raise ConfigError("relay_strategy", "AF baseline is only provided for SAS")
        if cfg.N != 1:
            raise ConfigError("relay_strategy", "AF baseline needs single-antenna endpoints (N = 1)")
        if cfg.adaptive:
            raise ConfigError("relay_strategy", "DT-ACMO requires decode-and-forward relays")
    if not cfg.P_R > 0:
        raise ConfigError("P_R", "relay power budget must be positive")
    if cfg.sigma_s2 != 1.0:
        raise ConfigError("sigma_s2", "symbol power is fixed to 1")
    if cfg.trials_per_point < 1:
        raise ConfigError("trials_per_point", "at least one trial per point is required")
    if not 0 < cfg.forgetting <= 1:
        raise ConfigError("forgetting", "forgetting factor must lie in (0, 1]")
    if not cfg.delta_init > 0:
        raise ConfigError("delta_init", "regularizer must be positive")
    if cfg.warmup_blocks < 0 or cfg.chains < 1 or cfg.batch_size < 1:
        raise ConfigError("sweep", "block counts must be positive")
    if not cfg.snr_grid_db:
        raise ConfigError("snr_grid_db", "empty SNR grid")
    return cfg


# --- QPSK -----------------------------------------------------------------

_SQRT_HALF = 1 / np.sqrt(2)
# index = 2*b0 + b1
QPSK_POINTS = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) * _SQRT_HALF
QPSK_BITS = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.int8)


def qpsk_map(bits) -> complex | np.ndarray:
    """Gray-map bit pairs to unit-energy QPSK symbols.

    The first bit selects the sign of the imaginary part, the second the sign
    of the real part: 00 -> (1+j)/sqrt2, 01 -> (-1+j)/sqrt2, 11 -> (-1-j)/sqrt2,
    10 -> (1-j)/sqrt2. Accepts shape (2,) or (..., 2).
    """
    bits = np.asarray(bits)
    if bits.shape[-1] != 2:
        raise ValueError("qpsk_map needs bit pairs")
    sym = QPSK_POINTS[2 * bits[..., 0] + bits[..., 1]]
    return complex(sym) if sym.ndim == 0 else sym


def qpsk_demap(symbol) -> np.ndarray:
    """Nearest-point decision; ties go to the lexicographically smallest pair."""
    z = np.asarray(symbol)
    # Gray mapping makes the nearest-point decision separable per axis;
    # a zero component lands on bit 0, which is the lexicographic tie-break.
    b0 = (z.imag < 0).astype(np.int8)
    b1 = (z.real < 0).astype(np.int8)
    return np.stack([b0, b1], axis=-1)


def build_candidate_set(N: int) -> np.ndarray:
    """All 4**N QPSK vectors as columns of an N x 4**N matrix."""
    if N < 1:
        raise ValueError("N must be at least 1")
    cols = list(itertools.product(QPSK_POINTS, repeat=N))
    return np.array(cols, dtype=complex).T


def candidate_bits(N: int) -> np.ndarray:
    """Bits of each candidate column, shape (4**N, 2N), matching build_candidate_set."""
    rows = list(itertools.product(range(4), repeat=N))
    return np.array([np.concatenate([QPSK_BITS[i] for i in r]) for r in rows], dtype=np.int8)


# --- delay profiles ---------------------------------------------------------

def build_delay_matrix(delta_k: int, delta_max: int, rows: int) -> np.ndarray:
    """(delta_max+rows) x rows zero-padded identity shifted down by delta_k rows."""
    if not 0 <= delta_k <= delta_max:
        raise ValueError(f"delay {delta_k} outside [0, {delta_max}]")
    if rows < 1:
        raise ValueError("rows must be positive")
    D = np.zeros((delta_max + rows, rows))
    D[delta_k:delta_k + rows] = np.eye(rows)
    return D


@functools.lru_cache(maxsize=256)
def slot_delay_operator(delta_k: int, delta_max: int, T: int, N: int) -> np.ndarray:
    """Delay matrix acting on time-slot-major vectors of N samples per slot.

    Shape N(delta_max+T) x NT; it shifts relay k's samples by delta_k whole slots.
    The cached result is read-only.
    """
    op = np.kron(build_delay_matrix(delta_k, delta_max, T), np.eye(N))
    op.flags.writeable = False
    return op


def delay_label(delays) -> str:
    """Compact profile label such as ``[0,1]``."""
    return "[" + ",".join(str(int(d)) for d in delays) + "]"
