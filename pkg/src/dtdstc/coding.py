"""Alamouti encoding, relay code matrices and the conjugation-masked equivalent model.

Received blocks are vectorized time-slot-major: all destination antennas of
slot 1, then slot 2, and so on. For Alamouti the second-slot samples carry
conjugated symbols, so a relay's contribution becomes linear in ``s`` once
those samples are conjugated back (the conjugation mask).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system_model import (
    BLOCK_LENGTH,
    SYMBOLS_PER_BLOCK,
    Topology,
    slot_delay_operator,
)

# Second Alamouti column as a linear map of s after conjugation: conj([-s2*, s1*]) = J s.
J_ALAMOUTI = np.array([[0, -1], [1, 0]], dtype=complex)
# s -> [s; J s], the masked codeword of a unit-channel relay.
CODE_STACK = np.vstack([np.eye(2, dtype=complex), J_ALAMOUTI])


def alamouti_encode(s) -> np.ndarray:
    """Return [[s1, -s2*], [s2, s1*]] (rows = antennas, columns = slots).

    Works on batches: ``s`` of shape (..., 2) gives (..., 2, 2).
    """
    s = np.asarray(s, dtype=complex)
    if s.shape[-1] != SYMBOLS_PER_BLOCK:
        raise ValueError("Alamouti encoding needs exactly two symbols")
    s1, s2 = s[..., 0], s[..., 1]
    row1 = np.stack([s1, -np.conj(s2)], axis=-1)
    row2 = np.stack([s2, np.conj(s1)], axis=-1)
    return np.stack([row1, row2], axis=-2)


def codeword_vector(s) -> np.ndarray:
    """Time-slot-major vec of the Alamouti codeword: [s1, s2, -s2*, s1*]."""
    s = np.asarray(s, dtype=complex)
    s1, s2 = s[..., 0], s[..., 1]
    return np.stack([s1, s2, -np.conj(s2), np.conj(s1)], axis=-1)


def sas_allocate_row(codeword, k: int) -> np.ndarray:
    """Row ``k`` (0-based) of the across-relay codeword, sent by single-antenna relay k."""
    codeword = np.asarray(codeword)
    if not 0 <= k < codeword.shape[-2]:
        raise IndexError(f"relay index {k} out of range for {codeword.shape[-2]} rows")
    return codeword[..., k, :].copy()


# --- code matrices ----------------------------------------------------------

@dataclass(frozen=True)
class CodeMatrix:
    """Per-relay adjustable code parameters.

    MAS: ``phi`` has shape (..., n_r, N, N); relay k sends phi[k] @ M(s).
    SAS: ``phi`` has shape (..., n_r, T); relay k sends phi[k] * m_k(s).
    """

    topology: Topology
    phi: np.ndarray

    @property
    def n_r(self) -> int:
        return self.phi.shape[-3] if self.topology is Topology.MAS else self.phi.shape[-2]

    def power(self) -> np.ndarray | float:
        return code_power(self.phi, self.topology)


def code_power(phi, topology: Topology, T: int = BLOCK_LENGTH):
    """Total relay power sum_k Tr(Phi_eq,k Phi_eq,k^H).

    The MAS equivalent code matrix is block diagonal with T copies of Phi_k
    (the second one conjugated), so its trace is T * ||Phi_k||_F^2. The SAS
    equivalent is diagonal with the per-slot gains, giving ||phi_k||^2.
    """
    phi = np.asarray(phi)
    if Topology(topology) is Topology.MAS:
        return T * np.sum(np.abs(phi) ** 2, axis=(-3, -2, -1))
    return np.sum(np.abs(phi) ** 2, axis=(-2, -1))


def normalize_power(code: CodeMatrix, P_R: float) -> CodeMatrix:
    """Scale ``code`` so its total power equals ``P_R`` (direction is preserved)."""
    power = np.asarray(code.power())
    if np.any(power == 0):
        raise ValueError("cannot normalize an all-zero code matrix")
    scale = np.sqrt(P_R / power)
    extra = code.phi.ndim - np.ndim(power)
    phi = code.phi * scale.reshape(np.shape(power) + (1,) * extra)
    return CodeMatrix(code.topology, phi)


def identity_code_matrix(topology: Topology, n_r: int, N: int, P_R: float,
                         T: int = BLOCK_LENGTH) -> CodeMatrix:
    """Plain distributed Alamouti (unit code matrices), scaled to the power budget."""
    if Topology(topology) is Topology.MAS:
        phi = np.broadcast_to(np.eye(N, dtype=complex), (n_r, N, N)).copy()
    else:
        phi = np.ones((n_r, T), dtype=complex)
    return normalize_power(CodeMatrix(Topology(topology), phi), P_R)


def random_code_matrix(rng: np.random.Generator, topology: Topology, N: int, T: int,
                       P_R: float, n_r: int) -> CodeMatrix:
    """I.i.d. complex Gaussian code parameters normalized to total power ``P_R``."""
    topology = Topology(topology)
    shape = (n_r, N, N) if topology is Topology.MAS else (n_r, T)
    phi = complex_normal(rng, shape)
    return normalize_power(CodeMatrix(topology, phi), P_R)


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    z = rng.standard_normal(tuple(shape) + (2,))
    return np.sqrt(variance / 2) * (z[..., 0] + 1j * z[..., 1])


# --- equivalent model ---------------------------------------------------------

def apply_mask(vec, mask) -> np.ndarray:
    """Conjugate the entries selected by ``mask`` (an involution)."""
    vec = np.asarray(vec)
    return np.where(mask, np.conj(vec), vec)


def alamouti_equivalent(A) -> np.ndarray:
    """Masked equivalent of a relay whose effective N x 2 channel is ``A``: [A; conj(A) J]."""
    A = np.asarray(A, dtype=complex)
    return np.concatenate([A, np.conj(A) @ J_ALAMOUTI], axis=-2)


@dataclass(frozen=True)
class EquivalentModel:
    """Linearized view of one relay's contribution at the destination.

    ``g_eq`` is the NT x N equivalent channel of the code structure and the
    physical channel. ``delay`` is the N(delta_max+T) x NT slot delay operator and
    ``conj_mask`` flags the received samples (in delayed coordinates) that must be
    conjugated for the contribution to be linear in s.
    """

    topology: Topology
    relay: int
    g_eq: np.ndarray
    delay: np.ndarray
    conj_mask: np.ndarray
    channel: np.ndarray

    def phi_eq(self, phi_k) -> np.ndarray:
        """Equivalent code matrix: blockdiag(Phi, conj Phi) for MAS, a diagonal for SAS."""
        phi_k = np.asarray(phi_k, dtype=complex)
        if self.topology is Topology.MAS:
            n = phi_k.shape[-1]
            out = np.zeros((2 * n, 2 * n), dtype=complex)
            out[:n, :n] = phi_k
            out[n:, n:] = np.conj(phi_k)
            return out
        a, b = phi_k[0], phi_k[1]
        if self.relay == 0:
            return np.diag([a, np.conj(b)])
        return np.diag([np.conj(b), a])

    def matrix(self, phi_k) -> np.ndarray:
        """NT x N map from s to the masked, undelayed contribution of this relay.

        MAS follows the physical order channel -> code matrix -> codeword:
        blockdiag(G, conj G) . Phi_eq . [I; J]. SAS uses G_eq . Phi_eq.
        """
        if self.topology is Topology.MAS:
            return alamouti_equivalent(self.channel @ np.asarray(phi_k, dtype=complex))
        return self.g_eq @ self.phi_eq(phi_k)

    def contribution(self, s, phi_k) -> np.ndarray:
        """Masked, delayed contribution Delta_k . (equivalent product) . s."""
        return self.delay @ (self.matrix(phi_k) @ np.asarray(s, dtype=complex))

    def raw_contribution(self, s, phi_k) -> np.ndarray:
        """The same contribution in received (unmasked) coordinates."""
        return apply_mask(self.contribution(s, phi_k), self.conj_mask)


def build_equivalent_model(channel_k, topology: Topology, relay: int, delta_k: int,
                           delta_max: int, T: int = BLOCK_LENGTH) -> EquivalentModel:
    """Equivalent model of relay ``relay`` from its relay-destination channel.

    ``channel_k`` is the N x N matrix G_k for MAS or the length-N vector g_k for SAS.
    """
    topology = Topology(topology)
    if T != BLOCK_LENGTH:
        raise ValueError("only the two-slot Alamouti family is supported")
    channel_k = np.asarray(channel_k, dtype=complex)
    if topology is Topology.MAS:
        N = channel_k.shape[-1]
        g_eq = alamouti_equivalent(channel_k)
    else:
        N = channel_k.shape[0]
        g = channel_k.reshape(N, 1)
        zero = np.zeros_like(g)
        if relay == 0:
            g_eq = np.block([[g, zero], [zero, -np.conj(g)]])
        elif relay == 1:
            g_eq = np.block([[zero, g], [np.conj(g), zero]])
        else:
            raise ValueError("SAS Alamouti has only two rows")
    delay = slot_delay_operator(delta_k, delta_max, T, N)
    local_mask = np.zeros(N * T, dtype=bool)
    local_mask[N:] = True
    conj_mask = (delay @ local_mask.astype(float)) > 0.5
    return EquivalentModel(topology, relay, g_eq, delay, conj_mask, channel_k)
