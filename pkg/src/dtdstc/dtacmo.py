"""Delay-tolerant adjustable code matrix optimization (DT-ACMO).

The recursion is the exponentially weighted RLS of the ML cost

    sum_n lambda^(i-n) || d[n] - W x[n] ||^2,

kept as P = Psi^-1 (inverse correlation), Z (cross correlation) and the current
estimate W = Z P. Every update uses the matrix inversion lemma, so one step
costs O(p^2) for p regressor entries and no matrix is ever inverted.

Two regressor shapes are supported:

* vector regressor ``x`` with matrix estimate ``W`` (m x p), the form used for
  the delayed equivalent code matrix of a multi-antenna relay;
* block regressor ``B`` (m x p) with a parameter vector ``theta`` (stored as the
  1 x p row ``W``): each received sample is one scalar observation d_j = B[j] theta.
  Forgetting is applied once per block. The simulator adapts the relay code
  parameters this way (per-slot gains for SAS, vec(Phi_k) for MAS).
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .coding import (
    CodeMatrix,
    alamouti_encode,
    code_power,
    complex_normal,
    normalize_power,
    random_code_matrix,
)
from .system_model import SystemConfig, Topology

__all__ = [
    "RlsDivergence", "RlsState", "DtacmoState", "rls_gain", "rls_init", "rls_init_state",
    "rls_update_mas", "rls_update_block", "rls_update_sas", "normalize_power",
    "batch_ls_oracle", "batch_ls_block_oracle", "psi_direct", "relay_regressor",
    "code_from_estimates", "estimates_from_code",
]

_P_PERTURBATION = 0.0


class RlsDivergence(ArithmeticError):
    """The inverse correlation matrix lost positive definiteness; re-initialize."""


@contextlib.contextmanager
def perturbed_p_update(eps: float):
    """Test hook: add ``eps * I`` to P after every update (breaks RLS == batch)."""
    global _P_PERTURBATION
    old, _P_PERTURBATION = _P_PERTURBATION, eps
    try:
        yield
    finally:
        _P_PERTURBATION = old


@dataclass(frozen=True)
class RlsState:
    lam: float
    delta: float
    P: np.ndarray
    Z: np.ndarray
    W: np.ndarray
    iteration: int = 0


def rls_gain(P, x, lam: float) -> np.ndarray:
    """k = lambda^-1 P x / (1 + lambda^-1 x^H P x)."""
    P = np.asarray(P)
    x = np.asarray(x)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(P))):
        raise ValueError("non-finite RLS input")
    Px = (P @ x[..., None])[..., 0]
    denom = lam + np.einsum("...i,...i->...", np.conj(x), Px).real
    return Px / denom[..., None]


def _step(P, Z, W, d, x, lam):
    """One vector-regressor step on raw arrays (leading batch axes allowed)."""
    Px = (P @ x[..., None])[..., 0]
    denom = lam + np.einsum("...i,...i->...", np.conj(x), Px).real
    if not np.all(denom > 0):
        raise RlsDivergence("x^H P x went negative")
    k = Px / denom[..., None]
    err = d - (W @ x[..., None])[..., 0]
    W = W + err[..., :, None] * np.conj(k)[..., None, :]
    # P x = Px and x^H P = conj(Px)^T for Hermitian P
    P = (P - k[..., :, None] * np.conj(Px)[..., None, :]) / lam
    P = 0.5 * (P + np.conj(np.swapaxes(P, -1, -2)))
    if _P_PERTURBATION:
        P = P + _P_PERTURBATION * np.eye(P.shape[-1])
    Z = lam * Z + d[..., :, None] * np.conj(x)[..., None, :]
    return P, Z, W


def rls_init_state(p: int, m: int, lam: float, delta: float, W0=None) -> RlsState:
    """P[0] = delta^-1 I and Z[0] = delta W0 so that W[0] = Z[0] P[0] = W0 (zero by default).

    ``W0`` may carry leading batch axes (independent chains); P is replicated.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0 < lam <= 1:
        raise ValueError("forgetting factor must lie in (0, 1]")
    W0 = np.zeros((m, p), dtype=complex) if W0 is None else np.asarray(W0, dtype=complex)
    P = np.broadcast_to(np.eye(p, dtype=complex) / delta, W0.shape[:-2] + (p, p)).copy()
    return RlsState(lam, delta, P, delta * W0, W0.copy(), 0)


def rls_update_mas(state: RlsState, d, x) -> RlsState:
    """Vector-regressor update of the delayed equivalent code matrix estimate.

    P <- lambda^-1 (P - k x^H P), Z <- lambda Z + d x^H and the a-priori error
    form W <- W + (d - W x) k^H, which keeps W = Z P exactly.
    """
    d = np.asarray(d, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != state.P.shape[-1] or d.shape[-1] != state.W.shape[-2]:
        raise ValueError("regressor or desired vector does not match the state")
    P, Z, W = _step(state.P, state.Z, state.W, d, x, state.lam)
    _check_diagonal(P)
    return replace(state, P=P, Z=Z, W=W, iteration=state.iteration + 1)


def rls_update_block(state: RlsState, d, B) -> RlsState:
    """Block-regressor update: one forgetting step, then one scalar update per row of B."""
    d = np.asarray(d, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if B.shape[-1] != state.P.shape[-1] or B.shape[-2] != d.shape[-1]:
        raise ValueError("block regressor does not match the state")
    P, Z, W = state.P, state.Z, state.W
    for j in range(B.shape[-2]):
        lam = state.lam if j == 0 else 1.0
        P, Z, W = _step(P, Z, W, d[..., j:j + 1], B[..., j, :], lam)
    _check_diagonal(P)
    return replace(state, P=P, Z=Z, W=W, iteration=state.iteration + 1)


rls_update_sas = rls_update_block


def _check_diagonal(P):
    if not np.all(np.diagonal(P, axis1=-2, axis2=-1).real > 0):
        raise RlsDivergence("P has a non-positive diagonal entry")


# --- batch oracles ---------------------------------------------------------------

def psi_direct(xs: Sequence, lam: float, delta: float) -> np.ndarray:
    """lambda^i delta I + sum_n lambda^(i-n) x[n] x[n]^H."""
    i = len(xs)
    p = np.asarray(xs[0]).shape[-1]
    psi = (lam ** i) * delta * np.eye(p, dtype=complex)
    for n, x in enumerate(xs, start=1):
        x = np.asarray(x, dtype=complex)
        psi += lam ** (i - n) * np.outer(x, np.conj(x))
    return psi


def batch_ls_oracle(history: Iterable, lam: float, delta: float, W0=None) -> np.ndarray:
    """Direct regularized weighted LS solution for (d, x) pairs.

    W = (lambda^i delta W0 + sum lambda^(i-n) d x^H)(lambda^i delta I + sum lambda^(i-n) x x^H)^-1
    """
    history = list(history)
    if not history:
        raise ValueError("empty history")
    i = len(history)
    m = np.asarray(history[0][0]).shape[-1]
    p = np.asarray(history[0][1]).shape[-1]
    W0 = np.zeros((m, p), dtype=complex) if W0 is None else np.asarray(W0, dtype=complex)
    cross = (lam ** i) * delta * W0
    for n, (d, x) in enumerate(history, start=1):
        cross = cross + lam ** (i - n) * np.outer(d, np.conj(x))
    psi = psi_direct([x for _, x in history], lam, delta)
    # W psi = cross  <=>  psi^H W^H = cross^H
    return np.linalg.solve(psi.conj().T, cross.conj().T).conj().T


def batch_ls_block_oracle(history: Iterable, lam: float, delta: float, theta0=None) -> np.ndarray:
    """Direct solution for (d, B) block pairs; returns the 1 x p row estimate.

    Each row B[j] acts as a regressor, so Psi = lambda^i delta I + sum lambda^(i-n) B^T conj(B)
    and the cross term is lambda^i delta theta0 + sum lambda^(i-n) d^T conj(B).
    """
    history = list(history)
    if not history:
        raise ValueError("empty history")
    i = len(history)
    p = np.asarray(history[0][1]).shape[-1]
    W0 = np.zeros((1, p), dtype=complex) if theta0 is None else np.asarray(theta0).reshape(1, p)
    psi = (lam ** i) * delta * np.eye(p, dtype=complex)
    cross = (lam ** i) * delta * W0
    for n, (d, B) in enumerate(history, start=1):
        B = np.asarray(B, dtype=complex)
        w = lam ** (i - n)
        psi += w * (B.T @ np.conj(B))
        cross = cross + w * (np.asarray(d) @ np.conj(B))[None, :]
    return np.linalg.solve(psi.conj().T, cross.conj().T).conj().T


# --- relay code parameters ----------------------------------------------------------

def relay_regressor(channel_relay, s_hat, cfg: SystemConfig, k: int) -> np.ndarray:
    """Block regressor of relay k: its received contribution equals B @ theta_k.

    MAS: theta_k = vec(Phi_k) (column-major) and B = Delta_k (M(s)^T kron G_k).
    SAS: theta_k = phi_k and column t of B holds g_k M[k, t] placed at slot delta_k + t.
    Batched over leading axes of ``channel_relay`` and ``s_hat``.
    """
    N, T = cfg.N, cfg.T
    M = alamouti_encode(s_hat)
    d = cfg.delays[k]
    rows = slice(d * N, (d + T) * N)
    if cfg.topology is Topology.MAS:
        G = channel_relay[..., k, :, :]
        Mt = np.swapaxes(M, -1, -2)
        kron = np.einsum("...ab,...cd->...acbd", Mt, G)
        kron = kron.reshape(kron.shape[:-4] + (T * N, N * N))
        B = np.zeros(kron.shape[:-2] + (cfg.relay_length, N * N), dtype=complex)
        B[..., rows, :] = kron
        return B
    g = channel_relay[..., k, :]
    lead = np.broadcast_shapes(g.shape[:-1], M.shape[:-2])
    B = np.zeros(lead + (cfg.relay_length, T), dtype=complex)
    for t in range(T):
        B[..., (d + t) * N:(d + t + 1) * N, t] = g * M[..., k, t, None]
    return B


def estimates_from_code(phi, topology: Topology) -> np.ndarray:
    """Per-relay parameter vectors (..., n_r, p) from code parameters."""
    phi = np.asarray(phi)
    if Topology(topology) is Topology.MAS:
        return np.swapaxes(phi, -1, -2).reshape(phi.shape[:-2] + (-1,))
    return phi


def code_from_estimates(theta, cfg: SystemConfig) -> np.ndarray:
    """Inverse of estimates_from_code."""
    theta = np.asarray(theta)
    if cfg.topology is Topology.MAS:
        N = cfg.N
        return np.swapaxes(theta.reshape(theta.shape[:-1] + (N, N)), -1, -2)
    return theta


@dataclass
class DtacmoState:
    """Code matrices in use plus one RLS state per relay (single owner)."""

    code: CodeMatrix
    relays: list[RlsState]
    P_R: float


def rls_init(rng: np.random.Generator, cfg: SystemConfig, code: CodeMatrix | None = None) -> DtacmoState:
    """Per relay P[0] = delta^-1 I and W[0] = Phi[0].

    Phi[0] is random and power-normalized unless ``code`` is given; a batched
    ``code`` (leading chain axis) yields one independent chain per entry.
    """
    if not cfg.delta_init > 0:
        raise ValueError("delta must be positive")
    if not 0 < cfg.forgetting <= 1:
        raise ValueError("forgetting factor must lie in (0, 1]")
    if code is None:
        code = random_code_matrix(rng, cfg.topology, cfg.N, cfg.T, cfg.P_R, cfg.n_r)
    theta = estimates_from_code(code.phi, cfg.topology)
    relays = [rls_init_state(theta.shape[-1], 1, cfg.forgetting, cfg.delta_init,
                             theta[..., k, None, :])
              for k in range(cfg.n_r)]
    return DtacmoState(code, relays, cfg.P_R)


def dtacmo_sweep(state: DtacmoState, r_relay, channel_relay, s_hat, cfg: SystemConfig) -> DtacmoState:
    """One decision-directed sweep over the relays, then power normalization.

    Relay k's desired response is the received relay signal minus the currently
    predicted contributions of the other relays. Leading chain axes are allowed;
    a chain whose estimate collapses to zero keeps its previous code.
    """
    r_relay = np.asarray(r_relay, dtype=complex)
    regs = [relay_regressor(channel_relay, s_hat, cfg, k) for k in range(cfg.n_r)]
    relays = list(state.relays)

    def predicted(j):
        return (regs[j] @ relays[j].W[..., 0, :, None])[..., 0]

    for k in range(cfg.n_r):
        others = sum((predicted(j) for j in range(cfg.n_r) if j != k), np.zeros_like(r_relay))
        relays[k] = rls_update_block(relays[k], r_relay - others, regs[k])
    theta = np.stack([st.W[..., 0, :] for st in relays], axis=-2)
    phi = code_from_estimates(theta, cfg)
    power = np.asarray(code_power(phi, cfg.topology))
    alive = power > 0
    safe = np.where(alive, power, 1.0)
    extra = (1,) * (phi.ndim - power.ndim)
    phi = phi * np.sqrt(state.P_R / safe).reshape(power.shape + extra)
    phi = np.where(alive.reshape(power.shape + extra), phi, state.code.phi)
    return DtacmoState(CodeMatrix(cfg.topology, phi), relays, state.P_R)


def random_history(rng: np.random.Generator, steps: int, m: int, p: int):
    """Random (d, x) pairs for oracle checks."""
    return [(complex_normal(rng, (m,)), complex_normal(rng, (p,))) for _ in range(steps)]
