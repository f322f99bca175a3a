"""Exhaustive maximum-likelihood detection at the destination."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coding import EquivalentModel, codeword_vector


@dataclass(frozen=True)
class DetectionResult:
    s_hat: np.ndarray
    candidate_index: int
    metric: float


def predicted_received(models: Sequence[EquivalentModel], phi, s, dl_map=None) -> np.ndarray:
    """Noiseless received vector for symbol vector ``s`` under the given code matrices."""
    r = sum(m.raw_contribution(s, phi[m.relay]) for m in models)
    if dl_map is not None:
        r = np.concatenate([r, np.asarray(dl_map) @ s])
    return r


def ml_detect(r, models: Sequence[EquivalentModel], phi, candidates, dl_map=None) -> DetectionResult:
    """argmin over candidate columns of ||r - r_hat(s_c)||^2; ties go to the lowest index.

    ``phi`` holds the per-relay code parameters (read only).
    """
    r = np.asarray(r)
    candidates = np.asarray(candidates)
    if candidates.shape[1] == 0:
        raise ValueError("empty candidate set")
    metrics = np.empty(candidates.shape[1])
    for c in range(candidates.shape[1]):
        r_hat = predicted_received(models, phi, candidates[:, c], dl_map)
        if r_hat.shape != r.shape:
            raise ValueError(f"received vector has shape {r.shape}, model gives {r_hat.shape}")
        metrics[c] = np.sum(np.abs(r - r_hat) ** 2)
    best = int(np.argmin(metrics))
    return DetectionResult(candidates[:, best].copy(), best, float(metrics[best]))


def ml_detect_batch(r, linear_map, candidates):
    """Vectorized ML over a batch.

    ``linear_map`` (..., M, 4) maps the codeword vector [s1, s2, -s2*, s1*] to the
    noiseless received vector. Returns (indices, metrics) with the batch shape.
    """
    V = codeword_vector(np.asarray(candidates).T).T  # (4, D)
    r_hat = np.asarray(linear_map) @ V
    diff = np.asarray(r)[..., :, None] - r_hat
    metrics = np.einsum("...md,...md->...d", diff.real, diff.real) + \
        np.einsum("...md,...md->...d", diff.imag, diff.imag)
    idx = np.argmin(metrics, axis=-1)
    return idx, np.take_along_axis(metrics, idx[..., None], axis=-1)[..., 0]
