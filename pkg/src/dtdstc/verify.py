"""Built-in oracle suites, shared by the CLI ``verify`` mode and the test-suite."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import assemble_received, draw_channel, relay_process
from .coding import (
    CodeMatrix,
    apply_mask,
    build_equivalent_model,
    code_power,
    codeword_vector,
    complex_normal,
    normalize_power,
    random_code_matrix,
)
from .detection import ml_detect_batch
from .dtacmo import (
    batch_ls_block_oracle,
    batch_ls_oracle,
    psi_direct,
    rls_init_state,
    rls_update_block,
    rls_update_mas,
)
from .simulator import CANDIDATES, run_sweep, theoretical_alamouti_ber
from .system_model import (
    QPSK_POINTS,
    SystemConfig,
    Topology,
    build_delay_matrix,
    validate_config,
)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: measured {self.measured:.3e} (tol {self.tolerance:.1e}) {self.detail}".rstrip()


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def rls_histories(seed: int = 0, histories: int = 20, steps: int = 50):
    """Yield (kind, recursive estimates, batch estimates, P list, Psi list) per seeded history.

    ``kind`` is "mas" (vector regressor, 6 x 4 estimate) or "sas" (block regressor,
    p = 2); ``histories`` of each kind are generated.
    """
    rng = np.random.default_rng(seed)
    lam, delta = 0.98, 0.01
    for h in range(2 * histories):
        kind = "mas" if h % 2 == 0 else "sas"
        if kind == "mas":
            m, p = 6, 4
            W0 = complex_normal(rng, (m, p))
            st = rls_init_state(p, m, lam, delta, W0)
            hist, rec, ora, Ps, Psis = [], [], [], [], []
            for _ in range(steps):
                d, x = complex_normal(rng, (m,)), complex_normal(rng, (p,))
                st = rls_update_mas(st, d, x)
                hist.append((d, x))
                rec.append(st.W)
                ora.append(batch_ls_oracle(hist, lam, delta, W0))
                Ps.append(st.P)
                Psis.append(psi_direct([xx for _, xx in hist], lam, delta))
        else:
            rows, p = 6, 2
            theta0 = complex_normal(rng, (1, p))
            st = rls_init_state(p, 1, lam, delta, theta0)
            hist, rec, ora, Ps, Psis = [], [], [], [], []
            for _ in range(steps):
                d, B = complex_normal(rng, (rows,)), complex_normal(rng, (rows, p))
                st = rls_update_block(st, d, B)
                hist.append((d, B))
                rec.append(st.W)
                ora.append(batch_ls_block_oracle(hist, lam, delta, theta0))
                Ps.append(st.P)
                # each block row is one rank-one term; forgetting once per block
                i = len(hist)
                psi = lam ** i * delta * np.eye(p, dtype=complex)
                for n, (_, BB) in enumerate(hist, start=1):
                    psi += lam ** (i - n) * (BB.T @ np.conj(BB))
                Psis.append(psi)
        yield kind, rec, ora, Ps, Psis


def suite_rls_batch(seed: int = 0) -> SuiteResult:
    worst = max(_rel(r, o) for _, rec, ora, _, _ in rls_histories(seed) for r, o in zip(rec, ora))
    return SuiteResult("rls_batch_equivalence", worst <= 1e-8, worst, 1e-8,
                       "20 MAS + 20 SAS histories x 50 steps")


def suite_inversion_lemma(seed: int = 0) -> SuiteResult:
    worst = 0.0
    for _, _, _, Ps, Psis in rls_histories(seed):
        for P, psi in zip(Ps, Psis):
            worst = max(worst, float(np.linalg.norm(P @ psi - np.eye(P.shape[0]))))
    return SuiteResult("matrix_inversion_lemma", worst <= 1e-8, worst, 1e-8)


def equivalent_model_errors(seed: int = 0, draws: int = 1000):
    """Worst relative mismatch between direct assembly and the linearized model.

    Checks per relay that masking the directly assembled block gives
    Delta_k (equivalent product) s, and that unmasked contributions sum to the
    full received vector.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    setups = [(Topology.MAS, 2), (Topology.SAS, 2), (Topology.SAS, 1)]
    for topology, N in setups:
        for delays in [(0, 0), (0, 1), (0, 2)]:
            cfg = validate_config(SystemConfig(topology=topology, N=N, n_r=2, delays=delays))
            for _ in range(draws):
                ch = draw_channel(rng, cfg)
                code = random_code_matrix(rng, topology, N, cfg.T, cfg.P_R, cfg.n_r)
                s = complex_normal(rng, (2,))
                blocks = [relay_process(s, code, k, cfg) for k in range(cfg.n_r)]
                total = assemble_received(ch, blocks, cfg)
                summed = np.zeros_like(total)
                for k in range(cfg.n_r):
                    only_k = [b if j == k else np.zeros_like(b) for j, b in enumerate(blocks)]
                    direct = assemble_received(ch, only_k, cfg)
                    model = build_equivalent_model(ch.relay[k], topology, k, delays[k],
                                                   cfg.delta_max, cfg.T)
                    linear = model.contribution(s, code.phi[k])
                    worst = max(worst, _rel(apply_mask(direct, model.conj_mask), linear))
                    summed = summed + model.raw_contribution(s, code.phi[k])
                worst = max(worst, _rel(summed, total))
    return worst


def suite_equivalent_model(seed: int = 0, draws: int = 1000) -> SuiteResult:
    worst = equivalent_model_errors(seed, draws)
    return SuiteResult("equivalent_model_consistency", worst <= 1e-12, worst, 1e-12,
                       f"{draws} draws per topology and delay profile")


def suite_delay_matrix() -> SuiteResult:
    worst = 0.0
    for dmax in range(4):
        for dk in range(dmax + 1):
            for rows in (1, 2, 4):
                D = build_delay_matrix(dk, dmax, rows)
                worst = max(worst, float(np.abs(D.T @ D - np.eye(rows)).max()))
                worst = max(worst, float(np.abs(np.abs(D).sum(axis=0) - 1).max()))
                worst = max(worst, float(np.abs(D[dk:dk + rows] - np.eye(rows)).max()))
    expected = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)
    worst = max(worst, float(np.abs(build_delay_matrix(1, 1, 2) - expected).max()))
    return SuiteResult("delay_matrix_algebra", worst == 0.0, worst, 0.0)


def suite_power_normalization(seed: int = 0, count: int = 10_000) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    half = count // 2
    for topology, shape in [(Topology.MAS, (half, 2, 2, 2)), (Topology.SAS, (count - half, 2, 2))]:
        P_R = rng.uniform(0.1, 10.0, size=shape[0])
        scale = rng.uniform(1e-3, 1e3, size=shape[0])
        phi = complex_normal(rng, shape) * scale.reshape((-1,) + (1,) * (len(shape) - 1))
        for i in range(shape[0]):
            out = normalize_power(CodeMatrix(topology, phi[i]), P_R[i])
            worst = max(worst, abs(float(code_power(out.phi, topology)) - P_R[i]) / P_R[i])
    return SuiteResult("power_normalization", worst <= 1e-12, worst, 1e-12,
                       f"{count} random code matrices")


def suite_ml_optimality(seed: int = 0, instances: int = 1000) -> SuiteResult:
    """Returned metric never exceeds any candidate's metric (independent rescan)."""
    rng = np.random.default_rng(seed)
    L = complex_normal(rng, (instances, 6, 4))
    s = QPSK_POINTS[rng.integers(0, 4, size=(instances, 2))]
    r = (L @ codeword_vector(s)[..., None])[..., 0] + complex_normal(rng, (instances, 6), 0.5)
    idx, _ = ml_detect_batch(r, L, CANDIDATES)
    worst = 0.0
    for i in range(instances):
        rescan = np.array([np.sum(np.abs(r[i] - L[i] @ codeword_vector(CANDIDATES[:, c])) ** 2)
                           for c in range(CANDIDATES.shape[1])])
        # the winner's rescanned metric must be the minimum, up to rounding
        excess = (rescan[idx[i]] - rescan.min()) / max(rescan.min(), 1.0)
        worst = max(worst, float(excess))
    return SuiteResult("ml_optimality", worst <= 1e-12, worst, 1e-12,
                       f"{instances} instances, 16 candidates")


def suite_alamouti_theory(seed: int = 1, min_errors: int = 2000) -> SuiteResult:
    cfg = SystemConfig(topology=Topology.SAS, n_r=2, N=1, delays=(0, 0),
                       snr_grid_db=(6.0, 10.0, 14.0), trials_per_point=2_000_000,
                       min_errors=min_errors, batch_size=16384, seed=seed)
    res = run_sweep(cfg)
    worst = 0.0
    for p in res.points:
        worst = max(worst, abs(p.ber - theoretical_alamouti_ber(p.snr_db)) / theoretical_alamouti_ber(p.snr_db))
    errs = min(p.errors for p in res.points)
    return SuiteResult("alamouti_vs_theory", worst <= 0.10, worst, 0.10,
                       f"2x1 at 6/10/14 dB, >= {errs} errors per point")


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "rls_batch_equivalence": suite_rls_batch,
    "matrix_inversion_lemma": suite_inversion_lemma,
    "equivalent_model_consistency": suite_equivalent_model,
    "delay_matrix_algebra": suite_delay_matrix,
    "power_normalization": suite_power_normalization,
    "ml_optimality": suite_ml_optimality,
    "alamouti_vs_theory": suite_alamouti_theory,
}


def run_suites(names=None) -> list[SuiteResult]:
    """Run the selected suites (all by default); failures are reported, not raised."""
    results = []
    for name in names or SUITES:
        try:
            results.append(SUITES[name]())
        except Exception as exc:  # a crashing oracle counts as a failure
            results.append(SuiteResult(name, False, float("nan"), float("nan"), f"error: {exc!r}"))
    return results


__all__ = ["SuiteResult", "SUITES", "run_suites"]
