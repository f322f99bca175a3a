import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dtdstc.channel import draw_channel, relay_linear_maps
from dtdstc.coding import CodeMatrix, codeword_vector, code_power, complex_normal, random_code_matrix
from dtdstc.dtacmo import (
    RlsDivergence,
    batch_ls_block_oracle,
    batch_ls_oracle,
    code_from_estimates,
    dtacmo_sweep,
    estimates_from_code,
    perturbed_p_update,
    psi_direct,
    random_history,
    relay_regressor,
    rls_gain,
    rls_init,
    rls_init_state,
    rls_update_block,
    rls_update_mas,
    rls_update_sas,
)
from dtdstc.system_model import SystemConfig, Topology, validate_config
from dtdstc.verify import suite_inversion_lemma, suite_rls_batch

MAS = validate_config(SystemConfig(topology=Topology.MAS, delays=(0, 1)))
SAS = validate_config(SystemConfig(topology=Topology.SAS, N=2, delays=(0, 1)))


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_rls_init():
    st1 = rls_init(np.random.default_rng(1), MAS)
    st2 = rls_init(np.random.default_rng(1), MAS)
    assert np.allclose(st1.relays[0].P, 100 * np.eye(4))
    assert abs(st1.code.power() - MAS.P_R) <= 1e-12 * MAS.P_R
    assert np.array_equal(st1.code.phi, st2.code.phi)
    # W[0] = Z[0] P[0] = Phi[0]
    theta = estimates_from_code(st1.code.phi, Topology.MAS)
    for k, st in enumerate(st1.relays):
        assert np.allclose(st.Z @ st.P, theta[k][None, :])


@pytest.mark.parametrize("kwargs", [dict(delta=0.0), dict(lam=0.0), dict(lam=1.2)])
def test_rls_init_rejects(kwargs):
    args = dict(p=2, m=1, lam=0.9, delta=0.1)
    args.update(kwargs)
    with pytest.raises(ValueError):
        rls_init_state(**args)


def test_gain_examples():
    x = np.array([0.6, 0.8j])
    assert np.allclose(rls_gain(np.eye(2), x, 1.0), x / 2)
    assert not rls_gain(np.eye(2), np.zeros(2), 1.0).any()
    assert np.allclose(rls_gain(np.eye(2), np.array([1.0, 0]), 0.5), [2 / 3, 0])
    with pytest.raises(ValueError):
        rls_gain(np.eye(2), np.array([np.nan, 0]), 1.0)


def test_single_step_inverse():
    st = rls_init_state(4, 6, 1.0, 0.01)
    e1 = np.eye(4)[0]
    d = np.zeros(6)
    d[0] = 1
    st = rls_update_mas(st, d, e1)
    assert np.allclose(st.P, np.linalg.inv(0.01 * np.eye(4) + np.outer(e1, e1)))
    assert st.P[0, 0] == pytest.approx(1 / 1.01)
    assert np.allclose(np.diag(st.P)[1:], 100)


def test_zero_regressor_step():
    rng = np.random.default_rng(0)
    st = rls_update_mas(rls_init_state(4, 6, 1.0, 0.1), complex_normal(rng, (6,)), complex_normal(rng, (4,)))
    nxt = rls_update_mas(st, complex_normal(rng, (6,)), np.zeros(4))
    assert np.allclose(nxt.P, st.P) and np.allclose(nxt.Z, st.Z) and np.allclose(nxt.W, st.W)
    st9 = rls_init_state(4, 6, 0.9, 0.1, complex_normal(rng, (6, 4)))
    nxt9 = rls_update_mas(st9, complex_normal(rng, (6,)), np.zeros(4))
    assert np.allclose(nxt9.Z, 0.9 * st9.Z) and np.allclose(nxt9.W, st9.W)
    blk = rls_update_sas(rls_init_state(2, 1, 1.0, 0.1), np.ones(4), np.zeros((4, 2)))
    assert np.allclose(blk.P, 10 * np.eye(2)) and not blk.W.any()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.8, 1.0))
def test_recursion_matches_batch(seed, lam):
    rng = np.random.default_rng(seed)
    W0 = complex_normal(rng, (6, 4))
    st = rls_init_state(4, 6, lam, 0.01, W0)
    hist = random_history(rng, 20, 6, 4)
    for d, x in hist:
        st = rls_update_mas(st, d, x)
    assert _rel(st.W, batch_ls_oracle(hist, lam, 0.01, W0)) <= 1e-8
    assert np.linalg.norm(st.P @ psi_direct([x for _, x in hist], lam, 0.01) - np.eye(4)) <= 1e-8
    assert np.allclose(st.W, st.Z @ st.P, atol=1e-8 * np.linalg.norm(st.W))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_block_recursion_matches_batch(seed):
    rng = np.random.default_rng(seed)
    th0 = complex_normal(rng, (1, 2))
    st = rls_init_state(2, 1, 0.95, 0.01, th0)
    hist = [(complex_normal(rng, (6,)), complex_normal(rng, (6, 2))) for _ in range(20)]
    for d, B in hist:
        st = rls_update_block(st, d, B)
    assert _rel(st.W, batch_ls_block_oracle(hist, 0.95, 0.01, th0)) <= 1e-8


def test_single_pair_oracle():
    d, x = np.array([1 + 1j, 2.0]), np.array([0.5, -1j, 1.0])
    expected = np.outer(d, x.conj()) @ np.linalg.inv(0.1 * np.eye(3) + np.outer(x, x.conj()))
    assert np.allclose(batch_ls_oracle([(d, x)], 1.0, 0.1), expected)


def test_oracle_small_delta_limit():
    rng = np.random.default_rng(2)
    d, x = complex_normal(rng, (3,)), complex_normal(rng, (4,))
    res = [np.linalg.norm(batch_ls_oracle([(d, x)] * 5, 1.0, delta) @ x - d)
           for delta in (1e-2, 1e-4, 1e-6)]
    assert res[0] > res[1] > res[2]


def test_p_stays_hermitian_pd():
    rng = np.random.default_rng(4)
    st = rls_init_state(4, 6, 0.9, 0.01)
    for d, x in random_history(rng, 300, 6, 4):
        st = rls_update_mas(st, d, x)
        assert np.max(np.abs(st.P - st.P.conj().T)) <= 1e-10
    assert np.all(np.linalg.eigvalsh(st.P) > 0)


def test_monotone_fitting():
    rng = np.random.default_rng(5)
    true = complex_normal(rng, (6, 4))
    st = rls_init_state(4, 6, 1.0, 0.01)
    residual = []
    for _ in range(100):
        x = complex_normal(rng, (4,))
        d = true @ x
        residual.append(np.linalg.norm(d - st.W @ x))
        st = rls_update_mas(st, d, x)
    assert residual[99] < residual[4]


def test_sas_gain_convergence():
    # identity channel: relay 0 reaches antenna 1, true per-slot gains [1, j]
    cfg = validate_config(SystemConfig(topology=Topology.SAS, N=2, delays=(0, 0)))
    g = np.eye(2)
    truth = np.array([1.0, 1j])
    rng = np.random.default_rng(6)
    st = rls_init_state(2, 1, 1.0, 1e-8)
    hist = []
    for _ in range(50):
        s = complex_normal(rng, (2,))
        B = relay_regressor(g, s, cfg, 0)
        d = B @ truth
        hist.append((d, B))
        st = rls_update_sas(st, d, B)
    assert np.max(np.abs(st.W[0] - truth)) <= 1e-6
    assert _rel(st.W, batch_ls_block_oracle(hist, 1.0, 1e-8)) <= 1e-8


def test_no_inversion_in_update_path(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("matrix inversion in the recursion")
    monkeypatch.setattr(np.linalg, "inv", boom)
    monkeypatch.setattr(np.linalg, "solve", boom)
    rng = np.random.default_rng(0)
    st = rls_init_state(4, 6, 0.99, 0.01)
    for d, x in random_history(rng, 5, 6, 4):
        st = rls_update_mas(st, d, x)
    rls_update_block(rls_init_state(2, 1, 0.99, 0.01), np.ones(3), np.ones((3, 2)))


def test_divergence_is_signalled():
    st = rls_init_state(2, 1, 1.0, 0.1)
    bad = type(st)(st.lam, st.delta, -np.eye(2, dtype=complex), st.Z, st.W)
    with pytest.raises(RlsDivergence):
        rls_update_mas(bad, np.ones(1), np.ones(2))


def test_suites_and_negative_control():
    assert suite_rls_batch().passed
    assert suite_inversion_lemma().passed
    with perturbed_p_update(1e-6):
        assert not suite_rls_batch().passed


@pytest.mark.parametrize("cfg", [MAS, SAS], ids=["mas", "sas"])
def test_regressor_reproduces_contribution(cfg):
    rng = np.random.default_rng(7)
    ch = draw_channel(rng, cfg)
    code = random_code_matrix(rng, cfg.topology, cfg.N, 2, cfg.P_R, 2)
    s = complex_normal(rng, (2,))
    L = relay_linear_maps(ch, code.phi, cfg)
    theta = estimates_from_code(code.phi, cfg.topology)
    for k in range(2):
        assert np.allclose(relay_regressor(ch.relay, s, cfg, k) @ theta[k], L[k] @ codeword_vector(s))
    assert np.array_equal(code_from_estimates(theta, cfg), code.phi)


@pytest.mark.parametrize("cfg", [MAS, SAS], ids=["mas", "sas"])
def test_sweep_fixed_point_and_power(cfg):
    # noiseless data generated by the code in use, correct decisions: the
    # estimate stays at that code
    rng = np.random.default_rng(8)
    state = rls_init(rng, cfg)
    phi0 = state.code.phi.copy()
    for _ in range(30):
        ch = draw_channel(rng, cfg)
        s = complex_normal(rng, (2,))
        r = relay_linear_maps(ch, state.code.phi, cfg).sum(axis=0) @ codeword_vector(s)
        state = dtacmo_sweep(state, r, ch.relay, s, cfg)
        assert abs(code_power(state.code.phi, cfg.topology) - cfg.P_R) <= 1e-12 * cfg.P_R
    assert np.allclose(state.code.phi, phi0, atol=1e-9)


def test_sweep_batched_matches_single():
    rng = np.random.default_rng(9)
    codes = random_code_matrix(rng, Topology.MAS, 2, 2, 4.0, 2)
    batch = CodeMatrix(Topology.MAS, np.stack([codes.phi, codes.phi[::-1]]))
    bstate = rls_init(rng, MAS, batch)
    singles = [rls_init(rng, MAS, CodeMatrix(Topology.MAS, batch.phi[c])) for c in range(2)]
    for _ in range(5):
        ch = draw_channel(rng, MAS)
        s = complex_normal(rng, (2,))
        r = complex_normal(rng, (6,))
        G = np.stack([ch.relay, ch.relay])
        bstate = dtacmo_sweep(bstate, np.stack([r, r]), G, np.stack([s, s]), MAS)
        singles = [dtacmo_sweep(st, r, ch.relay, s, MAS) for st in singles]
    for c in range(2):
        assert np.allclose(bstate.code.phi[c], singles[c].code.phi)
