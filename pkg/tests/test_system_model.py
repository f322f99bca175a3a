import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtdstc.system_model import (
    QPSK_POINTS,
    ConfigError,
    RelayStrategy,
    Scheme,
    SystemConfig,
    Topology,
    build_candidate_set,
    build_delay_matrix,
    candidate_bits,
    delay_label,
    qpsk_demap,
    qpsk_map,
    slot_delay_operator,
    validate_config,
)

S = 1 / np.sqrt(2)


def test_unit_offset_delay_profile_accepted():
    cfg = validate_config(SystemConfig(topology=Topology.MAS, n_r=2, N=2, T=2, delays=(0, 1)))
    assert cfg.delta_max == 1


def test_synchronized_profile():
    assert validate_config(SystemConfig(delays=(0, 0))).delta_max == 0


@pytest.mark.parametrize("kwargs, field", [
    (dict(delays=(1, 2)), "delays"),
    (dict(delays=(0, -1)), "delays"),
    (dict(n_r=0, delays=()), "n_r"),
    (dict(N=3), "N"),
    (dict(T=3), "T"),
    (dict(topology=Topology.SAS, scheme=Scheme.FullAlamoutiPerRelay), "scheme"),
    (dict(topology=Topology.MAS, N=1), "N"),
    (dict(topology=Topology.SAS, n_r=3, delays=(0, 0, 0)), "n_r"),
    (dict(relay_strategy=RelayStrategy.AF), "relay_strategy"),
    (dict(P_R=0.0), "P_R"),
    (dict(sigma_s2=2.0), "sigma_s2"),
    (dict(trials_per_point=0), "trials_per_point"),
    (dict(forgetting=1.5), "forgetting"),
    (dict(delta_init=0.0), "delta_init"),
    (dict(delays=(0,)), "delays"),
])
def test_invalid_configs_name_the_field(kwargs, field):
    with pytest.raises(ConfigError) as err:
        validate_config(SystemConfig(**kwargs))
    assert err.value.field == field


def test_validate_returns_same_object():
    cfg = SystemConfig()
    assert validate_config(cfg) is cfg


def test_af_needs_single_antenna_sas():
    ok = SystemConfig(topology=Topology.SAS, N=1, relay_strategy=RelayStrategy.AF)
    validate_config(ok)
    with pytest.raises(ConfigError):
        validate_config(SystemConfig(topology=Topology.SAS, N=1, relay_strategy=RelayStrategy.AF,
                                     adapt=True))


def test_qpsk_examples():
    assert qpsk_map([0, 0]) == pytest.approx((1 + 1j) * S)
    assert qpsk_map([0, 1]) == pytest.approx((-1 + 1j) * S)
    assert qpsk_map([1, 1]) == pytest.approx((-1 - 1j) * S)
    assert qpsk_map([1, 0]) == pytest.approx((1 - 1j) * S)


def test_qpsk_demap_examples():
    assert qpsk_demap((1 + 1j) * S).tolist() == [0, 0]
    assert qpsk_demap(0.9 + 0.8j).tolist() == [0, 0]
    assert qpsk_demap(0).tolist() == [0, 0]
    assert qpsk_demap(-0.3 - 0.1j).tolist() == [1, 1]


@given(st.integers(0, 1), st.integers(0, 1))
def test_qpsk_roundtrip(b0, b1):
    x = qpsk_map([b0, b1])
    assert abs(abs(x) ** 2 - 1) < 1e-15
    assert qpsk_demap(x).tolist() == [b0, b1]


@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_demap_is_nearest_point(z):
    bits = qpsk_demap(z)
    d = np.abs(z - QPSK_POINTS)
    assert d[2 * bits[0] + bits[1]] <= d.min() + 1e-9 * max(1.0, abs(z))


def test_gray_neighbours_differ_in_one_bit():
    for i, p in enumerate(QPSK_POINTS):
        for j, q in enumerate(QPSK_POINTS):
            if np.isclose(abs(p - q), np.sqrt(2)):
                assert bin(i ^ j).count("1") == 1


def test_delay_matrix_examples():
    assert np.array_equal(build_delay_matrix(0, 0, 2), np.eye(2))
    assert np.array_equal(build_delay_matrix(1, 1, 2), [[0, 0], [1, 0], [0, 1]])
    assert np.array_equal(build_delay_matrix(0, 1, 2), [[1, 0], [0, 1], [0, 0]])
    with pytest.raises(ValueError):
        build_delay_matrix(2, 1, 2)


@given(st.integers(0, 6), st.integers(0, 6), st.integers(1, 6))
def test_delay_matrix_columns_orthonormal(dk, extra, rows):
    D = build_delay_matrix(dk, dk + extra, rows)
    assert D.shape == (dk + extra + rows, rows)
    assert np.array_equal(D.T @ D, np.eye(rows))
    assert np.array_equal(np.abs(D).sum(axis=0), np.ones(rows))


def test_slot_operator_shifts_whole_slots():
    op = slot_delay_operator(1, 2, 2, 2)
    assert op.shape == (8, 4)
    v = np.arange(1, 5)
    assert np.array_equal(op @ v, [0, 0, 1, 2, 3, 4, 0, 0])


@pytest.mark.parametrize("N", [1, 2, 3])
def test_candidate_set(N):
    S_ = build_candidate_set(N)
    assert S_.shape == (N, 4 ** N)
    assert len({tuple(np.round(c, 12)) for c in S_.T}) == 4 ** N
    assert np.allclose(np.sum(np.abs(S_) ** 2, axis=0), N)


def test_candidate_bits_match_symbols():
    S_, B = build_candidate_set(2), candidate_bits(2)
    for c in range(16):
        assert np.allclose(qpsk_map(B[c].reshape(2, 2)), S_[:, c])


def test_delay_label():
    assert delay_label((0, 1)) == "[0,1]"
