import numpy as np
import pytest
from scipy import stats

from ctecs import Circuit, ProductState, PhaseState, ValidationError, ct_state_of
from ctecs import _bits, oracle
from ctecs.circuits import ccz, cz, gate_matrix, h, rx, rz, s, t, z


def all_amplitudes(state):
    bits = _bits.index_to_bits(np.arange(1 << state.n), state.n)
    return state.amplitudes(bits)


def test_product_state_requires_normalized_pairs():
    with pytest.raises(ValidationError):
        ProductState(np.array([1.0]), np.array([1.0]))


def test_zero_state_amplitudes():
    state = ProductState.zero(3)
    assert state.amplitude("000") == 1.0
    for ix in range(1, 8):
        assert state.amplitude(ix) == 0.0


def test_plus_state_with_cz_phase():
    state = PhaseState(ProductState.plus(2), (cz(0, 1),))
    assert state.amplitude("11") == pytest.approx(-0.5)
    assert state.amplitude("01") == pytest.approx(0.5)


def test_th_zero_amplitude_matches_dense_product():
    mat = gate_matrix(t(0)) @ gate_matrix(h(0))
    state = ct_state_of(Circuit(1, (h(0), t(0))))
    assert state.amplitude("1") == pytest.approx(complex(mat[1, 0]))
    # equal to e^{i pi/4}/sqrt(2) up to the rotation-form global phase
    assert abs(state.amplitude("1")) == pytest.approx(1 / np.sqrt(2))
    ratio = state.amplitude("1") / state.amplitude("0")
    assert ratio == pytest.approx(np.exp(1j * np.pi / 4))


def test_amplitude_rejects_wrong_length():
    with pytest.raises(ValidationError):
        ProductState.zero(3).amplitude("0101")


@pytest.mark.parametrize("n", [2, 6, 12])
def test_born_normalization_dense(n):
    rng = np.random.default_rng(n)
    angles = rng.uniform(0, 2 * np.pi, n)
    phases = rng.uniform(0, 2 * np.pi, n)
    state = ProductState(np.cos(angles), np.sin(angles) * np.exp(1j * phases))
    total = np.sum(np.abs(all_amplitudes(state)) ** 2)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_sample_zero_state_is_constant():
    state = ProductState.zero(4)
    samples = state.sample_bits(np.random.default_rng(0), 100)
    assert not samples.any()


def test_sample_plus_state_frequencies():
    state = ProductState.plus(3)
    draws = 100_000
    samples = state.sample_bits(np.random.default_rng(1), draws)
    freq = samples.mean(axis=0)
    sigma = 0.5 / np.sqrt(draws)
    assert np.all(np.abs(freq - 0.5) < 3 * sigma + 1e-12)


def test_sample_rotated_product_state_chi_square():
    n, draws = 4, 100_000
    u = Circuit(n, tuple(rx(q, 1, 3) for q in range(n))
                + tuple(rz(q, -1, 2) for q in range(n)))
    state = ct_state_of(u)
    probs = np.abs(oracle.simulate_state(u)) ** 2
    samples = state.sample_bits(np.random.default_rng(2), draws)
    counts = np.bincount(_bits.bits_to_index(samples), minlength=1 << n)
    result = stats.chisquare(counts, probs * draws)
    assert result.pvalue > 1e-3


def test_phase_state_unit_modulus_ratio_and_same_born_law():
    rng = np.random.default_rng(5)
    base = ProductState.plus(4)
    diag = (z(0), s(1), t(2), rz(3, -1, 4), cz(0, 2), ccz(1, 2, 3))
    state = PhaseState(base, diag)
    bits = _bits.index_to_bits(np.arange(16), 4)
    ratios = state.amplitudes(bits) / base.amplitudes(bits)
    np.testing.assert_allclose(np.abs(ratios), 1.0, atol=1e-12)
    np.testing.assert_allclose(
        np.abs(state.amplitudes(bits)) ** 2, np.abs(base.amplitudes(bits)) ** 2,
        atol=1e-12)


def test_phase_state_rejects_non_diagonal():
    with pytest.raises(ValidationError):
        PhaseState(ProductState.plus(2), (h(0),))


# --- ct_state_of ------------------------------------------------------------------

def test_ct_state_of_h_layer_is_plus():
    state = ct_state_of(Circuit(3, tuple(h(q) for q in range(3))))
    np.testing.assert_allclose(
        all_amplitudes(state), np.full(8, 1 / np.sqrt(8)), atol=1e-12)


def test_ct_state_of_identity_is_zero_state():
    state = ct_state_of(Circuit(2, ()))
    np.testing.assert_allclose(all_amplitudes(state), [1, 0, 0, 0], atol=1e-15)


def test_ct_state_of_diagonal_block_matches_dense():
    u = Circuit(3, tuple(h(q) for q in range(3)) + (z(0), ccz(0, 1, 2)))
    state = ct_state_of(u)
    np.testing.assert_allclose(
        all_amplitudes(state), oracle.simulate_state(u), atol=1e-12)


def test_ct_state_of_random_family_u_blocks_match_dense():
    from ctecs import FAMILIES, random_family_instance

    for family in FAMILIES:
        for seed in range(8):
            rng = np.random.default_rng(seed)
            n = 2 + seed % 4
            decomp = random_family_instance(family, n, rng)
            state = ct_state_of(decomp.u_block)
            np.testing.assert_allclose(
                all_amplitudes(state), oracle.simulate_state(decomp.u_block),
                atol=1e-12)


def test_ct_state_of_rejects_entangling_prefix():
    with pytest.raises(ValidationError):
        ct_state_of(Circuit(2, (cz(0, 1), h(0))))
