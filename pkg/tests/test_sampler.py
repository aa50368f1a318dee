import numpy as np
import pytest

from conftest import random_table
from ctecs import (
    CONSTANT_DEPTH,
    Circuit,
    EstimatorConfig,
    FourierTable,
    IQP,
    ModelBPlan,
    NoiseSpec,
    ValidationError,
    apply_depolarizing_exact,
    empirical_distribution,
    enumerate_alg_distribution,
    l1_distance,
    marginal_sum,
    noise_operator_apply,
    random_family_instance,
    sample_alg,
    sample_alg_batch,
    simulate_marginal,
    simulate_model_a,
    simulate_model_b,
)
from ctecs import oracle
from ctecs.circuits import h
from ctecs.fourier import EstimatedCoefficients, ExactCoefficients, uniform_table
from ctecs.sampler import negative_mass


# --- marginal sums ------------------------------------------------------------

def test_marginal_sum_uniform_table():
    table = uniform_table(2)
    assert marginal_sum(table, "0") == pytest.approx(0.5)
    assert marginal_sum(table, "1") == pytest.approx(0.5)


def test_marginal_sum_hand_example():
    table = FourierTable(1, 1, {0: 0.5, 1: 0.35})
    assert marginal_sum(table, "0") == pytest.approx(0.85)
    assert marginal_sum(table, "1") == pytest.approx(0.15)


def test_marginal_sum_empty_prefix_is_one():
    rng = np.random.default_rng(0)
    for _ in range(10):
        table = random_table(rng, int(rng.integers(1, 8)), 2)
        assert marginal_sum(table, "") == pytest.approx(1.0)


def test_marginal_sum_agrees_with_dense():
    rng = np.random.default_rng(1)
    table = random_table(rng, 6, 3)
    q = table.dense_values()
    for k in range(7):
        for prefix_ix in range(1 << k) if k else [0]:
            prefix = format(prefix_ix, f"0{k}b") if k else ""
            dense = q[prefix_ix << (6 - k): (prefix_ix + 1) << (6 - k)].sum()
            assert marginal_sum(table, prefix) == pytest.approx(dense, abs=1e-12)


# --- the sampler ----------------------------------------------------------------

def test_sampler_uniform_table_is_uniform():
    table = uniform_table(2)
    samples = sample_alg_batch(table, np.random.default_rng(2), 100_000)
    emp = empirical_distribution(samples, 2)
    assert np.max(np.abs(emp.p - 0.25)) <= 0.01


def test_sampler_negative_leaf_hand_example():
    table = FourierTable(1, 1, {0: 0.5, 1: 0.7})
    # q = (1.2, -0.2): the sign-fix makes 0 deterministic
    samples = sample_alg_batch(table, np.random.default_rng(3), 1000)
    assert not samples.any()
    assert sample_alg(table, np.random.default_rng(4)) == "0"
    alg = enumerate_alg_distribution(table)
    np.testing.assert_allclose(alg.p, [1.0, 0.0], atol=1e-15)
    q = table.dense_values()
    assert np.abs(q - alg.p).sum() == pytest.approx(0.4, abs=1e-12)
    assert 2 * negative_mass(table) == pytest.approx(0.4, abs=1e-12)


def test_enumeration_equals_q_when_nonnegative():
    table = FourierTable(2, 1, {0: 0.25, 0b10: 0.1, 0b01: -0.05})
    q = table.dense_values()
    assert (q >= 0).all()
    np.testing.assert_allclose(enumerate_alg_distribution(table).p, q, atol=1e-12)


def test_fix_identity_on_random_tables():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 11))
        table = random_table(rng, n, min(3, n))
        q = table.dense_values()
        alg = enumerate_alg_distribution(table).p
        assert np.abs(q - alg).sum() == pytest.approx(
            2 * negative_mass(table), abs=1e-9)


def test_sampling_matches_enumeration_iqp_table():
    decomp = random_family_instance(IQP, 8, np.random.default_rng(12))
    res = simulate_model_a(decomp, 2.0, 0.4, 0.25, ExactCoefficients(decomp),
                          np.random.default_rng(6), 100_000)
    alg = enumerate_alg_distribution(res.table)
    emp = empirical_distribution(res.samples, 8)
    assert 0.5 * l1_distance(emp, alg) <= 0.02


def test_sampler_chunking_is_seed_deterministic():
    table = random_table(np.random.default_rng(7), 5, 2)
    a = sample_alg_batch(table, np.random.default_rng(8), 10_000)
    b = sample_alg_batch(table, np.random.default_rng(8), 10_000)
    np.testing.assert_array_equal(a, b)


# --- model A ----------------------------------------------------------------------

def test_model_a_end_to_end_small():
    decomp = random_family_instance(IQP, 8, np.random.default_rng(21))
    p = oracle.output_distribution(decomp.circuit)
    alpha = max(1.0, oracle.anti_concentration_alpha(p))
    eps = 0.2
    res = simulate_model_a(decomp, alpha, 0.4, eps, ExactCoefficients(decomp),
                          np.random.default_rng(9), 0, true_epsilon=eps)
    noisy = apply_depolarizing_exact(p, NoiseSpec.uniform(eps), n=8)
    alg = enumerate_alg_distribution(res.table)
    assert l1_distance(noisy, alg) <= 0.4
    assert res.report["lambda_check"]["ok"]
    assert res.report["c_used"] <= 4 <= res.report["c_theory"]


def test_model_a_rejects_zero_lambda():
    decomp = random_family_instance(IQP, 4, np.random.default_rng(10))
    with pytest.raises(ValidationError):
        simulate_model_a(decomp, 1.0, 0.4, 0.0, ExactCoefficients(decomp),
                         np.random.default_rng(11), 10)


def test_model_a_warns_on_rate_knowledge_violation():
    decomp = random_family_instance(IQP, 4, np.random.default_rng(10))
    with pytest.warns(UserWarning, match="rate-knowledge"):
        res = simulate_model_a(
            decomp, 1.0, 0.4, 0.1, ExactCoefficients(decomp),
            np.random.default_rng(11), 10, true_epsilon=0.3)
    assert not res.report["lambda_check"]["ok"]


def test_model_a_single_hadamard_stays_uniform():
    from ctecs import build_constant_depth, build_iqp
    from ctecs.circuits import cz

    # p is uniform, so the noisy law and the sampled law are both uniform
    decomp = build_constant_depth(Circuit(1, (h(0),)), 1)
    for eps in (0.1, 0.5, 0.9):
        res = simulate_model_a(decomp, 1.0, 0.4, eps, ExactCoefficients(decomp),
                               np.random.default_rng(1), 0)
        alg = enumerate_alg_distribution(res.table)
        np.testing.assert_allclose(alg.p, 0.5, atol=1e-12)
    # same story for a uniform-output IQP circuit
    decomp = build_iqp(2, [cz(0, 1)])
    res = simulate_model_a(decomp, 1.0, 0.4, 0.3, ExactCoefficients(decomp),
                          np.random.default_rng(1), 0)
    alg = enumerate_alg_distribution(res.table)
    np.testing.assert_allclose(alg.p, 0.25, atol=1e-9)


# --- model B ----------------------------------------------------------------------

def test_model_b_plan_examples():
    plan = ModelBPlan.from_rates([0.2, 0.5])
    deltas = plan.residual_deltas(2)
    np.testing.assert_allclose(deltas, [0.0, 0.375])
    np.testing.assert_allclose(deltas / 2, [0.0, 0.1875])


def test_model_b_plan_rejects_rate_below_minimum():
    with pytest.raises(ValidationError):
        ModelBPlan(0.3, ((1, 0.2),))


def test_model_b_equal_rates_degenerates_to_model_a():
    decomp = random_family_instance(IQP, 5, np.random.default_rng(13))
    plan = ModelBPlan.from_rates([0.25] * 5)
    res = simulate_model_b(decomp, 1.5, 0.4, plan, ExactCoefficients(decomp),
                          np.random.default_rng(14), 200)
    assert res.report["degenerates_to_model_a"]
    assert not any(res.report["residual_deltas"])


def test_model_b_factorization_consistency():
    decomp = random_family_instance(IQP, 6, np.random.default_rng(15))
    rates = [0.2, 0.3, 0.2, 0.3, 0.2, 0.3]
    plan = ModelBPlan.from_rates(rates)
    res = simulate_model_b(decomp, 2.0, 0.4, plan, ExactCoefficients(decomp),
                          np.random.default_rng(16), 200_000)
    # enumerated model-B law: residual noise operators applied to Alg(q)
    vec = enumerate_alg_distribution(res.table).p
    for j, dj in enumerate(plan.residual_deltas(6)):
        vec = noise_operator_apply(vec, j, float(dj), 6)
    emp = empirical_distribution(res.samples, 6)
    assert 0.5 * l1_distance(emp, vec) <= 0.02
    # and the enumerated law tracks the dense noisy truth within the bound
    p = oracle.output_distribution(decomp.circuit)
    noisy = apply_depolarizing_exact(p, NoiseSpec.per_qubit(rates), n=6)
    assert l1_distance(vec, noisy) <= res.report["l1_bound"]


# --- marginals --------------------------------------------------------------------

def test_marginal_full_measurement_recovers_p():
    decomp = random_family_instance(IQP, 5, np.random.default_rng(17))
    res = simulate_marginal(decomp, list(range(5)), ExactCoefficients(decomp),
                            np.random.default_rng(18), 0)
    p = oracle.output_distribution(decomp.circuit).p
    alg = enumerate_alg_distribution(res.table).p
    if (p > 1e-12).all():
        np.testing.assert_allclose(alg, p, atol=1e-9)
    else:
        assert l1_distance(alg, p) <= 2 * negative_mass(res.table) + 1e-9


def test_marginal_single_qubit_matches_dense():
    decomp = random_family_instance(CONSTANT_DEPTH, 9, np.random.default_rng(19))
    res = simulate_marginal(decomp, [4], ExactCoefficients(decomp),
                            np.random.default_rng(20), 0)
    p = oracle.output_distribution(decomp.circuit)
    marg = oracle.marginal_distribution(p, [4])
    alg = enumerate_alg_distribution(res.table)
    assert l1_distance(alg, marg) <= 1e-9


def test_marginal_constant_depth_estimator_source():
    decomp = random_family_instance(CONSTANT_DEPTH, 12, np.random.default_rng(22))
    cfg = EstimatorConfig(batch_size=20_000, batch_count=5, seed=0)
    res = simulate_marginal(decomp, [2, 5, 9], EstimatedCoefficients(decomp, cfg),
                            np.random.default_rng(23), 10_000)
    p = oracle.output_distribution(decomp.circuit)
    marg = oracle.marginal_distribution(p, [2, 5, 9])
    alg = enumerate_alg_distribution(res.table)
    assert l1_distance(alg, marg) <= 0.05
    emp = empirical_distribution(res.samples, 3)
    assert l1_distance(emp, marg) <= 0.08


def test_marginal_rejects_duplicates():
    decomp = random_family_instance(IQP, 4, np.random.default_rng(24))
    with pytest.raises(ValidationError):
        simulate_marginal(decomp, [1, 1], ExactCoefficients(decomp),
                          np.random.default_rng(25), 10)
