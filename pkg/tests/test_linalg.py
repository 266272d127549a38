import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rigidity.linalg import (
    AdjointUnavailable,
    DenseOperator,
    DimensionMismatch,
    NotContractive,
    ProbeSet,
    ScaledOperator,
    ShiftOperator,
    SpectralUnitary,
    apply_power,
    identity,
    metric_strong,
    metric_strong_star,
    metric_weak,
    seminorm_residual,
    unitary_defect,
    weak_residual,
    weak_to_strong_bound,
)
from rigidity.spectral import rotation

from conftest import geometric, random_spectral


def _scalar(dim, z):
    return DenseOperator(z * np.eye(dim))


# apply_power

def test_identity_power_is_noop(rng):
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    np.testing.assert_allclose(apply_power(identity(6), 5, x), x)


@pytest.mark.parametrize("n", [0, 1, 7, 1000])
def test_rotation_power_is_scalar_exponential(n):
    theta = 0.731
    np.testing.assert_allclose(apply_power(rotation(theta), n, [1.0]), [np.exp(1j * n * theta)], atol=1e-12)


def test_shift_moves_basis_vector():
    e1 = np.eye(8)[0]
    np.testing.assert_array_equal(apply_power(ShiftOperator(8), 3, e1), np.eye(8)[3])


def test_shift_pushes_mass_off_the_end():
    x = np.ones(5)
    np.testing.assert_array_equal(apply_power(ShiftOperator(5), 5, x), np.zeros(5))


def test_power_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        apply_power(ShiftOperator(4), 1, np.ones(3))


def test_spectral_power_matches_dense_iteration(rng):
    U = random_spectral(rng, 64)
    D = DenseOperator(np.diag(U.phases))
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    for n in (1, 13, 512, 10_000):
        np.testing.assert_allclose(U.power(n, x), D.power(n, x), atol=1e-10)


def test_spectral_power_matches_iterated_dense_for_large_dim(rng):
    U = random_spectral(rng, 512)
    M = np.diag(U.phases)
    x = rng.standard_normal(512) + 0j
    y = x.copy()
    for _ in range(300):
        y = M @ y
    np.testing.assert_allclose(U.power(300, x), y, atol=1e-10)


# metrics

def test_metric_strong_identical_is_zero(rng):
    U = random_spectral(rng, 10)
    assert metric_strong(U, U, ProbeSet.default(10)) == 0


def test_metric_strong_identity_vs_minus_identity():
    P = ProbeSet.default(12)
    I, minus = _scalar(12, 1), _scalar(12, -1)
    assert metric_strong(I, minus, P) == pytest.approx(2 * geometric(P.size), abs=1e-12)


def test_metric_strong_scalar_rotation():
    theta = 1.1
    P = ProbeSet.default(12)
    got = metric_strong(_scalar(12, 1), _scalar(12, np.exp(1j * theta)), P)
    assert got == pytest.approx(abs(1 - np.exp(1j * theta)) * geometric(P.size), abs=1e-12)


def test_metric_strong_star_identity_vs_minus_identity():
    P = ProbeSet.default(12)
    assert metric_strong_star(_scalar(12, 1), _scalar(12, -1), P) == pytest.approx(4 * geometric(P.size), abs=1e-12)


def test_metric_strong_star_same_angles(rng):
    U = random_spectral(rng, 9)
    V = SpectralUnitary(U.angles.copy(), U.weights)
    assert metric_strong_star(U, V, ProbeSet.default(9)) == 0


def test_metric_weak_zero_operator(unit_probes):
    assert metric_weak(_scalar(8, 1), _scalar(8, 0), unit_probes) == pytest.approx(geometric(8), abs=1e-12)


def test_metric_weak_minus_identity(unit_probes):
    assert metric_weak(_scalar(8, 1), _scalar(8, -1), unit_probes) == pytest.approx(2 * geometric(8), abs=1e-12)


def test_metric_weak_identical(rng):
    U = random_spectral(rng, 8)
    assert metric_weak(U, U, ProbeSet.default(8)) == 0


def test_metrics_reject_mismatched_dims():
    with pytest.raises(DimensionMismatch):
        metric_strong(identity(3), identity(4), ProbeSet.default(3))


def test_empty_probe_set_rejected():
    with pytest.raises(ValueError):
        ProbeSet(np.zeros((4, 0)))


def test_zero_probe_rejected():
    with pytest.raises(ValueError):
        ProbeSet(np.zeros((4, 1)))


def test_probe_weights_sum_below_one():
    P = ProbeSet.default(40)
    assert P.size == 16
    assert P.weights.sum() < 1


def test_default_probes_are_reproducible():
    a, b = ProbeSet.default(30, seed=4), ProbeSet.default(30, seed=4)
    np.testing.assert_array_equal(a.vectors, b.vectors)
    assert a.tag == b.tag


def _operators(seed, dim=6):
    rng = np.random.default_rng(seed)
    ops = []
    for _ in range(3):
        A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        ops.append(DenseOperator(A / np.linalg.norm(A, 2)))
    return ops


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metric_axioms(seed):
    T, S, R = _operators(seed)
    P = ProbeSet.default(6, seed=seed % 1000)
    for metric in (metric_strong, metric_strong_star):
        assert metric(T, S, P) == pytest.approx(metric(S, T, P), abs=1e-12)
        assert metric(T, R, P) <= metric(T, S, P) + metric(S, R, P) + 1e-12
        assert metric(T, T, P) == 0
    # the weak metric is symmetric in (T, S) but only the row index is weighted
    assert metric_weak(T, S, P) == pytest.approx(metric_weak(S, T, P), abs=1e-12)
    assert metric_weak(T, R, P) <= metric_weak(T, S, P) + metric_weak(S, R, P) + 1e-12
    assert metric_weak(T, T, P) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metric_orderings(seed):
    T, S, _ = _operators(seed)
    P = ProbeSet.default(6, seed=seed % 997, n_basis=6, n_random=4)
    strong = metric_strong(T, S, P)
    assert strong <= metric_strong_star(T, S, P) + 1e-12
    assert metric_weak(T, S, P) <= P.size * strong + 1e-12


# seminorms

def test_seminorm_identity_is_zero():
    P = ProbeSet.default(10)
    assert all(seminorm_residual(identity(10), n, 1, P) == 0 for n in (0, 1, 50))


def test_seminorm_scalar_rotation():
    theta, n = 0.4, 7
    P = ProbeSet.default(10)
    U = SpectralUnitary(np.full(10, theta))
    expected = abs(np.exp(1j * n * theta) - 1) * geometric(P.size)
    assert seminorm_residual(U, n, 1, P) == pytest.approx(expected, abs=1e-12)


def test_seminorm_exact_periodicity_to_minus_identity(rng):
    m = 6
    angles = (np.pi + 2 * np.pi * rng.integers(0, m, 20)) / m
    U = SpectralUnitary(angles)
    assert seminorm_residual(U, m, -1, ProbeSet.default(20)) < 1e-14


def test_weak_residual_identity():
    assert weak_residual(identity(5), 9, 1, ProbeSet.default(5)) == 0


def test_weak_residual_shift_first_basis_vector():
    P = ProbeSet.basis(8, 1)
    assert weak_residual(ShiftOperator(8), 3, 1, P) == pytest.approx(0.5)


def test_weak_residual_minus_identity_even_power():
    assert weak_residual(_scalar(5, -1), 6, 1, ProbeSet.default(5)) == 0


# weak-to-strong inequality

def test_weak_to_strong_identity():
    assert weak_to_strong_bound(identity(3), 4, 1, np.ones(3)) == (0.0, 0.0)


def test_weak_to_strong_rotation_equality():
    theta = 2.2
    lhs, rhs = weak_to_strong_bound(rotation(theta), 1, 1, [1.0])
    assert lhs == pytest.approx(abs(np.exp(1j * theta) - 1) ** 2)
    assert rhs == pytest.approx(2 * (1 - np.cos(theta)))
    assert lhs == pytest.approx(rhs)


def test_weak_to_strong_half_identity():
    lhs, rhs = weak_to_strong_bound(_scalar(1, 0.5), 1, 1, [1.0])
    assert (lhs, rhs) == pytest.approx((0.25, 1.0))


def test_weak_to_strong_rejects_expansions():
    with pytest.raises(NotContractive):
        weak_to_strong_bound(_scalar(2, 1.5), 1, 1, np.ones(2))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 40), st.floats(0, 2 * np.pi))
def test_weak_to_strong_holds_for_contractions(seed, n, phase):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    T = DenseOperator(A / np.linalg.norm(A, 2) * rng.uniform(0.2, 1.0))
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    lhs, rhs = weak_to_strong_bound(T, n, np.exp(1j * phase), x)
    assert lhs <= rhs + 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 200), st.floats(0, 2 * np.pi))
def test_weak_to_strong_holds_for_shift(seed, n, phase):
    x = np.random.default_rng(seed).standard_normal(12)
    lhs, rhs = weak_to_strong_bound(ShiftOperator(12), n, np.exp(1j * phase), x)
    assert lhs <= rhs + 1e-10


# unitary defect

def test_defect_of_spectral_unitary(rng):
    assert unitary_defect(random_spectral(rng, 30)) < 1e-14


def test_defect_of_scaled_identity():
    assert unitary_defect(_scalar(4, 0.9)) == pytest.approx(0.19)


def test_defect_of_truncated_shift():
    assert unitary_defect(ShiftOperator(16)) == pytest.approx(1.0)


def test_defect_of_large_shift_uses_endpoint_samples():
    assert unitary_defect(ShiftOperator(20_000)) == pytest.approx(1.0)


def test_contractive_flag_matches_norm(rng):
    for op in (ShiftOperator(5), random_spectral(rng, 5), DenseOperator(0.3 * np.eye(4))):
        if op.dim <= 2048:
            basis = np.eye(op.dim)
            M = np.column_stack([op.apply(basis[:, k]) for k in range(op.dim)])
            assert np.linalg.norm(M, 2) <= 1 + 1e-12
        assert op.contractive


def test_rescaled_operator_powers(rng):
    alpha = np.exp(0.37j)
    inner = random_spectral(rng, 7)
    T = ScaledOperator(alpha, inner)
    x = rng.standard_normal(7) + 0j
    for n in (0, 1, 5, 91):
        np.testing.assert_allclose(T.power(n, x), alpha**n * inner.power(n, x), atol=1e-12)


def test_shift_has_adjoint_but_power_operator_may_not():
    S = ShiftOperator(6)
    np.testing.assert_array_equal(S.apply_adjoint(np.eye(6)[1]), np.eye(6)[0])
    assert issubclass(AdjointUnavailable, TypeError)
