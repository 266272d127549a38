from fractions import Fraction
from math import asin, ceil, pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rigidity.analysis import (
    CertificateError,
    RigidityCertificate,
    awstability_density,
    chebyshev_density_bound,
    commutant_check,
    continued_fraction,
    convergents,
    derive_power_certificate,
    gamma_rigidity,
    gamma_rigidity_from_power,
    limit_set_alpha,
    recurrence_bound,
    rigidity_scan,
    rigidity_search,
    simultaneous_recurrence,
    verify_certificate,
)
from rigidity.constraints import SequenceConstraint
from rigidity.linalg import (
    DenseOperator,
    DimensionMismatch,
    ProbeSet,
    ShiftOperator,
    SpectralUnitary,
    identity,
    power_operator,
    seminorm_residual,
    unitary_defect,
)
from rigidity.measures import spectral_measure_of, wiener_average
from rigidity.spectral import rational_rotation, rescale, rotation

from conftest import GOLDEN, random_spectral

GOLDEN_ROT = rotation(2 * pi * GOLDEN)


def _probes(T):
    return ProbeSet.default(T.dim)


# constraints

def test_lane_parsing_and_membership():
    lane = SequenceConstraint.parse_lane("8:3")
    assert lane.contains(11) and not lane.contains(8)
    np.testing.assert_array_equal(lane.members(1, 30), [3, 11, 19, 27])
    assert SequenceConstraint.from_dict(lane.to_dict()) == lane


def test_explicit_and_time_constraints():
    ex = SequenceConstraint.explicit([9, 2, 5])
    np.testing.assert_array_equal(ex.members(1, 6), [2, 5])
    times = SequenceConstraint.arithmetic(0.5, 0)
    np.testing.assert_array_equal(times.mask(np.array([0.5, 0.75, 1.0])), [True, False, True])


# search

def test_identity_search_gives_first_powers():
    cert = rigidity_search(identity(4), ProbeSet.default(4), 1, 0.01, 100, max_terms=6)
    assert cert.sequence == tuple(range(1, 7))
    assert cert.residuals == (0.0,) * 6


def test_rational_rotation_hits_multiples_of_eight():
    T = rational_rotation(3, 8)
    cert = rigidity_search(T, _probes(T), 1, 0.01, 100, max_terms=5)
    assert cert.sequence == (8, 16, 24, 32, 40)


def test_golden_rotation_hits_convergent_denominators():
    cert = rigidity_search(GOLDEN_ROT, _probes(GOLDEN_ROT), 1, 0.1, 10_000, max_terms=5)
    theta = Fraction(GOLDEN)
    for n in cert.sequence:
        v = n * theta
        assert 2 * np.sin(pi * float(abs(v - round(v)))) < 0.1
    denominators = {c.denominator for c in convergents(GOLDEN, 10_000)}
    assert {34, 55, 89, 144} <= set(cert.sequence) & denominators


def test_lane_search_respects_constraint():
    T = rational_rotation(1, 8)
    lane = SequenceConstraint.parse_lane("8:0")
    cert = rigidity_search(T, _probes(T), 1, 0.01, 200, lane, max_terms=10)
    assert all(n % 8 == 0 for n in cert.sequence)
    assert len(cert) == 10


def test_shift_is_not_found():
    S = ShiftOperator(2_000)
    P = ProbeSet.default(2_000, support=100)
    cert, ns, res = rigidity_scan(S, P, 1, 1.0, 500)
    assert cert is None
    np.testing.assert_array_equal(ns, np.arange(1, 501))
    assert res.min() > 1.0


def test_scan_trace_is_complete_and_monotone():
    T = rational_rotation(1, 5)
    cert, ns, res = rigidity_scan(T, _probes(T), 1, 0.01, 1000, max_terms=3)
    np.testing.assert_array_equal(ns, np.arange(1, 16))
    assert cert.sequence == (5, 10, 15)
    assert len(res) == len(ns)


def test_scan_residuals_match_direct_evaluation(rng):
    for T in (random_spectral(rng, 40), ShiftOperator(50), DenseOperator(np.diag(np.exp(1j * rng.random(6))))):
        P = ProbeSet.default(T.dim, seed=3)
        _, ns, res = rigidity_scan(T, P, np.exp(0.3j), 1e-9, 64)
        direct = [seminorm_residual(T, int(n), np.exp(0.3j), P) for n in ns]
        np.testing.assert_allclose(res, direct, atol=1e-12)


def test_search_rejects_bad_arguments():
    with pytest.raises(ValueError):
        rigidity_search(identity(2), ProbeSet.default(2), 1, 0.0, 10)
    with pytest.raises(DimensionMismatch):
        rigidity_search(identity(2), ProbeSet.default(3), 1, 0.1, 10)


# certificates

def test_certificate_invariants_enforced():
    with pytest.raises(CertificateError):
        RigidityCertificate(1, (3, 2), (0.0, 0.0), 0.1, 10)
    with pytest.raises(CertificateError):
        RigidityCertificate(1, (1,), (0.5,), 0.1, 10)


def test_certificate_round_trip_and_verification():
    cert = rigidity_search(GOLDEN_ROT, _probes(GOLDEN_ROT), 1, 0.1, 10_000)
    back = RigidityCertificate.from_dict(cert.to_dict())
    assert back == cert
    verify_certificate(back, GOLDEN_ROT, _probes(GOLDEN_ROT))


def test_verification_detects_tampering():
    cert = rigidity_search(GOLDEN_ROT, _probes(GOLDEN_ROT), 1, 0.1, 10_000)
    data = cert.to_dict()
    data["residuals"][0] *= 0.5
    with pytest.raises(CertificateError):
        verify_certificate(RigidityCertificate.from_dict(data), GOLDEN_ROT, _probes(GOLDEN_ROT))
    data = cert.to_dict()
    data["sequence"][0] += 1
    data["residuals"][0] = 0.0
    with pytest.raises(CertificateError):
        verify_certificate(RigidityCertificate.from_dict(data), GOLDEN_ROT, _probes(GOLDEN_ROT))


def test_verification_detects_wrong_probe_set():
    cert = rigidity_search(GOLDEN_ROT, _probes(GOLDEN_ROT), 1, 0.1, 10_000)
    with pytest.raises(CertificateError):
        verify_certificate(cert, GOLDEN_ROT, ProbeSet.default(1, seed=99))


def test_derive_power_identity_for_k_one():
    cert = rigidity_search(GOLDEN_ROT, _probes(GOLDEN_ROT), 1, 0.1, 10_000)
    assert derive_power_certificate(cert, 1, GOLDEN_ROT, _probes(GOLDEN_ROT)) is cert


def test_derive_power_scalar_rotation():
    theta = 0.9
    T = rotation(theta)
    P = _probes(T)
    cert = rigidity_search(T, P, np.exp(1j * theta), 0.01, 1, max_terms=1)
    assert cert.sequence == (1,)
    derived = derive_power_certificate(cert, 3, T, P)
    assert derived.sequence == (3,)
    assert derived.lam == pytest.approx(np.exp(3j * theta))
    assert derived.residuals[0] < 1e-14


def test_derive_power_golden_doubles_at_most():
    P = _probes(GOLDEN_ROT)
    cert = rigidity_search(GOLDEN_ROT, P, 1, 0.1, 10_000)
    derived = derive_power_certificate(cert, 2, GOLDEN_ROT, P)
    for old, new, n in zip(cert.residuals, derived.residuals, derived.sequence):
        assert new <= 2 * old + 1e-10
        assert new == pytest.approx(seminorm_residual(GOLDEN_ROT, n, 1, P), abs=1e-15)
    verify_certificate(derived, GOLDEN_ROT, P)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_derive_power_bound_for_isometries(seed, k):
    rng = np.random.default_rng(seed)
    T = random_spectral(rng, 12)
    P = ProbeSet.default(12, seed=seed % 50)
    lam = np.exp(1j * rng.uniform(0, 2 * pi))
    cert = rigidity_search(T, P, lam, 1.5, 200, max_terms=4)
    if cert is None:
        return
    derived = derive_power_certificate(cert, k, T, P)
    assert all(new <= k * old + 1e-10 for old, new in zip(cert.residuals, derived.residuals))


def test_gamma_rigidity_on_rescaled_identity():
    alpha = np.exp(2j * pi * GOLDEN)
    T = rescale(alpha, identity(3))
    found = gamma_rigidity(T, ProbeSet.default(3), 0.05, 10_000, grid=8, max_terms=2)
    assert all(c is not None for c in found.values())


def test_gamma_rigidity_from_single_irrational_certificate():
    alpha = np.exp(2j * pi * GOLDEN)
    T = rescale(alpha, identity(2))
    P = ProbeSet.default(2)
    cert = rigidity_search(T, P, alpha, 0.01, 10, max_terms=2)
    out = gamma_rigidity_from_power(cert, T, P, grid=8, max_power=200)
    for target, derived in out.items():
        assert derived is not None
        assert derived.lam == pytest.approx(target)
        assert all(r < derived.eps for r in derived.residuals)


# recurrence

def test_recurrence_trivial_cases():
    assert simultaneous_recurrence([0.0, 0.0], 0.1, 10) == 1
    assert simultaneous_recurrence([2 * pi * 3 / 8], 0.01, 100) == 8


def test_recurrence_matches_brute_force():
    theta = [2 * pi * (np.sqrt(2) % 1), 2 * pi * (np.sqrt(3) % 1)]
    got = simultaneous_recurrence(theta, 0.1, 10**6)
    n = 1
    while max(abs(np.exp(1j * n * t) - 1) for t in theta) >= 0.1:
        n += 1
    assert got == n
    assert got <= recurrence_bound(2, 0.1)


def test_recurrence_bound_formula():
    delta = 2 * asin(0.05)
    assert recurrence_bound(3, 0.1) == ceil(2 * pi / delta) ** 3 + 1


def test_recurrence_not_found_below_witness():
    assert simultaneous_recurrence([2 * pi * GOLDEN], 0.01, 50) is None


def test_continued_fraction_of_golden_mean():
    assert continued_fraction(GOLDEN, 20)[:20] == [0] + [1] * 19
    dens = [c.denominator for c in convergents(GOLDEN, 1000)]
    assert dens == [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987]


# densities

def test_density_shift_e1():
    e1 = np.eye(5_000)[0]
    est = awstability_density(ShiftOperator(5_000), e1, e1, 0.1, 1_000)
    assert est.estimate == 1.0 and est.hits == 1_000


def test_density_identity_zero():
    x = np.ones(3)  # unit in the weighted norm of the spectral model
    assert awstability_density(identity(3), x, x, 0.5, 500).estimate == 0.0


def test_density_sixteen_angles_with_chebyshev_bridge():
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53]
    U = SpectralUnitary(2 * pi * (np.sqrt(primes) % 1))
    x = np.ones(16)
    N = 100_000
    est = awstability_density(U, x, x, 0.5, N)
    # simulation oracle computed directly from the closed form
    brute = np.abs(np.exp(1j * np.outer(np.arange(1, N + 1), U.angles)).mean(axis=1))
    assert est.hits == int(np.count_nonzero(brute < 0.5))
    assert est.estimate >= 0.9
    wiener = wiener_average(spectral_measure_of(U, x), N)
    assert est.estimate >= chebyshev_density_bound(wiener, 0.5)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_chebyshev_bridge_on_random_models(seed):
    rng = np.random.default_rng(seed)
    U = random_spectral(rng, int(rng.integers(4, 40)))
    x = np.ones(U.dim)
    eps = float(rng.uniform(0.2, 0.9))
    est = awstability_density(U, x, x, eps, 5_000)
    assert 0 <= est.estimate <= 1 and est.hits <= 5_000
    assert est.estimate >= chebyshev_density_bound(wiener_average(spectral_measure_of(U, x), 5_000), eps) - 1e-12


# limit sets and commutants

def test_limit_set_examples():
    assert limit_set_alpha(1, range(1, 100)) == [0.0]
    alpha = np.exp(2j * pi / 7)
    assert limit_set_alpha(alpha, np.arange(7, 700, 7)) == [0.0]
    full = limit_set_alpha(np.exp(2j * pi * GOLDEN), np.arange(1, 10_001), 64)
    assert len(full) == 64


def test_limit_set_points_are_certifiable():
    alpha = np.exp(2j * pi * GOLDEN)
    T = rescale(alpha, identity(2))
    P = ProbeSet.default(2)
    for angle in limit_set_alpha(alpha, np.arange(1, 2_001), 8):
        cert = rigidity_search(T, P, np.exp(1j * angle), 0.05, 100_000, max_terms=2)
        assert cert is not None


def test_commutant_examples(rng):
    P = ProbeSet.default(20)
    T = ShiftOperator(20)
    assert commutant_check(T, DenseOperator(np.exp(0.4j) * np.eye(20)), P) < 1e-15
    U, V = random_spectral(rng, 20), DenseOperator(np.diag(rng.random(20)))
    assert commutant_check(DenseOperator(np.diag(U.phases)), V, P) < 1e-15
    D = DenseOperator(np.diag(np.arange(1, 21)) / 20)
    assert commutant_check(T, D, ProbeSet.basis(20, 1)) > 0


def test_commutant_with_power_is_below_twice_residual(rng):
    T = random_spectral(rng, 16)
    P = ProbeSet.default(16)
    cert = rigidity_search(T, P, 1, 0.5, 2_000, max_terms=4)
    for n, r in zip(cert.sequence, cert.residuals):
        assert commutant_check(T, power_operator(T, n), P) <= 2 * r + 1e-12


# rigid implies unitary, desk form

def _random_unitary(rng, dim, order):
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    phases = np.exp(2j * pi * rng.integers(0, order, dim) / order)
    return Q @ np.diag(phases) @ Q.conj().T


def _zoo(rng):
    yield DenseOperator(np.eye(6))
    yield DenseOperator(_random_unitary(rng, 6, 5))
    yield DenseOperator(_random_unitary(rng, 8, 12))
    yield DenseOperator(0.5 * np.eye(4))
    yield DenseOperator(np.diag([0.3, 1, 1, 1]))
    A = rng.standard_normal((5, 5))
    yield DenseOperator(A / np.linalg.norm(A, 2))
    yield DenseOperator(np.diag(np.exp(2j * pi * np.array([0, 1, 2]) / 3)) @ np.diag([1, 1, 0.9]))


def test_rigid_contractions_in_zoo_are_unitary(rng):
    eps = 0.01
    seen = 0
    for T in _zoo(rng):
        P = ProbeSet.default(T.dim)
        cert = rigidity_search(T, P, 1, eps, 10_000, max_terms=3)
        if cert is not None:
            seen += 1
            assert unitary_defect(T) <= 10 * eps
    assert seen == 3


def test_hidden_decay_defeats_the_desk_form():
    # decay confined to the last, lightly weighted basis vector stays under eps
    T = DenseOperator(np.diag([1.0] * 7 + [0.5]))
    cert = rigidity_search(T, ProbeSet.default(8), 1, 0.01, 10_000, max_terms=3)
    assert cert is not None
    assert unitary_defect(T) > 10 * 0.01
