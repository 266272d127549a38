"""Unitary one-parameter groups in frequency (multiplication) form.

``G(t)`` multiplies the ``k``-th coordinate by ``exp(i t q_k)`` on ``L^2`` of
the atom weights. Time is sampled on uniform grids ``step, 2 step, ...``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, pi, sqrt

import numpy as np

from .analysis import CertificateError, DensityEstimate, RigidityCertificate
from .constraints import SequenceConstraint
from .linalg import DimensionMismatch, ProbeSet, SpectralUnitary, _columns, _validate_weights

TWO_PI = 2 * pi
_CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True, eq=False)
class SpectralGroup:
    freqs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.freqs, dtype=float).ravel()
        if q.size == 0 or not np.all(np.isfinite(q)):
            raise ValueError("frequencies must be a nonempty list of finite reals")
        w = _validate_weights(np.full(q.size, 1.0 / q.size) if self.weights is None else self.weights)
        if w.size != q.size:
            raise ValueError("freqs and weights differ in length")
        object.__setattr__(self, "freqs", q)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, freqs):
        freqs = np.asarray(freqs, dtype=float)
        return cls(freqs, np.full(freqs.size, 1.0 / freqs.size))

    @property
    def dim(self) -> int:
        return self.freqs.size

    def norm(self, x) -> np.ndarray:
        X, vec = _columns(x)
        out = np.sqrt(self.weights @ (np.abs(X) ** 2))
        return out[0] if vec else out

    def inner(self, x, y) -> np.ndarray:
        X, vec = _columns(x)
        Y, _ = _columns(y)
        out = self.weights @ (X * Y.conj())
        return out[0] if vec else out

    def _row_chunks(self, count):
        step = max(1, _CHUNK_ELEMENTS // self.dim)
        for start in range(0, count, step):
            yield slice(start, start + step)


@dataclass(frozen=True, eq=False)
class GroupApproximantResult:
    G: SpectralGroup
    m: int
    lam: complex
    sup_diff: float

    def uniform_bound(self, t0: float) -> float:
        """``sqrt(2 t0 sup|q - p|)``, the relative deviation bound on ``|t| <= t0``."""
        return sqrt(2 * t0 * self.sup_diff)


def group_apply(G: SpectralGroup, t: float, f) -> np.ndarray:
    X, vec = _columns(f)
    if X.shape[0] != G.dim:
        raise DimensionMismatch(f"vector of length {X.shape[0]} for a group of dim {G.dim}")
    out = np.exp(1j * t * G.freqs)[:, None] * X
    return out[:, 0] if vec else out


def round_frequencies(freqs, alpha: float, m: int) -> np.ndarray:
    """Nearest point of ``{(alpha + 2 pi j) / m}``, ties going to the lower point."""
    q = np.asarray(freqs, dtype=float)
    k = (q * m - alpha) / TWO_PI
    j = np.ceil(k - 0.5)
    return (alpha + TWO_PI * j) / m


def period_for_time_tolerance(N: int, eps: float, t0: float) -> int:
    """Smallest integer ``m >= N`` with ``2 t0 pi / m <= eps^2``."""
    if N < 1 or eps <= 0 or t0 <= 0:
        raise ValueError("need N >= 1, eps > 0 and t0 > 0")
    m = max(N, ceil(TWO_PI * t0 / eps**2))
    while 2 * t0 * pi / m > eps**2:
        m += 1
    while m - 1 >= N and 2 * t0 * pi / (m - 1) <= eps**2:
        m -= 1
    return m


def lambda_rigid_approximant_cont(G: SpectralGroup, lam: complex, N: int, eps: float,
                                  t0: float) -> GroupApproximantResult:
    """Group ``G'`` with ``G'(m) = lam I`` exactly and ``sup|q - p| <= pi / m``.

    On ``|t| <= t0`` the deviation ``||(G(t) - G'(t)) f||`` stays below
    ``sqrt(2 t0 sup|q - p|) ||f|| <= eps ||f||``.
    """
    if abs(abs(lam) - 1) > 1e-12:
        raise ValueError("lam must be unimodular")
    m = period_for_time_tolerance(N, eps, t0)
    alpha = float(np.mod(np.angle(lam), TWO_PI))
    p = round_frequencies(G.freqs, alpha, m)
    rounded = SpectralGroup(p, G.weights)
    return GroupApproximantResult(G=rounded, m=m, lam=complex(lam), sup_diff=float(np.max(np.abs(G.freqs - p))))


def sample_times(t_max: float, step: float) -> np.ndarray:
    if step <= 0 or t_max < step:
        raise ValueError("need step > 0 and t_max >= step")
    count = int(np.floor(t_max / step + 1e-9))
    return step * np.arange(1, count + 1)


def group_residuals(G: SpectralGroup, P: ProbeSet, lam, times) -> np.ndarray:
    """Probe seminorm ``sum_l ||G(t) x_l - lam x_l|| / (2^l ||x_l||)`` at each time."""
    if P.dim != G.dim:
        raise DimensionMismatch(f"probe set of dim {P.dim} for a group of dim {G.dim}")
    X = P.vectors
    ts = np.asarray(times, dtype=float)
    w = P.weights / G.norm(X)
    mass = G.weights[:, None] * np.abs(X) ** 2
    out = np.empty(ts.size)
    for sl in G._row_chunks(ts.size):
        gaps = np.abs(np.exp(1j * np.outer(ts[sl], G.freqs)) - lam) ** 2
        out[sl] = np.sqrt(gaps @ mass) @ w
    return out


def group_seminorm(G: SpectralGroup, t: float, lam: complex, P: ProbeSet) -> float:
    """Same seminorm as ``group_residuals``, evaluated through ``group_apply``."""
    X = P.vectors
    return float(np.sum(P.weights * G.norm(group_apply(G, t, X) - lam * X) / G.norm(X)))


def group_rigidity_search(G: SpectralGroup, P: ProbeSet, lam: complex, eps: float, t_max: float, step: float,
                          time_constraint: SequenceConstraint | None = None,
                          max_terms: int | None = None) -> RigidityCertificate | None:
    """Sample times ``k * step <= t_max`` whose probe seminorm is below ``eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    times = sample_times(t_max, step)
    if time_constraint is not None:
        times = times[time_constraint.mask(times)]
    res = group_residuals(G, P, complex(lam), times)
    hit = np.flatnonzero(res < eps)
    if max_terms is not None:
        hit = hit[:max_terms]
    if hit.size == 0:
        return None
    return RigidityCertificate(
        lam=complex(lam),
        sequence=tuple(float(t) for t in times[hit]),
        residuals=tuple(float(r) for r in res[hit]),
        eps=float(eps),
        horizon=float(t_max),
        constraint=time_constraint or SequenceConstraint.all(),
        probe_tag=P.tag,
        continuous=True,
    )


def verify_group_certificate(cert: RigidityCertificate, G: SpectralGroup, P: ProbeSet,
                             atol: float = 1e-9) -> np.ndarray:
    if not cert.continuous:
        raise CertificateError("not a continuous-time certificate")
    if cert.probe_tag and cert.probe_tag != P.tag:
        raise CertificateError(f"certificate was issued for probes {cert.probe_tag!r}, got {P.tag!r}")
    ts = np.asarray(cert.sequence, dtype=float)
    if ts.size and (ts[0] <= 0 or ts[-1] > cert.horizon + 1e-9):
        raise CertificateError("times leave (0, horizon]")
    if ts.size and not np.all(cert.constraint.mask(ts)):
        raise CertificateError(f"times violate constraint {cert.constraint.description!r}")
    fresh = np.array([group_seminorm(G, t, cert.lam, P) for t in ts])
    for t, old, new in zip(ts, cert.residuals, fresh):
        if not new < cert.eps:
            raise CertificateError(f"residual at t={t} is {new:.3e}, not below eps={cert.eps:g}")
        if abs(old - new) > atol:
            raise CertificateError(f"recorded residual at t={t} is {old!r}, re-evaluation gives {new!r}")
    return fresh


def group_coefficients(G: SpectralGroup, x, times) -> np.ndarray:
    """``<G(t) x, x>`` at each time."""
    x = np.asarray(x, dtype=complex).ravel()
    if x.size != G.dim:
        raise DimensionMismatch(f"vector of length {x.size} for a group of dim {G.dim}")
    ts = np.asarray(times, dtype=float)
    mass = G.weights * np.abs(x) ** 2
    out = np.empty(ts.size, dtype=complex)
    for sl in G._row_chunks(ts.size):
        out[sl] = np.exp(1j * np.outer(ts[sl], G.freqs)) @ mass
    return out


def cont_density(G: SpectralGroup, x, eps: float, t_max: float, step: float) -> DensityEstimate:
    """Riemann-sum density ``step * #{t_k : |<G(t_k)x, x>| < eps} / t_max``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    times = sample_times(t_max, step)
    hits = int(np.count_nonzero(np.abs(group_coefficients(G, x, times)) < eps))
    return DensityEstimate(horizon=float(t_max), hits=hits, estimate=min(1.0, step * hits / t_max),
                           eps=float(eps), samples=int(times.size))


def embed_unitary(U: SpectralUnitary) -> SpectralGroup:
    """Group with ``G(1) = U``, frequencies on the principal branch ``[0, 2 pi)``."""
    return SpectralGroup(U.angles.copy(), U.weights)


def group_metric(G: SpectralGroup, H: SpectralGroup, P: ProbeSet, T0: float, step: float) -> float:
    """Truncated metric of uniform-on-compacts convergence.

    ``sum_{n <= ceil(T0)} 2^-n sum_j sup_{|t| <= n} ||G(t)x_j - H(t)x_j|| / (2^j ||x_j||)``
    with the supremum taken over a grid of spacing at most ``step``.
    """
    if G.dim != H.dim or P.dim != G.dim:
        raise DimensionMismatch("groups and probes must share one dimension")
    if not np.allclose(G.weights, H.weights, rtol=0, atol=1e-14):
        raise ValueError("groups act on differently weighted spaces")
    if step <= 0 or T0 <= 0:
        raise ValueError("need step > 0 and T0 > 0")
    n_max = ceil(T0)
    count = int(ceil(n_max / step))
    ts = np.linspace(0.0, n_max, count + 1)
    ts = np.concatenate([-ts[:0:-1], ts])
    X = P.vectors
    mass = G.weights[:, None] * np.abs(X) ** 2
    dev = np.empty((ts.size, X.shape[1]))
    for sl in G._row_chunks(ts.size):
        phase = np.abs(np.exp(1j * np.outer(ts[sl], G.freqs)) - np.exp(1j * np.outer(ts[sl], H.freqs))) ** 2
        dev[sl] = np.sqrt(phase @ mass)
    dev /= G.norm(X)
    total = 0.0
    for n in range(1, n_max + 1):
        window = np.abs(ts) <= n + 1e-12
        total += 2.0**-n * float(P.weights @ dev[window].max(axis=0))
    return total
