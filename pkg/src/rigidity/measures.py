"""Atomic probability measures on the circle and the line.

Fourier coefficients use ``mu_hat(n) = integral z^n dmu`` so that the
multiplication-by-``z`` operator satisfies ``<U^n 1, 1> = mu_hat(n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import SequenceConstraint
from .linalg import SpectralUnitary, _validate_weights

TWO_PI = 2 * np.pi
_CHUNK_ELEMENTS = 1 << 21


def _merge_atoms(points: np.ndarray, weights: np.ndarray, tol: float):
    order = np.argsort(points, kind="stable")
    p, w = points[order], weights[order]
    keep_p, keep_w = [p[0]], [w[0]]
    for a, b in zip(p[1:], w[1:]):
        if a - keep_p[-1] <= tol:
            keep_w[-1] += b
        else:
            keep_p.append(a)
            keep_w.append(b)
    return np.asarray(keep_p), np.asarray(keep_w)


@dataclass(frozen=True, eq=False)
class CircleMeasure:
    """Finitely many atoms ``(angle, mass)`` on the unit circle."""

    angles: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        theta = np.mod(np.asarray(self.angles, dtype=float).ravel(), TWO_PI)
        w = _validate_weights(self.weights)
        if theta.size != w.size:
            raise ValueError("angles and weights differ in length")
        if np.unique(theta).size != theta.size:
            raise ValueError("atom angles must be distinct modulo 2 pi")
        object.__setattr__(self, "angles", theta)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, angles, weights=None, tol: float = 1e-12):
        """Build a measure, merging atoms that coincide modulo ``2 pi``.

        Unnormalized positive weights are rescaled to total mass one.
        """
        theta = np.mod(np.asarray(angles, dtype=float).ravel(), TWO_PI)
        w = np.full(theta.size, 1.0) if weights is None else np.asarray(weights, dtype=float).ravel()
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        theta, w = theta[w > 0], w[w > 0]
        if theta.size == 0:
            raise ValueError("measure has no mass")
        theta, w = _merge_atoms(theta, w, tol)
        # an atom just below 2 pi coincides with one at 0
        if theta.size > 1 and TWO_PI - theta[-1] + theta[0] <= tol:
            w[0] += w[-1]
            theta, w = theta[:-1], w[:-1]
        return cls(theta, w / w.sum())

    @classmethod
    def dirac(cls, angle: float = 0.0):
        return cls(np.array([angle]), np.array([1.0]))

    @classmethod
    def roots_of_unity(cls, m: int):
        return cls(TWO_PI * np.arange(m) / m, np.full(m, 1.0 / m))

    @property
    def size(self) -> int:
        return self.angles.size

    def continuity_score(self) -> float:
        """Sum of squared atom masses; the Wiener limit of the measure."""
        return float(np.sum(self.weights**2))


@dataclass(frozen=True, eq=False)
class LineMeasure:
    """Finitely many atoms ``(point, mass)`` on the real line."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.points, dtype=float).ravel()
        w = _validate_weights(self.weights)
        if s.size != w.size:
            raise ValueError("points and weights differ in length")
        if np.unique(s).size != s.size:
            raise ValueError("atom points must be distinct")
        object.__setattr__(self, "points", s)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, point: float = 0.0):
        return cls(np.array([point]), np.array([1.0]))

    def continuity_score(self) -> float:
        return float(np.sum(self.weights**2))


def fourier_coefficient(mu: CircleMeasure, n):
    """``sum_k w_k exp(i n theta_k)``; ``n`` may be an integer or an array."""
    ns = np.asarray(n)
    scalar = ns.ndim == 0
    ns = np.atleast_1d(ns).astype(np.int64)
    out = np.empty(ns.size, dtype=complex)
    step = max(1, _CHUNK_ELEMENTS // mu.size)
    for start in range(0, ns.size, step):
        sl = slice(start, start + step)
        out[sl] = np.exp(1j * np.outer(ns[sl], mu.angles)) @ mu.weights
    return complex(out[0]) if scalar else out


def fourier_transform_line(mu: LineMeasure, t):
    """``sum_k w_k exp(i t s_k)`` for scalar or array ``t``."""
    ts = np.asarray(t, dtype=float)
    scalar = ts.ndim == 0
    vals = np.exp(1j * np.outer(np.atleast_1d(ts), mu.points)) @ mu.weights
    return complex(vals[0]) if scalar else vals


def wiener_average(mu: CircleMeasure, N: int) -> float:
    """Cesaro mean ``(1/N) sum_{n=1}^N |mu_hat(n)|^2``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    coeffs = fourier_coefficient(mu, np.arange(1, N + 1))
    return float(np.mean(np.abs(coeffs) ** 2))


def measure_rigidity_search(mu: CircleMeasure, lam: complex, eps: float, horizon: int,
                            constraint: SequenceConstraint | None = None) -> list[int]:
    """All admissible ``n <= horizon`` with ``|mu_hat(n) - lam| < eps``, increasing.

    An empty list means no witness inside the horizon.
    """
    if eps <= 0 or horizon < 1:
        raise ValueError("need eps > 0 and horizon >= 1")
    constraint = constraint or SequenceConstraint.all()
    ns = constraint.members(1, horizon)
    if ns.size == 0:
        return []
    gaps = np.abs(fourier_coefficient(mu, ns) - lam)
    return [int(n) for n in ns[gaps < eps]]


def spectral_measure_of(U: SpectralUnitary, x) -> CircleMeasure:
    """Spectral measure of ``x`` for a spectral-diagonal unitary.

    Atom ``theta_k`` receives mass ``w_k |x_k|^2 / ||x||_w^2``, so that the
    Fourier coefficients reproduce ``<U^n x, x> / ||x||_w^2``.
    """
    x = np.asarray(x, dtype=complex).ravel()
    if x.size != U.dim:
        raise ValueError(f"vector of length {x.size} for operator of dim {U.dim}")
    mass = U.weights * np.abs(x) ** 2
    total = mass.sum()
    if total <= 0:
        raise ValueError("vector has zero weighted norm")
    return CircleMeasure.from_atoms(U.angles, mass / total)


def rigid_measure(moduli, masses=None) -> CircleMeasure:
    """Atoms at ``2 pi / q_j`` for nested moduli ``q_1 | q_2 | ...``.

    ``mu_hat(q_J)`` differs from 1 only through atoms with ``j > J``, so the
    measure is rigid along the moduli once their tail masses shrink.
    Default masses are ``2^-j`` renormalized.
    """
    q = [int(v) for v in moduli]
    if any(b % a for a, b in zip(q, q[1:])):
        raise ValueError("moduli must divide each other successively")
    if masses is None:
        masses = 2.0 ** -np.arange(1, len(q) + 1)
    return CircleMeasure.from_atoms(TWO_PI / np.asarray(q, dtype=float), masses)
