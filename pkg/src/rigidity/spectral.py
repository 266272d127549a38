"""Model operators and periodic approximants of spectral unitaries."""

from __future__ import annotations

from dataclasses import dataclass
from math import asin, ceil, pi, sin

import numpy as np

from .linalg import (
    BlockOperator,
    DenseOperator,
    KoopmanOperator,
    Operator,
    ScaledOperator,
    ShiftOperator,
    SpectralUnitary,
)

TWO_PI = 2 * pi
# angles this close to a grid point (in units of the grid spacing) snap to it
SNAP_TOL = 1e-9


def rotation(theta: float) -> SpectralUnitary:
    """``exp(i theta)`` acting on a one-dimensional space."""
    return SpectralUnitary([theta], [1.0])


def rational_rotation(p: int, q: int) -> SpectralUnitary:
    if q < 1:
        raise ValueError("q must be positive")
    return rotation(TWO_PI * p / q)


def spectral(angles, weights=None) -> SpectralUnitary:
    return SpectralUnitary(angles, weights)


def shift(dim: int) -> ShiftOperator:
    return ShiftOperator(dim)


def koopman(permutation, weights=None) -> KoopmanOperator:
    return KoopmanOperator(permutation, weights)


def cyclic_permutation(m: int) -> np.ndarray:
    return (np.arange(m) + 1) % m


def rescale(alpha: complex, inner: Operator, require_isometry: bool = False) -> ScaledOperator:
    if require_isometry and abs(abs(alpha) - 1) > 1e-12:
        raise ValueError(f"|alpha| = {abs(alpha):.6g}; rescaling an isometry needs |alpha| = 1")
    return ScaledOperator(alpha, inner)


def dense(matrix) -> DenseOperator:
    return DenseOperator(matrix)


_BUILDERS = {
    "rotation": rotation,
    "rational-rotation": rational_rotation,
    "spectral": spectral,
    "shift": shift,
    "koopman": koopman,
    "rescale": rescale,
    "dense": dense,
}


def build_model(kind: str, **params) -> Operator:
    """Dispatch to the named constructor, e.g. ``build_model("shift", dim=8)``."""
    try:
        builder = _BUILDERS[kind.replace("_", "-")]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}") from None
    return builder(**params)


def direct_sum(T: Operator, S: Operator) -> Operator:
    """Block operator ``T (+) S``.

    Two spectral unitaries merge into one spectral unitary whose weight list is
    the concatenation rescaled to total mass one.
    """
    if isinstance(T, SpectralUnitary) and isinstance(S, SpectralUnitary):
        w = np.concatenate([T.weights, S.weights])
        return SpectralUnitary(np.concatenate([T.angles, S.angles]), w / w.sum())
    blocks = []
    for op in (T, S):
        blocks.extend(op.blocks if isinstance(op, BlockOperator) else [op])
    return BlockOperator(blocks)


@dataclass(frozen=True, eq=False)
class ApproximantResult:
    P: SpectralUnitary
    n: int
    lam: complex
    bound: float
    error: float  # realised sup_k |exp(i theta_k) - exp(i psi_k)|


def period_for_tolerance(N: int, eps: float) -> int:
    """Smallest ``n >= max(N, 2)`` with ``|1 - exp(2 pi i / n)| <= eps``."""
    if N < 1 or eps <= 0:
        raise ValueError("need N >= 1 and eps > 0")
    lo = max(N, 2)
    n = lo if eps >= 2 else max(lo, ceil(pi / asin(eps / 2)))
    while 2 * sin(pi / n) > eps:
        n += 1
    while n - 1 >= lo and 2 * sin(pi / (n - 1)) <= eps:
        n -= 1
    return n


def sector_round(angles, alpha: float, n: int) -> np.ndarray:
    """Round each angle down to the grid ``(alpha + 2 pi j) / n``, ``j = 0..n-1``.

    The sector ``[a_{j-1}, a_j)`` maps to its left endpoint; angles below
    ``a_0`` wrap to ``a_{n-1}``.
    """
    alpha = float(np.mod(alpha, TWO_PI))
    theta = np.mod(np.asarray(angles, dtype=float), TWO_PI)
    k = (theta - alpha / n) * n / TWO_PI
    nearest = np.round(k)
    j = np.where(np.abs(k - nearest) <= SNAP_TOL, nearest, np.floor(k))
    j = np.mod(j, n)
    return (alpha + TWO_PI * j) / n


def lambda_rigid_approximant(U: SpectralUnitary, lam: complex, N: int, eps: float) -> ApproximantResult:
    """Periodic unitary ``P`` with ``P^n = lam I``, ``n >= N``, close to ``U`` in norm."""
    if not isinstance(U, SpectralUnitary):
        raise TypeError("the approximant needs a spectral-diagonal unitary")
    if abs(abs(lam) - 1) > 1e-12:
        raise ValueError("lam must be unimodular")
    n = period_for_tolerance(N, eps)
    alpha = float(np.mod(np.angle(lam), TWO_PI))
    psi = sector_round(U.angles, alpha, n)
    P = SpectralUnitary(psi, U.weights)
    error = float(np.max(np.abs(U.phases - P.phases)))
    return ApproximantResult(P=P, n=n, lam=complex(lam), bound=2 * sin(pi / n), error=error)
