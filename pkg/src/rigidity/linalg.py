"""Operators on finite-dimensional weighted Hilbert spaces.

Every operator lives on ``C^dim`` with the inner product
``<x, y> = sum_i m_i x_i conj(y_i)`` for a positive ``metric`` vector ``m``.
Dense matrices and shifts use the Euclidean metric (all ones); spectral and
Koopman models use the probability weights of their atoms, so that they are
multiplication/composition operators on ``L^2(Omega, mu)``.

Vectors are plain numpy arrays. Functions accept either a single vector of
shape ``(dim,)`` or a block of column vectors of shape ``(dim, L)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

ATOL = 1e-10
DENSE_MAX_DIM = 2048
WEIGHT_TOL = 1e-12
# rows of exp(i n theta) evaluated at once in closed-form sweeps
_CHUNK_ELEMENTS = 1 << 21


class DimensionMismatch(ValueError):
    pass


class AdjointUnavailable(TypeError):
    pass


class NotContractive(ValueError):
    pass


def _columns(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=complex)
    if arr.ndim == 1:
        return arr[:, None], True
    if arr.ndim != 2:
        raise ValueError(f"expected a vector or a block of columns, got shape {arr.shape}")
    return arr, False


def _validate_weights(weights, what="weights") -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError(f"{what} must be a nonempty 1-d list")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValueError(f"{what} must be strictly positive")
    if abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise ValueError(f"{what} must sum to 1 (got {w.sum():.15g})")
    return w


def _lams(lam, count: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(lam, dtype=complex), (count,))


class Operator:
    """Base class for the operator kinds.

    Subclasses implement ``_apply`` and usually ``_apply_adjoint``. Kinds whose
    powers have a closed form set ``closed_form = True`` and override
    ``residual_norms``/``power_inner`` with direct formulas; the rest fall back
    to iterated application.
    """

    kind = "abstract"
    closed_form = False

    def __init__(self, dim: int, metric=None):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.metric = np.ones(self.dim) if metric is None else np.asarray(metric, dtype=float)
        self.contractive = False
        self.isometric = False
        self.unitary = False

    def __repr__(self):
        return f"{type(self).__name__}(kind={self.kind!r}, dim={self.dim})"

    # -- geometry ---------------------------------------------------------
    def inner(self, x, y) -> np.ndarray:
        """Column-wise inner products ``<x_l, y_l>`` in this space."""
        X, vec = _columns(x)
        Y, _ = _columns(y)
        out = np.einsum("i,il,il->l", self.metric, X, Y.conj())
        return out[0] if vec else out

    def norm(self, x) -> np.ndarray:
        X, vec = _columns(x)
        out = np.sqrt(np.einsum("i,il->l", self.metric, np.abs(X) ** 2))
        return out[0] if vec else out

    def _check(self, X: np.ndarray):
        if X.shape[0] != self.dim:
            raise DimensionMismatch(f"vector of length {X.shape[0]} for operator of dim {self.dim}")

    # -- application ------------------------------------------------------
    def apply(self, x) -> np.ndarray:
        X, vec = _columns(x)
        self._check(X)
        out = self._apply(X)
        return out[:, 0] if vec else out

    def apply_adjoint(self, x) -> np.ndarray:
        X, vec = _columns(x)
        self._check(X)
        out = self._apply_adjoint(X)
        return out[:, 0] if vec else out

    def power(self, n: int, x) -> np.ndarray:
        if n < 0:
            raise ValueError("power must be nonnegative")
        X, vec = _columns(x)
        self._check(X)
        out = self._power(int(n), X)
        return out[:, 0] if vec else out

    def _apply(self, X):
        raise NotImplementedError

    def _apply_adjoint(self, X):
        raise AdjointUnavailable(f"operator kind {self.kind!r} has no adjoint")

    def _power(self, n, X):
        Y = X.copy()
        for _ in range(n):
            Y = self._apply(Y)
        return Y

    def sweep(self, ns, x):
        """Yield ``(n, T^n x)`` for the increasing integers ``ns``."""
        X, _ = _columns(x)
        self._check(X)
        current, Y = 0, X.copy()
        for n in ns:
            n = int(n)
            if n < current:
                raise ValueError("sweep needs nondecreasing powers")
            if self.closed_form:
                Y = self._power(n, X)
            else:
                for _ in range(n - current):
                    Y = self._apply(Y)
            current = n
            yield n, Y

    # -- batched quantities over many powers --------------------------------
    def residual_norms(self, ns, x, lam) -> np.ndarray:
        """``||T^n x_l - lam_n x_l||`` as an array of shape ``(len(ns), L)``."""
        X, _ = _columns(x)
        ns = np.asarray(ns, dtype=np.int64)
        lams = _lams(lam, ns.size)
        out = np.empty((ns.size, X.shape[1]))
        for k, (_, Y) in enumerate(self.sweep(ns, X)):
            out[k] = self.norm(Y - lams[k] * X)
        return out

    def power_inner(self, ns, x, y) -> np.ndarray:
        """``<T^n x_l, y_l>`` as an array of shape ``(len(ns), L)``."""
        X, _ = _columns(x)
        Y, _ = _columns(y)
        ns = np.asarray(ns, dtype=np.int64)
        out = np.empty((ns.size, X.shape[1]), dtype=complex)
        for k, (_, Z) in enumerate(self.sweep(ns, X)):
            out[k] = self.inner(Z, Y)
        return out


class SpectralUnitary(Operator):
    """Multiplication by ``exp(i theta_k)`` on ``L^2`` of an atomic measure.

    ``weights`` are the atom masses and double as the metric of the space.
    Angles are reduced to ``[0, 2 pi)``; repeated angles are allowed.
    """

    kind = "spectral-diagonal"
    closed_form = True

    def __init__(self, angles, weights=None):
        theta = np.mod(np.asarray(angles, dtype=float).ravel(), 2 * np.pi)
        if theta.size == 0:
            raise ValueError("at least one spectrum point is required")
        if weights is None:
            weights = np.full(theta.size, 1.0 / theta.size)
        w = _validate_weights(weights)
        if w.size != theta.size:
            raise ValueError("angles and weights differ in length")
        super().__init__(theta.size, w)
        self.angles = theta
        self.weights = w
        self.phases = np.exp(1j * theta)
        self.contractive = self.isometric = self.unitary = True

    def _apply(self, X):
        return self.phases[:, None] * X

    def _apply_adjoint(self, X):
        return self.phases.conj()[:, None] * X

    def _power(self, n, X):
        return np.exp(1j * n * self.angles)[:, None] * X

    def _row_chunks(self, ns):
        step = max(1, _CHUNK_ELEMENTS // self.dim)
        for start in range(0, ns.size, step):
            yield slice(start, start + step)

    def residual_norms(self, ns, x, lam):
        X, _ = _columns(x)
        self._check(X)
        ns = np.asarray(ns, dtype=np.int64)
        lams = _lams(lam, ns.size)
        mass = self.metric[:, None] * np.abs(X) ** 2
        out = np.empty((ns.size, X.shape[1]))
        for sl in self._row_chunks(ns):
            gaps = np.abs(np.exp(1j * np.outer(ns[sl], self.angles)) - lams[sl, None]) ** 2
            out[sl] = np.sqrt(gaps @ mass)
        return out

    def power_inner(self, ns, x, y):
        X, _ = _columns(x)
        Y, _ = _columns(y)
        self._check(X)
        self._check(Y)
        ns = np.asarray(ns, dtype=np.int64)
        cross = self.metric[:, None] * X * Y.conj()
        out = np.empty((ns.size, X.shape[1]), dtype=complex)
        for sl in self._row_chunks(ns):
            out[sl] = np.exp(1j * np.outer(ns[sl], self.angles)) @ cross
        return out


class ShiftOperator(Operator):
    """Unilateral shift ``e_k -> e_{k+1}`` truncated to ``dim`` coordinates.

    The last basis vector is sent to zero, so the truncation is a contraction
    but not an isometry. Powers and correlations are computed in closed form
    (zero-padded slices and FFT correlations), O(dim log dim) per sweep.
    """

    kind = "shift"
    closed_form = True

    def __init__(self, dim: int):
        super().__init__(dim)
        self.contractive = True

    def _apply(self, X):
        return self._power(1, X)

    def _apply_adjoint(self, X):
        out = np.zeros_like(X)
        out[:-1] = X[1:]
        return out

    def _power(self, n, X):
        out = np.zeros_like(X)
        if n < self.dim:
            out[n:] = X[: self.dim - n]
        return out

    def _correlations(self, ns, X, Y):
        # <S^n x, y> = sum_i x_i conj(y_{i+n})
        size = 2 * self.dim
        fx = np.fft.fft(X, size, axis=0)
        fy = np.fft.fft(Y, size, axis=0)
        corr = np.fft.ifft(fy * fx.conj(), axis=0)[: self.dim].conj()
        out = np.zeros((ns.size, X.shape[1]), dtype=complex)
        inside = ns < self.dim
        out[inside] = corr[ns[inside]]
        return out

    def power_inner(self, ns, x, y):
        X, _ = _columns(x)
        Y, _ = _columns(y)
        self._check(X)
        self._check(Y)
        return self._correlations(np.asarray(ns, dtype=np.int64), X, Y)

    def residual_norms(self, ns, x, lam):
        X, _ = _columns(x)
        self._check(X)
        ns = np.asarray(ns, dtype=np.int64)
        lams = _lams(lam, ns.size)
        sq = np.abs(X) ** 2
        total = sq.sum(axis=0)
        # ||S^n x||^2 keeps the first dim - n coordinates
        prefix = np.vstack([np.zeros((1, X.shape[1])), np.cumsum(sq, axis=0)])
        kept = prefix[np.clip(self.dim - ns, 0, self.dim)]
        corr = self._correlations(ns, X, X)
        val = kept + np.abs(lams[:, None]) ** 2 * total - 2 * np.real(lams.conj()[:, None] * corr)
        return np.sqrt(np.clip(val, 0.0, None))


class KoopmanOperator(Operator):
    """Composition ``(U f)(k) = f(sigma(k))`` with a permutation ``sigma``.

    Unitary on ``L^2(weights)`` exactly when the weights are invariant under
    ``sigma``; that is enforced at construction.
    """

    kind = "koopman-permutation"
    closed_form = True

    def __init__(self, permutation, weights=None):
        sigma = np.asarray(permutation, dtype=np.int64).ravel()
        d = sigma.size
        if d == 0 or not np.array_equal(np.sort(sigma), np.arange(d)):
            raise ValueError("permutation must be a rearrangement of 0..d-1")
        if weights is None:
            weights = np.full(d, 1.0 / d)
        w = _validate_weights(weights)
        if w.size != d:
            raise ValueError("permutation and weights differ in length")
        if np.max(np.abs(w[sigma] - w)) > WEIGHT_TOL:
            raise ValueError("weights are not invariant under the permutation (not measure preserving)")
        super().__init__(d, w)
        self.sigma = sigma
        self.sigma_inv = np.argsort(sigma)
        self.weights = w
        self._cycles = _cycle_tables(sigma)
        self.contractive = self.isometric = self.unitary = True

    def order(self) -> int:
        lengths = np.unique(self._cycles[2])
        out = 1
        for k in lengths:
            out = out * int(k) // gcd(out, int(k))
        return out

    def permutation_power(self, n: int) -> np.ndarray:
        members, start, length, pos = self._cycles
        return members[start + (pos + n) % length]

    def _apply(self, X):
        return X[self.sigma]

    def _apply_adjoint(self, X):
        return X[self.sigma_inv]

    def _power(self, n, X):
        return X[self.permutation_power(n)]

    def residual_norms(self, ns, x, lam):
        X, _ = _columns(x)
        self._check(X)
        ns = np.asarray(ns, dtype=np.int64)
        lams = _lams(lam, ns.size)
        out = np.empty((ns.size, X.shape[1]))
        for k, n in enumerate(ns):
            out[k] = self.norm(X[self.permutation_power(int(n))] - lams[k] * X)
        return out

    def power_inner(self, ns, x, y):
        X, _ = _columns(x)
        Y, _ = _columns(y)
        ns = np.asarray(ns, dtype=np.int64)
        out = np.empty((ns.size, X.shape[1]), dtype=complex)
        for k, n in enumerate(ns):
            out[k] = self.inner(X[self.permutation_power(int(n))], Y)
        return out


def _cycle_tables(sigma: np.ndarray):
    d = sigma.size
    members = np.empty(d, dtype=np.int64)
    start = np.empty(d, dtype=np.int64)
    length = np.empty(d, dtype=np.int64)
    pos = np.empty(d, dtype=np.int64)
    seen = np.zeros(d, dtype=bool)
    cursor = 0
    for i in range(d):
        if seen[i]:
            continue
        cycle = [i]
        seen[i] = True
        j = sigma[i]
        while j != i:
            cycle.append(j)
            seen[j] = True
            j = sigma[j]
        for p, k in enumerate(cycle):
            members[cursor + p] = k
            start[k] = cursor
            length[k] = len(cycle)
            pos[k] = p
        cursor += len(cycle)
    return members, start, length, pos


class DenseOperator(Operator):
    """Explicit complex matrix on Euclidean ``C^dim`` (dim capped at 2048)."""

    kind = "dense-matrix"

    def __init__(self, matrix):
        M = np.asarray(matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("dense operator needs a square matrix")
        if M.shape[0] > DENSE_MAX_DIM:
            raise ValueError(f"dense operators are capped at dim {DENSE_MAX_DIM}")
        super().__init__(M.shape[0])
        self.matrix = M
        eye = np.eye(self.dim)
        self.contractive = bool(np.linalg.norm(M, 2) <= 1 + 1e-12)
        self.isometric = bool(np.allclose(M.conj().T @ M, eye, atol=ATOL))
        self.unitary = self.isometric and bool(np.allclose(M @ M.conj().T, eye, atol=ATOL))

    def _apply(self, X):
        return self.matrix @ X

    def _apply_adjoint(self, X):
        return self.matrix.conj().T @ X


class ScaledOperator(Operator):
    """``alpha * T`` for a complex scalar ``alpha``."""

    kind = "scaled"

    def __init__(self, alpha: complex, inner: Operator):
        super().__init__(inner.dim, inner.metric)
        self.alpha = complex(alpha)
        self.inner_op = inner
        unimodular = abs(abs(self.alpha) - 1.0) <= 1e-14
        self.closed_form = inner.closed_form and unimodular
        self.contractive = inner.contractive and abs(self.alpha) <= 1 + 1e-14
        self.isometric = inner.isometric and unimodular
        self.unitary = inner.unitary and unimodular

    def _apply(self, X):
        return self.alpha * self.inner_op._apply(X)

    def _apply_adjoint(self, X):
        return self.alpha.conjugate() * self.inner_op._apply_adjoint(X)

    def _power(self, n, X):
        return self.alpha**n * self.inner_op._power(n, X)

    def residual_norms(self, ns, x, lam):
        if not self.closed_form:
            return super().residual_norms(ns, x, lam)
        ns = np.asarray(ns, dtype=np.int64)
        # |alpha| = 1: ||alpha^n T^n x - lam x|| = ||T^n x - lam alpha^-n x||
        shifted = _lams(lam, ns.size) * np.exp(-1j * np.angle(self.alpha) * ns)
        return self.inner_op.residual_norms(ns, x, shifted)

    def power_inner(self, ns, x, y):
        if not self.inner_op.closed_form:
            return super().power_inner(ns, x, y)
        ns = np.asarray(ns, dtype=np.int64)
        return self.alpha ** ns[:, None] * self.inner_op.power_inner(ns, x, y)


class BlockOperator(Operator):
    """Orthogonal direct sum of operators, applied blockwise."""

    kind = "direct-sum"

    def __init__(self, blocks):
        blocks = list(blocks)
        if not blocks:
            raise ValueError("direct sum needs at least one block")
        super().__init__(sum(b.dim for b in blocks), np.concatenate([b.metric for b in blocks]))
        self.blocks = blocks
        self._cuts = np.cumsum([0] + [b.dim for b in blocks])
        self.closed_form = all(b.closed_form for b in blocks)
        self.contractive = all(b.contractive for b in blocks)
        self.isometric = all(b.isometric for b in blocks)
        self.unitary = all(b.unitary for b in blocks)

    def _parts(self, X):
        return [X[a:b] for a, b in zip(self._cuts[:-1], self._cuts[1:])]

    def _apply(self, X):
        return np.vstack([b._apply(p) for b, p in zip(self.blocks, self._parts(X))])

    def _apply_adjoint(self, X):
        return np.vstack([b._apply_adjoint(p) for b, p in zip(self.blocks, self._parts(X))])

    def _power(self, n, X):
        return np.vstack([b._power(n, p) for b, p in zip(self.blocks, self._parts(X))])

    def residual_norms(self, ns, x, lam):
        if not self.closed_form:
            return super().residual_norms(ns, x, lam)
        X, _ = _columns(x)
        self._check(X)
        sq = sum(b.residual_norms(ns, p, lam) ** 2 for b, p in zip(self.blocks, self._parts(X)))
        return np.sqrt(sq)

    def power_inner(self, ns, x, y):
        if not self.closed_form:
            return super().power_inner(ns, x, y)
        X, _ = _columns(x)
        Y, _ = _columns(y)
        self._check(X)
        return sum(b.power_inner(ns, p, q) for b, p, q in zip(self.blocks, self._parts(X), self._parts(Y)))


class PowerOperator(Operator):
    """Lazy ``T^n`` for kinds without a cheaper representation of the power."""

    kind = "power"

    def __init__(self, base: Operator, n: int):
        if n < 0:
            raise ValueError("power must be nonnegative")
        super().__init__(base.dim, base.metric)
        self.base = base
        self.n = int(n)
        self.contractive = base.contractive
        self.isometric = base.isometric
        self.unitary = base.unitary

    def _apply(self, X):
        return self.base._power(self.n, X)

    def _apply_adjoint(self, X):
        Y = X
        for _ in range(self.n):
            Y = self.base._apply_adjoint(Y)
        return Y


def _unit(dim: int, k: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v


def identity(dim: int = 1) -> SpectralUnitary:
    return SpectralUnitary(np.zeros(dim))


def power_operator(T: Operator, n: int) -> Operator:
    """Return an operator equal to ``T^n``, in closed form where possible."""
    if isinstance(T, SpectralUnitary):
        return SpectralUnitary(n * T.angles, T.weights)
    if isinstance(T, KoopmanOperator):
        return KoopmanOperator(T.permutation_power(n), T.weights)
    if isinstance(T, DenseOperator):
        return DenseOperator(np.linalg.matrix_power(T.matrix, n))
    return PowerOperator(T, n)


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """Finite stand-in for a dense sequence ``x_1, x_2, ...`` with weights ``2^-l``.

    ``vectors`` holds the probes as columns, shape ``(dim, L)``.
    """

    vectors: np.ndarray
    tag: str = "custom"

    def __post_init__(self):
        X = np.asarray(self.vectors, dtype=complex)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] == 0:
            raise ValueError("a probe set needs at least one vector")
        if np.any(np.linalg.norm(X, axis=0) == 0):
            raise ValueError("probe vectors must be nonzero")
        X.setflags(write=False)
        object.__setattr__(self, "vectors", X)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def size(self) -> int:
        return self.vectors.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return 2.0 ** -np.arange(1, self.size + 1)

    @classmethod
    def default(cls, dim: int, seed: int = 0, n_basis: int = 8, n_random: int = 8, support: int | None = None):
        """First ``n_basis`` canonical vectors, then ``n_random`` seeded random unit vectors.

        ``support`` restricts the random vectors to the first ``support``
        coordinates (useful for shifts, where far-out mass falls off the end).
        """
        support = dim if support is None else min(int(support), dim)
        n_basis = min(n_basis, support)
        cols = [_unit(dim, k) for k in range(n_basis)]
        rng = np.random.default_rng(seed)
        for _ in range(n_random):
            v = np.zeros(dim, dtype=complex)
            v[:support] = rng.standard_normal(support) + 1j * rng.standard_normal(support)
            cols.append(v / np.linalg.norm(v))
        tag = f"default(dim={dim},seed={seed},basis={n_basis},random={n_random},support={support})"
        return cls(np.column_stack(cols), tag)

    @classmethod
    def basis(cls, dim: int, count: int | None = None):
        count = dim if count is None else min(count, dim)
        return cls(np.eye(dim, count, dtype=complex), f"basis(dim={dim},count={count})")


def _pair_check(T: Operator, S: Operator, P: ProbeSet | None = None):
    if T.dim != S.dim:
        raise DimensionMismatch(f"operators of dims {T.dim} and {S.dim}")
    if not np.allclose(T.metric, S.metric, rtol=0, atol=1e-14):
        raise ValueError("operators act on differently weighted spaces")
    if P is not None and P.dim != T.dim:
        raise DimensionMismatch(f"probe set of dim {P.dim} for operators of dim {T.dim}")


def _probe_check(T: Operator, P: ProbeSet):
    if P.dim != T.dim:
        raise DimensionMismatch(f"probe set of dim {P.dim} for operator of dim {T.dim}")


def apply_power(T: Operator, n: int, x) -> np.ndarray:
    return T.power(n, x)


def metric_strong(T: Operator, S: Operator, P: ProbeSet) -> float:
    """``sum_l ||T x_l - S x_l|| / (2^l ||x_l||)`` over the probe set."""
    _pair_check(T, S, P)
    X = P.vectors
    diff = T.norm(T.apply(X) - S.apply(X))
    return float(np.sum(P.weights * diff / T.norm(X)))


def metric_strong_star(U: Operator, V: Operator, P: ProbeSet) -> float:
    """Strong* metric: direct and adjoint differences, each weighted by ``2^-l``."""
    _pair_check(U, V, P)
    X = P.vectors
    direct = U.norm(U.apply(X) - V.apply(X))
    adjoint = U.norm(U.apply_adjoint(X) - V.apply_adjoint(X))
    return float(np.sum(P.weights * (direct + adjoint) / U.norm(X)))


def metric_weak(T: Operator, S: Operator, P: ProbeSet) -> float:
    """Weak-operator metric ``sum_{j,k} |<(T-S)x_j, x_k>| / (2^j ||x_j|| ||x_k||)``.

    Only the row index carries the ``2^-j`` weight, as printed; the double sum
    is truncated to the probe set.
    """
    _pair_check(T, S, P)
    X = P.vectors
    D = T.apply(X) - S.apply(X)
    gram = D.T @ (T.metric[:, None] * X.conj())
    norms = T.norm(X)
    return float(np.sum(np.abs(gram) * (P.weights / norms)[:, None] / norms[None, :]))


def seminorm_residual(T: Operator, n: int, lam: complex, P: ProbeSet) -> float:
    _probe_check(T, P)
    X = P.vectors
    res = T.norm(T.power(n, X) - lam * X)
    return float(np.sum(P.weights * res / T.norm(X)))


def weak_residual(T: Operator, n: int, lam: complex, P: ProbeSet) -> float:
    _probe_check(T, P)
    X = P.vectors
    vals = np.abs(T.inner(T.power(n, X) - lam * X, X))
    return float(np.sum(P.weights * vals / T.norm(X) ** 2))


def weak_to_strong_bound(T: Operator, n: int, lam: complex, x) -> tuple[float, float]:
    """Return ``(||(T^n - lam)x||^2, 2 Re(conj(lam) <(lam - T^n)x, x>))``.

    For a contraction and unimodular ``lam`` the first never exceeds the
    second.
    """
    if not T.contractive:
        raise NotContractive(f"{T!r} is not declared contractive; the bound does not apply")
    if abs(abs(lam) - 1) > 1e-12:
        raise ValueError("lam must be unimodular")
    x = np.asarray(x, dtype=complex)
    Tx = T.power(n, x)
    lhs = float(T.norm(Tx - lam * x) ** 2)
    rhs = float(2 * np.real(np.conj(lam) * T.inner(lam * x - Tx, x)))
    return lhs, rhs


def unitary_defect(T: Operator, P: ProbeSet | None = None) -> float:
    """``max ||T*T x - x||, ||T T* x - x||`` over unit sample vectors.

    Without a probe set the full canonical basis is used for dim <= 2048;
    larger spaces fall back to the default probes plus the first and last
    basis vectors.
    """
    if P is not None:
        _probe_check(T, P)
        X = P.vectors
    elif T.dim <= DENSE_MAX_DIM:
        X = np.eye(T.dim, dtype=complex)
    else:
        X = np.column_stack([ProbeSet.default(T.dim).vectors, _unit(T.dim, 0), _unit(T.dim, T.dim - 1)])
    X = X / T.norm(X)
    a = T.norm(T.apply_adjoint(T.apply(X)) - X)
    b = T.norm(T.apply(T.apply_adjoint(X)) - X)
    return float(max(a.max(), b.max()))
