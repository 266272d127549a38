"""Rigidity certificates: search, verification, recurrence and density estimates."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import asin, ceil, pi

import numpy as np

from .constraints import SequenceConstraint
from .linalg import DimensionMismatch, Operator, ProbeSet, seminorm_residual

TWO_PI = 2 * pi
DEFAULT_MAX_TERMS = 8
DEFAULT_GRID = 64
_CLOSED_CHUNK = 4096
_STEP_CHUNK = 256


class CertificateError(ValueError):
    """A certificate failed re-evaluation or is structurally invalid."""


@dataclass(frozen=True)
class RigidityCertificate:
    """Finite witness that ``T^{n_j} x_l`` is within ``eps`` of ``lam x_l`` on the probes.

    ``sequence`` holds integer powers, or sample times when ``continuous``.
    """

    lam: complex
    sequence: tuple
    residuals: tuple
    eps: float
    horizon: float
    constraint: SequenceConstraint = field(default_factory=SequenceConstraint.all)
    probe_tag: str = ""
    continuous: bool = False

    def __post_init__(self):
        if len(self.sequence) != len(self.residuals):
            raise CertificateError("sequence and residuals differ in length")
        if any(b <= a for a, b in zip(self.sequence, self.sequence[1:])):
            raise CertificateError("sequence must be strictly increasing")
        if any(not r < self.eps for r in self.residuals):
            raise CertificateError("every residual must be below eps")

    def __len__(self):
        return len(self.sequence)

    def to_dict(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "sequence": list(self.sequence),
            "residuals": list(self.residuals),
            "epsilon": self.eps,
            "horizon": self.horizon,
            "constraint": self.constraint.to_dict(),
            "probe_id": self.probe_tag,
            "continuous": self.continuous,
        }

    @classmethod
    def from_dict(cls, data: dict):
        re, im = data["lambda"]
        cont = bool(data.get("continuous", False))
        seq = tuple(float(v) for v in data["sequence"]) if cont else tuple(int(v) for v in data["sequence"])
        return cls(
            lam=complex(re, im),
            sequence=seq,
            residuals=tuple(float(r) for r in data["residuals"]),
            eps=float(data["epsilon"]),
            horizon=data["horizon"],
            constraint=SequenceConstraint.from_dict(data.get("constraint", {})),
            probe_tag=data.get("probe_id", ""),
            continuous=cont,
        )


@dataclass(frozen=True)
class DensityEstimate:
    horizon: float
    hits: int
    estimate: float
    eps: float
    samples: int


def _seminorm_stream(T: Operator, P: ProbeSet, lam, ns: np.ndarray):
    """Yield ``(ns_chunk, seminorm_chunk)`` over increasing ``ns``."""
    X = P.vectors
    w = P.weights / T.norm(X)
    if T.closed_form:
        for start in range(0, ns.size, _CLOSED_CHUNK):
            part = ns[start:start + _CLOSED_CHUNK]
            yield part, T.residual_norms(part, X, lam) @ w
        return
    buf_n, buf_v = [], []
    for n, Y in T.sweep(ns, X):
        buf_n.append(n)
        buf_v.append(float(T.norm(Y - lam * X) @ w))
        if len(buf_n) == _STEP_CHUNK:
            yield np.asarray(buf_n), np.asarray(buf_v)
            buf_n, buf_v = [], []
    if buf_n:
        yield np.asarray(buf_n), np.asarray(buf_v)


def rigidity_scan(T: Operator, P: ProbeSet, lam: complex, eps: float, horizon: int,
                  constraint: SequenceConstraint | None = None, max_terms: int = DEFAULT_MAX_TERMS):
    """Scan admissible ``n`` in increasing order; return ``(certificate, ns, residuals)``.

    ``ns``/``residuals`` are the full trace of scanned powers, ending at the
    ``max_terms``-th hit or at the horizon. ``certificate`` is None when no
    power in range qualifies.
    """
    if eps <= 0 or horizon < 1 or max_terms < 1:
        raise ValueError("need eps > 0, horizon >= 1 and max_terms >= 1")
    if P.dim != T.dim:
        raise DimensionMismatch(f"probe set of dim {P.dim} for operator of dim {T.dim}")
    constraint = constraint or SequenceConstraint.all()
    lam = complex(lam)
    members = constraint.members(1, int(horizon))
    trace_n, trace_r, hits = [], [], []
    for part, vals in _seminorm_stream(T, P, lam, members):
        found = np.flatnonzero(vals < eps)
        need = max_terms - len(hits)
        if found.size >= need:
            stop = found[need - 1] + 1
            part, vals, found = part[:stop], vals[:stop], found[:need]
        trace_n.append(part)
        trace_r.append(vals)
        hits.extend(found + sum(len(p) for p in trace_n[:-1]))
        if len(hits) >= max_terms:
            break
    ns = np.concatenate(trace_n) if trace_n else np.zeros(0, dtype=np.int64)
    res = np.concatenate(trace_r) if trace_r else np.zeros(0)
    if not hits:
        return None, ns, res
    cert = RigidityCertificate(
        lam=lam,
        sequence=tuple(int(ns[i]) for i in hits),
        residuals=tuple(float(res[i]) for i in hits),
        eps=float(eps),
        horizon=int(horizon),
        constraint=constraint,
        probe_tag=P.tag,
    )
    return cert, ns, res


def rigidity_search(T: Operator, P: ProbeSet, lam: complex, eps: float, horizon: int,
                    constraint: SequenceConstraint | None = None,
                    max_terms: int = DEFAULT_MAX_TERMS) -> RigidityCertificate | None:
    """First ``max_terms`` admissible powers with probe seminorm below ``eps``, or None."""
    return rigidity_scan(T, P, lam, eps, horizon, constraint, max_terms)[0]


def verify_certificate(cert: RigidityCertificate, T: Operator, P: ProbeSet, atol: float = 1e-9) -> np.ndarray:
    """Re-evaluate every residual through ``T.power``; raise CertificateError on any mismatch.

    Returns the recomputed residuals.
    """
    if cert.continuous:
        raise CertificateError("continuous certificates are verified against a group model")
    if cert.probe_tag and P.tag != cert.probe_tag:
        raise CertificateError(f"certificate was issued for probes {cert.probe_tag!r}, got {P.tag!r}")
    seq = np.asarray(cert.sequence, dtype=np.int64)
    if seq.size and (seq[0] < 1 or seq[-1] > cert.horizon):
        raise CertificateError("sequence leaves [1, horizon]")
    if seq.size and not np.all(cert.constraint.mask(seq)):
        raise CertificateError(f"sequence violates constraint {cert.constraint.description!r}")
    fresh = np.array([seminorm_residual(T, int(n), cert.lam, P) for n in seq])
    for n, old, new in zip(seq, cert.residuals, fresh):
        if not new < cert.eps:
            raise CertificateError(f"residual at n={n} is {new:.3e}, not below eps={cert.eps:g}")
        if abs(old - new) > atol:
            raise CertificateError(f"recorded residual at n={n} is {old!r}, re-evaluation gives {new!r}")
    return fresh


def _scaled_constraint(constraint: SequenceConstraint, k: int) -> SequenceConstraint:
    if constraint.form == "all":
        return SequenceConstraint.arithmetic(k, 0)
    if constraint.form == "arithmetic":
        return SequenceConstraint.arithmetic(k * constraint.modulus, k * constraint.residue)
    return SequenceConstraint.explicit([k * v for v in constraint.values])


def derive_power_certificate(cert: RigidityCertificate, k: int, T: Operator, P: ProbeSet) -> RigidityCertificate:
    """Turn a ``lam``-certificate into a ``lam^k``-certificate at powers ``k n_j``.

    For isometries ``||T^{kn}x - lam^k x|| <= k ||T^n x - lam x||``, so the new
    threshold is ``k eps``. Residuals are re-evaluated, never copied.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k == 1:
        return cert
    lam_k = cert.lam**k
    seq = tuple(k * n for n in cert.sequence)
    fresh = [seminorm_residual(T, n, lam_k, P) for n in seq]
    eps = k * cert.eps
    if T.isometric:
        for n, old, new in zip(seq, cert.residuals, fresh):
            if new > k * old + 1e-10:
                raise CertificateError(f"telescoping bound violated at n={n}: {new:.3e} > {k} * {old:.3e}")
    if any(not r < eps for r in fresh):
        raise CertificateError("derived residuals do not stay below k * eps (operator is not isometric)")
    return RigidityCertificate(
        lam=lam_k, sequence=seq, residuals=tuple(fresh), eps=eps, horizon=k * cert.horizon,
        constraint=_scaled_constraint(cert.constraint, k), probe_tag=cert.probe_tag,
    )


def retarget_certificate(cert: RigidityCertificate, target: complex, T: Operator, P: ProbeSet) -> RigidityCertificate:
    """Re-evaluate a certificate against a nearby unimodular ``target``.

    The threshold grows by ``|lam - target|`` (probe weights sum below one).
    """
    eps = cert.eps + abs(cert.lam - target)
    fresh = tuple(seminorm_residual(T, n, target, P) for n in cert.sequence)
    return replace(cert, lam=complex(target), residuals=fresh, eps=eps)


def lambda_grid(count: int = 16) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(count) / count)


def gamma_rigidity(T: Operator, P: ProbeSet, eps: float, horizon: int, grid: int = 16,
                   constraint: SequenceConstraint | None = None,
                   max_terms: int = DEFAULT_MAX_TERMS) -> dict:
    """Direct search at every point of an equispaced unimodular grid."""
    return {complex(lam): rigidity_search(T, P, lam, eps, horizon, constraint, max_terms)
            for lam in lambda_grid(grid)}


def gamma_rigidity_from_power(cert: RigidityCertificate, T: Operator, P: ProbeSet, grid: int = 16,
                              max_power: int = 1000, target_tol: float = 0.05) -> dict:
    """Reach grid points from one (irrational) ``lam``-certificate via powers ``lam^k``.

    For each grid point the smallest ``k <= max_power`` with
    ``|lam^k - target| <= target_tol`` is used; the derived certificate is then
    re-targeted at the grid point. Unreachable points map to None.
    """
    out = {}
    powers = cert.lam ** np.arange(1, max_power + 1)
    for target in lambda_grid(grid):
        close = np.flatnonzero(np.abs(powers - target) <= target_tol)
        if close.size == 0:
            out[complex(target)] = None
            continue
        derived = derive_power_certificate(cert, int(close[0]) + 1, T, P)
        out[complex(target)] = retarget_certificate(derived, target, T, P)
    return out


def recurrence_bound(m: int, eps: float) -> int:
    """Pigeonhole bound: some ``n <= ceil(2 pi / delta)^m + 1`` returns within ``eps``."""
    delta = 2 * asin(min(eps, 2.0) / 2)
    return ceil(TWO_PI / delta) ** m + 1


def simultaneous_recurrence(angles, eps: float, horizon: int, chunk: int = 1 << 16) -> int | None:
    """Smallest ``n <= horizon`` with ``max_j |exp(i n theta_j) - 1| < eps``, or None."""
    theta = np.asarray(angles, dtype=float).ravel()
    if theta.size == 0 or eps <= 0:
        raise ValueError("need at least one angle and eps > 0")
    for start in range(1, int(horizon) + 1, chunk):
        ns = np.arange(start, min(start + chunk, int(horizon) + 1), dtype=np.int64)
        gap = np.max(np.abs(np.exp(1j * np.outer(ns, theta)) - 1), axis=1)
        hit = np.flatnonzero(gap < eps)
        if hit.size:
            return int(ns[hit[0]])
    return None


def continued_fraction(x, terms: int = 40) -> list[int]:
    """Partial quotients of ``x`` (exact for the binary value of a float)."""
    q = Fraction(x)
    out = []
    for _ in range(terms):
        a = q.numerator // q.denominator
        out.append(a)
        q -= a
        if q == 0:
            break
        q = 1 / q
    return out


def convergents(x, max_denominator: int) -> list[Fraction]:
    """Continued-fraction convergents ``p/q`` of ``x`` with ``q <= max_denominator``."""
    out = []
    p0, q0, p1, q1 = 0, 1, 1, 0
    for a in continued_fraction(x, 200):
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > max_denominator:
            break
        out.append(Fraction(p1, q1))
    return out


def power_coefficients(T: Operator, x, y, N: int) -> np.ndarray:
    """``<T^n x, y>`` for ``n = 1..N``."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    if x.size != T.dim or y.size != T.dim:
        raise DimensionMismatch(f"vectors of length {x.size}, {y.size} for operator of dim {T.dim}")
    ns = np.arange(1, int(N) + 1, dtype=np.int64)
    if T.closed_form:
        return np.concatenate([T.power_inner(ns[s:s + _CLOSED_CHUNK], x, y)[:, 0]
                               for s in range(0, ns.size, _CLOSED_CHUNK)])
    return np.array([T.inner(Z[:, 0], y) for _, Z in T.sweep(ns, x)])


def awstability_density(T: Operator, x, y, eps: float, N: int) -> DensityEstimate:
    """Fraction of ``n <= N`` with ``|<T^n x, y>| < eps``."""
    if N < 1 or eps <= 0:
        raise ValueError("need N >= 1 and eps > 0")
    coeffs = power_coefficients(T, x, y, N)
    hits = int(np.count_nonzero(np.abs(coeffs) < eps))
    return DensityEstimate(horizon=int(N), hits=hits, estimate=hits / N, eps=float(eps), samples=int(N))


def chebyshev_density_bound(second_moment: float, eps: float) -> float:
    """Lower bound ``1 - E|c|^2 / eps^2`` on the fraction of coefficients below ``eps``."""
    return 1.0 - second_moment / eps**2


def limit_set_alpha(alpha: complex, sequence, grid: int = DEFAULT_GRID) -> list[float]:
    """Grid angles hit by ``alpha^{n_j}`` over the second half of the sequence.

    Bins are centred on ``2 pi k / grid``; the second half of a finite
    sequence stands in for "infinitely often".
    """
    seq = np.asarray(sequence, dtype=np.int64)
    if seq.size == 0 or grid < 1:
        raise ValueError("need a nonempty sequence and grid >= 1")
    tail = seq[seq.size // 2:]
    phase = np.mod(tail * np.angle(alpha), TWO_PI)
    bins = np.mod(np.round(phase * grid / TWO_PI).astype(np.int64), grid)
    return [TWO_PI * k / grid for k in np.unique(bins)]


def commutant_check(T: Operator, V: Operator, P: ProbeSet) -> float:
    """``max_l ||T V x_l - V T x_l|| / ||x_l||``."""
    if T.dim != V.dim or P.dim != T.dim:
        raise DimensionMismatch("operators and probes must share one dimension")
    X = P.vectors
    return float(np.max(T.norm(T.apply(V.apply(X)) - V.apply(T.apply(X))) / T.norm(X)))
