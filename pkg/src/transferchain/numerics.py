"""Small dense matrix kernel and the chi-square survival function.

Matrices are plain ``float64`` numpy arrays marked read-only. Every function
here returns a fresh array and never mutates its inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, SingularMatrixError, StochasticityError

PIVOT_TOL = 1e-12
STOCHASTIC_TOL = 1e-9

_GAMMA_MAX_ITER = 300
_GAMMA_EPS = 1e-12
_TINY = 1e-300


def as_matrix(values) -> np.ndarray:
    """Return a read-only 2-D float64 copy of ``values``.

    A 1-D input becomes a single row. Non-finite entries are rejected.
    """
    m = np.array(values, dtype=float)
    if m.ndim == 1:
        m = m[np.newaxis, :]
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix entries must be finite")
    m.setflags(write=False)
    return m


def identity(n: int) -> np.ndarray:
    return as_matrix(np.eye(n))


def mat_mul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return as_matrix(a @ b)


def mat_pow(a, k: int) -> np.ndarray:
    """Integer matrix power by repeated squaring; ``k == 0`` gives the identity."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix power needs a square matrix, got {a.shape}")
    if k < 0 or int(k) != k:
        raise DomainError(f"exponent must be a nonnegative integer, got {k!r}")
    k = int(k)
    result = np.eye(a.shape[0])
    base = np.array(a)
    while k:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return as_matrix(result)


def check_stochastic(p, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    p = as_matrix(p)
    if p.shape[0] != p.shape[1]:
        raise DimensionError(f"transition matrix must be square, got {p.shape}")
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
        raise StochasticityError("transition probabilities must lie in [0, 1]")
    sums = p.sum(axis=1)
    worst = float(np.max(np.abs(sums - 1.0)))
    if worst > tol:
        raise StochasticityError(f"row sums deviate from 1 by up to {worst:.3g}")
    return p


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Spectral factorisation ``p = q @ diag(eigenvalues) @ q_inv`` of a 2x2 chain."""

    eigenvalues: tuple[float, float]
    q: np.ndarray
    q_inv: np.ndarray

    @property
    def lam(self) -> np.ndarray:
        return as_matrix(np.diag(self.eigenvalues))

    def power(self, k: int) -> np.ndarray:
        """``p**k`` through the eigenvalues, i.e. ``q @ diag(1, lam**k) @ q_inv``."""
        d = np.diag([self.eigenvalues[0] ** k, self.eigenvalues[1] ** k])
        return as_matrix(self.q @ d @ self.q_inv)

    def reconstruct(self) -> np.ndarray:
        return self.power(1)


def eig_two_state(p) -> EigenSystem:
    """Closed-form eigendecomposition of a 2x2 row-stochastic matrix.

    The eigenvalues are 1 and ``p00 + p11 - 1``. Columns of ``q`` are unit
    eigenvectors: the constant vector for eigenvalue 1 and ``(-p01, p10)``
    for the second one. When the chain is the identity (``p01 = p10 = 0``)
    the second eigenvector is taken as ``(-1, 1)``.
    """
    p = check_stochastic(p)
    if p.shape != (2, 2):
        raise DimensionError(f"eig_two_state needs a 2x2 matrix, got {p.shape}")
    a, b = p[0, 1], p[1, 0]
    lam = p[0, 0] + p[1, 1] - 1.0
    v1 = np.array([1.0, 1.0]) / math.sqrt(2.0)
    if a + b == 0.0:
        v2 = np.array([-1.0, 1.0]) / math.sqrt(2.0)
    else:
        v2 = np.array([-a, b]) / math.hypot(a, b)
    q = np.column_stack([v1, v2])
    det = q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0]
    if abs(det) < PIVOT_TOL:
        raise SingularMatrixError("eigenvectors are not linearly independent")
    q_inv = np.array([[q[1, 1], -q[0, 1]], [-q[1, 0], q[0, 0]]]) / det
    return EigenSystem((1.0, float(lam)), as_matrix(q), as_matrix(q_inv))


def solve_linear(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides; the result has the
    same orientation (a 1-D ``b`` yields a column ``(n, 1)`` matrix).
    """
    a = np.array(as_matrix(a))
    b_arr = np.asarray(b, dtype=float)
    if b_arr.ndim == 1:
        b_arr = b_arr[:, np.newaxis]
    rhs = np.array(as_matrix(b_arr))
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionError(f"coefficient matrix must be square, got {a.shape}")
    if rhs.shape[0] != n:
        raise DimensionError(f"right-hand side has {rhs.shape[0]} rows, expected {n}")

    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) <= PIVOT_TOL:
            raise SingularMatrixError(f"pivot {a[pivot, col]:.3g} in column {col}")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            rhs[[col, pivot]] = rhs[[pivot, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(factors, a[col, col:])
        rhs[col + 1:] -= np.outer(factors, rhs[col])

    x = np.zeros_like(rhs)
    for row in range(n - 1, -1, -1):
        x[row] = (rhs[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return as_matrix(x)


def _lower_series(s: float, x: float) -> float:
    # regularized lower gamma P(s, x), valid for x < s + 1
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(_GAMMA_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _upper_continued_fraction(s: float, x: float) -> float:
    # modified Lentz evaluation of Q(s, x), valid for x >= s + 1
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def regularized_gamma_q(s: float, x: float) -> float:
    """Upper regularized incomplete gamma function ``Q(s, x)``."""
    if not (s > 0) or not math.isfinite(s):
        raise DomainError(f"shape parameter must be positive and finite, got {s!r}")
    if not (x >= 0) or math.isnan(x):
        raise DomainError(f"argument must be nonnegative, got {x!r}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        q = 1.0 - _lower_series(s, x)
    else:
        q = _upper_continued_fraction(s, x)
    return min(1.0, max(0.0, q))


def chi_square_sf(x: float, df: int) -> float:
    """Survival function of the chi-square distribution with ``df`` degrees of freedom."""
    if int(df) != df or df < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {df!r}")
    if not (x >= 0):
        raise DomainError(f"chi-square statistic must be nonnegative, got {x!r}")
    return regularized_gamma_q(df / 2.0, x / 2.0)
