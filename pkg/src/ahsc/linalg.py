"""Small dense linear-algebra kernels.

Matrices are plain 2-D float64 ``numpy`` arrays. Symmetric inputs are
checked for exact symmetry rather than silently symmetrized.
"""
import math
import warnings
from typing import NamedTuple

import numpy as np

from .errors import ShapeError, SizeError

JACOBI_MAX_DIM = 512


class ConvergenceWarning(UserWarning):
    pass


class PowerIterationResult(NamedTuple):
    value: float
    converged: bool
    iterations: int


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def as_symmetric(s) -> np.ndarray:
    a = as_matrix(s)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"symmetric matrix must be square, got {a.shape}")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix is not exactly symmetric")
    return a


def frobenius_norm(m) -> float:
    # fsum keeps the sum of squares correctly rounded, so ||cA|| == |c| ||A|| to a few ulp;
    # the power-of-two rescaling is exact and keeps squares clear of under/overflow
    a = as_matrix(m)
    peak = float(np.max(np.abs(a))) if a.size else 0.0
    if peak == 0.0:
        return 0.0
    e = math.frexp(peak)[1]
    s = np.ldexp(a, -e)
    return math.ldexp(math.sqrt(math.fsum((s * s).ravel().tolist())), e)


def power_iteration(m, tol=1e-12, max_iter=10_000, seed=0) -> PowerIterationResult:
    """Largest singular value of ``m`` by power iteration on ``m.T @ m``.

    The Rayleigh quotient never exceeds the true top eigenvalue, so the
    estimate is a lower bound at every iteration.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    a = as_matrix(m)
    if a.size == 0:
        return PowerIterationResult(0.0, True, 0)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        av = a @ v
        lam_new = float(av @ av)
        if lam_new == 0.0:
            # v fell into the null space; for the zero matrix this is exact
            if not np.any(a):
                return PowerIterationResult(0.0, True, it)
            v = rng.standard_normal(a.shape[1])
            v /= np.linalg.norm(v)
            continue
        w = a.T @ av
        v = w / np.linalg.norm(w)
        if abs(lam_new - lam) <= tol * lam_new:
            return PowerIterationResult(math.sqrt(lam_new), True, it)
        lam = lam_new
    return PowerIterationResult(math.sqrt(lam), False, max_iter)


def spectral_norm(m, tol=1e-12, max_iter=10_000, seed=0) -> float:
    res = power_iteration(m, tol=tol, max_iter=max_iter, seed=seed)
    if not res.converged:
        warnings.warn(
            f"power iteration did not converge in {max_iter} iterations; best estimate {res.value!r}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return res.value


def _jacobi_rotate(a, p, q):
    apq = a[p, q]
    tau = (a[q, q] - a[p, p]) / (2.0 * apq)
    if abs(tau) > 1e150:
        t = 0.5 / tau
    else:
        t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    cols = a[:, [p, q]]
    a[:, p] = c * cols[:, 0] - s * cols[:, 1]
    a[:, q] = s * cols[:, 0] + c * cols[:, 1]
    rows = a[[p, q], :]
    a[p, :] = c * rows[0] - s * rows[1]
    a[q, :] = s * rows[0] + c * rows[1]
    a[p, q] = a[q, p] = 0.0


def jacobi_eigenvalues(s, tol=1e-12, max_sweeps=100) -> np.ndarray:
    """All eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending."""
    a = as_symmetric(s).copy()
    n = a.shape[0]
    if n > JACOBI_MAX_DIM:
        raise SizeError(f"Jacobi eigensolver limited to dim <= {JACOBI_MAX_DIM}, got {n}")
    scale = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] != 0.0:
                    _jacobi_rotate(a, p, q)
    return np.sort(np.diag(a))


def sym_eig_extremes(s, tol=1e-12) -> tuple[float, float]:
    ev = jacobi_eigenvalues(s, tol=tol)
    if ev.size == 0:
        raise ShapeError("empty matrix has no eigenvalues")
    return float(ev[0]), float(ev[-1])
