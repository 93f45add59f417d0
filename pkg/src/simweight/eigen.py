"""Symmetric eigenvalue machinery: cyclic Jacobi rotations and spectral norms.

The matrices handled here are dense, symmetric and at most a few hundred
wide, so the classical cyclic Jacobi iteration is accurate and fast enough.
Convergence is declared when the off-diagonal Frobenius norm falls below
1e-12 times the Frobenius norm of the input, with a hard cap of 100 sweeps.

A numba-compiled kernel is used when numba is importable; otherwise a
vectorized numpy implementation of the same rotation sequence runs. Both
apply identical rotations in identical order, and each matrix converges on
its own schedule, so results do not depend on how matrices are batched.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

MAX_SWEEPS = 100
REL_OFF_TOL = 1e-12

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap if not (args and callable(args[0])) else args[0]


@njit(cache=True)
def _jacobi_single(a: np.ndarray) -> np.ndarray:
    """Run cyclic Jacobi sweeps in place; return eigenvalues descending."""
    n = a.shape[0]
    fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += a[i, j] * a[i, j]
    tol2 = (REL_OFF_TOL * REL_OFF_TOL) * fro2

    for _ in range(MAX_SWEEPS):
        off2 = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off2 += a[i, j] * a[i, j]
        if off2 <= tol2:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq

    eig = np.empty(n)
    for i in range(n):
        eig[i] = a[i, i]
    eig = np.sort(eig)
    return eig[::-1].copy()


@njit(cache=True)
def _jacobi_batch_numba(mats: np.ndarray) -> np.ndarray:
    m, n, _ = mats.shape
    out = np.empty((m, n))
    for i in range(m):
        out[i] = _jacobi_single(mats[i].copy())
    return out


def _jacobi_batch_numpy(mats: np.ndarray) -> np.ndarray:
    """Batched Jacobi with a per-matrix convergence mask.

    Converged matrices receive identity rotations from then on, so each
    matrix produces the same result it would alone.
    """
    a = mats.copy()
    m, n, _ = a.shape
    if n == 1:
        return a[:, 0, 0].reshape(m, 1).copy()
    tol2 = (REL_OFF_TOL * REL_OFF_TOL) * np.sum(mats * mats, axis=(1, 2))
    diag_idx = np.arange(n)

    # Sum off-diagonal squares directly; the subtractive form
    # fro2 - diag2 cancels catastrophically once nearly diagonal.
    off_mask = ~np.eye(n, dtype=bool)

    for _ in range(MAX_SWEEPS):
        off2 = np.sum((a * a) * off_mask, axis=(1, 2))
        active = off2 > tol2
        if not active.any():
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q].copy()
                rotate = active & (apq != 0.0)
                if not rotate.any():
                    continue
                app = a[:, p, p].copy()
                aqq = a[:, q, q].copy()
                safe = np.where(rotate, 2.0 * apq, 1.0)
                tau = (aqq - app) / safe
                # sign(tau)/(|tau| + root) equals the two-branch formula and
                # never divides by zero on the discarded branch.
                denom = np.abs(tau) + np.sqrt(1.0 + tau * tau)
                t = np.where(tau >= 0.0, 1.0, -1.0) / denom
                t = np.where(rotate, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cc = c[:, None]
                ss = s[:, None]
                rowp = a[:, p, :].copy()
                rowq = a[:, q, :]
                a[:, p, :] = cc * rowp - ss * rowq
                a[:, q, :] = ss * rowp + cc * rowq
                colp = a[:, :, p].copy()
                colq = a[:, :, q]
                a[:, :, p] = cc * colp - ss * colq
                a[:, :, q] = ss * colp + cc * colq
                a[:, p, q] = np.where(rotate, 0.0, a[:, p, q])
                a[:, q, p] = np.where(rotate, 0.0, a[:, q, p])
                a[:, p, p] = np.where(rotate, app - t * apq, a[:, p, p])
                a[:, q, q] = np.where(rotate, aqq + t * apq, a[:, q, q])

    eig = np.sort(a[:, diag_idx, diag_idx], axis=1)
    return eig[:, ::-1].copy()


def jacobi_eigenvalues_batch(mats: np.ndarray, force_numpy: bool = False) -> np.ndarray:
    """Eigenvalues of a stack of symmetric matrices, each row descending.

    No validation; callers are expected to pass finite symmetric input.
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    if mats.shape[1] == 1:
        return mats[:, 0, 0].reshape(-1, 1).copy()
    if HAS_NUMBA and not force_numpy:
        return _jacobi_batch_numba(mats)
    return _jacobi_batch_numpy(mats)


def _as_square_sym(m) -> np.ndarray:
    values = m.values if hasattr(m, "values") else np.asarray(m, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {values.shape}")
    if not np.isfinite(values).all():
        raise InvalidInputError("matrix contains non-finite entries")
    if not np.array_equal(values, values.T):
        raise InvalidInputError("matrix is not exactly symmetric")
    return values


def sym_eigenvalues(m) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, in descending order.

    Accepts a SymMatrix (anything with a `.values` array) or a plain
    square ndarray.
    """
    values = _as_square_sym(m)
    return jacobi_eigenvalues_batch(values[None, :, :])[0]


def spectral_norm(m) -> float:
    """Induced 2-norm of a symmetric matrix: the largest |eigenvalue|."""
    eig = sym_eigenvalues(m)
    return float(np.max(np.abs(eig)))


def spectral_norms_batch(mats: np.ndarray, force_numpy: bool = False) -> np.ndarray:
    """Spectral norms of a stack of symmetric matrices (unvalidated)."""
    eig = jacobi_eigenvalues_batch(mats, force_numpy=force_numpy)
    return np.max(np.abs(eig), axis=1)
