"""Top eigenpairs of symmetric PSD kernels, dense or randomized.

The randomized path is a standard range finder: sketch ``A`` with an
``N x (m + oversample)`` Gaussian matrix, sharpen the range with a few power
steps (re-orthonormalizing each time), then solve the small projected
eigenproblem.  Results are always checked against the residual tolerance
and recomputed densely if the check fails.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DecompositionError, ParameterError
from .kernel import KernelMatrix

DEFAULT_OVERSAMPLE = 8
DEFAULT_POWER_STEPS = 4

SIGN_TOL = 1e-12
RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class SpectralDecomposition:
    """Leading eigenpairs, eigenvalues descending.

    ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``. ``method`` records the
    path that actually produced the result (``"dense"`` or ``"randomized"``).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    method: str = "dense"

    @property
    def source_size(self) -> int:
        return self.eigenvectors.shape[0]

    @property
    def m(self) -> int:
        return self.eigenvalues.shape[0]

    def head(self, m: int) -> "SpectralDecomposition":
        if m > self.m:
            raise ParameterError(f"only {self.m} eigenpairs available, requested {m}")
        return SpectralDecomposition(self.eigenvalues[:m], self.eigenvectors[:, :m], self.method)


def _as_array(A):
    return A.entries if isinstance(A, KernelMatrix) else np.asarray(A, dtype=np.float64)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the first entry with magnitude above 1e-12 is positive."""
    v = np.array(vectors, dtype=np.float64, copy=True)
    for j in range(v.shape[1]):
        big = np.flatnonzero(np.abs(v[:, j]) > SIGN_TOL)
        if big.size and v[big[0], j] < 0:
            v[:, j] = -v[:, j]
    return v


def _canonical_order(w, v):
    """Descending eigenvalues; exact ties broken by descending lexicographic vector."""
    v = fix_signs(v)
    idx = np.argsort(-w, kind="stable")
    start = 0
    while start < idx.size:
        stop = start + 1
        while stop < idx.size and w[idx[stop]] == w[idx[start]]:
            stop += 1
        if stop - start > 1:
            run = sorted(idx[start:stop], key=lambda i: tuple(v[:, i]), reverse=True)
            idx[start:stop] = run
        start = stop
    return w[idx], v[:, idx]


def _residuals(a, w, v):
    return np.linalg.norm(a @ v - v * w, axis=0)


def _residual_ok(a, w, v):
    if w.size == 0:
        return True
    scale = max(float(w[0]), 1.0)
    return bool(np.all(_residuals(a, w, v) <= RESIDUAL_TOL * scale))


def _dense(a, m):
    w, v = np.linalg.eigh(a)
    w, v = _canonical_order(w, v)
    return w[:m], v[:, :m]


def _randomized(a, m, oversample, power_steps, rng):
    n = a.shape[0]
    ell = min(n, m + oversample)
    omega = rng.standard_normal((n, ell))
    q, _ = la.qr(a @ omega, mode="economic")
    for _ in range(power_steps):
        q, _ = la.qr(a @ q, mode="economic")
    small = q.T @ a @ q
    small = 0.5 * (small + small.T)
    w, u = np.linalg.eigh(small)
    w, v = _canonical_order(w, q @ u)
    return w[:m], v[:, :m]


def top_eigenpairs(A, m: int, method: str = "dense",
                   oversample: int = DEFAULT_OVERSAMPLE,
                   power_steps: int = DEFAULT_POWER_STEPS,
                   seed: int = 0) -> SpectralDecomposition:
    """Top ``m`` eigenpairs of a symmetric matrix.

    Parameters
    ----------
    A : KernelMatrix or array_like, shape (N, N)
    m : int
        Number of eigenpairs, ``1 <= m <= N``.
    method : {"dense", "randomized"}
    oversample, power_steps : int
        Randomized path only: extra sketch columns and number of power steps.
    seed : int
        Seed for the randomized sketch.

    Raises
    ------
    ParameterError
        ``m`` out of range, unknown method, or non-square / non-symmetric input.
    DecompositionError
        Residual check ``|A v - lam v| <= 1e-6 max(lam_0, 1)`` fails on the
        dense path (after any randomized fallback).
    """
    a = _as_array(A)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    m = int(m)
    if not 1 <= m <= n:
        raise ParameterError(f"m must satisfy 1 <= m <= N={n}, got {m}")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ParameterError("matrix is not symmetric")
    if oversample < 0 or power_steps < 0:
        raise ParameterError("oversample and power_steps must be non-negative")

    if method == "randomized":
        w, v = _randomized(a, m, oversample, power_steps, np.random.default_rng(seed))
        if _residual_ok(a, w, v):
            return SpectralDecomposition(w, v, "randomized")
    elif method != "dense":
        raise ParameterError(f"method must be 'dense' or 'randomized', got {method!r}")

    w, v = _dense(a, m)
    if not _residual_ok(a, w, v):
        worst = float(np.max(_residuals(a, w, v)))
        raise DecompositionError(f"eigenpair residual {worst:.3e} exceeds tolerance")
    return SpectralDecomposition(w, v, "dense")


def matrix_power_apply(A, p: int, G) -> np.ndarray:
    """``A^p @ G`` by ``p`` successive products; ``A^p`` is never formed."""
    a = _as_array(A)
    g = np.asarray(G, dtype=np.float64)
    p_int = int(p)
    if p_int != p or p_int < 1:
        raise ParameterError(f"power must be a positive integer, got {p}")
    squeeze = g.ndim == 1
    if squeeze:
        g = g[:, None]
    if a.ndim != 2 or a.shape[0] != a.shape[1] or g.ndim != 2 or g.shape[0] != a.shape[1]:
        raise ParameterError(f"cannot apply {a.shape} matrix to {g.shape} block")
    out = g
    for _ in range(p_int):
        out = a @ out
    return out[:, 0] if squeeze else out
