"""Diffusion-maps and Gaussian-process embeddings of a normalized kernel.

Diffusion maps keep the top nontrivial eigenvectors, scaled by powered
eigenvalues.  Gaussian-process embeddings sketch ``A^p`` with a random
``N x k`` matrix instead, so every eigenvector contributes to each
coordinate; the straight-line distances then match the diffusion distance
at time ``p`` in expectation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError, SpectralError
from .kernel import KernelMatrix
from .spectral import SpectralDecomposition, matrix_power_apply, top_eigenpairs

METHODS = ("DMS", "DMB", "GPS", "GPB", "GPSBS", "GPSBB")
DISTRIBUTIONS = ("gaussian", "symmetric_bernoulli")

# method -> (family, normalization, sketch distribution)
METHOD_TABLE = {
    "DMS": ("diffusion", "symmetric", None),
    "DMB": ("diffusion", "bistochastic", None),
    "GPS": ("gp", "symmetric", "gaussian"),
    "GPB": ("gp", "bistochastic", "gaussian"),
    "GPSBS": ("gp", "symmetric", "symmetric_bernoulli"),
    "GPSBB": ("gp", "bistochastic", "symmetric_bernoulli"),
}

CLAMP_TOL = 1e-10


def method_for(normalization: str, distribution: Optional[str] = None) -> str:
    for name, (_, norm, dist) in METHOD_TABLE.items():
        if norm == normalization and dist == distribution:
            return name
    raise ParameterError(
        f"no embedding method for normalization={normalization!r}, distribution={distribution!r}"
    )


@dataclass(frozen=True)
class Embedding:
    """Row ``i`` of ``coords`` is the image of point ``i``."""

    coords: np.ndarray
    method: str
    power: float
    seed: Optional[int] = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] < 1:
            raise ParameterError(f"embedding coordinates must be N x k with k >= 1, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise SpectralError("embedding has non-finite coordinates")
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def k(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class SketchMatrix:
    entries: np.ndarray
    distribution: str
    seed: Optional[int] = None

    @property
    def shape(self):
        return self.entries.shape


def make_sketch(n: int, k: int, distribution: str = "gaussian", seed=None) -> SketchMatrix:
    """Deterministic ``n x k`` sketch: i.i.d. N(0, 1) or fair +-1 entries.

    >>> make_sketch(3, 2, "symmetric_bernoulli", seed=1).entries.shape
    (3, 2)
    """
    n, k = int(n), int(k)
    if n < 1 or k < 1:
        raise ParameterError(f"sketch dimensions must be positive, got {n} x {k}")
    rng = np.random.default_rng(seed)
    if distribution == "gaussian":
        g = rng.standard_normal((n, k))
    elif distribution in ("symmetric_bernoulli", "bernoulli"):
        distribution = "symmetric_bernoulli"
        g = 2.0 * rng.integers(0, 2, size=(n, k)).astype(np.float64) - 1.0
    else:
        raise ParameterError(f"distribution must be one of {DISTRIBUTIONS}, got {distribution!r}")
    g.setflags(write=False)
    return SketchMatrix(g, distribution, seed)


def _require_normalized(A: KernelMatrix):
    if not isinstance(A, KernelMatrix):
        raise ParameterError("expected a KernelMatrix")
    if A.normalization not in ("symmetric", "bistochastic"):
        raise ParameterError(
            f"embeddings need a symmetric or bistochastic kernel, got {A.normalization!r}"
        )


def clamp_eigenvalues(w: np.ndarray) -> np.ndarray:
    """Zero out round-off negatives; reject genuinely negative eigenvalues."""
    w = np.asarray(w, dtype=np.float64)
    tol = CLAMP_TOL * max(1.0, float(np.max(np.abs(w)))) if w.size else CLAMP_TOL
    if np.any(w < -tol):
        raise SpectralError(f"kernel has a negative eigenvalue {w.min():.3e}; not PSD")
    return np.where(w < 0, 0.0, w)


def diffusion_maps(A: KernelMatrix, k: int, t: float,
                   decomposition: Optional[SpectralDecomposition] = None,
                   eig_method: str = "dense") -> Embedding:
    """Diffusion-maps embedding into R^k at time ``t``.

    Uses eigenpairs 1..k of ``A`` (the top eigenvector, index 0, is dropped)
    and sets ``y_j = (lam_1^t v_1[j], ..., lam_k^t v_k[j])``.

    Parameters
    ----------
    decomposition : SpectralDecomposition, optional
        Precomputed eigenpairs of ``A`` with at least ``k + 1`` columns;
        lets callers sweep ``k`` without refactoring the matrix.
    """
    _require_normalized(A)
    k = int(k)
    n = A.source_size
    if k < 1 or k + 1 > n:
        raise ParameterError(f"diffusion maps need 1 <= k <= N - 1 = {n - 1}, got k={k}")
    t = float(t)
    if not t > 0:
        raise ParameterError(f"time t must be positive, got {t}")
    if decomposition is None:
        decomposition = top_eigenpairs(A, k + 1, method=eig_method)
    dec = decomposition.head(k + 1)
    lam = clamp_eigenvalues(dec.eigenvalues)[1:]
    coords = dec.eigenvectors[:, 1:] * lam ** t
    return Embedding(coords, method_for(A.normalization), t, None)


def gp_embedding(A: KernelMatrix, k: int, p: int, sketch: SketchMatrix) -> Embedding:
    """Gaussian-process embedding ``Y = A^p G / sqrt(k)``.

    With a Gaussian ``G`` the columns of ``Y`` are independent realizations of
    a Gaussian process with covariance ``A^(2p) / k``; with a +-1 sketch the
    second moments are the same.
    """
    _require_normalized(A)
    k = int(k)
    g = sketch.entries
    if g.ndim != 2 or g.shape != (A.source_size, k):
        raise ParameterError(f"sketch shape {g.shape} does not match ({A.source_size}, {k})")
    y = matrix_power_apply(A, p, g) / np.sqrt(k)
    return Embedding(y, method_for(A.normalization, sketch.distribution), int(p), sketch.seed)


def gp_power_series(A: KernelMatrix, k: int, powers, sketch: SketchMatrix):
    """GP embeddings of one sketch at several powers, sharing the products.

    Yields ``(p, Embedding)`` in increasing ``p``; each result is identical to
    ``gp_embedding(A, k, p, sketch)`` since the same products are applied in
    the same order.
    """
    _require_normalized(A)
    k = int(k)
    g = sketch.entries
    if g.ndim != 2 or g.shape != (A.source_size, k):
        raise ParameterError(f"sketch shape {g.shape} does not match ({A.source_size}, {k})")
    method = method_for(A.normalization, sketch.distribution)
    current, done = g, 0
    for p in sorted(set(int(q) for q in powers)):
        if p < 1:
            raise ParameterError(f"powers must be positive integers, got {p}")
        current = matrix_power_apply(A, p - done, current) if p > done else current
        done = p
        yield p, Embedding(current / np.sqrt(k), method, p, sketch.seed)
