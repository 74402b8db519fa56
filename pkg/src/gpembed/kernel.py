"""Gaussian affinity matrices and their symmetric / bistochastic normalizations.

The raw kernel is ``K_ij = exp(-|x_i - x_j|^2 / eps)``.  Two normalizations
turn it into an approximate heat kernel that stays symmetric:

* symmetric:    ``A = diag(v)^-1/2 Kq diag(v)^-1/2`` where ``Kq = K / (q q^T)``,
  ``q`` the row sums of ``K`` and ``v`` the row sums of ``Kq``;
* bistochastic: ``B = diag(d)^-1 K diag(d)^-1`` with ``d`` found by a
  symmetric Sinkhorn iteration so that every row and column of ``B`` sums to 1.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DegenerateError, InputError, ParameterError

NORMALIZATIONS = ("raw", "symmetric", "bistochastic")

DEFAULT_DELTA = 1e-8
DEFAULT_MAX_ITERS = 100_000


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointCloud:
    """N points in R^D.

    Parameters
    ----------
    points : array_like, shape (N, D)
        Coordinates; a 1-d input is read as N points on the line.
    label : str
        Free-text provenance (manifold name and parameters).
    seed : int, optional
        Seed the cloud was sampled with, if any.
    """

    points: np.ndarray
    label: str = ""
    seed: Optional[int] = None

    def __post_init__(self):
        try:
            pts = np.asarray(self.points, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise InputError(f"points are not a numeric array: {exc}") from None
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise InputError(f"points must be 2-d (N, D), got shape {pts.shape}")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError(f"need N >= 1 points of dimension D >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("point coordinates must be finite")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def digest(self) -> str:
        return hashlib.sha256(self.points.tobytes()).hexdigest()


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric N x N kernel with a normalization tag.

    ``entries`` is stored read-only. PSD-ness is not enforced here; see
    :meth:`min_eigenvalue_ratio` to check it.
    """

    entries: np.ndarray
    normalization: str = "raw"
    scale_eps: Optional[float] = None
    iterations: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InputError(f"kernel must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InputError("kernel entries must be finite")
        if self.normalization not in NORMALIZATIONS:
            raise ParameterError(
                f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}"
            )
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def source_size(self) -> int:
        return self.entries.shape[0]

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.entries, self.entries.T))

    def min_eigenvalue_ratio(self) -> float:
        """Smallest eigenvalue divided by the largest (in absolute value)."""
        w = np.linalg.eigvalsh(self.entries)
        top = np.max(np.abs(w))
        return float(w[0] / top) if top > 0 else 0.0

    def digest(self) -> str:
        return hashlib.sha256(self.entries.tobytes()).hexdigest()


def squared_distances(points) -> np.ndarray:
    """All pairwise squared Euclidean distances, computed entry by entry.

    Uses explicit coordinate differences rather than the Gram expansion so
    the diagonal is exactly zero and the result is exactly symmetric.
    Coordinates are accumulated in a fixed order.
    """
    x = np.asarray(points, dtype=np.float64)
    out = np.zeros((x.shape[0], x.shape[0]))
    for c in range(x.shape[1]):
        diff = x[:, None, c] - x[None, :, c]
        out += diff * diff
    return out


def affinity(cloud: PointCloud, eps: float) -> KernelMatrix:
    """Raw Gaussian affinity ``exp(-|x_i - x_j|^2 / eps)``.

    >>> affinity(PointCloud([[0.0], [1.0]]), 1.0).entries[0, 1] == np.exp(-1.0)
    True
    """
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(cloud)
    eps = float(eps)
    if not np.isfinite(eps) or eps <= 0:
        raise ParameterError(f"eps must be a positive finite number, got {eps}")
    k = np.exp(-squared_distances(cloud.points) / eps)
    return KernelMatrix(k, "raw", eps)


def _require_raw(K: KernelMatrix):
    if K.normalization != "raw":
        raise ParameterError(f"expected a raw affinity matrix, got {K.normalization!r}")


def normalize_symmetric(K: KernelMatrix) -> KernelMatrix:
    """Symmetric normalization of a raw affinity matrix.

    Divides out the density estimate ``q`` on both sides, then applies the
    symmetric square-root normalization by the row sums ``v`` of the result.
    """
    _require_raw(K)
    k = K.entries
    q = k.sum(axis=1)
    if np.any(q <= 0):
        raise DegenerateError("affinity matrix has a non-positive row sum")
    k_tilde = k / np.outer(q, q)
    v = k_tilde.sum(axis=1)
    if np.any(v <= 0):
        raise DegenerateError("density-normalized kernel has a non-positive row sum")
    a = k_tilde / np.sqrt(np.outer(v, v))
    return KernelMatrix(a, "symmetric", K.scale_eps)


SCHEMES = ("damped", "alternating")


def sinkhorn_scaling(k: np.ndarray, delta: float = DEFAULT_DELTA,
                     max_iters: int = DEFAULT_MAX_ITERS, scheme: str = "damped"):
    """Find ``d`` with ``diag(d)^-1 k diag(d)^-1`` bistochastic.

    Both schemes start from ``d = 1`` and look for the fixed point of
    ``T(d) = k @ (1 / d)``.

    ``"alternating"`` iterates ``d_{i+1} = T(d_i)`` and stops once the even and
    odd subsequences settle, ``max |d_{i+2} / d_i - 1| <= delta``.  ``T`` is
    homogeneous of degree -1, so the subsequences tend to ``c * d`` and
    ``d / c``; the answer is their geometric mean ``sqrt(d_{i+1} d_{i+2})``.
    Its error contracts by ``lambda_2(B)^2`` per pair of steps, which stalls
    on nearly disconnected point sets.

    ``"damped"`` iterates ``d <- sqrt(d * T(d))`` and stops once
    ``max |d_new / d - 1| <= delta``.  For a PSD kernel the linearized error
    contracts by at most 1/2 per step.

    Returns
    -------
    d : ndarray, shape (N,)
    iterations : int
        Loop passes (for ``"alternating"``, not counting the two initial steps).
    """
    delta = float(delta)
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    if int(max_iters) < 1:
        raise ParameterError(f"max_iters must be a positive integer, got {max_iters}")
    if scheme not in SCHEMES:
        raise ParameterError(f"scheme must be one of {SCHEMES}, got {scheme!r}")

    def step(d):
        if np.any(d <= 0):
            raise DegenerateError("Sinkhorn scaling vector has a non-positive component")
        return k @ (1.0 / d)

    def give_up(iterations, residual):
        return ConvergenceError(
            f"Sinkhorn balancing did not converge in {max_iters} iterations "
            f"(last residual {residual:.3e}, tolerance {delta:.1e})",
            iterations=iterations, residual=float(residual),
        )

    if scheme == "damped":
        d = np.ones(k.shape[0])
        iterations = 0
        while True:
            d_new = np.sqrt(d * step(d))
            iterations += 1
            residual = np.max(np.abs(d_new / d - 1.0))
            d = d_new
            if residual <= delta:
                break
            if iterations >= max_iters:
                raise give_up(iterations, residual)
        if np.any(d <= 0):
            raise DegenerateError("Sinkhorn scaling vector has a non-positive component")
        # the first pass that leaves d unchanged is not counted
        return d, iterations - 1

    d_prev2 = np.ones(k.shape[0])
    d_prev = step(d_prev2)
    d_cur = step(d_prev)
    iterations = 0
    residual = np.max(np.abs(d_cur / d_prev2 - 1.0))
    while residual > delta:
        if iterations >= max_iters:
            raise give_up(iterations, residual)
        iterations += 1
        d_prev2, d_prev = d_prev, d_cur
        d_cur = step(d_prev)
        residual = np.max(np.abs(d_cur / d_prev2 - 1.0))
    if np.any(d_cur <= 0):
        raise DegenerateError("Sinkhorn scaling vector has a non-positive component")
    return np.sqrt(d_cur) * np.sqrt(d_prev), iterations


def normalize_bistochastic(K: KernelMatrix, delta: float = DEFAULT_DELTA,
                           max_iters: int = DEFAULT_MAX_ITERS,
                           scheme: str = "damped") -> KernelMatrix:
    """Bistochastic normalization ``B = diag(d)^-1 K diag(d)^-1``.

    ``scheme`` selects the Sinkhorn update, see :func:`sinkhorn_scaling`;
    the default damped update converges in a few dozen passes even when the
    alternating one needs millions.

    Raises
    ------
    ConvergenceError
        If the Sinkhorn loop exceeds ``max_iters``; carries the last residual.
    DegenerateError
        If the diagonal is not strictly positive or a scaling component vanishes.
    """
    _require_raw(K)
    k = K.entries
    if np.any(np.diag(k) <= 0):
        raise DegenerateError("bistochastic normalization needs a strictly positive diagonal")
    d, iterations = sinkhorn_scaling(k, delta, max_iters, scheme)
    b = k / np.outer(d, d)
    return KernelMatrix(b, "bistochastic", K.scale_eps, iterations=iterations)


def normalized_kernel(cloud: PointCloud, eps: float, normalization: str = "symmetric",
                      delta: float = DEFAULT_DELTA, max_iters: int = DEFAULT_MAX_ITERS,
                      scheme: str = "damped") -> KernelMatrix:
    """Affinity followed by the requested normalization."""
    k = affinity(cloud, eps)
    if normalization == "raw":
        return k
    if normalization == "symmetric":
        return normalize_symmetric(k)
    if normalization == "bistochastic":
        return normalize_bistochastic(k, delta, max_iters, scheme)
    raise ParameterError(f"unknown normalization {normalization!r}")
