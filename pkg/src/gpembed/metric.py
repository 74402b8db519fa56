"""Distance matrices and the scale-adjusted biLipschitz distortion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DegenerateError, InputError, ParameterError
from .kernel import KernelMatrix

DEFAULT_ZERO_TOL = 1e-12
# stand-in for an infinite distortion in log-L statistics
COLLAPSE_CAP = 1e12


@dataclass(frozen=True)
class DistanceMatrix:
    entries: np.ndarray
    kind: str = "euclidean"

    def __post_init__(self):
        d = np.asarray(self.entries, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InputError(f"distance matrix must be square, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise InputError("distance matrix has non-finite entries")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "entries", d)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def pairwise_euclidean(coords, kind: str = "euclidean") -> DistanceMatrix:
    """Euclidean distances between the rows of ``coords``."""
    x = np.asarray(coords, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1:
        raise InputError(f"coords must be a non-empty 2-d array, got shape {x.shape}")
    if x.shape[0] == 1:
        return DistanceMatrix(np.zeros((1, 1)), kind)
    return DistanceMatrix(squareform(pdist(x, "euclidean")), kind)


def diffusion_distance(A, t: int) -> DistanceMatrix:
    """Diffusion distance at integer time ``t``: row distances of ``A^t``.

    Equals ``sqrt(sum_l lam_l^(2t) (v_l[i] - v_l[j])^2)`` over the full
    spectrum of ``A``.
    """
    a = A.entries if isinstance(A, KernelMatrix) else np.asarray(A, dtype=np.float64)
    t_int = int(t)
    if t_int != t or t_int < 1:
        raise ParameterError(f"diffusion time must be a positive integer, got {t}")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {a.shape}")
    at = np.linalg.matrix_power(a, t_int)
    return pairwise_euclidean(at, kind=f"diffusion({t_int})")


def bilipschitz_distortion(embedded, reference, zero_tol: float = DEFAULT_ZERO_TOL) -> float:
    """Max dilation over min dilation across all unordered pairs.

    Pairs with reference distance ``<= zero_tol`` are skipped. If an admitted
    pair is collapsed to distance 0 the result is ``inf``.

    Raises
    ------
    DegenerateError
        No pair has reference distance above ``zero_tol``.
    """
    e = embedded.entries if isinstance(embedded, DistanceMatrix) else np.asarray(embedded, float)
    r = reference.entries if isinstance(reference, DistanceMatrix) else np.asarray(reference, float)
    if e.shape != r.shape or e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise ParameterError(f"distance matrices differ in shape: {e.shape} vs {r.shape}")
    iu = np.triu_indices(e.shape[0], k=1)
    ref = r[iu]
    keep = ref > zero_tol
    if not np.any(keep):
        raise DegenerateError("reference distances are all zero; distortion undefined")
    ratio = e[iu][keep] / ref[keep]
    hi = float(ratio.max())
    lo = float(ratio.min())
    if lo <= 0.0:
        return math.inf
    return hi / lo


def log_distortion(L: float) -> float:
    """Natural log of L, with an infinite L replaced by the collapse cap."""
    return math.log(min(L, COLLAPSE_CAP))
