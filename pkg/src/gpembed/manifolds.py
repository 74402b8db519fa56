"""Samplers for the synthetic test manifolds.

All samplers draw parameters uniformly on ``[0, 2*pi)``; the Klein bottle is
therefore uniform in parameter space, not in surface area.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import SpecError
from .kernel import PointCloud

KINDS = ("circle", "flat_torus", "klein", "circle_with_outliers")

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ManifoldSpec:
    """What to sample and how many points.

    ``r`` applies to ``flat_torus``; ``a``, ``b`` to ``klein``; ``outliers``
    to ``circle_with_outliers`` (appended after the circle points, in order).
    """

    kind: str
    n: int
    seed: Optional[int] = None
    r: float = 3.5
    a: float = 10.0
    b: float = 5.0
    outliers: Tuple[Tuple[float, ...], ...] = ((0.0, 3.0), (3.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "outliers", tuple(tuple(map(float, o)) for o in self.outliers))
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise SpecError(f"manifold must be one of {KINDS}, got {self.kind!r}")
        if int(self.n) != self.n or self.n < 1:
            raise SpecError(f"sample size n must be a positive integer, got {self.n}")
        if self.kind == "flat_torus" and not self.r > 1:
            raise SpecError(f"flat_torus radius r must exceed 1, got {self.r}")
        if self.kind == "klein" and not self.a > self.b > 0:
            raise SpecError(f"klein needs a > b > 0, got a={self.a}, b={self.b}")
        if self.kind == "circle_with_outliers":
            if len(self.outliers) > self.n:
                raise SpecError(f"{len(self.outliers)} outliers do not fit in n={self.n} points")
            if any(len(o) != 2 for o in self.outliers):
                raise SpecError("circle outliers must be points in R^2")
            if not np.all(np.isfinite(np.asarray(self.outliers, dtype=float))):
                raise SpecError("outlier coordinates must be finite")

    @property
    def label(self) -> str:
        if self.kind == "flat_torus":
            return f"flat_torus(r={self.r!r})"
        if self.kind == "klein":
            return f"klein(a={self.a!r},b={self.b!r})"
        if self.kind == "circle_with_outliers":
            pts = ";".join(",".join(repr(c) for c in o) for o in self.outliers)
            return f"circle_with_outliers({pts})"
        return "circle"

    def with_seed(self, seed) -> "ManifoldSpec":
        return ManifoldSpec(self.kind, self.n, seed, self.r, self.a, self.b, self.outliers)


def circle_points(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    return np.column_stack([np.cos(theta), np.sin(theta)])


def flat_torus_points(u, v, r: float) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return np.column_stack([np.cos(u), np.sin(u), r * np.cos(v), r * np.sin(v)])


def klein_points(u, v, a: float, b: float) -> np.ndarray:
    """Klein bottle in R^4 (``a`` tube center radius, ``b`` tube radius)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    ring = a + b * np.cos(v)
    return np.column_stack([
        ring * np.cos(u),
        ring * np.sin(u),
        b * np.sin(v) * np.cos(u / 2),
        b * np.sin(v) * np.sin(u / 2),
    ])


def sample(spec: ManifoldSpec) -> PointCloud:
    """Draw ``spec.n`` points; identical spec and seed give identical clouds."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = int(spec.n)
    if spec.kind == "circle":
        pts = circle_points(rng.uniform(0.0, TWO_PI, n))
    elif spec.kind == "flat_torus":
        u = rng.uniform(0.0, TWO_PI, n)
        v = rng.uniform(0.0, TWO_PI, n)
        pts = flat_torus_points(u, v, spec.r)
    elif spec.kind == "klein":
        u = rng.uniform(0.0, TWO_PI, n)
        v = rng.uniform(0.0, TWO_PI, n)
        pts = klein_points(u, v, spec.a, spec.b)
    else:
        m = n - len(spec.outliers)
        circ = circle_points(rng.uniform(0.0, TWO_PI, m))
        pts = np.vstack([circ, np.asarray(spec.outliers, dtype=np.float64).reshape(-1, 2)])
    return PointCloud(pts, spec.label, spec.seed)


def parse_outliers(text: str) -> Sequence[Tuple[float, float]]:
    """Parse ``"0,3;3,0"`` into ``[(0.0, 3.0), (3.0, 0.0)]``."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip().strip("()")
        if not chunk:
            continue
        try:
            out.append(tuple(float(c) for c in chunk.split(",")))
        except ValueError:
            raise SpecError(f"cannot parse outlier {chunk!r}") from None
    return out
