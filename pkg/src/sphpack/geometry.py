"""Signed-distance domains and their Cartesian background-grid samples.

Convention: phi < 0 inside, phi > 0 outside, |grad phi| = 1 for the
primitives.  Boolean compositions use min/max and are only distance-like
near the active boundary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGradientError, InvalidArgumentError, OutOfDomainError


def _points(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("query point must be finite")
    return x


class Shape:
    area = None

    def signed_distance(self, x):
        raise NotImplementedError

    def __or__(self, other):
        return Union(self, other)

    def __and__(self, other):
        return Intersection(self, other)

    def __invert__(self):
        return Complement(self)


class Circle(Shape):
    def __init__(self, center, radius):
        if not radius > 0:
            raise InvalidArgumentError(f"circle radius must be positive, got {radius}")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.area = np.pi * self.radius**2

    def signed_distance(self, x):
        x = _points(x)
        return np.linalg.norm(x - self.center, axis=-1) - self.radius


class Annulus(Shape):
    def __init__(self, center, r_inner, r_outer):
        if not 0 <= r_inner < r_outer:
            raise InvalidArgumentError(f"annulus needs 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")
        self.center = np.asarray(center, dtype=float)
        self.r_inner = float(r_inner)
        self.r_outer = float(r_outer)
        self.area = np.pi * (self.r_outer**2 - self.r_inner**2)

    def signed_distance(self, x):
        d = np.linalg.norm(_points(x) - self.center, axis=-1)
        return np.maximum(d - self.r_outer, self.r_inner - d)


class HalfPlane(Shape):
    """Points p with (p - point) . outward_normal <= 0."""

    def __init__(self, point, outward_normal):
        n = np.asarray(outward_normal, dtype=float)
        norm = np.linalg.norm(n)
        if not norm > 0:
            raise InvalidArgumentError("half-plane normal must be non-zero")
        self.point = np.asarray(point, dtype=float)
        self.normal = n / norm

    def signed_distance(self, x):
        return (_points(x) - self.point) @ self.normal


class AxisBox(Shape):
    def __init__(self, min_corner, max_corner):
        lo = np.asarray(min_corner, dtype=float)
        hi = np.asarray(max_corner, dtype=float)
        if np.any(hi <= lo):
            raise InvalidArgumentError("box max_corner must exceed min_corner")
        self.lo, self.hi = lo, hi
        self.area = float(np.prod(hi - lo))

    def signed_distance(self, x):
        x = _points(x)
        c = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo)
        d = np.abs(x - c) - half
        outside = np.linalg.norm(np.maximum(d, 0.0), axis=-1)
        inside = np.minimum(np.max(d, axis=-1), 0.0)
        return outside + inside


class Union(Shape):
    def __init__(self, *shapes):
        self.shapes = shapes

    def signed_distance(self, x):
        return np.min([s.signed_distance(x) for s in self.shapes], axis=0)


class Intersection(Shape):
    def __init__(self, *shapes):
        self.shapes = shapes

    def signed_distance(self, x):
        return np.max([s.signed_distance(x) for s in self.shapes], axis=0)


class Complement(Shape):
    def __init__(self, shape):
        self.shape = shape

    def signed_distance(self, x):
        return -self.shape.signed_distance(x)


def signed_distance(shape, x):
    return shape.signed_distance(x)


@dataclass(frozen=True, eq=False)
class LevelSetField:
    """Node values of phi on a uniform grid; values[i, j] sits at origin + (i, j) * spacing."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        if not self.spacing > 0:
            raise InvalidArgumentError("grid spacing must be positive")
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or min(values.shape) < 2:
            raise InvalidArgumentError("level-set grid needs at least 2x2 nodes")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("level-set values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))

    @property
    def nx(self):
        return self.values.shape[0]

    @property
    def ny(self):
        return self.values.shape[1]

    @property
    def upper(self):
        return self.origin + self.spacing * (np.array(self.values.shape) - 1)

    def node(self, i, j):
        return self.origin + self.spacing * np.array([i, j], dtype=float)

    def interpolate(self, x):
        """Bilinear interpolation; raises OutOfDomainError outside the grid."""
        x = _points(x)
        scalar = x.ndim == 1
        x = np.atleast_2d(x)
        s = (x - self.origin) / self.spacing
        tol = 1e-9
        limit = np.array(self.values.shape) - 1
        if np.any(s < -tol) or np.any(s > limit + tol):
            raise OutOfDomainError("point outside the level-set grid")
        s = np.clip(s, 0.0, limit)
        ij = np.minimum(np.floor(s).astype(int), limit - 1)
        t = s - ij
        i, j = ij[:, 0], ij[:, 1]
        tx, ty = t[:, 0], t[:, 1]
        v = self.values
        out = ((1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i + 1, j]
               + (1 - tx) * ty * v[i, j + 1] + tx * ty * v[i + 1, j + 1])
        return float(out[0]) if scalar else out

    phi = interpolate

    def gradient(self, x):
        x = _points(x)
        d = self.spacing
        ex = np.array([d, 0.0])
        ey = np.array([0.0, d])
        gx = (self.interpolate(x + ex) - self.interpolate(x - ex)) / (2 * d)
        gy = (self.interpolate(x + ey) - self.interpolate(x - ey)) / (2 * d)
        return np.stack([gx, gy], axis=-1)

    def normal(self, x):
        g = self.gradient(x)
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.any(norm < 1e-8):
            raise DegenerateGradientError("level-set gradient vanishes; normal undefined")
        return g / norm


def sample_to_grid(shape, origin, spacing, nx, ny):
    if int(nx) < 2 or int(ny) < 2:
        raise InvalidArgumentError(f"grid counts must be >= 2, got {nx}x{ny}")
    if not spacing > 0:
        raise InvalidArgumentError("grid spacing must be positive")
    origin = np.asarray(origin, dtype=float)
    gx = origin[0] + spacing * np.arange(int(nx))
    gy = origin[1] + spacing * np.arange(int(ny))
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    values = shape.signed_distance(np.stack([X, Y], axis=-1))
    return LevelSetField(origin, float(spacing), values)


def interpolate(field, x):
    return field.interpolate(x)


def normal(field, x):
    return field.normal(x)


class AnalyticLevelSet:
    """Exact phi and normal straight from a shape, with the LevelSetField query surface."""

    def __init__(self, shape, spacing):
        self.shape = shape
        self.spacing = float(spacing)

    def interpolate(self, x):
        return self.shape.signed_distance(_points(x))

    phi = interpolate

    def normal(self, x):
        x = _points(x)
        d = 1e-3 * self.spacing
        ex = np.array([d, 0.0])
        ey = np.array([0.0, d])
        g = np.stack([self.interpolate(x + ex) - self.interpolate(x - ex),
                      self.interpolate(x + ey) - self.interpolate(x - ey)], axis=-1)
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.any(norm < 1e-8 * d):
            raise DegenerateGradientError("level-set gradient vanishes; normal undefined")
        return g / norm
