"""Core spherical geometry: points, geodesic distance, caps, projections, sampling.

Points on the unit sphere are plain numpy arrays of shape (3,) with unit norm.
All areas are in steradians (total 4*pi); callers that want the normalized
convention divide by SPHERE_AREA.

Floating-point policy: double precision with explicit tolerances.
Construction/normalization is checked at 1e-12, geometric round-trips at
1e-10, and geometric predicates default to 1e-9.  arccos inputs are always
clamped to [-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NORMALIZATION_TOL = 1e-12
ROUND_TRIP_TOL = 1e-10
PREDICATE_TOL = 1e-9

TWO_PI = 2.0 * math.pi
SPHERE_AREA = 4.0 * math.pi

NORTH_POLE = np.array([0.0, 0.0, 1.0])
SOUTH_POLE = np.array([0.0, 0.0, -1.0])


class OutOfHemisphereError(ValueError):
    """Point is not strictly inside the open hemisphere of a projection."""


class InfeasibleShrinkError(ValueError):
    """Requested shrink distance cannot be realized at this colatitude."""


def unit_vector(x: float, y: float, z: float) -> np.ndarray:
    """Build a unit vector, normalizing the input. Zero input is an error."""
    v = np.array([float(x), float(y), float(z)])
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def is_unit(v: np.ndarray, tol: float = NORMALIZATION_TOL) -> bool:
    return abs(float(v @ v) - 1.0) <= 3.0 * tol


def from_polar(theta: float, phi: float) -> np.ndarray:
    """Unit vector from colatitude theta in [0, pi] and azimuth phi."""
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def to_polar(v: np.ndarray) -> tuple[float, float]:
    """(theta, phi) with theta in [0, pi], phi in [0, 2*pi)."""
    theta = math.acos(max(-1.0, min(1.0, float(v[2]))))
    phi = math.atan2(float(v[1]), float(v[0])) % TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return theta, phi


def geodesic_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Length of the smaller great-circle arc between u and v, in [0, pi]."""
    return math.acos(max(-1.0, min(1.0, float(u @ v))))


def polar_dot(u: np.ndarray, v: np.ndarray) -> float:
    """Euclidean inner product; zero iff v lies on the great circle polar to u."""
    return float(u @ v)


def cap_area(radius: float) -> float:
    """Area 2*pi*(1 - cos r) of a geodesic disc of the given radius."""
    if radius < 0.0:
        raise ValueError(f"cap radius must be nonnegative, got {radius}")
    return TWO_PI * (1.0 - math.cos(radius))


@dataclass(frozen=True)
class Cap:
    """Open geodesic disc: center on the sphere, radius in radians."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not 0.0 < self.radius <= math.pi:
            raise ValueError(f"cap radius must be in (0, pi], got {self.radius}")

    def contains(self, p: np.ndarray) -> bool:
        return geodesic_distance(self.center, p) < self.radius

    def area(self) -> float:
        return cap_area(self.radius)


@dataclass(frozen=True)
class GeodesicSegment:
    """Minor great-circle arc between two non-antipodal endpoints."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if geodesic_distance(self.a, self.b) >= math.pi - NORMALIZATION_TOL:
            raise ValueError("antipodal endpoints do not define a unique segment")

    def length(self) -> float:
        return geodesic_distance(self.a, self.b)

    def point_at(self, t: float) -> np.ndarray:
        """Point at parameter t in [0, 1] along the arc (spherical interpolation)."""
        omega = self.length()
        if omega < NORMALIZATION_TOL:
            return self.a.copy()
        s = math.sin(omega)
        return (math.sin((1.0 - t) * omega) * self.a + math.sin(t * omega) * self.b) / s


def tangent_basis(center: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal tangent frame (e1, e2) at center with e1 x e2 = center."""
    helper = NORTH_POLE if abs(float(center[2])) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(helper, center)
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(center, e1)
    return e1, e2


def gnomonic_project(center: np.ndarray, p: np.ndarray,
                     basis: tuple[np.ndarray, np.ndarray] | None = None) -> tuple[float, float]:
    """Central projection of p onto the tangent plane at center.

    Maps great-circle arcs through the open hemisphere to straight planar
    segments.  Requires d(center, p) < pi/2.
    """
    d = float(center @ p)
    if d <= NORMALIZATION_TOL:
        raise OutOfHemisphereError(
            f"point at distance {geodesic_distance(center, p):.6f} >= pi/2 from projection center")
    e1, e2 = tangent_basis(center) if basis is None else basis
    return float(p @ e1) / d, float(p @ e2) / d


def gnomonic_project_batch(center: np.ndarray, points: np.ndarray,
                           basis: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Vectorized gnomonic projection of an (n, 3) array; returns (n, 2)."""
    d = points @ center
    if np.any(d <= NORMALIZATION_TOL):
        raise OutOfHemisphereError("some points are not strictly inside the open hemisphere")
    e1, e2 = tangent_basis(center) if basis is None else basis
    return np.stack([(points @ e1) / d, (points @ e2) / d], axis=1)


def gnomonic_unproject(center: np.ndarray, x: float, y: float,
                       basis: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    e1, e2 = tangent_basis(center) if basis is None else basis
    v = center + x * e1 + y * e2
    return v / np.linalg.norm(v)


def lune_half_angle(shrink: float, colatitude: float) -> float:
    """Azimuthal rotation needed so a meridian clears the original by >= shrink.

    By the spherical law of sines the rotation omega satisfies
    sin(omega) = sin(shrink) / sin(colatitude); every point of the rotated
    meridian at colatitude >= this one is then at distance >= shrink from the
    original meridian's great circle.
    """
    if not 0.0 < colatitude < math.pi:
        raise ValueError(f"colatitude must be in (0, pi), got {colatitude}")
    if shrink < 0.0:
        raise ValueError(f"shrink must be nonnegative, got {shrink}")
    s = math.sin(shrink)
    sc = math.sin(colatitude)
    if s > sc:
        raise InfeasibleShrinkError(
            f"sin(shrink)={s:.6g} exceeds sin(colatitude)={sc:.6g}")
    return math.asin(min(1.0, s / sc))


def spherical_polygon_area(vertices) -> float:
    """Girard area of a convex geodesic polygon: sum of interior angles - (n-2)*pi.

    Vertices must be ordered consistently and lie within one open hemisphere.
    """
    verts = np.asarray(vertices, dtype=float)
    n = len(verts)
    if n < 3:
        raise ValueError(f"need at least 3 vertices, got {n}")
    centroid = verts.sum(axis=0)
    norm = np.linalg.norm(centroid)
    if norm < NORMALIZATION_TOL:
        raise ValueError("vertices do not determine a hemisphere (centroid is zero)")
    centroid = centroid / norm
    if np.any(verts @ centroid <= 0.0):
        raise ValueError("vertices do not fit in one open hemisphere")
    angle_sum = 0.0
    for i in range(n):
        v = verts[i]
        a = verts[(i - 1) % n]
        b = verts[(i + 1) % n]
        ta = a - (a @ v) * v
        tb = b - (b @ v) * v
        na, nb = np.linalg.norm(ta), np.linalg.norm(tb)
        if na < NORMALIZATION_TOL or nb < NORMALIZATION_TOL:
            raise ValueError("repeated or antipodal adjacent vertices")
        angle_sum += math.acos(max(-1.0, min(1.0, float(ta @ tb) / (na * nb))))
    return angle_sum - (n - 2) * math.pi


def sample_uniform(rng: np.random.Generator) -> np.ndarray:
    """One point uniform on the sphere (uniform in cos(theta) and phi)."""
    z = 1.0 - 2.0 * rng.random()
    phi = TWO_PI * rng.random()
    s = math.sqrt(max(0.0, 1.0 - z * z))
    return np.array([s * math.cos(phi), s * math.sin(phi), z])


def sample_uniform_batch(rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 3) array of points uniform on the sphere."""
    z = 1.0 - 2.0 * rng.random(n)
    phi = TWO_PI * rng.random(n)
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


# --- geodesic arc utilities (used by polygon distance computations) ---

def arc_normal(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unit normal of the great circle through a and b (pole of the circle)."""
    n = np.cross(a, b)
    norm = np.linalg.norm(n)
    if norm < NORMALIZATION_TOL:
        raise ValueError("endpoints coincide or are antipodal; great circle not unique")
    return n / norm


def point_on_arc(p: np.ndarray, a: np.ndarray, b: np.ndarray, n: np.ndarray,
                 tol: float = PREDICATE_TOL) -> bool:
    """True if p (assumed on the great circle of n) lies on the minor arc a->b."""
    return (float(np.cross(a, p) @ n) >= -tol) and (float(np.cross(p, b) @ n) >= -tol)


def point_arc_distance_range(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """(min, max) geodesic distance from point p to the minor arc a->b."""
    n = arc_normal(a, b)
    s = float(p @ n)
    da, db = geodesic_distance(p, a), geodesic_distance(p, b)
    dmin, dmax = min(da, db), max(da, db)
    foot = p - s * n
    fn = np.linalg.norm(foot)
    if fn > NORMALIZATION_TOL:
        foot = foot / fn
        if point_on_arc(foot, a, b, n):
            dmin = min(dmin, math.asin(min(1.0, abs(s))))
        anti = -foot
        if point_on_arc(anti, a, b, n):
            dmax = max(dmax, math.pi - math.asin(min(1.0, abs(s))))
    return dmin, dmax
