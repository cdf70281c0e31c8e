"""Convexification of cell selections into disjoint spherical convex polygons.

Stage 1 groups the selection into connected components (closure adjacency,
including corners, the azimuthal wraparound, and the poles) and replaces each
component by the spherical convex hull of its sampled boundary, computed via
gnomonic projection about the component centroid.  Stage 2 repeatedly merges
any two polygons at (numerically) zero distance by hulling their vertex
unions, until all pairwise distances are positive.  Latitude cell edges are
small-circle arcs, so hulls are inner approximations that converge as the
per-edge sampling resolution grows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .grid import CellSet, DyadicCell, cell_bounds, neighbors, theta_bounds
from .sphere import (GeodesicSegment, NORMALIZATION_TOL, PREDICATE_TOL,
                     from_polar, geodesic_distance, gnomonic_project_batch,
                     gnomonic_unproject, spherical_polygon_area, tangent_basis)

HEMISPHERE_MARGIN = 1e-9
MERGE_TOL = 1e-9


def _cross2(u, v) -> float:
    """Scalar cross product of planar vectors."""
    return float(u[0] * v[1] - u[1] * v[0])


class HullInfeasibleError(ValueError):
    """Component does not fit strictly inside an open hemisphere."""


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Geodesic convex polygon, vertices counterclockwise seen from outside.

    All vertices lie strictly within pi/2 of hemisphere_center, so the
    gnomonic chart about that center is a faithful planar model.
    """

    vertices: np.ndarray  # (n, 3) unit vectors
    hemisphere_center: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 3:
            raise ValueError(f"need an (n>=3, 3) vertex array, got shape {v.shape}")
        if np.any(v @ self.hemisphere_center <= math.sin(HEMISPHERE_MARGIN)):
            raise HullInfeasibleError("vertex outside the open hemisphere of the witness")

    def __len__(self) -> int:
        return len(self.vertices)

    def edges(self):
        n = len(self.vertices)
        for i in range(n):
            yield self.vertices[i], self.vertices[(i + 1) % n]

    def contains(self, p: np.ndarray, tol: float = PREDICATE_TOL) -> bool:
        if float(p @ self.hemisphere_center) <= 0.0:
            return False
        for a, b in self.edges():
            if float(p @ np.cross(a, b)) < -tol:
                return False
        return True

    def area(self) -> float:
        return spherical_polygon_area(self.vertices)

    def boundary_samples(self, per_edge: int = 8) -> np.ndarray:
        pts = []
        for a, b in self.edges():
            seg = GeodesicSegment(a, b)
            for j in range(per_edge):
                pts.append(seg.point_at(j / per_edge))
        return np.asarray(pts)

    def to_json(self) -> dict:
        return {
            "vertices": [[float(f"{x:.17g}") for x in v] for v in self.vertices],
            "hemisphere_center": [float(f"{x:.17g}") for x in self.hemisphere_center],
        }


def _prune_collinear(planar: np.ndarray, order: np.ndarray, tol: float = 1e-13) -> list:
    kept = list(order)
    changed = True
    while changed and len(kept) > 3:
        changed = False
        for i in range(len(kept)):
            a = planar[kept[i - 1]]
            v = planar[kept[i]]
            b = planar[kept[(i + 1) % len(kept)]]
            if abs(_cross2(b - v, v - a)) <= tol * max(1.0, np.abs(b - a).max()):
                kept.pop(i)
                changed = True
                break
    return kept


def convex_polygon_from_points(points: np.ndarray,
                               center: np.ndarray | None = None) -> ConvexPolygon:
    """Spherical convex hull of points via gnomonic projection about their centroid."""
    pts = np.asarray(points, dtype=float)
    if center is None:
        c = pts.sum(axis=0)
        norm = np.linalg.norm(c)
        if norm < NORMALIZATION_TOL:
            raise HullInfeasibleError("points do not determine a hemisphere")
        center = c / norm
    dots = pts @ center
    if np.any(dots <= math.sin(HEMISPHERE_MARGIN)):
        raise HullInfeasibleError(
            f"point at distance >= pi/2 - {HEMISPHERE_MARGIN:g} from the centroid")
    basis = tangent_basis(center)
    planar = gnomonic_project_batch(center, pts, basis)
    try:
        hull = ConvexHull(planar)
    except QhullError as exc:
        raise HullInfeasibleError(f"degenerate point set: {exc}") from exc
    order = _prune_collinear(planar, hull.vertices)
    verts = pts[order]
    verts = verts / np.linalg.norm(verts, axis=1, keepdims=True)
    return ConvexPolygon(verts, center)


def _component_boundary_points(component: CellSet, arc_samples: int) -> np.ndarray:
    """Cell corners plus sampled latitude arcs (small circles need sampling)."""
    pts = []
    for cell in component.cells():
        tlo, thi = theta_bounds(cell)
        _, (plo, phi) = cell_bounds(cell)
        for theta in (tlo, thi):
            if theta == 0.0 or theta == math.pi:
                pts.append(from_polar(theta, plo))
                continue
            for j in range(arc_samples + 1):
                pts.append(from_polar(theta, plo + (phi - plo) * j / arc_samples))
    return np.asarray(pts)


def connected_components(selection: CellSet) -> list[CellSet]:
    """Partition under closure adjacency; deterministic lowest-cell-first order."""
    remaining = set(selection.members)
    components = []
    while remaining:
        seed = min(remaining)
        stack = [seed]
        remaining.discard(seed)
        comp = [seed]
        while stack:
            b, s = stack.pop()
            for nb in neighbors(DyadicCell(selection.level, b, s)):
                key = (nb.band, nb.sector)
                if key in remaining:
                    remaining.discard(key)
                    comp.append(key)
                    stack.append(key)
        components.append(CellSet.from_cells(selection.level, comp))
    return sorted(components, key=lambda c: c.members[0])


def convex_hull(component: CellSet, arc_samples: int = 32,
                adaptive_tol: float | None = None,
                max_arc_samples: int = 128) -> ConvexPolygon:
    """Hull of a component.

    With adaptive_tol set, the latitude-arc sampling doubles until the Girard
    area stabilizes below the tolerance (or max_arc_samples is reached);
    hulls are inner approximations converging with the sampling resolution.
    """
    if len(component) == 0:
        raise ValueError("cannot hull an empty component")
    poly = convex_polygon_from_points(_component_boundary_points(component, arc_samples))
    if adaptive_tol is None:
        return poly
    prev_area = poly.area()
    samples = arc_samples
    while samples < max_arc_samples:
        samples *= 2
        refined = convex_polygon_from_points(
            _component_boundary_points(component, samples))
        if abs(refined.area() - prev_area) < adaptive_tol:
            return refined
        prev_area = refined.area()
        poly = refined
    return poly


@dataclass(frozen=True)
class ConvexDecomposition:
    polygons: tuple
    pairwise_min_distance: float

    def __len__(self) -> int:
        return len(self.polygons)

    def total_area(self) -> float:
        return sum(p.area() for p in self.polygons)

    def to_json(self) -> dict:
        return {"polygons": [p.to_json() for p in self.polygons],
                "pairwise_min_distance": self.pairwise_min_distance}

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, sort_keys=True, separators=(",", ":"))
            f.write("\n")


def _edge_arrays(poly: ConvexPolygon):
    """(starts, ends, unit normals) of all edges; normals point to the interior side."""
    a = poly.vertices
    b = np.roll(a, -1, axis=0)
    n = np.cross(a, b)
    norms = np.linalg.norm(n, axis=1, keepdims=True)
    return a, b, n / np.maximum(norms, NORMALIZATION_TOL)


def _contains_batch(poly: ConvexPolygon, points: np.ndarray,
                    tol: float = PREDICATE_TOL) -> np.ndarray:
    a = poly.vertices
    b = np.roll(a, -1, axis=0)
    inside = (points @ poly.hemisphere_center) > 0.0
    inside &= np.all(points @ np.cross(a, b).T >= -tol, axis=1)
    return inside


def _points_arcs_range(points: np.ndarray, a: np.ndarray, b: np.ndarray,
                       n: np.ndarray, tile: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (min over arcs, max over arcs) geodesic distance to minor arcs.

    points (m, 3); a, b, n (e, 3).  Endpoint distances are a dense matrix
    pass; the foot-of-perpendicular corrections run only on the (point, arc)
    pairs whose circle distance could actually improve the endpoint value.
    """
    m = len(points)
    out_min = np.empty(m)
    out_max = np.empty(m)
    tol = PREDICATE_TOL

    def apply_foot(feet, aa, bb, nn, circ, pmin, pmax, rows, anti):
        fn = np.linalg.norm(feet, axis=1)
        ok = fn > NORMALIZATION_TOL
        feet = feet / np.maximum(fn, NORMALIZATION_TOL)[:, None]
        if anti:
            feet = -feet
        on = ok & (np.einsum("ki,ki->k", np.cross(aa, feet), nn) >= -tol) \
            & (np.einsum("ki,ki->k", np.cross(feet, bb), nn) >= -tol)
        if not on.any():
            return
        if anti:
            np.maximum.at(pmax, rows[on], math.pi - circ[on])
        else:
            np.minimum.at(pmin, rows[on], circ[on])

    for r0 in range(0, m, tile):
        p = points[r0:r0 + tile]                       # (t, 3)
        da = np.arccos(np.clip(p @ a.T, -1.0, 1.0))    # (t, e)
        db = np.arccos(np.clip(p @ b.T, -1.0, 1.0))
        pmin = np.minimum(da, db).min(axis=1)
        pmax = np.maximum(da, db).max(axis=1)
        s = p @ n.T                                    # signed sine of circle distance
        circ = np.arcsin(np.minimum(1.0, np.abs(s)))
        ii, ee = np.nonzero(circ < pmin[:, None])
        if len(ii):
            feet = p[ii] - s[ii, ee, None] * n[ee]
            apply_foot(feet, a[ee], b[ee], n[ee], circ[ii, ee],
                       pmin, pmax, ii, anti=False)
        ii, ee = np.nonzero(math.pi - circ > pmax[:, None])
        if len(ii):
            feet = p[ii] - s[ii, ee, None] * n[ee]
            apply_foot(feet, a[ee], b[ee], n[ee], circ[ii, ee],
                       pmin, pmax, ii, anti=True)
        out_min[r0:r0 + tile] = pmin
        out_max[r0:r0 + tile] = pmax
    return out_min, out_max


def _arcs_arcs_range(arcs1, arcs2, dmin0: float, dmax0: float) -> tuple[float, float]:
    """Interior-critical (min, max) candidates between two arc sets.

    Only arc crossings (distance 0) and common-perpendicular pairs can beat
    the callers' vertex-based candidates, and a Lipschitz bound on the
    endpoint distances prunes almost every pair of short arcs before the
    heavier vector work.
    """
    a1, b1, n1 = arcs1
    a2, b2, n2 = arcs2
    tol = PREDICATE_TOL
    l1 = np.arccos(np.clip(np.einsum("ei,ei->e", a1, b1), -1.0, 1.0))
    l2 = np.arccos(np.clip(np.einsum("ei,ei->e", a2, b2), -1.0, 1.0))
    slack = l1[:, None] + l2[None, :]
    ends = [np.arccos(np.clip(x @ y.T, -1.0, 1.0))
            for x in (a1, b1) for y in (a2, b2)]
    minend = np.minimum.reduce(ends)
    maxend = np.maximum.reduce(ends)
    # a crossing forces small endpoint distances; a new max cannot exceed the
    # endpoint max by more than the combined arc lengths
    mask = (minend <= slack + tol) & (dmin0 > 0.0)
    mask |= maxend + slack > dmax0
    ii, jj = np.nonzero(mask)
    if len(ii) == 0:
        return dmin0, dmax0
    A1, B1, N1 = a1[ii], b1[ii], n1[ii]
    A2, B2, N2 = a2[jj], b2[jj], n2[jj]
    dmin, dmax = dmin0, dmax0

    def on_arcs(x, aa, bb, nn):
        return (np.einsum("ki,ki->k", np.cross(aa, x), nn) >= -tol) \
            & (np.einsum("ki,ki->k", np.cross(x, bb), nn) >= -tol)

    cr = np.cross(N1, N2)
    ncr = np.linalg.norm(cr, axis=1)
    generic = ncr > NORMALIZATION_TOL
    cr = cr / np.maximum(ncr, NORMALIZATION_TOL)[:, None]
    for sign in (1.0, -1.0):
        x = sign * cr
        if (generic & on_arcs(x, A1, B1, N1) & on_arcs(x, A2, B2, N2)).any():
            dmin = 0.0
    # common-perpendicular criticals: extremize |p . n2| over circle 1
    proj = N2 - np.einsum("ki,ki->k", N1, N2)[:, None] * N1
    npr = np.linalg.norm(proj, axis=1)
    valid = generic & (npr > NORMALIZATION_TOL)
    proj = proj / np.maximum(npr, NORMALIZATION_TOL)[:, None]
    for sign in (1.0, -1.0):
        pstar = sign * proj
        on1 = valid & on_arcs(pstar, A1, B1, N1)
        if not on1.any():
            continue
        foot = pstar - np.einsum("ki,ki->k", pstar, N2)[:, None] * N2
        nft = np.linalg.norm(foot, axis=1)
        ok = on1 & (nft > NORMALIZATION_TOL)
        foot = foot / np.maximum(nft, NORMALIZATION_TOL)[:, None]
        for t in (1.0, -1.0):
            f = t * foot
            hit = ok & on_arcs(f, A2, B2, N2)
            if hit.any():
                d = np.arccos(np.clip(np.einsum("ki,ki->k", pstar, f),
                                      -1.0, 1.0))[hit]
                dmin = min(dmin, float(d.min()))
                dmax = max(dmax, float(d.max()))
    return dmin, dmax


def polygon_distance_range(p1: ConvexPolygon, p2: ConvexPolygon) -> tuple[float, float]:
    """(min, max) geodesic distance between two closed convex polygons.

    Candidates: vertex-vertex pairs, vertex-arc extremes, arc-arc interior
    criticals (common-perpendicular feet and crossing points), containment,
    and antipodal containment for the max.
    """
    v1, v2 = p1.vertices, p2.vertices
    dots = np.clip(v1 @ v2.T, -1.0, 1.0)
    dmin = float(np.arccos(dots.max()))
    dmax = float(np.arccos(dots.min()))
    e1 = _edge_arrays(p1)
    e2 = _edge_arrays(p2)
    for poly, other, arcs in ((p1, p2, e2), (p2, p1, e1)):
        if _contains_batch(other, poly.vertices).any():
            dmin = 0.0
        if _contains_batch(other, -poly.vertices).any():
            dmax = math.pi
        lo, hi = _points_arcs_range(poly.vertices, *arcs)
        dmin = min(dmin, float(lo.min()))
        dmax = max(dmax, float(hi.max()))
    dmin, dmax = _arcs_arcs_range(e1, e2, dmin, dmax)
    return max(0.0, dmin), min(math.pi, dmax)


def polygon_distance(p1: ConvexPolygon, p2: ConvexPolygon) -> float:
    """Min geodesic distance between closures; 0 iff they intersect."""
    return polygon_distance_range(p1, p2)[0]


def certify_opf_polygons(polygons, margin: float = 0.0) -> tuple:
    """(i, j) index pairs (i == j allowed) whose dot range contains zero."""
    from .conflicts import dot_range_polygons

    polys = list(polygons)
    violations = []
    for i in range(len(polys)):
        for j in range(i, len(polys)):
            if dot_range_polygons(polys[i], polys[j]).contains_zero(margin):
                violations.append((i, j))
    return tuple(violations)


def _pairwise_min_distance(polygons) -> float:
    polys = list(polygons)
    if len(polys) < 2:
        return math.inf
    return min(polygon_distance(polys[i], polys[j])
               for i in range(len(polys)) for j in range(i + 1, len(polys)))


def conv1(selection: CellSet, arc_samples: int = 32) -> ConvexDecomposition:
    """Connected components to convex hulls (stage 1)."""
    comps = connected_components(selection)
    polygons = tuple(convex_hull(c, arc_samples) for c in comps)
    return ConvexDecomposition(polygons, _pairwise_min_distance(polygons))


def conv2(decomp: ConvexDecomposition,
          merge_tol: float = MERGE_TOL) -> tuple[ConvexDecomposition, int]:
    """Merge zero-distance polygons until all pairwise distances are positive.

    Deterministic lowest-index-pair-first merge order; returns the cleaned
    decomposition and the number of merges performed (at most count - 1).
    """
    polys = list(decomp.polygons)
    merges = 0
    while True:
        hit = None
        for i in range(len(polys)):
            for j in range(i + 1, len(polys)):
                if polygon_distance(polys[i], polys[j]) <= merge_tol:
                    hit = (i, j)
                    break
            if hit:
                break
        if hit is None:
            break
        i, j = hit
        union = np.vstack([polys[i].vertices, polys[j].vertices])
        polys[i] = convex_polygon_from_points(union)
        polys.pop(j)
        merges += 1
    return ConvexDecomposition(tuple(polys), _pairwise_min_distance(polys)), merges


@dataclass(frozen=True)
class ConvResult:
    decomposition: ConvexDecomposition
    input_measure: float
    output_measure: float
    merge_count: int
    opf_violations: tuple

    def to_json(self) -> dict:
        return {"decomposition": self.decomposition.to_json(),
                "input_measure_sr": self.input_measure,
                "output_measure_sr": self.output_measure,
                "merge_count": self.merge_count,
                "opf_violations": [list(v) for v in self.opf_violations]}


def conv(selection: CellSet, arc_samples: int = 32,
         merge_tol: float = MERGE_TOL) -> ConvResult:
    """Full pipeline: conv2(conv1(selection)) with measure and OPF accounting."""
    if len(selection) == 0:
        return ConvResult(ConvexDecomposition((), math.inf), 0.0, 0.0, 0, ())
    stage1 = conv1(selection, arc_samples)
    final, merges = conv2(stage1, merge_tol)
    return ConvResult(final, selection.measure(), final.total_area(), merges,
                      certify_opf_polygons(final.polygons))


def _distance_to_polygon_batch(points: np.ndarray, poly: ConvexPolygon) -> np.ndarray:
    d, _ = _points_arcs_range(points, *_edge_arrays(poly))
    d[_contains_batch(poly, points)] = 0.0
    return d


def _directed_hausdorff(p1: ConvexPolygon, p2: ConvexPolygon,
                        samples_per_edge: int) -> float:
    # the distance function is geodesically convex in the sub-pi/2 regime, so
    # the directed max over a convex polygon is attained at a vertex; edge
    # samples are kept as a refinement safety net
    probes = [p1.vertices]
    if samples_per_edge > 0:
        probes.append(p1.boundary_samples(samples_per_edge))
    return float(_distance_to_polygon_batch(np.vstack(probes), p2).max())


def hausdorff_distance(p1: ConvexPolygon, p2: ConvexPolygon,
                       samples_per_edge: int = 8) -> float:
    """Max of the two directed farthest-point distances."""
    return max(_directed_hausdorff(p1, p2, samples_per_edge),
               _directed_hausdorff(p2, p1, samples_per_edge))


def _interior_sampler(poly: ConvexPolygon):
    """Closure drawing random interior points via planar convex combinations."""
    basis = tangent_basis(poly.hemisphere_center)
    planar = gnomonic_project_batch(poly.hemisphere_center, poly.vertices, basis)

    def draw(rng: np.random.Generator, n: int = 1) -> np.ndarray:
        w = rng.dirichlet(np.ones(len(planar)), size=n)
        xy = w @ planar
        return np.stack([gnomonic_unproject(poly.hemisphere_center,
                                            float(x), float(y), basis)
                         for x, y in xy])

    return draw


def _random_interior_point(poly: ConvexPolygon, rng: np.random.Generator) -> np.ndarray:
    return _interior_sampler(poly)(rng, 1)[0]


@dataclass(frozen=True)
class PropertyReport:
    trials: int
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def check_triangle_lemma(decomp: ConvexDecomposition, trials: int = 1000,
                         seed: int = 0, segment_samples: int = 16) -> PropertyReport:
    """For random triples in one polygon: pairwise distances below pi/2 and
    the connecting geodesic stays inside the polygon."""
    rng = np.random.default_rng(seed)
    violations = []
    if len(decomp.polygons) == 0:
        return PropertyReport(trials, ())
    samplers = [_interior_sampler(p) for p in decomp.polygons]
    for t in range(trials):
        k = int(rng.integers(len(decomp.polygons)))
        poly = decomp.polygons[k]
        x, y, z = samplers[k](rng, 3)
        for a, b in ((x, y), (y, z), (x, z)):
            if geodesic_distance(a, b) >= math.pi / 2.0:
                violations.append((t, "distance", a.tolist(), b.tolist()))
        seg = GeodesicSegment(x, z)
        pts = np.stack([seg.point_at(j / segment_samples)
                        for j in range(segment_samples + 1)])
        if not _contains_batch(poly, pts, tol=1e-7).all():
            violations.append((t, "segment"))
    return PropertyReport(trials, tuple(violations))


def check_pasch(poly: ConvexPolygon, trials: int = 1000,
                seed: int = 0) -> PropertyReport:
    """Great circle through side ab of a random inscribed triangle also meets
    bc or ca; exact check in gnomonic coordinates (great circles are lines)."""
    rng = np.random.default_rng(seed)
    basis = tangent_basis(poly.hemisphere_center)
    sampler = _interior_sampler(poly)
    violations = []
    for t in range(trials):
        tri = gnomonic_project_batch(poly.hemisphere_center, sampler(rng, 3), basis)
        a, b, c = tri
        # line through a random interior point of side ab, random direction
        q = a + rng.random() * (b - a)
        ang = rng.random() * math.pi
        d = np.array([math.cos(ang), math.sin(ang)])

        def crosses(u, v):
            su = _cross2(u - q, d)
            sv = _cross2(v - q, d)
            return su * sv <= 0.0

        if not (crosses(b, c) or crosses(c, a)):
            violations.append((t, tri.tolist()))
    return PropertyReport(trials, tuple(violations))
