"""Orthogonal-pair conflict tests between cells and polygons.

Two regions conflict when the closed pair contains two points at geodesic
distance exactly pi/2, i.e. when 0 lies in the closed range of inner products
achievable between them.  For theta/phi boxes the range is computed in closed
form: the trivariate function

    f(u1, u2, dphi) = u1*u2 + sqrt(1-u1^2)*sqrt(1-u2^2)*cos(dphi),  u = cos(theta)

is monotone in cos(dphi) (the square-root product is nonnegative), so the
extremes occur at the extreme achievable cos(dphi), and for fixed cos(dphi)
at box corners or at per-edge stationary points of A*cos(t) + B*sin(t).

Cell boundaries are dyadic in u and quarter-turn-rational in phi, so the
kernel works in u and in "turns" (phi / 2*pi): there the boundary arithmetic
is exact in doubles and an extreme of exactly zero comes out as exactly zero,
which the closed-cell conflict semantics at margin 0 relies on.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .grid import CellSet, DyadicCell, cell_bounds, cell_count, n_bands
from .sphere import TWO_PI


class ResourceCapError(RuntimeError):
    """Graph construction refused beyond the configured maximum level."""


class CorruptCacheError(RuntimeError):
    """Graph cache file failed its version or checksum validation."""


@dataclass(frozen=True)
class DotRange:
    """Closed interval of inner products achievable between two regions."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty dot range [{self.lo}, {self.hi}]")

    def contains_zero(self, margin: float = 0.0) -> bool:
        return self.lo - margin <= 0.0 <= self.hi + margin


def _cos_turns(t):
    """cos(2*pi*t), exact at multiples of a quarter turn."""
    r = np.mod(np.asarray(t, dtype=float), 1.0)
    out = np.cos(TWO_PI * r)
    out = np.where(r == 0.0, 1.0, out)
    out = np.where(r == 0.25, 0.0, out)
    out = np.where(r == 0.5, -1.0, out)
    out = np.where(r == 0.75, 0.0, out)
    return out


def _cos_interval_extremes_turns(dlo, dhi):
    """Min and max of cos(2*pi*t) over t in [dlo, dhi] (turns)."""
    dlo, dhi = np.asarray(dlo, dtype=float), np.asarray(dhi, dtype=float)
    has_peak = np.floor(dhi) >= np.ceil(dlo)
    has_trough = np.floor(dhi - 0.5) >= np.ceil(dlo - 0.5)
    clo, chi = _cos_turns(dlo), _cos_turns(dhi)
    end_max = np.maximum(clo, chi)
    end_min = np.minimum(clo, chi)
    return np.where(has_trough, -1.0, end_min), np.where(has_peak, 1.0, end_max)


def _g(u1, u2, c):
    return u1 * u2 + c * np.sqrt(np.maximum(0.0, 1.0 - u1 * u1)) \
        * np.sqrt(np.maximum(0.0, 1.0 - u2 * u2))


def _extremize_u_box(u1lo, u1hi, u2lo, u2hi, c, maximize: bool) -> np.ndarray:
    """Extreme of _g over the closed box in (u1, u2) at fixed cos(dphi) = c."""
    fill = -np.inf if maximize else np.inf
    reduce_fn = np.maximum if maximize else np.minimum
    best = np.full(np.broadcast(np.asarray(u1lo), np.asarray(u2lo), np.asarray(c)).shape, fill)
    for a in (u1lo, u1hi):
        for b in (u2lo, u2hi):
            best = reduce_fn(best, _g(a, b, c))
    # stationary points along each box edge: with the other coordinate fixed at
    # u, the edge restriction is A*cos(t) + B*sin(t) with A = u, B = c*sqrt(1-u^2),
    # extremal at (cos t, sin t) = +-(A, B)/R with value +-R; valid when the
    # sine component is nonnegative and the cosine component lies in the interval.
    for vlo, vhi, ufix in ((u1lo, u1hi, u2lo), (u1lo, u1hi, u2hi),
                           (u2lo, u2hi, u1lo), (u2lo, u2hi, u1hi)):
        a = np.asarray(ufix, dtype=float)
        b = c * np.sqrt(np.maximum(0.0, 1.0 - a * a))
        r = np.hypot(a, b)
        with np.errstate(invalid="ignore", divide="ignore"):
            for sign in (1.0, -1.0):
                ucrit = np.where(r > 0.0, sign * a / np.where(r > 0.0, r, 1.0), np.nan)
                valid = (r > 0.0) & (sign * b >= 0.0) & (ucrit >= vlo) & (ucrit <= vhi)
                best = reduce_fn(best, np.where(valid, sign * r, fill))
    return best


def dot_range_boxes_u(u1lo, u1hi, p1lo, p1hi, u2lo, u2hi, p2lo, p2hi):
    """(lo, hi) of inner products between boxes in (cos(theta), phi-in-turns).

    u intervals satisfy ulo <= uhi in [-1, 1]; phi intervals are in turns
    (any real bounds, interpreted mod 1).  All arguments broadcast.
    """
    cmin, cmax = _cos_interval_extremes_turns(np.asarray(p1lo) - np.asarray(p2hi),
                                              np.asarray(p1hi) - np.asarray(p2lo))
    hi = _extremize_u_box(u1lo, u1hi, u2lo, u2hi, cmax, maximize=True)
    lo = _extremize_u_box(u1lo, u1hi, u2lo, u2hi, cmin, maximize=False)
    return np.clip(lo, -1.0, 1.0), np.clip(hi, -1.0, 1.0)


def dot_range_boxes(t1lo, t1hi, p1lo, p1hi, t2lo, t2hi, p2lo, p2hi):
    """Radian adapter: theta intervals in [0, pi], phi intervals in radians."""
    return dot_range_boxes_u(np.cos(np.asarray(t1hi)), np.cos(np.asarray(t1lo)),
                             np.asarray(p1lo) / TWO_PI, np.asarray(p1hi) / TWO_PI,
                             np.cos(np.asarray(t2hi)), np.cos(np.asarray(t2lo)),
                             np.asarray(p2lo) / TWO_PI, np.asarray(p2hi) / TWO_PI)


def _cell_box_u(cell: DyadicCell) -> tuple[float, float, float, float]:
    """(ulo, uhi, phi_lo_turns, phi_hi_turns) with exact dyadic boundaries."""
    (cos_lo, cos_hi), _ = cell_bounds(cell)
    n = n_bands(cell.level)
    return cos_lo, cos_hi, cell.sector / n, (cell.sector + 1) / n


def dot_range_cells(c1: DyadicCell, c2: DyadicCell) -> DotRange:
    """Exact range of inner products between points of two closed cells."""
    b1, b2 = _cell_box_u(c1), _cell_box_u(c2)
    lo, hi = dot_range_boxes_u(*b1, *b2)
    return DotRange(float(lo), float(hi))


def cells_conflict(c1: DyadicCell, c2: DyadicCell, margin: float = 0.0) -> bool:
    """True iff the closed cells contain a pair at distance pi/2 (within margin)."""
    return dot_range_cells(c1, c2).contains_zero(margin)


def dot_range_polygons(p1, p2) -> DotRange:
    """Inner-product range between two spherical convex polygons.

    hi = cos(min distance), lo = cos(max distance), with distance extremes
    taken over vertex-vertex, vertex-edge, and edge-edge candidates.
    """
    from .convexify import polygon_distance_range

    dmin, dmax = polygon_distance_range(p1, p2)
    return DotRange(math.cos(dmax), math.cos(dmin))


def _level_boxes_u(level: int):
    """Per-ordinal (ulo, uhi, plo_turns, phi_turns) arrays for a whole level."""
    n = n_bands(level)
    w = 2.0 ** (-level)
    bands = np.arange(n).repeat(n)
    sectors = np.tile(np.arange(n), n)
    return (1.0 - (bands + 1) * w, 1.0 - bands * w, sectors / n, (sectors + 1) / n)


def _member_boxes_u(selection: CellSet):
    n = n_bands(selection.level)
    w = 2.0 ** (-selection.level)
    members = np.asarray(selection.members, dtype=np.int64).reshape(-1, 2)
    bands, sectors = members[:, 0], members[:, 1]
    ords = bands * n + sectors
    return ords, (1.0 - (bands + 1) * w, 1.0 - bands * w, sectors / n, (sectors + 1) / n)


@dataclass
class ConflictGraph:
    """Pairwise orthogonal-pair relation over all cells at one level.

    Nodes are cell ordinals (band * 2^(k+1) + sector).  Edges are unordered
    ordinal pairs stored as a sorted (m, 2) array; self_conflicts lists cells
    that contain an orthogonal pair on their own.
    """

    level: int
    margin: float
    self_conflicts: np.ndarray
    edges: np.ndarray
    _adj: dict | None = field(default=None, repr=False, compare=False)

    def n_cells(self) -> int:
        return cell_count(self.level)

    def adjacency(self) -> dict[int, set[int]]:
        if self._adj is None:
            adj: dict[int, set[int]] = {i: set() for i in range(self.n_cells())}
            for a, b in self.edges:
                adj[int(a)].add(int(b))
                adj[int(b)].add(int(a))
            self._adj = adj
        return self._adj

    def __eq__(self, other) -> bool:
        return (isinstance(other, ConflictGraph)
                and self.level == other.level and self.margin == other.margin
                and np.array_equal(self.self_conflicts, other.self_conflicts)
                and np.array_equal(self.edges, other.edges))


def _pair_scan(boxes, margin: float, include_diagonal: bool,
               tile: int = 1024):
    """Yield (i, j) index pairs with i < j (or i <= j) whose dot ranges contain 0.

    Tiled over both axes to bound peak memory at O(tile^2).
    """
    ulo, uhi, plo, phi_ = (np.asarray(a, dtype=float) for a in boxes)
    m = len(ulo)
    for r0 in range(0, m, tile):
        r1 = min(r0 + tile, m)
        rows = np.arange(r0, r1)
        for c0 in range(r0, m, tile):
            c1 = min(c0 + tile, m)
            cols = np.arange(c0, c1)
            lo, hi = dot_range_boxes_u(ulo[rows, None], uhi[rows, None],
                                       plo[rows, None], phi_[rows, None],
                                       ulo[None, cols], uhi[None, cols],
                                       plo[None, cols], phi_[None, cols])
            conflict = (lo - margin <= 0.0) & (hi + margin >= 0.0)
            if include_diagonal:
                conflict &= cols[None, :] >= rows[:, None]
            else:
                conflict &= cols[None, :] > rows[:, None]
            ii, jj = np.nonzero(conflict)
            if len(ii):
                yield np.stack([rows[ii], cols[jj]], axis=1)


def build_conflict_graph(level: int, margin: float = 0.0, max_level: int = 7,
                         tile: int = 1024) -> ConflictGraph:
    """Evaluate all cell pairs (and self-pairs) at a level; deterministic."""
    if level > max_level:
        raise ResourceCapError(
            f"level {level} exceeds the configured maximum {max_level} "
            f"({cell_count(level)} cells)")
    boxes = _level_boxes_u(level)
    ulo, uhi, plo, phi_ = boxes
    slo, shi = dot_range_boxes_u(ulo, uhi, plo, phi_, ulo, uhi, plo, phi_)
    self_conflicts = np.nonzero((slo - margin <= 0.0) & (shi + margin >= 0.0))[0].astype(np.uint32)
    edge_chunks = list(_pair_scan(boxes, margin, include_diagonal=False, tile=tile))
    edges = (np.concatenate(edge_chunks) if edge_chunks
             else np.empty((0, 2), dtype=np.int64)).astype(np.uint32)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return ConflictGraph(level, margin, self_conflicts, edges[order])


def selection_violations(selection: CellSet, margin: float = 0.0,
                         tile: int = 1024) -> tuple[list[int], list[tuple[int, int]]]:
    """(self-conflicting ordinals, conflicting ordinal pairs) within a selection.

    Works directly on the selection's boxes; no full level graph is needed.
    """
    if len(selection) == 0:
        return [], []
    ords, boxes = _member_boxes_u(selection)
    ulo, uhi, plo, phi_ = boxes
    slo, _ = dot_range_boxes_u(ulo, uhi, plo, phi_, ulo, uhi, plo, phi_)
    self_bad = [int(o) for o in ords[slo - margin <= 0.0]]
    pairs: list[tuple[int, int]] = []
    for chunk in _pair_scan(boxes, margin, include_diagonal=False, tile=tile):
        pairs.extend((int(ords[i]), int(ords[j])) for i, j in chunk)
    return self_bad, sorted(pairs)


_MAGIC = b"OPFG"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHdIQ32s")


def save_graph(graph: ConflictGraph, path) -> None:
    """Write the binary cache: header with checksum, self-conflicts, edge list."""
    selfs = np.sort(graph.self_conflicts.astype(np.uint32))
    edges = graph.edges.astype(np.uint32)
    body = selfs.astype("<u4").tobytes() + edges.astype("<u4").tobytes()
    digest = hashlib.sha256(body).digest()
    header = _HEADER.pack(_MAGIC, _FORMAT_VERSION, graph.level, graph.margin,
                          len(selfs), len(edges), digest)
    with open(path, "wb") as f:
        f.write(header)
        f.write(body)


def load_graph(path) -> ConflictGraph:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise CorruptCacheError("graph cache truncated before header")
    magic, version, level, margin, n_self, n_edges, digest = _HEADER.unpack(raw[:_HEADER.size])
    if magic != _MAGIC or version != _FORMAT_VERSION:
        raise CorruptCacheError(f"bad magic/version in graph cache: {magic!r} v{version}")
    body = raw[_HEADER.size:]
    expect = 4 * n_self + 8 * n_edges
    if len(body) != expect:
        raise CorruptCacheError(f"graph cache body is {len(body)} bytes, expected {expect}")
    if hashlib.sha256(body).digest() != digest:
        raise CorruptCacheError("graph cache checksum mismatch")
    selfs = np.frombuffer(body[:4 * n_self], dtype="<u4").astype(np.uint32)
    edges = np.frombuffer(body[4 * n_self:], dtype="<u4").astype(np.uint32).reshape(-1, 2)
    return ConflictGraph(level, margin, selfs, edges)
