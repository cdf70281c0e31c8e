"""Inward scaling of cell selections: polar-cap removal and per-cell shrink.

Each kept cell is replaced by the theta/phi box obtained by moving both
colatitude bounds inward by r1 = epsilon1^(1/3)*sqrt(mu(cell)) and rotating
both bounding meridians inward by the lune half-angle that guarantees the
same clearance.  Every point of the shrunk box is then at geodesic distance
at least r1 from the parent cell's boundary, so orthogonal pairs that only
touched cell boundaries are eliminated while the measure loss stays bounded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .grid import CellSet, DyadicCell, cell_area, cell_bounds, theta_bounds
from .sphere import InfeasibleShrinkError, SPHERE_AREA, cap_area, lune_half_angle

N_ROOT = 3
SQRT_PI = math.sqrt(math.pi)


class InfeasibleEpsilonError(ValueError):
    """Requested epsilon fails the feasibility inequalities.

    Carries the largest feasible epsilon found by bisection (or None if none
    was found down to the search floor).
    """

    def __init__(self, epsilon: float, suggestion: float | None):
        self.epsilon = epsilon
        self.suggestion = suggestion
        hint = (f"largest feasible epsilon found: {suggestion:.6g}"
                if suggestion is not None else "no feasible epsilon found")
        super().__init__(f"epsilon {epsilon} is infeasible; {hint}")


def _inequalities(epsilon: float, mu_m: float) -> tuple[float, float, float, float]:
    """(lhs1, rhs1, lhs2, rhs2) of the two feasibility inequalities.

    1: (1 - e1^(1/3)*(3*sqrt(pi) + 2/(sin(delta)*sqrt(pi)))) * (1 - e1) * (1 - e/2)
       >= 1 - e
    2: sin(pi/8) * (1 - 16*sqrt(2)/sqrt(pi) * e1^(1/3)) * e1^(2/3) > 2*e1
    """
    e1 = epsilon**6
    delta = math.sqrt(epsilon * mu_m / SPHERE_AREA)
    cbrt = e1 ** (1.0 / N_ROOT)
    lhs1 = ((1.0 - cbrt * (3.0 * SQRT_PI + 2.0 / (math.sin(delta) * SQRT_PI)))
            * (1.0 - e1) * (1.0 - epsilon / 2.0))
    lhs2 = math.sin(math.pi / 8.0) * (1.0 - 16.0 * math.sqrt(2.0) / SQRT_PI * cbrt) \
        * e1 ** (2.0 / N_ROOT)
    return lhs1, 1.0 - epsilon, lhs2, 2.0 * e1


def is_feasible(epsilon: float, mu_m: float) -> bool:
    lhs1, rhs1, lhs2, rhs2 = _inequalities(epsilon, mu_m)
    return lhs1 >= rhs1 and lhs2 > rhs2


def largest_feasible_epsilon(mu_m: float, upper: float = 1.0,
                             floor: float = 1e-9, iters: int = 200) -> float | None:
    """Bisection for the feasibility threshold in (floor, upper]."""
    if is_feasible(upper, mu_m):
        return upper
    if not is_feasible(floor, mu_m):
        return None
    lo, hi = floor, upper
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if is_feasible(mid, mu_m):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class ScaleConstants:
    epsilon: float
    epsilon1: float
    n_root: int
    delta: float
    mu_m: float
    inequality1: tuple[float, float]  # (lhs, rhs), holds as lhs >= rhs
    inequality2: tuple[float, float]  # (lhs, rhs), holds as lhs > rhs

    def shrink(self, level: int) -> float:
        """Per-cell inward offset r1 = epsilon1^(1/3) * sqrt(cell area)."""
        return self.epsilon1 ** (1.0 / self.n_root) * math.sqrt(cell_area(level))

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "epsilon1": self.epsilon1,
                "n_root": self.n_root, "delta": self.delta, "mu_m": self.mu_m,
                "inequality1": list(self.inequality1),
                "inequality2": list(self.inequality2)}


def choose_constants(epsilon: float, mu_m: float) -> ScaleConstants:
    """Validate the feasibility inequalities and derive all scaling constants."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if mu_m <= 0.0:
        raise ValueError(f"mu_m must be positive, got {mu_m}")
    lhs1, rhs1, lhs2, rhs2 = _inequalities(epsilon, mu_m)
    if not (lhs1 >= rhs1 and lhs2 > rhs2):
        raise InfeasibleEpsilonError(epsilon, largest_feasible_epsilon(mu_m, epsilon))
    return ScaleConstants(epsilon, epsilon**6, N_ROOT,
                          math.sqrt(epsilon * mu_m / SPHERE_AREA), mu_m,
                          (lhs1, rhs1), (lhs2, rhs2))


@dataclass(frozen=True)
class ScaledRegion:
    """Shrunk theta/phi box inside a parent cell (empty if bounds inverted)."""

    parent: DyadicCell
    shrink: float
    theta_lo: float
    theta_hi: float
    phi_lo: float
    phi_hi: float

    @property
    def empty(self) -> bool:
        return self.theta_lo >= self.theta_hi or self.phi_lo >= self.phi_hi

    def measure(self) -> float:
        """Exact box area (cos(theta_lo) - cos(theta_hi)) * phi width."""
        if self.empty:
            return 0.0
        return (math.cos(self.theta_lo) - math.cos(self.theta_hi)) \
            * (self.phi_hi - self.phi_lo)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.empty:
            raise ValueError("cannot sample an empty region")
        u = rng.uniform(math.cos(self.theta_hi), math.cos(self.theta_lo), n)
        p = rng.uniform(self.phi_lo, self.phi_hi, n)
        s = np.sqrt(np.maximum(0.0, 1.0 - u * u))
        return np.stack([s * np.cos(p), s * np.sin(p), u], axis=1)

    def to_json(self) -> dict:
        return {"parent": [self.parent.band, self.parent.sector],
                "shrink": self.shrink,
                "theta": [self.theta_lo, self.theta_hi],
                "phi": [self.phi_lo, self.phi_hi],
                "empty": self.empty}


_EMPTY = (1.0, 0.0)  # inverted interval marker


def shrink_cell(cell: DyadicCell, shrink: float) -> ScaledRegion:
    """Inward offset of a cell by a geodesic distance; empty result on inversion."""
    if shrink < 0.0:
        raise ValueError(f"shrink must be nonnegative, got {shrink}")
    tlo, thi = theta_bounds(cell)
    ntlo, nthi = tlo + shrink, thi - shrink
    (_, __), (plo, phi) = cell_bounds(cell)
    if ntlo >= nthi:
        return ScaledRegion(cell, shrink, *_EMPTY, plo, phi)
    if shrink == 0.0:
        return ScaledRegion(cell, 0.0, tlo, thi, plo, phi)
    # worst colatitude = the tightened endpoint closest to a pole
    theta_worst = ntlo if math.sin(ntlo) <= math.sin(nthi) else nthi
    if not 0.0 < theta_worst < math.pi:
        return ScaledRegion(cell, shrink, ntlo, nthi, *_EMPTY)
    try:
        omega = lune_half_angle(shrink, theta_worst)
    except InfeasibleShrinkError:
        return ScaledRegion(cell, shrink, ntlo, nthi, *_EMPTY)
    nplo, nphi = plo + omega, phi - omega
    if nplo >= nphi:
        return ScaledRegion(cell, shrink, ntlo, nthi, *_EMPTY)
    return ScaledRegion(cell, shrink, ntlo, nthi, nplo, nphi)


def remove_polar_caps(selection: CellSet, delta: float) -> CellSet:
    """Drop every cell whose closure meets either open polar cap of radius delta."""
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if delta == 0.0:
        return selection
    cd = math.cos(delta)
    kept = []
    for band, sector in selection.members:
        (ulo, uhi), _ = cell_bounds(DyadicCell(selection.level, band, sector))
        if uhi > cd or ulo < -cd:
            continue
        kept.append((band, sector))
    return CellSet.from_cells(selection.level, kept)


def scaled_measure_lower_bound(cell: DyadicCell, constants: ScaleConstants) -> float:
    """Closed-form lower bound on the shrunk region's area, clamped at 0."""
    cbrt = constants.epsilon1 ** (1.0 / constants.n_root)
    factor = 1.0 - cbrt * (3.0 * SQRT_PI + 2.0 / (math.sin(constants.delta) * SQRT_PI))
    return max(0.0, factor * cell_area(cell.level))


@dataclass(frozen=True)
class ScaleSummary:
    constants: ScaleConstants
    regions: tuple
    kept: CellSet
    removed_cells: int
    removed_measure: float
    total_region_measure: float
    lower_bound_total: float
    target_measure: float  # (1 - epsilon) * mu(M)
    meets_target: bool

    def to_json(self) -> dict:
        return {"constants": self.constants.to_json(),
                "regions": [r.to_json() for r in self.regions],
                "summary": {
                    "kept_cells": len(self.kept),
                    "removed_cells": self.removed_cells,
                    "removed_measure_sr": self.removed_measure,
                    "total_region_measure_sr": self.total_region_measure,
                    "lower_bound_total_sr": self.lower_bound_total,
                    "target_measure_sr": self.target_measure,
                    "meets_target": self.meets_target,
                }}

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, sort_keys=True, separators=(",", ":"))
            f.write("\n")


def scale_set(selection: CellSet, constants: ScaleConstants) -> ScaleSummary:
    """Polar-cap removal followed by per-cell shrink, with measure accounting."""
    kept = remove_polar_caps(selection, constants.delta)
    removed = len(selection) - len(kept)
    shrink = constants.shrink(selection.level)
    regions = tuple(shrink_cell(c, shrink) for c in kept.cells())
    total = sum(r.measure() for r in regions)
    bound_total = sum(scaled_measure_lower_bound(c, constants) for c in kept.cells())
    target = (1.0 - constants.epsilon) * selection.measure()
    return ScaleSummary(constants, regions, kept, removed,
                        removed * cell_area(selection.level), total, bound_total,
                        target, total >= target)


@dataclass(frozen=True)
class OpfCertification:
    """Outcome of the pairwise orthogonal-pair check over scaled regions."""

    n_regions: int
    margin: float
    violations: tuple  # (i, j) region indices, i == j for self-conflicts

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_scaled_opf(regions, margin: float = 0.0,
                      tile: int = 1024) -> OpfCertification:
    """Check all region pairs (and self-pairs) for achievable inner product 0."""
    from .conflicts import _pair_scan, dot_range_boxes_u
    from .sphere import TWO_PI

    regions = list(regions)
    live = [(i, r) for i, r in enumerate(regions) if not r.empty]
    if not live:
        return OpfCertification(len(regions), margin, ())
    idx = np.array([i for i, _ in live])
    boxes = (np.array([math.cos(r.theta_hi) for _, r in live]),
             np.array([math.cos(r.theta_lo) for _, r in live]),
             np.array([r.phi_lo for _, r in live]) / TWO_PI,
             np.array([r.phi_hi for _, r in live]) / TWO_PI)
    ulo, uhi, plo, phi = boxes
    slo, shi = dot_range_boxes_u(ulo, uhi, plo, phi, ulo, uhi, plo, phi)
    violations = [(int(idx[i]), int(idx[i]))
                  for i in np.nonzero((slo - margin <= 0.0) & (shi + margin >= 0.0))[0]]
    for chunk in _pair_scan(boxes, margin, include_diagonal=False, tile=tile):
        violations.extend((int(idx[i]), int(idx[j])) for i, j in chunk)
    return OpfCertification(len(regions), margin, tuple(sorted(violations)))
