"""Equal-area dyadic decompositions of the sphere.

Level k partitions the sphere into 4*4^k cells by 2^(k+1) meridians and
2^(k+1) equal-area latitude bands.  Cells are indexed (band, sector) with
band 0 at the north pole; the cell geometry is closed-form:

    cos(theta) in [1 - (band+1)*2^-k, 1 - band*2^-k]        (width 2^-k)
    phi        in [sector*2*pi/2^(k+1), (sector+1)*2*pi/2^(k+1))

so every cell at level k has area pi*4^-k exactly, and level k+1 refines
level k cell-by-cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .sphere import TWO_PI, to_polar


def n_bands(level: int) -> int:
    """Number of latitude bands (= number of sectors) at a level."""
    if level < 0:
        raise ValueError(f"level must be nonnegative, got {level}")
    return 2 ** (level + 1)


def cell_count(level: int) -> int:
    if level < 0:
        raise ValueError(f"level must be nonnegative, got {level}")
    return 4 * 4**level


def cell_area(level: int) -> float:
    """Area in steradians of any single cell at the level: pi * 4^-level."""
    if level < 0:
        raise ValueError(f"level must be nonnegative, got {level}")
    return math.pi * 4.0 ** (-level)


@dataclass(frozen=True, order=True)
class DyadicCell:
    level: int
    band: int
    sector: int

    def __post_init__(self):
        n = n_bands(self.level)
        if not 0 <= self.band < n:
            raise ValueError(f"band {self.band} out of range [0, {n}) at level {self.level}")
        if not 0 <= self.sector < n:
            raise ValueError(f"sector {self.sector} out of range [0, {n}) at level {self.level}")

    @property
    def ordinal(self) -> int:
        """Row-major index band * n + sector, used for graph files and seeds."""
        return self.band * n_bands(self.level) + self.sector


def cell_from_ordinal(level: int, ordinal: int) -> DyadicCell:
    n = n_bands(level)
    return DyadicCell(level, ordinal // n, ordinal % n)


def cell_bounds(cell: DyadicCell) -> tuple[tuple[float, float], tuple[float, float]]:
    """((cos_theta_lo, cos_theta_hi), (phi_lo, phi_hi)).

    The cos(theta) interval is closed; the phi interval is half-open in
    [phi_lo, phi_hi).
    """
    w = 2.0 ** (-cell.level)
    cos_hi = 1.0 - cell.band * w
    cos_lo = 1.0 - (cell.band + 1) * w
    dphi = TWO_PI / n_bands(cell.level)
    return (cos_lo, cos_hi), (cell.sector * dphi, (cell.sector + 1) * dphi)


def theta_bounds(cell: DyadicCell) -> tuple[float, float]:
    """(theta_lo, theta_hi) colatitude interval (theta_lo at the high-cos end)."""
    (cos_lo, cos_hi), _ = cell_bounds(cell)
    return math.acos(min(1.0, cos_hi)), math.acos(max(-1.0, cos_lo))


def locate_coords(cos_theta: float, phi: float, level: int) -> DyadicCell:
    """Cell whose closed bounds contain (cos_theta, phi); ties go to lower indices."""
    n = n_bands(level)
    x = (1.0 - cos_theta) * 2.0**level
    band = math.floor(x)
    if band == x and band > 0:
        band -= 1
    band = min(max(band, 0), n - 1)
    phi = phi % TWO_PI
    y = phi / (TWO_PI / n)
    sector = math.floor(y)
    if sector == y and sector > 0:
        sector -= 1
    sector = min(max(sector, 0), n - 1)
    return DyadicCell(level, band, sector)


def locate_point(p: np.ndarray, level: int) -> DyadicCell:
    theta, phi = to_polar(p)
    return locate_coords(math.cos(theta), phi, level)


def refine(cell: DyadicCell) -> tuple[DyadicCell, DyadicCell, DyadicCell, DyadicCell]:
    """The 4 level-(k+1) children whose closures partition the cell's closure."""
    k1 = cell.level + 1
    b, s = 2 * cell.band, 2 * cell.sector
    return (DyadicCell(k1, b, s), DyadicCell(k1, b, s + 1),
            DyadicCell(k1, b + 1, s), DyadicCell(k1, b + 1, s + 1))


def parent(cell: DyadicCell) -> DyadicCell:
    if cell.level == 0:
        raise ValueError("level-0 cells have no parent")
    return DyadicCell(cell.level - 1, cell.band // 2, cell.sector // 2)


def neighbors(cell: DyadicCell) -> list[DyadicCell]:
    """Distinct same-level cells whose closures meet this cell's closure.

    Includes edge and corner sharing, the phi wraparound, and the poles:
    all cells of the top band meet at the north pole (likewise the bottom
    band at the south pole), so they are mutually adjacent.
    """
    n = n_bands(cell.level)
    out: set[tuple[int, int]] = set()
    for db in (-1, 0, 1):
        b = cell.band + db
        if not 0 <= b < n:
            continue
        for ds in (-1, 0, 1):
            out.add((b, (cell.sector + ds) % n))
    if cell.band == 0:
        for s in range(n):
            out.add((0, s))
    if cell.band == n - 1:
        for s in range(n):
            out.add((n - 1, s))
    out.discard((cell.band, cell.sector))
    return [DyadicCell(cell.level, b, s) for b, s in sorted(out)]


def antipodal_cell(cell: DyadicCell) -> DyadicCell:
    """Image of the cell under the point reflection p -> -p."""
    n = n_bands(cell.level)
    return DyadicCell(cell.level, n - 1 - cell.band, (cell.sector + n // 2) % n)


def all_cells(level: int):
    n = n_bands(level)
    for band in range(n):
        for sector in range(n):
            yield DyadicCell(level, band, sector)


@dataclass(frozen=True)
class CellSet:
    """A finite selection of cells at one level, in canonical band-major order."""

    level: int
    members: tuple[tuple[int, int], ...]

    @classmethod
    def from_cells(cls, level: int, cells) -> "CellSet":
        seen = set()
        for c in cells:
            if isinstance(c, DyadicCell):
                if c.level != level:
                    raise ValueError(f"cell level {c.level} does not match set level {level}")
                key = (c.band, c.sector)
            else:
                key = (int(c[0]), int(c[1]))
            DyadicCell(level, *key)  # validate indices
            seen.add(key)
        return cls(level, tuple(sorted(seen)))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, cell) -> bool:
        if isinstance(cell, DyadicCell):
            return cell.level == self.level and (cell.band, cell.sector) in set(self.members)
        return tuple(cell) in set(self.members)

    def cells(self) -> list[DyadicCell]:
        return [DyadicCell(self.level, b, s) for b, s in self.members]

    def measure(self) -> float:
        """Total area in steradians."""
        return len(self.members) * cell_area(self.level)

    def fraction(self) -> float:
        """Measure normalized by the total sphere area: |cells| / (4*4^level)."""
        return len(self.members) / cell_count(self.level)

    def to_json(self) -> dict:
        return {"level": self.level, "cells": [[b, s] for b, s in self.members]}

    @classmethod
    def from_json(cls, doc: dict) -> "CellSet":
        return cls.from_cells(int(doc["level"]), doc["cells"])

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, sort_keys=True, separators=(",", ":"))
            f.write("\n")

    @classmethod
    def load(cls, path) -> "CellSet":
        with open(path) as f:
            return cls.from_json(json.load(f))
