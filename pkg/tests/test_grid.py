import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opfsets.grid import (CellSet, DyadicCell, all_cells, antipodal_cell,
                          cell_area, cell_bounds, cell_count, cell_from_ordinal,
                          locate_coords, locate_point, n_bands, neighbors,
                          parent, refine, theta_bounds)
from opfsets.sphere import from_polar

levels = st.integers(0, 6)


@st.composite
def cells(draw, max_level=6):
    level = draw(st.integers(0, max_level))
    n = n_bands(level)
    return DyadicCell(level, draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1)))


def test_counts_and_areas():
    for k in range(8):
        assert cell_count(k) == 4 * 4**k
        assert abs(cell_count(k) * cell_area(k) - 4.0 * math.pi) < 1e-12 * 4 * math.pi


def test_cell_validation():
    with pytest.raises(ValueError):
        DyadicCell(1, 4, 0)
    with pytest.raises(ValueError):
        DyadicCell(0, 0, -1)
    with pytest.raises(ValueError):
        n_bands(-1)


def test_documented_bounds():
    (clo, chi), (plo, phi) = cell_bounds(DyadicCell(0, 0, 0))
    assert (clo, chi) == (0.0, 1.0)
    assert (plo, phi) == (0.0, math.pi)
    (clo, chi), (plo, phi) = cell_bounds(DyadicCell(1, 1, 2))
    assert (clo, chi) == (0.0, 0.5)
    assert abs(plo - math.pi) < 1e-15 and abs(phi - 1.5 * math.pi) < 1e-15
    (clo, chi), _ = cell_bounds(DyadicCell(2, 0, 7))
    assert (clo, chi) == (0.75, 1.0)


@given(cells())
@settings(max_examples=200)
def test_bounds_width(cell):
    (clo, chi), (plo, phi) = cell_bounds(cell)
    assert abs((chi - clo) - 2.0 ** (-cell.level)) < 1e-15
    assert abs((phi - plo) - 2.0 * math.pi / n_bands(cell.level)) < 1e-12
    # exact area: width in cos(theta) times azimuthal width
    assert abs((chi - clo) * (phi - plo) - cell_area(cell.level)) < 1e-14


def test_locate_ties_go_low():
    # cos(theta) = 0.5 is the boundary between bands 0 and 1 at level 1
    assert locate_coords(0.5, 0.1, 1) == DyadicCell(1, 0, 0)
    assert locate_coords(1.0, 0.0, 1) == DyadicCell(1, 0, 0)
    assert locate_coords(-1.0, 0.0, 1) == DyadicCell(1, 3, 0)
    # phi boundary at pi/2 belongs to the lower sector
    assert locate_coords(0.9, math.pi / 2.0, 1).sector in (0, 1)
    assert locate_coords(0.9, 0.0, 1).sector == 0


@given(cells(max_level=5))
@settings(max_examples=200)
def test_refine_partitions_parent(cell):
    kids = refine(cell)
    assert len(set(kids)) == 4
    (clo, chi), (plo, phi) = cell_bounds(cell)
    for kid in kids:
        assert parent(kid) == cell
        (kclo, kchi), (kplo, kphi) = cell_bounds(kid)
        assert clo <= kclo and kchi <= chi
        assert plo <= kplo + 1e-12 and kphi <= phi + 1e-12
    assert abs(sum(cell_area(k.level) for k in kids) - cell_area(cell.level)) < 1e-15


def test_parent_of_root_fails():
    with pytest.raises(ValueError):
        parent(DyadicCell(0, 1, 1))


@given(st.integers(0, 5), st.floats(-1, 1), st.floats(0, 2 * math.pi, exclude_max=True))
@settings(max_examples=300)
def test_locate_refinement_consistency(level, cos_theta, phi):
    coarse = locate_coords(cos_theta, phi, level)
    fine = locate_coords(cos_theta, phi, level + 1)
    # the tie-break can legitimately differ on shared boundaries
    x = (1.0 - cos_theta) * 2.0**level
    y = phi / (2.0 * math.pi / n_bands(level))
    on_boundary = x == int(x) or y == int(y) \
        or 2 * x == int(2 * x) or 2 * y == int(2 * y)
    if not on_boundary:
        assert parent(fine) == coarse


def test_locate_point_matches_bounds():
    rng = np.random.default_rng(11)
    for _ in range(200):
        z = 1.0 - 2.0 * rng.random()
        phi = 2.0 * math.pi * rng.random()
        theta = math.acos(z)
        cell = locate_point(from_polar(theta, phi), 3)
        (clo, chi), (plo, phi_hi) = cell_bounds(cell)
        assert clo - 1e-12 <= z <= chi + 1e-12
        assert plo - 1e-12 <= phi <= phi_hi + 1e-12


def test_neighbors_polar_and_wraparound():
    # all top-band cells meet at the pole
    top = neighbors(DyadicCell(2, 0, 0))
    assert all(DyadicCell(2, 0, s) in top for s in range(1, 8))
    # azimuthal wraparound
    assert DyadicCell(2, 1, 7) in neighbors(DyadicCell(2, 1, 0))
    mid = neighbors(DyadicCell(2, 3, 3))
    assert len(mid) == 8


@given(cells())
@settings(max_examples=200)
def test_neighbors_symmetric(cell):
    for nb in neighbors(cell):
        assert cell in neighbors(nb)


@given(cells())
@settings(max_examples=200)
def test_antipodal_involution(cell):
    img = antipodal_cell(cell)
    assert antipodal_cell(img) == cell
    (clo, chi), _ = cell_bounds(cell)
    (iclo, ichi), _ = cell_bounds(img)
    assert abs(iclo + chi) < 1e-15 and abs(ichi + clo) < 1e-15


@given(cells())
@settings(max_examples=200)
def test_ordinal_round_trip(cell):
    assert cell_from_ordinal(cell.level, cell.ordinal) == cell


def test_cellset_canonicalization_and_json(tmp_path):
    s = CellSet.from_cells(2, [(3, 1), (0, 0), (3, 1)])
    assert s.members == ((0, 0), (3, 1))
    assert len(s) == 2
    assert DyadicCell(2, 3, 1) in s
    assert abs(s.measure() - 2 * cell_area(2)) < 1e-15
    assert s.fraction() == 2 / 64
    path = tmp_path / "s.json"
    s.save(path)
    doc = json.loads(path.read_text())
    assert doc == {"cells": [[0, 0], [3, 1]], "level": 2}
    assert CellSet.load(path) == s


def test_cellset_rejects_level_mismatch():
    with pytest.raises(ValueError):
        CellSet.from_cells(2, [DyadicCell(3, 0, 0)])
    with pytest.raises(ValueError):
        CellSet.from_cells(1, [(5, 0)])


def test_all_cells_enumeration():
    cs = list(all_cells(1))
    assert len(cs) == 16
    assert cs[0] == DyadicCell(1, 0, 0)
    assert cs[-1] == DyadicCell(1, 3, 3)
