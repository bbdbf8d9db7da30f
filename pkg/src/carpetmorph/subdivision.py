"""Epsilon-subdivisions of a carpet stage.

A subdivision covers [0,1]^2 minus the open "rel" holes by closed 2-cells
whose boundaries avoid the closures of all other holes.  Everything is
checked exactly; failures come back as report entries with witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .carpet import (OUTER, CarpetSpec, CarpetStage, Hole, cell_rect,
                     holes_in_rect, iter_kept_cells)
from .geometry import (Point, Polygon, Rect, segment_meets_rect,
                       segments_cross_properly)

ONE = Fraction(1)
UNIT = Rect(Fraction(0), Fraction(0), ONE, ONE)


@dataclass(frozen=True)
class Cell2:
    """A closed 2-cell: a simple rectilinear polygon, rectangle in the
    common case.  boundary_vertices carries T-junction points shared with
    neighbors so adjacent cells agree on their common boundary."""

    poly: Polygon
    boundary_vertices: tuple[Point, ...] = ()

    @staticmethod
    def from_rect(r: Rect) -> "Cell2":
        p = Polygon.from_rect(r)
        return Cell2(p, p.vertices)

    @property
    def rect(self) -> Rect | None:
        return self.poly.as_rect()

    def vertices(self) -> tuple[Point, ...]:
        return self.boundary_vertices or self.poly.vertices


@dataclass(frozen=True)
class Subdivision:
    carpet: CarpetSpec
    rel_disks: tuple
    cells: tuple[Cell2, ...]
    epsilon: Fraction


@dataclass(frozen=True)
class QuotientComplex:
    cells: tuple[Cell2, ...]
    marked_points: tuple[tuple, ...]  # (hole address, representative point)


def depth_for_diameter(spec: CarpetSpec, eps: Fraction) -> int:
    """Minimal k with sqrt(2) * prod_{i<=k} 1/n_i < eps, decided exactly."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    k = 0
    side = ONE
    while 2 * side * side >= eps * eps:
        k += 1
        side /= spec.rule_at(k).grid_n
    return k


def canonical_subdivision(spec: CarpetSpec, k: int) -> Subdivision:
    """All kept depth-k cells, with all holes of level <= k as rel disks."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cells = tuple(Cell2.from_rect(cell_rect(spec, path))
                  for path in iter_kept_cells(spec, k))
    rel = holes_in_rect(spec, k, UNIT)
    eps = Fraction(3, 2) * spec.cell_side(k)  # rational bound above sqrt(2)*side
    return Subdivision(spec, tuple(rel) + (OUTER,), cells, eps)


def _cell_segments(cell: Cell2) -> list[tuple[Point, Point]]:
    return list(cell.poly.edges())


def _interiors_overlap(p: Polygon, q: Polygon) -> bool:
    """Exact open-interior overlap test for simple rectilinear polygons that
    either share boundary pieces or are disjoint/nested."""
    rp, rq = p.bounding_rect(), q.bounding_rect()
    if not rp.intersects(rq, closed=False):
        return False
    for a, b in p.edges():
        for c, d in q.edges():
            if segments_cross_properly(a, b, c, d):
                return True
    for v in p.vertices:
        if q.contains_point(v, strict=True):
            return True
    for v in q.vertices:
        if p.contains_point(v, strict=True):
            return True
    # catch edge-through-vertex crossings via edge midpoints
    for a, b in p.edges():
        m = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        if q.contains_point(m, strict=True):
            return True
    for a, b in q.edges():
        m = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        if p.contains_point(m, strict=True):
            return True
    return False


def validate_subdivision(sub: Subdivision, stage: CarpetStage) -> dict:
    """Exact validity report for a subdivision against a deep-enough stage.

    (a) cell boundaries avoid every open hole, (b) and the closures of all
    non-rel holes; (c) cell interiors are pairwise disjoint and the cells
    tile the unit square minus the open rel holes; (d) every cell diameter
    is below epsilon.
    """
    rel_addresses = {h.address for h in sub.rel_disks if h is not OUTER}
    failures: list[dict] = []

    segments = [(i, a, b) for i, cell in enumerate(sub.cells)
                for a, b in _cell_segments(cell)]

    for hole in stage.holes:
        is_rel = hole.address in rel_addresses
        for i, a, b in segments:
            if segment_meets_rect(a, b, hole.rect, closed=False):
                failures.append({"check": "a", "cell": i,
                                 "segment": (a, b), "hole": hole.address})
            elif not is_rel and segment_meets_rect(a, b, hole.rect, closed=True):
                failures.append({"check": "b", "cell": i,
                                 "segment": (a, b), "hole": hole.address})

    # interiors pairwise disjoint (sweep by bounding-rect x-interval)
    order = sorted(range(len(sub.cells)),
                   key=lambda i: sub.cells[i].poly.bounding_rect().x0)
    active: list[int] = []
    for i in order:
        bi = sub.cells[i].poly.bounding_rect()
        active = [j for j in active
                  if sub.cells[j].poly.bounding_rect().x1 > bi.x0]
        for j in active:
            if _interiors_overlap(sub.cells[i].poly, sub.cells[j].poly):
                failures.append({"check": "c", "cells": (j, i)})
        active.append(i)

    total = sum(cell.poly.area for cell in sub.cells)
    hole_area = sum(h.rect.area for h in sub.rel_disks if h is not OUTER)
    if total + hole_area != 1:
        failures.append({"check": "union", "cell_area": total,
                         "rel_hole_area": hole_area})

    eps_sq = sub.epsilon ** 2
    for i, cell in enumerate(sub.cells):
        if cell.poly.diameter_sq >= eps_sq:
            failures.append({"check": "d", "cell": i,
                             "diameter_sq": cell.poly.diameter_sq})

    return {"pass": not failures, "failures": failures,
            "cells": len(sub.cells), "rel_disks": len(sub.rel_disks)}


def lattice_level(spec: CarpetSpec, value: Fraction, max_level: int) -> int | None:
    """Smallest j <= max_level whose lattice contains the coordinate."""
    step = ONE
    for j in range(0, max_level + 1):
        if value % step == 0:
            return j
        if j < max_level:
            step /= spec.rule_at(j + 1).grid_n
    return None


def safe_split_line(region: Rect, spec: CarpetSpec,
                    exposed: Iterable[Hole] = (),
                    axis: str = "x",
                    window: tuple[Fraction, Fraction] | None = None,
                    max_level: int | None = None) -> Fraction | None:
    """A lattice line through the region that misses every unexposed hole.

    Scans lattice levels coarse-to-fine up to max_level (default: region's
    own level + 3).  Candidates nearer the window midpoint are preferred.
    A level-j lattice line cannot meet the closure of a hole deeper than j,
    so only holes of level <= j are checked, exactly.
    """
    exposed_addr = {h.address for h in exposed}
    if axis == "x":
        lo, hi = region.x0, region.x1
    elif axis == "y":
        lo, hi = region.y0, region.y1
    else:
        raise ValueError("axis must be 'x' or 'y'")
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    if lo >= hi:
        return None
    # region's own refinement level: first level whose cells fit inside it
    side = ONE
    base = 0
    while side > region.width and side > region.height:
        base += 1
        side /= spec.rule_at(base).grid_n
    if max_level is None:
        max_level = base + 3

    mid = (lo + hi) / 2
    step = spec.cell_side(0)
    for j in range(1, max_level + 1):
        step = spec.cell_side(j)
        first = lo // step + 1
        cands = []
        m = first
        while m * step < hi:
            c = m * step
            if c > lo:
                cands.append(c)
            m += 1
        cands.sort(key=lambda c: (abs(c - mid), c))
        if not cands:
            continue
        holes = holes_in_rect(spec, j, region)
        for c in cands:
            if axis == "x":
                a: Point = (c, region.y0)
                b: Point = (c, region.y1)
            else:
                a, b = (region.x0, c), (region.x1, c)
            ok = True
            for h in holes:
                if h.address in exposed_addr:
                    continue
                if segment_meets_rect(a, b, h.rect, closed=True):
                    ok = False
                    break
            if ok:
                return c
    return None


def ring_partition(region: Rect, hole: Hole) -> list[Cell2]:
    """3x3-minus-center partition of the region around a strictly interior
    hole, cyclically ordered SW, S, SE, E, NE, N, NW, W."""
    hr = hole.rect
    if not region.contains_rect(hr, strict=True):
        raise ValueError("hole is not strictly interior to the region")
    x = [region.x0, hr.x0, hr.x1, region.x1]
    y = [region.y0, hr.y0, hr.y1, region.y1]
    grid = {(i, j): Rect(x[i], y[j], x[i + 1], y[j + 1])
            for i in range(3) for j in range(3)}
    order = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)]
    return [Cell2.from_rect(grid[ij]) for ij in order]


def moore_quotient(stage: CarpetStage, sub: Subdivision) -> QuotientComplex:
    """Collapse every non-rel hole of the stage to its center point and
    check each marked point sits in exactly one cell interior."""
    rel_addresses = {h.address for h in sub.rel_disks if h is not OUTER}
    marked = []
    for hole in stage.holes:
        if hole.address in rel_addresses:
            continue
        p = hole.rect.center
        owners = [i for i, cell in enumerate(sub.cells)
                  if cell.poly.contains_point(p, strict=True)]
        if len(owners) != 1 or any(cell.poly.on_boundary(p)
                                   for cell in sub.cells):
            raise AssertionError(
                f"marked point {p} for hole {hole.address} not in a unique "
                f"cell interior")
        marked.append((hole.address, p))
    return QuotientComplex(sub.cells, tuple(marked))
