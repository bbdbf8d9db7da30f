"""Square-carpet specifications and exact finite-stage geometry.

A carpet is described level by level: at level k the surviving squares are
each divided into an n_k x n_k grid and some strictly-interior square blocks
of cells are removed.  Each removed block becomes one hole (peripheral disk).
All coordinates are exact rationals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

from .geometry import Rect, format_frac

# grid-coordinate block of removed cells: rows r0..r1, cols c0..c1 inclusive
Block = tuple[int, int, int, int]
CellAddress = tuple[tuple[int, int], ...]

OUTER = "OUTER"


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class LevelRule:
    """One subdivision level: an n x n grid with removed blocks."""

    grid_n: int
    blocks: tuple[Block, ...]

    @cached_property
    def removed(self) -> frozenset[tuple[int, int]]:
        cells = set()
        for r0, c0, r1, c1 in self.blocks:
            for r in range(r0, r1 + 1):
                for c in range(c0, c1 + 1):
                    cells.add((r, c))
        return frozenset(cells)

    @cached_property
    def anchor_of(self) -> dict:
        """Removed cell -> anchor (r0, c0) of its block."""
        out = {}
        for r0, c0, r1, c1 in self.blocks:
            for r in range(r0, r1 + 1):
                for c in range(c0, c1 + 1):
                    out[(r, c)] = (r0, c0)
        return out

    @property
    def kept_count(self) -> int:
        return self.grid_n ** 2 - len(self.removed)


@dataclass(frozen=True)
class Tail:
    """Rule for levels past the explicit prefix.

    kind "repeat": the last explicit rule repeats forever.
    kind "affine": grid_n at level k is a*k + b with the center cell removed.
    """

    kind: str
    a: int = 0
    b: int = 0


@dataclass(frozen=True)
class CarpetSpec:
    name: str
    levels: tuple[LevelRule, ...]
    tail: Tail

    @lru_cache(maxsize=None)
    def rule_at(self, level: int) -> LevelRule:
        """The LevelRule in force at 1-based level."""
        if level <= len(self.levels):
            return self.levels[level - 1]
        if self.tail.kind == "repeat":
            return self.levels[-1]
        n = self.tail.a * level + self.tail.b
        c = (n - 1) // 2
        return LevelRule(n, ((c, c, c, c),))

    def cell_side(self, depth: int) -> Fraction:
        s = Fraction(1)
        for j in range(1, depth + 1):
            s /= self.rule_at(j).grid_n
        return s

    def is_level_constant(self) -> bool:
        first = self.levels[0]
        same = all(r == first for r in self.levels)
        return same and self.tail.kind == "repeat"


@dataclass(frozen=True)
class Hole:
    """A removed block at some level; address ends at the removed block's
    anchor cell, the prefix addresses the surviving parent cell."""

    address: CellAddress
    level: int
    rect: Rect
    exposed: bool = False

    def sort_key(self):
        return (self.level, self.address)


@dataclass(frozen=True)
class CarpetStage:
    spec: CarpetSpec
    depth: int
    holes: tuple[Hole, ...]
    kept_count: int


def _validate_rule(rule: LevelRule, level: int) -> None:
    n = rule.grid_n
    if n < 3:
        raise SpecError(f"level {level}: grid_n must be >= 3, got {n}")
    if not rule.blocks:
        raise SpecError(f"level {level}: removal mask is empty")
    for blk in rule.blocks:
        r0, c0, r1, c1 = blk
        if r1 - r0 != c1 - c0:
            raise SpecError(f"level {level}: block {blk} is not square")
        if r0 > r1 or c0 > c1:
            raise SpecError(f"level {level}: malformed block {blk}")
        if r0 < 1 or c0 < 1 or r1 > n - 2 or c1 > n - 2:
            raise SpecError(
                f"level {level}: block {blk} touches the boundary of the "
                f"{n}x{n} grid")
    for i, p in enumerate(rule.blocks):
        for q in rule.blocks[i + 1:]:
            # Chebyshev gap >= 2 between blocks keeps hole closures disjoint
            if p[0] <= q[2] + 1 and q[0] <= p[2] + 1 \
                    and p[1] <= q[3] + 1 and q[1] <= p[3] + 1:
                raise SpecError(
                    f"level {level}: removed blocks {p} and {q} are adjacent "
                    f"or overlapping")
    if len(rule.removed) >= n * n:
        raise SpecError(f"level {level}: no cell is kept")


def _validated_spec(name: str, levels: Sequence[LevelRule], tail: Tail) -> CarpetSpec:
    if not levels:
        raise SpecError("spec needs at least one level rule")
    for i, rule in enumerate(levels, start=1):
        _validate_rule(rule, i)
    if tail.kind == "affine":
        if tail.a < 0 or tail.a % 2 != 0 or tail.b % 2 == 0:
            raise SpecError("affine tail needs even a and odd b (odd grids)")
        if tail.a * (len(levels) + 1) + tail.b < 3:
            raise SpecError("affine tail produces grid_n < 3")
    elif tail.kind != "repeat":
        raise SpecError(f"unknown tail kind {tail.kind!r}")
    return CarpetSpec(name, tuple(levels), tail)


def center_rule(n: int) -> LevelRule:
    c = (n - 1) // 2
    return LevelRule(n, ((c, c, c, c),))


def make_spec(preset: str | None = None, *,
              name: str | None = None,
              levels: Sequence[LevelRule] | None = None,
              tail: Tail | None = None) -> CarpetSpec:
    """Build and validate a carpet spec from a preset name or raw parts.

    Presets: standard (3x3 grid, center removed at every level),
    fat (level k uses a (2k+3)x(2k+3) grid, center removed),
    frame(n) (keep the boundary ring of an n x n grid; the interior
    (n-2)x(n-2) block is removed as a single hole).
    """
    if preset is not None:
        if preset == "standard":
            return _validated_spec("standard", [center_rule(3)], Tail("repeat"))
        if preset == "fat":
            return _validated_spec("fat", [center_rule(5)], Tail("affine", 2, 3))
        if preset.startswith("frame(") and preset.endswith(")"):
            n = int(preset[6:-1])
            if n < 3:
                raise SpecError("frame(n) needs n >= 3")
            rule = LevelRule(n, ((1, 1, n - 2, n - 2),))
            return _validated_spec(preset, [rule], Tail("repeat"))
        raise SpecError(f"unknown preset {preset!r}")
    if levels is None:
        raise SpecError("either a preset or explicit levels are required")
    return _validated_spec(name or "custom", levels, tail or Tail("repeat"))


def cell_rect(spec: CarpetSpec, path: CellAddress) -> Rect:
    x0 = Fraction(0)
    y0 = Fraction(0)
    side = Fraction(1)
    for level, (r, c) in enumerate(path, start=1):
        side /= spec.rule_at(level).grid_n
        x0 += c * side
        y0 += r * side
    return Rect(x0, y0, x0 + side, y0 + side)


def block_rect(spec: CarpetSpec, parent: CellAddress, level: int,
               block: Block) -> Rect:
    outer = cell_rect(spec, parent)
    n = spec.rule_at(level).grid_n
    s = outer.width / n
    r0, c0, r1, c1 = block
    return Rect(outer.x0 + c0 * s, outer.y0 + r0 * s,
                outer.x0 + (c1 + 1) * s, outer.y0 + (r1 + 1) * s)


def iter_kept_cells(spec: CarpetSpec, depth: int,
                    prefix: CellAddress = ()) -> Iterator[CellAddress]:
    """All depth-k kept cell addresses below a kept prefix cell."""
    if depth == len(prefix):
        yield prefix
        return
    rule = spec.rule_at(len(prefix) + 1)
    removed = rule.removed
    for r in range(rule.grid_n):
        for c in range(rule.grid_n):
            if (r, c) not in removed:
                yield from iter_kept_cells(spec, depth, prefix + ((r, c),))


def build_stage(spec: CarpetSpec, k: int) -> CarpetStage:
    """Enumerate all holes of level <= k, with kept-cell bookkeeping."""
    if k < 0:
        raise SpecError("stage depth must be >= 0")
    holes: list[Hole] = []
    kept = 1
    parents: list[CellAddress] = [()]
    for level in range(1, k + 1):
        rule = spec.rule_at(level)
        removed = rule.removed
        next_parents: list[CellAddress] = []
        for parent in parents:
            for blk in rule.blocks:
                holes.append(Hole(parent + ((blk[0], blk[1]),), level,
                                  block_rect(spec, parent, level, blk)))
            for r in range(rule.grid_n):
                for c in range(rule.grid_n):
                    if (r, c) not in removed:
                        next_parents.append(parent + ((r, c),))
        parents = next_parents
        kept *= rule.kept_count
    holes.sort(key=Hole.sort_key)
    return CarpetStage(spec, k, tuple(holes), kept)


def peripheral_disks(stage: CarpetStage, include_outer: bool = False):
    """Holes in canonical (level, address) order, OUTER token last."""
    disks: list = sorted(stage.holes, key=Hole.sort_key)
    if include_outer:
        disks.append(OUTER)
    return disks


def stage_area(stage: CarpetStage) -> Fraction:
    """Exact kept area, cross-checked against the kept-cell count."""
    area = Fraction(1)
    for level in range(1, stage.depth + 1):
        rule = stage.spec.rule_at(level)
        area *= Fraction(rule.kept_count, rule.grid_n ** 2)
    cell = stage.spec.cell_side(stage.depth) ** 2
    if area != stage.kept_count * cell:
        raise AssertionError("stage area bookkeeping mismatch")
    return area


def similarity_dimension(spec: CarpetSpec) -> float | None:
    """log(kept)/log(n) for level-constant specs, None otherwise."""
    if not spec.is_level_constant():
        return None
    rule = spec.levels[0]
    return math.log(rule.kept_count) / math.log(rule.grid_n)


def whyburn_check(stage: CarpetStage) -> dict:
    """Report on disjoint hole closures and shrinking per-level diameters."""
    holes = stage.holes
    overlaps: list[tuple[CellAddress, CellAddress]] = []
    # sweep in x so that disjoint families take near-linear time
    by_x = sorted(holes, key=lambda h: h.rect.x0)
    active: list[Hole] = []
    for h in by_x:
        active = [g for g in active if g.rect.x1 >= h.rect.x0]
        for g in active:
            if h.rect.intersects(g.rect, closed=True):
                overlaps.append((g.address, h.address))
        active.append(h)
    max_diam_sq: dict[int, Fraction] = {}
    for h in holes:
        d = h.rect.diameter_sq
        if d > max_diam_sq.get(h.level, Fraction(0)):
            max_diam_sq[h.level] = d
    levels = sorted(max_diam_sq)
    decreasing = all(max_diam_sq[levels[i + 1]] < max_diam_sq[levels[i]]
                     for i in range(len(levels) - 1))
    # OUTER is the unbounded complement of [0,1]^2; it meets no hole closure
    # as long as every hole is strictly interior, which we check here.
    interior = all(Rect(Fraction(0), Fraction(0), Fraction(1), Fraction(1))
                   .contains_rect(h.rect, strict=True) for h in holes)
    return {
        "disjoint_closures": not overlaps and interior,
        "overlapping_pairs": overlaps,
        "max_diameter_sq_per_level": {lv: max_diam_sq[lv] for lv in levels},
        "diameters_strictly_decreasing": decreasing,
        "pass": not overlaps and interior and decreasing,
    }


def holes_in_rect(spec: CarpetSpec, max_level: int, window: Rect,
                  closed: bool = True) -> list[Hole]:
    """All holes of level <= max_level whose rect meets the window.

    Descends the kept-cell tree and prunes branches outside the window, so
    the cost scales with the window, not with the whole stage.
    """
    out: list[Hole] = []

    def descend(parent: CellAddress, rect: Rect, level: int) -> None:
        if level > max_level or not rect.intersects(window, closed=closed):
            return
        rule = spec.rule_at(level)
        removed = rule.removed
        n = rule.grid_n
        s = rect.width / n
        for blk in rule.blocks:
            r0, c0, r1, c1 = blk
            hr = Rect(rect.x0 + c0 * s, rect.y0 + r0 * s,
                      rect.x0 + (c1 + 1) * s, rect.y0 + (r1 + 1) * s)
            if hr.intersects(window, closed=closed):
                out.append(Hole(parent + ((r0, c0),), level, hr))
        if level == max_level:
            return
        # conservative index window; exact per-child test happens on recursion
        clo = max(0, int((window.x0 - rect.x0) // s) - 1)
        chi = min(n - 1, int((window.x1 - rect.x0) // s) + 1)
        rlo = max(0, int((window.y0 - rect.y0) // s) - 1)
        rhi = min(n - 1, int((window.y1 - rect.y0) // s) + 1)
        for r in range(rlo, rhi + 1):
            for c in range(clo, chi + 1):
                if (r, c) not in removed:
                    sub = Rect(rect.x0 + c * s, rect.y0 + r * s,
                               rect.x0 + (c + 1) * s, rect.y0 + (r + 1) * s)
                    descend(parent + ((r, c),), sub, level + 1)

    descend((), Rect(Fraction(0), Fraction(0), Fraction(1), Fraction(1)), 1)
    out.sort(key=Hole.sort_key)
    return out


# ---------------------------------------------------------------------------
# Spec files


def spec_to_json(spec: CarpetSpec) -> dict:
    levels = []
    for rule in spec.levels:
        entry: dict = {"n": rule.grid_n,
                       "removed": sorted([list(rc) for rc in rule.removed])}
        if any(b[2] > b[0] or b[3] > b[1] for b in rule.blocks):
            entry["blocks"] = [list(b) for b in rule.blocks]
        levels.append(entry)
    tail: dict = {"kind": spec.tail.kind}
    if spec.tail.kind == "affine":
        tail["a"] = spec.tail.a
        tail["b"] = spec.tail.b
    return {"schema_version": 1, "name": spec.name,
            "levels": levels, "tail": tail}


def spec_from_json(data: dict) -> CarpetSpec:
    if data.get("schema_version", 1) != 1:
        raise SpecError("unsupported schema_version")
    levels = []
    for entry in data["levels"]:
        if "blocks" in entry:
            blocks = tuple(tuple(b) for b in entry["blocks"])
        else:
            blocks = tuple((r, c, r, c) for r, c in entry["removed"])
        levels.append(LevelRule(int(entry["n"]), blocks))
    t = data.get("tail", {"kind": "repeat"})
    tail = Tail(t["kind"], int(t.get("a", 0)), int(t.get("b", 0)))
    return _validated_spec(data.get("name", "custom"), levels, tail)


def load_spec(path: str) -> CarpetSpec:
    with open(path) as fh:
        return spec_from_json(json.load(fh))


def save_spec(spec: CarpetSpec, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_json(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")
