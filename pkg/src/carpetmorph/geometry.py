"""Exact rational planar primitives.

Everything here works over fractions.Fraction so that incidence tests
(segment touches a hole closure, point lies on a lattice line, ...) are
decided exactly, never by epsilon comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

Point = tuple[Fraction, Fraction]


def frac(value) -> Fraction:
    """Coerce ints, strings like '2/3', floats-free input to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def format_frac(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def dist_sq(p: Point, q: Point) -> Fraction:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return dx * dx + dy * dy


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle [x0,x1] x [y0,y1]."""

    x0: Fraction
    y0: Fraction
    x1: Fraction
    y1: Fraction

    def __post_init__(self):
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError("degenerate rectangle")

    @property
    def width(self) -> Fraction:
        return self.x1 - self.x0

    @property
    def height(self) -> Fraction:
        return self.y1 - self.y0

    @property
    def area(self) -> Fraction:
        return self.width * self.height

    @property
    def diameter_sq(self) -> Fraction:
        return self.width ** 2 + self.height ** 2

    @property
    def center(self) -> Point:
        return ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    def corners(self) -> list[Point]:
        return [
            (self.x0, self.y0),
            (self.x1, self.y0),
            (self.x1, self.y1),
            (self.x0, self.y1),
        ]

    def contains_point(self, p: Point, strict: bool = False) -> bool:
        if strict:
            return self.x0 < p[0] < self.x1 and self.y0 < p[1] < self.y1
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1

    def contains_rect(self, other: "Rect", strict: bool = False) -> bool:
        if strict:
            return (self.x0 < other.x0 and other.x1 < self.x1
                    and self.y0 < other.y0 and other.y1 < self.y1)
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def intersects(self, other: "Rect", closed: bool = True) -> bool:
        """Whether the two rectangles meet (closures if closed, else interiors)."""
        if closed:
            return (self.x0 <= other.x1 and other.x0 <= self.x1
                    and self.y0 <= other.y1 and other.y0 <= self.y1)
        return (self.x0 < other.x1 and other.x0 < self.x1
                and self.y0 < other.y1 and other.y0 < self.y1)

    def scaled(self, s: Fraction, dx: Fraction, dy: Fraction) -> "Rect":
        return Rect(self.x0 * s + dx, self.y0 * s + dy,
                    self.x1 * s + dx, self.y1 * s + dy)

    def to_json(self) -> dict:
        return {"x0": format_frac(self.x0), "y0": format_frac(self.y0),
                "x1": format_frac(self.x1), "y1": format_frac(self.y1)}

    @staticmethod
    def from_json(d: dict) -> "Rect":
        return Rect(frac(d["x0"]), frac(d["y0"]), frac(d["x1"]), frac(d["y1"]))


def segment_meets_rect(a: Point, b: Point, r: Rect, closed: bool = True) -> bool:
    """Axis-aligned segment ab vs rectangle r (closure or open interior)."""
    if a[0] == b[0]:  # vertical
        x = a[0]
        y0, y1 = (a[1], b[1]) if a[1] <= b[1] else (b[1], a[1])
        if closed:
            return r.x0 <= x <= r.x1 and y0 <= r.y1 and r.y0 <= y1
        return r.x0 < x < r.x1 and y0 < r.y1 and r.y0 < y1
    if a[1] == b[1]:  # horizontal
        y = a[1]
        x0, x1 = (a[0], b[0]) if a[0] <= b[0] else (b[0], a[0])
        if closed:
            return r.y0 <= y <= r.y1 and x0 <= r.x1 and r.x0 <= x1
        return r.y0 < y < r.y1 and x0 < r.x1 and r.x0 < x1
    raise ValueError("segment is not axis-aligned")


def polyline_meets_rect(pts: Sequence[Point], r: Rect, closed: bool = True) -> bool:
    return any(segment_meets_rect(pts[i], pts[i + 1], r, closed)
               for i in range(len(pts) - 1))


def segments_cross_properly(a: Point, b: Point, c: Point, d: Point) -> bool:
    """True when two axis-aligned segments cross at a single interior point."""
    av, cv = a[0] == b[0], c[0] == d[0]
    if av == cv:
        return False
    if not av:
        a, b, c, d = c, d, a, b
    # a-b vertical, c-d horizontal
    x = a[0]
    y = c[1]
    ylo, yhi = (a[1], b[1]) if a[1] <= b[1] else (b[1], a[1])
    xlo, xhi = (c[0], d[0]) if c[0] <= d[0] else (d[0], c[0])
    return ylo < y < yhi and xlo < x < xhi


def point_on_segment(p: Point, a: Point, b: Point) -> bool:
    if a[0] == b[0]:
        lo, hi = (a[1], b[1]) if a[1] <= b[1] else (b[1], a[1])
        return p[0] == a[0] and lo <= p[1] <= hi
    if a[1] == b[1]:
        lo, hi = (a[0], b[0]) if a[0] <= b[0] else (b[0], a[0])
        return p[1] == a[1] and lo <= p[0] <= hi
    raise ValueError("segment is not axis-aligned")


def polyline_length(pts: Sequence[Point]) -> Fraction:
    """Exact length of an axis-aligned polyline."""
    total = Fraction(0)
    for i in range(len(pts) - 1):
        total += abs(pts[i + 1][0] - pts[i][0]) + abs(pts[i + 1][1] - pts[i][1])
    return total


def simplify_polyline(pts: Sequence[Point]) -> list[Point]:
    """Drop repeated and collinear interior vertices."""
    out: list[Point] = []
    for p in pts:
        if out and p == out[-1]:
            continue
        while len(out) >= 2 and (
                (out[-2][0] == out[-1][0] == p[0])
                or (out[-2][1] == out[-1][1] == p[1])):
            out.pop()
        out.append(p)
    return out


@dataclass(frozen=True)
class Polygon:
    """Simple rectilinear polygon, vertices CCW, exact coordinates."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        if len(self.vertices) < 4:
            raise ValueError("rectilinear polygon needs at least 4 vertices")

    @staticmethod
    def from_points(pts: Sequence[Point]) -> "Polygon":
        pts = simplify_polyline(list(pts) + [pts[0]])[:-1]
        return Polygon(tuple(pts))

    @staticmethod
    def from_rect(r: Rect) -> "Polygon":
        return Polygon(tuple(r.corners()))

    def edges(self) -> Iterator[tuple[Point, Point]]:
        v = self.vertices
        for i in range(len(v)):
            yield v[i], v[(i + 1) % len(v)]

    @property
    def signed_area(self) -> Fraction:
        total = Fraction(0)
        for a, b in self.edges():
            total += a[0] * b[1] - b[0] * a[1]
        return total / 2

    @property
    def area(self) -> Fraction:
        return abs(self.signed_area)

    @property
    def diameter_sq(self) -> Fraction:
        v = self.vertices
        return max(dist_sq(v[i], v[j])
                   for i in range(len(v)) for j in range(i + 1, len(v)))

    def bounding_rect(self) -> Rect:
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return Rect(min(xs), min(ys), max(xs), max(ys))

    def as_rect(self) -> Rect | None:
        """The rectangle this polygon equals, or None."""
        r = self.bounding_rect()
        if len(self.vertices) == 4 and set(self.vertices) == set(r.corners()):
            return r
        return None

    def on_boundary(self, p: Point) -> bool:
        return any(point_on_segment(p, a, b) for a, b in self.edges())

    def contains_point(self, p: Point, strict: bool = False) -> bool:
        """Exact point-in-polygon (crossing number on a rectilinear polygon)."""
        if self.on_boundary(p):
            return not strict
        inside = False
        for a, b in self.edges():
            if a[0] == b[0]:  # vertical edge: does the ray y=p.y, x>p.x hit it?
                ylo, yhi = (a[1], b[1]) if a[1] <= b[1] else (b[1], a[1])
                if ylo <= p[1] < yhi and a[0] > p[0]:
                    inside = not inside
        return inside

    def contains_rect(self, r: Rect, strict: bool = False) -> bool:
        """Containment of a rectangle's closure (interior disjoint from edges)."""
        if not self.contains_point(r.center):
            return False
        for a, b in self.edges():
            if segment_meets_rect(a, b, r, closed=not strict):
                if strict:
                    return False
                # edge may touch boundary but must not enter the interior
                if segment_meets_rect(a, b, r, closed=False):
                    return False
        if strict:
            return all(self.contains_point(c, strict=True) for c in r.corners())
        return all(self.contains_point(c) for c in r.corners())

    def to_json(self) -> list[list[str]]:
        return [[format_frac(x), format_frac(y)] for x, y in self.vertices]

    @staticmethod
    def from_json(data: Iterable[Sequence[str]]) -> "Polygon":
        return Polygon(tuple((frac(x), frac(y)) for x, y in data))
