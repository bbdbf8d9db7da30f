"""Synchronized subdivisions of two carpets with paired peripheral disks.

Both carpets are refined by one shared tree of region pairs.  An EXPOSE
move exposes one hole on each side and partitions both faces into eight
ring cells bounded by routed spokes; a SPLIT move cuts both faces in two
along a safe lattice chord (children paired in axis order).  Either way
the two partitions share one combinatorial boundary structure
(PairedArc), which is what makes the cell pairing an exact incidence-
and orientation-preserving bijection.  The scheduler prefers SPLIT on
elongated or badly mismatched faces so that ring moves only ever happen
on chunky, proportionate pairs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .carpet import (OUTER, CarpetSpec, Hole, SpecError, block_rect,
                     holes_in_rect)
from .geometry import (Point, Polygon, Rect, format_frac,
                       point_on_segment, polyline_length,
                       segment_meets_rect)
from .routing import (SPOKES, RouteFailure, SpokeRouter, arc_position,
                      hole_corner)
from .subdivision import Cell2, Subdivision, lattice_level

PRESCRIPTION_INFEASIBLE = "PRESCRIPTION_INFEASIBLE"
DEPTH_EXHAUSTED = "DEPTH_EXHAUSTED"

UNIT = Rect(Fraction(0), Fraction(0), Fraction(1), Fraction(1))


class CorrespondenceError(RuntimeError):
    def __init__(self, code: str, msg: str):
        super().__init__(f"{code}: {msg}")
        self.code = code


_arc_ids = itertools.count(1)


class PairedArc:
    """A boundary arc carried simultaneously on both carpets.

    a_pts and b_pts are axis-aligned polylines with paired endpoints; the
    boundary map along the arc is arc-length proportional.  kind "hole"
    arcs lie on an exposed hole pair and carry the exact similarity
    (pair_rects); attachments on them stay similarity-consistent forever.
    When an arc is split, subs holds the pieces (in the arc's own
    direction) and every face sharing the arc sees the same pieces.
    """

    __slots__ = ("aid", "kind", "a_pts", "b_pts", "subs", "pair_rects")

    def __init__(self, kind: str, a_pts, b_pts, pair_rects=None):
        self.aid = next(_arc_ids)
        self.kind = kind                  # "outer" | "spoke" | "hole"
        self.a_pts = tuple(a_pts)
        self.b_pts = tuple(b_pts)
        self.subs = None
        self.pair_rects = pair_rects

    def pts(self, side: int, orient: int = 1):
        pts = self.a_pts if side == 0 else self.b_pts
        return pts if orient == 1 else tuple(reversed(pts))

    def __repr__(self):
        return f"PairedArc#{self.aid}({self.kind})"


def expand_arc(arc: PairedArc, orient: int):
    """The current finest pieces of an arc, in face orientation."""
    if arc.subs is None:
        yield arc, orient
        return
    subs = arc.subs if orient == 1 else list(reversed(arc.subs))
    for sub in subs:
        yield from expand_arc(sub, orient)


def sim_point(pair_rects: tuple[Rect, Rect], p: Point) -> Point:
    """The similarity carrying the a-hole onto the b-hole, at a point."""
    ra, rb = pair_rects
    s = rb.width / ra.width
    return (rb.x0 + (p[0] - ra.x0) * s, rb.y0 + (p[1] - ra.y0) * s)


class RegionPair:
    """A node of the shared refinement tree: one face on each carpet,
    bounded by the same cyclic sequence of paired arcs."""

    __slots__ = ("arcs", "pending", "move", "hole_a", "hole_b", "children",
                 "level_a", "level_b", "_cache")

    def __init__(self, arcs, level_a: int = 0, level_b: int = 0):
        self.arcs = list(arcs)            # [(PairedArc, orient)] cyclic CCW
        self.pending: set[int] = set()
        self.move = None                  # None (leaf), "EXPOSE" or "SPLIT"
        self.hole_a: Hole | None = None
        self.hole_b: Hole | None = None
        self.children: list[RegionPair] = []
        self.level_a = level_a
        self.level_b = level_b
        self._cache: dict = {}

    def boundary(self):
        out = []
        for arc, orient in self.arcs:
            out.extend(expand_arc(arc, orient))
        return out

    def polyline(self, side: int, expanded: bool = False) -> list[Point]:
        pts: list[Point] = []
        arcs = self.boundary() if expanded else self.arcs
        for arc, orient in arcs:
            seg = arc.pts(side, orient)
            start = 1 if pts and pts[-1] == seg[0] else 0
            pts.extend(seg[start:])
        if pts[0] == pts[-1]:
            pts.pop()
        return pts

    def poly(self, side: int) -> Polygon:
        key = ("p", side)
        if key not in self._cache:
            self._cache[key] = Polygon.from_points(self.polyline(side))
        return self._cache[key]

    def diam_sq(self, side: int) -> Fraction:
        key = ("d", side)
        if key not in self._cache:
            self._cache[key] = self.poly(side).diameter_sq
        return self._cache[key]

    @property
    def rect_a(self) -> Rect:
        return self.poly(0).bounding_rect()

    @property
    def rect_b(self) -> Rect:
        return self.poly(1).bounding_rect()

    def cell(self, side: int) -> Cell2:
        return Cell2(self.poly(side), tuple(self.polyline(side, True)))


@dataclass(frozen=True)
class StageRecord:
    epsilon: Fraction
    leaves: tuple
    bijection: tuple   # ((addr_a, addr_b), ...) in exposure order


def hole_by_address(spec: CarpetSpec, address) -> Hole:
    """Resolve a hole address (parent cell path + block anchor)."""
    address = tuple(tuple(rc) for rc in address)
    level = len(address)
    parent = address[:-1]
    for j, rc in enumerate(parent, start=1):
        if rc in spec.rule_at(j).removed:
            raise SpecError(f"address {address}: prefix cell {rc} is removed")
    rule = spec.rule_at(level)
    for blk in rule.blocks:
        if (blk[0], blk[1]) == address[-1]:
            return Hole(address, level, block_rect(spec, parent, level, blk))
    raise SpecError(f"no hole with anchor {address[-1]} at level {level}")


def _split_polyline_at(pts: Sequence[Point], cuts: Sequence[Fraction]):
    """Split a polyline at ascending arc-length positions (all interior)."""
    pieces: list[list[Point]] = []
    cur: list[Point] = [pts[0]]
    cum = Fraction(0)
    ci = 0
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        seg = abs(b[0] - a[0]) + abs(b[1] - a[1])
        while ci < len(cuts) and cum < cuts[ci] <= cum + seg:
            r = (cuts[ci] - cum) / seg
            p = (a[0] + (b[0] - a[0]) * r, a[1] + (b[1] - a[1]) * r)
            if p != cur[-1]:
                cur.append(p)
            pieces.append(cur)
            cur = [p]
            ci += 1
        if b != cur[-1]:
            cur.append(b)
        cum += seg
    pieces.append(cur)
    if len(pieces) != len(cuts) + 1:
        raise RouteFailure("terminal position off its arc")
    return pieces


def _level_holding(spec: CarpetSpec, points, base: int,
                   cap: int) -> int | None:
    """Smallest level in [base, cap] whose lattice holds every point."""
    D = 1
    for j in range(1, cap + 1):
        D *= spec.rule_at(j).grid_n
        if j < base:
            continue
        if all((p[0] * D).denominator == 1 and (p[1] * D).denominator == 1
               for p in points):
            return j
    return None


def _polyline_lattice_points(pts: Sequence[Point], t_target: Fraction,
                             spec: CarpetSpec, cap: int,
                             want: int = 5) -> list[Point]:
    """Interior lattice points of a boundary polyline nearest an
    arc-length position, skipping its corners.

    Scans levels coarse-first and stops as soon as enough candidates
    exist: routing cost grows with the lattice, so the coarsest point
    that works is the best point."""
    total = polyline_length(pts)
    corners = set(pts)
    out = []
    seen: set = set()
    D = 1
    for j in range(1, cap + 1):
        D *= spec.rule_at(j).grid_n
        cum = Fraction(0)
        for i in range(len(pts) - 1):
            a, b = pts[i], pts[i + 1]
            seg = abs(b[0] - a[0]) + abs(b[1] - a[1])
            ax = 0 if a[1] == b[1] else 1
            fixed = a[1 - ax]
            if (fixed * D).denominator != 1:
                cum += seg
                continue
            lo, hi = sorted((a[ax], b[ax]))
            sgn = 1 if b[ax] > a[ax] else -1
            off = max(Fraction(0), min(t_target - cum, seg))
            center = round(float((a[ax] + sgn * off) * D))
            for k in range(center - 2, center + 3):
                val = Fraction(k, D)
                if not lo <= val <= hi:
                    continue
                p = (val, fixed) if ax == 0 else (fixed, val)
                if p in corners or p in seen:
                    continue
                t = cum + abs(val - a[ax])
                if t == 0 or t == total:
                    continue
                seen.add(p)
                out.append((j, abs(t - t_target), t, p))
            cum += seg
        if len(out) >= want:
            break
    out.sort()
    return [p for _, _, _, p in out[:want]]


def _inward_normal(pts: Sequence[Point], p: Point):
    """Unit direction into the face at a non-corner boundary point (the
    interior lies left of the CCW boundary)."""
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        if p == a or p == b:
            continue
        if point_on_segment(p, a, b):
            dx = (b[0] > a[0]) - (b[0] < a[0])
            dy = (b[1] > a[1]) - (b[1] < a[1])
            return (-dy, dx)
    return None


def _make_root() -> RegionPair:
    c = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)),
         (Fraction(1), Fraction(1)), (Fraction(0), Fraction(1))]
    arcs = []
    for i in range(4):
        pts = (c[i], c[(i + 1) % 4])
        arcs.append((PairedArc("outer", pts, pts), 1))
    return RegionPair(arcs)


class Correspondence:
    """Planned correspondence: shared region tree plus stage snapshots."""

    def __init__(self, spec_a: CarpetSpec, spec_b: CarpetSpec,
                 prescribed: Sequence = ()):
        self.spec_a = spec_a
        self.spec_b = spec_b
        self.root = _make_root()
        self.exposed_a: dict = {}    # address -> Hole
        self.exposed_b: dict = {}
        self.bijection: list = []    # [(addr_a, addr_b)] exposure order
        self.stages: list[StageRecord] = []
        self.prescribed = {}
        self.pending_loc: dict = {}
        for pid, (addr_a, addr_b) in enumerate(prescribed):
            pair = (hole_by_address(spec_a, addr_a),
                    hole_by_address(spec_b, addr_b))
            self.prescribed[pid] = pair
            self.root.pending.add(pid)
            self.pending_loc[pid] = self.root

    # -- tree access -------------------------------------------------------

    def leaves(self, node: RegionPair | None = None) -> list[RegionPair]:
        out = []
        stack = [node or self.root]
        while stack:
            n = stack.pop()
            if n.children:
                stack.extend(reversed(n.children))
            else:
                out.append(n)
        return out

    def spec(self, side: int) -> CarpetSpec:
        return self.spec_a if side == 0 else self.spec_b

    def exposed(self, side: int) -> dict:
        return self.exposed_a if side == 0 else self.exposed_b

    # -- planning ----------------------------------------------------------

    def _plan(self, schedule: Sequence[Fraction]):
        for eps in schedule:
            guard = 0
            while self.pending_loc:
                guard += 1
                if guard > 200:
                    raise CorrespondenceError(
                        DEPTH_EXHAUSTED,
                        "prescribed exposures did not converge")
                pid = min(self.pending_loc)
                self._refine(self.pending_loc[pid])
            eps2 = eps * eps
            work = [lf for lf in self.leaves()
                    if lf.diam_sq(0) >= eps2 or lf.diam_sq(1) >= eps2]
            while work:
                leaf = work.pop()
                self._refine(leaf)
                for ch in leaf.children:
                    if ch.diam_sq(0) >= eps2 or ch.diam_sq(1) >= eps2:
                        work.append(ch)
            self.stages.append(StageRecord(eps, tuple(self.leaves()),
                                           tuple(self.bijection)))

    def _reserved(self, side: int) -> set:
        return {pair[side].address for pair in self.prescribed.values()
                if pair[side].address not in self.exposed(side)}

    def _hole_candidates(self, fp: RegionPair, side: int,
                         want: int = 2) -> list[Hole]:
        spec = self.spec(side)
        exposed = self.exposed(side)
        reserved = self._reserved(side)
        poly = fp.poly(side)
        bbox = poly.bounding_rect()
        base = max(fp.level_a if side == 0 else fp.level_b, 1)
        # only the largest (shallowest) holes present are exposable: a
        # deep hole's doorstep is hemmed in by its same-level siblings,
        # and on self-similar carpets those pockets admit no lattice
        # corridor at any finite depth
        for lev in range(1, base + 10):
            cands = [h for h in holes_in_rect(spec, lev, bbox)
                     if h.level == lev and h.address not in exposed
                     and h.address not in reserved
                     and poly.contains_rect(h.rect, strict=True)]
            if cands:
                # prefer the hole nearest the face centre so the eight
                # children cut the face evenly (a corner hole leaves one
                # child nearly as large as its parent)
                cx = (bbox.x0 + bbox.x1) / 2
                cy = (bbox.y0 + bbox.y1) / 2
                def key(h):
                    r = h.rect
                    dx = (r.x0 + r.x1) / 2 - cx
                    dy = (r.y0 + r.y1) / 2 - cy
                    return (-r.area, dx * dx + dy * dy, h.address)
                cands.sort(key=key)
                return cands[:want]
        raise CorrespondenceError(
            DEPTH_EXHAUSTED, f"no exposable hole inside face (side {side})")

    def _largest_hole(self, fp: RegionPair, side: int) -> Hole:
        return self._hole_candidates(fp, side, want=1)[0]

    def _aligned_pairs(self, fp: RegionPair, want: int = 4):
        """Hole pairs ordered by how closely the two holes sit at the
        same relative position in their faces.  Matching positions keep
        each spoke's partner target near its own ray on both sides, so
        the paired routes stay short and the wedge children stay
        proportionate."""
        cas = self._hole_candidates(fp, 0, want=4)
        cbs = self._hole_candidates(fp, 1, want=8)
        ba = fp.poly(0).bounding_rect()
        bb = fp.poly(1).bounding_rect()

        def norm(r, box):
            w = float(box.x1 - box.x0) or 1.0
            h = float(box.y1 - box.y0) or 1.0
            return ((float(r.x0 + r.x1) / 2 - float(box.x0)) / w,
                    (float(r.y0 + r.y1) / 2 - float(box.y0)) / h)

        scored = []
        for a in cas:
            na = norm(a.rect, ba)
            for b in cbs:
                nb = norm(b.rect, bb)
                d2 = (na[0] - nb[0]) ** 2 + (na[1] - nb[1]) ** 2
                scored.append((d2, a.address, b.address, a, b))
        scored.sort(key=lambda t: t[:3])
        return [(a, b) for _, _, _, a, b in scored[:want]]

    def _choose_holes(self, fp: RegionPair, force=None):
        for pid in sorted(fp.pending):
            ha, hb = self.prescribed[pid]
            return ha, hb, pid
        if force is not None:
            side, hole = force
            other = self._largest_hole(fp, 1 - side)
            return (hole, other, None) if side == 0 else (other, hole, None)
        return self._largest_hole(fp, 0), self._largest_hole(fp, 1), None

    def _refine(self, fp: RegionPair, force=None):
        """One refinement move on a leaf: EXPOSE when both faces are
        chunky and comparable, otherwise SPLIT them down to size first."""
        if fp.children:
            raise ValueError("refining a non-leaf region pair")
        if self._expose_sensible(fp):
            try:
                self._expose(fp, force)
                return
            except (RouteFailure, CorrespondenceError):
                if self._try_split(fp):
                    return
                raise
        if self._try_split(fp):
            return
        self._expose(fp, force)

    def _expose_sensible(self, fp: RegionPair) -> bool:
        """Ring moves behave only on solid, roughly square faces of
        comparable size; anything else gets split first."""
        for side in (0, 1):
            poly = fp.poly(side)
            box = poly.bounding_rect()
            short = min(box.width, box.height)
            if max(box.width, box.height) > 2 * short:
                return False
            if 2 * poly.area < box.area:
                return False
        return fp.diam_sq(0) <= 16 * fp.diam_sq(1) and \
            fp.diam_sq(1) <= 16 * fp.diam_sq(0)

    def _assign_pending(self, fp: RegionPair):
        """Push prescribed pairs down to the unique child holding both."""
        for other in sorted(fp.pending):
            pa, pb = self.prescribed[other]
            ia = [i for i, ch in enumerate(fp.children)
                  if ch.poly(0).contains_rect(pa.rect, strict=True)]
            ib = [i for i, ch in enumerate(fp.children)
                  if ch.poly(1).contains_rect(pb.rect, strict=True)]
            if len(ia) != 1 or ia != ib:
                raise CorrespondenceError(
                    PRESCRIPTION_INFEASIBLE,
                    f"prescribed pair {other} separated by refinement")
            fp.children[ia[0]].pending.add(other)
            self.pending_loc[other] = fp.children[ia[0]]
        fp.pending.clear()

    def _expose(self, fp: RegionPair, force=None):
        ha, hb, pid = self._choose_holes(fp, force)
        if not fp.poly(0).contains_rect(ha.rect, strict=True) \
                or not fp.poly(1).contains_rect(hb.rect, strict=True):
            raise CorrespondenceError(
                PRESCRIPTION_INFEASIBLE,
                f"holes {ha.address} / {hb.address} not strictly inside "
                f"the paired faces")
        if pid is not None or force is not None:
            pairs = [(ha, hb)]
        else:
            pairs = self._aligned_pairs(fp)
        err: Exception | None = None
        done = False
        for extra in range(4):
            for ha, hb in pairs:
                try:
                    self._refine_attempt(fp, ha, hb, extra)
                    done = True
                    break
                except RouteFailure as e:
                    err = e
            if done:
                break
        else:
            raise CorrespondenceError(DEPTH_EXHAUSTED, str(err))
        # bookkeeping
        self.exposed_a[ha.address] = ha
        self.exposed_b[hb.address] = hb
        self.bijection.append((ha.address, hb.address))
        if pid is not None:
            fp.pending.discard(pid)
            del self.pending_loc[pid]
        self._assign_pending(fp)

    def _refine_attempt(self, fp: RegionPair, ha: Hole, hb: Hole,
                        extra: int):
        La = max(fp.level_a, ha.level + 1) + extra
        Lb = max(fp.level_b, hb.level + 1) + extra
        boundary = fp.boundary()
        arc_order = [arc for arc, _ in boundary]
        apts = {arc: arc.pts(0, o) for arc, o in boundary}
        bpts = {arc: arc.pts(1, o) for arc, o in boundary}

        D_b = 1
        for j in range(1, Lb + 1):
            D_b *= self.spec_b.rule_at(j).grid_n
        filt_a = {}
        for arc in arc_order:
            if arc.kind == "hole":
                def ok(p, pr=arc.pair_rects):
                    q = sim_point(pr, p)
                    return ((q[0] * D_b).denominator == 1
                            and (q[1] * D_b).denominator == 1)
                filt_a[arc] = ok

        # the steered search gives well-shaped spokes but can wedge a late
        # spoke into a dead pocket; the wall-hugging pass is the complete
        # fallback
        for hug in (False, True):
            try:
                spokes_a, spokes_b = self._route_pair(
                    fp, ha, hb, La, Lb, arc_order, apts, bpts, filt_a, hug)
                break
            except RouteFailure:
                if hug:
                    raise
        for sa, sb in zip(spokes_a, spokes_b):
            if sa.arc is not sb.arc:
                raise RouteFailure("paired spokes landed on different arcs")

        self._build_children(fp, ha, hb, spokes_a, spokes_b, La, Lb)

    def _route_pair(self, fp, ha, hb, La, Lb, arc_order, apts, bpts,
                    filt_a, hug):
        # an arc reachable on side A may be sealed off on side B (a hole
        # closure can close the only corridor to it); when B proves an arc
        # unreachable, ban it for the matching A spoke and re-route A
        banned = [set() for _ in range(8)]
        for _ in range(9):
            router_a = SpokeRouter(self.spec_a, ha, arc_order, apts,
                                   fp.poly(0), set(self.exposed_a), None,
                                   filt_a, banned, hug=hug)
            spokes_a = router_a.route_at(La)

            cons = []
            for sa in spokes_a:
                arc = sa.arc
                if sa.t_local == 0:
                    # vertex attachment: the partner is the paired vertex
                    cons.append(("exact", arc, bpts[arc][0]))
                elif arc.kind == "hole":
                    cons.append(("exact", arc, sim_point(arc.pair_rects,
                                                         sa.terminal)))
                else:
                    frac = sa.t_local / polyline_length(apts[arc])
                    cons.append(("near", arc,
                                 frac * polyline_length(bpts[arc])))
            router_b = SpokeRouter(self.spec_b, hb, arc_order, bpts,
                                   fp.poly(1), set(self.exposed_b), cons,
                                   hug=hug)
            try:
                spokes_b = router_b.route_at(Lb)
            except RouteFailure as e:
                i = getattr(e, "spoke_index", None)
                if (getattr(e, "no_terminal", False) and i is not None
                        and cons[i][0] == "near"
                        and cons[i][1] not in banned[i]):
                    banned[i].add(cons[i][1])
                    continue
                raise
            return spokes_a, spokes_b
        raise RouteFailure("no mutually reachable arcs for spokes")

    def _build_children(self, fp, ha, hb, spokes_a, spokes_b, La, Lb):
        boundary = fp.boundary()
        att: dict = {arc: [] for arc, _ in boundary}
        for i, (sa, sb) in enumerate(zip(spokes_a, spokes_b)):
            att[sa.arc].append((sa.t_local, sb.t_local, i))

        items: list = []   # ("piece", arc, orient) / ("attach", spoke index)
        for arc, orient in boundary:
            lst = sorted(att[arc])
            # vertex attachments sit at the arc's face-start; no split
            zero = [e for e in lst if e[0] == 0]
            lst = [e for e in lst if e[0] != 0]
            if any(e[1] != 0 for e in zero) or any(e[1] == 0 for e in lst):
                raise RouteFailure("vertex attachment not mirrored")
            for e in zero:
                items.append(("attach", e[2]))
            if not lst:
                items.append(("piece", arc, orient))
                continue
            if [e[1] for e in lst] != sorted(e[1] for e in lst):
                raise RouteFailure("paired attachments out of order")
            opts_a = arc.pts(0, orient)
            opts_b = arc.pts(1, orient)
            a_pieces = _split_polyline_at(opts_a, [e[0] for e in lst])
            b_pieces = _split_polyline_at(opts_b, [e[1] for e in lst])
            face_pieces = []
            for ap, bp in zip(a_pieces, b_pieces):
                if orient == -1:
                    ap, bp = list(reversed(ap)), list(reversed(bp))
                face_pieces.append(PairedArc(arc.kind, ap, bp,
                                             arc.pair_rects))
            arc.subs = (face_pieces if orient == 1
                        else list(reversed(face_pieces)))
            for j, piece in enumerate(face_pieces):
                items.append(("piece", piece, orient))
                if j < len(lst):
                    items.append(("attach", lst[j][2]))

        pos = {}
        for idx, it in enumerate(items):
            if it[0] == "attach":
                pos[it[1]] = idx
        n = len(items)
        spoke_arcs = [PairedArc("spoke", sa.pts, sb.pts)
                      for sa, sb in zip(spokes_a, spokes_b)]
        pair_rects = (ha.rect, hb.rect)

        children = []
        for i in range(8):
            arcs = [(spoke_arcs[i], 1)]
            idx = (pos[i] + 1) % n
            while idx != pos[(i + 1) % 8]:
                it = items[idx]
                if it[0] != "piece":
                    raise RouteFailure("attachments out of cyclic order")
                arcs.append((it[1], it[2]))
                idx = (idx + 1) % n
            arcs.append((spoke_arcs[(i + 1) % 8], -1))
            if i % 2 == 0:   # edge cell alongside one hole edge
                ca0 = hole_corner(ha.rect, SPOKES[i][0])
                ca1 = hole_corner(ha.rect, SPOKES[(i + 1) % 8][0])
                cb0 = hole_corner(hb.rect, SPOKES[i][0])
                cb1 = hole_corner(hb.rect, SPOKES[(i + 1) % 8][0])
                arcs.append((PairedArc("hole", (ca1, ca0), (cb1, cb0),
                                       pair_rects), 1))
            child = RegionPair(arcs, max(fp.level_a, La),
                               max(fp.level_b, Lb))
            for side in (0, 1):
                if child.poly(side).signed_area <= 0:
                    raise RouteFailure("child cell is not positively "
                                       "oriented")
            children.append(child)

        area_a = sum(ch.poly(0).area for ch in children) + ha.rect.area
        area_b = sum(ch.poly(1).area for ch in children) + hb.rect.area
        if area_a != fp.poly(0).area or area_b != fp.poly(1).area:
            raise RouteFailure("ring cells do not tile the face")

        fp.move = "EXPOSE"
        fp.hole_a, fp.hole_b = ha, hb
        fp.children = children

    # -- SPLIT moves -------------------------------------------------------

    def _try_split(self, fp: RegionPair) -> bool:
        """Cut both faces in two along one safe cut per side.

        One side gets a straight lattice chord; the partner cut enters
        and leaves through the same paired arcs, as a straight chord when
        one fits and as a routed lattice staircase otherwise.  Where a
        cut endpoint sits on an exposed hole edge, the partner endpoint
        is its exact similarity image."""
        ba = fp.poly(0).bounding_rect()
        axes = ("x", "y") if ba.width >= ba.height else ("y", "x")
        for axis in axes:
            for primary in (0, 1):
                if self._split_along(fp, axis, primary):
                    return True
        return False

    def _split_along(self, fp: RegionPair, axis: str, primary: int) -> bool:
        ax = 0 if axis == "x" else 1
        boundary = fp.boundary()
        spec = self.spec(primary)
        box = fp.poly(primary).bounding_rect()
        lo, hi = (box.x0, box.x1) if ax == 0 else (box.y0, box.y1)
        mid = (lo + hi) / 2
        base = fp.level_a if primary == 0 else fp.level_b
        seen: set = set()
        tried = 0
        # coarse lattice lines first: a level-j line clears every hole
        # deeper than j by construction, so coarse cuts need the fewest
        # exact checks and leave the roomiest children
        for j in range(1, base + 4):
            step = spec.cell_side(j)
            k = mid // step
            cands = []
            for d in range(-6, 8):
                c = (k + d) * step
                # keep the cut in the middle half so both children are
                # a real fraction of the parent; slivers stall progress
                if (4 * (c - lo) >= hi - lo and 4 * (hi - c) >= hi - lo
                        and c not in seen):
                    seen.add(c)
                    cands.append(c)
            cands.sort(key=lambda c: (abs(c - mid), c))
            for c in cands[:12]:
                tried += 1
                if tried > 32:
                    return False
                if self._split_at(fp, boundary, ax, c, j, primary):
                    return True
        return False

    def _line_crossings(self, boundary, side: int, ax: int, c: Fraction):
        """Transversal crossings of an axis line with the face boundary,
        sorted along the line.

        None if the line hits any boundary vertex (no clean crossing
        parity there).  Consecutive pairs in the returned order bound
        alternating inside/outside segments of the line."""
        out = []
        for idx, (arc, orient) in enumerate(boundary):
            pts = arc.pts(side, orient)
            if any(p[ax] == c for p in pts):
                return None
            cum = Fraction(0)
            for i in range(len(pts) - 1):
                a, b = pts[i], pts[i + 1]
                if a[ax] < c < b[ax] or b[ax] < c < a[ax]:
                    p = (c, a[1]) if ax == 0 else (a[0], c)
                    t = cum + abs(p[0] - a[0]) + abs(p[1] - a[1])
                    out.append((idx, arc, orient, t, p))
                cum += abs(b[0] - a[0]) + abs(b[1] - a[1])
        out.sort(key=lambda e: e[4][1 - ax])
        return out

    @staticmethod
    def _inside_pairs(cross, ax: int):
        """Adjacent crossing pairs bounding interior chords, longest
        first, each pair put back into boundary order."""
        pairs = []
        for i in range(0, len(cross) - 1, 2):
            a, b = cross[i], cross[i + 1]
            pair = sorted((a, b), key=lambda e: (e[0], e[3]))
            pairs.append((abs(a[4][1 - ax] - b[4][1 - ax]), i, pair))
        pairs.sort(key=lambda e: (-e[0], e[1]))
        return [p for _, _, p in pairs]

    def _chord_safe(self, fp: RegionPair, side: int, a: Point, b: Point,
                    j: int) -> bool:
        """The chord avoids the open interior of every hole of level <= j;
        being a level-j lattice line it cannot enter deeper ones, and mere
        tangency to a closure edge leaves the hole whole on one side.

        Descends only into cells whose open interior meets the open chord,
        so at each level just one straddled column survives and the walk
        dies out at the chord's own lattice level.  A visit budget keeps
        pathological candidates cheap; running out counts as unsafe."""
        spec = self.spec(side)
        budget = [60000]

        def blocked(rect: Rect, level: int) -> bool:
            if budget[0] <= 0:
                return True
            budget[0] -= 1
            rule = spec.rule_at(level)
            n = rule.grid_n
            s = rect.width / n
            for r0, c0, r1, c1 in rule.blocks:
                hr = Rect(rect.x0 + c0 * s, rect.y0 + r0 * s,
                          rect.x0 + (c1 + 1) * s, rect.y0 + (r1 + 1) * s)
                if segment_meets_rect(a, b, hr, closed=False):
                    return True
            if level >= j:
                return False
            removed = rule.removed
            clo = max(0, int((min(a[0], b[0]) - rect.x0) // s))
            chi = min(n - 1, int((max(a[0], b[0]) - rect.x0) // s))
            rlo = max(0, int((min(a[1], b[1]) - rect.y0) // s))
            rhi = min(n - 1, int((max(a[1], b[1]) - rect.y0) // s))
            for r in range(rlo, rhi + 1):
                for c in range(clo, chi + 1):
                    if (r, c) in removed:
                        continue
                    sub = Rect(rect.x0 + c * s, rect.y0 + r * s,
                               rect.x0 + (c + 1) * s, rect.y0 + (r + 1) * s)
                    if (segment_meets_rect(a, b, sub, closed=False)
                            and blocked(sub, level + 1)):
                        return True
            return False

        return not blocked(Rect(Fraction(0), Fraction(0),
                                Fraction(1), Fraction(1)), 1)

    def _sim_across(self, arc: PairedArc, p: Point, primary: int) -> Point:
        """Image of a hole-edge point under the arc's similarity, taken
        from the primary side toward the partner side."""
        pr = arc.pair_rects
        return sim_point(pr if primary == 0 else (pr[1], pr[0]), p)

    def _split_at(self, fp: RegionPair, boundary, ax: int, c: Fraction,
                  j: int, primary: int) -> bool:
        cross_p = self._line_crossings(boundary, primary, ax, c)
        if cross_p is None:
            return False
        if not self._chord_safe(fp, primary, cross_p[0][4], cross_p[1][4],
                                j):
            return False
        partner = 1 - primary

        forced = None
        for _, arc, _, _, p in cross_p:
            if arc.kind == "hole":
                q = self._sim_across(arc, p, primary)
                if forced is not None and q[ax] != forced:
                    return False
                forced = q[ax]

        pbase = fp.level_a if partner == 0 else fp.level_b
        if self._straight_partner(fp, boundary, ax, cross_p, forced, j,
                                  primary, pbase):
            return True
        return self._routed_partner(fp, boundary, ax, cross_p, j, primary,
                                    pbase)

    def _straight_partner(self, fp, boundary, ax, cross_p, forced, j,
                          primary, pbase) -> bool:
        partner = 1 - primary
        spec = self.spec(partner)
        if forced is not None:
            jq = lattice_level(spec, forced, pbase + 6)
            cands = [(forced, jq)] if jq is not None else []
        else:
            bp = fp.poly(primary).bounding_rect()
            bq = fp.poly(partner).bounding_rect()
            lo_p, hi_p = (bp.x0, bp.x1) if ax == 0 else (bp.y0, bp.y1)
            lo_q, hi_q = (bq.x0, bq.x1) if ax == 0 else (bq.y0, bq.y1)
            c = cross_p[0][4][ax]
            target = lo_q + (c - lo_p) / (hi_p - lo_p) * (hi_q - lo_q)
            cands = []
            seen: set = set()
            for jq in range(1, pbase + 4):
                step = spec.cell_side(jq)
                k = target // step
                for d in (0, 1, -1, 2, -2, 3, -3):
                    cc = (k + d) * step
                    if lo_q < cc < hi_q and cc not in seen:
                        seen.add(cc)
                        cands.append((cc, jq))
            cands.sort(key=lambda e: (abs(e[0] - target), e[0]))
            cands = cands[:10]

        for cq, jq in cands:
            cross_q = self._line_crossings(boundary, partner, ax, cq)
            if cross_q is None:
                continue
            if [e[0] for e in cross_q] != [e[0] for e in cross_p]:
                continue
            ok = True
            for ep, eq in zip(cross_p, cross_q):
                if ep[1].kind == "hole" and \
                        eq[4] != self._sim_across(ep[1], ep[4], primary):
                    ok = False
                    break
            if not ok:
                continue
            if not self._chord_safe(fp, partner, cross_q[0][4],
                                    cross_q[1][4], jq):
                continue
            ends_q = [(eq[3], eq[4]) for eq in cross_q]
            if self._commit_split(fp, boundary, cross_p, ends_q,
                                  (cross_q[0][4], cross_q[1][4]),
                                  primary, j, jq):
                return True
        return False

    def _routed_partner(self, fp, boundary, ax, cross_p, j, primary,
                        pbase) -> bool:
        """Partner cut as a staircase path between the paired arcs."""
        partner = 1 - primary
        spec = self.spec(partner)
        a0, a1 = cross_p[0][1], cross_p[1][1]
        pts0 = a0.pts(partner, cross_p[0][2])
        pts1 = a1.pts(partner, cross_p[1][2])

        def prop_t(ep, pts):
            plen = polyline_length(ep[1].pts(primary, ep[2]))
            return ep[3] / plen * polyline_length(pts)

        # terminal constraint on the far arc
        if a1.kind == "hole":
            q1 = self._sim_across(a1, cross_p[1][4], primary)
            try:
                t1 = arc_position(pts1, q1)
            except ValueError:
                return False
            if t1 == 0 or t1 == polyline_length(pts1):
                return False
            con = ("exact", a1, q1)
            tpts = [q1]
        else:
            con = ("near", a1, prop_t(cross_p[1], pts1))
            tpts = []

        # start candidates on the near arc
        if a0.kind == "hole":
            starts = [self._sim_across(a0, cross_p[0][4], primary)]
        else:
            t0 = prop_t(cross_p[0], pts0)
            starts = _polyline_lattice_points(
                pts0, t0, spec, pbase + 3, want=5)
        if not starts:
            return False

        for start in starts:
            try:
                t_start = arc_position(pts0, start)
            except ValueError:
                continue
            if t_start == 0 or t_start == polyline_length(pts0):
                continue
            level = _level_holding(spec, [start] + tpts, pbase, pbase + 6)
            if level is None:
                continue
            d = _inward_normal(pts0, start)
            if d is None:
                continue
            spoke = self._route_free(fp, boundary, partner, level, start,
                                     d, con)
            if spoke is None or spoke.arc is not a1:
                continue
            ends_q = [(t_start, start), (spoke.t_local, spoke.terminal)]
            if self._commit_split(fp, boundary, cross_p, ends_q,
                                  tuple(spoke.pts), primary, j, level):
                return True
        return False

    def _route_free(self, fp, boundary, side, level, start, d, con):
        """One boundary-to-boundary staircase on a face, clear of every
        unexposed hole closure (no ring bookkeeping: dummy far hole)."""
        arc_order = [arc for arc, _ in boundary]
        spts = {arc: arc.pts(side, o) for arc, o in boundary}
        dummy = Hole(((-1, -1),), 1,
                     Rect(Fraction(-3), Fraction(-3),
                          Fraction(-2), Fraction(-2)))
        router = SpokeRouter(self.spec(side), dummy, arc_order, spts,
                             fp.poly(side), set(self.exposed(side)),
                             node_budget=20000)
        try:
            router._setup_lattice(level)
            return router._bfs_spoke(start, d, con, None, None,
                                     set(), set())
        except RouteFailure:
            return None

    def _commit_split(self, fp: RegionPair, boundary, cross_p, ends_q,
                      chord_q_pts, primary: int, jp: int, jq: int) -> bool:
        """Assemble, check and commit the two child pairs.

        cross_p: the primary side's two chord crossings in boundary
        order; ends_q: the partner's (t, point) on the same arcs;
        chord_q_pts: the partner cut polyline from the first crossing's
        partner point to the second's."""
        chord_p_pts = (cross_p[0][4], cross_p[1][4])
        if primary == 0:
            attaches = [(ep[1], ep[2], ep[3], tq, ep[4], pq)
                        for ep, (tq, pq) in zip(cross_p, ends_q)]
            chord_a, chord_b = chord_p_pts, chord_q_pts
            ja, jb = jp, jq
        else:
            attaches = [(ep[1], ep[2], tq, ep[3], pq, ep[4])
                        for ep, (tq, pq) in zip(cross_p, ends_q)]
            chord_a, chord_b = chord_q_pts, chord_p_pts
            ja, jb = jq, jp

        att: dict = {}
        for k, (arc, _, ta, tb, _, _) in enumerate(attaches):
            att.setdefault(arc, []).append((ta, tb, k))

        items: list = []
        commits: list = []
        for arc, orient in boundary:
            lst = sorted(att.get(arc, []))
            if not lst:
                items.append(("piece", arc, orient))
                continue
            if [e[1] for e in lst] != sorted(e[1] for e in lst):
                return False
            try:
                a_pieces = _split_polyline_at(arc.pts(0, orient),
                                              [e[0] for e in lst])
                b_pieces = _split_polyline_at(arc.pts(1, orient),
                                              [e[1] for e in lst])
            except RouteFailure:
                return False
            face_pieces = []
            for apc, bpc in zip(a_pieces, b_pieces):
                if orient == -1:
                    apc, bpc = list(reversed(apc)), list(reversed(bpc))
                face_pieces.append(PairedArc(arc.kind, apc, bpc,
                                             arc.pair_rects))
            commits.append((arc, face_pieces if orient == 1
                            else list(reversed(face_pieces))))
            for j2, piece in enumerate(face_pieces):
                items.append(("piece", piece, orient))
                if j2 < len(lst):
                    items.append(("attach", lst[j2][2]))

        pos = {it[1]: idx for idx, it in enumerate(items)
               if it[0] == "attach"}
        if len(pos) != 2:
            return False
        n = len(items)
        chord = PairedArc("spoke", chord_a, chord_b)

        def chain(kf, kt):
            arcs = []
            idx = (pos[kf] + 1) % n
            while idx != pos[kt]:
                it = items[idx]
                if it[0] != "piece":
                    return None
                arcs.append((it[1], it[2]))
                idx = (idx + 1) % n
            return arcs

        c0, c1 = chain(0, 1), chain(1, 0)
        if not c0 or not c1:
            return False
        la, lb = max(fp.level_a, ja), max(fp.level_b, jb)
        kids = [RegionPair(c0 + [(chord, -1)], la, lb),
                RegionPair(c1 + [(chord, 1)], la, lb)]
        for ch in kids:
            for side in (0, 1):
                if ch.poly(side).signed_area <= 0:
                    return False
        for side in (0, 1):
            if kids[0].poly(side).area + kids[1].poly(side).area \
                    != fp.poly(side).area:
                return False
        for pid in fp.pending:
            pa, pb = self.prescribed[pid]
            ia = [i for i, ch in enumerate(kids)
                  if ch.poly(0).contains_rect(pa.rect, strict=True)]
            ib = [i for i, ch in enumerate(kids)
                  if ch.poly(1).contains_rect(pb.rect, strict=True)]
            if len(ia) != 1 or ia != ib:
                return False

        kids.sort(key=lambda ch: (ch.poly(0).bounding_rect().x0,
                                  ch.poly(0).bounding_rect().y0))
        for arc, subs in commits:
            arc.subs = subs
        fp.move = "SPLIT"
        fp.children = kids
        self._assign_pending(fp)
        return True

    # -- stage views -------------------------------------------------------

    def stage_subdivision(self, k: int, side: int) -> Subdivision:
        rec = self.stages[k - 1]
        cells = tuple(leaf.cell(side) for leaf in rec.leaves)
        exposed = self.exposed(side)
        rel = tuple(exposed[pair[side]] for pair in rec.bijection)
        return Subdivision(self.spec(side), rel + (OUTER,), cells,
                           rec.epsilon)

    def to_json(self) -> dict:
        from .carpet import spec_to_json
        final = self.stages[-1].leaves if self.stages else ()
        return {
            "spec_a": spec_to_json(self.spec_a),
            "spec_b": spec_to_json(self.spec_b),
            "stages": [{
                "epsilon": format_frac(rec.epsilon),
                "cells": len(rec.leaves),
                "bijection": [[list(map(list, a)), list(map(list, b))]
                              for a, b in rec.bijection],
            } for rec in self.stages],
            "leaves": [{"a": leaf.poly(0).to_json(),
                        "b": leaf.poly(1).to_json()} for leaf in final],
        }


def plan_correspondence(spec_a: CarpetSpec, spec_b: CarpetSpec,
                        prescribed: Sequence = (),
                        schedule: Sequence[Fraction] | None = None,
                        max_stage: int = 3) -> Correspondence:
    """Build a synchronized correspondence with stage tolerances.

    schedule defaults to eps_k = 2^-k over max_stage stages; it must be
    strictly decreasing and positive.  Prescribed hole-address pairs are
    exposed first and honored through every refinement.
    """
    if schedule is None:
        schedule = [Fraction(1, 2 ** k) for k in range(1, max_stage + 1)]
    schedule = [Fraction(e) for e in schedule]
    if any(e <= 0 for e in schedule) or \
            any(schedule[i + 1] >= schedule[i]
                for i in range(len(schedule) - 1)):
        raise ValueError("schedule must be strictly decreasing and positive")
    corr = Correspondence(spec_a, spec_b, prescribed)
    corr._plan(schedule)
    return corr


def expose_hole(corr: Correspondence, side: int, address,
                max_rounds: int = 4) -> int:
    """Targeted deepening: refine until the addressed hole is exposed.

    Returns the number of refinement rounds used.  A hole strictly inside
    a leaf is exposable in one round; the budget covers pathological
    nesting.
    """
    address = tuple(tuple(rc) for rc in address)
    hole = hole_by_address(corr.spec(side), address)
    rounds = 0
    while address not in corr.exposed(side):
        if rounds >= max_rounds:
            raise CorrespondenceError(
                DEPTH_EXHAUSTED, f"hole {address} not exposed after "
                f"{max_rounds} rounds")
        owner = [lf for lf in corr.leaves()
                 if lf.poly(side).contains_rect(hole.rect, strict=True)]
        if len(owner) != 1:
            raise CorrespondenceError(
                DEPTH_EXHAUSTED, f"hole {address} is not strictly interior "
                f"to a unique leaf")
        corr._refine(owner[0], force=(side, hole))
        rounds += 1
    return rounds


def modulus_delta(corr: Correspondence, k: int, eps) -> float:
    """Largest delta with: paired-cell diameter < delta on one side forces
    diameter < eps on the other, over stage-k cell pairs (capped at the
    square diagonal)."""
    cap = math.sqrt(2)
    eps_f = float(eps)
    if eps_f >= cap:
        return cap
    rec = corr.stages[k - 1]
    best = cap
    for leaf in rec.leaves:
        da = math.sqrt(float(leaf.diam_sq(0)))
        db = math.sqrt(float(leaf.diam_sq(1)))
        ratio = min(da / db, db / da)
        best = min(best, eps_f * ratio)
    return best


# ---------------------------------------------------------------------------
# validation


def _segment_avoids(seg_a, seg_b, rect, closed):
    from .geometry import segment_meets_rect
    return not segment_meets_rect(seg_a, seg_b, rect, closed=closed)


def validate_correspondence(corr: Correspondence, depth: int = 2,
                            pairwise_limit: int = 2000) -> dict:
    """Exact verification of the correspondence invariants.

    Checks stage diameters, bijection injectivity and monotonicity, exact
    tiling at every node, boundary exactness of every final cell against
    unexposed holes, chain/orientation integrity of every leaf pair, and
    exposure-or-interiority of every hole up to `depth`.  Pairwise open
    overlap of cells is brute-forced when the final stage has at most
    pairwise_limit cells (the per-node tiling identity covers the rest).
    """
    from .geometry import segment_meets_rect
    failures: list[dict] = []
    if not corr.stages:
        return {"pass": True, "failures": [], "stages": 0}

    for k, rec in enumerate(corr.stages, 1):
        eps2 = rec.epsilon ** 2
        for leaf in rec.leaves:
            for side in (0, 1):
                if leaf.diam_sq(side) >= eps2:
                    failures.append({"check": "diameter", "stage": k,
                                     "side": side,
                                     "rect": leaf.poly(side).bounding_rect()})
        a_addrs = [p[0] for p in rec.bijection]
        b_addrs = [p[1] for p in rec.bijection]
        if len(set(a_addrs)) != len(a_addrs) or \
                len(set(b_addrs)) != len(b_addrs):
            failures.append({"check": "bijection_injective", "stage": k})
        if tuple(corr.bijection[:len(rec.bijection)]) != rec.bijection:
            failures.append({"check": "bijection_monotone", "stage": k})

    # exact tiling at every expose node, plus chain integrity of leaves
    stack = [corr.root]
    while stack:
        node = stack.pop()
        if not node.children:
            for side in (0, 1):
                chain = node.polyline(side, expanded=True)
                if node.poly(side).signed_area <= 0:
                    failures.append({"check": "orientation", "side": side})
                for i in range(len(chain)):
                    a, b = chain[i], chain[(i + 1) % len(chain)]
                    if a != b and a[0] != b[0] and a[1] != b[1]:
                        failures.append({"check": "chain", "side": side})
                        break
            continue
        for side, hole in ((0, node.hole_a), (1, node.hole_b)):
            total = sum(ch.poly(side).area for ch in node.children)
            removed = hole.rect.area if hole is not None else Fraction(0)
            if total + removed != node.poly(side).area:
                failures.append({"check": "tiling", "side": side,
                                 "hole": hole.address if hole else None})
        stack.extend(node.children)

    final = corr.stages[-1].leaves
    # boundary exactness: segments of every final cell avoid closures of
    # unexposed holes (up to the cell's own lattice level) and interiors
    # of exposed holes
    for leaf in final:
        for side in (0, 1):
            spec = corr.spec(side)
            exposed = corr.exposed(side)
            level = leaf.level_a if side == 0 else leaf.level_b
            chain = leaf.polyline(side)
            bbox = leaf.poly(side).bounding_rect()
            local = holes_in_rect(spec, level, bbox)
            for i in range(len(chain)):
                a, b = chain[i], chain[(i + 1) % len(chain)]
                for h in local:
                    if h.address in exposed:
                        if segment_meets_rect(a, b, h.rect, closed=False):
                            failures.append({"check": "boundary_open",
                                             "side": side,
                                             "hole": h.address})
                    elif segment_meets_rect(a, b, h.rect, closed=True):
                        failures.append({"check": "boundary_closed",
                                         "side": side, "hole": h.address})

    did_pairwise = len(final) <= pairwise_limit
    if did_pairwise:
        from .subdivision import _interiors_overlap
        for side in (0, 1):
            polys = [leaf.poly(side) for leaf in final]
            order = sorted(range(len(polys)),
                           key=lambda i: polys[i].bounding_rect().x0)
            active: list[int] = []
            for i in order:
                bi = polys[i].bounding_rect()
                active = [j for j in active
                          if polys[j].bounding_rect().x1 > bi.x0]
                for j in active:
                    if _interiors_overlap(polys[i], polys[j]):
                        failures.append({"check": "overlap", "side": side,
                                         "cells": (j, i)})
                active.append(i)

    # every hole of level <= depth is exposed or strictly interior to
    # exactly one final cell
    for side in (0, 1):
        spec = corr.spec(side)
        exposed = corr.exposed(side)
        boxes = [(float(leaf.poly(side).bounding_rect().x0),
                  float(leaf.poly(side).bounding_rect().y0),
                  float(leaf.poly(side).bounding_rect().x1),
                  float(leaf.poly(side).bounding_rect().y1), leaf)
                 for leaf in final]
        for h in holes_in_rect(spec, depth, UNIT):
            if h.address in exposed:
                continue
            fx0, fy0 = float(h.rect.x0), float(h.rect.y0)
            fx1, fy1 = float(h.rect.x1), float(h.rect.y1)
            owners = 0
            for bx0, by0, bx1, by1, leaf in boxes:
                if bx0 - 1e-12 <= fx0 and fx1 <= bx1 + 1e-12 \
                        and by0 - 1e-12 <= fy0 and fy1 <= by1 + 1e-12:
                    if leaf.poly(side).contains_rect(h.rect, strict=True):
                        owners += 1
            if owners != 1:
                failures.append({"check": "exhaustion", "side": side,
                                 "hole": h.address, "owners": owners})

    for pid, (pa, pb) in corr.prescribed.items():
        if (pa.address, pb.address) not in corr.bijection:
            failures.append({"check": "prescribed", "pair": pid})

    return {"pass": not failures, "failures": failures[:50],
            "failure_count": len(failures),
            "stages": len(corr.stages), "final_cells": len(final),
            "pairwise_checked": did_pairwise}
