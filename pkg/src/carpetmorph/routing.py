"""Staircase routing of ring spokes on an exact lattice.

A refinement move surrounds a hole with eight spokes running from the
hole's corners out to the face boundary (two per corner, one per
perpendicular direction, counterclockwise).  A spoke is the straight
perpendicular segment when that avoids every unexposed hole closure;
otherwise it is a shortest staircase path on a fine grid, node-disjoint
from the other spokes and clear of every unexposed hole of checkable
level.  Incidence tests are exact: the lattice is fine enough that node
membership certifies segment avoidance, and a lattice line of level j
cannot meet the closure of any hole of level > j.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from heapq import heappop, heappush
from fractions import Fraction
from typing import Callable, Sequence

from .carpet import CarpetSpec, Hole, holes_in_rect
from .geometry import (Point, Polygon, Rect, point_on_segment,
                       polyline_length, segment_meets_rect,
                       segments_cross_properly, simplify_polyline)

# spoke order around the hole: (corner selector, outward direction), CCW
SPOKES = [((0, 0), (0, -1)), ((1, 0), (0, -1)),
          ((1, 0), (1, 0)), ((1, 1), (1, 0)),
          ((1, 1), (0, 1)), ((0, 1), (0, 1)),
          ((0, 1), (-1, 0)), ((0, 0), (-1, 0))]


class RouteFailure(Exception):
    pass


def hole_corner(rect: Rect, key: tuple[int, int]) -> Point:
    return (rect.x0 if key[0] == 0 else rect.x1,
            rect.y0 if key[1] == 0 else rect.y1)


@dataclass
class SpokeResult:
    pts: tuple[Point, ...]      # corner -> boundary terminal
    arc: object                 # arc key the terminal lies on
    terminal: Point
    t_local: Fraction           # exact position along the arc polyline
    straight: bool


def arc_position(pts: Sequence[Point], p: Point) -> Fraction:
    """Exact distance along an axis-aligned polyline to a point on it."""
    cum = Fraction(0)
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        if point_on_segment(p, a, b):
            return cum + abs(p[0] - a[0]) + abs(p[1] - a[1])
        cum += abs(b[0] - a[0]) + abs(b[1] - a[1])
    raise ValueError("point is not on the polyline")


def point_at_position(pts: Sequence[Point], t: Fraction) -> Point:
    """Inverse of arc_position."""
    cum = Fraction(0)
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        seg = abs(b[0] - a[0]) + abs(b[1] - a[1])
        if cum + seg >= t:
            r = (t - cum) / seg
            return (a[0] + (b[0] - a[0]) * r, a[1] + (b[1] - a[1]) * r)
        cum += seg
    raise ValueError("position beyond the polyline")


def _segments_touch(a: Point, b: Point, c: Point, d: Point,
                    allowed: Point | None) -> bool:
    """Whether two axis-aligned segments share a point besides `allowed`."""
    if segments_cross_properly(a, b, c, d):
        return True
    pts = [p for p in (a, b) if point_on_segment(p, c, d)]
    pts += [p for p in (c, d) if point_on_segment(p, a, b)]
    return any(p != allowed for p in pts)


def _polyline_touches(seg_a: Point, seg_b: Point, pts: Sequence[Point],
                      allowed: Point | None) -> bool:
    return any(_segments_touch(seg_a, seg_b, pts[i], pts[i + 1], allowed)
               for i in range(len(pts) - 1))


class SpokeRouter:
    """Routes the eight spokes for one side of one refinement move.

    arcs: cyclic CCW list of arc keys; arc_pts maps each key to its
    polyline on this side, oriented along the face boundary.
    constraints[i] is None, ("near", arc, t_local_pref) or
    ("exact", arc, point).  arc_filter maps an arc to a predicate that
    admissible terminal points on it must satisfy.
    """

    def __init__(self, spec: CarpetSpec, hole: Hole, arcs: Sequence,
                 arc_pts: dict, poly: Polygon, exposed: set,
                 constraints: Sequence | None = None,
                 arc_filter: dict | None = None,
                 banned: Sequence | None = None,
                 node_budget: int = 250000,
                 hug: bool = False):
        self.spec = spec
        self.hole = hole
        self.arcs = list(arcs)
        self.arc_pts = arc_pts
        self.poly = poly
        self.exposed = exposed
        self.constraints = constraints
        self.arc_filter = arc_filter or {}
        self.banned = banned   # per-spoke sets of arcs a terminal may not use
        self._ban_now: frozenset = frozenset()
        self._visits = 0
        self.node_budget = node_budget
        self.hug = hug
        self.arc_len = {a: polyline_length(arc_pts[a]) for a in self.arcs}
        self.arc_off: dict = {}
        t = Fraction(0)
        for a in self.arcs:
            self.arc_off[a] = t
            t += self.arc_len[a]
        self.total_len = t
        self.bbox = poly.bounding_rect()

    def global_t(self, arc, t_local: Fraction) -> Fraction:
        return self.arc_off[arc] + t_local

    def _rot(self, t: Fraction, origin: Fraction) -> Fraction:
        return (t - origin) % self.total_len

    # -- straight spokes ---------------------------------------------------

    def _ray_exit(self, corner: Point, d: tuple[int, int]):
        """First boundary contact of the axis ray from the corner, or None.

        Ambiguous contacts (vertex hits, rays along the boundary) are
        reported so the caller falls back to lattice routing.
        """
        cx, cy = corner
        vertical = d[0] == 0
        best = None
        collinear = False
        for arc in self.arcs:
            pts = self.arc_pts[arc]
            for i in range(len(pts) - 1):
                a, b = pts[i], pts[i + 1]
                if vertical:
                    if a[1] == b[1]:
                        y = a[1]
                        ahead = y < cy if d[1] < 0 else y > cy
                        lo, hi = (a[0], b[0]) if a[0] <= b[0] else (b[0], a[0])
                        if ahead and lo <= cx <= hi:
                            dist = abs(y - cy)
                            if best is None or dist < best[0]:
                                best = (dist, arc, (cx, y), a, b)
                    elif a[0] == cx:
                        collinear = True
                else:
                    if a[0] == b[0]:
                        x = a[0]
                        ahead = x < cx if d[0] < 0 else x > cx
                        lo, hi = (a[1], b[1]) if a[1] <= b[1] else (b[1], a[1])
                        if ahead and lo <= cy <= hi:
                            dist = abs(x - cx)
                            if best is None or dist < best[0]:
                                best = (dist, arc, (x, cy), a, b)
                    elif a[1] == cy:
                        collinear = True
        if best is None:
            return None
        _, arc, exit_pt, a, b = best
        ambiguous = collinear or exit_pt in (a, b)
        return arc, exit_pt, ambiguous

    def _straight_ok(self, corner: Point, exit_pt: Point,
                     prev: list[Sequence[Point]]) -> bool:
        seg_box = Rect(min(corner[0], exit_pt[0]), min(corner[1], exit_pt[1]),
                       max(corner[0], exit_pt[0]), max(corner[1], exit_pt[1]))
        for h in holes_in_rect(self.spec, self.hole.level, seg_box):
            if h.address in self.exposed or h.address == self.hole.address:
                continue
            if segment_meets_rect(corner, exit_pt, h.rect, closed=True):
                return False
        return not any(_polyline_touches(corner, exit_pt, pts, corner)
                       for pts in prev)

    # -- lattice context ---------------------------------------------------

    def _setup_lattice(self, level: int):
        D = 1
        for j in range(1, level + 1):
            D *= self.spec.rule_at(j).grid_n
        self.D = D
        self.level = level
        w = D
        self.widths = [D]      # widths[j] = level-j cell side in lattice units
        for j in range(1, level + 1):
            w //= self.spec.rule_at(j).grid_n
            self.widths.append(w)
        self._interior_memo: dict = {}
        self._row_cross: dict = {}   # y -> sorted x's of edge crossings

        verts = []
        for v in self.poly.vertices:
            verts.append(self.scale(v))
        self.iedges = [(verts[i], verts[(i + 1) % len(verts)])
                       for i in range(len(verts))]
        self._vedges = [(ax, ay, by) if ay <= by else (ax, by, ay)
                        for (ax, ay), (bx, by) in self.iedges if ax == bx]
        self.bsegs = []   # (p0, p1, arc, t_local at p0)
        self.vsegs: dict = {}   # x -> [(ylo, yhi, a, arc, cum)]
        self.hsegs: dict = {}   # y -> [(xlo, xhi, a, arc, cum)]
        self.arc_next = {self.arcs[i]: self.arcs[(i + 1) % len(self.arcs)]
                         for i in range(len(self.arcs))}
        for arc in self.arcs:
            pts = self.arc_pts[arc]
            cum = Fraction(0)
            for i in range(len(pts) - 1):
                a, b = self.scale(pts[i]), self.scale(pts[i + 1])
                self.bsegs.append((a, b, arc, cum))
                if a[0] == b[0]:
                    self.vsegs.setdefault(a[0], []).append(
                        (min(a[1], b[1]), max(a[1], b[1]), a, arc, cum))
                else:
                    self.hsegs.setdefault(a[1], []).append(
                        (min(a[0], b[0]), max(a[0], b[0]), a, arc, cum))
                cum += Fraction(abs(b[0] - a[0]) + abs(b[1] - a[1]), D)
        hr = self.hole.rect
        self.ihole = (int(hr.x0 * D), int(hr.y0 * D),
                      int(hr.x1 * D), int(hr.y1 * D))

    def scale(self, p: Point):
        x, y = p[0] * self.D, p[1] * self.D
        if x.denominator != 1 or y.denominator != 1:
            raise RouteFailure("coordinate off the routing lattice")
        return (int(x), int(y))

    def _on_boundary(self, v):
        x, y = v
        for lo, hi, a, arc, cum in self.vsegs.get(x, ()):
            if lo <= y <= hi:
                t = cum + Fraction(abs(y - a[1]), self.D)
                return self._normalize(arc, t)
        for lo, hi, a, arc, cum in self.hsegs.get(y, ()):
            if lo <= x <= hi:
                t = cum + Fraction(abs(x - a[0]), self.D)
                return self._normalize(arc, t)
        return None

    def _normalize(self, arc, t_local: Fraction):
        # junction vertices belong to the start of the next arc
        if t_local == self.arc_len[arc]:
            return self.arc_next[arc], Fraction(0)
        return arc, t_local

    def _touches_forbidden(self, x: int, y: int) -> bool:
        """Whether the lattice node lies on the closure of any unexposed
        hole of level <= the routing level (all-integer cell descent)."""
        spec = self.spec
        L = self.level
        stack = [(1, x, y, ())]
        while stack:
            j, rx, ry, path = stack.pop()
            if j > L:
                continue
            w = self.widths[j]
            rule = spec.rule_at(j)
            n = rule.grid_n
            c, mx = divmod(rx, w)
            r, my = divmod(ry, w)
            cols = (c,) if mx else tuple(cc for cc in (c - 1, c)
                                         if 0 <= cc < n)
            rows = (r,) if my else tuple(rr for rr in (r - 1, r)
                                         if 0 <= rr < n)
            removed = rule.removed
            anchors = rule.anchor_of
            for rr in rows:
                for cc in cols:
                    if (rr, cc) in removed:
                        addr = path + (anchors[(rr, cc)],)
                        if addr != self.hole.address \
                                and addr not in self.exposed:
                            return True
                    else:
                        stack.append((j + 1, rx - cc * w, ry - rr * w,
                                      path + ((rr, cc),)))
        return False

    def _interior_ok(self, v) -> bool:
        memo = self._interior_memo
        got = memo.get(v)
        if got is not None:
            return got
        x, y = v
        hx0, hy0, hx1, hy1 = self.ihole
        ok = not (hx0 <= x <= hx1 and hy0 <= y <= hy1)
        if ok:
            ok = not self._touches_forbidden(x, y)
        if ok:
            row = self._row_cross.get(y)
            if row is None:
                row = sorted(ax for ax, lo, hi in self._vedges
                             if lo <= y < hi)
                self._row_cross[y] = row
            # odd number of crossings strictly right of x = inside
            ok = (len(row) - bisect_right(row, x)) % 2 == 1
        memo[v] = ok
        return ok

    # -- main entry ---------------------------------------------------------

    def route_at(self, level: int) -> list[SpokeResult]:
        self._setup_lattice(level)
        results: list[SpokeResult] = []
        prev_polylines: list[Sequence[Point]] = []
        used_nodes: set = set()
        used_terminals: set = set()
        origin = None
        prev_rot = None
        self._visits = 0

        for i, (ckey, d) in enumerate(SPOKES):
            corner = hole_corner(self.hole.rect, ckey)
            con = self.constraints[i] if self.constraints else None
            self._ban_now = frozenset(self.banned[i]) if self.banned \
                else frozenset()

            try:
                if self.hug and i > 0:
                    # the first spoke has no routed neighbor to follow (the
                    # follower would orbit the hole); steer it instead
                    spoke = self._hug_spoke(corner, d, con, origin, prev_rot,
                                            used_nodes, used_terminals)
                elif self.hug:
                    spoke = self._bfs_spoke(corner, d, con, origin, prev_rot,
                                            used_nodes, used_terminals)
                else:
                    spoke = self._try_straight(corner, d, con, origin,
                                               prev_rot, used_terminals,
                                               prev_polylines)
                    if spoke is None:
                        spoke = self._bfs_spoke(corner, d, con, origin,
                                                prev_rot, used_nodes,
                                                used_terminals)
            except RouteFailure as e:
                if not getattr(e, "budget_cut", False):
                    e.spoke_index = i
                    raise
                # inconclusive search: walk instead of flooding
                try:
                    spoke = self._pledge_spoke(corner, d, con, origin,
                                               prev_rot, used_nodes,
                                               used_terminals)
                except RouteFailure as e2:
                    e2.spoke_index = i
                    raise

            t_glob = self.global_t(spoke.arc, spoke.t_local)
            if origin is None:
                origin, prev_rot = t_glob, Fraction(0)
            else:
                rot = self._rot(t_glob, origin)
                if rot <= prev_rot:
                    raise RouteFailure("cyclic order violated")
                prev_rot = rot

            results.append(spoke)
            prev_polylines.append(spoke.pts)
            used_nodes.update(self._polyline_nodes(spoke.pts))
            used_terminals.add(self.scale(spoke.terminal))
        return results

    def _terminal_allowed(self, arc, p: Point, t_local: Fraction,
                          con, origin, prev_rot, used_terminals) -> bool:
        node = self.scale(p)
        if node in used_terminals or arc in self._ban_now:
            return False
        if con is not None:
            if con[0] == "exact":
                return arc is con[1] and p == con[2]
            # a "near" partner attached strictly inside its arc, so the
            # matching terminal must too (splits must mirror each other)
            if arc is not con[1] or t_local == 0:
                return False
        if t_local != 0:
            filt = self.arc_filter.get(arc)
            if filt is not None and not filt(p):
                return False
        if origin is not None:
            if self._rot(self.global_t(arc, t_local), origin) <= prev_rot:
                return False
        return True

    def _pref_t(self, con, corner, d):
        """Global-position preference for a spoke's terminal."""
        if con is not None:
            if con[0] == "exact":
                return self.global_t(con[1],
                                     arc_position(self.arc_pts[con[1]],
                                                  con[2]))
            return self.global_t(con[1], con[2])
        hit = self._ray_exit(corner, d)
        if hit is None:
            return None
        arc, exit_pt, _ = hit
        return self.global_t(arc, arc_position(self.arc_pts[arc], exit_pt))

    def _try_straight(self, corner, d, con, origin, prev_rot,
                      used_terminals, prev_polylines):
        hit = self._ray_exit(corner, d)
        if hit is None:
            return None
        arc, exit_pt, ambiguous = hit
        if ambiguous:
            return None
        try:
            t_local = arc_position(self.arc_pts[arc], exit_pt)
        except ValueError:
            return None
        try:
            ok = self._terminal_allowed(arc, exit_pt, t_local, con, origin,
                                        prev_rot, used_terminals)
        except RouteFailure:
            return None
        if not ok or not self._straight_ok(corner, exit_pt, prev_polylines):
            return None
        return SpokeResult((corner, exit_pt), arc, exit_pt, t_local, True)

    def _polyline_nodes(self, pts: Sequence[Point]):
        nodes = []
        ints = [self.scale(p) for p in pts]
        for i in range(len(ints) - 1):
            (ax, ay), (bx, by) = ints[i], ints[i + 1]
            if ax == bx:
                step = 1 if by > ay else -1
                nodes.extend((ax, y) for y in range(ay, by, step))
            else:
                step = 1 if bx > ax else -1
                nodes.extend((x, ay) for x in range(ax, bx, step))
        nodes.append(ints[-1])
        return nodes

    def _pref_point(self, con, corner, d):
        """Float target the search steers toward, or None."""
        if con is not None:
            if con[0] == "exact":
                p = con[2]
            else:
                p = point_at_position(self.arc_pts[con[1]], con[2])
            return float(p[0] * self.D), float(p[1] * self.D)
        hit = self._ray_exit(corner, d)
        if hit is None:
            return None
        _, exit_pt, _ = hit
        return float(exit_pt[0] * self.D), float(exit_pt[1] * self.D)

    def _bfs_spoke(self, corner, d, con, origin, prev_rot,
                   used_nodes, used_terminals) -> SpokeResult:
        start = self.scale(corner)
        t_pref = self._pref_t(con, corner, d)
        target = self._pref_point(con, corner, d)
        D = self.D

        def h(v) -> float:
            # weighted heuristic: terminals just need to be admissible, not
            # shortest-path optimal, so steer hard toward the preferred one
            if target is None:
                return 0.0
            return 6.0 * (abs(v[0] - target[0]) + abs(v[1] - target[1]))

        parent = {start: None}
        candidates = []   # (|t-t_pref| float, dist, node, arc, t_local)
        cand_f = None
        hx0, hy0, hx1, hy1 = self.ihole
        sx, sy = start

        def step_cost(v) -> int:
            """Hugging the hole, the face boundary, or another spoke's
            radial line is discouraged (not banned) so later spokes keep
            their corridors and can still reach the boundary."""
            x, y = v
            if d[0] == 0:
                own = x == sx and (y - sy) * d[1] > 0
            else:
                own = y == sy and (x - sx) * d[0] > 0
            if own:
                return 1
            if hx0 - 1 <= x <= hx1 + 1 and hy0 - 1 <= y <= hy1 + 1:
                # the one-node ring around the hole is every spoke's
                # doorstep; squatting on it can seal a later spoke's only
                # exit, so keep it near-forbidden off the own ray
                return 911
            if (x == hx0 or x == hx1) and not hy0 <= y <= hy1:
                return 7
            if (y == hy0 or y == hy1) and not hx0 <= x <= hx1:
                return 7
            for u in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                if u in used_nodes or self._on_boundary(u) is not None:
                    return 7
            return 1

        def consider(v, dv) -> bool:
            """Record v if it is a boundary node; True = do not expand."""
            info = self._on_boundary(v)
            if info is None:
                return False
            arc, t_local = info
            p = (Fraction(v[0], D), Fraction(v[1], D))
            if self._terminal_allowed(arc, p, t_local, con, origin,
                                      prev_rot, used_terminals):
                pref = abs(float(t_local + self.arc_off[arc] - t_pref)
                           * D) if t_pref is not None else 0.0
                candidates.append((pref, dv, v, arc, t_local))
            return True

        heap = []
        for dd in ((d[0], d[1]), (-d[1], d[0]), (d[1], -d[0]),
                   (-d[0], -d[1])):
            v = (start[0] + dd[0], start[1] + dd[1])
            if v in parent or v in used_nodes:
                continue
            parent[v] = start
            if not consider(v, 1) and self._interior_ok(v):
                g = step_cost(v)
                heappush(heap, (g + h(v), g, v))
        while heap:
            f, g, u = heappop(heap)
            if cand_f is not None and f > cand_f + 96:
                break
            for dd in ((0, -1), (1, 0), (0, 1), (-1, 0)):
                v = (u[0] + dd[0], u[1] + dd[1])
                if v in parent:
                    continue
                parent[v] = u
                if consider(v, g + 1):
                    # vertex landings are a last resort: only an interior
                    # candidate arms the early cut-off
                    if cand_f is None and any(c[4] != 0 for c in candidates):
                        cand_f = f
                    continue
                if v in used_nodes or not self._interior_ok(v):
                    continue
                gv = g + step_cost(v)
                heappush(heap, (gv + h(v), gv, v))
                self._visits += 1
            if self._visits > self.node_budget:
                budget_cut = True
                break
        else:
            budget_cut = False
        if not candidates:
            e = RouteFailure("no reachable terminal for spoke")
            # a budget-cut search proves nothing about reachability
            e.no_terminal = not budget_cut
            e.budget_cut = budget_cut
            raise e
        candidates.sort(key=lambda c: (c[0], c[1], c[2]))
        _, _, node, arc, t_local = candidates[0]
        path = [node]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        path.reverse()
        path = self._rectify(path, used_nodes)
        pts = simplify_polyline([(Fraction(x, D), Fraction(y, D))
                                 for x, y in path])
        return SpokeResult(tuple(pts), arc, pts[-1], t_local, False)

    def _hug_spoke(self, corner, d, con, origin, prev_rot,
                   used_nodes, used_terminals) -> SpokeResult:
        """Rightmost-first search, stopping at the first admissible
        terminal.

        Spokes are routed counter-clockwise, so the wall on a spoke's
        right is made of spokes already placed; hugging it leaves the
        largest possible region for the spokes still to come.  Slower
        and uglier than the steered search, but it cannot wedge a later
        spoke into a dead pocket, so it serves as the fallback when the
        steered pass fails."""
        start = self.scale(corner)
        hx0, hy0, hx1, hy1 = self.ihole
        sx, sy = start
        D = self.D

        def on_ray(v):
            if d[0] == 0:
                return v[0] == sx and (v[1] - sy) * d[1] > 0
            return v[1] == sy and (v[0] - sx) * d[0] > 0

        def enterable(v):
            if v in used_nodes or not self._interior_ok(v):
                return False
            if on_ray(v):
                return True
            # the doorstep ring stays reserved for the other spokes' rays
            return not (hx0 - 1 <= v[0] <= hx1 + 1
                        and hy0 - 1 <= v[1] <= hy1 + 1)

        # right-hand wall follower with loop cutting: deterministic, cost
        # proportional to the wall perimeter walked, not the region area
        pos, heading = start, d
        path = [start]
        idx = {start: 0}
        seen: set = set()
        found = None
        while found is None:
            moved = False
            for dd in ((heading[1], -heading[0]), heading,
                       (-heading[1], heading[0]),
                       (-heading[0], -heading[1])):
                v = (pos[0] + dd[0], pos[1] + dd[1])
                info = self._on_boundary(v)
                if info is not None:
                    arc, t_local = info
                    p = (Fraction(v[0], D), Fraction(v[1], D))
                    if self._terminal_allowed(arc, p, t_local, con, origin,
                                              prev_rot, used_terminals):
                        path.append(v)
                        found = (arc, t_local)
                        moved = True
                        break
                    continue   # inadmissible boundary node is a wall
                if not enterable(v):
                    continue
                if (v, dd) in seen:
                    moved = False   # deterministic walk is cycling
                    break
                seen.add((v, dd))
                if v in idx:
                    for w in path[idx[v] + 1:]:
                        del idx[w]
                    del path[idx[v] + 1:]
                else:
                    path.append(v)
                    idx[v] = len(path) - 1
                pos, heading = v, dd
                moved = True
                break
            self._visits += 1
            if not moved or self._visits > self.node_budget:
                break
        if found is None:
            e = RouteFailure("no reachable terminal for spoke")
            e.no_terminal = True
            raise e
        arc, t_local = found
        pts = simplify_polyline([(Fraction(x, D), Fraction(y, D))
                                 for x, y in path])
        return SpokeResult(tuple(pts), arc, pts[-1], t_local, False)

    def _pledge_spoke(self, corner, d, con, origin, prev_rot,
                      used_nodes, used_terminals) -> SpokeResult:
        """Pledge walk: head along the spoke's own direction, wall-follow
        left-handed around anything in the way, resume when the turn
        counter unwinds.  Reaches the face boundary and then walks it,
        checking every node, so its cost tracks the walls touched rather
        than the region area.  Rescue for searches that die on budget in
        oversized faces."""
        start = self.scale(corner)
        hx0, hy0, hx1, hy1 = self.ihole
        sx, sy = start
        D = self.D

        def on_ray(v):
            if d[0] == 0:
                return v[0] == sx and (v[1] - sy) * d[1] > 0
            return v[1] == sy and (v[0] - sx) * d[0] > 0

        def enterable(v):
            if v in used_nodes or not self._interior_ok(v):
                return False
            if on_ray(v):
                return True
            return not (hx0 - 1 <= v[0] <= hx1 + 1
                        and hy0 - 1 <= v[1] <= hy1 + 1)

        def probe(v):
            info = self._on_boundary(v)
            if info is not None:
                arc, t_local = info
                p = (Fraction(v[0], D), Fraction(v[1], D))
                if self._terminal_allowed(arc, p, t_local, con, origin,
                                          prev_rot, used_terminals):
                    return ("term", arc, t_local)
                return "wall"
            return "free" if enterable(v) else "wall"

        pos, heading = start, d
        counter = 0          # quarter turns, left positive
        on_wall = False
        path = [start]
        idx = {start: 0}
        found = None
        steps = 0
        cap = 4 * self.node_budget   # walk length, not flood area
        while found is None and steps <= cap:
            steps += 1
            if on_wall:
                # left hand on the wall: left, straight, right, back
                trial = (
                    (1, (-heading[1], heading[0])),
                    (0, heading),
                    (-1, (heading[1], -heading[0])),
                    (2, (-heading[0], -heading[1])))
            else:
                trial = ((0, heading),)
            for turn, dh in trial:
                v = (pos[0] + dh[0], pos[1] + dh[1])
                r = probe(v)
                if r == "wall":
                    continue
                if r != "free":
                    path.append(v)
                    found = (r[1], r[2])
                    break
                counter += turn
                if v in idx:
                    for w in path[idx[v] + 1:]:
                        del idx[w]
                    del path[idx[v] + 1:]
                else:
                    path.append(v)
                    idx[v] = len(path) - 1
                pos, heading = v, dh
                if on_wall and counter == 0:
                    on_wall = False
                break
            else:
                if on_wall:
                    break   # boxed in on all four sides
                # blocked ahead: put the wall on the left and follow it
                on_wall = True
                for _ in range(3):
                    heading = (heading[1], -heading[0])
                    counter -= 1
                    v = (pos[0] + heading[0], pos[1] + heading[1])
                    r = probe(v)
                    if r == "wall":
                        continue
                    if r != "free":
                        path.append(v)
                        found = (r[1], r[2])
                        break
                    if v in idx:
                        for w in path[idx[v] + 1:]:
                            del idx[w]
                        del path[idx[v] + 1:]
                    else:
                        path.append(v)
                        idx[v] = len(path) - 1
                    pos = v
                    break
                else:
                    break   # boxed in
        self._visits += steps
        if found is None:
            e = RouteFailure("no reachable terminal for spoke")
            e.no_terminal = True
            raise e
        arc, t_local = found
        pts = simplify_polyline([(Fraction(x, D), Fraction(y, D))
                                 for x, y in path])
        return SpokeResult(tuple(pts), arc, pts[-1], t_local, False)

    def _rectify(self, path, used_nodes):
        """Pull each lateral jog of a path as close to its start as
        possible.  A* reconstructs arbitrary staircases among equal-cost
        paths; a jog placed mid-corridor can occupy both columns of a
        width-2 bottleneck and seal it for the next spoke.  Taut paths
        keep bottleneck usage down to a single track."""
        verts = [path[0]]
        for v in path[1:]:
            if len(verts) >= 2 and (
                    (verts[-2][0] == verts[-1][0] == v[0])
                    or (verts[-2][1] == verts[-1][1] == v[1])):
                verts[-1] = v
            else:
                verts.append(v)

        def seg_nodes(a, b):
            if a[0] == b[0]:
                step = 1 if b[1] > a[1] else -1
                return [(a[0], y) for y in range(a[1], b[1] + step, step)]
            step = 1 if b[0] > a[0] else -1
            return [(x, a[1]) for x in range(a[0], b[0] + step, step)]

        for _ in range(32):
            own = set()
            for i in range(len(verts) - 1):
                own.update(seg_nodes(verts[i], verts[i + 1]))
            changed = False
            for i in range(1, len(verts) - 2):
                a, b, c, d = verts[i - 1:i + 3]
                # vertical / lateral / vertical with matching orientation
                # (and the transposed case)
                if a[0] == b[0] and c[0] == d[0] and b[1] == c[1]:
                    ax = 1
                elif a[1] == b[1] and c[1] == d[1] and b[0] == c[0]:
                    ax = 0
                else:
                    continue
                sgn_in = (b[ax] > a[ax]) - (b[ax] < a[ax])
                sgn_out = (d[ax] > c[ax]) - (d[ax] < c[ax])
                if sgn_in == 0 or sgn_in != sgn_out:
                    continue
                removed = set(seg_nodes(a, b)) | set(seg_nodes(b, c)) \
                    | set(seg_nodes(c, d))
                keep = own - removed
                hx0, hy0, hx1, hy1 = self.ihole

                def free(v):
                    # never pull a path onto the hole's doorstep ring
                    if hx0 - 1 <= v[0] <= hx1 + 1 \
                            and hy0 - 1 <= v[1] <= hy1 + 1:
                        return False
                    return (v not in used_nodes and v not in keep
                            and self._on_boundary(v) is None
                            and self._interior_ok(v))

                lo, hi = a[ax] + sgn_in, b[ax]
                if abs(hi - lo) > 512:   # keep long paths cheap to fix up
                    hi = lo + 512 * sgn_in
                for off in range(lo, hi, sgn_in):
                    if ax:
                        nb, nc = (a[0], off), (c[0], off)
                    else:
                        nb, nc = (off, a[1]), (off, c[1])
                    ok = all(free(v) for v in seg_nodes(nb, nc))
                    if ok:
                        ok = all(free(v) for v in seg_nodes(nc, c)
                                 if v != c)
                    if ok:
                        verts[i], verts[i + 1] = nb, nc
                        changed = True
                        break
                if changed:
                    break
            if not changed:
                break
        out = [verts[0]]
        for v in verts[1:]:
            for u in seg_nodes(out[-1], v)[1:]:
                out.append(u)
        return out
