"""Ad-hoc driver: plan stages manually, dump the first failing refine."""
import sys
import time
from fractions import Fraction

from carpetmorph.carpet import make_spec
from carpetmorph.correspondence import Correspondence, sim_point
from carpetmorph.geometry import polyline_length
from carpetmorph.routing import (SPOKES, RouteFailure, SpokeRouter,
                                 hole_corner)


def run(max_stage=2, extras=4, trace=True):
    std = make_spec("standard")
    fat = make_spec("fat")
    corr = Correspondence(std, fat, [(((1, 1),), ((2, 2),))])
    fail = None
    for k in range(1, max_stage + 1):
        eps2 = Fraction(1, 4 ** k)
        while corr.pending_loc:
            corr._refine(corr.pending_loc[min(corr.pending_loc)])
        work = [lf for lf in corr.leaves()
                if lf.diam_sq(0) >= eps2 or lf.diam_sq(1) >= eps2]
        t0 = time.time()
        while work:
            leaf = work.pop()
            try:
                corr._refine(leaf)
            except Exception as e:
                print("stage", k, "FAIL:", e)
                print("  A", leaf.poly(0).bounding_rect())
                print("  B", leaf.poly(1).bounding_rect(),
                      "lv", leaf.level_a, leaf.level_b)
                fail = leaf
                break
            for ch in leaf.children:
                if ch.diam_sq(0) >= eps2 or ch.diam_sq(1) >= eps2:
                    work.append(ch)
        if fail is not None:
            break
        print("stage", k, "ok:", len(corr.leaves()), "leaves",
              round(time.time() - t0, 1), "s", flush=True)
    if fail is None or not trace:
        return corr, fail
    fp = fail
    ha, hb, pid = corr._choose_holes(fp)
    print("holes", ha.address, ha.rect, "|", hb.address, hb.rect)
    boundary = fp.boundary()
    arc_order = [a for a, _ in boundary]
    apts = {a: a.pts(0, o) for a, o in boundary}
    bpts = {a: a.pts(1, o) for a, o in boundary}
    for extra in range(extras):
        La = max(fp.level_a, ha.level + 1) + extra
        Lb = max(fp.level_b, hb.level + 1) + extra
        D_b = 1
        for j in range(1, Lb + 1):
            D_b *= fat.rule_at(j).grid_n
        filt_a = {}
        for arc in arc_order:
            if arc.kind == "hole":
                def okf(p, pr=arc.pair_rects, Db=D_b):
                    q = sim_point(pr, p)
                    return ((q[0] * Db).denominator == 1
                            and (q[1] * Db).denominator == 1)
                filt_a[arc] = okf
        for side, spec, hole, pts, other in (
                (0, std, ha, apts, bpts), (1, fat, hb, bpts, apts)):
            if side == 0:
                r = SpokeRouter(spec, hole, arc_order, pts, fp.poly(0),
                                set(corr.exposed_a), None, filt_a)
                try:
                    sa = r.route_at(La)
                    print("extra", extra, "A ok at", La)
                except RouteFailure as e:
                    print("extra", extra, "A FAIL at", La, "spoke",
                          getattr(e, "spoke_index", None), ":", e)
                    if extra == 0:
                        D = 1
                        for j in range(1, La + 1):
                            D *= std.rule_at(j).grid_n
                        for ai, a in enumerate(arc_order):
                            print("  ", ai, a.kind,
                                  [(float(p[0]*D), float(p[1]*D))
                                   for p in apts[a]])
                        r2 = SpokeRouter(spec, hole, arc_order, pts,
                                         fp.poly(0), set(corr.exposed_a),
                                         None, filt_a)
                        r2._setup_lattice(La)
                        used_nodes = set(); used_term = set()
                        origin = prev = None; r2._visits = 0; prevpl = []
                        for i, (ck, dd) in enumerate(SPOKES):
                            c = hole_corner(hole.rect, ck)
                            s = r2._try_straight(c, dd, None, origin, prev,
                                                 used_term, prevpl)
                            mode = "str"
                            if s is None:
                                mode = "bfs"
                                try:
                                    s = r2._bfs_spoke(c, dd, None, origin,
                                                      prev, used_nodes,
                                                      used_term)
                                except RouteFailure as ex:
                                    print("  A spoke", i, "corner",
                                          (int(c[0]*D), int(c[1]*D)),
                                          "dir", dd, "FAIL:", ex,
                                          "visits", r2._visits)
                                    break
                            tg = r2.global_t(s.arc, s.t_local)
                            if origin is None:
                                origin, prev = tg, Fraction(0)
                            else:
                                rot = r2._rot(tg, origin)
                                if rot <= prev:
                                    print("  A spoke", i, "ORDER", rot,
                                          prev, s.terminal)
                                    break
                                prev = rot
                            print("  A", i, mode,
                                  [(int(p[0]*D), int(p[1]*D))
                                   for p in s.pts],
                                  "arc", arc_order.index(s.arc))
                            prevpl.append(s.pts)
                            used_nodes.update(r2._polyline_nodes(s.pts))
                            used_term.add(r2.scale(s.terminal))
                    sa = None
                    break
                cons = []
                for s in sa:
                    arc = s.arc
                    if s.t_local == 0:
                        cons.append(("exact", arc, bpts[arc][0]))
                    elif arc.kind == "hole":
                        cons.append(("exact", arc,
                                     sim_point(arc.pair_rects, s.terminal)))
                    else:
                        cons.append((
                            "near", arc,
                            s.t_local / polyline_length(apts[arc])
                            * polyline_length(bpts[arc])))
            else:
                r = SpokeRouter(spec, hole, arc_order, pts, fp.poly(1),
                                set(corr.exposed_b), cons)
                try:
                    r._setup_lattice(Lb)
                except RouteFailure as e:
                    print("extra", extra, "Lb", Lb, "setup FAIL:", e)
                    continue
                D = r.D
                used_nodes = set()
                used_term = set()
                origin = prev = None
                r._visits = 0
                prevpl = []
                ok = True
                for i, (ck, dd) in enumerate(SPOKES):
                    c = hole_corner(hole.rect, ck)
                    s = r._try_straight(c, dd, cons[i], origin, prev,
                                        used_term, prevpl)
                    mode = "str"
                    if s is None:
                        mode = "bfs"
                        try:
                            s = r._bfs_spoke(c, dd, cons[i], origin, prev,
                                             used_nodes, used_term)
                        except RouteFailure as ex:
                            print("extra", extra, "Lb", Lb, "spoke", i,
                                  "corner",
                                  (int(c[0] * D), int(c[1] * D)),
                                  "dir", dd, "FAIL:", ex)
                            ok = False
                            break
                    tg = r.global_t(s.arc, s.t_local)
                    if origin is None:
                        origin, prev = tg, Fraction(0)
                    else:
                        rot = r._rot(tg, origin)
                        if rot <= prev:
                            print("extra", extra, "spoke", i, "ORDER",
                                  rot, prev, s.terminal)
                            ok = False
                            break
                        prev = rot
                    print("  B", i, mode,
                          [(int(p[0] * D), int(p[1] * D)) for p in s.pts],
                          cons[i][0], "arc", arc_order.index(s.arc))
                    prevpl.append(s.pts)
                    used_nodes.update(r._polyline_nodes(s.pts))
                    used_term.add(r.scale(s.terminal))
                if ok:
                    print("extra", extra, "B OK at", Lb)
                    return corr, fp
    return corr, fp


if __name__ == "__main__":
    run(int(sys.argv[1]) if len(sys.argv) > 1 else 2)
