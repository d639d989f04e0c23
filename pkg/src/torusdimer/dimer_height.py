"""Perfect matchings of the bipartite double graph, the height one-form,
its periods, and the correspondence with cycle-rooted spanning forest pairs."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from . import crsf
from .torus_graph import GraphError, HomologyClass, TemperleyanGraph, TorusGraph

ENUMERATION_WHITE_CAP = 24


@dataclass(frozen=True)
class Matching:
    """Perfect matching of a bipartite double graph.

    assignment[w] is the black vertex matched to white w; weight is the
    product of the matched edge weights.
    """

    assignment: tuple[int, ...]
    weight: float


def matching_weight(tg: TemperleyanGraph, assignment) -> float:
    w = 1.0
    for white, black in enumerate(assignment):
        w *= tg.weight_of[(black, white)]
    return w


def enumerate_matchings(tg: TemperleyanGraph) -> list[Matching]:
    """All positive-weight perfect matchings, by backtracking over whites in
    id order.  Deterministic; capped at 24 whites."""
    if tg.n_white > ENUMERATION_WHITE_CAP:
        raise GraphError(f"matching enumeration capped at {ENUMERATION_WHITE_CAP} "
                         f"whites (got {tg.n_white})")
    out: list[Matching] = []
    used = [False] * tg.n_black
    assignment = [-1] * tg.n_white

    def extend(w: int) -> None:
        if w == tg.n_white:
            out.append(Matching(tuple(assignment), matching_weight(tg, assignment)))
            return
        for be in tg.adjacency[w]:
            if be.weight > 0 and not used[be.black]:
                used[be.black] = True
                assignment[w] = be.black
                extend(w + 1)
                used[be.black] = False
        assignment[w] = -1

    extend(0)
    return out


def serialize_matching(m: Matching) -> str:
    return json.dumps([[w, b] for w, b in enumerate(m.assignment)])


def parse_matching(tg: TemperleyanGraph, text: str) -> Matching:
    pairs = json.loads(text)
    assignment = [-1] * tg.n_white
    for w, b in pairs:
        assignment[w] = b
    if -1 in assignment:
        raise ValueError("serialized matching does not cover every white vertex")
    return Matching(tuple(assignment), matching_weight(tg, assignment))


@dataclass(frozen=True)
class HeightForm:
    """Indicator one-form of a matching on the dual of the double graph.

    The value sits on the dual of each black-white edge, oriented by a
    counterclockwise quarter turn of the black-to-white direction.
    """

    values: tuple[int, ...]  # aligned with tg.edges

    def value(self, bw_index: int, reverse: bool = False) -> int:
        v = self.values[bw_index]
        return -v if reverse else v


def one_form(tg: TemperleyanGraph, m: Matching) -> HeightForm:
    vals = tuple(1 if m.assignment[be.white] == be.black else 0
                 for be in tg.edges)
    return HeightForm(vals)


def d_omega(tg: TemperleyanGraph, form: HeightForm, site: tuple[str, int]) -> int:
    """Flux of the one-form around the dual face at a double-graph vertex.

    site is ("black", id) or ("white", id).  Traversed counterclockwise, the
    boundary runs along the quarter-turn frame of each incident spoke at a
    black vertex and against it at a white vertex.
    """
    kind, idx = site
    total = 0
    for i, be in enumerate(tg.edges):
        if kind == "black" and be.black == idx:
            total += form.value(i)
        elif kind == "white" and be.white == idx:
            total -= form.value(i)
    return total


def homology_basis_walks(g: TorusGraph) -> tuple[list[int], list[int]]:
    """Closed positive-conductance walks with cut-crossing sums (1,0) and (0,1),
    found by breadth-first search in the translation covering."""
    walks = []
    for target in ((1, 0), (0, 1)):
        walk = _covering_walk(g, target)
        if walk is None:
            raise GraphError("no admissible primal cycle found "
                             "(reducible weight support)")
        walks.append(walk)
    return walks[0], walks[1]


def _covering_walk(g: TorusGraph, target: tuple[int, int], clamp: int = 3):
    root = 0
    start = (root, 0, 0)
    goal = (root, target[0], target[1])
    parent: dict[tuple[int, int, int], tuple[tuple[int, int, int], int]] = {start: (start, -1)}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == goal:
            edges = []
            cur = state
            while cur != start:
                prev, eid = parent[cur]
                edges.append(eid)
                cur = prev
            edges.reverse()
            return edges
        v, a, b = state
        for eid in g.positive_out[v]:
            e = g.edges[eid]
            na, nb = a + e.crossing[0], b + e.crossing[1]
            if abs(na) > clamp or abs(nb) > clamp:
                continue
            nxt = (e.head, na, nb)
            if nxt not in parent:
                parent[nxt] = (state, eid)
                queue.append(nxt)
    return None


def _basis_walks_cached(tg: TemperleyanGraph):
    cached = getattr(tg, "_basis_walks", None)
    if cached is None:
        cached = homology_basis_walks(tg.graph)
        tg._basis_walks = cached
    return cached


def dual_path_integral(tg: TemperleyanGraph, m: Matching, walk: list[int]) -> int:
    """Integral of the matching one-form along the dual-graph path running
    immediately left of a closed primal walk.

    Along edge e the path crosses the rung from e's midpoint to the left
    face barycenter (with the frame, +1 if matched); at each corner it pivots
    clockwise around the head, against the frame of each swept spoke.
    """
    g = tg.graph
    nv = g.n_vertices
    total = 0
    for i, e in enumerate(walk):
        if m.assignment[tg.white_of_edge[e]] == nv + g.face_of[e]:
            total += 1
        e_next = walk[(i + 1) % len(walk)]
        if e_next == g.next_in_face(e):
            continue
        head = g.edges[e].head
        cur = g.next_in_face(e)
        stop = g.rot_next(e_next)
        guard = len(g.rotation[head]) + 1
        while True:
            if m.assignment[tg.white_of_edge[cur]] == g.edges[cur].tail:
                total -= 1
            if cur == stop:
                break
            cur = g.rot_prev(cur)
            guard -= 1
            if guard < 0:
                raise RuntimeError("corner fan failed to close")
    return total


def periods(tg: TemperleyanGraph, m: Matching) -> tuple[int, int]:
    """One-form integrals along the dual paths left of the two basis walks
    (crossing classes (1,0) and (0,1) respectively)."""
    walk_a, walk_b = _basis_walks_cached(tg)
    return (dual_path_integral(tg, m, walk_a),
            dual_path_integral(tg, m, walk_b))


def class_from_periods(tg: TemperleyanGraph, m: Matching) -> HomologyClass:
    """Height-change class, dual to the periods under the intersection
    pairing: class . [basis] = integral along that basis."""
    int_a, int_b = periods(tg, m)
    return HomologyClass(r=-int_a, s=int_b)


def temperley_back(tg: TemperleyanGraph, m: Matching):
    """Matching -> (primal forest, dual forest).

    Primal vertex v points along the primal edge whose white it is matched
    to; dual vertex f points along the dual edge leaving f toward its matched
    white.  Aborts if the result is not a valid incompressible pair.
    """
    g, d = tg.graph, tg.dual
    nv = g.n_vertices
    out_p = [-1] * nv
    out_d = [-1] * d.n_vertices
    for w, black in enumerate(m.assignment):
        k = tg.white_pair[w]
        kt = g.twin[k]
        if black < nv:
            eid = k if g.edges[k].tail == black else kt
            if g.edges[eid].tail != black or out_p[black] != -1:
                raise RuntimeError("bijection violation: bad primal pick")
            out_p[black] = eid
        else:
            f = black - nv
            did = k if d.edges[k].tail == f else kt
            if d.edges[did].tail != f or out_d[f] != -1:
                raise RuntimeError("bijection violation: bad dual pick")
            out_d[f] = did
    if -1 in out_p or -1 in out_d:
        raise RuntimeError("bijection violation: uncovered vertex")
    forest = crsf.make_crsf(g, out_p)
    forest_dual = crsf.make_crsf(d, out_d)
    if not crsf.is_incompressible(g, forest):
        raise RuntimeError("bijection violation: primal forest compressible")
    if not crsf.is_incompressible(d, forest_dual):
        raise RuntimeError("bijection violation: dual forest compressible")
    prim_und = {min(e, g.twin[e]) for e in forest.out_edge}
    dual_und = {min(e, d.twin[e]) for e in forest_dual.out_edge}
    if prim_und & dual_und:
        raise RuntimeError("bijection violation: forests share a crossing edge")
    return forest, forest_dual


def temperley_forward(tg: TemperleyanGraph, forest: crsf.Crsf,
                      forest_dual: crsf.Crsf) -> Matching:
    """(primal forest, dual forest) -> matching; the inverse of temperley_back."""
    g, d = tg.graph, tg.dual
    assignment = [-1] * tg.n_white
    for v, eid in enumerate(forest.out_edge):
        w = tg.white_of_edge[eid]
        if assignment[w] != -1:
            raise ValueError("inputs not dual: white covered twice")
        assignment[w] = g.edges[eid].tail
    for f, did in enumerate(forest_dual.out_edge):
        w = tg.white_of_edge[did]
        if assignment[w] != -1:
            raise ValueError("inputs not dual: white covered twice")
        assignment[w] = g.n_vertices + d.edges[did].tail
    if -1 in assignment:
        raise ValueError("inputs not dual: white left uncovered")
    return Matching(tuple(assignment), matching_weight(tg, assignment))


def class_of(tg: TemperleyanGraph, m: Matching) -> HomologyClass:
    """Height-change class of a matching: half the summed cycle classes of
    the forest pair, cross-checked against the one-form periods."""
    forest, forest_dual = temperley_back(tg, m)
    a = b = 0
    for cyc in forest.cycles:
        ca, cb = tg.graph.walk_crossing_sum(cyc)
        a += ca
        b += cb
    for cyc in forest_dual.cycles:
        ca, cb = tg.dual.walk_crossing_sum(cyc)
        a += ca
        b += cb
    if a % 2 or b % 2:
        raise RuntimeError(f"parity violation: forest-pair crossings {(a, b)}")
    cls = HomologyClass.from_crossing(a // 2, b // 2)
    ref = class_from_periods(tg, m)
    if cls != ref:
        raise RuntimeError(f"class mismatch: forest pair {cls}, periods {ref}")
    return cls
