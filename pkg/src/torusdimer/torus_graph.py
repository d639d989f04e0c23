"""Embedded graphs on a flat torus with homology-aware edge bookkeeping.

A graph lives on the torus C / (Z + tau Z) with Im(tau) > 0.  Points are stored
in lattice coordinates (x, y) in [0,1)^2, meaning the point x + y*tau.  Every
directed edge is a straight segment from a representative of its tail to a
translate of its head; the translate is encoded by two signed crossing counts
(a, b) against a fixed pair of cuts: a counts signed crossings of the vertical
cut {x = GAMMA0} and b of the horizontal cut {y = GAMMA0}.  Crossing sums of
closed walks are translation-invariant and recover the walk's homology class.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

# Cut abscissa for both cuts.  Any fixed value off the vertex/edge coordinates
# works; this one keeps >=1e-6 clearance from rationals with denominator <= 1e4.
GAMMA0 = 0.295473


class GraphError(ValueError):
    """Invalid torus graph data (construction or file parsing)."""


@dataclass(frozen=True)
class HomologyClass:
    """Element r*[tau-loop] + s*[1-loop] of the torus homology lattice."""

    r: int
    s: int

    @staticmethod
    def from_crossing(a: int, b: int) -> "HomologyClass":
        # Crossing the vertical cut (a) is a step in the horizontal "1"
        # direction, so a is the s-coefficient; b likewise gives r.
        return HomologyClass(r=b, s=a)

    def crossing(self) -> tuple[int, int]:
        return (self.s, self.r)

    def intersection(self, other: "HomologyClass") -> int:
        """Intersection pairing, normalized so [1-loop] . [tau-loop] = +1."""
        return self.s * other.r - self.r * other.s

    def is_zero(self) -> bool:
        return self.r == 0 and self.s == 0

    def __neg__(self) -> "HomologyClass":
        return HomologyClass(-self.r, -self.s)

    def __add__(self, other: "HomologyClass") -> "HomologyClass":
        return HomologyClass(self.r + other.r, self.s + other.s)


@dataclass(frozen=True)
class Edge:
    """Directed edge: straight segment with signed cut crossings (a, b)."""

    tail: int
    head: int
    conductance: float
    crossing: tuple[int, int]


def segment_crossings(x: float, y: float, dx: float, dy: float) -> tuple[int, int]:
    """Signed cut crossings of the segment from (x, y) to (x+dx, y+dy)."""
    a = math.floor(x + dx - GAMMA0) - math.floor(x - GAMMA0)
    b = math.floor(y + dy - GAMMA0) - math.floor(y - GAMMA0)
    return a, b


def _frac(t: float) -> float:
    f = t - math.floor(t)
    if f >= 1.0:
        f -= 1.0
    elif f < 0.0:
        f += 1.0
    return f


class TorusGraph:
    """Validated torus-embedded graph with rotation system and face data.

    Construction derives, and the invariants below guarantee:
      - every directed edge has a unique reverse with negated crossings,
      - counterclockwise rotation order of out-edges at every vertex,
      - faces as orbits of e -> rot^{-1}(reverse(e)), each a disk
        (crossing sum (0,0)) and jointly of Euler characteristic 0,
      - strong connectivity through positive-conductance edges.

    Zero-conductance edges stay part of the embedding (faces, duals) but are
    excluded from random walks and cycle-rooted forests by their callers.
    """

    def __init__(self, tau: complex, positions: list[tuple[float, float]],
                 edges: list[Edge], label: str = "custom",
                 square_lattice: tuple[int, int, int] | None = None):
        if tau.imag <= 0:
            raise GraphError(f"modulus must have positive imaginary part, got {tau!r}")
        self.tau = complex(tau)
        self.positions = [(float(x), float(y)) for (x, y) in positions]
        self.edges = list(edges)
        self.label = label
        self.square_lattice = square_lattice
        self._validate_basic()
        self._pair_twins()
        self._build_rotation()
        self._build_faces()
        self._check_irreducible()
        self._index_walk_data()

    # -- construction helpers -------------------------------------------------

    def _validate_basic(self) -> None:
        n = len(self.positions)
        if n == 0:
            raise GraphError("graph has no vertices")
        for i, (x, y) in enumerate(self.positions):
            if not (0.0 <= x < 1.0 and 0.0 <= y < 1.0):
                raise GraphError(f"vertex {i} position {(x, y)} outside [0,1)^2")
        for k, e in enumerate(self.edges):
            if not (0 <= e.tail < n and 0 <= e.head < n):
                raise GraphError(f"edge {k} references unknown vertex")
            if e.tail == e.head and e.crossing == (0, 0):
                raise GraphError(f"edge {k} is a contractible self-loop")
            if e.conductance < 0:
                raise GraphError(f"negative conductance on edge {k}")

    def displacement(self, eid: int) -> tuple[float, float]:
        return self._disp[eid]

    def _pair_twins(self) -> None:
        key_to_id: dict[tuple[int, int, int, int], int] = {}
        for k, e in enumerate(self.edges):
            key = (e.tail, e.head, e.crossing[0], e.crossing[1])
            if key in key_to_id:
                raise GraphError(f"coincident parallel edges {key_to_id[key]} and {k}")
            key_to_id[key] = k
        twin = []
        for k, e in enumerate(self.edges):
            rk = key_to_id.get((e.head, e.tail, -e.crossing[0], -e.crossing[1]))
            if rk is None:
                others = [j for j, f in enumerate(self.edges)
                          if f.tail == e.head and f.head == e.tail]
                if others:
                    raise GraphError(f"inconsistent crossings between edge {k} "
                                     f"and its reverse candidates {others}")
                raise GraphError(f"edge {k} has no reverse edge")
            twin.append(rk)
        self.twin = twin
        # displacements follow from crossings: head - tail + integer translate
        disp = []
        for e in self.edges:
            xt, yt = self.positions[e.tail]
            xh, yh = self.positions[e.head]
            mx = e.crossing[0] + (1 if xh < GAMMA0 else 0) - (1 if xt < GAMMA0 else 0)
            my = e.crossing[1] + (1 if yh < GAMMA0 else 0) - (1 if yt < GAMMA0 else 0)
            disp.append((xh - xt + mx, yh - yt + my))
        self._disp = disp

    def _build_rotation(self) -> None:
        n = len(self.positions)
        out: list[list[int]] = [[] for _ in range(n)]
        for k, e in enumerate(self.edges):
            out[e.tail].append(k)
        rotation = []
        for v in range(n):
            if not out[v]:
                raise GraphError(f"vertex {v} has no outgoing edges")
            def angle(eid: int) -> float:
                dx, dy = self._disp[eid]
                return cmath.phase(complex(dx, 0) + self.tau * dy)
            ordered = sorted(out[v], key=angle)
            for i in range(len(ordered)):
                a0 = angle(ordered[i])
                a1 = angle(ordered[(i + 1) % len(ordered)])
                if abs((a1 - a0) % (2 * math.pi)) < 1e-12 and len(ordered) > 1:
                    raise GraphError(f"coincident edge directions at vertex {v}")
            rotation.append(ordered)
        self.rotation = rotation
        self._rot_pos = {}
        for v in range(n):
            for i, eid in enumerate(rotation[v]):
                self._rot_pos[eid] = i

    def rot_next(self, eid: int) -> int:
        """Next outgoing edge counterclockwise at the same tail."""
        ring = self.rotation[self.edges[eid].tail]
        return ring[(self._rot_pos[eid] + 1) % len(ring)]

    def rot_prev(self, eid: int) -> int:
        ring = self.rotation[self.edges[eid].tail]
        return ring[(self._rot_pos[eid] - 1) % len(ring)]

    def next_in_face(self, eid: int) -> int:
        """Successor of eid along the boundary of the face on its left."""
        return self.rot_prev(self.twin[eid])

    def _build_faces(self) -> None:
        seen = [False] * len(self.edges)
        faces: list[list[int]] = []
        face_of = [-1] * len(self.edges)
        for start in range(len(self.edges)):
            if seen[start]:
                continue
            orbit = []
            e = start
            while not seen[e]:
                seen[e] = True
                face_of[e] = len(faces)
                orbit.append(e)
                e = self.next_in_face(e)
            if e != start:
                raise GraphError("face walk failed to close")
            faces.append(orbit)
        for fid, orbit in enumerate(faces):
            sa = sum(self.edges[e].crossing[0] for e in orbit)
            sb = sum(self.edges[e].crossing[1] for e in orbit)
            if (sa, sb) != (0, 0):
                raise GraphError(f"non-contractible face {fid} (crossing sum {(sa, sb)})")
        euler = len(self.positions) - len(self.edges) // 2 + len(faces)
        if euler != 0:
            raise GraphError(f"non-cellular face structure (Euler characteristic {euler})")
        self.faces = faces
        self.face_of = face_of

    def _check_irreducible(self) -> None:
        n = len(self.positions)
        fwd: list[list[int]] = [[] for _ in range(n)]
        bwd: list[list[int]] = [[] for _ in range(n)]
        for e in self.edges:
            if e.conductance > 0:
                fwd[e.tail].append(e.head)
                bwd[e.head].append(e.tail)
        for adj in (fwd, bwd):
            seen = [False] * n
            stack = [0]
            seen[0] = True
            count = 1
            while stack:
                v = stack.pop()
                for w in adj[v]:
                    if not seen[w]:
                        seen[w] = True
                        count += 1
                        stack.append(w)
            if count != n:
                raise GraphError("reducible graph (positive-conductance part "
                                 "is not strongly connected)")

    def _index_walk_data(self) -> None:
        n = len(self.positions)
        self.positive_out: list[list[int]] = [[] for _ in range(n)]
        self.out_conductance = [0.0] * n
        for k, e in enumerate(self.edges):
            if e.conductance > 0:
                self.positive_out[e.tail].append(k)
                self.out_conductance[e.tail] += e.conductance

    # -- queries --------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def walk_crossing_sum(self, edge_ids) -> tuple[int, int]:
        a = b = 0
        for eid in edge_ids:
            ca, cb = self.edges[eid].crossing
            a += ca
            b += cb
        return a, b

    def walk_class(self, edge_ids) -> HomologyClass:
        return HomologyClass.from_crossing(*self.walk_crossing_sum(edge_ids))

    def lifted_face_barycenter(self, start_edge: int,
                               start_pos: tuple[float, float]) -> tuple[float, float]:
        """Mean of the face-boundary tail positions, lifted from start_edge
        anchored at start_pos (which must be a lift of its tail)."""
        xs = []
        ys = []
        x, y = start_pos
        e = start_edge
        while True:
            xs.append(x)
            ys.append(y)
            dx, dy = self._disp[e]
            x += dx
            y += dy
            e = self.next_in_face(e)
            if e == start_edge:
                break
        return (math.fsum(xs) / len(xs), math.fsum(ys) / len(ys))


def build_square_torus(n: int, shift: tuple[int, int],
                       conductance=None) -> TorusGraph:
    """Square-lattice torus quotient with mesh 1/n and modulus (s_x + i s_y)/n.

    Vertices are (p, q) with p in [0, n) and q in [0, s_y); the identification
    glues (p, q + s_y) to (p - s_x, q).  Each vertex carries four edges (east,
    west, north, south).  conductance(p, q, direction) overrides the uniform
    value 1/4; direction is one of "E", "W", "N", "S".
    """
    sx, sy = shift
    if sy <= 0:
        raise GraphError(f"degenerate torus: shift {shift} has s_y <= 0")
    if n <= 1:
        raise GraphError(f"mesh too coarse: n = {n} produces self-loops")
    tau = complex(sx, sy) / n
    denom = n * sy

    def norm(p: int, q: int) -> tuple[int, int]:
        q2 = q % sy
        p2 = (p - ((q - q2) // sy) * sx) % n
        return p2, q2

    def vid(p: int, q: int) -> int:
        p2, q2 = norm(p, q)
        return p2 * sy + q2

    positions = []
    for p in range(n):
        for q in range(sy):
            x = ((p * sy - q * sx) % denom) / denom
            y = q / sy
            positions.append((x, y))

    steps = [("E", 1, 0, 1.0 / n, 0.0),
             ("W", -1, 0, -1.0 / n, 0.0),
             ("N", 0, 1, -sx / denom, 1.0 / sy),
             ("S", 0, -1, sx / denom, -1.0 / sy)]
    edges = []
    for p in range(n):
        for q in range(sy):
            x, y = positions[p * sy + q]
            for (tag, dp, dq, dx, dy) in steps:
                c = 0.25 if conductance is None else float(conductance(p, q, tag))
                edges.append(Edge(tail=p * sy + q, head=vid(p + dp, q + dq),
                                  conductance=c,
                                  crossing=segment_crossings(x, y, dx, dy)))
    label = f"square:n={n},shift=({sx},{sy})" + ("" if conductance else ",uniform")
    return TorusGraph(tau, positions, edges, label=label,
                      square_lattice=(n, sx, sy) if conductance is None else None)


def reverse_graph(g: TorusGraph) -> TorusGraph:
    """Same embedding with every directed edge's conductance moved to its reverse."""
    edges = []
    for k, e in enumerate(g.edges):
        edges.append(Edge(tail=e.tail, head=e.head,
                          conductance=g.edges[g.twin[k]].conductance,
                          crossing=e.crossing))
    return TorusGraph(g.tau, g.positions, edges, label=g.label + ":reversed")


# -- file format --------------------------------------------------------------
#
#   # comment
#   torus <tau_re> <tau_im>
#   v <id> <x> <y>
#   e <tail> <head> <conductance> <a> <b>
#
# Floats are written with repr() and parsed with float(), which round-trips
# IEEE doubles exactly.


def save_graph(g: TorusGraph, path) -> None:
    lines = [f"torus {g.tau.real!r} {g.tau.imag!r}"]
    for i, (x, y) in enumerate(g.positions):
        lines.append(f"v {i} {x!r} {y!r}")
    for e in g.edges:
        lines.append(f"e {e.tail} {e.head} {e.conductance!r} "
                     f"{e.crossing[0]} {e.crossing[1]}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> TorusGraph:
    tau = None
    positions: dict[int, tuple[float, float]] = {}
    edges: list[Edge] = []
    edge_lines: list[int] = []
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.readlines()
    for lineno, line in enumerate(raw, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        tok = text.split()
        try:
            if tok[0] == "torus" and len(tok) == 3:
                tau = complex(float(tok[1]), float(tok[2]))
            elif tok[0] == "v" and len(tok) == 4:
                vid = int(tok[1])
                if vid in positions:
                    raise ValueError(f"duplicate vertex id {vid}")
                positions[vid] = (float(tok[2]), float(tok[3]))
            elif tok[0] == "e" and len(tok) == 6:
                c = float(tok[3])
                if c < 0:
                    raise GraphError(f"negative conductance at line {lineno}")
                edges.append(Edge(tail=int(tok[1]), head=int(tok[2]),
                                  conductance=c,
                                  crossing=(int(tok[4]), int(tok[5]))))
                edge_lines.append(lineno)
            else:
                raise ValueError(f"unrecognized record {tok[0]!r}")
        except GraphError:
            raise
        except ValueError as exc:
            raise GraphError(f"parse error at line {lineno}: {exc}") from exc
    if tau is None:
        raise GraphError("parse error: missing torus header line")
    if sorted(positions) != list(range(len(positions))):
        raise GraphError("parse error: vertex ids must cover 0..N-1")
    pos_list = [positions[i] for i in range(len(positions))]
    return TorusGraph(tau, pos_list, edges, label=str(path))


# -- duality ------------------------------------------------------------------


def dual_graph(g: TorusGraph) -> TorusGraph:
    """Dual torus graph: one vertex per face, one edge per directed edge.

    The dual of edge e runs from the face right of e to the face left of e
    (the direction of e rotated counterclockwise by a quarter turn), with unit
    conductance.  Crossings come from the straight segment between lifted face
    barycenters computed in e's own chart, so closed dual walks automatically
    carry the correct homology.
    """
    dual_positions = []
    for orbit in g.faces:
        e0 = orbit[0]
        bx, by = g.lifted_face_barycenter(e0, g.positions[g.edges[e0].tail])
        dual_positions.append((_frac(bx), _frac(by)))
    dual_edges = []
    for k, e in enumerate(g.edges):
        xt, yt = g.positions[e.tail]
        dx, dy = g.displacement(k)
        b_left = g.lifted_face_barycenter(k, (xt, yt))
        b_right = g.lifted_face_barycenter(g.twin[k], (xt + dx, yt + dy))
        ddx = b_left[0] - b_right[0]
        ddy = b_left[1] - b_right[1]
        cr = segment_crossings(_frac(b_right[0]), _frac(b_right[1]), ddx, ddy)
        dual_edges.append(Edge(tail=g.face_of[g.twin[k]], head=g.face_of[k],
                               conductance=1.0, crossing=cr))
    return TorusGraph(g.tau, dual_positions, dual_edges,
                      label=g.label + ":dual")


@dataclass(frozen=True)
class BWEdge:
    """Edge of the bipartite double graph, from a black to a white vertex."""

    black: int
    white: int
    weight: float
    crossing: tuple[int, int]


class TemperleyanGraph:
    """Bipartite double graph of a torus graph and its dual.

    Black vertices are the primal vertices (ids 0..|V|-1) followed by the dual
    vertices (ids |V|..|V|+|F|-1).  White vertices are the undirected primal
    edges, placed at edge midpoints; white w corresponds to the directed pair
    (self.white_pair[w], twin).  Each white vertex has degree four: weights are
    the two directed primal conductances on the primal side and 1 on the dual
    side.
    """

    def __init__(self, g: TorusGraph):
        self.graph = g
        self.dual = dual_graph(g)
        nv = g.n_vertices
        self.n_black = nv + self.dual.n_vertices
        self.white_pair: list[int] = []
        self.white_of_edge: dict[int, int] = {}
        for k in range(len(g.edges)):
            if k <= g.twin[k]:
                self.white_of_edge[k] = len(self.white_pair)
                self.white_of_edge[g.twin[k]] = len(self.white_pair)
                self.white_pair.append(k)
        self.n_white = len(self.white_pair)
        if self.n_black != self.n_white:
            raise GraphError(f"black/white count mismatch "
                             f"({self.n_black} vs {self.n_white})")
        self.white_positions = []
        for k in self.white_pair:
            (xt, yt) = g.positions[g.edges[k].tail]
            dx, dy = g.displacement(k)
            self.white_positions.append((_frac(xt + dx / 2), _frac(yt + dy / 2)))

        edges: list[BWEdge] = []
        for k, e in enumerate(g.edges):
            if g.face_of[k] == g.face_of[g.twin[k]]:
                raise GraphError(f"degenerate co-face at edge {k}")
            w = self.white_of_edge[k]
            xt, yt = g.positions[e.tail]
            dx, dy = g.displacement(k)
            edges.append(BWEdge(black=e.tail, white=w, weight=e.conductance,
                                crossing=segment_crossings(xt, yt, dx / 2, dy / 2)))
        for k in range(len(g.edges)):
            # dual edge k runs face_of[twin k] -> face_of[k]; its first half
            # reaches the midpoint of primal edge k
            w = self.white_of_edge[k]
            xt, yt = g.positions[g.edges[k].tail]
            dx, dy = g.displacement(k)
            b_right = g.lifted_face_barycenter(g.twin[k], (xt + dx, yt + dy))
            mid = (xt + dx / 2, yt + dy / 2)
            edges.append(BWEdge(black=g.n_vertices + g.face_of[g.twin[k]],
                                white=w, weight=1.0,
                                crossing=segment_crossings(
                                    _frac(b_right[0]), _frac(b_right[1]),
                                    mid[0] - b_right[0], mid[1] - b_right[1])))
        self.edges = edges
        self.weight_of: dict[tuple[int, int], float] = {}
        self.adjacency: list[list[BWEdge]] = [[] for _ in range(self.n_white)]
        for be in edges:
            key = (be.black, be.white)
            if key in self.weight_of:
                raise GraphError(f"duplicate double-graph edge {key}")
            self.weight_of[key] = be.weight
            self.adjacency[be.white].append(be)

    def primal_edge_of_white(self, w: int) -> int:
        """Canonical (smaller-id) directed primal edge under white w."""
        return self.white_pair[w]


def temperleyan(g: TorusGraph) -> TemperleyanGraph:
    """Build the bipartite double graph of g and its dual."""
    return TemperleyanGraph(g)


# -- embedded isomorphism (combinatorial, conductance-blind) -------------------


def _canonical_signature(g: TorusGraph, anchor: int) -> tuple:
    """Canonical rotation-system encoding grown from an anchor directed edge."""
    vlabel: dict[int, int] = {}
    elabel: dict[int, int] = {}
    order: list[int] = []

    def see_vertex(v: int) -> int:
        if v not in vlabel:
            vlabel[v] = len(vlabel)
        return vlabel[v]

    def see_edge(e: int) -> int:
        if e not in elabel:
            elabel[e] = len(elabel)
            order.append(e)
        return elabel[e]

    see_vertex(g.edges[anchor].tail)
    see_edge(anchor)
    record = []
    idx = 0
    while idx < len(order):
        e = order[idx]
        idx += 1
        v = g.edges[e].head
        record.append((see_vertex(g.edges[e].tail), see_vertex(v),
                       see_edge(g.twin[e])))
        # enumerate the head's rotation starting at the reverse edge
        ring = g.rotation[v]
        start = g._rot_pos[g.twin[e]]
        for i in range(len(ring)):
            record.append(see_edge(ring[(start + i) % len(ring)]))
    return tuple(record)


def embedded_isomorphic(g1: TorusGraph, g2: TorusGraph) -> bool:
    """Rotation-system isomorphism of embedded graphs (ignores conductances)."""
    if (g1.n_vertices != g2.n_vertices or len(g1.edges) != len(g2.edges)
            or g1.n_faces != g2.n_faces):
        return False
    sig1 = min(_canonical_signature(g1, a) for a in range(len(g1.edges)))
    return any(_canonical_signature(g2, a) == sig1 for a in range(len(g2.edges)))
