"""Cycle-rooted spanning forests on torus graphs: exhaustive enumeration,
incompressibility, the complementary dual forest, and random generation by
cycle-popping."""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass

import numpy as np

from .torus_graph import GraphError, TemperleyanGraph, TorusGraph, temperleyan

ENUMERATION_GUARD = 10**7


@dataclass(frozen=True)
class Crsf:
    """Oriented vector field on a torus graph: out_edge[v] leaves v.

    cycles lists the directed cycles of the functional graph, each as a tuple
    of edge ids starting from the cycle's smallest vertex; weight is the
    product of the out-edge conductances.
    """

    out_edge: tuple[int, ...]
    cycles: tuple[tuple[int, ...], ...]
    weight: float


def make_crsf(g: TorusGraph, out_edge) -> Crsf:
    nv = g.n_vertices
    if len(out_edge) != nv:
        raise ValueError("out_edge must assign every vertex")
    succ = []
    weight = 1.0
    for v, eid in enumerate(out_edge):
        e = g.edges[eid]
        if e.tail != v:
            raise ValueError(f"edge {eid} does not leave vertex {v}")
        succ.append(e.head)
        weight *= e.conductance
    cycles = []
    state = [0] * nv  # 0 unvisited, 1 on stack, 2 done
    for v0 in range(nv):
        if state[v0]:
            continue
        path = []
        v = v0
        while state[v] == 0:
            state[v] = 1
            path.append(v)
            v = succ[v]
        if state[v] == 1:
            i = path.index(v)
            cyc = path[i:]
            lo = cyc.index(min(cyc))
            cyc = cyc[lo:] + cyc[:lo]
            cycles.append(tuple(out_edge[u] for u in cyc))
        for u in path:
            state[u] = 2
    cycles.sort(key=lambda c: g.edges[c[0]].tail)
    return Crsf(tuple(out_edge), tuple(cycles), weight)


def is_incompressible(g: TorusGraph, forest: Crsf) -> bool:
    """True when every cycle of the forest winds around the torus."""
    return all(not g.walk_class(cyc).is_zero() for cyc in forest.cycles)


def _guard_product(g: TorusGraph) -> None:
    prod = 1
    for v in range(g.n_vertices):
        prod *= len(g.positive_out[v])
        if prod > ENUMERATION_GUARD:
            raise GraphError(f"enumeration guard exceeded "
                             f"({prod} > {ENUMERATION_GUARD} vector fields)")
        if prod == 0:
            raise GraphError(f"vertex {v} has no positive out-edge")


def enumerate_vector_fields(g: TorusGraph):
    """Yield every positive-conductance vector field, in lexicographic order
    of out-edge choices."""
    _guard_product(g)
    for combo in itertools.product(*(g.positive_out[v] for v in range(g.n_vertices))):
        yield make_crsf(g, list(combo))


def enumerate_crsfs(g: TorusGraph) -> list[Crsf]:
    """All incompressible cycle-rooted spanning forests."""
    return [f for f in enumerate_vector_fields(g) if is_incompressible(g, f)]


def dual_crsf(tg: TemperleyanGraph, forest: Crsf, orientations) -> Crsf:
    """Complementary forest on the dual graph.

    Its undirected support is the set of duals of primal edges unused by
    forest; its cycles (one per primal cycle) are oriented by the signs in
    orientations, ordered by smallest dual vertex, where +1 keeps the
    lexicographically positive winding class (r before s) and -1 reverses it.
    Tree edges point toward the cycles.
    """
    g, d = tg.graph, tg.dual
    if not is_incompressible(g, forest):
        raise ValueError("forest is not incompressible")
    used = {min(e, g.twin[e]) for e in forest.out_edge}
    support = [k for k in range(len(g.edges))
               if k < g.twin[k] and k not in used]
    incident = defaultdict(list)
    for k in support:
        incident[d.edges[k].tail].append(k)
        incident[d.edges[k].head].append(k)
    deg = {v: len(ks) for v, ks in incident.items()}
    if set(deg) != set(range(d.n_vertices)):
        raise RuntimeError("dual support misses a dual vertex")

    out_d = [-1] * d.n_vertices
    alive = set(support)
    queue = deque(v for v in range(d.n_vertices) if deg[v] == 1)
    while queue:
        v = queue.popleft()
        if deg[v] != 1:
            continue
        k = next(kk for kk in incident[v] if kk in alive)
        e = d.edges[k]
        out_d[v] = k if e.tail == v else d.twin[k]
        other = e.head if e.tail == v else e.tail
        alive.discard(k)
        deg[v] = 0
        deg[other] -= 1
        if deg[other] == 1:
            queue.append(other)

    cycles = []
    seen = set()
    for v0 in range(d.n_vertices):
        if deg[v0] != 2 or v0 in seen:
            continue
        first = min(k for k in incident[v0] if k in alive)
        walk = []
        v, k = v0, first
        while True:
            e = d.edges[k]
            walk.append(k if e.tail == v else d.twin[k])
            seen.add(v)
            v = e.head if e.tail == v else e.tail
            if v == v0:
                break
            k = next(kk for kk in incident[v] if kk in alive and kk != k)
        cls = d.walk_class(walk)
        if cls.is_zero():
            raise RuntimeError("contractible dual cycle in complementary support")
        positive = cls.r > 0 or (cls.r == 0 and cls.s > 0)
        cycles.append((v0, walk if positive else [d.twin[k] for k in reversed(walk)]))
    for v in range(d.n_vertices):
        if out_d[v] == -1 and deg[v] != 2:
            raise RuntimeError("dual support is not a union of unicyclic components")
    if len(orientations) != len(cycles):
        raise ValueError(f"expected {len(cycles)} orientation signs, "
                         f"got {len(orientations)}")
    for (v0, walk), sign in zip(cycles, orientations):
        if sign == -1:
            walk = [d.twin[k] for k in reversed(walk)]
        elif sign != 1:
            raise ValueError("orientation signs must be +1 or -1")
        for k in walk:
            out_d[d.edges[k].tail] = k
    return make_crsf(d, out_d)


def _draw_edge(g: TorusGraph, v: int, rng) -> int:
    r = rng.random() * g.out_conductance[v]
    acc = 0.0
    for eid in g.positive_out[v]:
        acc += g.edges[eid].conductance
        if r < acc:
            return eid
    return g.positive_out[v][-1]


def wilson_sample(g: TorusGraph, rng, max_steps: int = 10**9) -> Crsf:
    """Random incompressible forest by cycle-popping.

    Walks start from each unfrozen vertex in id order; contractible loops are
    erased and redrawn, a winding loop freezes its whole trail.  The step cap
    guards against pathological conductances.
    """
    nv = g.n_vertices
    out = [-1] * nv
    frozen = [False] * nv
    steps = 0
    for root in range(nv):
        if frozen[root]:
            continue
        path = [root]
        pos = {root: 0}
        choice = {}
        v = root
        while True:
            if steps >= max_steps:
                raise RuntimeError(f"cycle-popping exceeded {max_steps} steps")
            steps += 1
            eid = _draw_edge(g, v, rng)
            choice[v] = eid
            w = g.edges[eid].head
            if frozen[w]:
                for u in path:
                    out[u] = choice[u]
                    frozen[u] = True
                break
            if w in pos:
                i = pos[w]
                loop = [choice[path[j]] for j in range(i, len(path))]
                if g.walk_class(loop).is_zero():
                    for u in path[i + 1:]:
                        del pos[u]
                        del choice[u]
                    del choice[w]
                    del path[i + 1:]
                    v = w
                    continue
                for u in path:
                    out[u] = choice[u]
                    frozen[u] = True
                break
            pos[w] = len(path)
            path.append(w)
            v = w
    return make_crsf(g, out)


@dataclass(frozen=True)
class SampledLaw:
    """Empirical height-change law from forest sampling."""

    probs: dict
    stderr: dict
    samples: int
    seed: int


def mc_height_law(g: TorusGraph, samples: int, seed: int) -> SampledLaw:
    """Monte Carlo height-change law: sample forests, orient dual cycles by
    fair coins, map through the forest-pair correspondence, and tally the
    class.  Requires symmetric conductances so that forest and matching
    measures agree."""
    from . import dimer_height

    if samples < 100:
        raise ValueError("need at least 100 samples")
    for eid, e in enumerate(g.edges):
        c2 = g.edges[g.twin[eid]].conductance
        if abs(e.conductance - c2) > 1e-12 * max(e.conductance, c2):
            raise GraphError(f"asymmetric conductance on edge {eid}; "
                             "sampling needs symmetric conductances")
    tg = temperleyan(g)
    counts: dict = defaultdict(int)
    for idx in range(samples):
        rng = np.random.Generator(np.random.Philox(key=[seed, idx]))
        forest = wilson_sample(g, rng)
        signs = [1 if rng.random() < 0.5 else -1 for _ in forest.cycles]
        fdual = dual_crsf(tg, forest, signs)
        m = dimer_height.temperley_forward(tg, forest, fdual)
        cls = dimer_height.class_of(tg, m)
        counts[(cls.r, cls.s)] += 1
    probs = {k: c / samples for k, c in counts.items()}
    stderr = {k: math.sqrt(p * (1.0 - p) / samples) for k, p in probs.items()}
    return SampledLaw(probs, stderr, samples, seed)


def serialize_sampled_law(law: SampledLaw) -> str:
    rows = [{"r": r, "s": s, "p": law.probs[(r, s)], "se": law.stderr[(r, s)]}
            for r, s in sorted(law.probs)]
    return json.dumps({"seed": law.seed, "samples": law.samples, "law": rows},
                      indent=2, sort_keys=True)


def serialize_crsf(forest: Crsf) -> str:
    return json.dumps([[v, e] for v, e in enumerate(forest.out_edge)])


def parse_crsf(g: TorusGraph, text: str) -> Crsf:
    pairs = json.loads(text)
    out = [-1] * g.n_vertices
    for v, e in pairs:
        out[v] = e
    if -1 in out:
        raise ValueError("serialized forest does not cover every vertex")
    return make_crsf(g, out)
