"""Reduction of twisted-determinant ratios to finite transfer operators.

A pair of disjoint horizontal cycles splits the torus; the operator S maps a
starting vertex on the first cycle to the return distribution after the
phase-twisted walk first hits the second cycle and then comes back.  Ratios
of twisted determinants over characters sharing the vertical-cut component
equal the matching ratios of det(I - S)."""

from __future__ import annotations

import cmath
import csv
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .torus_graph import GraphError, TorusGraph
from .twisted_laplacian import Character, assemble, determinant

SEARCH_BUDGET = 10**6


@dataclass(frozen=True)
class CyclePair:
    """Two vertex-disjoint simple cycles, each winding once horizontally."""

    vertices1: tuple[int, ...]
    edges1: tuple[int, ...]
    vertices2: tuple[int, ...]
    edges2: tuple[int, ...]


def cycle_pair_from_edges(g: TorusGraph, edges1, edges2) -> CyclePair:
    def vertices_of(edges):
        vs = []
        for i, eid in enumerate(edges):
            e = g.edges[eid]
            vs.append(e.tail)
            nxt = g.edges[edges[(i + 1) % len(edges)]]
            if nxt.tail != e.head:
                raise GraphError("edge list is not a closed cycle")
        if len(set(vs)) != len(vs):
            raise GraphError("cycle revisits a vertex")
        return tuple(vs)

    v1, v2 = vertices_of(edges1), vertices_of(edges2)
    if set(v1) & set(v2):
        raise GraphError("cycles are not vertex-disjoint")
    for edges in (edges1, edges2):
        cls = g.walk_class(list(edges))
        if cls.r != 0 or abs(cls.s) != 1:
            raise GraphError(f"cycle class {(cls.r, cls.s)} is not a single "
                             "horizontal winding")
    return CyclePair(v1, tuple(edges1), v2, tuple(edges2))


def choose_cycles(g: TorusGraph) -> CyclePair:
    """Pick two disjoint horizontal cycles.

    On a square torus these are the vertex rows nearest heights 0 and 1/2.
    Otherwise a bounded depth-first search hunts for two vertex-disjoint
    simple cycles winding once horizontally."""
    if g.square_lattice is not None:
        n, sx, sy = g.square_lattice
        rows = []
        for q in (0, round(sy / 2)):
            vids = [p * sy + q for p in range(n)]
            eids = []
            for p in range(n):
                v = vids[p]
                nxt = vids[(p + 1) % n]
                eids.append(next(k for k in g.positive_out[v]
                                 if g.edges[k].head == nxt
                                 and g.edges[k].crossing[1] == 0))
            rows.append((tuple(vids), tuple(eids)))
        if set(rows[0][0]) & set(rows[1][0]):
            raise GraphError("no disjoint pair found (torus too thin)")
        return CyclePair(rows[0][0], rows[0][1], rows[1][0], rows[1][1])

    first = _find_cycle(g, frozenset())
    if first is None:
        raise GraphError("no disjoint pair found")
    second = _find_cycle(g, frozenset(v for v, _ in first))
    if second is None:
        raise GraphError("no disjoint pair found")
    return cycle_pair_from_edges(g, [e for _, e in first], [e for _, e in second])


def _find_cycle(g: TorusGraph, banned: frozenset):
    budget = SEARCH_BUDGET
    for v0 in range(g.n_vertices):
        if v0 in banned:
            continue
        # iterative DFS over simple paths from v0 with running crossing sums
        stack = [(v0, 0, 0, iter(g.positive_out[v0]))]
        on_path = {v0}
        trail: list[tuple[int, int]] = []
        while stack:
            budget -= 1
            if budget < 0:
                raise GraphError("no disjoint pair found (search budget exhausted)")
            v, a, b, it = stack[-1]
            eid = next(it, None)
            if eid is None:
                stack.pop()
                on_path.discard(v)
                if trail:
                    trail.pop()
                continue
            e = g.edges[eid]
            na, nb = a + e.crossing[0], b + e.crossing[1]
            if e.head == v0 and (na, nb) == (1, 0):
                return trail + [(v, eid)]
            if e.head in banned or e.head in on_path:
                continue
            if abs(na) > 1 or abs(nb) > 1:
                continue
            trail.append((v, eid))
            on_path.add(e.head)
            stack.append((e.head, na, nb, iter(g.positive_out[e.head])))
    return None


@dataclass(frozen=True)
class TransferMatrices:
    Q: np.ndarray  # first hit of cycle 2 from cycle 1
    R: np.ndarray  # first return to cycle 1 from cycle 2
    S: np.ndarray  # Q @ R


def walk_matrix(g: TorusGraph, chi: Character) -> np.ndarray:
    """Phase-twisted transition matrix of the conductance walk."""
    nv = g.n_vertices
    W = np.zeros((nv, nv), dtype=complex)
    for e in g.edges:
        if e.conductance > 0:
            W[e.tail, e.head] += (e.conductance / g.out_conductance[e.tail]) \
                * chi.value_on_crossing(*e.crossing)
    return W


def _hit_operator(W: np.ndarray, start, absorb) -> np.ndarray:
    absorb_set = set(absorb)
    free = [i for i in range(W.shape[0]) if i not in absorb_set]
    index = {v: i for i, v in enumerate(free)}
    M = np.eye(len(free), dtype=complex) - W[np.ix_(free, free)]
    B = W[np.ix_(free, list(absorb))]
    try:
        X = np.linalg.solve(M, B)
    except np.linalg.LinAlgError as exc:
        raise GraphError(f"singular interior system: {exc}") from exc
    return X[[index[v] for v in start]]


def poisson_matrices(g: TorusGraph, chi: Character, pair: CyclePair) -> TransferMatrices:
    """Absorbing-walk solves: Q absorbs only the second cycle, R only the
    first, so intermediate revisits of the start cycle are allowed."""
    W = walk_matrix(g, chi)
    Q = _hit_operator(W, pair.vertices1, pair.vertices2)
    R = _hit_operator(W, pair.vertices2, pair.vertices1)
    return TransferMatrices(Q, R, Q @ R)


def fredholm_det(t: TransferMatrices) -> complex:
    return complex(np.linalg.det(np.eye(t.S.shape[0]) - t.S))


def op_norm_inf(M: np.ndarray) -> float:
    return float(np.abs(M).sum(axis=1).max())


def _logdet_id_minus(S: np.ndarray) -> complex:
    sign, logabs = np.linalg.slogdet(np.eye(S.shape[0]) - S)
    if sign == 0:
        raise GraphError("singular transfer determinant")
    return complex(logabs, cmath.phase(sign))


def _wrap_phase(x: float) -> float:
    return math.remainder(x, 2.0 * math.pi)


def verify_fred(g: TorusGraph, chi1: Character, chi2: Character,
                pair: CyclePair | None = None) -> float:
    """Residual of: twisted-determinant log ratio equals the log ratio of the
    transfer determinants, for two characters sharing the v component.
    The imaginary part is compared modulo full turns."""
    if chi1.v != chi2.v:
        raise ValueError("characters must share the vertical-cut component v")
    if pair is None:
        pair = choose_cycles(g)
    ld = []
    fred = []
    for chi in (chi1, chi2):
        det = determinant(assemble(g, chi))
        if det.is_zero:
            raise GraphError("twisted determinant vanished; ratio undefined")
        ld.append(complex(det.log_modulus, cmath.phase(det.phase)))
        fred.append(_logdet_id_minus(poisson_matrices(g, chi, pair).S))
    diff = (ld[1] - ld[0]) - (fred[1] - fred[0])
    return abs(complex(diff.real, _wrap_phase(diff.imag)))


def expansion_logdet(S: np.ndarray, order: int) -> tuple[complex, float]:
    """Truncated trace expansion of -log det(I - S) and its tail bound.

    Valid when the infinity norm of S is below one; the bound is
    m * norm^(order+1) / ((order+1) * (1 - norm))."""
    if order < 1 or order > 40:
        raise ValueError("expansion order must be in 1..40")
    nrm = op_norm_inf(S)
    if nrm >= 1.0:
        raise ValueError(f"expansion needs norm < 1, got {nrm}")
    total = 0.0 + 0.0j
    P = np.eye(S.shape[0], dtype=complex)
    for k in range(1, order + 1):
        P = P @ S
        total += np.trace(P) / k
    m = S.shape[0]
    bound = m * nrm ** (order + 1) / ((order + 1) * (1.0 - nrm))
    return total, bound


def simulate_hit_matrix(g: TorusGraph, pair: CyclePair, samples: int,
                        seed: int) -> np.ndarray:
    """Monte Carlo estimate of S at the trivial character: untwisted walks
    from each first-cycle vertex to the second cycle and back."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    n1 = len(pair.vertices1)
    set2 = set(pair.vertices2)
    set1 = set(pair.vertices1)
    idx1 = {v: i for i, v in enumerate(pair.vertices1)}
    counts = np.zeros((n1, n1))
    cum = {}
    for v in range(g.n_vertices):
        eids = g.positive_out[v]
        w = np.array([g.edges[k].conductance for k in eids])
        cum[v] = (eids, np.cumsum(w) / w.sum())
    for i, x in enumerate(pair.vertices1):
        for _ in range(samples):
            v = x
            stage = 0
            while True:
                eids, c = cum[v]
                j = min(int(np.searchsorted(c, rng.random())), len(eids) - 1)
                v = g.edges[eids[j]].head
                if stage == 0 and v in set2:
                    stage = 1
                elif stage == 1 and v in set1:
                    counts[i, idx1[v]] += 1
                    break
    return counts / samples


def write_transfer_csv(g: TorusGraph, chis, path, pair: CyclePair | None = None) -> None:
    """One row per character: operator norm, log det(I - S), and the ratio
    residual against the partner character (u + 1/2, v)."""
    if pair is None:
        pair = choose_cycles(g)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "norm_inf", "logdet_re", "logdet_im",
                         "fred_residual"])
        for chi in chis:
            t = poisson_matrices(g, chi, pair)
            ld = _logdet_id_minus(t.S)
            res = verify_fred(g, chi, chi.shifted(0.5, 0.0), pair)
            writer.writerow([repr(chi.u), repr(chi.v), repr(op_norm_inf(t.S)),
                             repr(ld.real), repr(ld.imag), repr(res)])
