"""Decoding graph distilled from single-fault enumeration.

Vertices are detectors plus a west and an east boundary; edges are
the merged fault classes.  Every edge falls into one of five shapes:

    time   same ancilla, adjacent layers       (readout faults)
    space  diagonal ancillas, same layer       (persistent data errors)
    st     diagonal ancillas, adjacent layers  (data errors struck
           between their two readouts; the newer end is always the
           southern ancilla)
    hook   same column, two rows apart, adjacent layers, upper row
           older (plaquette-ancilla errors copied onto a data pair)
    edge   single detector next to the west or east boundary

Anything else trips an assertion: the whole pipeline downstream
assumes this taxonomy is exhaustive.

Classes landing on the same detector pair are merged with the
odd-number-of-firings rule q <- q1 + q2 - 2 q1 q2, and the merge
insists the constituents agree: same observable flip, and repairs
that differ at most by a stabilizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from pinball.circuit_sim import (FaultClass, NoiseModel, det_coords,
                                 enumerate_single_faults)
from pinball.lattice import Lattice

EDGE_KINDS = ("time", "space", "st", "hook", "edge")


def merge_probability(probs: Iterable[float]) -> float:
    """Probability that an odd number of independent events fire."""
    q = 0.0
    for p in probs:
        q = q + p - 2.0 * q * p
    return q


@dataclass(frozen=True)
class Edge:
    id: int
    dets: Tuple[int, ...]            # one or two detector ids, sorted
    kind: str
    boundary: Optional[str]          # "L" / "R" for kind "edge", else None
    prob: float
    weight: float
    logical: bool
    correction: Tuple[int, ...]      # data qubits whose readout to flip
    sources: Tuple[Tuple[int, str], ...]   # (site id, pauli label) merged in


@dataclass
class DecodingGraph:
    lat: Lattice
    rounds: int
    edges: List[Edge]
    by_dets: Dict[Tuple[int, ...], int] = field(default_factory=dict)
    incident: List[List[int]] = field(default_factory=list)
    class_edge: Dict[Tuple[int, str], int] = field(default_factory=dict)

    @property
    def n_dets(self) -> int:
        return (self.rounds + 1) * len(self.lat.x_ancillas)

    def edge_between(self, det_a: int, det_b: int) -> Optional[Edge]:
        eid = self.by_dets.get(tuple(sorted((det_a, det_b))))
        return None if eid is None else self.edges[eid]

    def boundary_edge(self, det: int) -> Optional[Edge]:
        eid = self.by_dets.get((det,))
        return None if eid is None else self.edges[eid]


def _static_syndrome_is_trivial(lat: Lattice, qubits: frozenset) -> bool:
    """True when flipping these readouts flips no parity reconstruction."""
    for anc in lat.x_ancillas:
        if len(qubits.intersection(anc.data_neighbors)) % 2 == 1:
            return False
    return True


def _classify(lat: Lattice, dets: Tuple[int, ...], correction: Tuple[int, ...]
              ) -> Tuple[str, Optional[str]]:
    d = lat.d
    if len(dets) == 1:
        cols = {q % d for q in correction}
        assert cols == {0} or cols == {d - 1}, \
            f"boundary edge with repair off the boundary columns: {correction}"
        return "edge", ("L" if cols == {0} else "R")

    (la, aa), (lb, ab) = (det_coords(lat, x) for x in dets)
    ra, ca = lat.x_ancillas[aa].anchor
    rb, cb = lat.x_ancillas[ab].anchor
    if aa == ab and abs(la - lb) == 1:
        return "time", None
    if la == lb and abs(ra - rb) == 1 and abs(ca - cb) == 1:
        return "space", None
    if abs(la - lb) == 1 and abs(ra - rb) == 1 and abs(ca - cb) == 1:
        older_row, newer_row = (ra, rb) if la < lb else (rb, ra)
        assert newer_row == older_row + 1, \
            f"spacetime edge with the newer end north of the older: {dets}"
        return "st", None
    if abs(la - lb) == 1 and abs(ra - rb) == 2 and ca == cb:
        older_row, newer_row = (ra, rb) if la < lb else (rb, ra)
        assert newer_row == older_row + 2, \
            f"hook edge with the upper row in the newer layer: {dets}"
        return "hook", None
    raise AssertionError(f"edge shape outside the taxonomy: {dets}")


def build_graph(lat: Lattice, noise: NoiseModel, rounds: int) -> DecodingGraph:
    classes = enumerate_single_faults(lat, noise, rounds)
    groups: Dict[Tuple[int, ...], List[FaultClass]] = {}
    for fc in classes:
        groups.setdefault(fc.dets, []).append(fc)

    west = set(lat.observable_qubits)
    edges: List[Edge] = []
    for dets in sorted(groups):
        members = groups[dets]
        first = members[0]
        for fc in members[1:]:
            assert fc.logical == first.logical, (dets, fc, first)
            diff = frozenset(fc.correction) ^ frozenset(first.correction)
            assert _static_syndrome_is_trivial(lat, diff), (dets, fc, first)
            assert len(diff & west) % 2 == 0, (dets, fc, first)
        prob = merge_probability(fc.prob for fc in members)
        assert 0.0 < prob < 0.5
        correction = min((fc.correction for fc in members),
                         key=lambda c: (len(c), c))
        kind, boundary = _classify(lat, dets, correction)
        edges.append(Edge(
            id=len(edges), dets=dets, kind=kind, boundary=boundary,
            prob=prob, weight=math.log((1.0 - prob) / prob),
            logical=first.logical, correction=correction,
            sources=tuple(sorted((fc.site_id, fc.label) for fc in members))))

    g = DecodingGraph(lat=lat, rounds=rounds, edges=edges)
    g.incident = [[] for _ in range(g.n_dets)]
    for e in edges:
        g.by_dets[e.dets] = e.id
        for det in e.dets:
            g.incident[det].append(e.id)
        for src in e.sources:
            g.class_edge[src] = e.id
    assert all(g.incident), "detector with no incident edges"
    return g


def dump_graph(g: DecodingGraph) -> str:
    """Stable text form, one edge per line."""
    lat = g.lat
    lines = [f"decoding-graph d={lat.d} rounds={g.rounds} "
             f"dets={g.n_dets} edges={len(g.edges)}"]
    for e in g.edges:
        ends = []
        for det in e.dets:
            layer, anc = det_coords(lat, det)
            r, c = lat.x_ancillas[anc].anchor
            ends.append(f"({layer},{r},{c})")
        if e.boundary:
            ends.append(e.boundary)
        corr = ",".join(str(q) for q in e.correction) or "-"
        lines.append(f"{e.id} {e.kind} {'-'.join(ends)} q={e.prob:.10g} "
                     f"corr={corr} logical={int(e.logical)}")
    return "\n".join(lines) + "\n"
