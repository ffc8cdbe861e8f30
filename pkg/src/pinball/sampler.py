"""Sparse block sampler driven by the enumerated fault classes.

Instead of walking every circuit site for every shot, each noise site
draws the number of affected shots in a chunk from a binomial, picks
that many distinct shots, and assigns each an outcome class uniformly
among the site's classes.  Frame propagation is linear, so the
per-shot detector pattern is the XOR of the chosen class signatures;
the sampled statistics match the circuit-level reference exactly in
distribution, at a small fraction of the cost.  Classes that touch no
detector are skipped outright: they cannot flip the observable either
(checked during enumeration), so dropping them is exact.

The sampler can also report which decoding-graph edge each realized
fault class belongs to, which is what the chain-length statistics
are built from.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from pinball.circuit_sim import (BlockBatch, NoiseModel, _signature_table,
                                 circuit_for)
from pinball.decoding_graph import DecodingGraph, build_graph
from pinball.lattice import Lattice


@dataclass
class _SiteDraw:
    rate: float
    divisor: int
    # per surviving class: detector ids, observable flip, graph edge id
    class_dets: List[np.ndarray]
    class_logical: List[int]
    class_edge: List[int]


@dataclass
class ClassTable:
    lat: Lattice
    rounds: int
    graph: DecodingGraph
    sites: List[_SiteDraw]
    rates: np.ndarray

    @property
    def n_dets(self) -> int:
        return (self.rounds + 1) * len(self.lat.x_ancillas)


def build_class_table(lat: Lattice, noise: NoiseModel, rounds: int,
                      graph: Optional[DecodingGraph] = None) -> ClassTable:
    if graph is None:
        graph = build_graph(lat, noise, rounds)
    circuit = circuit_for(lat, rounds)
    by_site: Dict[int, _SiteDraw] = {}
    for site_id, label, divisor, dets, logical, _ in _signature_table(lat, rounds):
        draw = by_site.get(site_id)
        if draw is None:
            rate = noise.rate(circuit.sites[site_id].mult)
            draw = _SiteDraw(rate=rate, divisor=divisor, class_dets=[],
                             class_logical=[], class_edge=[])
            by_site[site_id] = draw
        assert draw.divisor == divisor
        draw.class_dets.append(np.array(dets, dtype=np.int64))
        draw.class_logical.append(int(logical))
        draw.class_edge.append(graph.class_edge[(site_id, label)])
    sites = [by_site[sid] for sid in sorted(by_site)]
    for s in sites:
        assert len(s.class_dets) <= s.divisor
    return ClassTable(lat=lat, rounds=rounds, graph=graph, sites=sites,
                      rates=np.array([s.rate for s in sites]))


@dataclass
class SampleChunk:
    offset: int
    dets: np.ndarray              # (chunk, rounds+1, n_anc) uint8
    true_flips: np.ndarray        # (chunk,) uint8
    # realized decoding-graph edges, sorted by shot row: (rows, edge ids)
    fired: Optional[Tuple[np.ndarray, np.ndarray]]

    @property
    def shots(self) -> int:
        return self.dets.shape[0]

    def fired_slice(self, row: int) -> np.ndarray:
        rows, eids = self.fired
        lo = np.searchsorted(rows, row, side="left")
        hi = np.searchsorted(rows, row, side="right")
        return eids[lo:hi]


def sample_chunks(table: ClassTable, shots: int, seed,
                  chunk_size: int = 100_000,
                  want_edges: bool = False) -> Iterator[SampleChunk]:
    """Yield independent deterministic chunks covering `shots` blocks."""
    n_anc = len(table.lat.x_ancillas)
    n_layers = table.rounds + 1
    done = 0
    chunk_index = 0
    while done < shots:
        size = min(chunk_size, shots - done)
        rng = np.random.default_rng(
            np.random.SeedSequence((seed, chunk_index)))
        dets = np.zeros((size, n_layers * n_anc), dtype=np.uint8)
        flips = np.zeros(size, dtype=np.uint8)
        row_acc: List[np.ndarray] = []
        eid_acc: List[np.ndarray] = []
        counts = rng.binomial(size, table.rates)
        for sidx in np.flatnonzero(counts):
            site = table.sites[sidx]
            k = int(counts[sidx])
            rows = rng.choice(size, size=k, replace=False)
            cls = rng.integers(0, site.divisor, size=k)
            # classes are equiprobable, so the surviving ones can sit on
            # the low indices; higher draws are invisible outcomes
            for j, ds in enumerate(site.class_dets):
                sel = rows[cls == j]
                if sel.size == 0:
                    continue
                for det in ds:
                    dets[sel, det] ^= 1
                if site.class_logical[j]:
                    flips[sel] ^= 1
                if want_edges:
                    row_acc.append(sel)
                    eid_acc.append(np.full(sel.size, site.class_edge[j],
                                           dtype=np.int64))
        fired = None
        if want_edges:
            if row_acc:
                rows = np.concatenate(row_acc)
                eids = np.concatenate(eid_acc)
                order = np.argsort(rows, kind="stable")
                fired = (rows[order], eids[order])
            else:
                fired = (np.zeros(0, dtype=np.int64),
                         np.zeros(0, dtype=np.int64))
        yield SampleChunk(offset=done,
                          dets=dets.reshape(size, n_layers, n_anc),
                          true_flips=flips, fired=fired)
        done += size
        chunk_index += 1


def sample_batch(table: ClassTable, shots: int, seed,
                 chunk_size: int = 100_000) -> BlockBatch:
    """Materialize a full batch; for sizes that fit in memory."""
    parts = list(sample_chunks(table, shots, seed, chunk_size))
    return BlockBatch(table.lat.d, table.rounds,
                      np.concatenate([c.dets for c in parts]),
                      np.concatenate([c.true_flips for c in parts]))


# ---------------------------------------------------------------------------
# realized-chain analysis


def _components(graph: DecodingGraph, eids: np.ndarray) -> List[List[int]]:
    """Group realized edges into chains; a chain is a connected set of
    edges sharing detectors.  Boundary edges have one detector, so two
    faults meeting only at the boundary stay separate chains."""
    parent: Dict[int, int] = {}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid in eids:
        for det in graph.edges[eid].dets:
            if det not in parent:
                parent[det] = det
        dets = tuple(graph.edges[eid].dets)
        if len(dets) == 2:
            ra, rb = find(dets[0]), find(dets[1])
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: Dict[int, List[int]] = {}
    for eid in eids:
        root = find(min(graph.edges[eid].dets))
        groups.setdefault(root, []).append(int(eid))
    return list(groups.values())


def chunk_chain_stats(graph: DecodingGraph, chunk: SampleChunk
                      ) -> Tuple[np.ndarray, Dict[str, int]]:
    """Per-shot longest chain length, plus counts of isolated
    single-edge chains by edge kind."""
    assert chunk.fired is not None
    rows, eids = chunk.fired
    longest = np.zeros(chunk.shots, dtype=np.int64)
    kinds: Dict[str, int] = {}
    starts = np.searchsorted(rows, np.arange(chunk.shots + 1))
    for s in range(chunk.shots):
        lo, hi = starts[s], starts[s + 1]
        if lo == hi:
            continue
        # several physical faults on one edge count as one realized edge
        comps = _components(graph, np.unique(eids[lo:hi]))
        longest[s] = max(len(c) for c in comps)
        for c in comps:
            if len(c) == 1:
                kind = graph.edges[c[0]].kind
                kinds[kind] = kinds.get(kind, 0) + 1
    return longest, kinds
