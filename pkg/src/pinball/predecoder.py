"""Streaming predecoder: fixed pattern-matching passes per layer pair.

The decoder holds one layer of residual detector bits and consumes
syndrome layers as they arrive.  Every decoding-graph edge shape
collapses, once the layer index is dropped, into a small set of
spatial primitives, and each primitive becomes one slot comparison in
a fixed sequence of passes over the (older, incoming) layer window:

    M            same-ancilla pair across the window
    B1..B4       diagonal pair inside the older layer, one pass per
                 diagonal direction so no ancilla is read twice
    ST1, ST2     diagonal pair across the window (incoming end south),
                 one pass per direction
    H            two-rows-apart pair across the window (upper older)
    E            leftover bit on a boundary-adjacent ancilla, matched
                 against an always-on virtual neighbour

A pass fires when all its slots are set; it clears them and emits the
corresponding graph edge.  Passes that only read the older layer (B,
E) run after M so readout-fault pairs are never broken up, and E runs
dead last as the catch-all.  After the passes, any bit still set in
the layer leaving the window marks the whole block as complex;
processing continues, but a complex block is meant to be handed to
the second-level decoder instead.  A closing virtual all-zero layer
gives the final layer its B and E passes.

Every edge of the decoding graph is fireable by exactly one pass at
exactly one step; construction asserts this, asserts that a
primitive's layer instances agree on repair and observable effect,
and asserts that no two primitives of one pass share a slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from pinball.decoding_graph import DecodingGraph, Edge
from pinball.circuit_sim import det_coords

STAGE_ORDER = ("M", "B1", "B2", "B3", "B4", "ST1", "ST2", "H", "E")

# diagonal direction from the even-row anchor, as (dr, dc)
_B_GROUP = {(1, 1): "B1", (1, -1): "B2", (-1, 1): "B3", (-1, -1): "B4"}


@dataclass
class Primitive:
    kind: str
    res_slots: Tuple[int, ...]      # ancilla indices read in the older layer
    new_slots: Tuple[int, ...]      # ancilla indices read in the incoming layer
    correction: Tuple[int, ...]
    logical: bool
    edge_at: Dict[int, int]         # consume step -> graph edge id


@dataclass
class Stage:
    name: str
    prims: List[Primitive]
    res_idx: np.ndarray             # (n_prims, n_res_slots)
    new_idx: np.ndarray             # (n_prims, n_new_slots)
    logical_mask: np.ndarray        # (n_prims,) uint8


@dataclass
class Pipeline:
    graph: DecodingGraph
    stages: List[Stage]

    @property
    def rounds(self) -> int:
        return self.graph.rounds

    @property
    def n_anc(self) -> int:
        return len(self.graph.lat.x_ancillas)


def _primitive_key(g: DecodingGraph, e: Edge):
    """Collapse an edge to its spatial primitive and its consume step.

    Step t consumes the window (layer t-1, layer t); edges living
    entirely in the older layer are consumed one step after that layer
    arrived.
    """
    lat = g.lat
    if e.kind == "edge":
        layer, anc = det_coords(lat, e.dets[0])
        return ("edge", (anc,), ()), layer + 1
    (la, aa), (lb, ab) = (det_coords(lat, det) for det in e.dets)
    if e.kind == "time":
        assert la + 1 == lb and aa == ab
        return ("time", (aa,), (aa,)), lb
    if e.kind == "space":
        assert la == lb
        return ("space", tuple(sorted((aa, ab))), ()), la + 1
    # st and hook run across the window; order ends as (older, newer)
    older, newer = ((aa, ab) if la < lb else (ab, aa))
    return (e.kind, (older,), (newer,)), max(la, lb)


def _stage_of(g: DecodingGraph, kind: str, res_slots, new_slots) -> str:
    lat = g.lat
    if kind == "time":
        return "M"
    if kind == "space":
        ra, ca = lat.x_ancillas[res_slots[0]].anchor
        rb, cb = lat.x_ancillas[res_slots[1]].anchor
        even, odd = ((ra, ca), (rb, cb)) if ra % 2 == 0 else ((rb, cb), (ra, ca))
        assert even[0] % 2 == 0 and odd[0] % 2 != 0
        return _B_GROUP[(odd[0] - even[0], odd[1] - even[1])]
    if kind == "st":
        cu = lat.x_ancillas[res_slots[0]].anchor[1]
        cv = lat.x_ancillas[new_slots[0]].anchor[1]
        return "ST1" if cv - cu == -1 else "ST2"
    if kind == "hook":
        return "H"
    assert kind == "edge"
    return "E"


def build_pipeline(g: DecodingGraph) -> Pipeline:
    lat = g.lat
    rounds = g.rounds
    prims: Dict[Tuple, Primitive] = {}
    for e in g.edges:
        (kind, res_slots, new_slots), step = _primitive_key(g, e)
        key = (kind, res_slots, new_slots)
        prim = prims.get(key)
        if prim is None:
            prim = Primitive(kind=kind, res_slots=res_slots, new_slots=new_slots,
                             correction=e.correction, logical=e.logical,
                             edge_at={})
            prims[key] = prim
        else:
            # the repair must not depend on which layer the pair sat in
            assert prim.correction == e.correction, (key, e)
            assert prim.logical == e.logical, (key, e)
        assert step not in prim.edge_at
        prim.edge_at[step] = e.id

    windows = {"time": set(range(1, rounds + 1)),
               "space": set(range(1, rounds + 2)),
               "st": set(range(1, rounds + 1)),
               "hook": set(range(1, rounds + 1)),
               "edge": set(range(1, rounds + 2))}
    for key, prim in prims.items():
        assert set(prim.edge_at) == windows[prim.kind], (key, prim.edge_at)

    for (anc,), prim in ((k[1], p) for k, p in prims.items() if k[0] == "edge"):
        side, qubit = lat.edge_attachment[anc]
        assert prim.correction == (qubit,), (anc, prim.correction)
        assert prim.logical == (side == "L")

    by_stage: Dict[str, List[Primitive]] = {name: [] for name in STAGE_ORDER}
    for (kind, res_slots, new_slots), prim in sorted(prims.items()):
        by_stage[_stage_of(g, kind, res_slots, new_slots)].append(prim)

    stages = []
    for name in STAGE_ORDER:
        members = by_stage[name]
        if not members:
            # a stage with nothing to do at this distance still occupies
            # its slot in the pass order
            stages.append(Stage(
                name=name, prims=[],
                res_idx=np.zeros((0, 1), dtype=np.int64),
                new_idx=np.zeros((0, 0), dtype=np.int64),
                logical_mask=np.zeros(0, dtype=np.uint8)))
            continue
        res_cols = [p.res_slots for p in members]
        new_cols = [p.new_slots for p in members]
        flat_res = [a for slots in res_cols for a in slots]
        flat_new = [a for slots in new_cols for a in slots]
        assert len(flat_res) == len(set(flat_res)), f"slot clash in {name}"
        assert len(flat_new) == len(set(flat_new)), f"slot clash in {name}"
        stages.append(Stage(
            name=name, prims=members,
            res_idx=np.array(res_cols, dtype=np.int64),
            new_idx=(np.array(new_cols, dtype=np.int64) if flat_new
                     else np.zeros((len(members), 0), dtype=np.int64)),
            logical_mask=np.array([p.logical for p in members], dtype=np.uint8)))

    pipe = Pipeline(graph=g, stages=stages)
    fired_total = sum(len(p.edge_at) for p in prims.values())
    assert fired_total == len(g.edges), "edges not covered exactly once"
    return pipe


@dataclass
class PinballResult:
    complex_mask: np.ndarray        # (shots,) bool: residual left somewhere
    predicted_flip: np.ndarray      # (shots,) uint8: observable flip applied
    fired: Optional[List[List[int]]] = None          # graph edge ids per shot
    corrections: Optional[np.ndarray] = None         # (shots, n_data) uint8

    @property
    def simple_mask(self) -> np.ndarray:
        return ~self.complex_mask


def _step(pipe: Pipeline, t: int, res: np.ndarray, new: np.ndarray,
          logical: np.ndarray, fired, corrections) -> None:
    for stage in pipe.stages:
        if not stage.prims:
            continue
        fire = res[:, stage.res_idx[:, 0]].copy()
        for col in range(1, stage.res_idx.shape[1]):
            fire &= res[:, stage.res_idx[:, col]]
        for col in range(stage.new_idx.shape[1]):
            fire &= new[:, stage.new_idx[:, col]]
        if not fire.any():
            continue
        for col in range(stage.res_idx.shape[1]):
            res[:, stage.res_idx[:, col]] ^= fire
        for col in range(stage.new_idx.shape[1]):
            new[:, stage.new_idx[:, col]] ^= fire
        logical ^= (fire & stage.logical_mask[None, :]).sum(axis=1).astype(np.uint8) & 1
        if fired is not None:
            rows, cols = np.nonzero(fire)
            for shot, prim_i in zip(rows.tolist(), cols.tolist()):
                prim = stage.prims[prim_i]
                fired[shot].append(prim.edge_at[t])
                for q in prim.correction:
                    corrections[shot, q] ^= 1


def decode_batch_pinball(pipe: Pipeline, dets: np.ndarray,
                         record: bool = False) -> PinballResult:
    """Decode a batch of blocks; dets has shape (shots, rounds+1, n_anc)."""
    shots = dets.shape[0]
    n_anc = pipe.n_anc
    assert dets.shape[1] == pipe.rounds + 1 and dets.shape[2] == n_anc
    res = np.zeros((shots, n_anc), dtype=np.uint8)
    logical = np.zeros(shots, dtype=np.uint8)
    complex_mask = np.zeros(shots, dtype=bool)
    fired = [[] for _ in range(shots)] if record else None
    corrections = (np.zeros((shots, pipe.graph.lat.n_data), dtype=np.uint8)
                   if record else None)
    zero_layer = np.zeros((shots, n_anc), dtype=np.uint8)
    for t in range(pipe.rounds + 2):
        new = (np.ascontiguousarray(dets[:, t]) if t <= pipe.rounds
               else zero_layer).copy()
        _step(pipe, t, res, new, logical, fired, corrections)
        complex_mask |= res.any(axis=1)
        res = new
    assert not res.any()
    return PinballResult(complex_mask=complex_mask, predicted_flip=logical,
                         fired=fired, corrections=corrections)


class PredecoderRun:
    """Streaming per-block view: feed layers one at a time."""

    def __init__(self, pipe: Pipeline, record: bool = True):
        self.pipe = pipe
        self._res = np.zeros((1, pipe.n_anc), dtype=np.uint8)
        self._logical = np.zeros(1, dtype=np.uint8)
        self._complex = np.zeros(1, dtype=bool)
        self._fired = [[]] if record else None
        self._corr = (np.zeros((1, pipe.graph.lat.n_data), dtype=np.uint8)
                      if record else None)
        self._t = 0

    def predecode_round(self, layer_bits: np.ndarray) -> None:
        assert self._t <= self.pipe.rounds, "block already has all its layers"
        new = np.asarray(layer_bits, dtype=np.uint8).reshape(1, -1).copy()
        _step(self.pipe, self._t, self._res, new, self._logical,
              self._fired, self._corr)
        self._complex |= self._res.any(axis=1)
        self._res = new
        self._t += 1

    def finalize_block(self) -> PinballResult:
        assert self._t == self.pipe.rounds + 1, "feed all layers first"
        new = np.zeros((1, self.pipe.n_anc), dtype=np.uint8)
        _step(self.pipe, self._t, self._res, new, self._logical,
              self._fired, self._corr)
        self._complex |= self._res.any(axis=1)
        self._res = new
        self._t += 1
        return PinballResult(complex_mask=self._complex,
                             predicted_flip=self._logical,
                             fired=self._fired, corrections=self._corr)


def dump_pipeline(pipe: Pipeline) -> str:
    """Stable text form, one section per stage."""
    lat = pipe.graph.lat
    lines = [f"pipeline d={lat.d} rounds={pipe.rounds} "
             f"stages={len(pipe.stages)}"]

    def anchor(a: int) -> str:
        r, c = lat.x_ancillas[a].anchor
        return f"({r},{c})"

    for stage in pipe.stages:
        lines.append(f"stage {stage.name} prims={len(stage.prims)}")
        for prim in stage.prims:
            res = ",".join(anchor(a) for a in prim.res_slots)
            new = ",".join(anchor(a) for a in prim.new_slots) or "-"
            corr = ",".join(str(q) for q in prim.correction) or "-"
            lines.append(f"  {prim.kind} res={res} new={new} corr={corr} "
                         f"logical={int(prim.logical)}")
    return "\n".join(lines) + "\n"
