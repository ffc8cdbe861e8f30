"""Baseline predecoder with boundary-first checks and a one-sided time rule.

Rebuilt from its documented behaviour, not from original sources, so
only orderings and trends against the streaming predecoder are
meaningful, never absolute curves.

Per arriving layer: boundary-adjacent ancilla bits are cleared first
against an always-on virtual neighbour, then diagonal pairs inside
the arriving layer are cleared by per-ancilla scans (each unordered
pair is visited from both ends, so it is checked twice), and finally
the time rule compares the arriving layer with the buffered previous
one and clears only the older endpoint of a matching pair.  The newer
endpoint stays active, which strands bulk readout faults: nothing in
the next window pairs with them, so they surface as complex.  There
is no spacetime or hook handling of any kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from pinball.circuit_sim import DetectorBlock
from pinball.lattice import Lattice, shared_data_qubit
from pinball.predecoder import PinballResult

# scan order for diagonal neighbours, relative anchor offsets
_DIAG_ORDER = ((-1, -1), (-1, 1), (1, -1), (1, 1))


@dataclass
class CliqueDecoder:
    lat: Lattice
    rounds: int
    # (ancilla index, repair qubit, flips observable)
    boundary_checks: List[Tuple[int, int, bool]]
    # (center ancilla, neighbour ancilla, shared repair qubit)
    space_checks: List[Tuple[int, int, int]]
    # documented limitations, kept as data
    handles_spacetime: bool = False
    handles_hook: bool = False
    clears_newer_time_endpoint: bool = False


def build_clique(lat: Lattice, rounds: int) -> CliqueDecoder:
    boundary = []
    for anc_index in sorted(lat.edge_attachment):
        side, qubit = lat.edge_attachment[anc_index]
        boundary.append((anc_index, qubit, side == "L"))
    space = []
    for center in lat.x_ancillas:
        r, c = center.anchor
        for dr, dc in _DIAG_ORDER:
            other = lat.x_ancilla_at((r + dr, c + dc))
            if other is None:
                continue
            q = shared_data_qubit(lat, center, other)
            assert q is not None
            space.append((center.index, other.index, q))
    return CliqueDecoder(lat=lat, rounds=rounds,
                         boundary_checks=boundary, space_checks=space)


def _clique_layer(dec: CliqueDecoder, res: np.ndarray, new: np.ndarray,
                  logical: np.ndarray, corrections: Optional[np.ndarray]) -> None:
    """Apply the per-layer rules in documented order."""
    for anc, qubit, flips in dec.boundary_checks:
        fire = new[:, anc].copy()
        if not fire.any():
            continue
        new[:, anc] ^= fire
        if flips:
            logical ^= fire
        if corrections is not None:
            corrections[:, qubit] ^= fire
    for center, other, qubit in dec.space_checks:
        fire = new[:, center] & new[:, other]
        if not fire.any():
            continue
        new[:, center] ^= fire
        new[:, other] ^= fire
        if corrections is not None:
            corrections[:, qubit] ^= fire
    # one-sided time rule: the older endpoint is suppressed, the newer
    # endpoint is left for the next window (where nothing catches it)
    fire = res & new
    res ^= fire


def decode_batch_clique(dec: CliqueDecoder, dets: np.ndarray,
                        record: bool = False) -> PinballResult:
    shots = dets.shape[0]
    n_anc = len(dec.lat.x_ancillas)
    assert dets.shape[1] == dec.rounds + 1 and dets.shape[2] == n_anc
    res = np.zeros((shots, n_anc), dtype=np.uint8)
    logical = np.zeros(shots, dtype=np.uint8)
    complex_mask = np.zeros(shots, dtype=bool)
    corrections = (np.zeros((shots, dec.lat.n_data), dtype=np.uint8)
                   if record else None)
    for layer in range(dec.rounds + 1):
        new = np.ascontiguousarray(dets[:, layer]).copy()
        _clique_layer(dec, res, new, logical, corrections)
        complex_mask |= res.any(axis=1)
        res = new
    complex_mask |= res.any(axis=1)
    return PinballResult(complex_mask=complex_mask, predicted_flip=logical,
                         fired=None, corrections=corrections)


class CliqueRun:
    """Streaming per-block view, mirroring the predecoder's interface."""

    def __init__(self, dec: CliqueDecoder, record: bool = True):
        self.dec = dec
        self._res = np.zeros((1, len(dec.lat.x_ancillas)), dtype=np.uint8)
        self._logical = np.zeros(1, dtype=np.uint8)
        self._complex = np.zeros(1, dtype=bool)
        self._corr = (np.zeros((1, dec.lat.n_data), dtype=np.uint8)
                      if record else None)
        self._t = 0

    @property
    def residual(self) -> np.ndarray:
        return self._res[0]

    def predecode_round(self, layer_bits: np.ndarray) -> None:
        assert self._t <= self.dec.rounds
        new = np.asarray(layer_bits, dtype=np.uint8).reshape(1, -1).copy()
        _clique_layer(self.dec, self._res, new, self._logical, self._corr)
        self._complex |= self._res.any(axis=1)
        self._res = new
        self._t += 1

    def finalize_block(self) -> PinballResult:
        assert self._t == self.dec.rounds + 1
        self._complex |= self._res.any(axis=1)
        return PinballResult(complex_mask=self._complex,
                             predicted_flip=self._logical,
                             fired=None, corrections=self._corr)


@dataclass
class CliqueOutcome:
    corrections: Tuple[int, ...]
    is_complex: bool
    predicted_flip: int


def clique_predecode_block(dec: CliqueDecoder, block: DetectorBlock
                           ) -> CliqueOutcome:
    out = decode_batch_clique(dec, block.dets[None], record=True)
    return CliqueOutcome(
        corrections=tuple(np.flatnonzero(out.corrections[0]).tolist()),
        is_complex=bool(out.complex_mask[0]),
        predicted_flip=int(out.predicted_flip[0]))
