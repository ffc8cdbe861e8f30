"""Explicit noisy syndrome-extraction circuit for one detector block.

The block runs `rounds` stabilizer rounds plus a transversal X-basis
readout of the data qubits:

    R all | H data+Xanc | CX t1..t4 | H Xanc | MR anc     (round 0)
          | H Xanc      | CX t1..t4 | H Xanc | MR anc     (rounds 1..)
          | H data | M data                               (readout)

X ancillas are CNOT controls, Z ancillas CNOT targets, so Z errors on
data copy onto X ancillas (detection) while Z errors on a Z ancilla
copy onto the data qubits it still has to touch (the hook mechanism).
Z-ancilla readout feeds no detector in this package and is not
recorded; Z-ancilla resets still happen because they scrub the frame.

Every noise channel instance is a `Site`.  Rates are `mult * p` with
the multipliers taken from the noise model: two-qubit depolarizing
after each CNOT, single-qubit depolarizing after each Hadamard, idle
depolarizing on untouched qubits in every gate layer, a stronger idle
on data while the ancillas are measured and reset, classical
measurement flips, and a bit flip after each reset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from pinball.lattice import Lattice

# site kinds
DEPOL1 = "DEPOL1"
DEPOL2 = "DEPOL2"
MEASFLIP = "MEASFLIP"
RESETX = "RESETX"


@dataclass(frozen=True)
class Site:
    """One noise channel instance at a definite circuit location."""

    id: int
    kind: str
    qubits: Tuple[int, ...]
    mult: float                     # rate = mult * p
    loc: Tuple                      # (round, phase) human-readable address
    meas_slot: Optional[Tuple] = None   # MEASFLIP target: ("anc", a, r) or ("data", q)


@dataclass
class Op:
    """One gate layer plus the noise sites bound to it."""

    kind: str                       # "R" | "H" | "CX" | "MR" | "MD"
    qubits: np.ndarray              # acted qubits; for CX: shape (n, 2) [control, target]
    sites: List[Site]
    round: int
    # MR only: which rows of the X measurement record this layer fills
    x_anc_indices: Optional[np.ndarray] = None
    x_anc_qubits: Optional[np.ndarray] = None


@dataclass
class Circuit:
    lat: Lattice
    rounds: int
    ops: List[Op]
    sites: List[Site]

    @property
    def n_layers(self) -> int:
        return self.rounds + 1


def build_circuit(lat: Lattice, rounds: int) -> Circuit:
    """Lay out the whole block as an ordered op list with noise sites."""
    assert rounds >= 1
    d = lat.d
    n_data = lat.n_data
    all_qubits = np.arange(lat.n_qubits)
    data = np.arange(n_data)
    x_anc_qubits = np.array([a.qubit for a in lat.x_ancillas])
    x_anc_indices = np.arange(len(lat.x_ancillas))
    anc_qubits = np.array([a.qubit for a in lat.x_ancillas + lat.z_ancillas])

    sites: List[Site] = []
    ops: List[Op] = []

    def add_site(kind, qubits, mult, loc, meas_slot=None) -> Site:
        s = Site(id=len(sites), kind=kind, qubits=tuple(int(q) for q in qubits),
                 mult=mult, loc=loc, meas_slot=meas_slot)
        sites.append(s)
        return s

    def add_op(kind, qubits, op_sites, rnd, **kw):
        ops.append(Op(kind=kind, qubits=qubits, sites=op_sites, round=rnd, **kw))

    def one_q_layer(gate_targets: np.ndarray, rnd: int, phase: str):
        layer_sites = []
        gate_set = set(int(q) for q in gate_targets)
        for q in all_qubits:
            mult = "one_q" if int(q) in gate_set else "idle"
            layer_sites.append(add_site(DEPOL1, (q,), mult, (rnd, phase)))
        add_op("H", gate_targets, layer_sites, rnd)

    # initial reset of everything
    prep_sites = [add_site(RESETX, (q,), "reset", (0, "prep")) for q in all_qubits]
    add_op("R", all_qubits, prep_sites, 0)

    cx_pairs = {t: [] for t in range(1, 5)}
    for anc in lat.x_ancillas:
        for t, q in anc.schedule:
            cx_pairs[t].append((anc.qubit, q))        # ancilla controls
    for anc in lat.z_ancillas:
        for t, q in anc.schedule:
            cx_pairs[t].append((q, anc.qubit))        # ancilla is target
    cx_arrays = {t: np.array(sorted(cx_pairs[t])) for t in range(1, 5)}

    for r in range(rounds):
        # round 0 also rotates the data into the X basis
        h_targets = (np.concatenate([data, x_anc_qubits]) if r == 0
                     else x_anc_qubits)
        one_q_layer(np.sort(h_targets), r, "h1")

        for t in range(1, 5):
            pairs = cx_arrays[t]
            layer_sites = [
                add_site(DEPOL2, (c, tq), "two_q", (r, f"cx{t}"))
                for c, tq in pairs
            ]
            busy = set(pairs.reshape(-1).tolist())
            for q in all_qubits:
                if int(q) not in busy:
                    layer_sites.append(add_site(DEPOL1, (q,), "idle", (r, f"cx{t}")))
            add_op("CX", pairs, layer_sites, r)

        one_q_layer(x_anc_qubits, r, "h2")

        mr_sites = []
        for a in lat.x_ancillas:
            mr_sites.append(add_site(MEASFLIP, (a.qubit,), "meas", (r, "mr"),
                                     meas_slot=("anc", a.index, r)))
        for q in anc_qubits:
            mr_sites.append(add_site(RESETX, (q,), "reset", (r, "mr")))
        for q in data:
            mr_sites.append(add_site(DEPOL1, (q,), "resonator", (r, "mr")))
        add_op("MR", anc_qubits, mr_sites, r,
               x_anc_indices=x_anc_indices, x_anc_qubits=x_anc_qubits)

    # transversal X-basis data readout; ancillas are done and get no sites
    hd_sites = [add_site(DEPOL1, (q,), "one_q", (rounds, "final_h")) for q in data]
    add_op("H", data, hd_sites, rounds)
    md_sites = [add_site(MEASFLIP, (q,), "meas", (rounds, "final_m"),
                         meas_slot=("data", int(q))) for q in data]
    add_op("MD", data, md_sites, rounds)

    return Circuit(lat=lat, rounds=rounds, ops=ops, sites=sites)
