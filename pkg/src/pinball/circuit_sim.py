"""Pauli-frame simulation of the noisy syndrome circuit.

The simulator tracks, for every qubit, the X and Z components of the
accumulated error frame.  All circuit operations act linearly on the
frame (H swaps the components, CNOT copies them, reset projects to
zero), so a block with several injected faults produces exactly the
XOR of the single-fault detector patterns.  That linearity is also
what makes single-fault enumeration cheap: each site is propagated
once per frame component and the Pauli classes of a channel are
assembled by XOR afterwards.

Measurement convention: ancillas and (after the closing Hadamard)
data qubits are read in the Z basis, so a recorded outcome is flipped
exactly when the X component of the frame is set, XORed with any
classical readout flip.

Detector layout for a block with R rounds: layer 0 compares round 0
against the reset state, layer l (1..R-1) compares consecutive
rounds, layer R compares the last round against the parities
reconstructed from the transversal data readout.  Detector ids are
`layer * n_x_ancillas + ancilla_index`.  The reported logical bit is
the parity of readout flips along the west data column.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from pinball.circuit import (DEPOL1, DEPOL2, MEASFLIP, RESETX, Circuit, Site,
                             build_circuit)
from pinball.lattice import Lattice


@dataclass(frozen=True)
class NoiseModel:
    """Uniform circuit noise, all channel rates proportional to one knob.

    Measurement flips and data-qubit idling during ancilla readout are
    the strong channels; single-qubit gates and plain idling are weak.
    """

    p: float
    meas: float = 5.0
    reset: float = 2.0
    two_q: float = 1.0
    one_q: float = 0.1
    idle: float = 0.1
    resonator: float = 2.0

    def __post_init__(self):
        if not (0.0 <= self.p <= 0.1):
            raise ValueError(f"base rate {self.p} outside [0, 0.1]")

    @classmethod
    def from_base(cls, p: float) -> "NoiseModel":
        return cls(p=p)

    def rate(self, mult_name: str) -> float:
        r = getattr(self, mult_name) * self.p
        assert 0.0 <= r < 0.5, f"channel rate {r} for {mult_name} is not small"
        return r


@dataclass
class DetectorBlock:
    """One decoded unit: all detector layers of a block plus ground truth."""

    d: int
    rounds: int
    dets: np.ndarray          # (rounds+1, n_x_ancillas) uint8
    true_flip: int

    @property
    def n_layers(self) -> int:
        return self.rounds + 1


@dataclass
class BlockBatch:
    d: int
    rounds: int
    dets: np.ndarray          # (shots, rounds+1, n_x_ancillas) uint8
    true_flips: np.ndarray    # (shots,) uint8

    @property
    def shots(self) -> int:
        return self.dets.shape[0]

    def block(self, i: int) -> DetectorBlock:
        return DetectorBlock(self.d, self.rounds, self.dets[i], int(self.true_flips[i]))


# pauli label -> (x bit, z bit)
_PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


def _label_bits(site: Site, label: str) -> np.ndarray:
    """Injection bit vector (x0, z0[, x1, z1]) for a pauli label at a site."""
    if site.kind == MEASFLIP:
        raise ValueError("measurement flips have no pauli label")
    if site.kind in (DEPOL1, RESETX):
        assert len(label) == 1
        return np.array(_PAULI_BITS[label], dtype=np.uint8)
    assert site.kind == DEPOL2 and len(label) == 2
    return np.array(_PAULI_BITS[label[0]] + _PAULI_BITS[label[1]], dtype=np.uint8)


def _run_frames(circuit: Circuit, shots: int,
                noise: Optional[NoiseModel] = None,
                rng: Optional[np.random.Generator] = None,
                injections: Optional[Dict[int, Tuple[np.ndarray, np.ndarray]]] = None,
                ) -> Tuple[np.ndarray, np.ndarray]:
    """Run the block over `shots` parallel frames.

    Noise is drawn per site when `noise`/`rng` are given; `injections`
    maps site id to (row indices, bit matrix) of deterministic faults,
    where the bit matrix has columns x0,z0[,x1,z1] (or a single flip
    column for measurement sites).  Returns the X-ancilla flip record
    of shape (shots, n_x_anc, rounds) and the data readout flips of
    shape (shots, n_data).
    """
    lat = circuit.lat
    n = lat.n_qubits
    x = np.zeros((shots, n), dtype=np.uint8)
    z = np.zeros((shots, n), dtype=np.uint8)
    m = np.zeros((shots, len(lat.x_ancillas), circuit.rounds), dtype=np.uint8)
    final = np.zeros((shots, lat.n_data), dtype=np.uint8)
    injections = injections or {}

    def inject(site: Site):
        hit = injections.get(site.id)
        if hit is not None:
            rows, bits = hit
            if site.kind == MEASFLIP:
                kind, *slot = site.meas_slot
                if kind == "anc":
                    m[rows, slot[0], slot[1]] ^= bits[:, 0]
                else:
                    final[rows, slot[0]] ^= bits[:, 0]
            else:
                for i, q in enumerate(site.qubits):
                    x[rows, q] ^= bits[:, 2 * i]
                    z[rows, q] ^= bits[:, 2 * i + 1]
        if noise is None:
            return
        r = noise.rate(site.mult)
        if r == 0.0:
            return
        hits = rng.random(shots) < r
        if not hits.any():
            return
        if site.kind == MEASFLIP:
            kind, *slot = site.meas_slot
            if kind == "anc":
                m[:, slot[0], slot[1]] ^= hits
            else:
                final[:, slot[0]] ^= hits
        elif site.kind == RESETX:
            x[:, site.qubits[0]] ^= hits
        elif site.kind == DEPOL1:
            pl = rng.integers(1, 4, size=shots)
            q = site.qubits[0]
            x[:, q] ^= hits & (pl != 3)
            z[:, q] ^= hits & (pl != 1)
        else:
            cls = rng.integers(1, 16, size=shots)
            p0, p1 = cls >> 2, cls & 3
            q0, q1 = site.qubits
            x[:, q0] ^= hits & ((p0 == 1) | (p0 == 2))
            z[:, q0] ^= hits & ((p0 == 2) | (p0 == 3))
            x[:, q1] ^= hits & ((p1 == 1) | (p1 == 2))
            z[:, q1] ^= hits & ((p1 == 2) | (p1 == 3))

    for op in circuit.ops:
        if op.kind == "R":
            x[:, op.qubits] = 0
            z[:, op.qubits] = 0
            for s in op.sites:
                inject(s)
        elif op.kind == "H":
            qs = op.qubits
            tmp = x[:, qs].copy()
            x[:, qs] = z[:, qs]
            z[:, qs] = tmp
            for s in op.sites:
                inject(s)
        elif op.kind == "CX":
            c, t = op.qubits[:, 0], op.qubits[:, 1]
            x[:, t] ^= x[:, c]
            z[:, c] ^= z[:, t]
            for s in op.sites:
                inject(s)
        elif op.kind == "MR":
            m[:, op.x_anc_indices, op.round] = x[:, op.x_anc_qubits]
            for s in op.sites:
                if s.kind == MEASFLIP:
                    inject(s)
            x[:, op.qubits] = 0
            z[:, op.qubits] = 0
            for s in op.sites:
                if s.kind != MEASFLIP:
                    inject(s)
        elif op.kind == "MD":
            final[:, :] = x[:, op.qubits]
            for s in op.sites:
                inject(s)
        else:
            raise AssertionError(op.kind)
    return m, final


def _parity_matrix(lat: Lattice) -> np.ndarray:
    pm = np.zeros((len(lat.x_ancillas), lat.n_data), dtype=np.uint8)
    for a in lat.x_ancillas:
        for q in a.data_neighbors:
            pm[a.index, q] = 1
    return pm


def _detectors(lat: Lattice, rounds: int, m: np.ndarray, final: np.ndarray
               ) -> Tuple[np.ndarray, np.ndarray]:
    shots = m.shape[0]
    n_anc = len(lat.x_ancillas)
    dets = np.empty((shots, rounds + 1, n_anc), dtype=np.uint8)
    dets[:, 0] = m[:, :, 0]
    for layer in range(1, rounds):
        dets[:, layer] = m[:, :, layer - 1] ^ m[:, :, layer]
    recon = (final @ _parity_matrix(lat).T) & 1
    dets[:, rounds] = m[:, :, rounds - 1] ^ recon
    flips = final[:, list(lat.observable_qubits)].sum(axis=1) & 1
    return dets, flips.astype(np.uint8)


_CIRCUIT_CACHE: Dict[Tuple[int, int], Circuit] = {}


def circuit_for(lat: Lattice, rounds: int) -> Circuit:
    key = (lat.d, rounds)
    if key not in _CIRCUIT_CACHE:
        _CIRCUIT_CACHE[key] = build_circuit(lat, rounds)
    return _CIRCUIT_CACHE[key]


def simulate_batch(lat: Lattice, noise: NoiseModel, rounds: int,
                   shots: int, seed) -> BlockBatch:
    """Monte Carlo reference path: every site drawn independently."""
    circuit = circuit_for(lat, rounds)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    m, final = _run_frames(circuit, shots, noise=noise, rng=rng)
    dets, flips = _detectors(lat, rounds, m, final)
    return BlockBatch(lat.d, rounds, dets, flips)


def simulate_shot(lat: Lattice, noise: NoiseModel, rounds: int,
                  seed, shot_index: int) -> DetectorBlock:
    """One block with its own seed, reproducible independent of batching."""
    circuit = circuit_for(lat, rounds)
    rng = np.random.default_rng(np.random.SeedSequence((seed, shot_index)))
    m, final = _run_frames(circuit, 1, noise=noise, rng=rng)
    dets, flips = _detectors(lat, rounds, m, final)
    return DetectorBlock(lat.d, rounds, dets[0], int(flips[0]))


def deterministic_block(lat: Lattice, rounds: int,
                        faults: Sequence[Tuple[int, str]]) -> DetectorBlock:
    """Noiseless block with specific faults forced in, for tests.

    `faults` is a list of (site id, pauli label); measurement sites
    take the label "flip".
    """
    circuit = circuit_for(lat, rounds)
    injections: Dict[int, Tuple[List[int], List[np.ndarray]]] = {}
    for site_id, label in faults:
        site = circuit.sites[site_id]
        bits = (np.array([1], dtype=np.uint8) if label == "flip"
                else _label_bits(site, label))
        injections.setdefault(site_id, ([], []))
        injections[site_id][0].append(0)
        injections[site_id][1].append(bits)
    packed = {sid: (np.array(rows), np.stack(bits))
              for sid, (rows, bits) in injections.items()}
    m, final = _run_frames(circuit, 1, injections=packed)
    dets, flips = _detectors(lat, rounds, m, final)
    return DetectorBlock(lat.d, rounds, dets[0], int(flips[0]))


def site_at(circuit: Circuit, round_: int, phase: str,
            qubits: Sequence[int], kind: Optional[str] = None) -> Site:
    """Look up the unique noise site at a circuit location.

    Ancilla readout slots hold both a flip and a reset site, so those
    lookups need the `kind` narrowed.
    """
    want = tuple(qubits)
    found = [s for s in circuit.sites
             if s.loc == (round_, phase) and s.qubits == want
             and (kind is None or s.kind == kind)]
    assert len(found) == 1, f"{len(found)} sites at {(round_, phase)} {want}"
    return found[0]


@dataclass(frozen=True)
class FaultClass:
    """One relevant outcome class of one noise site.

    `dets` lists the flipped detector ids sorted, at most two of them;
    `logical` says whether the class also flips the reported
    observable; `correction` is the set of data qubits whose readout
    the class flips (the repair a decoder should apply); `prob` is the
    class probability under the noise model it was enumerated with.
    """

    site_id: int
    loc: Tuple
    label: str
    prob: float
    dets: Tuple[int, ...]
    logical: bool
    correction: Tuple[int, ...]


# (d, rounds) -> list of (site_id, label, divisor, dets, logical, correction)
_SIG_CACHE: Dict[Tuple[int, int],
                 List[Tuple[int, str, int, Tuple[int, ...], bool, Tuple[int, ...]]]] = {}

_ENUM_CHUNK = 16384


def _basis_signatures(lat: Lattice, circuit: Circuit, rounds: int
                      ) -> Dict[Tuple[int, str], Tuple[frozenset, bool, frozenset]]:
    """Propagate every elementary frame bit of every site once."""
    elements: List[Tuple[int, str]] = []
    for s in circuit.sites:
        if s.kind == MEASFLIP:
            elements.append((s.id, "flip"))
        elif s.kind in (DEPOL1, RESETX):
            elements.append((s.id, "x0"))
            elements.append((s.id, "z0"))
        else:
            elements.extend((s.id, c) for c in ("x0", "z0", "x1", "z1"))

    comp_col = {"x0": 0, "z0": 1, "x1": 2, "z1": 3, "flip": 0}
    out: Dict[Tuple[int, str], Tuple[frozenset, bool, frozenset]] = {}
    for start in range(0, len(elements), _ENUM_CHUNK):
        chunk = elements[start:start + _ENUM_CHUNK]
        injections: Dict[int, Tuple[List[int], List[np.ndarray]]] = {}
        for row, (sid, comp) in enumerate(chunk):
            width = 1 if comp == "flip" else 2 * len(circuit.sites[sid].qubits)
            bits = np.zeros(width, dtype=np.uint8)
            bits[comp_col[comp]] = 1
            injections.setdefault(sid, ([], []))
            injections[sid][0].append(row)
            injections[sid][1].append(bits)
        packed = {sid: (np.array(rows), np.stack(bs))
                  for sid, (rows, bs) in injections.items()}
        m, final = _run_frames(circuit, len(chunk), injections=packed)
        dets, flips = _detectors(lat, rounds, m, final)

        def sparse_rows(mat):
            per: Dict[int, List[int]] = {}
            for r, c in zip(*(a.tolist() for a in np.nonzero(mat))):
                per.setdefault(r, []).append(c)
            return per

        det_rows = sparse_rows(dets.reshape(len(chunk), -1))
        fin_rows = sparse_rows(final)
        for row, (sid, comp) in enumerate(chunk):
            out[(sid, comp)] = (frozenset(det_rows.get(row, ())),
                                bool(flips[row]),
                                frozenset(fin_rows.get(row, ())))
    return out


def _signature_table(lat: Lattice, rounds: int
                     ) -> List[Tuple[int, str, int, Tuple[int, ...], bool]]:
    key = (lat.d, rounds)
    if key in _SIG_CACHE:
        return _SIG_CACHE[key]
    circuit = circuit_for(lat, rounds)
    basis = _basis_signatures(lat, circuit, rounds)
    west = set(lat.observable_qubits)

    def combine(parts):
        sig: frozenset = frozenset()
        logical = False
        corr: frozenset = frozenset()
        for s, l, c in parts:
            sig = sig ^ s
            logical ^= l
            corr = corr ^ c
        return sig, logical, corr

    table = []
    for site in circuit.sites:
        if site.kind == MEASFLIP:
            classes = [("flip", 1, *basis[(site.id, "flip")])]
        elif site.kind == RESETX:
            classes = [("X", 1, *basis[(site.id, "x0")])]
        elif site.kind == DEPOL1:
            bx, bz = basis[(site.id, "x0")], basis[(site.id, "z0")]
            classes = [("X", 3, *bx), ("Z", 3, *bz), ("Y", 3, *combine([bx, bz]))]
        else:
            parts = {c: basis[(site.id, c)] for c in ("x0", "z0", "x1", "z1")}
            classes = []
            for k in range(1, 16):
                p0, p1 = k >> 2, k & 3
                label = "IXYZ"[p0] + "IXYZ"[p1]
                use = []
                if p0 in (1, 2):
                    use.append(parts["x0"])
                if p0 in (2, 3):
                    use.append(parts["z0"])
                if p1 in (1, 2):
                    use.append(parts["x1"])
                if p1 in (2, 3):
                    use.append(parts["z1"])
                classes.append((label, 15, *combine(use)))
        for label, divisor, sig, logical, corr in classes:
            if not sig:
                # invisible classes must not move the observable
                assert not logical, (site.loc, site.qubits, label)
                continue
            assert len(sig) <= 2, \
                f"fault at {site.loc} {site.qubits} {label} flips {sorted(sig)}"
            assert logical == (len(corr & west) % 2 == 1), \
                (site.loc, site.qubits, label)
            table.append((site.id, label, divisor, tuple(sorted(sig)),
                          logical, tuple(sorted(corr))))
    _SIG_CACHE[key] = table
    return table


def enumerate_single_faults(lat: Lattice, noise: NoiseModel, rounds: int
                            ) -> List[FaultClass]:
    """All outcome classes of all sites that flip at least one detector.

    Every class flips one or two detectors; anything else is a
    modeling error and trips an assertion during table construction.
    """
    circuit = circuit_for(lat, rounds)
    out = []
    for site_id, label, divisor, dets, logical, corr in _signature_table(lat, rounds):
        site = circuit.sites[site_id]
        out.append(FaultClass(site_id=site_id, loc=site.loc, label=label,
                              prob=noise.rate(site.mult) / divisor,
                              dets=dets, logical=logical, correction=corr))
    return out


def det_id(lat: Lattice, layer: int, anc_index: int) -> int:
    return layer * len(lat.x_ancillas) + anc_index


def det_coords(lat: Lattice, det: int) -> Tuple[int, int]:
    """Detector id -> (layer, ancilla index)."""
    n = len(lat.x_ancillas)
    return det // n, det % n
