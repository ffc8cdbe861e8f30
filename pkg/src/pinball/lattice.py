"""Rotated surface-code geometry and the four-step CNOT extraction schedule.

Conventions used throughout the package:

* Data qubits sit on the integer grid (row, col) with 0 <= row, col < d.
* Ancillas sit on plaquette centers.  A plaquette is addressed by its
  north-west data corner, the "anchor" (r, c); the physical center is at
  (r + 0.5, c + 0.5).  Anchors range over -1..d-2 so that weight-2
  boundary plaquettes hang off the lattice edges.
* A plaquette anchored at (r, c) is X-type when (r + c) is even,
  Z-type otherwise.  Weight-2 X plaquettes live on the north/south
  edges, weight-2 Z plaquettes on the west/east edges.  Consequently a
  chain of Z errors on data qubits can only terminate unseen at the
  west or east edge, and one representative of the X logical operator
  is the full west column of data qubits (column 0).
* Within a round every ancilla talks to its data neighbors in four CNOT
  timesteps.  X ancillas (ancilla = control) visit corners in the order
  NW, NE, SW, SE; Z ancillas (ancilla = target) in the order
  NW, SW, NE, SE.  The two orders interleave so that no data qubit is
  touched twice in the same timestep; boundary ancillas keep the
  timesteps their missing-corner bulk versions would use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

Coord = Tuple[int, int]

# corner -> timestep, per ancilla kind
X_ORDER = {"nw": 1, "ne": 2, "sw": 3, "se": 4}
Z_ORDER = {"nw": 1, "sw": 2, "ne": 3, "se": 4}

_CORNER_OFFSETS = {"nw": (0, 0), "ne": (0, 1), "sw": (1, 0), "se": (1, 1)}


@dataclass(frozen=True)
class Ancilla:
    """One stabilizer-measurement ancilla.

    `schedule` lists (timestep, data_qubit_index) pairs sorted by
    timestep.  `qubit` is the index into the flat qubit namespace used
    by the circuit simulator.  `boundary` is None in the bulk, else the
    edge the weight-2 plaquette hangs off ("n", "s", "w", "e").
    """

    kind: str            # "X" or "Z"
    anchor: Coord        # NW data corner of the plaquette
    index: int           # position within the per-kind ancilla list
    qubit: int
    schedule: Tuple[Tuple[int, int], ...]
    boundary: Optional[str]

    @property
    def center(self) -> Tuple[float, float]:
        return (self.anchor[0] + 0.5, self.anchor[1] + 0.5)

    @property
    def data_neighbors(self) -> Tuple[int, ...]:
        return tuple(q for _, q in self.schedule)

    @property
    def boundary_kind(self) -> str:
        # Weight-2 X plaquettes sit on the north/south (X) boundary,
        # weight-2 Z plaquettes on the west/east (Z) boundary.
        if self.boundary is None:
            return "bulk"
        return "x_boundary" if self.boundary in ("n", "s") else "z_boundary"


@dataclass
class Lattice:
    """Static geometry for one code distance."""

    d: int
    x_ancillas: List[Ancilla] = field(default_factory=list)
    z_ancillas: List[Ancilla] = field(default_factory=list)
    # data qubit index -> indices into x_ancillas that contain it
    x_ancs_of_data: List[Tuple[int, ...]] = field(default_factory=list)
    # x_ancilla index -> ("L"|"R", boundary data qubit) for ancillas
    # touching the west/east edge columns, where Z chains terminate
    edge_attachment: Dict[int, Tuple[str, int]] = field(default_factory=dict)

    @property
    def n_data(self) -> int:
        return self.d * self.d

    @property
    def n_ancillas_per_kind(self) -> int:
        return (self.d * self.d - 1) // 2

    @property
    def n_qubits(self) -> int:
        return 2 * self.d * self.d - 1

    def data_index(self, r: int, c: int) -> int:
        assert 0 <= r < self.d and 0 <= c < self.d
        return r * self.d + c

    def data_coord(self, idx: int) -> Coord:
        return divmod(idx, self.d)

    @property
    def observable_qubits(self) -> Tuple[int, ...]:
        """Support of the X logical readout: the west column of data."""
        return tuple(r * self.d for r in range(self.d))

    def x_ancilla_at(self, anchor: Coord) -> Optional[Ancilla]:
        return self._x_by_anchor.get(anchor)

    def z_ancilla_at(self, anchor: Coord) -> Optional[Ancilla]:
        return self._z_by_anchor.get(anchor)

    def __post_init__(self) -> None:
        self._x_by_anchor: Dict[Coord, Ancilla] = {}
        self._z_by_anchor: Dict[Coord, Ancilla] = {}


def _plaquette_positions(d: int, kind: str) -> List[Coord]:
    want = 0 if kind == "X" else 1  # (r + c) parity selecting the kind
    anchors = []
    for r in range(0, d - 1):
        for c in range(0, d - 1):
            if (r + c) % 2 == want:
                anchors.append((r, c))
    if kind == "X":
        # north edge (r = -1) keeps X-type positions, likewise south
        anchors += [(-1, c) for c in range(0, d - 1) if (-1 + c) % 2 == want]
        anchors += [(d - 1, c) for c in range(0, d - 1) if (d - 1 + c) % 2 == want]
    else:
        anchors += [(r, -1) for r in range(0, d - 1) if (r - 1) % 2 == want]
        anchors += [(r, d - 1) for r in range(0, d - 1) if (r + d - 1) % 2 == want]
    return sorted(anchors)


def _boundary_side(d: int, anchor: Coord) -> Optional[str]:
    r, c = anchor
    if r == -1:
        return "n"
    if c == -1:
        return "w"
    if c == d - 1:
        return "e"
    if r == d - 1:
        return "s"
    return None


def build_lattice(d: int) -> Lattice:
    """Construct the distance-d lattice with its CNOT schedule.

    d must be odd and 3 <= d <= 25.
    """
    if d % 2 != 1 or not (3 <= d <= 25):
        raise ValueError(f"code distance must be odd and within 3..25, got {d}")

    lat = Lattice(d=d)
    qubit = d * d  # data qubits occupy 0..d*d-1

    for kind in ("X", "Z"):
        order = X_ORDER if kind == "X" else Z_ORDER
        ancs = lat.x_ancillas if kind == "X" else lat.z_ancillas
        by_anchor = lat._x_by_anchor if kind == "X" else lat._z_by_anchor
        for anchor in _plaquette_positions(d, kind):
            r, c = anchor
            sched = []
            for corner, (dr, dc) in _CORNER_OFFSETS.items():
                rr, cc = r + dr, c + dc
                if 0 <= rr < d and 0 <= cc < d:
                    sched.append((order[corner], rr * d + cc))
            sched.sort()
            anc = Ancilla(
                kind=kind,
                anchor=anchor,
                index=len(ancs),
                qubit=qubit,
                schedule=tuple(sched),
                boundary=_boundary_side(d, anchor),
            )
            ancs.append(anc)
            by_anchor[anchor] = anc
            qubit += 1

    expected = lat.n_ancillas_per_kind
    assert len(lat.x_ancillas) == expected and len(lat.z_ancillas) == expected

    # schedule validity: no data qubit used twice in one timestep
    seen: Dict[Tuple[int, int], Ancilla] = {}
    for anc in lat.x_ancillas + lat.z_ancillas:
        for t, q in anc.schedule:
            key = (t, q)
            assert key not in seen, (
                f"data qubit {q} double-booked in timestep {t} by "
                f"{seen[key].kind}{seen[key].anchor} and {anc.kind}{anc.anchor}"
            )
            seen[key] = anc

    # reverse map data -> X ancillas; bulk data sees 2, edge-column data 1
    members: List[List[int]] = [[] for _ in range(d * d)]
    for anc in lat.x_ancillas:
        for _, q in anc.schedule:
            members[q].append(anc.index)
    lat.x_ancs_of_data = [tuple(m) for m in members]
    for q, m in enumerate(lat.x_ancs_of_data):
        _, col = divmod(q, d)
        assert len(m) == (1 if col in (0, d - 1) else 2), (q, m)

    # west/east attachments used for boundary (edge-space) corrections;
    # pick the smallest-index boundary-column qubit per ancilla
    for anc in lat.x_ancillas:
        west = sorted(q for q in anc.data_neighbors if q % d == 0)
        east = sorted(q for q in anc.data_neighbors if q % d == d - 1)
        assert not (west and east)
        if west:
            lat.edge_attachment[anc.index] = ("L", west[0])
        elif east:
            lat.edge_attachment[anc.index] = ("R", east[0])

    return lat


def shared_data_qubit(lat: Lattice, a: Ancilla, b: Ancilla) -> Optional[int]:
    """Unique data qubit measured by both ancillas, or None.

    Two same-kind ancillas overlap on exactly one data qubit when their
    anchors are diagonal neighbors, and on none otherwise.
    """
    common = set(a.data_neighbors) & set(b.data_neighbors)
    if not common:
        return None
    assert len(common) == 1, (a.anchor, b.anchor, common)
    return common.pop()


def dump_lattice(lat: Lattice) -> str:
    """Line-oriented text view of the geometry, for diffing and goldens."""
    lines = [f"lattice d={lat.d} data={lat.n_data} "
             f"x_anc={len(lat.x_ancillas)} z_anc={len(lat.z_ancillas)}"]
    for q in range(lat.n_data):
        r, c = lat.data_coord(q)
        lines.append(f"data {q} r={r} c={c}")
    for anc in lat.x_ancillas + lat.z_ancillas:
        sched = ",".join(f"{t}:{q}" for t, q in anc.schedule)
        side = anc.boundary or "-"
        lines.append(
            f"anc {anc.kind} anchor=({anc.anchor[0]},{anc.anchor[1]}) "
            f"qubit={anc.qubit} boundary={side} schedule={sched}"
        )
    return "\n".join(lines) + "\n"
