"""Geometry and schedule checks for the rotated surface-code lattice."""

import pytest

from pinball.lattice import build_lattice, dump_lattice, shared_data_qubit

DS = [3, 5, 7, 9, 11]


@pytest.mark.parametrize(
    "d,n_data,n_anc,n_qubits",
    [(3, 9, 4, 17), (5, 25, 12, 49), (21, 441, 220, 881)],
)
def test_qubit_counts(d, n_data, n_anc, n_qubits):
    lat = build_lattice(d)
    assert lat.n_data == n_data
    assert len(lat.x_ancillas) == n_anc
    assert len(lat.z_ancillas) == n_anc
    assert lat.n_qubits == n_qubits


@pytest.mark.parametrize("d", [2, 4, 1, 27, -3])
def test_invalid_distance_rejected(d):
    with pytest.raises(ValueError):
        build_lattice(d)


@pytest.mark.parametrize("d", DS)
def test_schedule_is_collision_free(d):
    lat = build_lattice(d)
    for t in range(1, 5):
        used = [q for anc in lat.x_ancillas + lat.z_ancillas
                for tt, q in anc.schedule if tt == t]
        assert len(used) == len(set(used))


@pytest.mark.parametrize("d", DS)
def test_ancilla_weights(d):
    lat = build_lattice(d)
    for anc in lat.x_ancillas + lat.z_ancillas:
        if anc.boundary is None:
            assert len(anc.schedule) == 4
        else:
            assert len(anc.schedule) == 2
    # weight-2 X plaquettes only on north/south, Z only on west/east
    assert {a.boundary for a in lat.x_ancillas if a.boundary} == {"n", "s"}
    assert {a.boundary for a in lat.z_ancillas if a.boundary} == {"w", "e"}


@pytest.mark.parametrize("d", DS)
def test_checkerboard_parity(d):
    lat = build_lattice(d)
    for anc in lat.x_ancillas:
        assert sum(anc.anchor) % 2 == 0
    for anc in lat.z_ancillas:
        assert sum(anc.anchor) % 2 == 1


@pytest.mark.parametrize("d", DS)
def test_data_membership_counts(d):
    # west/east column data qubits belong to exactly one X plaquette,
    # everything else to exactly two; that is what lets Z chains end
    # only at the west/east edges
    lat = build_lattice(d)
    for q, m in enumerate(lat.x_ancs_of_data):
        col = q % d
        assert len(m) == (1 if col in (0, d - 1) else 2)


def test_shared_data_qubit_cases():
    lat = build_lattice(5)
    a = lat.x_ancilla_at((1, 1))
    for dr, dc in [(-1, -1), (-1, 1), (1, -1), (1, 1)]:
        b = lat.x_ancilla_at((1 + dr, 1 + dc))
        assert b is not None
        q = shared_data_qubit(lat, a, b)
        assert q is not None
        assert q in a.data_neighbors and q in b.data_neighbors
    far = lat.x_ancilla_at((3, 3))
    assert shared_data_qubit(lat, a, far) is None


def test_x_ancillas_control_z_ancillas_target_order():
    # X ancillas sweep NW,NE,SW,SE; Z ancillas NW,SW,NE,SE
    lat = build_lattice(5)
    xa = lat.x_ancilla_at((1, 1))
    za = lat.z_ancilla_at((1, 2))
    d = lat.d

    def corner(anchor, name):
        off = {"nw": (0, 0), "ne": (0, 1), "sw": (1, 0), "se": (1, 1)}[name]
        return (anchor[0] + off[0]) * d + (anchor[1] + off[1])

    assert xa.schedule == tuple(
        (t, corner(xa.anchor, n))
        for t, n in [(1, "nw"), (2, "ne"), (3, "sw"), (4, "se")]
    )
    assert za.schedule == tuple(
        (t, corner(za.anchor, n))
        for t, n in [(1, "nw"), (2, "sw"), (3, "ne"), (4, "se")]
    )


def test_observable_is_west_column():
    lat = build_lattice(7)
    assert lat.observable_qubits == tuple(r * 7 for r in range(7))


@pytest.mark.parametrize("d", DS)
def test_edge_attachment(d):
    lat = build_lattice(d)
    for idx, (side, q) in lat.edge_attachment.items():
        anc = lat.x_ancillas[idx]
        assert q in anc.data_neighbors
        assert q % d == (0 if side == "L" else d - 1)
    # at d=3 every X ancilla touches a west/east column
    if d == 3:
        assert set(lat.edge_attachment) == {a.index for a in lat.x_ancillas}


def test_build_is_deterministic():
    assert dump_lattice(build_lattice(7)) == dump_lattice(build_lattice(7))


def test_dump_mentions_every_qubit():
    lat = build_lattice(3)
    text = dump_lattice(lat)
    assert text.count("\ndata ") + text.startswith("data ") == lat.n_data
    assert text.count("\nanc ") == 8
