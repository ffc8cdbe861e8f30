"""Matcher exactness against an independent exhaustive search.

The exhaustive reference below enumerates every possible pairing of
the defect set (partners or boundary), so it shares only the distance
tables with the production routes, not the optimizer.
"""

import numpy as np
import pytest

from pinball.circuit_sim import NoiseModel, deterministic_block, simulate_batch
from pinball.decoding_graph import _static_syndrome_is_trivial, build_graph
from pinball.lattice import build_lattice
from pinball.matching import (Matcher, _blossom_pairs, _milp_pairs,
                              brute_force_match, build_matcher,
                              decode_batch_mwpm, decode_block_mwpm,
                              flip_from_pairs, match_defects, pairing_cost)

P = 1e-3


@pytest.fixture(scope="module")
def setup3():
    lat = build_lattice(3)
    g = build_graph(lat, NoiseModel.from_base(P), rounds=3)
    return lat, g, build_matcher(g)


@pytest.fixture(scope="module")
def setup5():
    lat = build_lattice(5)
    g = build_graph(lat, NoiseModel.from_base(P), rounds=5)
    return lat, g, build_matcher(g)


def all_pairings(defects):
    if not defects:
        yield []
        return
    first, rest = defects[0], list(defects[1:])
    for tail in all_pairings(rest):
        yield [(first, -1)] + tail
    for i, other in enumerate(rest):
        rem = rest[:i] + rest[i + 1:]
        for tail in all_pairings(rem):
            yield [(first, other)] + tail


def exhaustive_best(matcher: Matcher, defects):
    """(min cost, set of flips achieving it within 1e-9)."""
    best = None
    flips = set()
    for pairing in all_pairings(list(defects)):
        cost = pairing_cost(matcher, pairing)
        if best is None or cost < best - 1e-9:
            best = cost
            flips = {flip_from_pairs(matcher, pairing)}
        elif cost <= best + 1e-9:
            flips.add(flip_from_pairs(matcher, pairing))
    return best, flips


def west_parity(lat, qubits):
    return len(set(qubits) & set(lat.observable_qubits)) % 2


class TestEmptyAndSingle:

    def test_no_defects(self, setup3):
        _, _, m = setup3
        out = decode_block_mwpm(m, np.zeros(m.n_dets, dtype=np.uint8))
        assert out.pairs == [] and out.cost == 0.0
        assert out.predicted_flip == 0 and out.correction == frozenset()

    def test_every_single_edge_block_decoded_right(self, setup3, setup5):
        for lat, g, m in (setup3, setup5):
            for e in g.edges:
                block = deterministic_block(lat, g.rounds, [e.sources[0]])
                out = decode_block_mwpm(m, block.dets)
                assert out.predicted_flip == block.true_flip, e.id
                assert west_parity(lat, out.correction) == out.predicted_flip


class TestExactness:

    def test_routes_agree_with_exhaustive_search(self, setup3):
        lat, g, m = setup3
        batch = simulate_batch(lat, NoiseModel.from_base(8e-3), 3,
                               shots=300, seed=77)
        checked = 0
        for i in range(batch.shots):
            defects = np.flatnonzero(batch.dets[i].reshape(-1)).tolist()
            if not 0 < len(defects) <= 8:
                continue
            pairs = match_defects(m, defects)
            cost = pairing_cost(m, pairs)
            ref_cost, ref_flips = exhaustive_best(m, defects)
            assert cost == pytest.approx(ref_cost, abs=1e-9)
            if len(ref_flips) == 1:
                assert flip_from_pairs(m, pairs) == ref_flips.pop()
            bl = _blossom_pairs(m, defects)
            assert pairing_cost(m, bl) == pytest.approx(ref_cost, abs=1e-9)
            checked += 1
        assert checked >= 50

    def test_all_three_routes_agree_on_larger_sets(self, setup5):
        _, _, m = setup5
        rng = np.random.default_rng(3)
        for _ in range(40):
            k = int(rng.integers(2, 13))
            defects = sorted(rng.choice(m.n_dets, size=k,
                                        replace=False).tolist())
            a = pairing_cost(m, match_defects(m, defects))
            b = pairing_cost(m, _blossom_pairs(m, defects))
            c = pairing_cost(m, _milp_pairs(m, defects))
            assert a == pytest.approx(b, abs=1e-9)
            assert a == pytest.approx(c, abs=1e-9)

    def test_module_oracle_agrees_with_matcher(self, setup5):
        _, _, m = setup5
        rng = np.random.default_rng(4)
        for _ in range(25):
            k = int(rng.integers(1, 11))
            defects = sorted(rng.choice(m.n_dets, size=k,
                                        replace=False).tolist())
            got = pairing_cost(m, match_defects(m, defects))
            assert got == pytest.approx(brute_force_match(m, defects),
                                        abs=1e-9)
        with pytest.raises(ValueError):
            brute_force_match(m, list(range(11)))


class TestCorrections:

    def test_correction_consistent_with_flip(self, setup5):
        lat, g, m = setup5
        rng = np.random.default_rng(9)
        for _ in range(30):
            picked = rng.choice(len(g.edges), size=int(rng.integers(1, 4)),
                                replace=False)
            faults, true_corr = [], set()
            for eid in picked:
                e = g.edges[eid]
                faults.append(e.sources[0])
                true_corr ^= set(e.correction)
            block = deterministic_block(lat, g.rounds, faults)
            out = decode_block_mwpm(m, block.dets)
            assert west_parity(lat, out.correction) == out.predicted_flip
            resid = out.correction ^ frozenset(true_corr)
            assert _static_syndrome_is_trivial(lat, resid)
            agree = out.predicted_flip == block.true_flip
            assert agree == (west_parity(lat, resid) == 0)


class TestBatch:

    def test_batch_matches_per_shot(self, setup5):
        lat, _, m = setup5
        batch = simulate_batch(lat, NoiseModel.from_base(4e-3), 5,
                               shots=120, seed=41)
        flips = decode_batch_mwpm(m, batch.dets)
        for i in range(batch.shots):
            assert flips[i] == decode_block_mwpm(m, batch.dets[i]).predicted_flip

    def test_select_mask_skips_shots(self, setup5):
        lat, _, m = setup5
        batch = simulate_batch(lat, NoiseModel.from_base(4e-3), 5,
                               shots=60, seed=42)
        select = np.zeros(60, dtype=bool)
        select[::3] = True
        flips = decode_batch_mwpm(m, batch.dets, select=select)
        full = decode_batch_mwpm(m, batch.dets)
        assert np.array_equal(flips[select], full[select])
        assert not flips[~select].any()


class TestScaling:

    def test_logical_rate_falls_with_distance(self, setup3, setup5):
        noise = NoiseModel.from_base(3e-3)
        rates = {}
        for lat, g, m in (setup3, setup5):
            batch = simulate_batch(lat, noise, lat.d, shots=20000,
                                   seed=101 + lat.d)
            flips = decode_batch_mwpm(m, batch.dets)
            rates[lat.d] = float((flips != batch.true_flips).mean())
        assert 0 < rates[5] < rates[3]
