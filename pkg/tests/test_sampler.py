"""Sampler correctness: distributional match against the circuit-level
reference, internal consistency of the realized-edge record, and
determinism of the chunk stream."""

import numpy as np
import pytest

from pinball.circuit_sim import NoiseModel, simulate_batch
from pinball.decoding_graph import build_graph
from pinball.lattice import build_lattice
from pinball.predecoder import build_pipeline, decode_batch_pinball
from pinball.sampler import (build_class_table, chunk_chain_stats,
                             sample_batch, sample_chunks)


@pytest.fixture(scope="module")
def table3():
    lat = build_lattice(3)
    return build_class_table(lat, NoiseModel.from_base(2e-2), 3)


class TestDeterminism:

    def test_same_seed_same_stream(self, table3):
        a = sample_batch(table3, 5000, seed=5, chunk_size=2000)
        b = sample_batch(table3, 5000, seed=5, chunk_size=2000)
        assert np.array_equal(a.dets, b.dets)
        assert np.array_equal(a.true_flips, b.true_flips)

    def test_different_seeds_differ(self, table3):
        a = sample_batch(table3, 2000, seed=5)
        b = sample_batch(table3, 2000, seed=6)
        assert not np.array_equal(a.dets, b.dets)

    def test_chunking_covers_exact_shot_count(self, table3):
        chunks = list(sample_chunks(table3, 5500, seed=1, chunk_size=2000))
        assert [c.shots for c in chunks] == [2000, 2000, 1500]
        assert [c.offset for c in chunks] == [0, 2000, 4000]


class TestDistribution:

    def test_matches_circuit_level_reference(self, table3):
        lat = table3.lat
        noise = NoiseModel.from_base(2e-2)
        n = 60000
        ref = simulate_batch(lat, noise, 3, shots=n, seed=31)
        got = sample_batch(table3, n, seed=32)
        rate_ref = ref.dets.reshape(n, -1).mean(axis=0)
        rate_got = got.dets.reshape(n, -1).mean(axis=0)
        # per-detector marginals within 5 sigma of the two-sample spread
        sigma = np.sqrt(rate_ref * (1 - rate_ref) * 2 / n)
        assert np.all(np.abs(rate_ref - rate_got) < 5 * sigma + 1e-9)
        fr, fg = ref.true_flips.mean(), got.true_flips.mean()
        assert abs(fr - fg) < 5 * np.sqrt(fr * (1 - fr) * 2 / n)

    def test_predecoder_sees_equivalent_blocks(self, table3):
        lat = table3.lat
        noise = NoiseModel.from_base(2e-2)
        pipe = build_pipeline(build_graph(lat, noise, 3))
        n = 40000
        ref = simulate_batch(lat, noise, 3, shots=n, seed=33)
        got = sample_batch(table3, n, seed=34)
        acc_ref = (decode_batch_pinball(pipe, ref.dets).predicted_flip
                   == ref.true_flips).mean()
        acc_got = (decode_batch_pinball(pipe, got.dets).predicted_flip
                   == got.true_flips).mean()
        assert abs(acc_ref - acc_got) < 5 * np.sqrt(
            acc_ref * (1 - acc_ref) * 2 / n)


class TestRealizedEdges:

    def test_fired_record_reconstructs_block(self, table3):
        g = table3.graph
        chunk = next(sample_chunks(table3, 400, seed=9, want_edges=True))
        for s in range(chunk.shots):
            dets = np.zeros(table3.n_dets, dtype=np.uint8)
            flip = 0
            for eid in chunk.fired_slice(s):
                for det in g.edges[eid].dets:
                    dets[det] ^= 1
                flip ^= int(g.edges[eid].logical)
            assert np.array_equal(dets, chunk.dets[s].reshape(-1))
            assert flip == chunk.true_flips[s]

    def test_chain_stats_basics(self, table3):
        g = table3.graph
        chunk = next(sample_chunks(table3, 2000, seed=10, want_edges=True))
        longest, kinds = chunk_chain_stats(g, chunk)
        rows, _ = chunk.fired
        quiet = np.setdiff1d(np.arange(chunk.shots), rows)
        assert not longest[quiet].any()
        assert (longest[np.unique(rows)] >= 1).all()
        assert sum(kinds.values()) > 0
        assert set(kinds) <= {"time", "space", "st", "hook", "edge"}

    def test_longer_chains_at_higher_noise(self):
        lat = build_lattice(5)
        means = []
        for p in (2e-3, 2e-2):
            table = build_class_table(lat, NoiseModel.from_base(p), 5)
            chunk = next(sample_chunks(table, 4000, seed=11,
                                       want_edges=True))
            longest, _ = chunk_chain_stats(table.graph, chunk)
            means.append(longest.mean())
        assert means[1] > means[0]
