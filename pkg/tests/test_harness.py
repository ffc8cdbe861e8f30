"""Harness checks: energy and bandwidth arithmetic against frozen
hand-computed values, statistics helpers, end-to-end experiment runs on
small grids, and deterministic report emission."""

import json
import math

import numpy as np
import pytest

from pinball.harness import (BandwidthFigure, ChainCensus, CSV_COLUMNS,
                             EnergyParams, RunConfig, bandwidth_savings,
                             capacity, chain_census, chain_length_histogram,
                             default_hp_power, energy_model, mode_power_ratio,
                             packet_overhead, reports_to_csv, reports_to_json,
                             run_experiment, sweep, wilson_interval)


class TestWilson:
    # oracle values computed by hand from the closed-form score interval
    # at z = 1.96, cross-checked on the 5/10 and 1/10 rows

    def test_frozen_values(self):
        cases = {
            (5, 10): (0.236590, 0.763410),
            (1, 10): (0.017876, 0.404156),
            (50, 100): (0.403830, 0.596170),
        }
        for (k, n), (lo, hi) in cases.items():
            got_lo, got_hi = wilson_interval(k, n)
            assert got_lo == pytest.approx(lo, abs=5e-6)
            assert got_hi == pytest.approx(hi, abs=5e-6)

    def test_boundary_counts_clamping(self):
        lo, hi = wilson_interval(0, 20)
        assert lo == 0.0
        assert hi == pytest.approx(0.161130, abs=5e-6)
        lo, hi = wilson_interval(20, 20)
        assert lo == pytest.approx(0.838870, abs=5e-6)
        assert hi == 1.0

    def test_empty_trials_degenerate(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_interval_contains_point_estimate(self):
        for k, n in [(3, 7), (0, 5), (5, 5), (123, 4567)]:
            lo, hi = wilson_interval(k, n)
            assert lo <= k / n <= hi


class TestBandwidth:

    def test_half_coverage_doubles(self):
        assert bandwidth_savings(0.5) == BandwidthFigure(2.0, False)

    def test_zero_coverage_is_unity(self):
        assert bandwidth_savings(0.0).factor == 1.0

    def test_exact_identity(self):
        for cov in [0.1, 0.37, 0.9, 0.999, 0.9999999]:
            fig = bandwidth_savings(cov)
            assert fig.factor * (1.0 - cov) == pytest.approx(1.0, rel=1e-12)
            assert not fig.lower_bound

    def test_full_coverage_reports_lower_bound(self):
        fig = bandwidth_savings(1.0, shots=100_000)
        assert fig == BandwidthFigure(100_000.0, True)
        with pytest.raises(ValueError):
            bandwidth_savings(1.0)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            bandwidth_savings(-0.1)
        with pytest.raises(ValueError):
            bandwidth_savings(1.5)


class TestEnergy:
    # power ratio oracle: (0.8^2 * 100 MHz) / (V_LP^2 * 12.5 MHz),
    # frozen as 22.2222 at 0.48 V and 17.5583 at 0.54 V

    def test_slow_mode_power_ratio_048(self):
        assert mode_power_ratio(EnergyParams()) == pytest.approx(22.2222,
                                                                 rel=1e-4)

    def test_slow_mode_power_ratio_054(self):
        params = EnergyParams(v_lp=0.54)
        assert mode_power_ratio(params) == pytest.approx(17.5583, rel=1e-4)

    def test_packet_overhead_doubles(self):
        assert packet_overhead(64, 32) == 2.0
        assert packet_overhead(64, 0) == 1.0
        with pytest.raises(ValueError):
            packet_overhead(32, 32)

    def test_capacity_frozen_values(self):
        assert capacity(1.5, 0.56e-3) == 2678
        assert capacity(1.5, 0.0402e-3) == 37313
        assert capacity(0.0, 0.56e-3) == 0
        with pytest.raises(ValueError):
            capacity(1.5, 0.0)

    def test_default_power_corners(self):
        assert default_hp_power(3) == pytest.approx(0.04e-3)
        assert default_hp_power(21) == pytest.approx(0.56e-3)
        # strictly increasing with distance between the corners
        powers = [default_hp_power(d) for d in range(3, 23, 2)]
        assert all(a < b for a, b in zip(powers, powers[1:]))

    def test_model_savings_identity(self):
        params = EnergyParams()
        out = energy_model(params, coverage=0.9, d=5)
        assert out["savings"] == pytest.approx(
            out["baseline"] / (out["e_pre"] + out["e_tx"]), rel=1e-12)
        assert out["p_lp"] == pytest.approx(out["p_hp"] / 22.2222, rel=1e-4)

    def test_model_transmission_scales_with_offload(self):
        params = EnergyParams()
        full = energy_model(params, coverage=0.0, d=5)
        none = energy_model(params, coverage=1.0, d=5)
        half = energy_model(params, coverage=0.5, d=5)
        assert none["e_tx"] == 0.0
        assert full["e_tx"] == pytest.approx(full["baseline"])
        assert half["e_tx"] == pytest.approx(0.5 * full["baseline"])
        assert none["savings"] > half["savings"] > full["savings"]

    def test_explicit_power_overrides_distance_scaling(self):
        params = EnergyParams(p_hp=0.56e-3)
        out = energy_model(params, coverage=0.5, d=3)
        assert out["p_hp"] == 0.56e-3


class TestConfig:

    def test_rounds_default_to_distance(self):
        cfg = RunConfig(d=5, p=1e-3, shots=10).resolved()
        assert cfg.rounds == 5
        assert cfg.block_bits == 5 * 24

    def test_invalid_settings_rejected(self):
        bad = [
            RunConfig(d=4, p=1e-3, shots=10),
            RunConfig(d=3, p=0.0, shots=10),
            RunConfig(d=3, p=1.0, shots=10),
            RunConfig(d=3, p=1e-3, shots=0),
            RunConfig(d=3, p=1e-3, shots=10, predecoder="magic"),
            RunConfig(d=3, p=1e-3, shots=10, chunk_size=0),
        ]
        for cfg in bad:
            with pytest.raises(ValueError):
                cfg.resolved()


@pytest.fixture(scope="module")
def pinball_d3():
    return run_experiment(RunConfig(d=3, p=1e-3, shots=20_000, seed=11))


@pytest.fixture(scope="module")
def emitted_reports():
    return sweep(ds=[3], ps=[5e-3], predecoders=["pinball", "none"],
                 shots=1_000, seed=13)


class TestRunExperiment:

    def test_d3_full_coverage(self, pinball_d3):
        rep = pinball_d3
        assert rep.coverage == 1.0
        assert rep.complex_blocks == 0
        assert rep.bandwidth_lower_bound
        assert rep.bandwidth_factor == float(rep.shots)

    def test_report_internal_consistency(self, pinball_d3):
        rep = pinball_d3
        kept = rep.shots - rep.complex_blocks
        assert rep.coverage == kept / rep.shots
        assert rep.ler == rep.logical_errors / rep.shots
        assert rep.coverage_lo <= rep.coverage <= rep.coverage_hi
        assert rep.ler_lo <= rep.ler <= rep.ler_hi
        # with full coverage every logical error is a kept-block miss
        assert rep.accuracy == pytest.approx(
            1.0 - rep.logical_errors / kept, rel=1e-12)

    def test_matcher_only_baseline(self):
        rep = run_experiment(
            RunConfig(d=3, p=1e-2, shots=4_000, seed=3, predecoder="none"))
        assert rep.coverage == 0.0
        assert rep.complex_blocks == rep.shots
        assert rep.bandwidth_factor == 1.0
        assert not rep.bandwidth_lower_bound
        assert math.isnan(rep.accuracy)
        assert 0.0 < rep.ler < 0.5

    def test_clique_runs_and_offloads(self):
        rep = run_experiment(
            RunConfig(d=5, p=5e-3, shots=4_000, seed=3, predecoder="clique"))
        assert 0.0 < rep.coverage < 1.0
        assert rep.complex_blocks > 0

    def test_two_level_beats_unaided_predecoder_score(self):
        # offloaded blocks get decoded, not discarded: the logical error
        # count must not exceed complex blocks plus kept-block misses
        rep = run_experiment(RunConfig(d=5, p=5e-3, shots=4_000, seed=7))
        kept_misses = rep.shots - rep.complex_blocks - round(
            rep.accuracy * (rep.shots - rep.complex_blocks))
        assert rep.logical_errors <= rep.complex_blocks + kept_misses


class TestSweep:

    def test_cartesian_grid_and_row_order(self):
        reports = sweep(ds=[3], ps=[2e-3, 1e-2],
                        predecoders=["pinball", "none"], shots=500, seed=2)
        assert [(r.d, r.p, r.predecoder) for r in reports] == [
            (3, 2e-3, "pinball"), (3, 2e-3, "none"),
            (3, 1e-2, "pinball"), (3, 1e-2, "none")]

    def test_shared_seed_pairs_cells(self):
        reports = sweep(ds=[3], ps=[1e-2], predecoders=["pinball", "none"],
                        shots=2_000, seed=9)
        pin, raw = reports
        # same noise stream: the matcher sees the same blocks either way
        assert pin.shots == raw.shots
        assert pin.seed == raw.seed


class TestChainCensus:

    def test_quiet_limit_concentrates_at_zero(self):
        hist = chain_length_histogram(
            RunConfig(d=3, p=1e-5, shots=20_000, seed=1))
        assert hist[0] > 19_900
        assert sum(hist.values()) == 20_000

    def test_single_edge_mass_at_moderate_noise(self):
        census = chain_census(RunConfig(d=5, p=1e-3, shots=20_000, seed=1))
        ones = census.histogram.get(1, 0)
        busy = sum(c for length, c in census.histogram.items() if length > 0)
        assert ones / busy >= 0.20

    def test_noise_shifts_mass_to_longer_chains(self):
        lo = chain_census(RunConfig(d=5, p=1e-3, shots=10_000, seed=4))
        hi = chain_census(RunConfig(d=5, p=1e-2, shots=10_000, seed=4))

        def mean_len(census):
            tot = sum(c for c in census.histogram.values())
            return sum(l * c for l, c in census.histogram.items()) / tot

        assert mean_len(hi) > mean_len(lo)

    def test_length_one_rates_normalized_and_merged(self):
        census = chain_census(RunConfig(d=5, p=2e-3, shots=10_000, seed=8))
        rates = census.length_one_rates()
        assert set(rates) == {"time", "space", "st", "hook"}
        assert sum(rates.values()) == pytest.approx(1.0)
        # round-local faults dominate isolated singles under this model;
        # which of the two leads depends on distance
        assert min(rates["time"], rates["space"]) > max(rates["st"],
                                                        rates["hook"])

    def test_empty_census_rates_are_zero(self):
        empty = ChainCensus(0, {}, {})
        assert empty.length_one_rates() == {
            "time": 0.0, "space": 0.0, "st": 0.0, "hook": 0.0}


class TestEmission:

    def test_csv_shape_and_header(self, emitted_reports):
        text = reports_to_csv(emitted_reports)
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + len(emitted_reports)
        for line in lines[1:]:
            assert len(line.split(",")) == len(CSV_COLUMNS)

    def test_csv_repeats_byte_identical(self, emitted_reports):
        again = sweep(ds=[3], ps=[5e-3], predecoders=["pinball", "none"],
                      shots=1_000, seed=13)
        assert reports_to_csv(emitted_reports) == reports_to_csv(again)

    def test_different_seed_changes_rows(self, emitted_reports):
        other = sweep(ds=[3], ps=[5e-3], predecoders=["pinball", "none"],
                      shots=1_000, seed=14)
        assert reports_to_csv(emitted_reports) != reports_to_csv(other)

    def test_json_round_trip(self, emitted_reports):
        payload = json.loads(reports_to_json(emitted_reports))
        assert payload["schema"] == "pinball-report-1"
        assert len(payload["reports"]) == len(emitted_reports)
        row = payload["reports"][0]
        assert row["d"] == 3
        assert row["predecoder"] == "pinball"
        # NaN accuracy on the matcher-only row becomes null, keeps JSON valid
        none_row = payload["reports"][1]
        if none_row["accuracy"] is not None:
            assert 0.0 <= none_row["accuracy"] <= 1.0

    def test_no_wall_clock_in_output(self, emitted_reports):
        text = reports_to_csv(emitted_reports) + reports_to_json(emitted_reports)
        for banned in ("time_s", "timestamp", "date", "elapsed"):
            assert banned not in text
