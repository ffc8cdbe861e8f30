"""Desk-scale surface-code decoding laboratory.

Simulates rotated-surface-code syndrome extraction under
circuit-level depolarizing noise, streams the detector blocks through
a hardware-shaped predecoding pipeline (plus a simpler baseline), and
offloads whatever the predecoder cannot resolve to an exact
minimum-weight matching stage.  A metrics harness turns the results
into coverage, accuracy, logical-error, bandwidth, and energy figures.
"""

from pinball.circuit_sim import NoiseModel, simulate_batch
from pinball.clique import build_clique, decode_batch_clique
from pinball.decoding_graph import DecodingGraph, build_graph
from pinball.harness import (EnergyParams, RunConfig, RunReport,
                             bandwidth_savings, capacity, chain_census,
                             chain_length_histogram, energy_model,
                             run_experiment, sweep)
from pinball.lattice import Lattice, build_lattice
from pinball.matching import Matcher, build_matcher, decode_batch_mwpm
from pinball.predecoder import Pipeline, build_pipeline, decode_batch_pinball
from pinball.sampler import build_class_table, sample_batch, sample_chunks

__all__ = [
    "NoiseModel", "simulate_batch",
    "build_clique", "decode_batch_clique",
    "DecodingGraph", "build_graph",
    "EnergyParams", "RunConfig", "RunReport",
    "bandwidth_savings", "capacity", "chain_census",
    "chain_length_histogram", "energy_model", "run_experiment", "sweep",
    "Lattice", "build_lattice",
    "Matcher", "build_matcher", "decode_batch_mwpm",
    "Pipeline", "build_pipeline", "decode_batch_pinball",
    "build_class_table", "sample_batch", "sample_chunks",
]
__version__ = "0.1.0"
