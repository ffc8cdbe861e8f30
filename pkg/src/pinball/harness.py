"""Experiment orchestration and reporting.

Runs noise-sweep experiments over the sampler / predecoder / matcher
stack and aggregates block-level metrics: coverage (fraction of blocks
the first level keeps), accuracy (fraction of kept blocks decoded
correctly), and logical error rate over the whole two-level system.
Also hosts the bandwidth and transmission-energy models and the
deterministic CSV / JSON emitters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .circuit_sim import NoiseModel
from .clique import build_clique, decode_batch_clique
from .decoding_graph import build_graph
from .lattice import build_lattice
from .matching import build_matcher, decode_batch_mwpm
from .predecoder import build_pipeline, decode_batch_pinball
from .sampler import build_class_table, chunk_chain_stats, sample_chunks

SCHEMA_VERSION = "pinball-report-1"

PREDECODERS = ("pinball", "clique", "none")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class EnergyParams:
    """Electrical model of the cold predecoder and its uplink.

    The predecoder idles in a slow low-voltage mode for all but the
    last round of a block, then ramps up for a short burst to finish.
    Dynamic power scales as V^2 * f between the two operating points.
    """

    v_hp: float = 0.8               # V, fast mode
    f_hp: float = 100e6             # Hz
    v_lp: float = 0.48              # V, slow mode
    f_lp: float = 12.5e6            # Hz
    t_hp: float = 100e-9            # s, fast-mode burst in the last round
    t_round: float = 800e-9         # s, slow-mode window per earlier round
    e_tx_per_bit: float = 2.46e-12  # J, cold-to-warm link
    packet_bits: int = 64
    header_bits: int = 32
    p_hp: Optional[float] = None    # W in fast mode; None = scale with d
    budget: float = 1.5             # W available at the cold stage


@dataclass(frozen=True)
class RunConfig:
    d: int
    p: float
    shots: int
    seed: int = 0
    predecoder: str = "pinball"
    rounds: Optional[int] = None    # None = d
    chunk_size: int = 100_000
    energy: EnergyParams = field(default_factory=EnergyParams)

    def resolved(self) -> "RunConfig":
        """Fill defaults and reject malformed settings."""
        cfg = replace(self, rounds=self.d if self.rounds is None else self.rounds)
        if cfg.d < 3 or cfg.d % 2 == 0:
            raise ValueError(f"distance must be an odd integer >= 3, got {cfg.d}")
        if not 0.0 < cfg.p < 1.0:
            raise ValueError(f"base error rate must lie in (0, 1), got {cfg.p}")
        if cfg.shots < 1:
            raise ValueError(f"shots must be positive, got {cfg.shots}")
        if cfg.rounds is None or cfg.rounds < 1:
            raise ValueError(f"rounds must be positive, got {cfg.rounds}")
        if cfg.chunk_size < 1:
            raise ValueError(f"chunk size must be positive, got {cfg.chunk_size}")
        if cfg.predecoder not in PREDECODERS:
            raise ValueError(f"unknown predecoder {cfg.predecoder!r}; "
                             f"expected one of {PREDECODERS}")
        return cfg

    @property
    def block_bits(self) -> int:
        # both stabilizer types are read out every round
        rounds = self.d if self.rounds is None else self.rounds
        return rounds * (self.d * self.d - 1)


# ---------------------------------------------------------------------------
# statistics helpers


def wilson_interval(successes: int, trials: int,
                    z: float = 1.96) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% default)."""
    if trials == 0:
        return (0.0, 1.0)
    ph = successes / trials
    zz = z * z
    denom = 1.0 + zz / trials
    center = (ph + zz / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials
                         + zz / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class BandwidthFigure:
    factor: float
    lower_bound: bool   # True when no complex block was seen at all


def bandwidth_savings(coverage: float,
                      shots: Optional[int] = None) -> BandwidthFigure:
    """Uplink traffic reduction from keeping covered blocks cold.

    Every non-complex block is withheld entirely, so the factor is
    exactly 1/(1-coverage).  When nothing was offloaded the true factor
    is unbounded; we report the shot count as a lower bound.
    """
    if not 0.0 <= coverage <= 1.0:
        raise ValueError(f"coverage must lie in [0, 1], got {coverage}")
    if coverage == 1.0:
        if shots is None:
            raise ValueError("full coverage needs a shot count "
                             "to state the lower bound")
        return BandwidthFigure(float(shots), True)
    return BandwidthFigure(1.0 / (1.0 - coverage), False)


# ---------------------------------------------------------------------------
# energy model


def mode_power_ratio(params: EnergyParams) -> float:
    """Fast-mode over slow-mode dynamic power, V^2 * f scaling."""
    return ((params.v_hp ** 2 * params.f_hp)
            / (params.v_lp ** 2 * params.f_lp))


def packet_overhead(packet_bits: int, header_bits: int) -> float:
    """Link-layer inflation: payload share of each fixed-size packet."""
    if not 0 <= header_bits < packet_bits:
        raise ValueError("header must be smaller than the packet")
    return packet_bits / (packet_bits - header_bits)


def default_hp_power(d: int) -> float:
    """Fast-mode power draw in watts; linear in lattice area."""
    lo, hi = 0.04e-3, 0.56e-3    # measured corners at d=3 and d=21
    return lo + (hi - lo) * (d * d - 9) / (21 * 21 - 9)


def energy_model(params: EnergyParams, coverage: float, d: int,
                 block_bits: Optional[int] = None) -> Dict[str, float]:
    """Per-block energy split and savings against an always-send system.

    e_pre: predecoder compute (one fast burst plus d-1 slow rounds).
    e_tx: expected uplink energy, only complex blocks transmitted.
    baseline: uplink energy with every block transmitted and no
    predecoder running.
    """
    if block_bits is None:
        block_bits = d * (d * d - 1)
    p_hp = params.p_hp if params.p_hp is not None else default_hp_power(d)
    p_lp = p_hp / mode_power_ratio(params)
    e_pre = p_hp * params.t_hp + p_lp * (d - 1) * params.t_round
    overhead = packet_overhead(params.packet_bits, params.header_bits)
    per_block = block_bits * params.e_tx_per_bit * overhead
    e_tx = (1.0 - coverage) * per_block
    return {
        "p_hp": p_hp,
        "p_lp": p_lp,
        "e_pre": e_pre,
        "e_tx": e_tx,
        "baseline": per_block,
        "savings": per_block / (e_pre + e_tx),
    }


def capacity(budget: float, p_hp: float) -> int:
    """How many logical qubits one cold power budget can host."""
    if p_hp <= 0.0:
        raise ValueError(f"per-qubit power must be positive, got {p_hp}")
    if budget <= 0.0:
        return 0
    return int(budget / p_hp)


# ---------------------------------------------------------------------------
# experiment driver


@dataclass(frozen=True)
class RunReport:
    """One experiment cell; flattens to one CSV row."""

    d: int
    rounds: int
    p: float
    shots: int
    seed: int
    chunk_size: int
    predecoder: str
    coverage: float
    coverage_lo: float
    coverage_hi: float
    accuracy: float          # NaN when nothing was kept at level one
    accuracy_lo: float
    accuracy_hi: float
    ler: float
    ler_lo: float
    ler_hi: float
    complex_blocks: int
    logical_errors: int
    bandwidth_factor: float
    bandwidth_lower_bound: bool
    block_bits: int
    p_hp: float
    p_lp: float
    e_pre: float
    e_tx: float
    energy_savings: float
    energy: EnergyParams = field(default_factory=EnergyParams)

    def as_dict(self) -> Dict[str, object]:
        out: Dict[str, object] = {"schema": SCHEMA_VERSION}
        for name in CSV_COLUMNS[1:]:
            if name.startswith("cfg_"):
                out[name] = getattr(self.energy, name[4:])
            else:
                out[name] = getattr(self, name)
        return out


CSV_COLUMNS: Tuple[str, ...] = (
    "schema", "d", "rounds", "p", "shots", "seed", "chunk_size",
    "predecoder",
    "coverage", "coverage_lo", "coverage_hi",
    "accuracy", "accuracy_lo", "accuracy_hi",
    "ler", "ler_lo", "ler_hi",
    "complex_blocks", "logical_errors",
    "bandwidth_factor", "bandwidth_lower_bound",
    "block_bits", "p_hp", "p_lp", "e_pre", "e_tx", "energy_savings",
    # full configuration echo so a row is reproducible on its own
    "cfg_v_hp", "cfg_f_hp", "cfg_v_lp", "cfg_f_lp",
    "cfg_t_hp", "cfg_t_round", "cfg_e_tx_per_bit",
    "cfg_packet_bits", "cfg_header_bits",
)


def run_experiment(cfg: RunConfig) -> RunReport:
    """Simulate, predecode, offload, and score one (d, p) cell.

    Per block: the configured predecoder consumes the syndrome stream;
    if it declares the block complex, the untouched block goes to the
    matcher.  A logical error is counted when the final predicted
    observable flip disagrees with the true one.
    """
    cfg = cfg.resolved()
    lat = build_lattice(cfg.d)
    noise = NoiseModel.from_base(cfg.p)
    graph = build_graph(lat, noise, cfg.rounds)
    table = build_class_table(lat, noise, cfg.rounds, graph)
    matcher = build_matcher(graph)
    pipe = build_pipeline(graph) if cfg.predecoder == "pinball" else None
    cliq = (build_clique(lat, cfg.rounds)
            if cfg.predecoder == "clique" else None)

    n_complex = 0
    n_errors = 0
    n_kept_correct = 0
    for chunk in sample_chunks(table, cfg.shots, cfg.seed, cfg.chunk_size):
        if pipe is not None:
            res = decode_batch_pinball(pipe, chunk.dets)
            cmask = res.complex_mask
            pred = res.predicted_flip.copy()
        elif cliq is not None:
            res = decode_batch_clique(cliq, chunk.dets)
            cmask = res.complex_mask
            pred = res.predicted_flip.copy()
        else:
            cmask = np.ones(chunk.shots, dtype=bool)
            pred = np.zeros(chunk.shots, dtype=np.uint8)
        if cmask.any():
            l2 = decode_batch_mwpm(matcher, chunk.dets, select=cmask)
            pred[cmask] = l2[cmask]
        wrong = pred != chunk.true_flips
        n_complex += int(np.count_nonzero(cmask))
        n_errors += int(np.count_nonzero(wrong))
        n_kept_correct += int(np.count_nonzero(~wrong & ~cmask))

    n = cfg.shots
    n_kept = n - n_complex
    coverage = n_kept / n
    cov_lo, cov_hi = wilson_interval(n_kept, n)
    if n_kept > 0:
        accuracy = n_kept_correct / n_kept
    else:
        accuracy = float("nan")
    acc_lo, acc_hi = wilson_interval(n_kept_correct, n_kept)
    ler = n_errors / n
    ler_lo, ler_hi = wilson_interval(n_errors, n)
    bw = bandwidth_savings(coverage, shots=n)
    energy = energy_model(cfg.energy, coverage, cfg.d, cfg.block_bits)
    return RunReport(
        d=cfg.d, rounds=cfg.rounds, p=cfg.p, shots=n, seed=cfg.seed,
        chunk_size=cfg.chunk_size, predecoder=cfg.predecoder,
        coverage=coverage, coverage_lo=cov_lo, coverage_hi=cov_hi,
        accuracy=accuracy, accuracy_lo=acc_lo, accuracy_hi=acc_hi,
        ler=ler, ler_lo=ler_lo, ler_hi=ler_hi,
        complex_blocks=n_complex, logical_errors=n_errors,
        bandwidth_factor=bw.factor, bandwidth_lower_bound=bw.lower_bound,
        block_bits=cfg.block_bits,
        p_hp=energy["p_hp"], p_lp=energy["p_lp"],
        e_pre=energy["e_pre"], e_tx=energy["e_tx"],
        energy_savings=energy["savings"],
        energy=cfg.energy,
    )


def sweep(ds: Sequence[int], ps: Sequence[float],
          predecoders: Sequence[str], shots: int, seed: int = 0,
          chunk_size: int = 100_000,
          energy: Optional[EnergyParams] = None) -> List[RunReport]:
    """Cartesian product of settings, one report per cell.

    Every cell reuses the same master seed, so predecoders at the same
    (d, p) see identical noise and can be compared pairwise.
    """
    energy = energy if energy is not None else EnergyParams()
    reports = []
    for d in ds:
        for p in ps:
            for pre in predecoders:
                cfg = RunConfig(d=d, p=p, shots=shots, seed=seed,
                                predecoder=pre, chunk_size=chunk_size,
                                energy=energy)
                reports.append(run_experiment(cfg))
    return reports


# ---------------------------------------------------------------------------
# realized-chain census


@dataclass
class ChainCensus:
    shots: int
    histogram: Dict[int, int]           # longest chain per block -> blocks
    length_one_counts: Dict[str, int]   # isolated single edges by kind

    def length_one_rates(self) -> Dict[str, float]:
        """Relative frequency of isolated single-edge chains by class.

        Boundary stubs are folded into the space row: both correct one
        data qubit within a single round and are indistinguishable to
        anything downstream of the graph.
        """
        merged = {
            "time": self.length_one_counts.get("time", 0),
            "space": (self.length_one_counts.get("space", 0)
                      + self.length_one_counts.get("edge", 0)),
            "st": self.length_one_counts.get("st", 0),
            "hook": self.length_one_counts.get("hook", 0),
        }
        total = sum(merged.values())
        if total == 0:
            return {k: 0.0 for k in merged}
        return {k: v / total for k, v in merged.items()}


def chain_census(cfg: RunConfig) -> ChainCensus:
    """Longest-chain distribution and single-edge class tallies."""
    cfg = cfg.resolved()
    lat = build_lattice(cfg.d)
    noise = NoiseModel.from_base(cfg.p)
    graph = build_graph(lat, noise, cfg.rounds)
    table = build_class_table(lat, noise, cfg.rounds, graph)
    hist: Dict[int, int] = {}
    kinds: Dict[str, int] = {}
    for chunk in sample_chunks(table, cfg.shots, cfg.seed, cfg.chunk_size,
                               want_edges=True):
        longest, seen = chunk_chain_stats(graph, chunk)
        vals, cnts = np.unique(longest, return_counts=True)
        for v, c in zip(vals.tolist(), cnts.tolist()):
            hist[v] = hist.get(v, 0) + c
        for k, c in seen.items():
            kinds[k] = kinds.get(k, 0) + c
    return ChainCensus(cfg.shots, hist, kinds)


def chain_length_histogram(cfg: RunConfig) -> Dict[int, int]:
    """Distribution of the longest realized chain per block."""
    return chain_census(cfg).histogram


# ---------------------------------------------------------------------------
# report emission


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "%.10g" % value
    return str(value)


def reports_to_csv(reports: Sequence[RunReport]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for rep in reports:
        row = rep.as_dict()
        lines.append(",".join(_fmt(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def reports_to_json(reports: Sequence[RunReport]) -> str:
    rows = []
    for rep in reports:
        row = {}
        for key, value in rep.as_dict().items():
            if isinstance(value, float) and math.isnan(value):
                value = None
            row[key] = value
        rows.append(row)
    payload = {"schema": SCHEMA_VERSION, "reports": rows}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_reports(reports: Sequence[RunReport], path: str,
                  fmt: str = "csv") -> None:
    if fmt == "csv":
        text = reports_to_csv(reports)
    elif fmt == "json":
        text = reports_to_json(reports)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
