"""Command-line front end.

Subcommands cover the whole workflow: single experiment cells (run),
grids (sweep), structure dumps for inspection (dump-graph,
dump-pipeline), self-checks (validate), and the realized-chain census
(histogram).  Settings come from an optional flat key=value config
file; explicit flags win.  Exit codes: 0 success, 1 configuration
problem, 2 runtime invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .circuit_sim import NoiseModel, det_coords
from .decoding_graph import build_graph, dump_graph
from .harness import (PREDECODERS, RunConfig, chain_census, reports_to_csv,
                      reports_to_json, run_experiment, sweep)
from .lattice import build_lattice
from .predecoder import (STAGE_ORDER, build_pipeline, decode_batch_pinball,
                         dump_pipeline)

THREADS_ENV = "PINBALL_THREADS"


class CliError(Exception):
    """Configuration-level failure; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits the process on bad flags; we want a status code
    def error(self, message):
        raise CliError(message)


# config file keys and their parsers; anything else is rejected
_CONFIG_KEYS: Dict[str, Callable[[str], object]] = {
    "d": int,
    "p": float,
    "shots": int,
    "seed": int,
    "rounds": int,
    "chunk_size": int,
    "predecoder": str,
}


def load_config(path: str) -> Dict[str, object]:
    """Flat key=value settings, # comments allowed, unknown keys fatal."""
    out: Dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value, "
                               f"got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _CONFIG_KEYS:
                raise CliError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _CONFIG_KEYS[key](value)
            except ValueError:
                raise CliError(f"{path}:{lineno}: bad value for "
                               f"{key}: {value!r}") from None
    return out


def _apply_thread_env() -> None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"{THREADS_ENV} must be an integer, got {raw!r}") \
            from None
    if n < 1:
        raise CliError(f"{THREADS_ENV} must be positive, got {n}")
    try:
        import numba
        numba.set_num_threads(n)
    except ImportError:
        pass    # kernels fall back to plain python; nothing to configure


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as err:
        raise CliError(f"cannot write {out}: {err}") from None


def _resolve(ns: argparse.Namespace, key: str, cast,
             required: bool = True, default=None):
    """Flag value if given, else config file value, else default."""
    flag = getattr(ns, key, None)
    if flag is not None:
        return flag
    if ns.file_config and key in ns.file_config:
        return ns.file_config[key]
    if default is not None:
        return default
    if required:
        raise CliError(f"missing required setting --{key.replace('_', '-')}")
    return None


def _parse_list(raw: str, cast, what: str) -> List:
    try:
        items = [cast(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"bad {what} list: {raw!r}") from None
    if not items:
        raise CliError(f"empty {what} list: {raw!r}")
    return items


# ---------------------------------------------------------------------------
# subcommands


def _cmd_run(ns: argparse.Namespace) -> int:
    cfg = RunConfig(
        d=_resolve(ns, "d", int),
        p=_resolve(ns, "p", float),
        shots=_resolve(ns, "shots", int),
        seed=_resolve(ns, "seed", int, required=False, default=0),
        predecoder=_resolve(ns, "predecoder", str, required=False,
                            default="pinball"),
        rounds=_resolve(ns, "rounds", int, required=False),
        chunk_size=_resolve(ns, "chunk_size", int, required=False,
                            default=100_000),
    )
    try:
        cfg = cfg.resolved()
    except ValueError as err:
        raise CliError(str(err)) from None
    report = run_experiment(cfg)
    text = (reports_to_json([report]) if ns.format == "json"
            else reports_to_csv([report]))
    _emit(text, ns.out)
    return 0


def _cmd_sweep(ns: argparse.Namespace) -> int:
    ds = _parse_list(str(_resolve(ns, "d", str)), int, "distance")
    ps = _parse_list(str(_resolve(ns, "p", str)), float, "error-rate")
    pres = _parse_list(_resolve(ns, "predecoder", str, required=False,
                                default="pinball"), str, "predecoder")
    for pre in pres:
        if pre not in PREDECODERS:
            raise CliError(f"unknown predecoder {pre!r}; "
                           f"expected one of {PREDECODERS}")
    try:
        reports = sweep(
            ds=ds, ps=ps, predecoders=pres,
            shots=_resolve(ns, "shots", int),
            seed=_resolve(ns, "seed", int, required=False, default=0),
            chunk_size=_resolve(ns, "chunk_size", int, required=False,
                                default=100_000))
    except ValueError as err:
        raise CliError(str(err)) from None
    text = (reports_to_json(reports) if ns.format == "json"
            else reports_to_csv(reports))
    _emit(text, ns.out)
    return 0


def _graph_for(ns: argparse.Namespace):
    d = _resolve(ns, "d", int)
    p = _resolve(ns, "p", float, required=False, default=1e-3)
    rounds = _resolve(ns, "rounds", int, required=False, default=d)
    try:
        lat = build_lattice(d)
        return lat, build_graph(lat, NoiseModel.from_base(p), rounds)
    except ValueError as err:
        raise CliError(str(err)) from None


def _cmd_dump_graph(ns: argparse.Namespace) -> int:
    _, graph = _graph_for(ns)
    _emit(dump_graph(graph), ns.out)
    return 0


def _cmd_dump_pipeline(ns: argparse.Namespace) -> int:
    _, graph = _graph_for(ns)
    _emit(dump_pipeline(build_pipeline(graph)), ns.out)
    return 0


def _cmd_validate(ns: argparse.Namespace) -> int:
    """Build every level for one distance and run the structural checks.

    The builders assert their own invariants (measurement schedule
    validity, single-fault soundness, exactly-once coverage, per-stage
    slot conflict freedom); on top of that, replay every single-edge
    block through the predecoder and demand a simple verdict with the
    edge's own observable effect.
    """
    lat, graph = _graph_for(ns)
    pipe = build_pipeline(graph)
    if len(pipe.stages) != len(STAGE_ORDER):
        raise AssertionError(
            f"expected {len(STAGE_ORDER)} stages, got {len(pipe.stages)}")
    n_anc = len(lat.x_ancillas)
    dets = np.zeros((len(graph.edges), graph.rounds + 1, n_anc),
                    dtype=np.uint8)
    for i, edge in enumerate(graph.edges):
        for det in edge.dets:
            layer, anc = det_coords(lat, det)
            dets[i, layer, anc] = 1
    res = decode_batch_pinball(pipe, dets)
    if res.complex_mask.any():
        raise AssertionError("single-edge block flagged complex: edges "
                             f"{np.flatnonzero(res.complex_mask).tolist()}")
    expected = np.array([e.logical for e in graph.edges], dtype=np.uint8)
    if not np.array_equal(res.predicted_flip, expected):
        bad = np.flatnonzero(res.predicted_flip != expected).tolist()
        raise AssertionError(f"single-edge observable mismatch: edges {bad}")
    _emit(f"validate d={lat.d}: lattice ok, graph ok ({len(graph.edges)} "
          f"edges), pipeline ok ({len(pipe.stages)} stages), "
          f"single-fault decode ok\n", ns.out)
    return 0


def _cmd_histogram(ns: argparse.Namespace) -> int:
    cfg = RunConfig(
        d=_resolve(ns, "d", int),
        p=_resolve(ns, "p", float),
        shots=_resolve(ns, "shots", int),
        seed=_resolve(ns, "seed", int, required=False, default=0),
        rounds=_resolve(ns, "rounds", int, required=False),
        chunk_size=_resolve(ns, "chunk_size", int, required=False,
                            default=100_000),
    )
    try:
        cfg = cfg.resolved()
    except ValueError as err:
        raise CliError(str(err)) from None
    census = chain_census(cfg)
    lengths = sorted(census.histogram)
    if ns.format == "json":
        import json
        payload = {
            "schema": "pinball-chains-1",
            "d": cfg.d, "rounds": cfg.rounds, "p": cfg.p,
            "shots": cfg.shots, "seed": cfg.seed,
            "histogram": {str(l): census.histogram[l] for l in lengths},
            "length_one_rates": census.length_one_rates(),
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = ["schema,d,rounds,p,shots,seed",
                 "pinball-chains-1,%d,%d,%.10g,%d,%d" % (
                     cfg.d, cfg.rounds, cfg.p, cfg.shots, cfg.seed),
                 "length,count"]
        lines += [f"{l},{census.histogram[l]}" for l in lengths]
        text = "\n".join(lines) + "\n"
    _emit(text, ns.out)
    return 0


_DISPATCH = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "dump-graph": _cmd_dump_graph,
    "dump-pipeline": _cmd_dump_pipeline,
    "validate": _cmd_validate,
    "histogram": _cmd_histogram,
}


# ---------------------------------------------------------------------------
# parser assembly and dispatch


def _add_common(sub: argparse.ArgumentParser, lists: bool = False) -> None:
    sub.add_argument("--config", default=None,
                     help="flat key=value settings file")
    sub.add_argument("--out", default=None, help="output path (default stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--rounds", type=int, default=None)
    sub.add_argument("--chunk-size", dest="chunk_size", type=int, default=None)
    if lists:
        sub.add_argument("--d", default=None, help="comma-separated distances")
        sub.add_argument("--p", default=None, help="comma-separated rates")
        sub.add_argument("--predecoder", default=None,
                         help="comma-separated predecoder names")
    else:
        sub.add_argument("--d", type=int, default=None)
        sub.add_argument("--p", type=float, default=None)
        sub.add_argument("--predecoder", choices=PREDECODERS, default=None)
    sub.add_argument("--shots", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pinball",
                     description="surface-code predecoding laboratory")
    subs = parser.add_subparsers(dest="cmd")
    for name, lists in [("run", False), ("sweep", True), ("dump-graph", False),
                        ("dump-pipeline", False), ("validate", False),
                        ("histogram", False)]:
        _add_common(subs.add_parser(name, prog=f"pinball {name}"),
                    lists=lists)
    return parser


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.cmd is None:
            raise CliError("a subcommand is required "
                           f"(one of {', '.join(sorted(_DISPATCH))})")
        ns.file_config = load_config(ns.config) if ns.config else {}
        _apply_thread_env()
        return _DISPATCH[ns.cmd](ns)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except AssertionError as err:
        print(f"invariant violation: {err}", file=sys.stderr)
        return 2
    except SystemExit as ex:   # argparse --help
        code = ex.code
        return int(code) if isinstance(code, int) else 0


def main() -> None:
    raise SystemExit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
