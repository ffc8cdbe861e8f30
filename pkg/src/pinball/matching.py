"""Exact minimum-weight matching on the decoding graph.

Defects (active detectors) are paired with each other or with the
lattice boundary so that the total path weight is minimal; the
predicted observable flip is the parity of logical-crossing edges on
the matched paths.  Defect sets first split into independent clusters
(a pair whose connecting path runs through the boundary never beats
matching both endpoints to the boundary, so such pairs are cut).
Small clusters go through an exact bitmask subset scan, large ones
through an exact integer program; a blossom reduction with virtual
boundary partners is kept as a third route for cross-validation.  All
routes are exact, so they must agree; tests also hold them against an
independent recursive search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from pinball.decoding_graph import DecodingGraph

try:
    from numba import njit

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*a, **k):
        def wrap(f):
            return f

        return wrap


# beyond this many defects the bitmask scan would need > 2^20 states,
# so the blossom route takes over
DP_MAX_DEFECTS = 16


@dataclass
class Matcher:
    graph: DecodingGraph
    n_dets: int
    dist: np.ndarray          # (n+1, n+1) path weights, node n = boundary
    pred: np.ndarray          # dijkstra predecessors for reconstruction
    par: np.ndarray           # (n+1, n+1) logical parity along those paths
    edge_lookup: Dict[Tuple[int, int], int]   # node pair -> graph edge id

    @property
    def boundary_node(self) -> int:
        return self.n_dets


def build_matcher(graph: DecodingGraph) -> Matcher:
    n = graph.n_dets
    b = n
    best: Dict[Tuple[int, int], Tuple[float, int]] = {}
    for e in graph.edges:
        if e.boundary:
            (det,) = e.dets
            key = (det, b)
        else:
            u, v = sorted(e.dets)
            key = (u, v)
        if key not in best or e.weight < best[key][0]:
            best[key] = (e.weight, e.id)
    rows, cols, data = [], [], []
    edge_lookup = {}
    for (u, v), (w, eid) in best.items():
        rows += [u, v]
        cols += [v, u]
        data += [w, w]
        edge_lookup[(u, v)] = eid
        edge_lookup[(v, u)] = eid
    adj = scipy.sparse.csr_matrix(
        (np.array(data), (np.array(rows), np.array(cols))),
        shape=(n + 1, n + 1))
    dist, pred = scipy.sparse.csgraph.dijkstra(
        adj, directed=False, return_predecessors=True)
    assert np.isfinite(dist).all(), "decoding graph is disconnected"

    logicals = {key: graph.edges[eid].logical
                for key, eid in edge_lookup.items()}
    par = np.zeros((n + 1, n + 1), dtype=np.uint8)
    order = np.argsort(dist, axis=1)
    for i in range(n + 1):
        row_pred = pred[i]
        row_par = par[i]
        for j in order[i]:
            p = row_pred[j]
            if p < 0:
                continue  # the source itself
            row_par[j] = row_par[p] ^ logicals[(int(p), int(j))]
    return Matcher(graph=graph, n_dets=n, dist=dist, pred=pred, par=par,
                   edge_lookup=edge_lookup)


# ---------------------------------------------------------------------------
# exact pairing, bitmask route


# a defect pair whose shortest path runs through the boundary costs the
# same as matching both to the boundary separately (and crosses the
# observable the same number of times), so such pairs can be cut; the
# remaining clusters are solved independently without losing exactness
_CUT_EPS = 1e-12
_MAX_SHOT_DEFECTS = 64


def _dp_kernel(defs, offsets, dist, bdist, par, bpar, flips, oversize):
    memo = np.empty(1 << DP_MAX_DEFECTS, dtype=np.float64)
    parent = np.empty(_MAX_SHOT_DEFECTS, dtype=np.int64)
    members = np.empty(_MAX_SHOT_DEFECTS, dtype=np.int64)
    dloc = np.empty((DP_MAX_DEFECTS, DP_MAX_DEFECTS), dtype=np.float64)
    bloc = np.empty(DP_MAX_DEFECTS, dtype=np.float64)
    for s in range(len(offsets) - 1):
        lo, hi = offsets[s], offsets[s + 1]
        n = hi - lo
        if n == 0:
            flips[s] = 0
            continue
        if n > _MAX_SHOT_DEFECTS:
            oversize[s] = True
            continue
        for i in range(n):
            parent[i] = i
        for i in range(n):
            di = defs[lo + i]
            for j in range(i + 1, n):
                dj = defs[lo + j]
                if dist[di, dj] < bdist[di] + bdist[dj] - _CUT_EPS:
                    ri = i
                    while parent[ri] != ri:
                        ri = parent[ri]
                    rj = j
                    while parent[rj] != rj:
                        rj = parent[rj]
                    if ri < rj:
                        parent[rj] = ri
                    elif rj < ri:
                        parent[ri] = rj
        flip = 0
        bad = False
        for root in range(n):
            k = 0
            for i in range(root, n):
                ri = i
                while parent[ri] != ri:
                    ri = parent[ri]
                if ri == root:
                    members[k] = defs[lo + i]
                    k += 1
            if k == 0:
                continue
            if k > DP_MAX_DEFECTS:
                bad = True
                break
            for a in range(k):
                bloc[a] = bdist[members[a]]
                for c in range(k):
                    dloc[a, c] = dist[members[a], members[c]]
            full = (1 << k) - 1
            memo[0] = 0.0
            for mask in range(1, full + 1):
                i = 0
                while not (mask >> i) & 1:
                    i += 1
                rest = mask & ~(1 << i)
                bst = bloc[i] + memo[rest]
                j = i + 1
                while j < k:
                    if (rest >> j) & 1:
                        cand = dloc[i, j] + memo[rest & ~(1 << j)]
                        if cand < bst:
                            bst = cand
                    j += 1
                memo[mask] = bst
            # walk the table again, taking the first optimal choice
            mask = full
            while mask:
                i = 0
                while not (mask >> i) & 1:
                    i += 1
                rest = mask & ~(1 << i)
                eps = 1e-9 * (1.0 + abs(memo[mask]))
                if bloc[i] + memo[rest] <= memo[mask] + eps:
                    flip ^= bpar[members[i]]
                    mask = rest
                    continue
                chosen = False
                j = i + 1
                while j < k:
                    if (rest >> j) & 1:
                        nxt = rest & ~(1 << j)
                        if dloc[i, j] + memo[nxt] <= memo[mask] + eps:
                            flip ^= par[members[i], members[j]]
                            mask = nxt
                            chosen = True
                            break
                    j += 1
                if not chosen:  # pragma: no cover - table always yields one
                    raise AssertionError("pairing reconstruction failed")
        if bad:
            oversize[s] = True
            continue
        flips[s] = flip
    return flips


_dp_kernel_fast = njit(cache=True)(_dp_kernel) if _HAVE_NUMBA else _dp_kernel


def _dp_pairs(matcher: Matcher, defects: Sequence[int]
              ) -> List[Tuple[int, int]]:
    """Single-shot pairing with the same tie rule as the batch kernel."""
    k = len(defects)
    b = matcher.boundary_node
    dist, bdist = matcher.dist, matcher.dist[:, b]
    memo = {0: 0.0}
    order = []
    for mask in range(1, 1 << k):
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        bst = bdist[defects[i]] + memo[rest]
        for j in range(i + 1, k):
            if (rest >> j) & 1:
                cand = (dist[defects[i], defects[j]]
                        + memo[rest & ~(1 << j)])
                if cand < bst:
                    bst = cand
        memo[mask] = bst
    mask = (1 << k) - 1
    while mask:
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        eps = 1e-9 * (1.0 + abs(memo[mask]))
        if bdist[defects[i]] + memo[rest] <= memo[mask] + eps:
            order.append((defects[i], -1))
            mask = rest
            continue
        for j in range(i + 1, k):
            if (rest >> j) & 1:
                nxt = rest & ~(1 << j)
                if (dist[defects[i], defects[j]] + memo[nxt]
                        <= memo[mask] + eps):
                    order.append((defects[i], defects[j]))
                    mask = nxt
                    break
        else:  # pragma: no cover
            raise AssertionError("pairing reconstruction failed")
    return order


# ---------------------------------------------------------------------------
# exact pairing, integer-program route (for clusters past the bitmask cap)


def _milp_pairs(matcher: Matcher, defects: Sequence[int]
                ) -> List[Tuple[int, int]]:
    from scipy.optimize import Bounds, LinearConstraint, milp

    k = len(defects)
    b = matcher.boundary_node
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    n_e = len(edges)
    cost = np.empty(n_e + k)
    for e, (i, j) in enumerate(edges):
        cost[e] = matcher.dist[defects[i], defects[j]]
    for i in range(k):
        cost[n_e + i] = matcher.dist[defects[i], b]
    # each defect is covered exactly once, by a partner or the boundary
    a = np.zeros((k, n_e + k))
    for e, (i, j) in enumerate(edges):
        a[i, e] = 1.0
        a[j, e] = 1.0
    for i in range(k):
        a[i, n_e + i] = 1.0
    res = milp(cost, constraints=LinearConstraint(a, 1.0, 1.0),
               integrality=np.ones(n_e + k), bounds=Bounds(0.0, 1.0))
    assert res.status == 0, "matching solver failed"
    x = np.round(res.x).astype(np.int64)
    pairs = []
    for e, (i, j) in enumerate(edges):
        if x[e]:
            pairs.append((defects[i], defects[j]))
    for i in range(k):
        if x[n_e + i]:
            pairs.append((defects[i], -1))
    assert len(pairs) * 2 >= k
    return pairs


# ---------------------------------------------------------------------------
# exact pairing, blossom route (cross-validation in tests)


def _blossom_pairs(matcher: Matcher, defects: Sequence[int]
                   ) -> List[Tuple[int, int]]:
    import networkx as nx

    k = len(defects)
    b = matcher.boundary_node
    g = nx.Graph()
    for i in range(k):
        g.add_edge(i, k + i, weight=-float(matcher.dist[defects[i], b]))
        for j in range(i + 1, k):
            g.add_edge(i, j,
                       weight=-float(matcher.dist[defects[i], defects[j]]))
            g.add_edge(k + i, k + j, weight=0.0)
    mate = nx.max_weight_matching(g, maxcardinality=True)
    assert len(mate) == k, "matching is not perfect"
    pairs = []
    for a, c in mate:
        a, c = min(a, c), max(a, c)
        if c < k:
            pairs.append((defects[a], defects[c]))
        elif a < k:
            assert c == k + a
            pairs.append((defects[a], -1))
    return pairs


# ---------------------------------------------------------------------------
# public surface


def pairing_cost(matcher: Matcher, pairs: Sequence[Tuple[int, int]]) -> float:
    b = matcher.boundary_node
    return sum(matcher.dist[u, b if v < 0 else v] for u, v in pairs)


def _clusters(matcher: Matcher, defects: Sequence[int]) -> List[List[int]]:
    k = len(defects)
    b = matcher.boundary_node
    bdist = matcher.dist[:, b]
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            cut = (matcher.dist[defects[i], defects[j]]
                   >= bdist[defects[i]] + bdist[defects[j]] - _CUT_EPS)
            if not cut:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: Dict[int, List[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(defects[i])
    return [groups[r] for r in sorted(groups)]


def match_defects(matcher: Matcher, defects: Sequence[int]
                  ) -> List[Tuple[int, int]]:
    defects = sorted(defects)
    if not defects:
        return []
    pairs: List[Tuple[int, int]] = []
    for cluster in _clusters(matcher, defects):
        if len(cluster) <= DP_MAX_DEFECTS:
            pairs += _dp_pairs(matcher, cluster)
        else:
            pairs += _milp_pairs(matcher, cluster)
    return pairs


def brute_force_match(matcher: Matcher, defects: Sequence[int]) -> float:
    """Exhaustive optimum over every pairing; reference for small sets."""
    defects = sorted(defects)
    if len(defects) > 10:
        raise ValueError("exhaustive search is capped at 10 defects")
    b = matcher.boundary_node

    def best(rest: Tuple[int, ...]) -> float:
        if not rest:
            return 0.0
        first, tail = rest[0], rest[1:]
        out = matcher.dist[first, b] + best(tail)
        for i, other in enumerate(tail):
            cand = (matcher.dist[first, other]
                    + best(tail[:i] + tail[i + 1:]))
            if cand < out:
                out = cand
        return out

    return float(best(tuple(defects)))


def _path_edges(matcher: Matcher, src: int, dst: int) -> List[int]:
    row = matcher.pred[src]
    out = []
    j = dst
    while j != src:
        p = int(row[j])
        assert p >= 0
        out.append(matcher.edge_lookup[(p, j)])
        j = p
    return out


def flip_from_pairs(matcher: Matcher, pairs: Sequence[Tuple[int, int]]) -> int:
    b = matcher.boundary_node
    flip = 0
    for u, v in pairs:
        flip ^= int(matcher.par[u, b if v < 0 else v])
    return flip


def correction_from_pairs(matcher: Matcher,
                          pairs: Sequence[Tuple[int, int]]) -> FrozenSet[int]:
    b = matcher.boundary_node
    corr: set = set()
    for u, v in pairs:
        for eid in _path_edges(matcher, u, b if v < 0 else v):
            corr ^= set(matcher.graph.edges[eid].correction)
    return frozenset(corr)


@dataclass
class MatchOutcome:
    pairs: List[Tuple[int, int]]
    cost: float
    predicted_flip: int
    correction: FrozenSet[int]


def decode_block_mwpm(matcher: Matcher, dets: np.ndarray) -> MatchOutcome:
    flat = np.asarray(dets, dtype=np.uint8).reshape(-1)
    assert flat.shape[0] == matcher.n_dets
    defects = np.flatnonzero(flat).tolist()
    pairs = match_defects(matcher, defects)
    return MatchOutcome(pairs=pairs, cost=pairing_cost(matcher, pairs),
                        predicted_flip=flip_from_pairs(matcher, pairs),
                        correction=correction_from_pairs(matcher, pairs))


def decode_batch_mwpm(matcher: Matcher, dets: np.ndarray,
                      select: Optional[np.ndarray] = None) -> np.ndarray:
    """Predicted observable flips for a batch, (shots,) uint8.

    `select` restricts decoding to a boolean subset of shots; the rest
    come back 0.  Shots with more defects than the bitmask route can
    hold are retried through the blossom route.
    """
    flat = np.asarray(dets, dtype=np.uint8).reshape(dets.shape[0], -1)
    assert flat.shape[1] == matcher.n_dets
    if select is not None:
        flat = flat * select[:, None].astype(np.uint8)
    shot_idx, det_idx = np.nonzero(flat)
    counts = np.bincount(shot_idx, minlength=flat.shape[0])
    offsets = np.zeros(flat.shape[0] + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    flips = np.zeros(flat.shape[0], dtype=np.uint8)
    oversize = np.zeros(flat.shape[0], dtype=np.bool_)
    b = matcher.boundary_node
    _dp_kernel_fast(det_idx.astype(np.int64), offsets, matcher.dist,
                    np.ascontiguousarray(matcher.dist[:, b]), matcher.par,
                    np.ascontiguousarray(matcher.par[:, b]), flips, oversize)
    for s in np.flatnonzero(oversize):
        flips[s] = _flip_mixed(matcher,
                               det_idx[offsets[s]:offsets[s + 1]].tolist())
    return flips


def _flip_mixed(matcher: Matcher, defects: Sequence[int]) -> int:
    """Flip for one heavy shot: bitmask kernel per small cluster,
    integer program per large one."""
    b = matcher.boundary_node
    bdist = np.ascontiguousarray(matcher.dist[:, b])
    bpar = np.ascontiguousarray(matcher.par[:, b])
    flip = 0
    for cluster in _clusters(matcher, sorted(defects)):
        if len(cluster) <= DP_MAX_DEFECTS:
            one = np.zeros(1, dtype=np.uint8)
            none = np.zeros(1, dtype=np.bool_)
            _dp_kernel_fast(np.array(cluster, dtype=np.int64),
                            np.array([0, len(cluster)], dtype=np.int64),
                            matcher.dist, bdist, matcher.par, bpar, one, none)
            assert not none[0]
            flip ^= int(one[0])
        else:
            flip ^= flip_from_pairs(matcher, _milp_pairs(matcher, cluster))
    return flip
