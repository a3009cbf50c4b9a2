"""Passage times and geodesics over sampled weight fields.

The passage time between vertex sets is the least total edge weight
over lattice paths; the reported geodesic is the unique minimizer under
a deterministic tie-break (heap ordered by (distance, vertex), ties in
distance keeping the smallest predecessor vertex).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels, lattice
from .errors import BoxTooSmallError, NoPathError, OutOfBoxError
from .field import WeightField, sample
from .lattice import EdgeId, Vertex
from .weights import CriticalDistribution


@dataclass(frozen=True)
class PassageResult:
    """A passage time plus the geodesic realizing it.

    edge_times aligns with path; truncation_radius is set by point_time
    to record the box the path was confined to.
    """

    time: float
    path: tuple[EdgeId, ...]
    edge_times: tuple[float, ...]
    source_hit: Vertex
    target_hit: Vertex
    truncation_radius: int | None = None


@dataclass(frozen=True)
class AnnulusTimes:
    """Passage time split by the annulus shell of each path edge."""

    per_annulus: tuple[tuple[int, float], ...]
    total: float


def _target_mask(radius: int, targets: Iterable[Vertex]) -> np.ndarray:
    mask = np.zeros((2 * radius + 1) ** 2, dtype=np.uint8)
    count = 0
    for t in targets:
        mask[lattice.vertex_index(radius, t)] = 1
        count += 1
    if count == 0:
        raise ValueError("empty target set")
    return mask


def _source_indices(radius: int, sources: Iterable[Vertex]) -> np.ndarray:
    idx = sorted(lattice.vertex_index(radius, s) for s in sources)
    if not idx:
        raise ValueError("empty source set")
    return np.array(idx, dtype=np.int64)


def _reconstruct(
    radius: int,
    weights: np.ndarray,
    pred_vertex: np.ndarray,
    pred_edge: np.ndarray,
    hit: int,
) -> tuple[list[EdgeId], list[float], Vertex]:
    path_idx = []
    v = hit
    while pred_edge[v] >= 0:
        path_idx.append(int(pred_edge[v]))
        v = int(pred_vertex[v])
    path_idx.reverse()
    edges = [lattice.edge_from_index(radius, i) for i in path_idx]
    times = [float(weights[i]) for i in path_idx]
    return edges, times, lattice.vertex_from_index(radius, v)


def passage_time(
    f: WeightField,
    d: CriticalDistribution,
    sources: Iterable[Vertex],
    targets: Iterable[Vertex],
    restrict_to: Iterable[EdgeId] | np.ndarray | None = None,
) -> PassageResult:
    """Least-weight connection from `sources` to `targets` inside the box.

    `restrict_to` confines the path to an edge subset, given either as
    EdgeIds or as a boolean mask over the canonical edge order.
    """
    radius = f.radius
    sources = list(sources)
    targets = list(targets)
    for v in sources + targets:
        if max(abs(v[0]), abs(v[1])) > radius:
            raise OutOfBoxError(f"terminal {v} outside B({radius})")
    allowed = None
    if restrict_to is not None:
        if isinstance(restrict_to, np.ndarray):
            allowed = restrict_to.astype(np.uint8, copy=False)
            if allowed.size != f.omega.size:
                raise ValueError("restriction mask length mismatch")
        else:
            allowed = np.zeros(f.omega.size, dtype=np.uint8)
            for e in restrict_to:
                allowed[lattice.edge_index(radius, e)] = 1
    weights = f.weights(d)
    h_map, v_map = lattice.edge_index_maps(radius)
    dist, pred_vertex, pred_edge, hit = kernels.dijkstra_grid(
        2 * radius + 1,
        h_map,
        v_map,
        weights,
        _source_indices(radius, sources),
        _target_mask(radius, targets),
        allowed,
    )
    if hit < 0:
        raise NoPathError("target set unreachable under the given restriction")
    edges, times, src = _reconstruct(radius, weights, pred_vertex, pred_edge, hit)
    return PassageResult(
        time=float(dist[hit]),
        path=tuple(edges),
        edge_times=tuple(times),
        source_hit=src,
        target_hit=lattice.vertex_from_index(radius, hit),
    )


def box_time(f: WeightField, d: CriticalDistribution, n: int) -> PassageResult:
    """T(0, boundary of B(n))."""
    if n < 0:
        raise ValueError("box scale must be >= 0")
    if n > f.radius:
        raise BoxTooSmallError(f"B({n}) exceeds the sampled B({f.radius})")
    return passage_time(f, d, [(0, 0)], lattice.boundary_of_box(n))


def point_time(
    f: WeightField,
    d: CriticalDistribution,
    x: Vertex,
    guard_ratio: float = 2.0,
) -> PassageResult:
    """Truncated point-to-point time T(0, x) within B(guard_ratio * |x|).

    The guard box bounds the detours a geodesic may take; the result
    records the truncation radius used.  guard_ratio must be >= 1.5.
    """
    if guard_ratio < 1.5:
        raise ValueError("guard_ratio must be >= 1.5")
    r_needed = math.ceil(guard_ratio * max(abs(x[0]), abs(x[1])))
    if r_needed > f.radius:
        raise BoxTooSmallError(
            f"point_time needs B({r_needed}); field has B({f.radius})"
        )
    sub = f if f.radius == r_needed else sample(r_needed, f.seed)
    res = passage_time(sub, d, [(0, 0)], [x])
    return PassageResult(
        time=res.time,
        path=res.path,
        edge_times=res.edge_times,
        source_hit=res.source_hit,
        target_hit=res.target_hit,
        truncation_radius=r_needed,
    )


def annulus_decomposition(result: PassageResult) -> AnnulusTimes:
    """Split a path's time across the annulus shells its edges lie in."""
    acc: dict[int, float] = {}
    for e, t in zip(result.path, result.edge_times):
        k = lattice.annulus_of_edge(e)
        acc[k] = acc.get(k, 0.0) + t
    per = tuple(sorted(acc.items()))
    return AnnulusTimes(per_annulus=per, total=float(sum(acc.values())))


# ---------------------------------------------------------------------------
# Array-level fast paths used by the Monte Carlo drivers.
# ---------------------------------------------------------------------------


def box_time_value(omega: np.ndarray, radius: int, n: int,
                   d: CriticalDistribution) -> float:
    """T(0, boundary of B(n)) from a raw label array; time only."""
    weights = d.quantile_array(omega)
    h_map, v_map = lattice.edge_index_maps(radius)
    mask = _ring_mask(radius, n)
    src = np.array([lattice.vertex_index(radius, (0, 0))], dtype=np.int64)
    dist, _, _, hit = kernels.dijkstra_grid(
        2 * radius + 1, h_map, v_map, weights, src, mask, None
    )
    if hit < 0:
        raise NoPathError("box boundary unreachable")
    return float(dist[hit])


def box_time_profile(omega: np.ndarray, radius: int, scales: Sequence[int],
                     d: CriticalDistribution) -> list[float]:
    """T(0, boundary of B(n)) for each n in `scales`, off one relaxation.

    A geodesic to a ring stays weakly inside it, so a single full-box
    pass yields every scale at once (used by the divergence probe, where
    common randomness across scales sharpens increment estimates).
    """
    weights = d.quantile_array(omega)
    h_map, v_map = lattice.edge_index_maps(radius)
    src = np.array([lattice.vertex_index(radius, (0, 0))], dtype=np.int64)
    no_target = np.zeros((2 * radius + 1) ** 2, dtype=np.uint8)
    dist, _, _, _ = kernels.dijkstra_grid(
        2 * radius + 1, h_map, v_map, weights, src, no_target, None
    )
    out = []
    for n in scales:
        if n > radius:
            raise BoxTooSmallError(f"scale {n} exceeds box {radius}")
        ring = np.flatnonzero(_ring_mask(radius, n))
        out.append(float(dist[ring].min()))
    return out


def _ring_mask(radius: int, n: int) -> np.ndarray:
    w = 2 * radius + 1
    coords = np.arange(-radius, radius + 1)
    cheb = np.maximum(np.abs(coords)[None, :], np.abs(coords)[:, None])
    return (cheb == n).astype(np.uint8).reshape(w * w)
