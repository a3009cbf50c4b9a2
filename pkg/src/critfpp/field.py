"""Sampled weight fields on origin-centered boxes.

Each edge of the box carries an i.i.d. uniform label omega in [0, 1);
an edge is p-open when its label is <= p, and its weight under a
distribution d is d applied to the label through the quantile map.  A
dual edge inherits the label of the primal edge it crosses.

Labels are generated by a counter-based hash of (seed, edge), never by
a sequential stream.  Two consequences the rest of the package leans
on: restricting a field to a sub-box equals sampling the sub-box
directly with the same seed, and any edge subset can be generated in
isolation (used by the crossing estimators and by box-enlargement
retries, which extend a configuration without disturbing it).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import lattice
from .errors import MemoryGuardError, OutOfBoxError
from .lattice import DualEdgeId, EdgeId
from .weights import CriticalDistribution

RADIUS_GUARD = 2**15

_MAGIC = b"FPPW1"
_HEADER = struct.Struct("<5siQ")
_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_COORD_OFFSET = 1 << 19  # shifts coordinates of B(2^15) into [0, 2^20)


def mix64(x: int) -> int:
    """SplitMix64 finalizer; the package's one mixing primitive."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix_seed(master: int, *parts: int) -> int:
    """Derive a child seed from a master seed and integer indices.

    The chain is mix64(current XOR mix64(part + GOLDEN)) per part; it is
    part of the reproducibility contract and must not change.
    """
    s = master & _MASK
    for p in parts:
        s = mix64(s ^ mix64((p + _GOLDEN) & _MASK))
    return s


def _mix64_u64(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return x


def omega_for_edges(
    seed: int,
    base_x: np.ndarray,
    base_y: np.ndarray,
    orientation: np.ndarray,
) -> np.ndarray:
    """Uniform labels for the given edges under the given seed.

    The label of an edge is a pure function of (seed, base, orientation),
    independent of which box or subset it is generated within.
    """
    key = (
        (orientation.astype(np.uint64) << np.uint64(40))
        | ((base_x.astype(np.int64) + _COORD_OFFSET).astype(np.uint64) << np.uint64(20))
        | (base_y.astype(np.int64) + _COORD_OFFSET).astype(np.uint64)
    )
    u = np.uint64(seed & _MASK) + np.uint64(_GOLDEN) * (key + np.uint64(1))
    h = _mix64_u64(_mix64_u64(u))
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _omega_scalar(seed: int, edge: EdgeId) -> float:
    bx = np.array([edge.base[0]], dtype=np.int64)
    by = np.array([edge.base[1]], dtype=np.int64)
    orient = np.array([0 if edge.orientation == lattice.HORIZONTAL else 1])
    return float(omega_for_edges(seed, bx, by, orient)[0])


@dataclass(frozen=True)
class WeightField:
    """Uniform labels on every edge of B(radius), in canonical order."""

    radius: int
    seed: int
    omega: np.ndarray

    def _index(self, edge: EdgeId | DualEdgeId) -> int:
        if isinstance(edge, DualEdgeId):
            edge = edge.primal
        if edge.span_radius > self.radius:
            raise OutOfBoxError(f"{edge} outside B({self.radius})")
        return lattice.edge_index(self.radius, edge)

    def omega_of(self, edge: EdgeId | DualEdgeId) -> float:
        return float(self.omega[self._index(edge)])

    def is_open(self, edge: EdgeId | DualEdgeId, p: float) -> bool:
        """p-open for a primal edge; p-closedness of a dual edge is the
        negation, since the dual inherits the primal label."""
        return self.omega_of(edge) <= p

    def weight_of(self, edge: EdgeId | DualEdgeId, d: CriticalDistribution) -> float:
        return d.weight_of(self.omega_of(edge))

    def weights(self, d: CriticalDistribution) -> np.ndarray:
        """All edge weights under d, canonical order."""
        return d.quantile_array(self.omega)

    def restrict(self, radius: int) -> "WeightField":
        """The field on a concentric sub-box; identical labels.

        Slices the stored labels rather than resampling, so it also
        behaves correctly on loaded or hand-built fields whose labels
        did not come from the seed hash.
        """
        if radius > self.radius:
            raise OutOfBoxError(
                f"cannot restrict B({self.radius}) to larger B({radius})"
            )
        if radius == self.radius:
            return self
        bx, by, orient = lattice.edge_arrays(radius)
        idx = lattice.edge_indices(self.radius, bx, by, orient)
        return WeightField(radius, self.seed, self.omega[idx])


def omega_grids(
    f: WeightField, radius: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Dense label grids for the edges of B(radius), radius <= f.radius.

    Returns (om_h, om_v): ``om_h[y + r, x + r]`` is the label of the H
    edge based at (x, y) for x in [-r, r-1], y in [-r, r], and
    ``om_v[y + r, x + r]`` that of the V edge for x in [-r, r],
    y in [-r, r-1].
    """
    r = f.radius if radius is None else radius
    sub = f.restrict(r)
    w = 2 * r + 1
    h_map, v_map = lattice.edge_index_maps(r)
    om_h = sub.omega[h_map.reshape(w, w)[:, :-1]]
    om_v = sub.omega[v_map.reshape(w, w)[:-1, :]]
    return om_h, om_v


def sample(radius: int, seed: int) -> WeightField:
    """Sample the weight field on B(radius)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius > RADIUS_GUARD:
        raise MemoryGuardError(
            f"radius {radius} exceeds the guard {RADIUS_GUARD}; "
            "the edge array would not fit in memory"
        )
    bx, by, orient = lattice.edge_arrays(radius)
    omega = omega_for_edges(seed, bx, by, orient)
    return WeightField(radius, seed & _MASK, omega)


def dump(f: WeightField, path: str) -> None:
    """Write the field: magic 'FPPW1', int32 radius, uint64 seed, then
    float64 labels in canonical order, all little-endian."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, f.radius, f.seed & _MASK))
        fh.write(f.omega.astype("<f8", copy=False).tobytes())


def load(path: str) -> WeightField:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, radius, seed = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        data = fh.read()
    expected = lattice.edge_count(radius)
    omega = np.frombuffer(data, dtype="<f8")
    if omega.size != expected:
        raise ValueError(
            f"{path}: expected {expected} labels for B({radius}), got {omega.size}"
        )
    return WeightField(radius, seed, omega.astype(np.float64))
