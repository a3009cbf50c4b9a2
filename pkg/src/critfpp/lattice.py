"""Square-lattice geometry: boxes, annuli, edges and their duals.

Conventions used throughout the package:

* A vertex is an integer pair ``(x, y)``; distances are sup-norm.
* ``B(n)`` is the box of sup-norm radius ``n`` centered at the origin.
* An edge is identified by its base vertex and orientation: ``H`` spans
  ``base -> base + (1, 0)``, ``V`` spans ``base -> base + (0, 1)``.
* The canonical edge order of a box enumerates base vertices row-major
  (by ``(y, x)``) and emits the ``H`` edge before the ``V`` edge at a
  shared base.  All dense per-edge arrays in the package follow it.
* The dual vertex sitting in the face with lower-left corner ``(i, j)``
  is the point ``(i + 1/2, j + 1/2)``; a dual edge is represented by the
  primal edge it crosses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

Vertex = tuple[int, int]

HORIZONTAL = "H"
VERTICAL = "V"


class EdgeId(NamedTuple):
    base: Vertex
    orientation: str

    @property
    def endpoints(self) -> tuple[Vertex, Vertex]:
        x, y = self.base
        if self.orientation == HORIZONTAL:
            return (x, y), (x + 1, y)
        return (x, y), (x, y + 1)

    @property
    def span_radius(self) -> int:
        """Smallest n with both endpoints in B(n)."""
        (x0, y0), (x1, y1) = self.endpoints
        return max(abs(x0), abs(y0), abs(x1), abs(y1))


class DualEdgeId(NamedTuple):
    primal: EdgeId

    @property
    def endpoints(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """The two dual vertices, as half-integer points."""
        (a, b) = dual_faces(self.primal)
        return (a[0] + 0.5, a[1] + 0.5), (b[0] + 0.5, b[1] + 0.5)


def dual_of(edge: EdgeId) -> DualEdgeId:
    return DualEdgeId(edge)


def primal_of(dual: DualEdgeId) -> EdgeId:
    return dual.primal


def dual_faces(edge: EdgeId) -> tuple[Vertex, Vertex]:
    """Integer labels of the two faces flanking ``edge``.

    The face labeled ``(i, j)`` has corners (i, j)..(i+1, j+1); its dual
    vertex is the center (i+1/2, j+1/2).  A horizontal edge separates
    the face above from the face below, a vertical edge the face to the
    right from the face to the left.
    """
    x, y = edge.base
    if edge.orientation == HORIZONTAL:
        return (x, y), (x, y - 1)
    return (x, y), (x - 1, y)


@dataclass(frozen=True)
class BoxSpec:
    """The box B(radius) = {v : ||v||_inf <= radius}."""

    radius: int

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ValueError("box radius must be >= 0")

    def contains_vertex(self, v: Vertex) -> bool:
        return max(abs(v[0]), abs(v[1])) <= self.radius

    def contains_edge(self, e: EdgeId) -> bool:
        return e.span_radius <= self.radius

    @property
    def vertex_count(self) -> int:
        return (2 * self.radius + 1) ** 2

    @property
    def edge_count(self) -> int:
        return edge_count(self.radius)


@dataclass(frozen=True)
class AnnulusSpec:
    """Ann(k): B(1) for k = -1, the shell B(2^(k+1)) \\ B(2^k) for k >= 0."""

    k: int

    def __post_init__(self) -> None:
        if self.k < -1:
            raise ValueError("annulus index must be >= -1")

    @property
    def inner(self) -> int:
        """Exclusive inner radius of the vertex shell (-1 means none)."""
        return -1 if self.k == -1 else 2**self.k

    @property
    def outer(self) -> int:
        return 2 ** (self.k + 1)

    def contains_vertex(self, v: Vertex) -> bool:
        r = max(abs(v[0]), abs(v[1]))
        return self.inner < r <= self.outer

    def contains_edge(self, e: EdgeId) -> bool:
        return annulus_of_edge(e) == self.k


def neighbors(v: Vertex) -> list[Vertex]:
    x, y = v
    return [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]


def incident_edges(v: Vertex) -> list[EdgeId]:
    x, y = v
    return [
        EdgeId((x, y), HORIZONTAL),
        EdgeId((x - 1, y), HORIZONTAL),
        EdgeId((x, y), VERTICAL),
        EdgeId((x, y - 1), VERTICAL),
    ]


def edge_between(u: Vertex, v: Vertex) -> EdgeId:
    """The edge joining two adjacent vertices."""
    dx, dy = v[0] - u[0], v[1] - u[1]
    if (abs(dx), abs(dy)) not in ((1, 0), (0, 1)):
        raise ValueError(f"vertices {u} and {v} are not adjacent")
    base = (min(u[0], v[0]), min(u[1], v[1]))
    return EdgeId(base, HORIZONTAL if dx != 0 else VERTICAL)


def vertices_of_box(radius: int) -> list[Vertex]:
    """Vertices of B(radius) in row-major (y, x) order."""
    return [
        (x, y)
        for y in range(-radius, radius + 1)
        for x in range(-radius, radius + 1)
    ]


def boundary_of_box(radius: int) -> list[Vertex]:
    """The ring ||v||_inf == radius, row-major order."""
    if radius == 0:
        return [(0, 0)]
    out = []
    for y in range(-radius, radius + 1):
        if abs(y) == radius:
            out.extend((x, y) for x in range(-radius, radius + 1))
        else:
            out.append((-radius, y))
            out.append((radius, y))
    return out


def edge_count(radius: int) -> int:
    """|E(B(radius))| = 4 * radius * (2 * radius + 1)."""
    return 4 * radius * (2 * radius + 1)


def edges_of_box(radius: int) -> list[EdgeId]:
    """Edges of B(radius) in canonical order.

    Intended for desk-scale boxes; dense pipelines should use the array
    form from :func:`edge_arrays` instead of materializing EdgeIds.
    """
    out: list[EdgeId] = []
    for y in range(-radius, radius):
        for x in range(-radius, radius):
            out.append(EdgeId((x, y), HORIZONTAL))
            out.append(EdgeId((x, y), VERTICAL))
        out.append(EdgeId((radius, y), VERTICAL))
    for x in range(-radius, radius):
        out.append(EdgeId((x, radius), HORIZONTAL))
    return out


def edge_index(radius: int, edge: EdgeId) -> int:
    """Position of ``edge`` in the canonical order of B(radius)."""
    x, y = edge.base
    r = radius
    if edge.span_radius > r:
        raise ValueError(f"{edge} is not an edge of B({r})")
    row_start = (y + r) * (4 * r + 1)
    if edge.orientation == HORIZONTAL:
        if y == r:
            return row_start + (x + r)
        return row_start + 2 * (x + r)
    if x == r:
        return row_start + 4 * r
    return row_start + 2 * (x + r) + 1


def edge_from_index(radius: int, index: int) -> EdgeId:
    """Inverse of :func:`edge_index`."""
    r = radius
    if not 0 <= index < edge_count(r):
        raise ValueError(f"edge index {index} out of range for B({r})")
    top_start = 2 * r * (4 * r + 1)
    if index >= top_start:
        return EdgeId((index - top_start - r, r), HORIZONTAL)
    y = index // (4 * r + 1) - r
    off = index % (4 * r + 1)
    if off == 4 * r:
        return EdgeId((r, y), VERTICAL)
    return EdgeId((-r + off // 2, y), HORIZONTAL if off % 2 == 0 else VERTICAL)


def annulus_of_edge(e: EdgeId) -> int:
    """The unique k with e in the edge shell of Ann(k)."""
    r = e.span_radius
    if r <= 1:
        return -1
    return (r - 1).bit_length() - 1


def annulus_edges(k: int) -> list[EdgeId]:
    """The edge shell of Ann(k): E(B(2^(k+1))) \\ E(B(2^k)) for k >= 0,
    E(B(1)) for k = -1."""
    if k == -1:
        return edges_of_box(1)
    outer = edges_of_box(2 ** (k + 1))
    return [e for e in outer if e.span_radius > 2**k]


def annulus_edge_count(k: int) -> int:
    if k == -1:
        return edge_count(1)
    return edge_count(2 ** (k + 1)) - edge_count(2**k)


# ---------------------------------------------------------------------------
# Dense array views, used by the samplers and kernels.  Vertex v maps to
# index (v.y + R) * (2R + 1) + (v.x + R); edges map via the canonical order.
# ---------------------------------------------------------------------------


def vertex_index(radius: int, v: Vertex) -> int:
    x, y = v
    if max(abs(x), abs(y)) > radius:
        raise ValueError(f"vertex {v} outside B({radius})")
    return (y + radius) * (2 * radius + 1) + (x + radius)


def vertex_from_index(radius: int, index: int) -> Vertex:
    w = 2 * radius + 1
    return (index % w - radius, index // w - radius)


def edge_arrays(radius: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical-order edge table as arrays (base_x, base_y, orientation).

    Orientation is 0 for H, 1 for V.
    """
    r = radius
    ne = edge_count(r)
    bx = np.empty(ne, dtype=np.int32)
    by = np.empty(ne, dtype=np.int32)
    orient = np.empty(ne, dtype=np.int8)
    row_len = 4 * r + 1
    xs = np.arange(-r, r, dtype=np.int32)
    for row, y in enumerate(range(-r, r)):
        s = row * row_len
        bx[s : s + 4 * r : 2] = xs
        bx[s + 1 : s + 4 * r : 2] = xs
        bx[s + 4 * r] = r
        by[s : s + row_len] = y
        orient[s : s + 4 * r : 2] = 0
        orient[s + 1 : s + 4 * r : 2] = 1
        orient[s + 4 * r] = 1
    s = 2 * r * row_len
    bx[s:] = xs
    by[s:] = r
    orient[s:] = 0
    return bx, by, orient


def edge_indices(
    radius: int,
    base_x: np.ndarray,
    base_y: np.ndarray,
    orientation: np.ndarray,
) -> np.ndarray:
    """Vectorized :func:`edge_index` over parallel edge-table arrays."""
    r = radius
    bx = np.asarray(base_x, dtype=np.int64)
    by = np.asarray(base_y, dtype=np.int64)
    orient = np.asarray(orientation)
    tip_x = bx + (orient == 0)
    tip_y = by + (orient != 0)
    span = np.maximum(
        np.maximum(np.abs(bx), np.abs(by)), np.maximum(np.abs(tip_x), np.abs(tip_y))
    )
    if span.size and int(span.max()) > r:
        raise ValueError(f"edge outside B({r})")
    row_start = (by + r) * (4 * r + 1)
    h_idx = row_start + np.where(by == r, bx + r, 2 * (bx + r))
    v_idx = row_start + np.where(bx == r, 4 * r, 2 * (bx + r) + 1)
    return np.where(orient == 0, h_idx, v_idx)


def edge_index_maps(radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex lookup of incident H/V edge indices.

    Returns (h_map, v_map), each of length (2R+1)^2, where h_map[vi] is
    the canonical index of the H edge based at vertex vi (-1 if none)
    and likewise v_map for the V edge.
    """
    r = radius
    w = 2 * r + 1
    h_map = np.full(w * w, -1, dtype=np.int64)
    v_map = np.full(w * w, -1, dtype=np.int64)
    row_len = 4 * r + 1
    for row in range(2 * r):
        vs = row * w
        es = row * row_len
        h_map[vs : vs + w - 1] = es + 2 * np.arange(2 * r, dtype=np.int64)
        v_map[vs : vs + w - 1] = es + 2 * np.arange(2 * r, dtype=np.int64) + 1
        v_map[vs + w - 1] = es + 4 * r
    vs = 2 * r * w
    es = 2 * r * row_len
    h_map[vs : vs + w - 1] = es + np.arange(2 * r, dtype=np.int64)
    return h_map, v_map
