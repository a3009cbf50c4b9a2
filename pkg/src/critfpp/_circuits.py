"""Innermost/outermost circuit extraction on an abstract square grid.

The machinery works on grid cells (unit faces labeled by their
lower-left corner).  A candidate circuit may use only `usable` grid
edges; a cell flood spreads through any wall that is NOT usable.

Innermost mode floods S from the cells around the hole B(r_in).  If S
escapes past the cells a ring circuit could enclose, no circuit exists.
Otherwise O is flooded from the window border avoiding S, and the
S/O interface is the innermost circuit: every circuit must enclose all
of S (the flood cannot cross circuit edges) and the interface itself is
a circuit, so its interior is minimal.  Pockets (cells enclosed by S
but unreachable from the border) end up inside, as they must.

Outermost mode floods O from the border through non-usable walls; the
boundary of the component of the center cell in the complement is the
outermost circuit enclosing the center.

Both extractions return the circuit as a closed vertex walk in grid
coordinates.  Interfaces between two bond-connected cell regions on Z^2
cannot pinch at a vertex (the two diagonal O cells at a pinch could not
both reach the border), so the walk is always a simple cycle.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import NotReachedError

GridEdge = tuple[tuple[int, int], str]  # (base, "H" | "V") in grid coords


def _pass_arrays(usable_h: np.ndarray, usable_v: np.ndarray, r_out: int):
    """Cell-wall passability over the (2*r_out+2)^2 cell window.

    usable_h[y + r_out, x + r_out] flags the H grid edge based at (x, y)
    for x in [-r_out, r_out-1], y in [-r_out, r_out]; usable_v the V
    edge for x in [-r_out, r_out], y in [-r_out, r_out-1].  Walls whose
    grid edge lies outside these ranges are always passable.
    """
    m = 2 * r_out + 2
    if usable_h.shape != (m - 1, m - 2) or usable_v.shape != (m - 2, m - 1):
        raise ValueError("usable array shapes do not match r_out")
    pass_h = np.ones((m, m - 1), dtype=np.uint8)
    pass_h[1 : m - 1, :] = ~usable_v.astype(bool)
    pass_v = np.ones((m - 1, m), dtype=np.uint8)
    pass_v[:, 1 : m - 1] = ~usable_h.astype(bool)
    return pass_h.reshape(-1), pass_v.reshape(-1)


def _border_cells(m: int) -> np.ndarray:
    idx = np.arange(m * m).reshape(m, m)
    return np.unique(
        np.concatenate([idx[0], idx[-1], idx[:, 0], idx[:, -1]])
    ).astype(np.int64)


def _interface_edges(region_a: np.ndarray, region_b: np.ndarray, r_out: int):
    """Grid edges separating adjacent cells of region_a and region_b."""
    m = 2 * r_out + 2
    a = region_a.reshape(m, m).astype(bool)
    b = region_b.reshape(m, m).astype(bool)
    edges: list[GridEdge] = []
    # vertical walls between cells (c, r) and (c+1, r): V edge at
    # (c - r_out, r - r_out - 1)
    wall = (a[:, :-1] & b[:, 1:]) | (b[:, :-1] & a[:, 1:])
    for r, c in zip(*np.nonzero(wall)):
        edges.append(((int(c) - r_out, int(r) - r_out - 1), "V"))
    # horizontal walls between cells (c, r) and (c, r+1): H edge at
    # (c - r_out - 1, r - r_out)
    wall = (a[:-1, :] & b[1:, :]) | (b[:-1, :] & a[1:, :])
    for r, c in zip(*np.nonzero(wall)):
        edges.append(((int(c) - r_out - 1, int(r) - r_out), "H"))
    return edges


def _walk_cycle(edges: list[GridEdge]) -> list[tuple[int, int]]:
    """Order interface edges into a closed simple vertex walk.

    Starts at the lowest-leftmost vertex (minimal (y, x)) and moves
    first to its smaller neighbor, so the output is canonical.
    """
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for (x, y), orient in edges:
        u = (x, y)
        v = (x + 1, y) if orient == "H" else (x, y + 1)
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for v, nbrs in adj.items():
        if len(nbrs) != 2:
            raise NotReachedError(f"interface vertex {v} has degree {len(nbrs)}")
    start = min(adj, key=lambda v: (v[1], v[0]))
    second = min(adj[start], key=lambda v: (v[1], v[0]))
    walk = [start, second]
    while walk[-1] != start:
        prev, cur = walk[-2], walk[-1]
        a, b = adj[cur]
        walk.append(b if a == prev else a)
    if len(walk) - 1 != len(edges):
        raise NotReachedError("interface is not a single cycle")
    return walk


def winding_number(walk: list[tuple[float, float]], point: tuple[float, float]) -> int:
    """Signed winding of a closed rectilinear walk around a point.

    Counts signed crossings of the rightward horizontal ray.  The point
    must avoid every horizontal and vertical line through a walk vertex
    (offset by one half against integer or half-integer walks).
    """
    px, py = point
    w = 0
    for (x0, y0), (x1, y1) in zip(walk, walk[1:]):
        if x0 != x1 or x0 <= px:
            continue
        if min(y0, y1) < py < max(y0, y1):
            w += 1 if y1 > y0 else -1
    return w


class CircuitSearch:
    """Result of a circuit search: walk, edges, enclosed cell count."""

    def __init__(self, walk, edges, enclosed_cells):
        self.walk = walk
        self.edges = edges
        self.enclosed_cells = enclosed_cells


def innermost(usable_h: np.ndarray, usable_v: np.ndarray, r_in: int, r_out: int):
    """Innermost circuit through usable edges enclosing B(r_in).

    Returns a CircuitSearch, or None when no such circuit exists.
    """
    if not 0 <= r_in < r_out:
        raise ValueError("need 0 <= r_in < r_out")
    m = 2 * r_out + 2
    pass_h, pass_v = _pass_arrays(usable_h, usable_v, r_out)
    idx = np.arange(m * m).reshape(m, m)
    lo, hi = r_out - r_in, r_out + r_in + 2
    seeds = idx[lo:hi, lo:hi].reshape(-1).astype(np.int64)
    s_mask = kernels.flood_cells(m, m, pass_h, pass_v, seeds)
    s2 = s_mask.reshape(m, m)
    if s2[0].any() or s2[-1].any() or s2[:, 0].any() or s2[:, -1].any():
        return None  # the flood escaped: a blocked crossing of the ring exists
    free = np.ones_like(pass_h), np.ones_like(pass_v)
    o_mask = kernels.flood_cells(m, m, free[0], free[1], _border_cells(m), s_mask)
    edges = _interface_edges(s_mask, o_mask, r_out)
    walk = _walk_cycle(edges)
    return CircuitSearch(walk, edges, int(m * m - o_mask.sum()))


def outermost(usable_h: np.ndarray, usable_v: np.ndarray,
              center_cell: tuple[int, int], r_out: int):
    """Outermost circuit through usable edges enclosing `center_cell`."""
    m = 2 * r_out + 2
    pass_h, pass_v = _pass_arrays(usable_h, usable_v, r_out)
    o_mask = kernels.flood_cells(m, m, pass_h, pass_v, _border_cells(m))
    ci = (center_cell[1] + r_out + 1) * m + (center_cell[0] + r_out + 1)
    if o_mask[ci]:
        return None
    free = np.ones_like(pass_h), np.ones_like(pass_v)
    s_mask = kernels.flood_cells(
        m, m, free[0], free[1], np.array([ci], dtype=np.int64), o_mask
    )
    edges = _interface_edges(s_mask, o_mask, r_out)
    walk = _walk_cycle(edges)
    return CircuitSearch(walk, edges, int(s_mask.sum()))
