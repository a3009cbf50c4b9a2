"""Four-arm edges: open arms sideways, closed dual arms across.

An edge e with base vertex e_x is a four-arm edge at radius m1 and
level p when
  (a) the two endpoints of e send two vertex-disjoint p-open paths to
      the boundary of the sup-norm ball B(e_x, m1),
  (b) the two faces flanking e send two vertex-disjoint dual paths,
      each step crossing a primal edge with label > 1/2, to the border
      of the ball's cell grid, and
  (c) 1/2 < ω_e <= p.
Disjointness is exact: unit-capacity max-flow on the vertex-split grid
graph, two units iff two vertex-disjoint arms exist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, maximum_flow

from . import lattice
from .errors import BoxTooSmallError, OutOfBoxError
from .field import WeightField, omega_grids
from .lattice import HORIZONTAL, EdgeId
from .weights import P_C


@dataclass(frozen=True)
class ArmCount:
    """Four-arm edge count over the edges of E(B(2·m2)) \\ E(B(m2))."""

    m1: int
    m2: int
    p: float
    count: int
    contributing_edges: tuple[EdgeId, ...]


def _grid_two_arms(usable_h, usable_v, s1: int, s2: int) -> bool:
    """Two vertex-disjoint paths from nodes s1, s2 to the grid border.

    Nodes form an n_rows x n_cols grid (id = row * n_cols + col) with
    unit vertex capacities; usable_h[r, c] admits the step (c, r) ->
    (c+1, r) and usable_v[r, c] the step (c, r) -> (c, r+1).
    """
    n_rows, hc = usable_h.shape
    n_cols = hc + 1
    n = n_rows * n_cols
    ids = np.arange(n, dtype=np.int64).reshape(n_rows, n_cols)
    hu = ids[:, :-1][usable_h]
    vu = ids[:-1, :][usable_v]
    u = np.concatenate([hu, vu])
    v = np.concatenate([hu + 1, vu + n_cols])
    border = np.zeros((n_rows, n_cols), dtype=bool)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    t_nodes = np.flatnonzero(border.ravel())
    src, sink = 2 * n, 2 * n + 1
    all_in = 2 * np.arange(n, dtype=np.int64)
    rows = np.concatenate(
        [all_in, 2 * u + 1, 2 * v + 1, [src, src], 2 * t_nodes + 1]
    )
    cols = np.concatenate(
        [all_in + 1, 2 * v, 2 * u, [2 * s1, 2 * s2], np.full(t_nodes.size, sink)]
    )
    graph = csr_matrix(
        (np.ones(rows.size, dtype=np.int32), (rows, cols)),
        shape=(2 * n + 2, 2 * n + 2),
    )
    return maximum_flow(graph, src, sink).flow_value >= 2


def _open_arms(om_h, om_v, radius, cx, cy, horizontal, m1, p) -> bool:
    """Condition (a): disjoint p-open arms from both endpoints."""
    w = 2 * m1 + 1
    r = radius
    uh = om_h[r + cy - m1 : r + cy + m1 + 1, r + cx - m1 : r + cx + m1] <= p
    uv = om_v[r + cy - m1 : r + cy + m1, r + cx - m1 : r + cx + m1 + 1] <= p
    if horizontal:
        uh = uh.copy()
        uh[m1, m1] = False
        s2 = m1 * w + m1 + 1
    else:
        uv = uv.copy()
        uv[m1, m1] = False
        s2 = (m1 + 1) * w + m1
    return _grid_two_arms(uh, uv, m1 * w + m1, s2)


def _dual_arms(om_h, om_v, radius, cx, cy, horizontal, m1) -> bool:
    """Condition (b): disjoint half-closed dual arms from both faces.

    Dual nodes are the cells of the ball box; a step between adjacent
    cells is usable when the primal edge it crosses has label > 1/2.
    """
    wd = 2 * m1
    r = radius
    uh = (om_v[r + cy - m1 : r + cy + m1, r + cx - m1 + 1 : r + cx + m1] > P_C).copy()
    uv = (om_h[r + cy - m1 + 1 : r + cy + m1, r + cx - m1 : r + cx + m1] > P_C).copy()
    if horizontal:
        uv[m1 - 1, m1] = False
        s1 = (m1 - 1) * wd + m1
    else:
        uh[m1, m1 - 1] = False
        s1 = m1 * wd + m1 - 1
    return _grid_two_arms(uh, uv, s1, m1 * wd + m1)


def four_arm_event(
    f: WeightField,
    e: EdgeId,
    m1: int,
    p: float,
    _grids=None,
) -> bool:
    """Whether e is a four-arm edge at radius m1 and level p."""
    if m1 < 1:
        raise ValueError("m1 must be >= 1")
    if not P_C < p <= 1.0:
        raise ValueError("need 1/2 < p <= 1")
    (cx, cy) = e.base
    if max(abs(cx), abs(cy)) + m1 > f.radius:
        raise OutOfBoxError(f"B(({cx},{cy}), {m1}) exceeds the sampled box")
    om = f.omega_of(e)
    if not P_C < om <= p:
        return False
    om_h, om_v = _grids if _grids is not None else omega_grids(f)
    horizontal = e.orientation == HORIZONTAL
    if not _dual_arms(om_h, om_v, f.radius, cx, cy, horizontal, m1):
        return False
    return _open_arms(om_h, om_v, f.radius, cx, cy, horizontal, m1, p)


def _closed_cluster_boxes(om_h, om_v, radius, half_width):
    """Bounding boxes of half-closed dual clusters near the origin.

    Works on the cells with coordinates in [-half_width, half_width-1];
    returns (labels grid, min_x, max_x, min_y, max_y) with coordinates
    in cell units.  A dual arm confined to some cell box is a path of
    one cluster, so a cluster whose bounding box stays strictly inside
    that cell box rules the arm out.
    """
    b = half_width
    r = radius
    side = 2 * b
    step_h = om_v[r - b : r + b, r - b + 1 : r + b] > P_C
    step_v = om_h[r - b + 1 : r + b, r - b : r + b] > P_C
    ids = np.arange(side * side, dtype=np.int64).reshape(side, side)
    hu = ids[:, :-1][step_h]
    vu = ids[:-1, :][step_v]
    rows = np.concatenate([hu, vu])
    cols = np.concatenate([hu + 1, vu + side])
    graph = csr_matrix(
        (np.ones(rows.size, dtype=np.int8), (rows, cols)),
        shape=(side * side, side * side),
    )
    n_comp, labels = connected_components(graph, directed=False)
    cell_x = np.tile(np.arange(side, dtype=np.int64) - b, side)
    cell_y = np.repeat(np.arange(side, dtype=np.int64) - b, side)
    min_x = np.full(n_comp, side, dtype=np.int64)
    max_x = np.full(n_comp, -side, dtype=np.int64)
    min_y = np.full(n_comp, side, dtype=np.int64)
    max_y = np.full(n_comp, -side, dtype=np.int64)
    np.minimum.at(min_x, labels, cell_x)
    np.maximum.at(max_x, labels, cell_x)
    np.minimum.at(min_y, labels, cell_y)
    np.maximum.at(max_y, labels, cell_y)
    return labels.reshape(side, side), min_x, max_x, min_y, max_y


def count_four_arm(f: WeightField, m1: int, m2: int, p: float) -> ArmCount:
    """Exact four-arm edge count over E(B(2·m2)) \\ E(B(m2))."""
    if m1 < 1 or m2 < 1:
        raise ValueError("m1 and m2 must be >= 1")
    if not P_C < p <= 1.0:
        raise ValueError("need 1/2 < p <= 1")
    reach = 2 * m2 + m1
    if reach > f.radius:
        raise BoxTooSmallError(
            f"counting at (m1={m1}, m2={m2}) needs box radius >= {reach}"
        )
    r = f.radius
    bx, by, orient = lattice.edge_arrays(r)
    tip_x = bx.astype(np.int64) + (orient == 0)
    tip_y = by.astype(np.int64) + (orient != 0)
    span = np.maximum(
        np.maximum(np.abs(bx.astype(np.int64)), np.abs(by.astype(np.int64))),
        np.maximum(np.abs(tip_x), np.abs(tip_y)),
    )
    gate = (span > m2) & (span <= 2 * m2) & (f.omega > P_C) & (f.omega <= p)
    idx = np.flatnonzero(gate)
    contributing: list[EdgeId] = []
    if idx.size:
        om_h, om_v = omega_grids(f)
        labels, min_x, max_x, min_y, max_y = _closed_cluster_boxes(
            om_h, om_v, r, reach
        )
        b = reach
        for i in idx:
            cx, cy = int(bx[i]), int(by[i])
            horizontal = orient[i] == 0
            if horizontal:
                faces = ((cx, cy - 1), (cx, cy))
            else:
                faces = ((cx - 1, cy), (cx, cy))
            reachable = True
            for lx, ly in faces:
                comp = labels[ly + b, lx + b]
                if (
                    min_x[comp] > cx - m1
                    and max_x[comp] < cx + m1 - 1
                    and min_y[comp] > cy - m1
                    and max_y[comp] < cy + m1 - 1
                ):
                    reachable = False
                    break
            if not reachable:
                continue
            if not _dual_arms(om_h, om_v, r, cx, cy, horizontal, m1):
                continue
            if not _open_arms(om_h, om_v, r, cx, cy, horizontal, m1, p):
                continue
            contributing.append(lattice.edge_from_index(r, int(i)))
    return ArmCount(
        m1=m1,
        m2=m2,
        p=float(p),
        count=len(contributing),
        contributing_edges=tuple(contributing),
    )
