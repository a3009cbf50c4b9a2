"""Pure-Python kernels: the fallback backend.

These mirror the compiled kernels in `_ckernels.pyx` operation for
operation; the two backends must produce bit-identical outputs.  Grid
vertices are indexed row-major over a (width x width) box, edges by the
canonical order of `lattice`; h_map/v_map give the incident H/V edge of
each base vertex (-1 where absent).
"""

from __future__ import annotations

import heapq

import numpy as np

BACKEND = "python"

_INF = float("inf")


def dijkstra_grid(width, h_map, v_map, w, sources, is_target, allowed=None):
    """Multi-source shortest paths; stops at the first settled target.

    Ties are deterministic: the heap orders by (distance, vertex) and an
    equal-distance relaxation keeps the smallest predecessor vertex.
    Returns (dist, pred_vertex, pred_edge, hit); hit is -1 when no
    target was reached (or none was given, which computes all of dist).
    """
    n = width * width
    dist = np.full(n, _INF)
    pred_vertex = np.full(n, -1, dtype=np.int64)
    pred_edge = np.full(n, -1, dtype=np.int64)
    settled = np.zeros(n, dtype=np.uint8)
    heap = []
    for s in sources:
        s = int(s)
        dist[s] = 0.0
        heapq.heappush(heap, (0.0, s))
    hit = -1
    while heap:
        d, u = heapq.heappop(heap)
        if settled[u]:
            continue
        settled[u] = 1
        if is_target[u]:
            hit = u
            break
        c = u % width
        r = u // width
        # (edge index, neighbor) for right, left, up, down
        e = h_map[u]
        if e >= 0:
            _relax(u, u + 1, e, d, w, dist, pred_vertex, pred_edge, settled, heap, allowed)
        if c > 0:
            e = h_map[u - 1]
            if e >= 0:
                _relax(u, u - 1, e, d, w, dist, pred_vertex, pred_edge, settled, heap, allowed)
        e = v_map[u]
        if e >= 0:
            _relax(u, u + width, e, d, w, dist, pred_vertex, pred_edge, settled, heap, allowed)
        if r > 0:
            e = v_map[u - width]
            if e >= 0:
                _relax(u, u - width, e, d, w, dist, pred_vertex, pred_edge, settled, heap, allowed)
    return dist, pred_vertex, pred_edge, hit


def _relax(u, v, e, d, w, dist, pred_vertex, pred_edge, settled, heap, allowed):
    if allowed is not None and not allowed[e]:
        return
    nd = d + float(w[e])
    if nd < dist[v]:
        dist[v] = nd
        pred_vertex[v] = u
        pred_edge[v] = e
        heapq.heappush(heap, (nd, v))
    elif nd == dist[v] and not settled[v] and u < pred_vertex[v]:
        pred_vertex[v] = u
        pred_edge[v] = e


def invade_grid(
    width,
    h_map,
    v_map,
    edge_u,
    edge_v,
    omega,
    start,
    stop_radius,
    drain_p,
    clip_radius,
    max_steps,
):
    """Greedy invasion from `start`: repeatedly add the boundary edge of
    least label.  The boundary contains every non-invaded edge incident
    to an invaded vertex, including those between two invaded vertices.

    Vertices at sup-norm distance >= `clip_radius` from the grid center
    are never invaded; an edge leading to one is silently dropped when
    popped, and the index of the first such drop is reported (so steps
    before it form a prefix of the unclipped process).  Stops once the
    cluster reaches `stop_radius` and the minimum over the surviving
    boundary exceeds `drain_p` (use drain_p < 0 to stop at the radius
    outright), or after `max_steps` invasions.  Returns
    (steps, reached, first_clip) with first_clip = -1 when nothing was
    clipped.
    """
    center = width // 2
    vertex_in = np.zeros(width * width, dtype=np.uint8)
    edge_in = np.zeros(len(omega), dtype=np.uint8)
    heap = []
    steps = []
    reached = False
    first_clip = -1

    def add_vertex(v):
        vertex_in[v] = 1
        c = v % width
        r = v // width
        e = h_map[v]
        if e >= 0 and not edge_in[e]:
            heapq.heappush(heap, (float(omega[e]), int(e)))
        if c > 0:
            e = h_map[v - 1]
            if e >= 0 and not edge_in[e]:
                heapq.heappush(heap, (float(omega[e]), int(e)))
        e = v_map[v]
        if e >= 0 and not edge_in[e]:
            heapq.heappush(heap, (float(omega[e]), int(e)))
        if r > 0:
            e = v_map[v - width]
            if e >= 0 and not edge_in[e]:
                heapq.heappush(heap, (float(omega[e]), int(e)))
        return max(abs(c - center), abs(r - center))

    add_vertex(int(start))
    while heap and len(steps) < max_steps:
        om, e = heapq.heappop(heap)
        if edge_in[e]:
            continue
        clip = False
        for v in (int(edge_u[e]), int(edge_v[e])):
            if not vertex_in[v]:
                rad = max(abs(v % width - center), abs(v // width - center))
                if rad >= clip_radius:
                    clip = True
        if clip:
            if first_clip < 0:
                first_clip = len(steps)
            continue
        if reached and om > drain_p:
            break
        edge_in[e] = 1
        steps.append(e)
        for v in (int(edge_u[e]), int(edge_v[e])):
            if not vertex_in[v]:
                if add_vertex(v) >= stop_radius:
                    reached = True
    return np.array(steps, dtype=np.int64), reached, first_clip


def crossing_connected(w_cols, h_rows, h_open, v_open, direction):
    """Union-find connectivity across a grid of w_cols x h_rows vertices.

    h_open[r * (w_cols - 1) + c] opens edge (c, r)-(c+1, r); v_open
    [r * w_cols + c] opens (c, r)-(c, r+1).  direction 0 asks whether
    column 0 meets column w_cols-1, direction 1 whether row 0 meets row
    h_rows-1.
    """
    n = w_cols * h_rows
    parent = np.arange(n + 2, dtype=np.int64)
    left, right = n, n + 1

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for r in range(h_rows):
        base = r * (w_cols - 1)
        vbase = r * w_cols
        for c in range(w_cols - 1):
            if h_open[base + c]:
                union(vbase + c, vbase + c + 1)
        if r < h_rows - 1:
            for c in range(w_cols):
                if v_open[vbase + c]:
                    union(vbase + c, vbase + c + w_cols)
    if direction == 0:
        for r in range(h_rows):
            union(left, r * w_cols)
            union(right, r * w_cols + w_cols - 1)
    else:
        for c in range(w_cols):
            union(left, c)
            union(right, (h_rows - 1) * w_cols + c)
    return find(left) == find(right)


def flood_cells(w_cols, h_rows, pass_h, pass_v, seeds, blocked=None):
    """Flood-fill over a grid of cells through passable shared walls.

    pass_h[r * (w_cols - 1) + c] lets (c, r) <-> (c+1, r); pass_v
    [r * w_cols + c] lets (c, r) <-> (c, r+1).  Blocked cells are never
    entered (seeds inside blocked cells are ignored).  Returns the
    visited mask.
    """
    visited = np.zeros(w_cols * h_rows, dtype=np.uint8)
    stack = []
    for s in seeds:
        s = int(s)
        if not visited[s] and (blocked is None or not blocked[s]):
            visited[s] = 1
            stack.append(s)
    while stack:
        u = stack.pop()
        c = u % w_cols
        r = u // w_cols
        if c + 1 < w_cols and pass_h[r * (w_cols - 1) + c]:
            _enter(u + 1, visited, blocked, stack)
        if c > 0 and pass_h[r * (w_cols - 1) + c - 1]:
            _enter(u - 1, visited, blocked, stack)
        if r + 1 < h_rows and pass_v[r * w_cols + c]:
            _enter(u + w_cols, visited, blocked, stack)
        if r > 0 and pass_v[(r - 1) * w_cols + c]:
            _enter(u - w_cols, visited, blocked, stack)
    return visited


def _enter(v, visited, blocked, stack):
    if not visited[v] and (blocked is None or not blocked[v]):
        visited[v] = 1
        stack.append(v)
