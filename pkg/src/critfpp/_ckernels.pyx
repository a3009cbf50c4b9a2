# cython: language_level=3
"""Compiled kernels; see `_pykernels` for the reference semantics.

Both backends must produce bit-identical outputs: same heap order
(distance, then vertex), same tie-breaking, same float operation order.
"""

import numpy as np

cimport numpy as cnp

ctypedef cnp.int64_t i64
ctypedef cnp.uint8_t u8

BACKEND = "c"

cdef double INF = float("inf")


cdef inline Py_ssize_t heap_push(double[::1] hk, i64[::1] hv, Py_ssize_t n,
                                 double k, i64 v) nogil:
    cdef Py_ssize_t i = n
    cdef Py_ssize_t p
    cdef double tk
    cdef i64 tv
    hk[i] = k
    hv[i] = v
    while i > 0:
        p = (i - 1) >> 1
        if hk[p] > hk[i] or (hk[p] == hk[i] and hv[p] > hv[i]):
            tk = hk[p]; hk[p] = hk[i]; hk[i] = tk
            tv = hv[p]; hv[p] = hv[i]; hv[i] = tv
            i = p
        else:
            break
    return n + 1


cdef inline Py_ssize_t heap_pop(double[::1] hk, i64[::1] hv, Py_ssize_t n) nogil:
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t l, r, m
    cdef double tk
    cdef i64 tv
    n -= 1
    hk[0] = hk[n]
    hv[0] = hv[n]
    while True:
        l = 2 * i + 1
        r = l + 1
        m = i
        if l < n and (hk[l] < hk[m] or (hk[l] == hk[m] and hv[l] < hv[m])):
            m = l
        if r < n and (hk[r] < hk[m] or (hk[r] == hk[m] and hv[r] < hv[m])):
            m = r
        if m == i:
            break
        tk = hk[m]; hk[m] = hk[i]; hk[i] = tk
        tv = hv[m]; hv[m] = hv[i]; hv[i] = tv
        i = m
    return n


cdef inline void _relax(i64 u, i64 v, i64 e, double d,
                        double[::1] w, double[::1] dist,
                        i64[::1] pred_vertex, i64[::1] pred_edge,
                        u8[::1] settled, u8[::1] allowed, bint has_allowed,
                        double[::1] hk, i64[::1] hv, Py_ssize_t* hn) nogil:
    cdef double nd
    if has_allowed and not allowed[e]:
        return
    nd = d + w[e]
    if nd < dist[v]:
        dist[v] = nd
        pred_vertex[v] = u
        pred_edge[v] = e
        hn[0] = heap_push(hk, hv, hn[0], nd, v)
    elif nd == dist[v] and not settled[v] and u < pred_vertex[v]:
        pred_vertex[v] = u
        pred_edge[v] = e


def dijkstra_grid(Py_ssize_t width, i64[::1] h_map, i64[::1] v_map,
                  double[::1] w, i64[::1] sources, u8[::1] is_target,
                  allowed_obj=None):
    cdef Py_ssize_t n = width * width
    cdef Py_ssize_t ne = w.shape[0]
    dist_arr = np.full(n, INF)
    pv_arr = np.full(n, -1, dtype=np.int64)
    pe_arr = np.full(n, -1, dtype=np.int64)
    settled_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] dist = dist_arr
    cdef i64[::1] pred_vertex = pv_arr
    cdef i64[::1] pred_edge = pe_arr
    cdef u8[::1] settled = settled_arr
    cdef bint has_allowed = allowed_obj is not None
    cdef u8[::1] allowed
    if has_allowed:
        allowed = allowed_obj
    else:
        allowed = settled_arr  # unused; placeholder to satisfy typing
    cdef Py_ssize_t cap = 2 * ne + sources.shape[0] + 8
    hk_arr = np.empty(cap)
    hv_arr = np.empty(cap, dtype=np.int64)
    cdef double[::1] hk = hk_arr
    cdef i64[::1] hv = hv_arr
    cdef Py_ssize_t hn = 0
    cdef Py_ssize_t i
    cdef i64 u, e, hit = -1
    cdef i64 c, r
    cdef double d
    for i in range(sources.shape[0]):
        u = sources[i]
        dist[u] = 0.0
        hn = heap_push(hk, hv, hn, 0.0, u)
    with nogil:
        while hn > 0:
            d = hk[0]
            u = hv[0]
            hn = heap_pop(hk, hv, hn)
            if settled[u]:
                continue
            settled[u] = 1
            if is_target[u]:
                hit = u
                break
            c = u % width
            r = u // width
            e = h_map[u]
            if e >= 0:
                _relax(u, u + 1, e, d, w, dist, pred_vertex, pred_edge,
                       settled, allowed, has_allowed, hk, hv, &hn)
            if c > 0:
                e = h_map[u - 1]
                if e >= 0:
                    _relax(u, u - 1, e, d, w, dist, pred_vertex, pred_edge,
                           settled, allowed, has_allowed, hk, hv, &hn)
            e = v_map[u]
            if e >= 0:
                _relax(u, u + width, e, d, w, dist, pred_vertex, pred_edge,
                       settled, allowed, has_allowed, hk, hv, &hn)
            if r > 0:
                e = v_map[u - width]
                if e >= 0:
                    _relax(u, u - width, e, d, w, dist, pred_vertex, pred_edge,
                           settled, allowed, has_allowed, hk, hv, &hn)
    return dist_arr, pv_arr, pe_arr, int(hit)


def invade_grid(Py_ssize_t width, i64[::1] h_map, i64[::1] v_map,
                i64[::1] edge_u, i64[::1] edge_v, double[::1] omega,
                i64 start, i64 stop_radius, double drain_p,
                i64 clip_radius, i64 max_steps):
    cdef Py_ssize_t nv = width * width
    cdef Py_ssize_t ne = omega.shape[0]
    vertex_in_arr = np.zeros(nv, dtype=np.uint8)
    edge_in_arr = np.zeros(ne, dtype=np.uint8)
    steps_arr = np.empty(min(max_steps, 2 * ne + 8), dtype=np.int64)
    cdef u8[::1] vertex_in = vertex_in_arr
    cdef u8[::1] edge_in = edge_in_arr
    cdef i64[::1] steps = steps_arr
    cdef Py_ssize_t cap = 2 * ne + 8
    hk_arr = np.empty(cap)
    hv_arr = np.empty(cap, dtype=np.int64)
    cdef double[::1] hk = hk_arr
    cdef i64[::1] hv = hv_arr
    cdef Py_ssize_t hn = 0
    cdef Py_ssize_t nsteps = 0
    cdef i64 center = width // 2
    cdef bint reached = False, clip
    cdef i64 first_clip = -1
    cdef i64 u, v, e, k, rad
    cdef double om

    with nogil:
        hn = _invade_add_vertex(start, width, center, h_map, v_map, edge_in,
                                vertex_in, omega, hk, hv, hn)
        while hn > 0 and nsteps < max_steps:
            om = hk[0]
            e = hv[0]
            hn = heap_pop(hk, hv, hn)
            if edge_in[e]:
                continue
            clip = False
            for k in range(2):
                v = edge_u[e] if k == 0 else edge_v[e]
                if not vertex_in[v] and _cheb(v, width, center) >= clip_radius:
                    clip = True
            if clip:
                if first_clip < 0:
                    first_clip = nsteps
                continue
            if reached and om > drain_p:
                break
            edge_in[e] = 1
            steps[nsteps] = e
            nsteps += 1
            for k in range(2):
                v = edge_u[e] if k == 0 else edge_v[e]
                if not vertex_in[v]:
                    hn = _invade_add_vertex(v, width, center, h_map, v_map,
                                            edge_in, vertex_in, omega, hk, hv, hn)
                    if _cheb(v, width, center) >= stop_radius:
                        reached = True
    return steps_arr[:nsteps].copy(), bool(reached), int(first_clip)


cdef inline i64 _cheb(i64 v, Py_ssize_t width, i64 center) nogil:
    cdef i64 c = v % width
    cdef i64 r = v // width
    cdef i64 dc = c - center if c >= center else center - c
    cdef i64 dr = r - center if r >= center else center - r
    return dc if dc >= dr else dr


cdef Py_ssize_t _invade_add_vertex(i64 v, Py_ssize_t width, i64 center,
                                   i64[::1] h_map, i64[::1] v_map,
                                   u8[::1] edge_in, u8[::1] vertex_in,
                                   double[::1] omega,
                                   double[::1] hk, i64[::1] hv,
                                   Py_ssize_t hn) nogil:
    cdef i64 c = v % width
    cdef i64 r = v // width
    cdef i64 e
    vertex_in[v] = 1
    e = h_map[v]
    if e >= 0 and not edge_in[e]:
        hn = heap_push(hk, hv, hn, omega[e], e)
    if c > 0:
        e = h_map[v - 1]
        if e >= 0 and not edge_in[e]:
            hn = heap_push(hk, hv, hn, omega[e], e)
    e = v_map[v]
    if e >= 0 and not edge_in[e]:
        hn = heap_push(hk, hv, hn, omega[e], e)
    if r > 0:
        e = v_map[v - width]
        if e >= 0 and not edge_in[e]:
            hn = heap_push(hk, hv, hn, omega[e], e)
    return hn


cdef inline i64 _uf_find(i64[::1] parent, i64 a) nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def crossing_connected(Py_ssize_t w_cols, Py_ssize_t h_rows,
                       u8[::1] h_open, u8[::1] v_open, int direction):
    cdef Py_ssize_t n = w_cols * h_rows
    parent_arr = np.arange(n + 2, dtype=np.int64)
    cdef i64[::1] parent = parent_arr
    cdef i64 left = n, right = n + 1
    cdef Py_ssize_t r, c, base, vbase
    cdef i64 ra, rb
    cdef bint out
    with nogil:
        for r in range(h_rows):
            base = r * (w_cols - 1)
            vbase = r * w_cols
            for c in range(w_cols - 1):
                if h_open[base + c]:
                    ra = _uf_find(parent, vbase + c)
                    rb = _uf_find(parent, vbase + c + 1)
                    if ra != rb:
                        parent[ra] = rb
            if r < h_rows - 1:
                for c in range(w_cols):
                    if v_open[vbase + c]:
                        ra = _uf_find(parent, vbase + c)
                        rb = _uf_find(parent, vbase + c + w_cols)
                        if ra != rb:
                            parent[ra] = rb
        if direction == 0:
            for r in range(h_rows):
                ra = _uf_find(parent, left)
                rb = _uf_find(parent, r * w_cols)
                if ra != rb:
                    parent[ra] = rb
                ra = _uf_find(parent, right)
                rb = _uf_find(parent, r * w_cols + w_cols - 1)
                if ra != rb:
                    parent[ra] = rb
        else:
            for c in range(w_cols):
                ra = _uf_find(parent, left)
                rb = _uf_find(parent, c)
                if ra != rb:
                    parent[ra] = rb
                ra = _uf_find(parent, right)
                rb = _uf_find(parent, (h_rows - 1) * w_cols + c)
                if ra != rb:
                    parent[ra] = rb
        out = _uf_find(parent, left) == _uf_find(parent, right)
    return bool(out)


def flood_cells(Py_ssize_t w_cols, Py_ssize_t h_rows,
                u8[::1] pass_h, u8[::1] pass_v, i64[::1] seeds,
                blocked_obj=None):
    cdef Py_ssize_t n = w_cols * h_rows
    visited_arr = np.zeros(n, dtype=np.uint8)
    stack_arr = np.empty(n, dtype=np.int64)
    cdef u8[::1] visited = visited_arr
    cdef i64[::1] stack = stack_arr
    cdef bint has_blocked = blocked_obj is not None
    cdef u8[::1] blocked
    if has_blocked:
        blocked = blocked_obj
    else:
        blocked = visited_arr  # placeholder, guarded by has_blocked
    cdef Py_ssize_t sp = 0
    cdef Py_ssize_t i
    cdef i64 u, c, r, v
    with nogil:
        for i in range(seeds.shape[0]):
            u = seeds[i]
            if not visited[u] and not (has_blocked and blocked[u]):
                visited[u] = 1
                stack[sp] = u
                sp += 1
        while sp > 0:
            sp -= 1
            u = stack[sp]
            c = u % w_cols
            r = u // w_cols
            if c + 1 < w_cols and pass_h[r * (w_cols - 1) + c]:
                v = u + 1
                if not visited[v] and not (has_blocked and blocked[v]):
                    visited[v] = 1
                    stack[sp] = v
                    sp += 1
            if c > 0 and pass_h[r * (w_cols - 1) + c - 1]:
                v = u - 1
                if not visited[v] and not (has_blocked and blocked[v]):
                    visited[v] = 1
                    stack[sp] = v
                    sp += 1
            if r + 1 < h_rows and pass_v[r * w_cols + c]:
                v = u + w_cols
                if not visited[v] and not (has_blocked and blocked[v]):
                    visited[v] = 1
                    stack[sp] = v
                    sp += 1
            if r > 0 and pass_v[(r - 1) * w_cols + c]:
                v = u - w_cols
                if not visited[v] and not (has_blocked and blocked[v]):
                    visited[v] = 1
                    stack[sp] = v
                    sp += 1
    return visited_arr
