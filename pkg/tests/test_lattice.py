"""Box/annulus geometry, canonical edge order, dense index maps."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critfpp import lattice
from critfpp.lattice import (
    HORIZONTAL,
    VERTICAL,
    AnnulusSpec,
    BoxSpec,
    EdgeId,
)

coords = st.integers(-9, 9)
radii = st.integers(1, 6)


def random_edge(draw_x, draw_y, orient):
    return EdgeId((draw_x, draw_y), orient)


class TestEdgeBasics:
    def test_endpoints(self):
        assert EdgeId((2, -1), HORIZONTAL).endpoints == ((2, -1), (3, -1))
        assert EdgeId((2, -1), VERTICAL).endpoints == ((2, -1), (2, 0))

    def test_span_radius(self):
        assert EdgeId((0, 0), HORIZONTAL).span_radius == 1
        assert EdgeId((-3, 2), VERTICAL).span_radius == 3

    def test_edge_between_round_trip(self):
        e = EdgeId((1, 2), VERTICAL)
        u, v = e.endpoints
        assert lattice.edge_between(u, v) == e
        assert lattice.edge_between(v, u) == e

    def test_edge_between_rejects_distant(self):
        with pytest.raises(ValueError):
            lattice.edge_between((0, 0), (1, 1))

    def test_incident_edges_touch_vertex(self):
        v = (3, -2)
        for e in lattice.incident_edges(v):
            assert v in e.endpoints

    def test_dual_round_trip(self):
        e = EdgeId((1, -1), HORIZONTAL)
        assert lattice.primal_of(lattice.dual_of(e)) == e

    def test_dual_faces_flank_edge(self):
        # horizontal edge: faces above and below; vertical: right and left
        assert lattice.dual_faces(EdgeId((2, 3), HORIZONTAL)) == ((2, 3), (2, 2))
        assert lattice.dual_faces(EdgeId((2, 3), VERTICAL)) == ((2, 3), (1, 3))

    def test_dual_endpoints_cross_primal(self):
        e = EdgeId((0, 0), HORIZONTAL)
        (ax, ay), (bx, by) = lattice.dual_of(e).endpoints
        # the dual segment is vertical through the primal midpoint
        assert ax == bx == 0.5
        assert {ay, by} == {0.5, -0.5}


class TestBoxes:
    @given(radii)
    @settings(max_examples=20, deadline=None)
    def test_vertex_count(self, r):
        assert len(lattice.vertices_of_box(r)) == BoxSpec(r).vertex_count

    @given(radii)
    @settings(max_examples=20, deadline=None)
    def test_boundary_is_exact_ring(self, r):
        ring = lattice.boundary_of_box(r)
        assert len(ring) == len(set(ring)) == 8 * r
        assert all(max(abs(x), abs(y)) == r for x, y in ring)

    def test_boundary_radius_zero(self):
        assert lattice.boundary_of_box(0) == [(0, 0)]

    @given(radii)
    @settings(max_examples=20, deadline=None)
    def test_edges_of_box_canonical(self, r):
        edges = lattice.edges_of_box(r)
        assert len(edges) == lattice.edge_count(r)
        assert len(set(edges)) == len(edges)
        assert all(e.span_radius <= r for e in edges)
        # every interior edge of the box appears
        count = sum(
            1
            for v in lattice.vertices_of_box(r)
            for e in lattice.incident_edges(v)
            if e.span_radius <= r
        )
        assert count == 2 * len(edges)

    def test_box_rejects_negative_radius(self):
        with pytest.raises(ValueError):
            BoxSpec(-1)


class TestCanonicalIndex:
    @given(radii)
    @settings(max_examples=10, deadline=None)
    def test_index_round_trip(self, r):
        for i, e in enumerate(lattice.edges_of_box(r)):
            assert lattice.edge_index(r, e) == i
            assert lattice.edge_from_index(r, i) == e

    def test_index_rejects_outside(self):
        with pytest.raises(ValueError):
            lattice.edge_index(2, EdgeId((2, 0), HORIZONTAL))
        with pytest.raises(ValueError):
            lattice.edge_from_index(2, lattice.edge_count(2))

    @given(radii)
    @settings(max_examples=10, deadline=None)
    def test_edge_arrays_match_edge_list(self, r):
        bx, by, orient = lattice.edge_arrays(r)
        edges = lattice.edges_of_box(r)
        for i, e in enumerate(edges):
            assert (bx[i], by[i]) == e.base
            assert orient[i] == (0 if e.orientation == HORIZONTAL else 1)

    @given(radii)
    @settings(max_examples=10, deadline=None)
    def test_edge_indices_vectorized(self, r):
        bx, by, orient = lattice.edge_arrays(r)
        idx = lattice.edge_indices(r, bx, by, orient)
        assert np.array_equal(idx, np.arange(lattice.edge_count(r)))

    @given(radii)
    @settings(max_examples=10, deadline=None)
    def test_vertex_index_round_trip(self, r):
        for v in lattice.vertices_of_box(r):
            assert lattice.vertex_from_index(r, lattice.vertex_index(r, v)) == v

    @given(radii)
    @settings(max_examples=10, deadline=None)
    def test_edge_index_maps(self, r):
        h_map, v_map = lattice.edge_index_maps(r)
        for v in lattice.vertices_of_box(r):
            vi = lattice.vertex_index(r, v)
            h = EdgeId(v, HORIZONTAL)
            expected_h = lattice.edge_index(r, h) if h.span_radius <= r else -1
            assert h_map[vi] == expected_h
            w = EdgeId(v, VERTICAL)
            expected_v = lattice.edge_index(r, w) if w.span_radius <= r else -1
            assert v_map[vi] == expected_v


class TestAnnuli:
    def test_annulus_of_edge_partition(self):
        # each edge of a big box belongs to exactly one annulus shell
        for e in lattice.edges_of_box(8):
            k = lattice.annulus_of_edge(e)
            assert AnnulusSpec(k).contains_edge(e)

    @pytest.mark.parametrize("k", [-1, 0, 1, 2])
    def test_annulus_edges_match_count(self, k):
        shell = lattice.annulus_edges(k)
        assert len(shell) == lattice.annulus_edge_count(k)
        assert all(lattice.annulus_of_edge(e) == k for e in shell)

    def test_shells_tile_the_box(self):
        box = set(lattice.edges_of_box(8))
        tiled = set()
        for k in (-1, 0, 1, 2):
            shell = set(lattice.annulus_edges(k))
            assert not (tiled & shell)
            tiled |= shell
        assert tiled == box

    def test_vertex_shell_bounds(self):
        spec = AnnulusSpec(1)
        assert spec.contains_vertex((3, 0))
        assert spec.contains_vertex((4, 4))
        assert not spec.contains_vertex((2, 0))
        assert not spec.contains_vertex((5, 0))

    def test_rejects_bad_index(self):
        with pytest.raises(ValueError):
            AnnulusSpec(-2)
