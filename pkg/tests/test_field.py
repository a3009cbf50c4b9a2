"""Label sampling: determinism, restriction, serialization, seed mixing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critfpp import field, lattice, weights
from critfpp.errors import MemoryGuardError, OutOfBoxError
from critfpp.field import mix64, mix_seed
from critfpp.lattice import HORIZONTAL, VERTICAL, EdgeId

seeds = st.integers(0, 2**64 - 1)


class TestMixing:
    @given(seeds)
    @settings(max_examples=100, deadline=None)
    def test_mix64_stays_in_range(self, x):
        assert 0 <= mix64(x) < 2**64

    def test_mix64_separates_neighbors(self):
        outs = {mix64(x) for x in range(1000)}
        assert len(outs) == 1000

    @given(seeds, st.integers(-100, 100), st.integers(0, 100))
    @settings(max_examples=100, deadline=None)
    def test_mix_seed_order_sensitive(self, master, a, b):
        if a != b:
            assert mix_seed(master, a, b) != mix_seed(master, b, a)

    def test_mix_seed_handles_negative_parts(self):
        assert mix_seed(1, -3, 5) != mix_seed(1, 3, 5)

    def test_mix_seed_no_part_collision(self):
        # (scale, rep) pairs in the ranges the drivers use never collide
        seen = {}
        for scale in range(-2, 16):
            for rep in range(500):
                key = mix_seed(99, scale, rep)
                assert key not in seen, (scale, rep, seen[key])
                seen[key] = (scale, rep)


class TestSampling:
    def test_same_seed_same_field(self):
        a = field.sample(6, 123)
        b = field.sample(6, 123)
        assert np.array_equal(a.omega, b.omega)

    def test_different_seeds_differ(self):
        a = field.sample(6, 123)
        b = field.sample(6, 124)
        assert not np.array_equal(a.omega, b.omega)

    def test_labels_in_unit_interval(self):
        f = field.sample(8, 7)
        assert f.omega.min() >= 0.0
        assert f.omega.max() < 1.0

    def test_label_frequency_near_uniform(self):
        f = field.sample(64, 11)
        # 33 280 labels; the open fraction at p = 1/2 concentrates hard
        frac = float((f.omega <= 0.5).mean())
        assert abs(frac - 0.5) < 0.01

    def test_enlargement_is_exact_restriction(self):
        small = field.sample(5, 42)
        big = field.sample(9, 42)
        again = big.restrict(5)
        assert np.array_equal(small.omega, again.omega)

    def test_restrict_rejects_growth(self):
        with pytest.raises(OutOfBoxError):
            field.sample(3, 1).restrict(4)

    def test_label_depends_on_position_not_box(self):
        e = EdgeId((2, -3), VERTICAL)
        f1 = field.sample(4, 9)
        f2 = field.sample(11, 9)
        assert f1.omega_of(e) == f2.omega_of(e)

    def test_memory_guard(self):
        with pytest.raises(MemoryGuardError):
            field.sample(10**6, 0)

    def test_is_open_threshold(self):
        f = field.sample(3, 5)
        e = EdgeId((0, 0), HORIZONTAL)
        w = f.omega_of(e)
        assert f.is_open(e, w)
        assert not f.is_open(e, w - 1e-12)

    def test_dual_edge_shares_label(self):
        f = field.sample(3, 5)
        e = EdgeId((1, 1), VERTICAL)
        assert f.omega_of(lattice.dual_of(e)) == f.omega_of(e)

    def test_out_of_box_lookup(self):
        f = field.sample(3, 5)
        with pytest.raises(OutOfBoxError):
            f.omega_of(EdgeId((3, 0), HORIZONTAL))


class TestGrids:
    def test_grids_match_edge_lookup(self):
        f = field.sample(4, 17)
        om_h, om_v = field.omega_grids(f)
        r = f.radius
        for y in range(-r, r + 1):
            for x in range(-r, r):
                assert om_h[y + r, x + r] == f.omega_of(EdgeId((x, y), HORIZONTAL))
        for y in range(-r, r):
            for x in range(-r, r + 1):
                assert om_v[y + r, x + r] == f.omega_of(EdgeId((x, y), VERTICAL))

    def test_grids_at_smaller_radius(self):
        f = field.sample(6, 17)
        om_h, om_v = field.omega_grids(f, 3)
        assert om_h.shape == (7, 6)
        assert om_v.shape == (6, 7)
        assert om_h[3, 3] == f.omega_of(EdgeId((0, 0), HORIZONTAL))


class TestWeights:
    def test_weights_vector_matches_scalar(self):
        f = field.sample(3, 21)
        d = weights.PowerLawCritical(1.0)
        vec = f.weights(d)
        for i, e in enumerate(lattice.edges_of_box(3)):
            assert vec[i] == pytest.approx(f.weight_of(e, d))


class TestSerialization:
    def test_dump_load_round_trip(self, tmp_path):
        f = field.sample(5, 99)
        path = str(tmp_path / "field.fppw")
        field.dump(f, path)
        g = field.load(path)
        assert g.radius == f.radius
        assert g.seed == f.seed
        assert np.array_equal(g.omega, f.omega)

    def test_load_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "junk.fppw"
        path.write_bytes(b"NOPE!" + b"\x00" * 64)
        with pytest.raises(ValueError):
            field.load(str(path))

    def test_load_rejects_truncation(self, tmp_path):
        f = field.sample(4, 3)
        path = tmp_path / "cut.fppw"
        field.dump(f, str(path))
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(ValueError):
            field.load(str(path))

    def test_dump_bytes_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        field.dump(field.sample(4, 8), str(a))
        field.dump(field.sample(4, 8), str(b))
        assert a.read_bytes() == b.read_bytes()
