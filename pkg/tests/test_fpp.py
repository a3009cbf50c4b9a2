"""Passage times against self-avoiding-path enumeration and each other."""

import numpy as np
import pytest

from critfpp import field, fpp, lattice, weights
from critfpp.errors import BoxTooSmallError, NoPathError, OutOfBoxError

from oracles import brute_box_time, brute_point_time

BERN = weights.BernoulliCritical()
FA1 = weights.PowerLawCritical(1.0)


def path_is_connected(res):
    """The reported geodesic walks from source_hit to target_hit."""
    at = res.source_hit
    for e in res.path:
        a, b = e.endpoints
        if at == a:
            at = b
        elif at == b:
            at = a
        else:
            return False
    return at == res.target_hit


# ---------------------------------------------------------------------------
# Agreement with enumeration on small boxes.
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("dist", [BERN, FA1], ids=["bernoulli", "fa1"])
def test_box_time_matches_enumeration(dist):
    for seed in range(40):
        f = field.sample(2, field.mix_seed(99, seed))
        res = fpp.box_time(f, dist, 2)
        assert res.time == brute_box_time(f, dist, 2)


@pytest.mark.parametrize("dist", [BERN, FA1], ids=["bernoulli", "fa1"])
def test_point_time_matches_enumeration(dist):
    # Guard box B(2) around targets at distance 1 keeps enumeration cheap.
    for seed in range(25):
        f = field.sample(2, field.mix_seed(17, seed))
        for x in [(1, 0), (0, 1), (-1, 0), (1, 1)]:
            res = fpp.point_time(f, dist, x, guard_ratio=2.0)
            assert res.time == brute_point_time(f, dist, x, 2)


def test_geodesic_has_consistent_bookkeeping():
    f = field.sample(4, 5)
    res = fpp.box_time(f, FA1, 4)
    assert res.source_hit == (0, 0)
    assert max(abs(res.target_hit[0]), abs(res.target_hit[1])) == 4
    assert path_is_connected(res)
    assert len(res.path) == len(res.edge_times)
    assert res.time == pytest.approx(sum(res.edge_times))
    assert res.edge_times == tuple(float(f.weight_of(e, FA1)) for e in res.path)


def test_path_stays_inside_box():
    for seed in range(10):
        f = field.sample(3, field.mix_seed(31, seed))
        res = fpp.box_time(f, BERN, 3)
        for e in res.path:
            assert e.span_radius <= 3


# ---------------------------------------------------------------------------
# passage_time terminal handling and restriction masks.
# ---------------------------------------------------------------------------


def test_source_in_target_set_is_free():
    f = field.sample(2, 0)
    res = fpp.passage_time(f, BERN, [(0, 0)], [(0, 0), (2, 2)])
    assert res.time == 0.0
    assert res.path == ()
    assert res.source_hit == res.target_hit == (0, 0)


def test_terminal_outside_box_rejected():
    f = field.sample(2, 0)
    with pytest.raises(OutOfBoxError):
        fpp.passage_time(f, BERN, [(3, 0)], [(0, 0)])
    with pytest.raises(OutOfBoxError):
        fpp.passage_time(f, BERN, [(0, 0)], [(0, 3)])


def test_empty_terminal_sets_rejected():
    f = field.sample(2, 0)
    with pytest.raises(ValueError):
        fpp.passage_time(f, BERN, [], [(0, 0)])
    with pytest.raises(ValueError):
        fpp.passage_time(f, BERN, [(0, 0)], [])


def test_restriction_to_one_path_forces_it():
    f = field.sample(2, 3)
    corridor = [
        lattice.edge_between((0, 0), (1, 0)),
        lattice.edge_between((1, 0), (1, 1)),
        lattice.edge_between((1, 1), (2, 1)),
    ]
    res = fpp.passage_time(f, FA1, [(0, 0)], [(2, 1)], restrict_to=corridor)
    assert res.path == tuple(corridor)
    assert res.time == pytest.approx(sum(f.weight_of(e, FA1) for e in corridor))


def test_restriction_can_sever_target():
    f = field.sample(2, 3)
    lonely = [lattice.edge_between((0, 0), (1, 0))]
    with pytest.raises(NoPathError):
        fpp.passage_time(f, FA1, [(0, 0)], [(0, 2)], restrict_to=lonely)


def test_restriction_mask_equals_edge_list():
    f = field.sample(3, 11)
    edges = lattice.edges_of_box(3)
    keep = [e for i, e in enumerate(edges) if i % 3 != 0]
    mask = np.zeros(len(edges), dtype=np.uint8)
    for e in keep:
        mask[lattice.edge_index(3, e)] = 1
    try:
        by_list = fpp.passage_time(f, FA1, [(0, 0)], [(3, 3)], restrict_to=keep)
        by_mask = fpp.passage_time(f, FA1, [(0, 0)], [(3, 3)], restrict_to=mask)
        assert by_list.time == by_mask.time
        assert by_list.path == by_mask.path
    except NoPathError:
        with pytest.raises(NoPathError):
            fpp.passage_time(f, FA1, [(0, 0)], [(3, 3)], restrict_to=mask)


def test_restriction_mask_length_checked():
    f = field.sample(2, 0)
    with pytest.raises(ValueError):
        fpp.passage_time(f, BERN, [(0, 0)], [(1, 1)],
                         restrict_to=np.ones(7, dtype=np.uint8))


def test_restriction_never_beats_unrestricted():
    for seed in range(10):
        f = field.sample(3, field.mix_seed(7, seed))
        free = fpp.box_time(f, FA1, 3)
        edges = lattice.edges_of_box(3)
        rng = np.random.default_rng(seed)
        mask = (rng.random(len(edges)) < 0.9).astype(np.uint8)
        try:
            tied = fpp.passage_time(f, FA1, [(0, 0)],
                                    lattice.boundary_of_box(3),
                                    restrict_to=mask)
        except NoPathError:
            continue
        assert tied.time >= free.time - 1e-12


# ---------------------------------------------------------------------------
# box_time / point_time validation.
# ---------------------------------------------------------------------------


def test_box_time_scale_validation():
    f = field.sample(2, 0)
    with pytest.raises(ValueError):
        fpp.box_time(f, BERN, -1)
    with pytest.raises(BoxTooSmallError):
        fpp.box_time(f, BERN, 3)


def test_box_time_zero_scale_is_free():
    f = field.sample(2, 0)
    res = fpp.box_time(f, BERN, 0)
    assert res.time == 0.0 and res.path == ()


def test_point_time_guard_validation():
    f = field.sample(8, 0)
    with pytest.raises(ValueError):
        fpp.point_time(f, BERN, (2, 0), guard_ratio=1.0)
    with pytest.raises(BoxTooSmallError):
        fpp.point_time(f, BERN, (5, 0), guard_ratio=2.0)
    res = fpp.point_time(f, BERN, (4, 0), guard_ratio=2.0)
    assert res.truncation_radius == 8


def test_point_time_reuses_field_when_guard_box_matches():
    f = field.sample(4, 123)
    res = fpp.point_time(f, FA1, (2, 0), guard_ratio=2.0)
    assert res.truncation_radius == 4
    # The truncation box is carved out of the same infinite-lattice
    # labels, so a wider field gives the same restricted answer.
    g = field.sample(9, 123)
    res2 = fpp.point_time(g, FA1, (2, 0), guard_ratio=2.0)
    assert res2.time == res.time
    assert res2.path == res.path


def test_point_time_monotone_in_guard():
    # A wider guard box can only reveal cheaper detours.
    for seed in range(8):
        f = field.sample(16, field.mix_seed(3, seed))
        t2 = fpp.point_time(f, FA1, (4, 1), guard_ratio=2.0).time
        t3 = fpp.point_time(f, FA1, (4, 1), guard_ratio=3.5).time
        assert t3 <= t2 + 1e-12


# ---------------------------------------------------------------------------
# Annulus decomposition.
# ---------------------------------------------------------------------------


def test_annulus_decomposition_sums_to_total():
    f = field.sample(8, 21)
    res = fpp.box_time(f, FA1, 8)
    ann = fpp.annulus_decomposition(res)
    assert ann.total == pytest.approx(res.time)
    assert ann.total == pytest.approx(sum(t for _, t in ann.per_annulus))
    ks = [k for k, _ in ann.per_annulus]
    assert ks == sorted(ks)
    for k, t in ann.per_annulus:
        assert t >= 0.0


def test_annulus_decomposition_matches_per_edge_shells():
    f = field.sample(6, 8)
    res = fpp.box_time(f, FA1, 6)
    acc = {}
    for e, t in zip(res.path, res.edge_times):
        k = lattice.annulus_of_edge(e)
        acc[k] = acc.get(k, 0.0) + t
    ann = fpp.annulus_decomposition(res)
    assert dict(ann.per_annulus) == pytest.approx(acc)


def test_empty_path_decomposes_to_nothing():
    f = field.sample(2, 0)
    ann = fpp.annulus_decomposition(fpp.box_time(f, BERN, 0))
    assert ann.per_annulus == () and ann.total == 0.0


# ---------------------------------------------------------------------------
# Array-level fast paths agree with the object-level entry points.
# ---------------------------------------------------------------------------


def test_box_time_value_matches_box_time():
    for seed in range(15):
        f = field.sample(6, field.mix_seed(13, seed))
        for n in (1, 3, 6):
            want = fpp.box_time(f, FA1, n).time
            got = fpp.box_time_value(f.omega, 6, n, FA1)
            assert got == want


def test_box_time_profile_matches_per_scale_calls():
    for seed in range(10):
        f = field.sample(8, field.mix_seed(29, seed))
        scales = (1, 2, 4, 8)
        prof = fpp.box_time_profile(f.omega, 8, scales, FA1)
        for n, t in zip(scales, prof):
            assert t == fpp.box_time(f, FA1, n).time


def test_box_time_profile_is_monotone_in_scale():
    f = field.sample(16, 4)
    prof = fpp.box_time_profile(f.omega, 16, (1, 2, 4, 8, 16), FA1)
    assert prof == sorted(prof)


def test_box_time_profile_scale_validation():
    f = field.sample(4, 0)
    with pytest.raises(BoxTooSmallError):
        fpp.box_time_profile(f.omega, 4, (2, 5), FA1)
