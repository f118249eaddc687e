import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pconvex.psets import (INF, Ball, DistanceInestimable, Intersection, Interval, MinkowskiSum, Oracle, OrthantCone,
                           PointCloud, Scale, Tube, decide_sum_membership, distance_bound, distance_q,
                           is_interior_point, q_norm, tube)

coord = st.floats(-3, 3, allow_nan=False)


def test_q_norm_examples():
    assert q_norm([3, 4], 2) == 5
    assert q_norm([3, 4], INF) == 4
    assert q_norm([3, 4], "inf") == 4
    assert q_norm([1, 1, 1], 1) == 3


def test_contains_examples():
    assert Interval(-1, 2).contains([0])
    assert Ball((1, 0), 0.5, 2, closed=False).contains([0.75, 0])
    assert Scale(2, Interval(0, 1)).contains([1.5])
    with pytest.raises(ValueError):
        Interval(0, 1).contains([0, 0])


def test_open_closed_boundaries():
    assert Ball((0, 0), 1, 2, closed=True).contains([1, 0])
    assert not Ball((0, 0), 1, 2, closed=False).contains([1, 0])
    assert Interval.from_kind("[)", 0, 1).contains([0]) and not Interval.from_kind("[)", 0, 1).contains([1])
    assert not Interval.from_kind("(]", 0, 1).contains([0])
    assert Interval(-INF, 0, False, True).contains([-1e300])


def test_scale_zero_is_origin():
    S = Scale(0, Interval(1, 2))
    assert S.contains([0]) and not S.contains([1.5])


def test_distance_examples():
    assert distance_q(Ball((1, 0), 0.5, 2), [0, 0]) == 0.5
    assert distance_q(Interval(2, 3), [0]) == 2
    assert distance_q(PointCloud(((0, 0), (1, 1))), [1, 0], 1) == 1


def test_distance_open_ball_same_as_closed():
    assert distance_q(Ball((1, 0), 0.5, 2, closed=False), [0, 0]) == 0.5


def test_sampled_distance_is_flagged_upper_bound():
    K = Oracle(lambda x: abs(x[0]) <= 1 and abs(x[1]) <= 1, (-2, -2), (2, 2))
    d = distance_bound(K, [3, 0])
    assert not d.exact and d.value >= 2.0 - 1e-12 and d.value < 2.2


def test_distance_inestimable():
    K = Oracle(lambda x: False, (0,), (1,))
    with pytest.raises(DistanceInestimable):
        distance_q(K, [5])


def test_tube_examples():
    assert tube(PointCloud(((0.0,),)), 1, 2).contains([0.5])
    T = tube(Interval(0, 1), 0.5, 2)
    assert T.contains([1.4]) and not T.contains([1.6])
    assert tube(Ball((0, 0), 1, 2), 0.5).contains([1.4, 0])
    with pytest.raises(ValueError):
        Tube(Interval(0, 1), 0.0)


def test_tube_bbox_inflated():
    lo, hi = Tube(Interval(0, 1), 0.5).bbox
    assert lo.tolist() == [-0.5] and hi.tolist() == [1.5]


def test_interior_examples():
    assert is_interior_point(Interval(0, 1), [0.5], 1e-3, 16)
    assert not is_interior_point(Interval(0, 1), [1.0], 1e-3, 16)
    assert not is_interior_point(Ball((0, 0), 1, 2, closed=False), [0.999, 0], 1e-2, 16)


def test_minkowski_exact_and_sampled():
    S = MinkowskiSum(Interval(0, 1), Interval(2, 3))
    assert S.contains([2.5]) and S.contains([4.0]) and not S.contains([4.01])
    assert decide_sum_membership(S, [2.5]) == (True, "exact")
    K = Oracle(lambda x: 0 <= x[0] <= 1, (0,), (1,))
    L = Oracle(lambda x: 0 <= x[0] <= 1, (0,), (1,))
    S2 = MinkowskiSum(K, L, witness_budget=2000)
    ok, how = decide_sum_membership(S2, [1.5])
    assert ok and how == "sampled"
    assert decide_sum_membership(S2, [2.5])[0] is False


def test_minkowski_ball_plus_set():
    S = MinkowskiSum(PointCloud(((2.0, 0.0),)), Ball((0, 0), 1, 2, closed=False))
    assert S.contains([2.9, 0]) and not S.contains([3.0, 0])


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        Intersection((Interval(0, 1), Ball((0, 0), 1)))


def test_singleton_accepted():
    assert PointCloud(((1.0, 1.0),)).contains([1, 1])


def test_orthant():
    K = OrthantCone(2)
    assert K.contains([0, 3]) and not K.contains([-1e-9, 1])
    assert distance_q(K, [-3, -4]) == 5


@given(coord, st.floats(0.05, 2), st.sampled_from([1.0, 2.0, INF]))
def test_tube_iff_distance_interval(x, delta, q):
    K = Interval(-1, 0.5)
    assert Tube(K, delta, q).contains([x]) == (distance_q(K, [x], q) < delta)


@given(coord, coord, st.floats(0.05, 2))
def test_tube_iff_distance_ball(x, y, delta):
    K = Ball((0.5, -0.5), 1.0, 2)
    assert Tube(K, delta, 2).contains([x, y]) == (distance_q(K, [x, y], 2) < delta)


@given(coord, coord, st.floats(0.05, 2), st.sampled_from([1.0, 2.0, INF]))
def test_tube_iff_distance_cloud(x, y, delta, q):
    K = PointCloud(((0, 0), (1, 2), (-2, 1)))
    assert Tube(K, delta, q).contains([x, y]) == (distance_q(K, [x, y], q) < delta)


@given(coord, coord)
def test_intersection_is_conjunction(x, y):
    A, B = Ball((0, 0), 1.5, 2), Ball((1, 0), 1.0, INF, closed=False)
    assert Intersection((A, B)).contains([x, y]) == (A.contains([x, y]) and B.contains([x, y]))


@given(coord, coord, st.floats(-4, 4).filter(lambda v: abs(v) > 1e-3))
def test_scale_roundtrip(x, y, nu):
    K = Ball((0.2, 0.1), 1.0, 1)
    k = np.array([x, y])
    assert Scale(nu, K).contains(nu * k) == K.contains(k) or math.isclose(q_norm(k - [0.2, 0.1], 1), 1.0, rel_tol=1e-9)


def test_members_respect_membership():
    K = Intersection((Ball((0, 0), 1), OrthantCone(2)))
    M = K.members(np.random.default_rng(0), 11, 200)
    assert M.shape[0] > 10 and K.contains_many(M).all()
