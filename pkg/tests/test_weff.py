import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pconvex.certify import SearchBudget
from pconvex.pfuncs import ScalarFn, VectorFn, linear_sum, q_norm_fn, square_shift
from pconvex.psets import Ball, Interval
from pconvex.weff import (GridSpec, argmin_sets, check_ew_pconvexity, check_intersection_equality,
                          check_interval_fill, check_scaling_closure, check_union_inclusion, check_zero_in_ew,
                          is_Rm_p_convex, iterated_fill_cover, random_instance, strictly_dominated,
                          weakly_efficient_set)

SMALL = SearchBudget(pairs=1500, lambda_count=16)


def fn(dom, f, label="f"):
    return ScalarFn(dom, lambda X: f(X[:, 0]), label)


def dominance_oracle(V, tol=1e-12):
    out = []
    for i in range(len(V)):
        if not any(all(V[j][k] < V[i][k] - tol for k in range(len(V[i]))) for j in range(len(V))):
            out.append(i)
    return out


@pytest.fixture(scope="module")
def bowl():
    dom = Interval(0, 2)
    F = VectorFn((fn(dom, lambda x: x), fn(dom, lambda x: (x - 1) ** 2)))
    return F, GridSpec((0,), (2,), (201,))


def test_grid_guards():
    with pytest.raises(ValueError):
        GridSpec((0,), (1,), (1,))
    with pytest.raises(ValueError):
        GridSpec((0, 0), (1, 1), (1001, 1001))
    g = GridSpec((0, -1), (1, 1), (3, 5))
    assert g.size == 15 and g.steps.tolist() == [0.5, 0.5]
    assert g.snap([[0.5, 0.2], [2.0, 0.0]]).tolist() == [7, -1]


def test_bowl_ew_is_left_half(bowl):
    F, grid = bowl
    r = weakly_efficient_set(F, grid)
    assert r.weakly_efficient == tuple(range(101))
    assert r.argmins == ((0,), (100,))
    assert list(r.weakly_efficient) == dominance_oracle(F.values(grid.points()).tolist())
    assert check_union_inclusion(r).status == "pass"
    assert check_intersection_equality(r).status == "not_applicable"


def test_abs_pair():
    dom = Interval(-1, 1)
    F = VectorFn((fn(dom, np.abs), fn(dom, np.abs)))
    r = weakly_efficient_set(F, GridSpec((-1,), (1,), (201,)))
    assert r.weakly_efficient == (100,) and r.argmins == ((100,), (100,))
    assert check_intersection_equality(r).status == "pass"


def test_single_objective_is_argmin():
    dom = Interval(-1, 1)
    F = VectorFn((fn(dom, lambda x: np.cos(3 * x)),))
    grid = GridSpec((-1,), (1,), (101,))
    r = weakly_efficient_set(F, grid)
    assert set(r.weakly_efficient) == set(argmin_sets(F, grid)[0])
    assert check_union_inclusion(r).status == "pass"


def test_constant_objectives():
    dom = Interval(0, 1)
    F = VectorFn((fn(dom, lambda x: 0 * x + 2), fn(dom, lambda x: 0 * x + 2)))
    r = weakly_efficient_set(F, GridSpec((0,), (1,), (11,)))
    assert r.argmins[0] == tuple(range(11)) and r.weakly_efficient == tuple(range(11))
    assert check_intersection_equality(r).status == "pass"


def test_excluded_points_counted():
    dom = Interval(0, 1)
    F = VectorFn((fn(dom, lambda x: x),))
    r = weakly_efficient_set(F, GridSpec((-1,), (1,), (21,)))
    assert r.excluded == 10 and r.weakly_efficient == (10,)
    with pytest.raises(ValueError):
        weakly_efficient_set(F, GridSpec((2,), (3,), (5,)))


def test_rm_pconvex_examples():
    ball = Ball((0.2, 0.1), 1.0, 2)
    F = VectorFn((q_norm_fn(2, ball), linear_sum(1.0, ball)))
    assert not is_Rm_p_convex(F, 0.5, SMALL).falsified
    dom = Interval(0, 2)
    G = VectorFn((fn(dom, lambda x: x), square_shift(dom)))
    v = is_Rm_p_convex(G, 0.5, SMALL)
    assert v.falsified and v.witness.component == 1


def hinge_problem():
    dom = Interval(0, 2)
    F = VectorFn((fn(dom, lambda x: np.maximum(0.0, x - 1)), fn(dom, lambda x: x)))
    return F, GridSpec((0,), (2,), (201,))


def test_structure_on_hypothesis_instance():
    F, grid = hinge_problem()
    assert not is_Rm_p_convex(F, 0.5, SMALL).falsified
    r = weakly_efficient_set(F, grid)
    assert r.weakly_efficient == tuple(range(101))
    sc = check_scaling_closure(r, F, 0.5)
    assert sc.status == "pass" and "skipped" in sc.detail
    assert check_interval_fill(r).status == "pass"
    assert not check_ew_pconvexity(r, 0.5, SMALL).falsified
    assert check_zero_in_ew(r, F).status == "pass"
    # injected gap set {0, 1}: 1/4 * 1 + 1/4 * 1 = 1/2 is missing
    assert check_ew_pconvexity(r, 0.5, SMALL, indices=[0, 100]).falsified


def test_scaling_closure_requires_nonnegative(bowl):
    dom = Interval(0, 2)
    F = VectorFn((fn(dom, lambda x: x - 1), fn(dom, lambda x: (x - 1) ** 2)))
    r = weakly_efficient_set(F, GridSpec((0,), (2,), (21,)))
    assert check_scaling_closure(r, F, 0.5).status == "fail"


def test_interval_fill_not_applicable_at_origin_only():
    dom = Interval(-1, 1)
    F = VectorFn((fn(dom, np.abs), fn(dom, lambda x: x * x)))
    r = weakly_efficient_set(F, GridSpec((-1,), (1,), (21,)))
    assert check_interval_fill(r).status == "not_applicable"
    assert not check_ew_pconvexity(r, 0.5, SMALL).falsified


def test_zero_in_ew_examples():
    dom = Interval(0, 1)
    F = VectorFn((fn(dom, np.sqrt), fn(dom, lambda x: x * x)))
    r = weakly_efficient_set(F, GridSpec((0,), (1,), (101,)))
    assert check_zero_in_ew(r, F).status == "pass"
    ball = Ball((0, 0), 1, 2)
    G = VectorFn((q_norm_fn(2, ball), q_norm_fn(1, ball)))
    r = weakly_efficient_set(G, GridSpec((-1, -1), (1, 1), (21, 21)))
    assert check_zero_in_ew(r, G).status == "pass"
    with pytest.raises(ValueError):
        check_zero_in_ew(weakly_efficient_set(F, GridSpec((0.5,), (1,), (11,))), F)


def test_zero_in_ew_flags_negative_value():
    dom = Interval(-1, 1)
    F = VectorFn((fn(dom, lambda x: x * x - 0.5), fn(dom, np.abs)))
    r = weakly_efficient_set(F, GridSpec((-1,), (1,), (21,)))
    assert check_zero_in_ew(r, F).status == "fail"


def test_iterated_fill_cover():
    cover = iterated_fill_cover(1.0, 0.5, 1e-3)
    assert cover[:3] == [(0.5, 1.0), (0.25, 0.5), (0.125, 0.25)]
    assert all(a[0] == b[1] for a, b in zip(cover, cover[1:]))
    assert cover[-1][0] <= 1e-3


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_dominance_matches_oracle_and_is_order_free(seed):
    F, grid = random_instance(seed, count=41)
    r = weakly_efficient_set(F, grid)
    V = F.values(grid.points())
    assert list(r.weakly_efficient) == dominance_oracle(V.tolist())
    perm = np.random.default_rng(seed).permutation(len(V))
    again = np.flatnonzero(~strictly_dominated(V[perm]))
    assert sorted(perm[again].tolist()) == list(r.weakly_efficient)
    assert r.weakly_efficient


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=2))
def test_dominance_antisymmetric(rows):
    V = np.array(rows)
    a_dom_b = np.all(V[0] < V[1] - 1e-12)
    b_dom_a = np.all(V[1] < V[0] - 1e-12)
    assert not (a_dom_b and b_dom_a)
    dom = strictly_dominated(V)
    assert dom[1] == a_dom_b and dom[0] == b_dom_a


def test_interval_fill_detects_gap():
    # E_W = [0.5, 1.5] leaves (0, 0.5) uncovered
    dom = Interval(0, 2)
    F = VectorFn((fn(dom, lambda x: np.abs(x - 0.5)), fn(dom, lambda x: np.abs(x - 1.5))))
    r = weakly_efficient_set(F, GridSpec((0,), (2,), (201,)))
    res = check_interval_fill(r)
    assert res.status == "fail" and res.witness["xbar"] == 1.5
