import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pconvex.pcore import (DomainError, PCoefficients, PExponent, adversarial_lambdas, conjugate_coefficient,
                           g_argmin, g_argmin_numeric, p_combine, sample_p_segment, scaling_g, segment_lambdas)

ps = st.floats(min_value=0.05, max_value=1.0)
lams = st.floats(min_value=0.0, max_value=1.0)


def mu_oracle(lam, p):
    # plain-float restatement, no clamping
    return (1.0 - lam ** p) ** (1.0 / p) if lam < 1 else 0.0


@pytest.mark.parametrize("p", [0.0, -0.5, 1.5, float("nan")])
def test_exponent_rejected(p):
    with pytest.raises(DomainError):
        PExponent(p)


def test_conjugate_examples():
    assert conjugate_coefficient(0.25, 0.5) == 0.25
    assert conjugate_coefficient(1.0, 0.7) == 0.0
    assert conjugate_coefficient(0.3, 1.0) == pytest.approx(0.7, abs=1e-15)


@pytest.mark.parametrize("lam", [-0.1, 1.0000001])
def test_conjugate_domain(lam):
    with pytest.raises(DomainError):
        conjugate_coefficient(lam, 0.5)


def test_p_combine_examples():
    x = np.array([3.0, -1.0])
    assert np.array_equal(p_combine(x, [7.0, 2.0], 1.0, 0.3), x)
    assert p_combine([0.0], [1.0], 0.25, 0.5).tolist() == [0.25]
    assert p_combine([2.0, 0.0], [0.0, 2.0], 0.5, 1.0).tolist() == [1.0, 1.0]
    with pytest.raises(ValueError):
        p_combine([1.0], [1.0, 2.0], 0.5, 0.5)


def test_scaling_g_examples():
    assert scaling_g(0.0, 0.3) == 1.0
    assert scaling_g(0.25, 0.5) == 0.5
    assert scaling_g(0.5, 1.0) == 1.0


def test_g_argmin_examples():
    assert g_argmin(0.5) == (0.25, 0.5)
    lam, g = g_argmin(0.25)
    assert lam == pytest.approx(2.0 ** -4, abs=1e-15) and g == pytest.approx(2.0 ** -3, abs=1e-15)
    assert abs(g_argmin(0.999)[1] - 1.0) < 1e-2
    with pytest.raises(DomainError):
        g_argmin(1.0)


@pytest.mark.parametrize("p", [0.1, 0.25, 0.5, 0.75, 0.9])
def test_g_argmin_matches_numeric(p):
    lam, g = g_argmin(p)
    nl, ng = g_argmin_numeric(p)
    assert abs(lam - nl) < 1e-6 and abs(g - ng) < 1e-6


def test_segment_samples():
    pts = sample_p_segment([2.0], [0.0], 1.0, 3, "closed")
    assert [p.tolist() for p in pts] == [[0.0], [1.0], [2.0]]
    assert [p.tolist() for p in sample_p_segment([0.0], [1.0], 0.5, 1, "half_open")] == [[0.0]]
    vals = [v[0] for v in sample_p_segment([1.0], [1.0], 0.5, 5, "closed")]
    expected = [lam + mu_oracle(lam, 0.5) for lam in (0, 0.25, 0.5, 0.75, 1.0)]
    assert vals == pytest.approx(expected, abs=1e-15)
    assert max(vals) == 1.0 and min(vals) == 0.5


def test_segment_kinds():
    assert segment_lambdas(4, "open").tolist() == [0.2, 0.4, 0.6, 0.8]
    assert segment_lambdas(4, "half_open").tolist() == [0.25, 0.5, 0.75, 1.0]
    assert segment_lambdas(2, "closed").tolist() == [0.0, 1.0]


def test_adversarial_lambdas_cover_required_values():
    out = adversarial_lambdas(0.5)
    assert out[0] == 0.25
    assert {0.0, 1.0}.issubset(out)
    assert any(0 < v <= 1e-3 for v in out) and any(1 - 1e-3 <= v < 1 for v in out)


@given(lams, ps)
def test_conjugate_identity(lam, p):
    mu = conjugate_coefficient(lam, p)
    assert abs(mu ** p + lam ** p - 1.0) <= 1e-12
    PCoefficients(lam, mu, p)


@given(lams, ps)
def test_conjugate_matches_oracle(lam, p):
    assert conjugate_coefficient(lam, p) == pytest.approx(mu_oracle(lam, p), rel=1e-9, abs=1e-12)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
       lams)
def test_p_one_is_convex_combination(x, y, lam):
    got = p_combine(x, y, lam, 1.0)
    assert np.allclose(got, lam * np.array(x) + (1 - lam) * np.array(y), rtol=1e-13, atol=1e-10)


@given(lams, ps)
def test_g_bounds(lam, p):
    g = scaling_g(lam, p)
    assert 2.0 ** ((p - 1) / p) - 1e-12 <= g <= 1.0 + 1e-15
    if p < 1 and 1e-6 < lam < 1 - 1e-6:
        assert g < 1.0


@given(lams, ps)
def test_g_symmetric(lam, p):
    mu = conjugate_coefficient(lam, p)
    assert scaling_g(mu, p) == pytest.approx(scaling_g(lam, p), abs=1e-9)


def test_pcoefficients_reject_bad_pair():
    with pytest.raises(DomainError):
        PCoefficients(0.5, 0.5, 0.5)
    assert math.isclose(PCoefficients.from_lambda(0.25, 0.5).mu, 0.25)
