import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pseudocal import numerics
from pseudocal.errors import InvalidInputError, OptimizationError

from _util import grid_minimize


def test_softmax_symmetry():
    np.testing.assert_allclose(numerics.softmax([0.0, 0.0]), [0.5, 0.5])


def test_softmax_large_logits_no_overflow():
    p = numerics.softmax([1000.0, 0.0])
    assert np.all(np.isfinite(p))
    assert p[0] == pytest.approx(1.0)
    assert p[1] == pytest.approx(0.0, abs=1e-300)


def test_softmax_closed_form():
    p = numerics.softmax([2.0, 0.0])
    expected = np.array([math.exp(2), 1.0]) / (math.exp(2) + 1.0)
    np.testing.assert_allclose(p, expected, atol=1e-12)
    assert p[0] == pytest.approx(0.8808, abs=1e-4)


def test_softmax_rows():
    p = numerics.softmax([[2.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_softmax_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        numerics.softmax([np.nan, 0.0])
    with pytest.raises(InvalidInputError):
        numerics.softmax([np.inf, 0.0])


@given(
    st.lists(st.floats(-30, 30), min_size=2, max_size=8),
    st.floats(-50, 50),
)
def test_softmax_shift_invariance(values, shift):
    z = np.array(values)
    np.testing.assert_allclose(
        numerics.softmax(z + shift), numerics.softmax(z), atol=1e-9
    )


def test_nll_perfect_prediction():
    assert numerics.nll([1.0, 0.0], 0) == pytest.approx(0.0, abs=1e-9)


def test_nll_uniform():
    assert numerics.nll([0.5, 0.5], 1) == pytest.approx(math.log(2), abs=1e-12)


def test_nll_closed_form():
    p = numerics.softmax([2.0, 0.0])
    assert numerics.nll(p, 1) == pytest.approx(-math.log(p[1]), abs=1e-12)
    assert numerics.nll(p, 1) == pytest.approx(2.1269, abs=1e-4)


def test_nll_soft_target():
    got = numerics.nll([0.7, 0.3], np.array([0.5, 0.5]))
    expected = -0.5 * math.log(0.7) - 0.5 * math.log(0.3)
    assert got == pytest.approx(expected, abs=1e-12)


def test_nll_index_out_of_range():
    with pytest.raises(InvalidInputError):
        numerics.nll([0.5, 0.5], 2)


def test_nll_clamps_zero_probability():
    assert numerics.nll([1.0, 0.0], 1) == pytest.approx(-math.log(1e-12))


def test_brier_cases():
    assert numerics.brier([1.0, 0.0], 0) == 0.0
    assert numerics.brier([0.5, 0.5], 0) == pytest.approx(0.25)
    assert numerics.brier([0.0, 1.0], 0) == pytest.approx(1.0)


def test_brier_out_of_range():
    with pytest.raises(InvalidInputError):
        numerics.brier([0.5, 0.5], -1)


def test_nll_brier_nonnegative():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = numerics.softmax(rng.standard_normal(4) * 3)
        y = int(rng.integers(0, 4))
        assert numerics.nll(p, y) >= 0.0
        assert numerics.brier(p, y) >= 0.0


def test_nll_of_predicted_class_lower_in_expectation():
    # only an expectation-level statement: individual samples may violate it
    rng = np.random.default_rng(33)
    own, random_y = [], []
    for _ in range(300):
        p = numerics.softmax(rng.standard_normal(5) * 2)
        own.append(numerics.nll(p, numerics.argmax_class(p)))
        random_y.append(numerics.nll(p, int(rng.integers(0, 5))))
    assert np.mean(own) < np.mean(random_y)


def test_argmax_class():
    assert numerics.argmax_class([0.1, 0.9]) == 1
    assert numerics.argmax_class([3.0, 3.0]) == 0  # tie breaks to lowest index
    assert numerics.argmax_class([1.0, 5.0, 2.0]) == 1


@given(
    st.lists(st.floats(-20, 20), min_size=2, max_size=6),
    st.floats(0.05, 20.0),
)
def test_argmax_temperature_invariance(values, temperature):
    # rounding keeps distinct entries more than an ulp apart: division by
    # T cannot collapse a strict ordering into a float tie
    z = np.round(np.array(values), 6)
    assert numerics.argmax_class(z / temperature) == numerics.argmax_class(z)


def test_minimize_quadratic():
    x = numerics.minimize_scalar(lambda x: (x - 2.0) ** 2, 0.1, 10.0, tol=1e-4)
    assert x == pytest.approx(2.0, abs=1e-4)


def test_minimize_monotone_returns_boundary():
    assert numerics.minimize_scalar(lambda x: x, 1.0, 3.0, tol=1e-4) == pytest.approx(
        1.0, abs=1e-4
    )


def test_minimize_convex_piecewise_matches_grid():
    rng = np.random.default_rng(5)
    for _ in range(10):
        k = int(rng.integers(3, 8))
        slopes = np.sort(rng.uniform(-4, 4, k))
        slopes[0] = -abs(slopes[0]) - 0.1
        slopes[-1] = abs(slopes[-1]) + 0.1
        offsets = rng.uniform(-2, 2, k)

        def f(x):
            return float(np.max(slopes * x + offsets))

        found = numerics.minimize_scalar(f, 0.1, 10.0, tol=1e-4)
        oracle = grid_minimize(f, 0.1, 10.0)
        assert abs(found - oracle) <= 1e-2


def test_minimize_unimodal_within_two_tol():
    rng = np.random.default_rng(11)
    tol = 1e-4
    for _ in range(10):
        center = rng.uniform(0.2, 9.0)
        scale = rng.uniform(0.5, 4.0)

        def f(x):
            return scale * (x - center) ** 2 + math.sin(center)

        found = numerics.minimize_scalar(f, 0.1, 10.0, tol=tol)
        oracle = grid_minimize(f, 0.1, 10.0)
        assert abs(found - oracle) <= 2 * tol


def test_minimize_nonfinite_probe_raises():
    def f(x):
        return math.nan if x > 5.0 else x

    with pytest.raises(OptimizationError) as excinfo:
        numerics.minimize_scalar(f, 0.1, 10.0, tol=1e-4)
    assert excinfo.value.probe > 5.0


def test_minimize_bad_bracket():
    with pytest.raises(InvalidInputError):
        numerics.minimize_scalar(lambda x: x, 3.0, 1.0)
    with pytest.raises(InvalidInputError):
        numerics.minimize_scalar(lambda x: x, 1.0, 3.0, tol=-1.0)
