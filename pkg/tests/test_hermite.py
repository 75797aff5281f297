"""Hermite coefficients, rank, transforms, and subordinated covariance."""

import math

import numpy as np
import pytest
from scipy import special

from harmreg import (
    covariance,
    hermite_coefficients,
    hermite_rank,
    make_transform,
    preset_noise,
    subordinated_covariance,
)
from harmreg.errors import DegenerateTransformError, QuadratureError, ValidationError
from harmreg.hermite import SQRT_2PI, _g_centered_abs, hermite

from oracles import isserlis_hermite_moment

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
ABS_EG2 = 1.0 - 2.0 / math.pi


# ---------------------------------------------------------------------------
# polynomials


def test_hermite_low_orders():
    assert hermite(0, 3.7) == 1.0
    assert hermite(1, 3.7) == 3.7
    assert hermite(2, 2.0) == 3.0
    assert hermite(3, 1.5) == 1.5**3 - 3 * 1.5


def test_hermite_fifth_order_expansion():
    x = 1.3
    assert abs(hermite(5, x) - (x**5 - 10 * x**3 + 15 * x)) < 1e-12
    xs = np.linspace(-3.0, 3.0, 41)
    assert np.allclose(hermite(5, xs), xs**5 - 10 * xs**3 + 15 * xs, atol=1e-10)


def test_hermite_order_errors():
    with pytest.raises(ValidationError):
        hermite(-1, 0.0)
    with pytest.raises(ValidationError):
        hermite(61, 0.0)
    with pytest.raises(ValidationError):
        hermite(2.5, 0.0)


def test_hermite_orthogonality():
    # roundoff scales with the integrand magnitude sqrt(k! l!)
    x, w = special.roots_hermitenorm(256)
    for k in range(16):
        hk = hermite(k, x)
        for l in range(k, 16):
            inner = float((w * hk * hermite(l, x)).sum()) / SQRT_2PI
            target = math.factorial(k) if k == l else 0.0
            scale = math.sqrt(math.factorial(k) * math.factorial(l))
            assert abs(inner - target) <= 1e-8 * max(1.0, scale)


# ---------------------------------------------------------------------------
# coefficients


def _factorial_scale(n: int) -> np.ndarray:
    return np.sqrt([math.factorial(k) for k in range(n)])


def test_identity_coefficients():
    c = hermite_coefficients(lambda x: np.asarray(x, dtype=float))
    assert abs(c[1] - 1.0) < 1e-10
    others = np.abs(np.delete(c, 1)) / np.delete(_factorial_scale(len(c)), 1)
    assert np.max(others) < 1e-9


def test_cube_coefficients():
    # x^3 = H_3 + 3 H_1, so the moment-convention values are
    # C_1 = 3 E[H_1^2] / 1 = 3 and C_3 = E[H_3^2] / 1 = 6
    c = hermite_coefficients(lambda x: np.asarray(x, dtype=float) ** 3)
    assert abs(c[1] - 3.0) < 1e-9
    assert abs(c[3] - 6.0) < 1e-9
    others = np.abs(np.delete(c, [1, 3])) / np.delete(_factorial_scale(len(c)), [1, 3])
    assert np.max(others) < 1e-9


def test_abs_coefficients_closed_form():
    # E[|x| H_2] = E|x|^3 - E|x| = sqrt(2/pi); E[|x| H_4] = -sqrt(2/pi)
    c = hermite_coefficients(_g_centered_abs, breakpoints=(0.0,))
    assert abs(c[0]) < 1e-10
    assert abs(c[1]) < 1e-10
    assert abs(c[2] - SQRT_2_OVER_PI) < 1e-9
    assert abs(c[4] + SQRT_2_OVER_PI) < 1e-9
    assert np.max(np.abs(c[1::2])) < 1e-9


def test_abs_needs_breakpoints():
    with pytest.raises(QuadratureError):
        hermite_coefficients(_g_centered_abs)


def test_uncentered_transform_rejected():
    with pytest.raises(ValidationError):
        hermite_coefficients(lambda x: np.asarray(x, dtype=float) + 0.3)


# ---------------------------------------------------------------------------
# rank


def test_rank_examples():
    assert hermite_rank([0.0, 1.0, 0.0]) == 1
    assert hermite_rank([0.0, 0.0, 2.0]) == 2
    assert hermite_rank([0.0, 0.0, 0.0, 6.0]) == 3


def test_rank_scale_free_tolerance():
    # |C_k| / sqrt(k!) is the scale; a bare 1e-7 at k=10 is below it
    coeffs = np.zeros(11)
    coeffs[10] = 1e-7 * math.sqrt(math.factorial(10))
    assert hermite_rank(coeffs) == 10


def test_rank_degenerate():
    with pytest.raises(DegenerateTransformError):
        hermite_rank([0.0, 1e-12, 1e-12])


# ---------------------------------------------------------------------------
# built-in transforms


def test_identity_transform():
    tr = make_transform("identity")
    assert tr.rank == 1
    assert abs(tr.eg2 - 1.0) < 1e-10
    assert tr.parseval_gap < 1e-9
    assert np.array_equal(tr.g(np.array([0.5, -2.0])), np.array([0.5, -2.0]))


def test_cube_transform():
    tr = make_transform("cube")
    assert tr.rank == 1
    assert abs(tr.eg2 - 15.0) < 1e-8
    assert tr.parseval_gap < 1e-7
    assert tr.g(2.0) == 8.0


def test_square_transform():
    tr = make_transform("hermite-polynomial", coeffs=[0.0, 0.0, 2.0])
    assert tr.rank == 2
    assert abs(tr.eg2 - 2.0) < 1e-10
    assert abs(tr.g(2.0) - 3.0) < 1e-12
    assert abs(tr.g(0.0) + 1.0) < 1e-12


def test_abs_transform():
    tr = make_transform("centered-absolute-value")
    assert tr.rank == 2
    assert abs(tr.eg2 - ABS_EG2) < 1e-10
    # truncation at K_max = 20 leaves a genuine coefficient tail
    assert 1e-3 < tr.parseval_gap < 2e-3
    assert tr.tail_coefficient_mass() == tr.parseval_gap
    assert abs(tr.g(-1.5) - (1.5 - SQRT_2_OVER_PI)) < 1e-15


def test_polynomial_transform_requires_coeffs():
    with pytest.raises(ValidationError):
        make_transform("hermite-polynomial")
    with pytest.raises(ValidationError):
        make_transform("hermite-polynomial", coeffs=[0.5, 1.0])


def test_unknown_kind():
    with pytest.raises(ValidationError):
        make_transform("sigmoid")


def test_k_max_property():
    tr = make_transform("identity", k_max=12)
    assert tr.k_max == 12
    assert len(tr.coeffs) == 13


# ---------------------------------------------------------------------------
# user tables


def test_table_identity():
    xs = np.linspace(-8.5, 8.5, 3001)
    tr = make_transform("user-table", table=(xs, xs))
    assert tr.rank == 1
    assert abs(tr.coeffs[1] - 1.0) < 1e-9
    assert tr.parseval_gap < 1e-9


def test_table_square_recentring():
    # chords of a convex function sit above it, so the tabulated version
    # carries an O(h^2) mean that the builder absorbs into a shift
    xs = np.linspace(-8.5, 8.5, 3001)
    tr = make_transform("user-table", table=(xs, xs**2 - 1.0))
    assert tr.rank == 2
    assert abs(tr.coeffs[2] - 2.0) < 1e-5
    assert abs(tr.eg2 - 2.0) < 1e-5
    assert abs(float(tr.g(0.0)) + 1.0) < 1e-4


def test_table_abs_matches_builtin():
    xs = np.linspace(-8.5, 8.5, 4001)
    tr = make_transform("user-table", table=(xs, np.abs(xs) - SQRT_2_OVER_PI))
    ref = make_transform("centered-absolute-value")
    assert tr.rank == 2
    assert abs(tr.coeffs[2] - ref.coeffs[2]) < 1e-6
    assert abs(tr.eg2 - ref.eg2) < 1e-6


def test_table_validation():
    xs = np.linspace(-8.0, 8.0, 101)
    with pytest.raises(ValidationError):
        make_transform("user-table")
    with pytest.raises(ValidationError):
        make_transform("user-table", table=(xs, xs[:-1]))
    with pytest.raises(ValidationError):
        make_transform("user-table", table=(xs[::-1], xs))
    with pytest.raises(ValidationError):
        make_transform("user-table", table=([0.0], [0.0]))


def test_table_rejects_uncentered():
    xs = np.linspace(-8.0, 8.0, 1001)
    with pytest.raises(ValidationError):
        make_transform("user-table", table=(xs, xs + 0.5))


def test_table_rejects_heavy_truncation():
    xs = np.linspace(-8.5, 8.5, 3001)
    with pytest.raises(ValidationError):
        make_transform("user-table", table=(xs, xs**3), k_max=2)


# ---------------------------------------------------------------------------
# subordinated covariance


def test_subordinated_identity_is_base_covariance(smooth):
    tr = make_transform("identity")
    t = np.linspace(0.0, 12.0, 49)
    assert np.allclose(
        subordinated_covariance(tr.coeffs, smooth, t), covariance(smooth, t),
        atol=1e-10,
    )


def test_subordinated_square_is_squared_covariance(seasonal):
    tr = make_transform("hermite-polynomial", coeffs=[0.0, 0.0, 2.0])
    t = np.linspace(0.0, 12.0, 49)
    expected = 2.0 * covariance(seasonal, t) ** 2
    assert np.allclose(subordinated_covariance(tr.coeffs, seasonal, t), expected, atol=1e-12)


def test_subordinated_at_zero_is_eg2(mixed):
    for kind in ("identity", "cube", "centered-absolute-value"):
        tr = make_transform(kind)
        val = subordinated_covariance(tr.coeffs, mixed, 0.0)
        assert abs(val - tr.eg2) <= tr.parseval_gap + 1e-10


def test_subordinated_dominated_by_rank_power(mixed):
    tr = make_transform("centered-absolute-value")
    t = np.linspace(0.0, 40.0, 401)
    vals = subordinated_covariance(tr.coeffs, mixed, t)
    bound = tr.eg2 * np.abs(covariance(mixed, t)) ** tr.rank
    assert np.all(np.abs(vals) <= bound + 1e-12)


def test_subordinated_matches_monte_carlo(smooth):
    tr = make_transform("hermite-polynomial", coeffs=[0.0, 1.0, -0.8, 0.9])
    lag = 1.7
    r = covariance(smooth, lag)
    theory = subordinated_covariance(tr.coeffs, smooth, lag)
    rng = np.random.default_rng(5)
    n = 1_000_000
    x = rng.standard_normal(n)
    y = r * x + math.sqrt(1.0 - r * r) * rng.standard_normal(n)
    prod = tr.g(x) * tr.g(y)
    se = float(prod.std(ddof=1)) / math.sqrt(n)
    assert abs(float(prod.mean()) - theory) <= 3.0 * se


def test_subordinated_pair_expectation_via_isserlis(smooth):
    # E[H_2(X) H_2(Y)] = 2 r^2 for a correlated standard normal pair
    r = covariance(smooth, 0.8)
    corr = np.array([[1.0, r], [r, 1.0]])
    direct = isserlis_hermite_moment((2, 2), corr)
    tr = make_transform("hermite-polynomial", coeffs=[0.0, 0.0, 2.0])
    series = subordinated_covariance(tr.coeffs, smooth, 0.8)
    assert abs(direct - 2.0 * r * r) < 1e-12
    assert abs(series - 2.0 * r * r) < 1e-12
