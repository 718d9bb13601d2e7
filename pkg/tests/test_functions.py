"""Function-model tests: the bandlimited catalog, divided differences
with the coincident-point derivative rule, and the resolvent weighting.
"""

import math

import numpy as np
import pytest

from opint import (
    CapabilityError,
    ValidationError,
    catalog,
    coordinate_x,
    dilate,
    divided_difference_first,
    divided_difference_second,
    f_sharp,
    from_callable,
    function_sum,
    parse_function_spec,
    plane_wave,
    random_bandlimited,
    scale,
    sup_norm_interval,
    trig_poly,
    zero_function,
)

SAMPLE_POINTS = [(-2.3, 0.7), (0.0, 0.0), (1.1, -4.2), (17.0, 5.5), (0.25, 0.25)]


def x_squared():
    """Trig-free test hook f(x, y) = x^2 with analytic partials."""
    return from_callable(
        lambda s, t: np.asarray(s, dtype=float) ** 2 + 0j + 0 * np.asarray(t, dtype=float),
        partial_x=lambda s, t: 2.0 * np.asarray(s, dtype=float) + 0j + 0 * np.asarray(t, dtype=float),
        partial_y=lambda s, t: np.zeros(np.broadcast_shapes(np.shape(s), np.shape(t)), dtype=complex),
        label="x^2",
    )


def y_squared():
    return from_callable(
        lambda s, t: np.asarray(t, dtype=float) ** 2 + 0j + 0 * np.asarray(s, dtype=float),
        partial_x=lambda s, t: np.zeros(np.broadcast_shapes(np.shape(s), np.shape(t)), dtype=complex),
        partial_y=lambda s, t: 2.0 * np.asarray(t, dtype=float) + 0j + 0 * np.asarray(s, dtype=float),
        label="y^2",
    )


class TestCatalog:
    def test_plane_wave_metadata(self):
        f = plane_wave(1, 1)
        assert f.support_radius == pytest.approx(math.sqrt(2))
        iv = sup_norm_interval(f)
        assert iv.lo == iv.hi == pytest.approx(1.0)

    def test_dilate_scales_frequency(self):
        f = dilate(plane_wave(1, 0), 2)
        assert f.fourier_modes == ((2.0, 0.0, 1 + 0j),)
        assert f.support_radius == pytest.approx(2.0)

    def test_sum_takes_max_radius(self):
        f = plane_wave(1, 0) + plane_wave(0, 3)
        assert f.support_radius == pytest.approx(3.0)

    def test_cancellation_gives_zero_function(self):
        f = function_sum(plane_wave(1, 0), scale(plane_wave(1, 0), -1))
        assert f.fourier_modes == ()
        assert f.support_radius == 0.0
        assert f.evaluate(0.3, 0.4) == 0

    def test_modes_match_evaluation(self):
        """fourier_modes invariant: evaluate equals the mode sum."""
        f = random_bandlimited(3.0, n_modes=5, seed=8)
        for s, t in SAMPLE_POINTS:
            direct = sum(
                c * np.exp(1j * (a * s + b * t)) for a, b, c in f.fourier_modes
            )
            assert abs(f.evaluate(s, t) - direct) <= 1e-12

    def test_partials_match_finite_differences(self):
        """partials invariant: central differences at 1e-6 relative."""
        f = random_bandlimited(2.0, n_modes=4, seed=9)
        h = 1e-6
        for s, t in SAMPLE_POINTS:
            fd_x = (f.evaluate(s + h, t) - f.evaluate(s - h, t)) / (2 * h)
            fd_y = (f.evaluate(s, t + h) - f.evaluate(s, t - h)) / (2 * h)
            assert abs(f.partial_x(s, t) - fd_x) <= 1e-6 * max(1.0, abs(fd_x))
            assert abs(f.partial_y(s, t) - fd_y) <= 1e-6 * max(1.0, abs(fd_y))

    def test_catalog_document(self):
        f = catalog(
            {
                "type": "sum",
                "children": [
                    {"type": "plane_wave", "modes": [{"a": 1, "b": 0}]},
                    {
                        "type": "dilate",
                        "lambda": 2,
                        "children": [{"type": "plane_wave", "modes": [{"a": 0, "b": 1.5}]}],
                    },
                ],
            }
        )
        assert f.support_radius == pytest.approx(3.0)

    def test_catalog_document_errors(self):
        with pytest.raises(ValidationError):
            catalog({"type": "nope"})
        with pytest.raises(ValidationError):
            catalog({"modes": []})
        with pytest.raises(ValidationError):
            catalog({"type": "dilate", "children": []})

    def test_shorthand_parser(self):
        f = parse_function_spec("sum(plane_wave:1,0;dilate(plane_wave:0,1;3))")
        assert f.support_radius == pytest.approx(3.0)
        g = parse_function_spec("scale(plane_wave:2,0;0.5)")
        assert g.fourier_modes == ((2.0, 0.0, 0.5 + 0j),)
        with pytest.raises(ValidationError):
            parse_function_spec("spiral:1")

    def test_vectorized_evaluation(self):
        f = random_bandlimited(2.0, n_modes=3, seed=10)
        s = np.linspace(-1, 1, 7)[:, None]
        t = np.linspace(0, 2, 5)[None, :]
        grid = f.evaluate(s, t)
        assert grid.shape == (7, 5)
        assert grid[2, 3] == pytest.approx(f.evaluate(float(s[2, 0]), float(t[0, 3])))


class TestDividedDifferenceFirst:
    def test_polynomial_quotient(self):
        # (1^2 - 3^2) / (1 - 3) = 4
        assert divided_difference_first(x_squared(), 1.0, 3.0, 0.5) == pytest.approx(4.0)

    def test_coincident_uses_derivative(self):
        # d/dx x^2 at 2 = 4
        assert divided_difference_first(x_squared(), 2.0, 2.0, 0.5) == pytest.approx(4.0)

    def test_plane_wave_against_direct_quotient(self):
        f = plane_wave(1, 0)
        got = divided_difference_first(f, 0.0, math.pi, 0.0)
        direct = (np.exp(0j) - np.exp(1j * math.pi)) / (0.0 - math.pi)
        assert got == pytest.approx(direct, abs=1e-15)
        assert got == pytest.approx(-2.0 / math.pi, abs=1e-12)

    def test_symmetry_in_arguments(self):
        f = random_bandlimited(2.0, n_modes=4, seed=11)
        rng = np.random.default_rng(12)
        for _ in range(50):
            x1, x2, y = rng.uniform(-3, 3, size=3)
            if x1 == x2:
                continue
            a = divided_difference_first(f, x1, x2, y)
            b = divided_difference_first(f, x2, x1, y)
            assert a == pytest.approx(b, abs=1e-15)

    def test_quotient_converges_to_partial(self):
        """For gaps down to 1e-6 the quotient approaches partial_x at the
        midpoint with error bounded by the curvature scale sigma^2 ||f||."""
        f = random_bandlimited(2.0, n_modes=4, seed=13)
        hi = sup_norm_interval(f).hi
        c_bound = 2.0**2 * hi
        x, y = 0.37, -1.24
        for gap in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
            got = divided_difference_first(f, x + gap / 2, x - gap / 2, y)
            ref = f.partial_x(x, y)
            assert abs(got - ref) <= c_bound * gap + 1e-12

    def test_linearity(self):
        f = random_bandlimited(2.0, n_modes=3, seed=14)
        g = random_bandlimited(1.0, n_modes=3, seed=15)
        h = function_sum(f, scale(g, 2.5))
        rng = np.random.default_rng(16)
        for _ in range(25):
            x1, x2, y = rng.uniform(-2, 2, size=3)
            combo = divided_difference_first(f, x1, x2, y) + 2.5 * divided_difference_first(g, x1, x2, y)
            assert divided_difference_first(h, x1, x2, y) == pytest.approx(combo, abs=1e-12)

    def test_mean_value_bound(self):
        """|quotient| <= sigma * (coefficient-mass upper bound on ||f||)."""
        rng = np.random.default_rng(17)
        for seed, sigma in enumerate((1.0, 2.0, 4.0)):
            f = random_bandlimited(sigma, n_modes=4, seed=30 + seed)
            bound = sigma * sup_norm_interval(f).hi * (1 + 1e-6)
            for _ in range(200):
                x1, x2, y = rng.uniform(-5, 5, size=3)
                if x1 == x2:
                    continue
                assert abs(divided_difference_first(f, x1, x2, y)) <= bound

    def test_missing_partial_raises(self):
        f = from_callable(lambda s, t: np.asarray(s, dtype=float) + 0j)
        with pytest.raises(CapabilityError, match="partial"):
            divided_difference_first(f, 1.0, 1.0, 0.0)

    def test_broadcasts_with_mixed_coincidence(self):
        f = x_squared()
        x1 = np.array([1.0, 2.0])
        x2 = np.array([3.0, 2.0])
        out = divided_difference_first(f, x1, x2, 0.0)
        np.testing.assert_allclose(out, [4.0, 4.0])


class TestDividedDifferenceSecond:
    def test_polynomial_quotient(self):
        assert divided_difference_second(y_squared(), 0.1, 1.0, 3.0) == pytest.approx(4.0)

    def test_coincident_uses_derivative(self):
        assert divided_difference_second(y_squared(), 0.1, 2.0, 2.0) == pytest.approx(4.0)

    def test_symmetry(self):
        f = random_bandlimited(2.0, n_modes=4, seed=18)
        rng = np.random.default_rng(19)
        for _ in range(50):
            x, y1, y2 = rng.uniform(-3, 3, size=3)
            if y1 == y2:
                continue
            assert divided_difference_second(f, x, y1, y2) == pytest.approx(
                divided_difference_second(f, x, y2, y1), abs=1e-15
            )


class TestDispatcher:
    def test_kind_selects_slot(self):
        from opint import DividedDifferenceKind, divided_difference

        f = x_squared()
        first = divided_difference(DividedDifferenceKind.FIRST, f, 1.0, 3.0, 0.5)
        assert first == pytest.approx(4.0)
        g = y_squared()
        second = divided_difference(DividedDifferenceKind.SECOND, g, 0.5, 1.0, 3.0)
        assert second == pytest.approx(4.0)


class TestFSharp:
    def test_weight_at_zero(self):
        g = f_sharp(trig_poly([(0, 0, 1)]))
        assert g.evaluate(5.0, 0.0) == pytest.approx(1.0)

    def test_weight_at_one(self):
        g = f_sharp(trig_poly([(0, 0, 1)]))
        assert g.evaluate(5.0, 1.0) == pytest.approx((1 + 1j) / 2)

    def test_roundtrip_identity(self):
        f = random_bandlimited(2.0, n_modes=4, seed=20)
        g = f_sharp(f)
        rng = np.random.default_rng(21)
        s = rng.uniform(-50, 50, size=1000)
        t = rng.uniform(-50, 50, size=1000)
        back = np.asarray(g.evaluate(s, t)) * (1 - 1j * t)
        np.testing.assert_allclose(back, np.asarray(f.evaluate(s, t)), atol=1e-13)

    def test_metadata_dropped(self):
        g = f_sharp(plane_wave(1, 0))
        assert g.fourier_modes is None
        assert g.support_radius is None

    def test_partials_by_quotient_rule(self):
        f = random_bandlimited(1.5, n_modes=3, seed=22)
        g = f_sharp(f)
        h = 1e-6
        for s, t in SAMPLE_POINTS:
            fd_x = (g.evaluate(s + h, t) - g.evaluate(s - h, t)) / (2 * h)
            fd_y = (g.evaluate(s, t + h) - g.evaluate(s, t - h)) / (2 * h)
            assert abs(g.partial_x(s, t) - fd_x) <= 1e-6 * max(1.0, abs(fd_x))
            assert abs(g.partial_y(s, t) - fd_y) <= 1e-6 * max(1.0, abs(fd_y))


class TestSupNormInterval:
    def test_zero_function(self):
        iv = sup_norm_interval(zero_function())
        assert (iv.lo, iv.hi) == (0.0, 0.0)

    def test_single_mode_is_tight(self):
        iv = sup_norm_interval(plane_wave(3, 4, coeff=2.0))
        assert iv.lo == iv.hi == pytest.approx(2.0)

    def test_bracket_orders_and_bounds_samples(self):
        f = random_bandlimited(2.0, n_modes=5, seed=23)
        iv = sup_norm_interval(f, samples=512)
        assert iv.lo <= iv.hi
        rng = np.random.default_rng(24)
        s = rng.uniform(-20, 20, size=400)
        t = rng.uniform(-20, 20, size=400)
        assert np.abs(np.asarray(f.evaluate(s, t))).max() <= iv.hi + 1e-12

    def test_requires_metadata(self):
        with pytest.raises(CapabilityError):
            sup_norm_interval(coordinate_x())
