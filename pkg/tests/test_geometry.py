import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_pca.errors import InvalidInputError
from torus_pca.geometry import (
    TWO_PI,
    angular_spread,
    circular_frechet,
    circular_intrinsic_mean,
    gap_antipode_center,
    gap_center,
    signed_circle_diff,
    torus_distance,
    torus_frechet_variance,
    wrap_angle,
)

angles = st.floats(0.0, TWO_PI, exclude_max=True, allow_nan=False)

# independent oracles, frozen: brute-force grid minimisation of the
# Fréchet function (10⁶ points) and direct evaluation of the metric
CIRC_MEAN_6_028 = 6.28159566129687
DIST_EXAMPLE = 0.2590631458408529


def frechet_grid(values, m=1_000_000):
    grid = np.arange(m) * (TWO_PI / m)
    best, arg = np.inf, None
    for chunk in np.array_split(grid, 50):
        d = np.abs(chunk[:, None] - np.asarray(values)[None, :])
        d = np.minimum(d, TWO_PI - d)
        f = (d * d).sum(axis=1)
        k = int(np.argmin(f))
        if f[k] < best:
            best, arg = f[k], chunk[k]
    return arg, best


class TestWrapAngle:
    def test_examples(self):
        assert wrap_angle(0.0) == 0.0
        assert wrap_angle(TWO_PI) == 0.0
        assert wrap_angle(-0.1) == pytest.approx(TWO_PI - 0.1, abs=1e-15)

    def test_tiny_negative_stays_in_range(self):
        assert 0.0 <= wrap_angle(-1e-18) < TWO_PI

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            wrap_angle(np.inf)
        with pytest.raises(InvalidInputError):
            wrap_angle([0.0, np.nan])

    @given(st.floats(-1e6, 1e6, allow_nan=False))
    def test_range_and_congruence(self, x):
        w = wrap_angle(x)
        assert 0.0 <= w < TWO_PI
        k = (x - w) / TWO_PI
        assert abs(k - round(k)) < 1e-6


class TestSignedDiff:
    def test_examples(self):
        assert signed_circle_diff(0.1, 6.2) == pytest.approx(0.1 + TWO_PI - 6.2, abs=1e-14)
        assert signed_circle_diff(0.1, 6.2) == pytest.approx(0.18319, abs=1e-5)
        assert signed_circle_diff(np.pi, 0.0) == np.pi
        assert signed_circle_diff(0.0, np.pi) == np.pi

    @given(angles, angles)
    def test_range(self, a, b):
        d = signed_circle_diff(a, b)
        assert -np.pi < d <= np.pi
        k = (a - b - d) / TWO_PI
        assert abs(k - round(k)) < 1e-9


class TestTorusDistance:
    def test_examples(self):
        p = np.array([1.0, 2.0, 3.0])
        assert torus_distance(p, p) == 0.0
        assert torus_distance([np.pi, 0.0], [0.0, np.pi]) == pytest.approx(np.pi * np.sqrt(2), abs=1e-14)
        assert torus_distance([0.1, 6.2], [6.2, 0.1]) == pytest.approx(DIST_EXAMPLE, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            torus_distance([0.0, 1.0], [0.0, 1.0, 2.0])

    def test_metric_axioms_on_random_triples(self):
        rng = np.random.default_rng(0)
        for D in (2, 3, 7):
            P, Q, R = (rng.uniform(0, TWO_PI, (10_000, D)) for _ in range(3))
            pq, qp = torus_distance(P, Q), torus_distance(Q, P)
            assert np.array_equal(pq, qp)
            assert np.all(pq <= torus_distance(P, R) + torus_distance(R, Q) + 1e-12)
            assert np.all(pq >= 0)

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        P, Q = rng.uniform(0, TWO_PI, (2, 1000, 4))
        shift = np.zeros(4)
        shift[2] = 2.5
        moved = torus_distance(wrap_angle(P + shift), wrap_angle(Q + shift))
        assert np.max(np.abs(moved - torus_distance(P, Q))) < 1e-12

    @given(st.lists(angles, min_size=2, max_size=2), st.lists(angles, min_size=2, max_size=2))
    def test_zero_iff_equal(self, p, q):
        d = torus_distance(p, q)
        if p == q:
            assert d == 0.0
        elif np.max(np.abs(np.subtract(p, q))) > 1e-150:  # beyond squaring underflow
            assert d > 0.0


class TestIntrinsicMean:
    def test_examples(self):
        assert circular_intrinsic_mean([0.0, np.pi / 2]) == pytest.approx(np.pi / 4, abs=1e-12)
        assert circular_intrinsic_mean([2.0, 2.0, 2.0]) == pytest.approx(2.0, abs=1e-12)
        assert circular_intrinsic_mean([6.0, 0.28]) == pytest.approx(CIRC_MEAN_6_028, abs=1e-5)

    def test_agrees_with_grid_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = wrap_angle(rng.uniform(0, TWO_PI) + rng.normal(0, 1.2, 15))
            arg, fmin = frechet_grid(x, 200_000)
            fit = circular_frechet(x)
            assert fit.variance <= fmin + 1e-9
            assert abs(signed_circle_diff(fit.mean, arg)) < 1e-4

    def test_tie_goes_to_smallest_angle(self):
        fit = circular_frechet([0.0, np.pi])
        assert fit.degenerate
        assert fit.mean == pytest.approx(np.pi / 2)

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            circular_intrinsic_mean([])

    @given(angles, st.floats(0.0, np.pi / 2 - 1e-3))
    def test_symmetric_pair(self, mu, a):
        m = circular_intrinsic_mean(wrap_angle(np.array([mu + a, mu - a])))
        assert abs(signed_circle_diff(m, mu)) < 1e-9

    @settings(max_examples=50)
    @given(st.lists(angles, min_size=1, max_size=30))
    def test_frechet_minimality(self, sample):
        m = circular_intrinsic_mean(sample)
        best = angular_spread(sample, m)
        for mu in np.random.default_rng(len(sample)).uniform(0, TWO_PI, 100):
            assert best <= angular_spread(sample, mu) + 1e-9


class TestGapCenter:
    def test_examples(self):
        assert gap_antipode_center([0.0, np.pi / 2]) == pytest.approx(np.pi / 4, abs=1e-12)
        g = gap_center([0.0, np.pi])
        assert g.center == pytest.approx(3 * np.pi / 2, abs=1e-12)
        assert g.degenerate

    def test_uniform_grid_uses_first_gap(self):
        x = np.arange(6) * TWO_PI / 6
        g = gap_center(x)
        assert g.degenerate
        assert g.center == pytest.approx(wrap_angle(TWO_PI / 12 + np.pi), abs=1e-12)

    def test_needs_two(self):
        with pytest.raises(InvalidInputError):
            gap_antipode_center([1.0])


class TestSpread:
    def test_examples(self):
        mu = 1.3
        assert angular_spread([mu, mu], mu) == 0.0
        assert angular_spread([mu + 0.1, mu - 0.1], mu) == pytest.approx(0.02, abs=1e-14)
        assert angular_spread(wrap_angle(np.array([mu + np.pi] * 2)), mu) == pytest.approx(
            2 * np.pi**2, abs=1e-12
        )


class TestFrechetVariance:
    def test_examples(self):
        v0, p = torus_frechet_variance([[0.5, 2.0]])
        assert v0 == 0.0 and np.allclose(p, [0.5, 2.0])
        v0, p = torus_frechet_variance([[0.0, 0.0], [0.2, 0.0]])
        assert v0 == pytest.approx(0.02, abs=1e-12)
        assert np.allclose(p, [0.1, 0.0])

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            torus_frechet_variance(np.empty((0, 2)))

    def test_sum_of_coordinate_variances(self):
        rng = np.random.default_rng(3)
        X = wrap_angle(rng.uniform(0, TWO_PI, 4) + rng.normal(0, 1.0, (40, 4)))
        v0, p = torus_frechet_variance(X)
        parts = sum(circular_frechet(X[:, k]).variance for k in range(4))
        assert abs(v0 - parts) < 1e-9
        d = torus_distance(X, p)
        assert abs(np.sum(d * d) - v0) < 1e-9
