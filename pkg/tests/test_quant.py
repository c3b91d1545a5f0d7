import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fxsvm.quant import QGrid, quantize_nearest, sample_quant_noise, truncate_floor


def scan_nearest(v, g):
    """Exhaustive oracle: closest grid point, ties to even index."""
    pts = g.points()
    c = min(max(v, g.lo), g.hi)
    d = np.abs(pts - c)
    best = np.flatnonzero(d == d.min())
    if best.size == 1:
        return pts[best[0]]
    ks = [round(pts[i] / g.step) for i in best]
    return next(pts[i] for i, k in zip(best, ks) if k % 2 == 0)


def scan_floor(v, g):
    pts = g.points()
    c = min(max(v, g.lo), g.hi)
    return pts[pts <= c].max()


grids = st.sampled_from([QGrid(b) for b in (1, 2, 3, 5, 8)] + [QGrid.signed(b) for b in (1, 2, 4, 6)]
                        + [QGrid.signed(6, 2)])
values = st.floats(-5, 5, allow_nan=False)


class TestQGrid:
    def test_step_is_power_of_two(self):
        for b in range(1, 41):
            assert QGrid(b).step == 2.0 ** -(b - 1)

    def test_rejects_bad_edges(self):
        with pytest.raises(ValueError):
            QGrid(3, -1.0, 0.3)
        with pytest.raises(ValueError):
            QGrid(3, 1.0, -1.0)
        with pytest.raises(ValueError):
            QGrid(0)

    def test_signed_range(self):
        g = QGrid.signed(3)
        assert (g.lo, g.hi) == (-1.0, 0.75)
        assert list(g.points()) == [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75]

    def test_headroom(self):
        assert QGrid.with_headroom(6, 0.3).lo == -1.0
        assert QGrid.with_headroom(6, 1.5).lo == -2.0
        g = QGrid.with_headroom(6, 1.0)
        # 1.0 itself must be reachable within half a step
        assert g.hi + g.step / 2 >= 1.0


class TestQuantizeNearest:
    def test_examples(self):
        g = QGrid(3)
        assert quantize_nearest(0.3, g) == 0.25 == scan_nearest(0.3, g)
        assert quantize_nearest(0.0, g) == 0.0
        assert quantize_nearest(1.7, g) == 1.0

    def test_ties_to_even(self):
        g = QGrid(3)  # step 0.25
        assert quantize_nearest(0.125, g) == 0.0
        assert quantize_nearest(0.375, g) == 0.5
        assert quantize_nearest(-0.125, g) == 0.0

    def test_vectorized(self):
        out = quantize_nearest(np.array([0.3, -0.3, 2.0]), QGrid(3))
        assert list(out) == [0.25, -0.25, 1.0]

    @given(values, grids)
    def test_matches_scan(self, v, g):
        assert quantize_nearest(v, g) == scan_nearest(v, g)

    @given(values, grids)
    def test_error_and_idempotence(self, v, g):
        q = quantize_nearest(v, g)
        if g.lo <= v <= g.hi:
            assert abs(q - v) <= g.step / 2
        assert quantize_nearest(q, g) == q
        assert g.contains(q)

    @given(values, values, grids)
    def test_monotone(self, a, b, g):
        lo, hi = sorted((a, b))
        assert quantize_nearest(lo, g) <= quantize_nearest(hi, g)


class TestTruncateFloor:
    def test_examples(self):
        g = QGrid(3)
        assert truncate_floor(0.3, g) == 0.25 == scan_floor(0.3, g)
        assert truncate_floor(-0.3, g) == -0.5 == scan_floor(-0.3, g)
        assert truncate_floor(0.5, g) == 0.5

    @given(values, grids)
    def test_matches_scan(self, v, g):
        assert truncate_floor(v, g) == scan_floor(v, g)

    @given(values, grids)
    def test_error_and_idempotence(self, v, g):
        q = truncate_floor(v, g)
        if g.lo <= v <= g.hi:
            assert q <= v < q + g.step
        assert truncate_floor(q, g) == q


@given(st.lists(st.integers(-2**20, 2**20), min_size=1, max_size=8), st.integers(1, 20),
       st.integers(0, 12))
def test_grid_arithmetic_is_exact(ks, bits, shift):
    # sums of grid values scaled by powers of two round-trip through scaled integers
    step = QGrid(bits).step
    vals = [k * step for k in ks]
    total = sum(math.ldexp(v, -shift) for v in vals)
    scale = 2 ** (bits - 1 + shift)
    assert total * scale == sum(ks)
    assert float(total * scale).is_integer()


class TestNoise:
    def test_moments(self):
        g = QGrid(3)
        q = sample_quant_noise(g, 10**6, seed=1)
        assert abs(q.mean()) <= 3 * g.step / math.sqrt(12 * 10**6)
        assert abs(q.var() - g.step**2 / 12) <= 0.02 * g.step**2 / 12
        assert q.min() >= -g.step / 2 and q.max() <= g.step / 2

    def test_deterministic(self):
        g = QGrid(5)
        assert np.array_equal(sample_quant_noise(g, 17, seed=3), sample_quant_noise(g, 17, seed=3))
        assert not np.array_equal(sample_quant_noise(g, 17, seed=3), sample_quant_noise(g, 17, seed=4))

    def test_count_validated(self):
        with pytest.raises(ValueError):
            sample_quant_noise(QGrid(3), 0, seed=0)
