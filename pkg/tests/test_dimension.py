import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semijulia.dimension import (bowen_dimension, box_dimension, dim_lower_bound, pair_dimension_report,
                                 preimage_tree_lognorms, z_sum)
from semijulia.errors import BracketInvalid, DegenerateFit
from semijulia.fields import GridSpec, PixelMask, PointCloud
from semijulia.juliasets import boundary_cloud, semigroup_julia_cloud
from semijulia.polycore import GeneratorPair
from semijulia.io_render import _jsonable

from conftest import Z2

LOG6_LOG3 = math.log(6) / math.log(3)


class TestZSum:
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_counts_at_zero(self, cantor3, n):
        assert z_sum(cantor3, 1.0, 0.0, n) == pytest.approx(6 ** n, rel=1e-12)

    def test_level_one_by_hand(self, cantor3):
        t = 1.3
        a = 2 ** (-1 / 3)                  # |y| for 2y^3 = 1
        n1 = 3.0                           # z^3 on the unit circle
        n2 = 6 * a * a * (1 + a * a) / 2   # |6y^2|(1+|y|^2)/(1+|h(y)|^2)
        want = 3 * n1 ** -t + 3 * n2 ** -t
        assert z_sum(cantor3, 1.0, t, 1) == pytest.approx(want, rel=1e-12)

    def test_duplicated_by_hand(self):
        pair = GeneratorPair(Z2, Z2)
        nrm = 4 * 5 / 17                   # y = ±2
        assert z_sum(pair, 4.0, 2.0, 1) == pytest.approx(2 * nrm ** -2, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 2), st.floats(0, 2), st.floats(0, 1))
    def test_log_sum_convex_in_t(self, a, b, lam):
        from semijulia.cli import preset_pair
        pair = preset_pair("cantor3")
        f = lambda t: math.log(z_sum(pair, 1.0, t, 3))
        mid = lam * a + (1 - lam) * b
        assert f(mid) <= lam * f(a) + (1 - lam) * f(b) + 1e-9

    def test_leaf_budget(self, cantor3):
        with pytest.raises(MemoryError):
            preimage_tree_lognorms(cantor3, 1.0, 12, leaf_budget=1000)


class TestBowen:
    def test_cantor3(self, cantor3):
        rep = bowen_dimension(cantor3, 1.0, 8)
        assert rep.delta_estimate == pytest.approx(LOG6_LOG3, abs=0.05)
        assert rep.delta_estimate < 2
        assert rep.word_depths_used == [7, 8]
        assert rep.richardson_gap == pytest.approx(abs(rep.delta_estimate - rep.delta_plain))

    def test_bracket_zero_to_two(self, cantor3):
        rep = bowen_dimension(cantor3, 0.9j, 6, t_bracket=(0.0, 2.05))
        assert 0 < rep.delta_estimate < 2

    def test_bad_bracket(self, cantor3):
        with pytest.raises(BracketInvalid):
            bowen_dimension(cantor3, 1.0, 5, t_bracket=(1.8, 2.0))

    def test_duplicated_circle(self):
        rep = bowen_dimension(GeneratorPair(Z2, Z2), 4.0, 12)
        assert rep.delta_estimate == pytest.approx(1.0, abs=0.05)
        assert any("duplicated" in w for w in rep.warnings)

    def test_report_serializes(self, cantor3):
        cloud = semigroup_julia_cloud(cantor3, 20000, seed=0)
        rep = pair_dimension_report(cantor3, 1.0, cloud, 6)
        d = json.loads(json.dumps(_jsonable(rep)))
        for k in ("delta_estimate", "lower_bound", "box_dim", "bisection_trace", "budgets", "warnings"):
            assert k in d


class TestLowerBound:
    def test_examples(self):
        assert dim_lower_bound(3, 3) == pytest.approx(1.63093, abs=1e-5)
        assert dim_lower_bound(2, 3) == pytest.approx(math.log(5) / (0.4 * math.log(2) + 0.6 * math.log(3)))
        assert dim_lower_bound(2, 3) == pytest.approx(1.7187, abs=1e-4)
        assert dim_lower_bound(2, 2) == pytest.approx(2.0)

    def test_degree_two_pair_flagged(self, annulus):
        rep = bowen_dimension(annulus, 1.5, 6)
        assert any("(2,2)" in w for w in rep.warnings)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 9), st.integers(2, 9))
    def test_symmetric_and_bounded(self, a, b):
        v = dim_lower_bound(a, b)
        assert v == pytest.approx(dim_lower_bound(b, a))
        assert 1 < v <= 2 + 1e-12


class TestBoxDimension:
    def test_filled_annulus(self):
        g = GridSpec.square(2.0, 512)
        r = np.abs(g.points())
        dim, r2 = box_dimension(PixelMask(g, (r >= 1) & (r <= 2)))
        assert dim == pytest.approx(2.0, abs=0.1)

    def test_unit_circle(self):
        dim, r2 = box_dimension(boundary_cloud(Z2, 100000, seed=0))
        assert dim == pytest.approx(1.0, abs=0.05) and r2 > 0.99

    def test_cantor_cloud(self, cantor3):
        dim, _ = box_dimension(semigroup_julia_cloud(cantor3, 200000, seed=0))
        assert dim == pytest.approx(1.63, abs=0.1)

    def test_explicit_range(self):
        pts = np.exp(2j * np.pi * np.arange(4096) / 4096)
        dim, _ = box_dimension(PointCloud(pts), scale_range=(2, 7))
        assert dim == pytest.approx(1.0, abs=0.1)

    def test_degenerate(self):
        with pytest.raises(DegenerateFit):
            box_dimension(np.array([1 + 1j, 1 + 1j]))
        with pytest.raises(DegenerateFit):
            box_dimension(np.array([0j]))
