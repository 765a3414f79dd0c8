import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from semijulia.fields import GridSpec, ScalarField, rasterize
from semijulia.juliasets import (all_preimages, boundary_cloud, fiber_julia_cloud, filled_julia_mask,
                                 khat_core_mask, pull_back, semigroup_julia_cloud, tvar_julia_mask)
from semijulia.polycore import GeneratorPair, Word
from semijulia.potential import escape_radius, green_values
from semijulia.randdyn import compute_T

from conftest import BASILICA, Z2, poly

BOX = GridSpec.square(2.0, 512)
LOG2 = math.log(2)


class TestFilledMask:
    def test_unit_disk_area(self):
        m = filled_julia_mask(Z2, BOX)
        assert m.count / m.bits.size == pytest.approx(math.pi / 16, abs=0.01)

    def test_monomial_disk_area(self):
        m = filled_julia_mask(poly(0, 0, 0, 2), BOX)
        assert m.count / m.bits.size == pytest.approx(math.pi / 32, abs=0.01)

    def test_basilica_contains_cycle(self):
        m = filled_julia_mask(BASILICA, GridSpec.square(2.0, 513))
        i, j, _ = m.grid.nearest_index(np.array([0, -1]))
        assert m.bits[j, i].all()


class TestBoundaryCloud:
    def test_unit_circle(self):
        pts = boundary_cloud(Z2, 5000, seed=1).points
        assert np.max(np.abs(np.abs(pts) - 1)) <= 1e-6

    def test_monomial_circle(self):
        pts = boundary_cloud(poly(0, 0, 0, 2), 5000, seed=2).points
        assert np.max(np.abs(np.abs(pts) - 2 ** -0.5)) <= 1e-6

    def test_basilica_two_sided(self):
        pts = boundary_cloud(BASILICA, 400, seed=3).points
        # J is repelling: round-off leaves values of order 1e-13
        assert np.all(green_values(BASILICA, pts, 1000)[0] <= 1e-9)
        ring = pts[:, None] + 1e-3 * np.exp(2j * np.pi * np.arange(16) / 16)[None, :]
        outside = green_values(BASILICA, ring, 1000)[0] > 1e-8
        assert outside.any(axis=1).all()

    def test_deterministic(self):
        a = boundary_cloud(BASILICA, 1000, seed=9).points
        b = boundary_cloud(BASILICA, 1000, seed=9).points
        c = boundary_cloud(BASILICA, 1000, seed=10).points
        assert np.array_equal(a, b) and not np.array_equal(a, c)


def _cantor_intervals(level):
    iv = [(-0.5 * LOG2, 0.0)]
    for _ in range(level):
        iv = [(a / 3, b / 3) for a, b in iv] + [((a - LOG2) / 3, (b - LOG2) / 3) for a, b in iv]
    return np.array(iv)


class TestSemigroupCloud:
    def test_annulus(self, annulus):
        r = np.abs(semigroup_julia_cloud(annulus, 20000, seed=0).points)
        assert r.min() >= 1 - 1e-3 and r.max() <= 2 + 1e-3

    def test_cantor_radial_structure(self, cantor3):
        t = np.log(np.abs(semigroup_julia_cloud(cantor3, 20000, seed=0).points))
        iv = _cantor_intervals(5)
        inside = ((t[:, None] >= iv[:, 0] - 1e-9) & (t[:, None] <= iv[:, 1] + 1e-9)).any(axis=1)
        assert inside.all()
        # both first-level pieces are populated
        assert (t > -LOG2 / 6).any() and (t < -LOG2 / 3).any()

    def test_duplicated_generator(self):
        pts = semigroup_julia_cloud(GeneratorPair(Z2, Z2), 3000, seed=4).points
        assert np.max(np.abs(np.abs(pts) - 1)) <= 1e-6

    def test_map_weighted_law(self, cantor3):
        pts = semigroup_julia_cloud(cantor3, 20000, seed=3, branch_law="map-weighted", p=0.99).points
        near = np.abs(np.abs(pts[5000:]) - 1) <= 1e-3
        assert near.mean() >= 0.95

    def test_bad_law(self, cantor3):
        with pytest.raises(ValueError):
            semigroup_julia_cloud(cantor3, 10, seed=0, branch_law="nope")

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_annulus_any_seed(self, seed):
        from semijulia.cli import preset_pair
        r = np.abs(semigroup_julia_cloud(preset_pair("annulus"), 600, seed=seed).points)
        assert r.min() >= 1 - 1e-9 and r.max() <= 2 + 1e-9


class TestFiber:
    def test_constant_sequences(self, cantor3):
        one = fiber_julia_cloud(cantor3, Word(()), Word((1,)), 2000, seed=0).points
        two = fiber_julia_cloud(cantor3, Word(()), Word((2,)), 2000, seed=0).points
        assert np.max(np.abs(np.abs(one) - 1)) < 1e-6
        assert np.max(np.abs(np.abs(two) - 2 ** -0.5)) < 1e-6

    def test_preperiodic(self, cantor3):
        pts = fiber_julia_cloud(cantor3, Word((2,)), Word((1,)), 2000, seed=0).points
        assert np.max(np.abs(np.abs(pts) - 0.5 ** (1 / 3))) < 1e-6

    def test_period_required(self, cantor3):
        with pytest.raises(ValueError):
            fiber_julia_cloud(cantor3, Word((1,)), Word(()), 10, seed=0)


class TestPreimageHelpers:
    def test_pull_back_inverts_composition(self, cantor3):
        rng = np.random.default_rng(0)
        z = np.exp(1j * np.linspace(0, 6, 40))
        y = pull_back(z, [cantor3.h2, cantor3.h1], rng)   # h1∘h2 applied to y gives z
        np.testing.assert_allclose(cantor3.h1(cantor3.h2(y)), z, atol=1e-9)

    def test_all_preimages(self):
        pre = all_preimages(np.array([4.0, 9.0]), Z2)
        assert sorted(np.abs(pre)) == pytest.approx([2, 2, 3, 3])


class TestTvarMask:
    def test_annulus(self, annulus_T):
        m = tvar_julia_mask(annulus_T, 1e-3)
        r = np.abs(annulus_T.grid.points())
        assert m.bits[(r > 1.05) & (r < 1.95)].mean() >= 0.99
        assert not m.bits[(r < 0.9) | (r > 2.1)].any()

    def test_constant_field(self):
        f = ScalarField(BOX, np.full(BOX.shape, 0.3))
        assert tvar_julia_mask(f, 1e-6).count == 0

    def test_matches_cloud_for_cantor(self, cantor3):
        grid = GridSpec.square(escape_radius(cantor3), 512)
        T = compute_T(cantor3, 0.5, grid, tol=1e-7)
        mask = tvar_julia_mask(T, 1e-3).points()
        cloud = rasterize(semigroup_julia_cloud(cantor3, 100000, seed=0), grid).points()
        xy = lambda z: np.column_stack([z.real, z.imag])
        d1 = cKDTree(xy(cloud)).query(xy(mask))[0].max()
        d2 = cKDTree(xy(mask)).query(xy(cloud))[0].max()
        assert max(d1, d2) <= 2 * grid.pixel_diameter


class TestCore:
    def test_inside_both_filled_sets(self, cantor3):
        grid = GridSpec.square(escape_radius(cantor3), 256)
        core = khat_core_mask(cantor3, grid)
        r = np.abs(grid.points())
        assert core.count > 0
        assert np.all(r[core.bits] < 2 ** -0.5)

    def test_forward_invariant(self, cantor3):
        grid = GridSpec.square(escape_radius(cantor3), 256)
        core = khat_core_mask(cantor3, grid)
        pts = core.points()
        for h in cantor3.maps:
            i, j, ok = grid.nearest_index(h(pts))
            assert ok.all() and core.bits[j, i].all()
