"""Grid lattice, transforms, calculus and L^p quadrature."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from besov_euler_lab.grid import (
    BesovParams,
    Field,
    GridSpec,
    PRESETS,
    advection,
    as_physical,
    create_grid,
    dealias,
    derivative,
    divergence,
    energy_above_band,
    get_preset,
    gradient,
    hermitian_residual,
    inner_product,
    l2_norm_spectral,
    lp_norm,
    physical_field,
    pointwise_product,
    spectral_field,
    to_physical,
    to_spectral,
)


def plane_wave(grid, k, axis=0):
    """cos(k x_axis) sampled on the grid."""
    return physical_field(grid, np.broadcast_to(np.cos(k * grid.mesh(axis)), grid.shape)[None].copy())


class TestGridSpec:
    def test_rejects_odd_points(self):
        with pytest.raises(ValueError):
            GridSpec((15, 16, 16), (1.0, 1.0, 1.0))

    def test_rejects_nonpositive_spacing(self):
        with pytest.raises(ValueError):
            GridSpec((16, 16, 16), (1.0, 0.0, 1.0))

    def test_rejects_bad_dealias_fraction(self):
        with pytest.raises(ValueError):
            GridSpec((16, 16, 16), (1.0, 1.0, 1.0), dealias_fraction=1.5)

    def test_dict_round_trip(self):
        spec = GridSpec((32, 16, 8), (0.5, 1.0, 2.0))
        assert GridSpec.from_dict(spec.as_dict()) == spec

    def test_presets_are_known(self):
        assert {"ci", "desk"} <= set(PRESETS)
        with pytest.raises(ValueError):
            get_preset("nope")

    def test_ci_preset_shape(self):
        ci = get_preset("ci")
        assert ci.spec.points_per_axis == (1024, 32, 32)
        assert ci.n_values == (3,)


class TestLattice:
    def test_period_and_spacing(self, small_grid):
        g = small_grid
        np.testing.assert_allclose(g.period, 2 * np.pi * 16)
        np.testing.assert_allclose(g.spacing * np.array(g.shape), g.period)

    def test_frequencies_are_multiples_of_spacing(self, small_grid):
        for axis, k in enumerate(small_grid.xi_1d):
            q = k / small_grid.freq_spacing[axis]
            np.testing.assert_allclose(q, np.round(q), atol=1e-12)

    def test_dealias_limit(self, small_grid):
        np.testing.assert_allclose(small_grid.dealias_limit, 2 / 3 * small_grid.xi_max)

    def test_lattice_index(self, small_grid):
        assert small_grid.lattice_index(0, 1.0) == 16
        assert small_grid.lattice_index(0, -1.0) == 256 - 16
        assert small_grid.lattice_index(0, 1 / 32) is None
        assert small_grid.lattice_index(2, -0.5) is None


class TestTransforms:
    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_round_trip(self, cube16, seed):
        data = np.random.default_rng(seed).standard_normal((3, *cube16.shape))
        f = physical_field(cube16, data)
        np.testing.assert_allclose(to_physical(to_spectral(f)).data, data, atol=1e-12)

    def test_parseval(self, cube16, rng):
        f = physical_field(cube16, rng.standard_normal((1, *cube16.shape)))
        assert l2_norm_spectral(f) == pytest.approx(lp_norm(f, 2), rel=1e-12)

    def test_inner_product_matches_quadrature(self, cube16, rng):
        a = physical_field(cube16, rng.standard_normal((3, *cube16.shape)))
        b = physical_field(cube16, rng.standard_normal((3, *cube16.shape)))
        quad = cube16.cell_volume * float(np.sum(a.data * b.data))
        assert inner_product(a, b) == pytest.approx(quad, rel=1e-12)

    def test_real_fields_are_hermitian(self, cube16, rng):
        f = physical_field(cube16, rng.standard_normal((1, *cube16.shape)))
        assert hermitian_residual(f) < 1e-12

    def test_field_data_is_read_only(self, cube16):
        f = physical_field(cube16, np.zeros((1, *cube16.shape)))
        with pytest.raises(ValueError):
            f.data[0, 0, 0, 0] = 1.0

    def test_shape_mismatch(self, cube16):
        with pytest.raises(ValueError):
            Field(cube16, np.zeros((2, *cube16.shape)))

    def test_spectral_physical_addition(self, cube16, rng):
        a = physical_field(cube16, rng.standard_normal((1, *cube16.shape)))
        s = to_spectral(a) + a
        np.testing.assert_allclose(as_physical(s).data, 2 * a.data, atol=1e-12)


class TestCalculus:
    def test_derivative_of_plane_wave(self, small_grid):
        k = 0.75
        f = plane_wave(small_grid, k)
        d = as_physical(derivative(f, 1)).data[0]
        expected = -k * np.sin(k * small_grid.mesh(0)) * np.ones(small_grid.shape)
        np.testing.assert_allclose(d, expected, atol=1e-12)

    def test_gradient_of_constant_vanishes(self, cube16):
        f = physical_field(cube16, np.ones((1, *cube16.shape)))
        assert np.max(np.abs(gradient(f).data)) < 1e-12

    def test_divergence_of_curl_form_vanishes(self, cube16, rng):
        psi = to_spectral(physical_field(cube16, rng.standard_normal((1, *cube16.shape))))
        d1 = derivative(psi, 1).data[0]
        d2 = derivative(psi, 2).data[0]
        u = spectral_field(cube16, np.stack([-d2, d1, np.zeros_like(d1)]))
        assert np.max(np.abs(divergence(u).data)) < 1e-10

    def test_axis_validation(self, cube16):
        f = physical_field(cube16, np.zeros((1, *cube16.shape)))
        with pytest.raises(ValueError):
            derivative(f, 0)


class TestProducts:
    def test_dealias_zeroes_outside_box(self, cube16, rng):
        f = dealias(physical_field(cube16, rng.standard_normal((1, *cube16.shape))))
        assert energy_above_band(f) < 1e-28

    def test_product_of_waves(self, small_grid):
        a = plane_wave(small_grid, 0.5)
        b = plane_wave(small_grid, 0.25)
        prod = pointwise_product(a, b)
        x = small_grid.mesh(0)
        expected = 0.5 * (np.cos(0.75 * x) + np.cos(0.25 * x)) * np.ones(small_grid.shape)
        np.testing.assert_allclose(prod.data[0], expected, atol=1e-12)

    def test_advection_of_plane_wave(self, small_grid):
        one = np.ones((1, *small_grid.shape))
        u = physical_field(small_grid, np.concatenate([one, 0 * one, 0 * one]))
        v = plane_wave(small_grid, 0.5)
        adv = as_physical(advection(u, v)).data[0]
        expected = -0.5 * np.sin(0.5 * small_grid.mesh(0)) * np.ones(small_grid.shape)
        np.testing.assert_allclose(adv, expected, atol=1e-12)

    def test_advection_needs_vector(self, cube16):
        f = physical_field(cube16, np.zeros((1, *cube16.shape)))
        with pytest.raises(ValueError):
            advection(f, f)


class TestLpNorm:
    def test_constant_field(self, small_grid):
        f = physical_field(small_grid, 2.0 * np.ones((1, *small_grid.shape)))
        vol = small_grid.volume
        assert lp_norm(f, 1) == pytest.approx(2 * vol, rel=1e-12)
        assert lp_norm(f, 2) == pytest.approx(2 * math.sqrt(vol), rel=1e-12)
        assert lp_norm(f, math.inf) == 2.0

    def test_cosine_l2(self, small_grid):
        f = plane_wave(small_grid, 0.5)
        assert lp_norm(f, 2) == pytest.approx(math.sqrt(small_grid.volume / 2), rel=1e-12)

    def test_rejects_p_below_one(self, cube16):
        f = physical_field(cube16, np.ones((1, *cube16.shape)))
        with pytest.raises(ValueError):
            lp_norm(f, 0.5)

    @given(p=st.floats(1.0, 8.0), c=st.floats(0.1, 10.0))
    @settings(max_examples=25, deadline=None)
    def test_homogeneity(self, cube16, p, c):
        data = np.random.default_rng(7).standard_normal((3, *cube16.shape))
        f = physical_field(cube16, data)
        assert lp_norm(f * c, p) == pytest.approx(c * lp_norm(f, p), rel=1e-10)


class TestBesovParams:
    def test_rejects_small_indices(self):
        with pytest.raises(ValueError):
            BesovParams(1.0, 0.5, 2.0)

    def test_admissible_range(self):
        assert BesovParams(3.0, 2.0, 2.0).admissible
        assert not BesovParams(2.0, 2.0, 2.0).admissible
        assert BesovParams(2.5, 2.0, 1.0).admissible
        assert not BesovParams(2.5, 2.0, 2.0).admissible
        assert not BesovParams(5.0, 1.0, 2.0).admissible
