"""Leray projector, its complement and the Riesz transforms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from besov_euler_lab.experiments import random_band_limited
from besov_euler_lab.grid import (
    advection,
    divergence,
    gradient,
    l2_norm_spectral,
    physical_field,
    spectral_field,
    to_spectral,
)
from besov_euler_lab.leray import complement, project, projector_diagnostics, riesz


def random_vector(grid, seed):
    return random_band_limited(grid, np.random.default_rng(seed))


class TestProjector:
    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=15, deadline=None)
    def test_diagnostics(self, cube16, seed):
        d = projector_diagnostics(random_vector(cube16, seed))
        assert d.passed
        assert max(d.div_residual, d.idempotence_residual, d.complement_residual) <= 1e-10

    def test_gradient_is_annihilated(self, cube16, rng):
        phi = random_band_limited(cube16, rng, components=1)
        grad = gradient(phi)
        assert l2_norm_spectral(project(grad)) <= 1e-12 * l2_norm_spectral(grad)
        assert l2_norm_spectral(complement(grad) - grad) <= 1e-12 * l2_norm_spectral(grad)

    def test_divergence_free_field_is_fixed(self, cube16, rng):
        u = project(random_vector(cube16, 1))
        assert l2_norm_spectral(project(u) - u) <= 1e-12 * l2_norm_spectral(u)

    def test_mean_mode_kept_by_projector(self, cube16):
        data = np.zeros((3, *cube16.spectral_shape), dtype=complex)
        data[:, 0, 0, 0] = [1.0, 2.0, 3.0]
        u = spectral_field(cube16, data)
        np.testing.assert_allclose(project(u).data, data)
        assert not complement(u).data.any()

    def test_physical_input_returns_physical(self, cube16, rng):
        u = physical_field(cube16, rng.standard_normal((3, *cube16.shape)))
        assert not project(u).is_spectral

    def test_requires_vector(self, cube16, rng):
        with pytest.raises(ValueError):
            project(random_band_limited(cube16, rng, components=1))

    def test_orthogonality(self, cube16):
        v = random_vector(cube16, 2)
        pv, qv = project(v), complement(v)
        inner = np.sum((pv.data * np.conj(qv.data)).real * cube16.rfft_weights)
        assert abs(inner) <= 1e-12 * float(np.sum(np.abs(v.data) ** 2))


class TestQSymmetry:
    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=10, deadline=None)
    def test_symmetric_for_divergence_free_pairs(self, cube16, seed):
        rng = np.random.default_rng(seed)
        u = project(random_band_limited(cube16, rng))
        v = project(random_band_limited(cube16, rng))
        a = complement(advection(u, v, check=False))
        b = complement(advection(v, u, check=False))
        assert l2_norm_spectral(a - b) <= 1e-10 * l2_norm_spectral(a)


class TestRiesz:
    def test_sum_of_squares_is_minus_identity(self, cube16, rng):
        f = random_band_limited(cube16, rng, components=1)
        data = f.data.copy()
        data[:, 0, 0, 0] = 0.0
        f = spectral_field(cube16, data)
        total = sum(riesz(riesz(f, a), a).data for a in (1, 2, 3))
        np.testing.assert_allclose(total, -f.data, atol=1e-12)

    def test_complement_from_riesz(self, cube16):
        v = random_vector(cube16, 3)
        q = complement(v)
        for i in range(3):
            comp = -sum(riesz(riesz(v.component(j + 1), i + 1), j + 1).data for j in range(3))
            np.testing.assert_allclose(comp[0], q.data[i], atol=1e-12)

    def test_axis_validation(self, cube16, rng):
        with pytest.raises(ValueError):
            riesz(random_band_limited(cube16, rng, components=1), 4)

    def test_divergence_of_projection_vanishes_physically(self, cube16, rng):
        u = physical_field(cube16, rng.standard_normal((3, *cube16.shape)))
        d = divergence(project(to_spectral(u)))
        assert np.max(np.abs(d.data)) <= 1e-10
