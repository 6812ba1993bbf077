import math

import numpy as np
import pytest

from delaywave import spectral

from conftest import random_band_limited


def test_eigenvalues_closed_form(model_pi):
    k = np.arange(1, 65)
    assert np.allclose(model_pi.eigenvalues, k.astype(float) ** 2, rtol=1e-14)


def test_eigenvalues_general_length():
    m = spectral.build_model(length=2.0, modes=8, quad_points=64,
                             damping_region=[(0.0, 2.0)],
                             delay_region=[(0.0, 2.0)],
                             damping_coefficient=0.1)
    k = np.arange(1, 9)
    assert np.allclose(m.eigenvalues, (k * math.pi / 2.0) ** 2)


def test_orthonormality_under_quadrature(model_pi):
    gram = (model_pi.basis * model_pi.weights[:, None]).T @ model_pi.basis
    assert np.max(np.abs(gram - np.eye(64))) <= 1e-10


def test_parseval(model_pi):
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = random_band_limited(rng, 64)
        grid = model_pi.to_grid(u)
        quad = model_pi.grid_norm_sq(grid)
        assert abs(quad - model_pi.h_norm(u) ** 2) <= 1e-9 * quad


def test_round_trip_projection(model_pi):
    rng = np.random.default_rng(1)
    u = random_band_limited(rng, 64)
    assert np.max(np.abs(model_pi.from_grid(model_pi.to_grid(u)) - u)) < 1e-10


def test_a_half_norm_exact(model_pi):
    u = np.zeros(64)
    u[0] = 1.0
    u[3] = -0.5
    expected = math.sqrt(1.0 * 1.0 + 16.0 * 0.25)
    assert model_pi.a_half_norm(u) == pytest.approx(expected, rel=1e-15)


def test_mask_full_domain_is_identity(model_pi):
    rng = np.random.default_rng(2)
    u = random_band_limited(rng, 64)
    assert np.max(np.abs(model_pi.mask_apply("damping", u) - u)) <= 1e-9


def test_mask_disjoint_supports():
    # field supported in (0, L/2), region (L/2, L) -> 0 at grid level
    m = spectral.build_model(length=math.pi, modes=16, quad_points=256,
                             damping_region=[(math.pi / 2, math.pi)],
                             delay_region=[(0.0, math.pi)],
                             damping_coefficient=0.1)
    left = (m.x < math.pi / 2).astype(float)
    bump = left * np.sin(2 * m.x) ** 2
    masked = m.damping_mask * bump
    assert np.max(np.abs(masked)) == 0.0


def test_mask_grid_idempotent(model_partial):
    m = model_partial
    rng = np.random.default_rng(3)
    grid = m.to_grid(random_band_limited(rng, 64))
    once = m.damping_mask * grid
    assert np.array_equal(m.damping_mask * once, once)


def test_norm_b_rule():
    m = spectral.build_model(length=1.0, modes=4, quad_points=32,
                             damping_region=[(0.0, 1.0)],
                             delay_region=[(0.2, 0.5)],
                             damping_coefficient=0.1)
    assert m.norm_b() == 1.0
    empty = spectral.build_model(length=1.0, modes=4, quad_points=32,
                                 damping_region=[(0.0, 1.0)],
                                 delay_region=[],
                                 damping_coefficient=0.1)
    assert empty.norm_b() == 0.0


def test_validation_errors():
    with pytest.raises(ValueError):
        spectral.build_model(length=-1.0, modes=4, quad_points=32,
                             damping_region=[], delay_region=[],
                             damping_coefficient=0.1)
    with pytest.raises(ValueError):
        spectral.build_model(length=1.0, modes=16, quad_points=32,
                             damping_region=[], delay_region=[],
                             damping_coefficient=0.1)  # n_q < 4N
    with pytest.raises(ValueError):
        spectral.build_model(length=1.0, modes=4, quad_points=32,
                             damping_region=[(0.5, 1.5)], delay_region=[],
                             damping_coefficient=0.1)  # region outside domain
    with pytest.raises(ValueError):
        spectral.build_model(length=1.0, modes=4, quad_points=32,
                             damping_region=[], delay_region=[],
                             damping_coefficient=-0.1)


def test_state_norm(model_pi):
    u = np.zeros(64)
    v = np.zeros(64)
    u[1] = 0.5   # lambda_2 = 4
    v[0] = 1.0
    assert model_pi.state_norm(u, v) == pytest.approx(math.sqrt(4 * 0.25 + 1.0))
