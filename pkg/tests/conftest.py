import math

import numpy as np
import pytest

from delaywave import spectral


@pytest.fixture(scope="session")
def model_pi():
    """Standard L = pi model with full-domain damping and delay regions."""
    return spectral.build_model(length=math.pi, modes=64, quad_points=257,
                                damping_region=[(0.0, math.pi)],
                                delay_region=[(0.0, math.pi)],
                                damping_coefficient=0.5)


@pytest.fixture(scope="session")
def model_partial():
    """Damping and delay confined to subintervals."""
    return spectral.build_model(length=math.pi, modes=64, quad_points=257,
                                damping_region=[(0.0, 1.5)],
                                delay_region=[(0.6, 2.5)],
                                damping_coefficient=0.3)


def random_band_limited(rng, n_modes, amplitude=1.0):
    """Random modal coefficients with a k^-2 envelope."""
    k = np.arange(1, n_modes + 1)
    c = rng.standard_normal(n_modes) / k ** 2
    return amplitude * c / np.linalg.norm(c)
