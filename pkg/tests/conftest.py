import numpy as np
import pytest

from finsler_area import metrics


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def zoo_specs():
    """Representative metric zoo members used across test modules."""
    return [
        metrics.euclidean(3),
        metrics.randers([0.0, 0.0, 0.5]),
        metrics.randers([0.2, -0.1, 0.3]),
        metrics.matsumoto([0.0, 0.0, 0.4]),
        metrics.two_order([0.0, 0.1, 0.25]),
        metrics.perturbed_quartic(1.0, dim=3),
        metrics.perturbed_quartic(0.5, b=[0.1, 0.0, 0.2]),
    ]


def random_directions(rng, count, dim=3):
    y = rng.normal(size=(count, dim))
    # keep directions away from the origin for stable relative errors
    return y + 0.1 * np.sign(y)
