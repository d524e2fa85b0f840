import numpy as np
import pytest

from regcert import Grid, HolderSpec, SampledFunction, holder_norm
from regcert.seeding import rng_from


def admissible_spline(grid: Grid, spec: HolderSpec, seed: int) -> SampledFunction:
    """Random natural cubic spline scaled just inside the class ball."""
    from scipy.interpolate import CubicSpline

    rng = rng_from(seed, 40961)
    knots = np.linspace(0.0, 1.0, 9)
    cs = CubicSpline(knots, rng.standard_normal(9), bc_type="natural")
    raw = cs(grid.nodes)
    sf = SampledFunction(grid, raw)
    return SampledFunction(grid, raw * (0.999 * spec.m_a / holder_norm(sf, spec.a)))


def scaled_truth(grid: Grid, spec: HolderSpec, values: np.ndarray) -> SampledFunction:
    """Scale a profile to sit just inside the class ball."""
    sf = SampledFunction(grid, values)
    return SampledFunction(grid, values * (0.999 * spec.m_a / holder_norm(sf, spec.a)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
