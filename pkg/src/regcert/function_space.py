"""Sampled functions on the unit interval.

Uniform grids, the cumulative (Volterra) integration operator, sup-norm
distances, grid estimates of smoothness norms, and bounded-noise models.
All values are plain float arrays; objects are immutable after construction
and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    GridMismatchError,
    InvalidExponentError,
    InvalidGridError,
    InvalidModelError,
)
from .seeding import rng_from

# Full O(n^2) pair scans are only run up to this many nodes; larger grids are
# subsampled (the scan then remains a lower estimate, see holder_norm).
PAIR_SCAN_CAP = 4097

NOISE_MODELS = ("exact-shift", "alternating", "spike", "smooth", "seeded-uniform")


@dataclass(frozen=True)
class Grid:
    """Uniform grid x_i = i/(n-1) on [0, 1], endpoints exact."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 3:
            raise InvalidGridError(f"grid needs an integer node count >= 3, got {self.n!r}")

    @property
    def dx(self) -> float:
        return 1.0 / (self.n - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(0.0, 1.0, self.n)
        x.flags.writeable = False
        return x


@dataclass(frozen=True)
class SampledFunction:
    """Real values attached to the nodes of a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise InvalidGridError(
                f"expected {self.grid.n} values for this grid, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidGridError("sampled values must all be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "SampledFunction":
        return cls(grid, np.asarray([fn(x) for x in grid.nodes], dtype=float))


@dataclass(frozen=True)
class HolderSpec:
    """Smoothness class parameters: exponent a in [0, 2] and norm bound m_a > 0."""

    a: float
    m_a: float

    def __post_init__(self):
        if not 0.0 <= self.a <= 2.0:
            raise InvalidExponentError(f"exponent must lie in [0, 2], got {self.a}")
        if not self.m_a > 0.0:
            raise InvalidExponentError(f"norm bound must be positive, got {self.m_a}")


@dataclass(frozen=True)
class NoisyData:
    """Noisy samples f_delta with sup-norm noise radius delta.

    delta = 0 is allowed as the degenerate exact-data case; operations that
    need strictly positive noise check that themselves.
    """

    f_delta: SampledFunction
    delta: float
    model: str
    seed: int = 0

    def __post_init__(self):
        if self.model not in NOISE_MODELS:
            raise InvalidModelError(
                f"unknown noise model {self.model!r}; choose one of {NOISE_MODELS}"
            )
        if self.delta < 0.0:
            raise InvalidModelError(f"noise radius must be >= 0, got {self.delta}")


def integrate_volterra(u: SampledFunction) -> SampledFunction:
    """Cumulative trapezoid integral of u, anchored at zero at x = 0.

    Exact on affine integrands; linear in u.
    """
    v = u.values
    steps = 0.5 * u.grid.dx * (v[1:] + v[:-1])
    out = np.concatenate(([0.0], np.cumsum(steps)))
    return SampledFunction(u.grid, out)


def sup_distance(f: SampledFunction, g: SampledFunction) -> float:
    """max_i |f(x_i) - g(x_i)| for two functions on one grid."""
    if f.grid != g.grid:
        raise GridMismatchError(f"grids differ: {f.grid.n} vs {g.grid.n} nodes")
    return float(np.max(np.abs(f.values - g.values)))


def grid_derivative(u: SampledFunction) -> np.ndarray:
    """Centered-difference derivative, one-sided at the endpoints."""
    v = u.values
    dx = u.grid.dx
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    d[0] = (v[1] - v[0]) / dx
    d[-1] = (v[-1] - v[-2]) / dx
    return d


def _pair_quotient(x: np.ndarray, w: np.ndarray, b: float, cap: int = PAIR_SCAN_CAP) -> float:
    """sup over node pairs of |w_i - w_j| / |x_i - x_j|**b, 0 <= b <= 1.

    b = 0 and b = 1 admit exact O(n) reductions (oscillation, and the
    telescoping bound that puts the maximum on an adjacent pair).  For
    fractional b the scan is over all pairs, subsampled to ``cap`` nodes on
    larger grids, which keeps the result a lower estimate.
    """
    n = len(x)
    if b == 0.0:
        return float(np.max(w) - np.min(w))
    if b == 1.0:
        return float(np.max(np.abs(np.diff(w)) / np.diff(x)))
    if n > cap:
        idx = np.unique(np.round(np.linspace(0, n - 1, cap)).astype(int))
        x = x[idx]
        w = w[idx]
        n = len(idx)
    best = 0.0
    block = 512
    for i0 in range(0, n - 1, block):
        i1 = min(i0 + block, n - 1)
        dw = np.abs(w[np.newaxis, :] - w[i0:i1, np.newaxis])
        dxp = x[np.newaxis, :] - x[i0:i1, np.newaxis]
        upper = dxp > 0.0
        q = np.where(upper, dw / np.where(upper, dxp, 1.0) ** b, 0.0)
        best = max(best, float(q.max()))
    return best


def holder_norm(u: SampledFunction, a: float) -> float:
    """Grid estimate of the order-a smoothness norm of u.

    For 0 <= a <= 1 this is the sup of |u| plus the largest difference
    quotient with exponent a over node pairs.  For 1 < a <= 2 it is
    sup(|u| + |u'|) plus the largest exponent-(a-1) quotient of the discrete
    derivative u'.  Both are lower estimates of the continuum norm; they
    converge from below under grid refinement.
    """
    if not 0.0 <= a <= 2.0:
        raise InvalidExponentError(f"exponent must lie in [0, 2], got {a}")
    x = u.grid.nodes
    v = u.values
    if a <= 1.0:
        return _pair_quotient(x, v, a) + float(np.max(np.abs(v)))
    d = grid_derivative(u)
    return float(np.max(np.abs(v) + np.abs(d))) + _pair_quotient(x, d, a - 1.0)


def add_noise(f: SampledFunction, delta: float, model: str, seed: int = 0) -> NoisyData:
    """Perturb f by a noise profile with sup-norm radius exactly delta.

    Models:
      exact-shift     f + delta at every node
      alternating     f + delta * (-1)**i
      spike           f + delta at one seeded node
      smooth          f + delta * cos(2 pi x)
      seeded-uniform  i.i.d. uniform in [-delta, delta], rescaled so the
                      largest deviation equals delta
    """
    if model not in NOISE_MODELS:
        raise InvalidModelError(
            f"unknown noise model {model!r}; choose one of {NOISE_MODELS}"
        )
    if delta < 0.0:
        raise InvalidModelError(f"noise radius must be >= 0, got {delta}")
    if delta == 0.0:
        return NoisyData(SampledFunction(f.grid, f.values), 0.0, model, seed)
    n = f.grid.n
    if model == "exact-shift":
        e = np.full(n, delta)
    elif model == "alternating":
        e = delta * (-1.0) ** np.arange(n)
    elif model == "spike":
        e = np.zeros(n)
        e[int(rng_from(seed).integers(0, n))] = delta
    elif model == "smooth":
        e = delta * np.cos(2.0 * np.pi * f.grid.nodes)
    else:  # seeded-uniform
        e = rng_from(seed).uniform(-delta, delta, size=n)
        peak = np.max(np.abs(e))
        if peak == 0.0:
            e[0] = delta
        else:
            e *= delta / peak
    return NoisyData(SampledFunction(f.grid, f.values + e), float(delta), model, seed)


def write_function_csv(sf: SampledFunction, path) -> None:
    """Write one node per row as ``x,value`` with round-trippable precision."""
    with open(path, "w", newline="\n") as fh:
        fh.write(function_csv_text(sf))


def function_csv_text(sf: SampledFunction) -> str:
    lines = ["x,value"]
    for x, v in zip(sf.grid.nodes, sf.values):
        lines.append(f"{float(x)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"


def read_function_csv(path) -> SampledFunction:
    """Read a ``x,value`` CSV produced by write_function_csv."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,value":
            raise InvalidGridError(f"expected header 'x,value', got {header!r}")
        values = [float(line.split(",")[1]) for line in fh if line.strip()]
    return SampledFunction(Grid(len(values)), np.asarray(values))
