"""Random instances shared by the verification suite, tests and scripts."""

from __future__ import annotations

import numpy as np

from .piecewise import PiecewiseConstant
from .system import DifferenceSystem, HyperbolicSystem


def random_matrix(rng: np.random.Generator, n: int, m: int | None = None, scale: float = 1.0) -> np.ndarray:
    return scale * rng.normal(size=(n, n if m is None else m)) / np.sqrt(n)


def incommensurable_delays(rng: np.random.Generator, n: int, lo: float = 0.5, hi: float = 1.5) -> np.ndarray:
    """Uniform draws; ratios are irrational with probability one."""
    return rng.uniform(lo, hi, size=n)


def random_difference_system(rng: np.random.Generator, n: int, m: int = 1,
                             delays=None, scale: float = 1.0) -> DifferenceSystem:
    tau = incommensurable_delays(rng, n) if delays is None else np.asarray(delays, dtype=float)
    return DifferenceSystem(random_matrix(rng, n, scale=scale), rng.normal(size=(n, m)), tau)


def random_step(rng: np.random.Generator, lo: float, hi: float, pieces: int,
                low: float, high: float) -> PiecewiseConstant:
    cuts = np.sort(rng.uniform(lo, hi, size=pieces - 1))
    return PiecewiseConstant(np.concatenate([[lo], cuts, [hi]]), rng.uniform(low, high, size=pieces))


def random_hyperbolic_system(rng: np.random.Generator, n: int, m: int = 1, n_plus: int | None = None,
                             pieces: int = 3, damping: float = 0.5) -> HyperbolicSystem:
    """Transport system with random step speeds of both signs and step dampings."""
    n_plus = int(rng.integers(0, n + 1)) if n_plus is None else n_plus
    speeds = []
    for i in range(n):
        mag = random_step(rng, 0.0, 1.0, pieces, 0.6, 2.0)
        speeds.append(mag if i < n_plus else -mag)
    damps = [random_step(rng, 0.0, 1.0, pieces, -damping, damping) for _ in range(n)]
    return HyperbolicSystem(tuple(speeds), tuple(damps), random_matrix(rng, n),
                            rng.normal(size=(n, m)), n_plus)
