"""Compare the strip search with the augmented Kalman test.

Draws random systems with integer delays, runs both tests and tabulates the
confusion counts.  A second pass over incommensurable delays reports how
often the strip search reaches a verdict at all.
"""

from __future__ import annotations

import argparse
import collections
import time
from dataclasses import dataclass

import numpy as np

from hyperctrl.controllability import (
    SearchOptions,
    approx_controllability_report,
    exact_controllability_report,
    kalman_verdict,
)
from hyperctrl.system import DifferenceSystem


@dataclass
class Config:
    systems: int = 100
    max_n: int = 3
    max_delay: int = 3
    sparsity: float = 0.3
    seed: int = 0
    grid: int = 64


def draw(rng, cfg: Config, integer_delays: bool) -> DifferenceSystem:
    n = int(rng.integers(1, cfg.max_n + 1))
    K = rng.normal(size=(n, n))
    B = rng.normal(size=(n, 1))
    K[rng.random((n, n)) < cfg.sparsity] = 0.0
    B[rng.random((n, 1)) < 0.5] = 0.0
    if integer_delays:
        tau = rng.integers(1, cfg.max_delay + 1, size=n).astype(float)
    else:
        tau = rng.uniform(0.5, 1.5, size=n)
    return DifferenceSystem(K, B, tau)


def run(cfg: Config) -> tuple[collections.Counter, collections.Counter, float]:
    rng = np.random.default_rng(cfg.seed)
    opts = SearchOptions(grid=cfg.grid)
    pairs: collections.Counter = collections.Counter()
    t0 = time.perf_counter()
    for _ in range(cfg.systems):
        sys = draw(rng, cfg, True)
        pairs[(kalman_verdict(sys)[0], approx_controllability_report(sys, opts).verdict)] += 1
    generic: collections.Counter = collections.Counter()
    for _ in range(cfg.systems):
        sys = draw(rng, cfg, False)
        generic[("approx", approx_controllability_report(sys, opts).verdict)] += 1
        generic[("exact", exact_controllability_report(sys, opts).verdict)] += 1
    return pairs, generic, time.perf_counter() - t0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    for name, val in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(val), default=val)
    cfg = Config(**vars(ap.parse_args()))
    pairs, generic, dt = run(cfg)
    print("integer delays: Kalman verdict -> strip verdict")
    for (k, h), c in sorted(pairs.items()):
        print(f"  {k:>16} -> {h:<16} {c}")
    bad = sum(c for (k, h), c in pairs.items() if k != h)
    print(f"  disagreements: {bad}/{cfg.systems}")
    print("incommensurable delays:")
    for (kind, v), c in sorted(generic.items()):
        print(f"  {kind:>6} {v:<16} {c}")
    print(f"elapsed {dt:.1f} s")


if __name__ == "__main__":
    main()
