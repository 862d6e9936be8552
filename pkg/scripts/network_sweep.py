"""Spectral network tests against the generic search on random flow graphs.

Random disjoint-cycle graphs with integer edge delays are analysed by the
cycle-wise tests and by the strip search on the assembled delay system;
merge graphs check that the topological obstruction is always reported.
"""

from __future__ import annotations

import argparse
import collections
import time
from dataclasses import dataclass

import numpy as np

from hyperctrl.controllability import approx_controllability_report
from hyperctrl.network import (
    build_network_system,
    network_approx_test,
    network_exact_test,
    random_cycle_graph,
    random_merge_graph,
)


@dataclass
class Config:
    graphs: int = 50
    max_cycles: int = 3
    max_size: int = 3
    control_density: float = 0.6
    seed: int = 0


def run(cfg: Config) -> dict:
    rng = np.random.default_rng(cfg.seed)
    table: collections.Counter = collections.Counter()
    exact: collections.Counter = collections.Counter()
    t_net = t_gen = 0.0
    for _ in range(cfg.graphs):
        sizes = list(rng.integers(1, cfg.max_size + 1, size=int(rng.integers(1, cfg.max_cycles + 1))))
        k = int(sum(sizes))
        gamma = rng.normal(size=(k, 1)) * (rng.random((k, 1)) < cfg.control_density)
        g = random_cycle_graph(rng, sizes, delays=rng.integers(1, 4, size=k).astype(float),
                               damping=float(rng.choice([0.0, 0.5])), gamma=gamma)
        _, sys = build_network_system(g)
        t0 = time.perf_counter()
        net = network_approx_test(g).verdict
        exact[network_exact_test(g).verdict] += 1
        t1 = time.perf_counter()
        gen = approx_controllability_report(sys).verdict
        t_gen += time.perf_counter() - t1
        t_net += t1 - t0
        table[(net, gen)] += 1
    obstructed = sum(network_approx_test(random_merge_graph(rng)).witness.get("type") == "obstruction"
                     for _ in range(cfg.graphs))
    return {"table": table, "exact": exact, "obstructed": obstructed, "t_net": t_net, "t_gen": t_gen}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    for name, val in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(val), default=val)
    cfg = Config(**vars(ap.parse_args()))
    out = run(cfg)
    print("cycle graphs: network verdict -> generic verdict")
    for (a, b), c in sorted(out["table"].items()):
        print(f"  {a:>16} -> {b:<16} {c}")
    print("exact (L1) network verdicts:", dict(out["exact"]))
    print(f"merge graphs with obstruction witness: {out['obstructed']}/{cfg.graphs}")
    print(f"time: network tests {out['t_net']:.2f} s, generic search {out['t_gen']:.2f} s")


if __name__ == "__main__":
    main()
