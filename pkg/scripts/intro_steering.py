"""Steer the two-component swap system between random states.

Prints the sampled terminal error and control size per trial and optionally
writes the last trajectory as CSV.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hyperctrl.fixtures import INTRO_TAU, intro_system, steering_control
from hyperctrl.solution import Trajectory, export_trajectory_csv
from hyperctrl.system import BoundaryState


@dataclass
class Config:
    trials: int = 10
    samples: int = 200
    tau: float = INTRO_TAU
    seed: int = 0
    csv: Path | None = None


def run(cfg: Config) -> list[dict]:
    rng = np.random.default_rng(cfg.seed)
    sys = intro_system(cfg.tau)
    rows = []
    traj = None
    for trial in range(cfg.trials):
        start, target = BoundaryState.random(rng, sys.delays), BoundaryState.random(rng, sys.delays)
        t0 = time.perf_counter()
        u = steering_control(start, target)
        traj = Trajectory(sys, start, u, sys.T_star)
        i = rng.integers(2, size=cfg.samples)
        s = rng.uniform(-sys.delays[i], 0.0)
        err = max(abs(traj.eval(int(a), sys.T_star + b) - target[int(a)](b)) for a, b in zip(i, s))
        rows.append({"trial": trial, "error": err, "control_l2": u.lq_norm(2.0),
                     "seconds": time.perf_counter() - t0})
    if cfg.csv is not None and traj is not None:
        export_trajectory_csv(traj, cfg.csv, 200.0)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=Config.trials)
    ap.add_argument("--samples", type=int, default=Config.samples)
    ap.add_argument("--tau", type=float, default=Config.tau)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--csv", type=Path, default=None)
    cfg = Config(**vars(ap.parse_args()))
    print(f"{'trial':>5} {'max error':>12} {'|u|_2':>10} {'seconds':>9}")
    for r in run(cfg):
        print(f"{r['trial']:>5} {r['error']:12.3e} {r['control_l2']:10.4f} {r['seconds']:9.4f}")


if __name__ == "__main__":
    main()
