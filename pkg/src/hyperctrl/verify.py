"""Self-check suite over the identities the library relies on.

Every check compares two independent computations.  ``inject_fault=True``
runs the suite with a sign error in the ``Xi`` recursion; the checks that
consume ``Xi`` must then fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fixtures import intro_system, steering_control
from .network import cycle_data, cycle_decomposition, build_network_system, random_cycle_graph, spectral_diagnostics
from .sampling import random_difference_system, random_hyperbolic_system, random_matrix
from .solution import (
    ControlSignal,
    Trajectory,
    check_characteristics,
    endpoint_apply,
    endpoint_dual_apply,
    flow_apply,
    pde_value,
    random_characteristic_samples,
    reduce_control_time,
)
from .system import BoundaryState, boundary_to_state, state_to_boundary, to_difference_system
from .xi import XiTable, char_coefficients, compositions, is_eligible, power_sum_check, verify_xi_recurrence


@dataclass
class SuiteConfig:
    seed: int = 0
    inject_fault: bool = False
    scale: float = 1.0

    def count(self, base: int) -> int:
        return max(1, int(round(base * self.scale)))


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    seconds: float

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<22} {self.value:10.3e}  (threshold {self.threshold:.0e}, {self.seconds:.2f} s)"


def _sup(state: BoundaryState) -> float:
    return max((float(np.max(np.abs(c.values))) if c.values.size else 0.0) for c in state)


def _table(K, cfg: SuiteConfig) -> XiTable:
    return XiTable(K, sign_fault=cfg.inject_fault)


def check_xi_recurrence(rng, cfg: SuiteConfig, systems: int = 50, depth: int = 6) -> float:
    """Scaled residual of the finite recurrence over all eligible indices."""
    worst = 0.0
    for _ in range(cfg.count(systems)):
        n = int(rng.integers(2, 4))
        tab = _table(random_matrix(rng, n, scale=rng.uniform(0.5, 2.0)), cfg)
        alpha = char_coefficients(tab.K)
        for total in range(depth + 1):
            for ell in compositions(total, n):
                for j in range(n):
                    if is_eligible(ell, j):
                        r = verify_xi_recurrence(tab, ell, j, alpha)
                        worst = max(worst, r / max(tab.bound(ell), 1.0))
    return worst


def check_power_sum(rng, cfg: SuiteConfig, cases: int = 20, depth: int = 8) -> float:
    worst = 0.0
    for _ in range(cfg.count(cases)):
        n = int(rng.integers(2, 4))
        tab = _table(random_matrix(rng, n), cfg)
        t = rng.uniform(-1.5, 1.5, size=n)
        ref = max(np.linalg.norm(tab.K * t, 2), 1.0)
        for j in range(depth + 1):
            worst = max(worst, power_sum_check(tab, t, j) / ref ** j)
    return worst


def check_time_reduction(rng, cfg: SuiteConfig, systems: int = 20, horizons: int = 5) -> float:
    worst = 0.0
    for _ in range(cfg.count(systems)):
        sys = random_difference_system(rng, int(rng.integers(1, 4)), int(rng.integers(1, 3)))
        tab = _table(sys.K, cfg)
        for T in sys.T_star + sys.tau_min * rng.uniform(0.0, 1.0, size=horizons):
            u = ControlSignal.random(rng, sys.m, T)
            u1, u2 = reduce_control_time(sys, u, T)
            lhs = endpoint_apply(sys, T, u, tab)
            rhs = endpoint_apply(sys, sys.T_star, u1 + u2, tab)
            worst = max(worst, _sup(lhs - rhs))
    return worst


def check_representation(rng, cfg: SuiteConfig, systems: int = 20, points: int = 500) -> float:
    """Closed form ``flow + endpoint`` against recursive descent."""
    worst = 0.0
    for _ in range(cfg.count(systems)):
        sys = random_difference_system(rng, int(rng.integers(1, 4)), int(rng.integers(1, 3)))
        T = 2.0 * sys.T_star
        traj = Trajectory(sys, BoundaryState.random(rng, sys.delays), ControlSignal.random(rng, sys.m, T), T)
        tab = _table(sys.K, cfg)
        windows = {}
        for _ in range(cfg.count(points)):
            t = float(rng.choice(np.linspace(0.0, T, 9)))
            if t not in windows:
                windows[t] = flow_apply(sys, t, traj.initial, tab) + endpoint_apply(sys, t, traj.control, tab)
            i = int(rng.integers(sys.n))
            s = float(rng.uniform(-sys.delays[i], 0.0))
            worst = max(worst, abs(windows[t][i](s) - traj.eval(i, t + s)))
    return worst


def check_adjoint(rng, cfg: SuiteConfig, instances: int = 50) -> float:
    worst = 0.0
    for _ in range(cfg.count(instances)):
        sys = random_difference_system(rng, int(rng.integers(1, 4)), int(rng.integers(1, 3)))
        tab = _table(sys.K, cfg)
        T = float(rng.uniform(0.2, 2.0) * sys.T_star)
        u = ControlSignal.random(rng, sys.m, T)
        y = BoundaryState.random(rng, sys.delays)
        a = endpoint_apply(sys, T, u, tab).inner(y)
        b = u.inner(endpoint_dual_apply(sys, T, y, tab))
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return worst


def corrupt(R: Callable[[int, float, float], float], component: int = 0) -> Callable[[int, float, float], float]:
    """Double one component of a solution on ``x >= 1/2``.

    Scaling a whole component would still solve its transport equation,
    so the corruption has to break the profile in space.
    """
    def bad(i, t, x):
        return R(i, t, x) * (2.0 if i == component and x >= 0.5 else 1.0)
    return bad


def check_pde_round_trip(rng, cfg: SuiteConfig, samples: int = 1000) -> tuple[float, float, float]:
    """Characteristic residual, corrupted residual, and profile round trip."""
    hsys = random_hyperbolic_system(rng, 3, 1)
    sys = to_difference_system(hsys)
    T = 1.5 * sys.T_star
    traj = Trajectory(sys, BoundaryState.random(rng, sys.delays), ControlSignal.random(rng, sys.m, T), T)
    pts = random_characteristic_samples(hsys, T, cfg.count(samples), rng)
    res = check_characteristics(hsys, traj, pts)
    bad = check_characteristics(hsys, traj, pts, corrupt(lambda i, t, x: pde_value(hsys, traj, i, t, x)))
    win = traj.history(T)
    back = state_to_boundary(hsys, boundary_to_state(hsys, win))
    rt = 0.0
    for i in range(sys.n):
        for s in rng.uniform(-sys.delays[i], 0.0, size=50):
            rt = max(rt, abs(back[i](s) - win[i](s)))
    return res, bad, rt


def check_lattice(rng, cfg: SuiteConfig, graphs: int = 20, points: int = 10) -> dict:
    det, deficit, ann, mid = 0.0, 0, 0.0, math.inf
    for _ in range(cfg.count(graphs)):
        h = int(rng.integers(1, 5))
        g = random_cycle_graph(rng, [h], damping=0.5)
        _, sys = build_network_system(g)
        cyc = cycle_data(sys, cycle_decomposition(g, sys.K))[0]
        ks = range(-(points // 2), points - points // 2)
        d = spectral_diagnostics(cyc, ks)
        det, deficit = max(det, d.det_scaled), max(deficit, d.rank_deficit)
        ann, mid = max(ann, d.annihilation), min(mid, d.midpoint_det)
    return {"det": det, "rank_deficit": deficit, "annihilation": ann, "midpoint": mid}


def check_intro_steering(rng, cfg: SuiteConfig, points: int = 200) -> float:
    sys = intro_system()
    start, target = BoundaryState.random(rng, sys.delays), BoundaryState.random(rng, sys.delays)
    u = steering_control(start, target)
    T = sys.T_star
    tab = _table(sys.K, cfg)
    reached = flow_apply(sys, T, start, tab) + endpoint_apply(sys, T, u, tab)
    worst = 0.0
    for _ in range(points):
        i = int(rng.integers(2))
        s = float(rng.uniform(-sys.delays[i], 0.0))
        worst = max(worst, abs(reached[i](s) - target[i](s)))
    return worst


def run_suite(cfg: SuiteConfig | None = None) -> list[CheckResult]:
    cfg = cfg or SuiteConfig()
    results: list[CheckResult] = []

    def run(fn):
        rng = np.random.default_rng([cfg.seed, len(results)])
        t0 = time.perf_counter()
        v = fn(rng, cfg)
        dt = time.perf_counter() - t0
        return v, dt

    def add(name, value, threshold, dt, above=False):
        ok = value > threshold if above else value < threshold
        results.append(CheckResult(name, bool(ok), float(value), threshold, dt))

    v, dt = run(check_xi_recurrence)
    add("xi-recurrence", v, 1e-9, dt)
    v, dt = run(check_power_sum)
    add("power-sum", v, 1e-10, dt)
    v, dt = run(check_time_reduction)
    add("time-reduction", v, 1e-10, dt)
    v, dt = run(lambda r, c: check_representation(r, c, systems=10, points=200))
    add("representation", v, 1e-10, dt)
    v, dt = run(check_adjoint)
    add("adjoint-pairing", v, 1e-9, dt)
    (res, bad, rt), dt = run(lambda r, c: check_pde_round_trip(r, c, samples=300))
    add("pde-characteristics", res, 1e-8, dt)
    add("pde-negative-control", bad, 0.1, 0.0, above=True)
    add("pde-profile-roundtrip", rt, 1e-10, 0.0)
    lat, dt = run(check_lattice)
    add("lattice-determinant", lat["det"], 1e-9, dt)
    add("lattice-corank", lat["rank_deficit"], 0.5, 0.0)
    add("lattice-annihilation", lat["annihilation"], 1e-10, 0.0)
    add("lattice-midpoints", lat["midpoint"], 1e-3, 0.0, above=True)
    v, dt = run(check_intro_steering)
    add("intro-steering", v, 1e-10, dt)
    return results
