"""Exact solutions of the difference equation and of the transport system.

Signals and histories are step functions, and every operator here only
shifts, scales and adds step functions, so all results are exact up to
floating-point rounding.  There is no time grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    DomainMismatch,
    HorizonMismatch,
    OutOfHorizon,
    OutOfReductionWindow,
)
from .piecewise import PiecewiseConstant
from .system import (
    BoundaryState,
    DifferenceSystem,
    HyperbolicSystem,
    Profile,
    as_difference_system,
    boundary_to_state,
    compute_delays,
    damping_exponent,
    travel_time,
)
from .xi import XiTable, char_coefficients, enumerate_bounded

TIME_RTOL = 1e-12


@dataclass(frozen=True)
class ControlSignal:
    """``m`` step functions sharing the horizon ``[0, T]``."""

    components: tuple[PiecewiseConstant, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if comps:
            T = comps[0].domain[1]
            for c in comps:
                lo, hi = c.domain
                if abs(lo) > TIME_RTOL * max(1.0, T) or abs(hi - T) > TIME_RTOL * max(1.0, T):
                    raise DomainMismatch("all control components must share the domain [0, T]")

    @classmethod
    def zeros(cls, m: int, T: float) -> "ControlSignal":
        return cls(tuple(PiecewiseConstant.zeros(0.0, T) for _ in range(m)))

    @classmethod
    def random(cls, rng: np.random.Generator, m: int, T: float, pieces: int = 6) -> "ControlSignal":
        return cls(tuple(PiecewiseConstant.random(rng, 0.0, T, pieces) for _ in range(m)))

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def horizon(self) -> float:
        return self.components[0].domain[1] if self.components else math.inf

    def __call__(self, t) -> np.ndarray:
        return np.array([c(t) for c in self.components])

    def __getitem__(self, r: int) -> PiecewiseConstant:
        return self.components[r]

    def __add__(self, other: "ControlSignal") -> "ControlSignal":
        return ControlSignal(tuple(a + b for a, b in zip(self.components, other.components)))

    def restrict(self, T: float) -> "ControlSignal":
        return ControlSignal(tuple(c.restrict(0.0, T) for c in self.components))

    def lq_norm(self, q: float = 2.0) -> float:
        return float(sum(c.lq_norm(q) ** q for c in self.components) ** (1.0 / q))

    def inner(self, other: "ControlSignal") -> float:
        return float(sum(a.inner(b) for a, b in zip(self.components, other.components)))


# --------------------------------------------------------------------------
# operators


def _table(sys: DifferenceSystem, table: XiTable | None) -> XiTable:
    return table if table is not None else XiTable(sys.K)


def flow_apply(sys, T: float, phi: BoundaryState, table: XiTable | None = None) -> BoundaryState:
    """State at time ``T`` of the uncontrolled solution started from ``phi``.

    Where ``T + s < 0`` the history still consists of initial data, and the
    ``phi_i(T + s)`` term covers it.
    """
    sys = as_difference_system(sys)
    if T < 0:
        raise ValueError("T must be nonnegative")
    phi.check_delays(sys.delays)
    table = _table(sys, table)
    tau = sys.delays
    n = sys.n
    terms: list[list[tuple[float, PiecewiseConstant]]] = [[] for _ in range(n)]
    for i in range(n):
        if T < tau[i]:
            terms[i].append((1.0, phi[i].shift(-T)))
    for ell in enumerate_bounded(tau, T + sys.tau_max):
        dot = float(np.dot(tau, ell))
        if dot <= T - sys.tau_max:
            continue
        for j in range(n):
            if ell[j] == 0 or dot > T + tau[j] * (1 + TIME_RTOL):
                continue
            prev = ell[:j] + (ell[j] - 1,) + ell[j + 1:]
            col = table.xi(prev) @ sys.K[:, j]
            shifted = phi[j].shift(dot - T)
            for i in range(n):
                if col[i] != 0.0:
                    terms[i].append((float(col[i]), shifted))
    return BoundaryState(tuple(PiecewiseConstant.sample(terms[i], -tau[i], 0.0) for i in range(n)))


def endpoint_apply(sys, T: float, u: ControlSignal, table: XiTable | None = None) -> BoundaryState:
    """State at time ``T`` reached from rest under the control ``u``."""
    sys = as_difference_system(sys)
    if T < 0:
        raise ValueError("T must be nonnegative")
    if u.m != sys.m:
        raise DomainMismatch(f"control has {u.m} components, system expects {sys.m}")
    if u.horizon < T * (1 - TIME_RTOL) - TIME_RTOL:
        raise HorizonMismatch(f"control horizon {u.horizon:g} < T = {T:g}")
    if T == 0:
        return BoundaryState.zeros(sys.delays)
    table = _table(sys, table)
    tau = sys.delays
    n = sys.n
    comps = [c.restrict(0.0, T) if c.domain[1] > T else c for c in u.components]
    terms: list[list[tuple[float, PiecewiseConstant]]] = [[] for _ in range(n)]
    for ell in enumerate_bounded(tau, T):
        dot = float(np.dot(tau, ell))
        coeff = table.xi(ell) @ sys.B
        shifted = [c.shift(dot - T) for c in comps]
        for i in range(n):
            for r in range(sys.m):
                if coeff[i, r] != 0.0:
                    terms[i].append((float(coeff[i, r]), shifted[r]))
    return BoundaryState(tuple(PiecewiseConstant.sample(terms[i], -tau[i], 0.0) for i in range(n)))


def endpoint_dual_apply(sys, T: float, y: BoundaryState, table: XiTable | None = None) -> ControlSignal:
    """Adjoint of :func:`endpoint_apply` for the L2 pairings on both sides."""
    sys = as_difference_system(sys)
    if T < 0:
        raise ValueError("T must be nonnegative")
    y.check_delays(sys.delays)
    table = _table(sys, table)
    tau = sys.delays
    terms: list[list[tuple[float, PiecewiseConstant]]] = [[] for _ in range(sys.m)]
    for ell in enumerate_bounded(tau, T):
        dot = float(np.dot(tau, ell))
        coeff = table.xi(ell) @ sys.B  # (B^T Xi^T)[r, j] = coeff[j, r]
        for j in range(sys.n):
            shifted = y[j].shift(T - dot)
            for r in range(sys.m):
                if coeff[j, r] != 0.0:
                    terms[r].append((float(coeff[j, r]), shifted))
    if T == 0:
        return ControlSignal(tuple(PiecewiseConstant([0.0, TIME_RTOL], [0.0]) for _ in range(sys.m)))
    return ControlSignal(tuple(PiecewiseConstant.sample(terms[r], 0.0, T) for r in range(sys.m)))


def reduce_control_time(sys, u: ControlSignal, T: float) -> tuple[ControlSignal, ControlSignal]:
    """Split a control on ``[0, T]`` into ``u1, u2`` on ``[0, T*]`` with
    ``E(T) u = E(T*) (u1 + u2)``.

    Valid for ``T* <= T <= T* + tau_min``; longer horizons are handled by
    applying the reduction repeatedly.
    """
    sys = as_difference_system(sys)
    Ts = sys.T_star
    tol = TIME_RTOL * max(1.0, Ts)
    if not Ts - tol <= T <= Ts + sys.tau_min + tol:
        raise OutOfReductionWindow(f"T = {T:g} not in [{Ts:g}, {Ts + sys.tau_min:g}]")
    if u.horizon < T - tol:
        raise HorizonMismatch(f"control horizon {u.horizon:g} < T = {T:g}")
    delta = max(T - Ts, 0.0)
    alpha = char_coefficients(sys.K)
    tau = sys.delays
    u1 = ControlSignal(tuple(c.shift(-delta).restrict(0.0, Ts) for c in u.components))
    parts: list[list[tuple[float, PiecewiseConstant]]] = [[] for _ in range(u.m)]
    for k, a in alpha.items():
        if not any(k) or a == 0.0:
            continue
        tk = float(np.dot(tau, k))
        lo, hi = max(0.0, tk - delta), min(Ts, tk)
        if hi - lo <= tol:
            continue
        for r, c in enumerate(u.components):
            parts[r].append((-a, c.shift(tk - delta).restrict(lo, hi)))
    u2 = ControlSignal(tuple(PiecewiseConstant.sample(parts[r], 0.0, Ts) for r in range(u.m)))
    return u1, u2


# --------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Solution of the difference equation on ``[0, T]``.

    Point values are computed by memoized recursive descent on the equation
    itself; :meth:`history` uses the flow/endpoint operators instead.
    """

    system: DifferenceSystem
    initial: BoundaryState
    control: ControlSignal
    horizon: float
    _table: XiTable = field(init=False, repr=False)

    def __post_init__(self):
        self.system = as_difference_system(self.system)
        self.initial.check_delays(self.system.delays)
        if self.control.m != self.system.m:
            raise DomainMismatch("control dimension does not match B")
        if self.control.horizon < self.horizon * (1 - TIME_RTOL):
            raise HorizonMismatch("control is shorter than the trajectory horizon")
        self._table = XiTable(self.system.K)

    def eval(self, i: int, t: float) -> float:
        tau = self.system.delays
        tol = TIME_RTOL * max(1.0, self.horizon)
        if not -tau[i] - tol <= t <= self.horizon + tol:
            raise OutOfHorizon(f"t = {t:g} outside [-{tau[i]:g}, {self.horizon:g}] for component {i}")
        K, B = self.system.K, self.system.B
        n = self.system.n
        memo: dict[tuple[int, tuple[int, ...]], float] = {}

        def value(j: int, ell: tuple[int, ...]) -> float:
            key = (j, ell)
            if key in memo:
                return memo[key]
            s = t - float(np.dot(tau, ell))
            if s < 0:
                out = float(self.initial[j](s))
            else:
                out = float(B[j] @ self.control(s)) if B.shape[1] else 0.0
                for k in range(n):
                    if K[j, k] != 0.0:
                        out += K[j, k] * value(k, ell[:k] + (ell[k] + 1,) + ell[k + 1:])
            memo[key] = out
            return out

        return value(i, (0,) * n)

    def history(self, t: float) -> BoundaryState:
        """``y_[t]``: the window ``s -> y(t + s)`` on ``[-tau_i, 0]``."""
        if not 0 <= t <= self.horizon * (1 + TIME_RTOL):
            raise OutOfHorizon(f"t = {t:g} outside [0, {self.horizon:g}]")
        free = flow_apply(self.system, t, self.initial, self._table)
        forced = endpoint_apply(self.system, t, self.control, self._table)
        return free + forced


def eval_solution(traj: Trajectory, i: int, t: float) -> float:
    return traj.eval(i, t)


def _check_pair(hsys: HyperbolicSystem, traj: Trajectory) -> None:
    tau = compute_delays(hsys)
    if tau.size != traj.system.n or not np.allclose(tau, traj.system.delays, rtol=1e-12, atol=0):
        raise DomainMismatch("trajectory was not produced by this transport system")


def reconstruct_pde(hsys: HyperbolicSystem, traj: Trajectory, t: float) -> tuple[Profile, ...]:
    """Spatial profile ``R(t, .)`` on ``[0, 1]``, exact per piece."""
    _check_pair(hsys, traj)
    return boundary_to_state(hsys, traj.history(t))


def pde_value(hsys: HyperbolicSystem, traj: Trajectory, i: int, t: float, x: float) -> float:
    """``R_i(t, x) = exp(-g_i(x)) y_i(t - psi_i(x))`` by recursive descent."""
    if not 0 <= x <= 1:
        raise DomainMismatch(f"x = {x:g} outside [0, 1]")
    psi = travel_time(hsys, i)
    g = damping_exponent(hsys, i)
    return math.exp(-g(x)) * traj.eval(i, t - psi(x))


def _signed_integral(f: PiecewiseConstant, a: float, b: float) -> float:
    """``int_a^b f`` with orientation, exact for step functions."""
    if a == b:
        return 0.0
    lo, hi = min(a, b), max(a, b)
    val = f.restrict(lo, hi).integral()
    return val if b > a else -val


def check_characteristics(hsys: HyperbolicSystem, traj: Trajectory,
                          samples: Iterable[tuple[int, float, float, float]],
                          R: Callable[[int, float, float], float] | None = None) -> float:
    """Largest violation of the characteristic identity over ``samples``.

    Each sample ``(i, t, x, h)`` compares ``R_i(t + int_x^{x+h} 1/lambda_i, x + h)``
    with ``exp(-int_x^{x+h} d_i/lambda_i) R_i(t, x)``.  Integrals are taken
    directly from the coefficient profiles.  ``R`` defaults to
    :func:`pde_value`.
    """
    if R is None:
        def R(i, t, x):
            return pde_value(hsys, traj, i, t, x)
    T = traj.horizon
    tol = TIME_RTOL * max(1.0, T)
    worst = 0.0
    for i, t, x, h in samples:
        lam, d = hsys.speeds[i], hsys.dampings[i]
        inv = PiecewiseConstant(lam.breakpoints, 1.0 / lam.values)
        dt = _signed_integral(inv, x, x + h)
        att = _signed_integral(inv * d, x, x + h)
        t2 = t + dt
        if not (-tol <= t <= T + tol and -tol <= t2 <= T + tol and 0 <= x + h <= 1 and 0 <= x <= 1):
            raise DomainMismatch(f"sample {(i, t, x, h)} leaves the domain")
        lhs = R(i, min(max(t2, 0.0), T), x + h)
        rhs = math.exp(-att) * R(i, t, x)
        worst = max(worst, abs(lhs - rhs))
    return worst


def boundary_residual(hsys: HyperbolicSystem, traj: Trajectory, times: Sequence[float]) -> float:
    """Largest violation of the boundary coupling at the given times."""
    n = hsys.n
    worst = 0.0
    for t in times:
        inflow = np.array([pde_value(hsys, traj, i, t, 0.0 if hsys.is_positive(i) else 1.0)
                           for i in range(n)])
        outflow = np.array([pde_value(hsys, traj, i, t, 1.0 if hsys.is_positive(i) else 0.0)
                            for i in range(n)])
        rhs = hsys.boundary_matrix @ outflow
        if hsys.m:
            rhs = rhs + hsys.control_matrix @ traj.control(t)
        worst = max(worst, float(np.max(np.abs(inflow - rhs))))
    return worst


def random_characteristic_samples(hsys: HyperbolicSystem, T: float, count: int,
                                  rng: np.random.Generator) -> list[tuple[int, float, float, float]]:
    """Samples ``(i, t, x, h)`` that stay inside ``[0, T] x [0, 1]``."""
    out = []
    while len(out) < count:
        i = int(rng.integers(hsys.n))
        x, x2 = rng.uniform(0.0, 1.0, size=2)
        psi = travel_time(hsys, i)
        dt = psi(x2) - psi(x)
        lo, hi = max(0.0, -dt), min(T, T - dt)
        if hi <= lo:
            continue
        out.append((i, float(rng.uniform(lo, hi)), float(x), float(x2 - x)))
    return out


# --------------------------------------------------------------------------
# CSV export


def _midpoint_grid(lo: float, hi: float, resolution: float) -> np.ndarray:
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    count = max(1, int(math.ceil((hi - lo) * resolution)))
    h = (hi - lo) / count
    return lo + h * (np.arange(count) + 0.5)


def export_trajectory_csv(traj: Trajectory, path, resolution: float) -> int:
    """Write ``component,t,value`` rows; ``resolution`` is samples per unit time.

    Samples sit at cell midpoints, away from the breakpoints created by the
    delays.  Returns the number of rows written.
    """
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["component", "t", "value"])
        for i, tau in enumerate(traj.system.delays):
            for t in _midpoint_grid(-tau, traj.horizon, resolution):
                w.writerow([i, repr(float(t)), repr(float(traj.eval(i, float(t))))])
                rows += 1
    return rows


def export_state_csv(state: BoundaryState, path, resolution: float) -> int:
    """Write ``component,s,value`` rows sampling each component of ``state``."""
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["component", "s", "value"])
        for i, comp in enumerate(state):
            lo, hi = comp.domain
            for s in _midpoint_grid(lo, hi, resolution):
                w.writerow([i, repr(float(s)), repr(float(comp(s)))])
                rows += 1
    return rows


def read_state_csv(path, delays) -> BoundaryState:
    """Rebuild a step-function state from an exported CSV.

    Each sample is taken as the value on its own cell of the midpoint grid,
    which inverts :func:`export_state_csv` for states that are constant on
    the cells.
    """
    data: dict[int, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            data.setdefault(int(row["component"]), []).append((float(row["s"]), float(row["value"])))
    comps = []
    for i, tau in enumerate(delays):
        pts = sorted(data.get(i, []))
        if not pts:
            raise DomainMismatch(f"no samples for component {i}")
        s = np.array([p[0] for p in pts])
        v = np.array([p[1] for p in pts])
        edges = np.concatenate([[-tau], 0.5 * (s[:-1] + s[1:]), [0.0]])
        comps.append(PiecewiseConstant(edges, v))
    return BoundaryState(tuple(comps))


def control_from_dict(d: dict) -> ControlSignal:
    return ControlSignal(tuple(PiecewiseConstant.from_dict(c) for c in d["components"]))


def state_from_dict(d: dict) -> BoundaryState:
    return BoundaryState(tuple(PiecewiseConstant.from_dict(c) for c in d["components"]))
