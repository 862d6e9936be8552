"""Transport systems with piecewise-constant coefficients and their
reduction to difference equations with one delay per component.

A :class:`HyperbolicSystem` is

    d_t R + Lambda(x) d_x R + D(x) R = 0,          x in (0, 1),
    (R+(t, 0), R-(t, 1)) = M (R+(t, 1), R-(t, 0)) + B u(t),

with the first ``n_plus`` speeds positive and the rest negative.  Following
the characteristics turns it into

    y(t) = K (y_1(t - tau_1), ..., y_n(t - tau_n)) + B u(t),

a :class:`DifferenceSystem`.  Indices are 0-based throughout the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import DomainMismatch, InvalidSpeed, SpecFormatError
from .piecewise import (
    PiecewiseAffine,
    PiecewiseConstant,
    PiecewiseExp,
    merge_breakpoints,
)

Profile = Union[PiecewiseConstant, PiecewiseExp]

DOMAIN_ATOL = 1e-12


def _matrix(a, rows: int | None = None, name: str = "matrix") -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim == 1 and rows is not None:
        a = a.reshape(rows, -1) if a.size else np.zeros((rows, 0))
    if a.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HyperbolicSystem:
    """Diagonal transport system on ``[0, 1]`` with boundary coupling."""

    speeds: tuple[PiecewiseConstant, ...]
    dampings: tuple[PiecewiseConstant, ...]
    boundary_matrix: np.ndarray
    control_matrix: np.ndarray
    n_plus: int
    q: float = 2.0

    def __post_init__(self):
        n = len(self.speeds)
        object.__setattr__(self, "speeds", tuple(self.speeds))
        if self.dampings is None or len(self.dampings) == 0:
            object.__setattr__(self, "dampings", tuple(PiecewiseConstant.zeros(0.0, 1.0) for _ in range(n)))
        object.__setattr__(self, "dampings", tuple(self.dampings))
        M = _matrix(self.boundary_matrix, n, "M")
        B = _matrix(self.control_matrix, n, "B")
        object.__setattr__(self, "boundary_matrix", M)
        object.__setattr__(self, "control_matrix", B)
        if len(self.dampings) != n:
            raise ValueError("need one damping profile per speed")
        if M.shape != (n, n) or B.shape[0] != n:
            raise ValueError(f"M must be {n}x{n} and B must have {n} rows")
        if not 0 <= self.n_plus <= n:
            raise ValueError("n_plus must lie in [0, n]")
        if not 1 <= self.q < math.inf:
            raise ValueError("q must lie in [1, inf)")
        for i, (lam, d) in enumerate(zip(self.speeds, self.dampings)):
            for f, what in ((lam, "speed"), (d, "damping")):
                lo, hi = f.domain
                if abs(lo) > DOMAIN_ATOL or abs(hi - 1.0) > DOMAIN_ATOL:
                    raise DomainMismatch(f"{what} {i} must be defined on [0, 1]")
            if np.any(lam.values == 0.0):
                raise InvalidSpeed(f"speed {i} vanishes on a piece")
            want_positive = i < self.n_plus
            if want_positive and np.any(lam.values < 0):
                raise InvalidSpeed(f"speed {i} must be positive (i < n_plus)")
            if not want_positive and np.any(lam.values > 0):
                raise InvalidSpeed(f"speed {i} must be negative (i >= n_plus)")

    @property
    def n(self) -> int:
        return len(self.speeds)

    @property
    def m(self) -> int:
        return self.control_matrix.shape[1]

    def is_positive(self, i: int) -> bool:
        return i < self.n_plus


@dataclass(frozen=True)
class DifferenceSystem:
    """``y(t) = K (y_j(t - tau_j))_j + B u(t)``."""

    K: np.ndarray
    B: np.ndarray
    delays: np.ndarray
    damping_integrals: np.ndarray = field(default=None)

    def __post_init__(self):
        K = _matrix(self.K, None, "K")
        n = K.shape[0]
        if K.shape != (n, n):
            raise ValueError("K must be square")
        B = _matrix(self.B, n, "B")
        if B.shape[0] != n:
            raise ValueError("B must have as many rows as K")
        tau = np.array(self.delays, dtype=float).reshape(-1)
        if tau.size != n:
            raise ValueError("need one delay per component")
        if np.any(~np.isfinite(tau)) or np.any(tau <= 0):
            raise ValueError("delays must be finite and strictly positive")
        zeta = (np.zeros(n) if self.damping_integrals is None
                else np.array(self.damping_integrals, dtype=float).reshape(-1))
        for a in (tau, zeta):
            a.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "delays", tau)
        object.__setattr__(self, "damping_integrals", zeta)

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def T_star(self) -> float:
        return float(np.sum(self.delays))

    @property
    def tau_min(self) -> float:
        return float(np.min(self.delays))

    @property
    def tau_max(self) -> float:
        return float(np.max(self.delays))

    def H(self, p: complex) -> np.ndarray:
        """Characteristic matrix ``diag(exp(p tau)) - K``."""
        return np.diag(np.exp(p * self.delays)) - self.K

    def with_B(self, B) -> "DifferenceSystem":
        return DifferenceSystem(self.K, B, self.delays, self.damping_integrals)


@dataclass(frozen=True)
class BoundaryState:
    """Element of the product space: component i lives on ``[-tau_i, 0]``."""

    components: tuple[Profile, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def zeros(cls, delays) -> "BoundaryState":
        return cls(tuple(PiecewiseConstant.zeros(-t, 0.0) for t in delays))

    @classmethod
    def random(cls, rng: np.random.Generator, delays, pieces: int = 4) -> "BoundaryState":
        return cls(tuple(PiecewiseConstant.random(rng, -t, 0.0, pieces) for t in delays))

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def delays(self) -> np.ndarray:
        return np.array([-c.domain[0] for c in self.components])

    def check_delays(self, delays) -> None:
        delays = np.asarray(delays, dtype=float)
        if delays.size != self.n:
            raise DomainMismatch(f"state has {self.n} components, system has {delays.size}")
        for i, (c, t) in enumerate(zip(self.components, delays)):
            lo, hi = c.domain
            tol = DOMAIN_ATOL * max(1.0, t)
            if abs(lo + t) > tol or abs(hi) > tol:
                raise DomainMismatch(f"component {i} must live on [-{t:g}, 0], got [{lo:g}, {hi:g}]")

    def __getitem__(self, i: int) -> Profile:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def lq_norm(self, q: float = 2.0) -> float:
        return float(sum(c.lq_norm(q) ** q for c in self.components) ** (1.0 / q))

    def _combine(self, other: "BoundaryState", sign: float) -> "BoundaryState":
        comps = []
        for a, b in zip(self.components, other.components):
            lo, hi = a.domain
            comps.append(PiecewiseConstant.sample([(1.0, a), (sign, b)], lo, hi))
        return BoundaryState(tuple(comps))

    def __add__(self, other: "BoundaryState") -> "BoundaryState":
        return self._combine(other, 1.0)

    def __sub__(self, other: "BoundaryState") -> "BoundaryState":
        return self._combine(other, -1.0)

    def inner(self, other: "BoundaryState") -> float:
        return float(sum(a.inner(b) for a, b in zip(self.components, other.components)))


# --------------------------------------------------------------------------
# reduction


def compute_delays(sys: HyperbolicSystem) -> np.ndarray:
    """``tau_i = int_0^1 dx / |lambda_i(x)|`` (exact on each piece)."""
    out = []
    for i, lam in enumerate(sys.speeds):
        if np.any(lam.values == 0.0):
            raise InvalidSpeed(f"speed {i} vanishes on a piece")
        out.append(float(np.dot(lam.widths, 1.0 / np.abs(lam.values))))
    return np.array(out)


def _damping_density(lam: PiecewiseConstant, d: PiecewiseConstant) -> PiecewiseConstant:
    """``d / |lambda|`` on the common refinement."""
    if np.any(lam.values == 0.0):
        raise InvalidSpeed("speed vanishes on a piece")
    inv = PiecewiseConstant(lam.breakpoints, 1.0 / np.abs(lam.values))
    return inv * d


def compute_damping_integrals(sys: HyperbolicSystem) -> np.ndarray:
    """``zeta_j = int_0^1 d_j / |lambda_j|``."""
    return np.array([_damping_density(lam, d).integral()
                     for lam, d in zip(sys.speeds, sys.dampings)])


def to_difference_system(sys: HyperbolicSystem) -> DifferenceSystem:
    tau = compute_delays(sys)
    zeta = compute_damping_integrals(sys)
    K = sys.boundary_matrix @ np.diag(np.exp(-zeta))
    return DifferenceSystem(K, sys.control_matrix.copy(), tau, zeta)


def travel_time(sys: HyperbolicSystem, i: int) -> PiecewiseAffine:
    """``psi_i``: time to travel from the inflow boundary to ``x``.

    Increasing with ``psi(0) = 0`` for positive speeds, decreasing with
    ``psi(1) = 0`` for negative ones.
    """
    lam = sys.speeds[i]
    slow = PiecewiseAffine.antiderivative(PiecewiseConstant(lam.breakpoints, 1.0 / np.abs(lam.values)))
    if sys.is_positive(i):
        return slow
    return PiecewiseAffine(slow.knots, slow.vals[-1] - slow.vals)


def damping_exponent(sys: HyperbolicSystem, i: int) -> PiecewiseAffine:
    """``g_i`` with spatial attenuation factor ``exp(-g_i(x))``.

    ``g_i(x) = int_0^x d/lambda`` for positive speeds and
    ``int_x^1 d/|lambda|`` for negative ones.
    """
    dens = _damping_density(sys.speeds[i], sys.dampings[i])
    acc = PiecewiseAffine.antiderivative(dens)
    if sys.is_positive(i):
        return acc
    return PiecewiseAffine(acc.knots, acc.vals[-1] - acc.vals)


def _as_exp(f: Profile) -> PiecewiseExp:
    return f if isinstance(f, PiecewiseExp) else PiecewiseExp.from_constant(f)


def _maybe_constant(f: PiecewiseExp) -> Profile:
    return f.to_constant() if f.is_constant else f


def _piece_value(f: PiecewiseExp, where: float, at: float) -> tuple[float, float]:
    """Value at ``at`` of the piece of ``f`` containing ``where``, and its rate."""
    k = int(np.clip(np.searchsorted(f.breakpoints, where, side="right") - 1, 0, f.values.size - 1))
    return f.values[k] * math.exp(f.rates[k] * (at - f.breakpoints[k])), f.rates[k]


def boundary_to_state(sys: HyperbolicSystem, y: BoundaryState) -> tuple[Profile, ...]:
    """Map a boundary history to the spatial profile on ``[0, 1]``.

    ``r_i(x) = exp(-g_i(x)) * y_i(-psi_i(x))``.
    """
    tau = compute_delays(sys)
    y.check_delays(tau)
    out = []
    for i in range(sys.n):
        psi = travel_time(sys, i)
        g = damping_exponent(sys, i)
        yi = _as_exp(y[i])
        knots = list(psi.knots) + list(g.knots)
        knots += list(psi.inverse(-yi.breakpoints))
        xb = merge_breakpoints(knots, 0.0, 1.0)
        vals, rates = [], []
        for x0, x1 in zip(xb[:-1], xb[1:]):
            xm = 0.5 * (x0 + x1)
            s_psi = (psi(x1) - psi(x0)) / (x1 - x0)
            s_g = (g(x1) - g(x0)) / (x1 - x0)
            v, rho = _piece_value(yi, -psi(xm), -psi(x0))
            vals.append(math.exp(-g(x0)) * v)
            rates.append(-s_g - rho * s_psi)
        out.append(_maybe_constant(PiecewiseExp(xb, vals, rates)))
    return tuple(out)


def state_to_boundary(sys: HyperbolicSystem, r: Sequence[Profile]) -> BoundaryState:
    """Inverse of :func:`boundary_to_state`.

    ``y_i(t) = exp(g_i(x)) * r_i(x)`` with ``x = psi_i^{-1}(-t)``.
    """
    if len(r) != sys.n:
        raise DomainMismatch(f"expected {sys.n} profiles, got {len(r)}")
    for i, f in enumerate(r):
        lo, hi = f.domain
        if abs(lo) > DOMAIN_ATOL or abs(hi - 1.0) > DOMAIN_ATOL:
            raise DomainMismatch(f"profile {i} must live on [0, 1]")
    tau = compute_delays(sys)
    comps = []
    for i in range(sys.n):
        psi = travel_time(sys, i)
        g = damping_exponent(sys, i)
        ri = _as_exp(r[i])
        xs = list(psi.knots) + list(g.knots) + list(ri.breakpoints)
        tb = merge_breakpoints(-np.asarray(psi(np.asarray(xs))), -tau[i], 0.0)
        vals, rates = [], []
        for t0, t1 in zip(tb[:-1], tb[1:]):
            x0, x1 = psi.inverse(-t0), psi.inverse(-t1)
            xm = psi.inverse(-0.5 * (t0 + t1))
            dxdt = (x1 - x0) / (t1 - t0)
            s_g = (g(x1) - g(x0)) / (x1 - x0)
            v, rho = _piece_value(ri, xm, x0)
            vals.append(math.exp(g(x0)) * v)
            rates.append((s_g + rho) * dxdt)
        comps.append(_maybe_constant(PiecewiseExp(tb, vals, rates)))
    return BoundaryState(tuple(comps))


# --------------------------------------------------------------------------
# file formats


def _load_mapping(path: Union[str, Path]) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecFormatError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # python < 3.11
                import tomli as tomllib
            return tomllib.loads(text)
        return json.loads(text)
    except Exception as exc:
        raise SpecFormatError(f"cannot parse {path}: {exc}") from exc


def _profile(entry, name: str) -> PiecewiseConstant:
    if isinstance(entry, (int, float)):
        return PiecewiseConstant.constant(0.0, 1.0, float(entry))
    try:
        return PiecewiseConstant(entry["breakpoints"], entry["values"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFormatError(f"bad profile {name}: {exc}") from exc


def _rowmajor(a, rows: int, cols: int | None, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        if cols is None:
            cols = arr.size // rows if rows else 0
        if arr.size != rows * cols:
            raise SpecFormatError(f"{name} has {arr.size} entries, expected {rows}x{cols}")
        arr = arr.reshape(rows, cols)
    if arr.ndim != 2 or arr.shape[0] != rows or (cols is not None and arr.shape[1] != cols):
        raise SpecFormatError(f"{name} has shape {arr.shape}")
    return arr


def system_from_dict(d: dict) -> Union[HyperbolicSystem, DifferenceSystem]:
    """Build a system from a parsed spec mapping.

    Transport form: ``n``, ``n_plus``, ``speeds``, ``dampings``, ``M``, ``B``
    and optional ``q``.  A mapping with ``K`` and ``delays`` instead describes
    the difference equation directly.
    """
    try:
        if "K" in d:
            n = len(d["delays"])
            K = _rowmajor(d["K"], n, n, "K")
            B = _rowmajor(d.get("B", []), n, None, "B")
            return DifferenceSystem(K, B, d["delays"], d.get("damping_integrals"))
        n = int(d["n"])
        speeds = [_profile(s, f"speeds[{i}]") for i, s in enumerate(d["speeds"])]
        damp_entries = d.get("dampings") or [0.0] * n
        dampings = [_profile(s, f"dampings[{i}]") for i, s in enumerate(damp_entries)]
        if len(speeds) != n or len(dampings) != n:
            raise SpecFormatError(f"expected {n} speeds and dampings")
        M = _rowmajor(d["M"], n, n, "M")
        B = _rowmajor(d.get("B", []), n, None, "B")
        return HyperbolicSystem(tuple(speeds), tuple(dampings), M, B,
                                int(d.get("n_plus", n)), float(d.get("q", 2.0)))
    except SpecFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFormatError(f"invalid system spec: {exc!r}") from exc


def load_system(path) -> Union[HyperbolicSystem, DifferenceSystem]:
    return system_from_dict(_load_mapping(path))


def system_to_dict(sys: HyperbolicSystem) -> dict:
    return {
        "n": sys.n,
        "n_plus": sys.n_plus,
        "speeds": [s.to_dict() for s in sys.speeds],
        "dampings": [s.to_dict() for s in sys.dampings],
        "M": sys.boundary_matrix.reshape(-1).tolist(),
        "B": sys.control_matrix.reshape(-1).tolist(),
        "q": sys.q,
    }


def as_difference_system(sys) -> DifferenceSystem:
    return sys if isinstance(sys, DifferenceSystem) else to_difference_system(sys)
