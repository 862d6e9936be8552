"""Exact arithmetic on piecewise functions of one real variable.

Three classes cover everything the solver needs:

* :class:`PiecewiseConstant` -- signals, boundary states and coefficient
  profiles.  Closed under shifting, scaling, reflection and addition, so the
  difference-equation operators never leave the class.
* :class:`PiecewiseExp` -- pieces of the form ``v * exp(r * (x - left))``.
  Spatial profiles of the transport system carry the damping factor
  ``exp(-int d / lambda)`` and live here.
* :class:`PiecewiseAffine` -- continuous, piecewise-affine maps (travel-time
  functions and damping integrals) with closed-form inversion.

All functions are right-continuous; the right end of the domain belongs to
the last piece.  Outside its domain a function evaluates to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# breakpoints closer than MERGE_RTOL * (domain length) are identified
MERGE_RTOL = 1e-12


def _as_breaks(breakpoints) -> np.ndarray:
    b = np.asarray(breakpoints, dtype=float)
    if b.ndim != 1 or b.size < 2:
        raise ValueError("need at least two breakpoints")
    if not np.all(np.isfinite(b)):
        raise ValueError("breakpoints must be finite")
    if np.any(np.diff(b) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    return b


def merge_breakpoints(points: Iterable[float], lo: float, hi: float) -> np.ndarray:
    """Sorted union of ``points`` clipped to ``[lo, hi]``, near-duplicates merged."""
    if hi <= lo:
        raise ValueError("empty interval")
    tol = MERGE_RTOL * max(1.0, hi - lo)
    pts = np.asarray(list(points), dtype=float)
    pts = pts[(pts > lo + tol) & (pts < hi - tol)]
    pts = np.sort(pts)
    out = [lo]
    for x in pts:
        if x - out[-1] > tol:
            out.append(float(x))
    if hi - out[-1] <= tol and len(out) > 1:
        out.pop()
    out.append(hi)
    return np.asarray(out)


def _locate(breaks: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Piece index for each x and a mask of points inside the closed domain."""
    idx = np.searchsorted(breaks, x, side="right") - 1
    inside = (x >= breaks[0]) & (x <= breaks[-1])
    idx = np.clip(idx, 0, breaks.size - 2)
    return idx, inside


class PiecewiseConstant:
    """Right-continuous step function on ``[breakpoints[0], breakpoints[-1]]``.

    Parameters
    ----------
    breakpoints : array_like, shape (N+1,)
        Strictly increasing; first/last entries are the domain endpoints.
    values : array_like, shape (N,)
        Value on each half-open piece ``[b_k, b_{k+1})``.
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints, values):
        b = _as_breaks(breakpoints)
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.size != b.size - 1:
            raise ValueError(f"{b.size} breakpoints need {b.size - 1} values, got {v.size}")
        b.setflags(write=False)
        v.setflags(write=False)
        self.breakpoints = b
        self.values = v

    # construction -----------------------------------------------------

    @classmethod
    def constant(cls, lo: float, hi: float, value: float = 0.0) -> "PiecewiseConstant":
        return cls([lo, hi], [value])

    @classmethod
    def zeros(cls, lo: float, hi: float) -> "PiecewiseConstant":
        return cls([lo, hi], [0.0])

    @classmethod
    def random(cls, rng: np.random.Generator, lo: float, hi: float,
               pieces: int = 5, scale: float = 1.0) -> "PiecewiseConstant":
        """Random step function with ``pieces`` pieces and N(0, scale^2) values."""
        inner = np.sort(rng.uniform(lo, hi, size=max(pieces - 1, 0)))
        b = merge_breakpoints(inner, lo, hi)
        return cls(b, scale * rng.standard_normal(b.size - 1))

    @classmethod
    def sample(cls, terms: Sequence[tuple[float, "PiecewiseConstant"]],
               lo: float, hi: float) -> "PiecewiseConstant":
        """Exact linear combination ``sum c * f`` restricted to ``[lo, hi]``.

        Each ``f`` is extended by zero outside its own domain.
        """
        pts = [lo, hi]
        for _, f in terms:
            pts.extend(f.breakpoints)
        b = merge_breakpoints(pts, lo, hi)
        mid = 0.5 * (b[:-1] + b[1:])
        vals = np.zeros(mid.size)
        for c, f in terms:
            if c != 0.0:
                vals += c * f(mid)
        return cls(b, vals)

    # basic properties -------------------------------------------------

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        lo, hi = self.domain
        return f"PiecewiseConstant([{lo:g}, {hi:g}], pieces={len(self)})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx, inside = _locate(self.breakpoints, x)
        out = np.where(inside, self.values[idx], 0.0)
        return out if out.ndim else float(out)

    # algebra ------------------------------------------------------------

    def shift(self, c: float) -> "PiecewiseConstant":
        """``g(x) = f(x - c)``."""
        return PiecewiseConstant(self.breakpoints + c, self.values)

    def reflect(self) -> "PiecewiseConstant":
        """``g(x) = f(-x)``; breakpoint values follow the right-continuous convention."""
        return PiecewiseConstant(-self.breakpoints[::-1], self.values[::-1])

    def scale(self, a: float) -> "PiecewiseConstant":
        return PiecewiseConstant(self.breakpoints, a * self.values)

    def restrict(self, lo: float, hi: float) -> "PiecewiseConstant":
        """Restriction to ``[lo, hi]``; parts outside the domain are zero."""
        return PiecewiseConstant.sample([(1.0, self)], lo, hi)

    def simplify(self) -> "PiecewiseConstant":
        """Drop breakpoints separating equal values."""
        keep = np.ones(self.breakpoints.size, dtype=bool)
        keep[1:-1] = self.values[1:] != self.values[:-1]
        b = self.breakpoints[keep]
        v = self.values[keep[:-1]]
        return PiecewiseConstant(b, v)

    def _binary(self, other, op) -> "PiecewiseConstant":
        lo = min(self.domain[0], other.domain[0])
        hi = max(self.domain[1], other.domain[1])
        b = merge_breakpoints(np.concatenate([self.breakpoints, other.breakpoints]), lo, hi)
        mid = 0.5 * (b[:-1] + b[1:])
        return PiecewiseConstant(b, op(self(mid), other(mid)))

    def __add__(self, other):
        if isinstance(other, PiecewiseConstant):
            return self._binary(other, np.add)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, PiecewiseConstant):
            return self._binary(other, np.subtract)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, PiecewiseConstant):
            return self._binary(other, np.multiply)
        return self.scale(float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    # quadrature ---------------------------------------------------------

    def integral(self) -> float:
        return float(np.dot(self.values, self.widths))

    def lq_norm(self, q: float = 2.0) -> float:
        if q < 1:
            raise ValueError("q must be >= 1")
        return float(np.dot(np.abs(self.values) ** q, self.widths) ** (1.0 / q))

    def inner(self, other: "PiecewiseConstant") -> float:
        """``int f g`` over the union of domains (zero extension)."""
        return (self * other).integral()

    def max_abs_diff(self, other, samples: np.ndarray) -> float:
        return float(np.max(np.abs(self(samples) - other(samples)))) if samples.size else 0.0

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseConstant":
        return cls(d["breakpoints"], d["values"])


class PiecewiseExp:
    """Piecewise ``v_k * exp(r_k * (x - b_k))`` on ``[b_k, b_{k+1})``.

    With all rates zero this is a step function; :meth:`to_constant` converts.
    """

    __slots__ = ("breakpoints", "values", "rates")

    def __init__(self, breakpoints, values, rates=None):
        b = _as_breaks(breakpoints)
        v = np.asarray(values, dtype=float).reshape(-1)
        r = np.zeros_like(v) if rates is None else np.asarray(rates, dtype=float).reshape(-1)
        if v.size != b.size - 1 or r.size != v.size:
            raise ValueError("shape mismatch between breakpoints, values and rates")
        for a in (b, v, r):
            a.setflags(write=False)
        self.breakpoints, self.values, self.rates = b, v, r

    @classmethod
    def from_constant(cls, f: PiecewiseConstant) -> "PiecewiseExp":
        return cls(f.breakpoints, f.values)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.rates == 0.0))

    def to_constant(self) -> PiecewiseConstant:
        if not self.is_constant:
            raise ValueError("function has nonzero exponential rates")
        return PiecewiseConstant(self.breakpoints, self.values)

    def __repr__(self) -> str:
        lo, hi = self.domain
        return f"PiecewiseExp([{lo:g}, {hi:g}], pieces={self.values.size})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx, inside = _locate(self.breakpoints, x)
        y = self.values[idx] * np.exp(self.rates[idx] * (x - self.breakpoints[idx]))
        out = np.where(inside, y, 0.0)
        return out if out.ndim else float(out)

    def scale(self, a: float) -> "PiecewiseExp":
        return PiecewiseExp(self.breakpoints, a * self.values, self.rates)

    @staticmethod
    def _piece_integrals(v, r, w):
        # int_0^w v e^{r s} ds, stable as r*w -> 0
        rw = r * w
        safe = np.where(rw == 0.0, 1.0, rw)
        factor = np.where(rw == 0.0, 1.0, np.expm1(rw) / safe)
        return v * w * factor

    def integral(self) -> float:
        return float(np.sum(self._piece_integrals(self.values, self.rates, np.diff(self.breakpoints))))

    def lq_norm(self, q: float = 2.0) -> float:
        if q < 1:
            raise ValueError("q must be >= 1")
        w = np.diff(self.breakpoints)
        s = self._piece_integrals(np.abs(self.values) ** q, q * self.rates, w)
        return float(np.sum(s) ** (1.0 / q))


@dataclass(frozen=True)
class PiecewiseAffine:
    """Continuous piecewise-affine map through ``(knots[k], vals[k])``."""

    knots: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        k = _as_breaks(self.knots)
        v = np.asarray(self.vals, dtype=float)
        if v.shape != k.shape:
            raise ValueError("knots and vals must have equal length")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "vals", v)

    @classmethod
    def antiderivative(cls, f: PiecewiseConstant, lo: float | None = None) -> "PiecewiseAffine":
        """``x -> int_lo^x f`` with ``lo`` defaulting to the left domain end."""
        vals = np.concatenate([[0.0], np.cumsum(f.values * f.widths)])
        g = cls(f.breakpoints.copy(), vals)
        if lo is not None and lo != f.domain[0]:
            g = cls(g.knots, g.vals - g(lo))
        return g

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.vals) / np.diff(self.knots)

    def __call__(self, x):
        out = np.interp(np.asarray(x, dtype=float), self.knots, self.vals)
        return out if np.ndim(out) else float(out)

    def inverse(self, y):
        """Inverse of a strictly monotone map, in closed form per piece."""
        s = self.slopes
        if np.all(s > 0):
            out = np.interp(np.asarray(y, dtype=float), self.vals, self.knots)
        elif np.all(s < 0):
            out = np.interp(np.asarray(y, dtype=float), self.vals[::-1], self.knots[::-1])
        else:
            raise ValueError("map is not strictly monotone")
        return out if np.ndim(out) else float(out)


def common_refinement(*fns: PiecewiseConstant, lo: float, hi: float) -> np.ndarray:
    pts = [lo, hi]
    for f in fns:
        pts.extend(f.breakpoints)
    return merge_breakpoints(pts, lo, hi)
