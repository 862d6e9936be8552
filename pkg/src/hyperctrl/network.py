"""Transport flows on directed graphs.

Each edge ``j`` carries a scalar transport with negative speed, so mass
leaves edge ``j`` at its head vertex and is redistributed onto the edges
leaving that vertex with weights ``w[v, i]``.  With incidence matrices
``I_minus[v, j] = 1`` iff ``tail(j) = v`` and ``I_plus[v, j] = 1`` iff
``head(j) = v``, and ``W`` the weighted version of ``I_minus``, the reduced
difference system is

    K = W^T I_plus Z,      B = W^T Gamma,      Z = diag(exp(-zeta)).

Column ``j`` of ``K`` is ``W[head(j)]^T exp(-zeta_j)``, so two edges sharing
a head give proportional columns.  Controllability therefore requires every
vertex to have exactly one incoming edge, which makes the graph a disjoint
union of directed cycles.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .controllability import (
    CONTROLLABLE,
    INCONCLUSIVE,
    NOT_CONTROLLABLE,
    ControllabilityReport,
    rank_KB,
)
from .errors import NotSpectral, SpecFormatError
from .piecewise import PiecewiseConstant
from .system import (
    DifferenceSystem,
    HyperbolicSystem,
    _load_mapping,
    _profile,
    _rowmajor,
    to_difference_system,
)

WEIGHT_ATOL = 1e-12
SPECTRAL_TOL = 1e-9


@dataclass(frozen=True)
class FlowGraph:
    """Directed multigraph with per-edge transport data.

    ``weights`` is the dense ``k x n`` matrix of outgoing weights ``w[v, j]``
    and ``gamma`` the ``k x m`` vertex control matrix.
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    weights: np.ndarray
    gamma: np.ndarray
    speeds: tuple[PiecewiseConstant, ...]
    dampings: tuple[PiecewiseConstant, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))
        n = len(self.edges)
        object.__setattr__(self, "speeds", tuple(self.speeds))
        if not self.dampings:
            object.__setattr__(self, "dampings", tuple(PiecewiseConstant.zeros(0.0, 1.0) for _ in range(n)))
        object.__setattr__(self, "dampings", tuple(self.dampings))
        W = np.array(self.weights, dtype=float).reshape(self.vertex_count, n)
        G = np.array(self.gamma, dtype=float)
        if G.ndim == 1:
            G = G.reshape(self.vertex_count, -1)
        W.setflags(write=False)
        G.setflags(write=False)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "gamma", G)

    @property
    def n(self) -> int:
        return len(self.edges)

    @property
    def m(self) -> int:
        return self.gamma.shape[1]

    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """``(I_minus, I_plus)``, each ``k x n`` with one unit per column."""
        Im = np.zeros((self.vertex_count, self.n))
        Ip = np.zeros((self.vertex_count, self.n))
        for j, (tail, head) in enumerate(self.edges):
            Im[tail, j] = 1.0
            Ip[head, j] = 1.0
        return Im, Ip

    def incoming(self, v: int) -> list[int]:
        return [j for j, (_, head) in enumerate(self.edges) if head == v]

    def outgoing(self, v: int) -> list[int]:
        return [j for j, (tail, _) in enumerate(self.edges) if tail == v]


@dataclass(frozen=True)
class Violation:
    kind: str
    vertex: Optional[int]
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "vertex": self.vertex, "detail": self.detail}


def validate_graph(g: FlowGraph) -> list[Violation]:
    """Structured list of violations; empty when the graph is admissible."""
    out: list[Violation] = []
    k = g.vertex_count
    for j, (tail, head) in enumerate(g.edges):
        if not (0 <= tail < k and 0 <= head < k):
            out.append(Violation("malformed", None, f"edge {j} has endpoint outside [0, {k})"))
    if len(g.speeds) != g.n or len(g.dampings) != g.n:
        out.append(Violation("malformed", None, "need one speed and one damping per edge"))
    if g.gamma.shape[0] != k:
        out.append(Violation("malformed", None, f"gamma must have {k} rows"))
    if out:
        return out
    for j, lam in enumerate(g.speeds):
        if lam.domain != (0.0, 1.0) or np.any(lam.values >= 0):
            out.append(Violation("speed", None, f"edge {j} needs a negative speed on [0, 1]"))
    for v in range(k):
        if not g.incoming(v) or not g.outgoing(v):
            out.append(Violation("assumption_A", v, "every vertex needs an incoming and an outgoing edge"))
        s = float(g.weights[v].sum())
        if abs(s - 1.0) >= WEIGHT_ATOL:
            out.append(Violation("normalization", v, f"outgoing weights sum to {s!r}"))
        for j in range(g.n):
            is_tail = g.edges[j][0] == v
            w = g.weights[v, j]
            if is_tail and w == 0.0:
                out.append(Violation("support", v, f"zero weight on outgoing edge {j}"))
            elif not is_tail and w != 0.0:
                out.append(Violation("support", v, f"nonzero weight on edge {j} which does not leave v"))
            elif w < 0.0 or w > 1.0:
                out.append(Violation("support", v, f"weight on edge {j} outside [0, 1]"))
    return out


class GraphValidationError(SpecFormatError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(f"{v.kind}: {v.detail}" for v in self.violations))


def build_network_system(g: FlowGraph) -> tuple[HyperbolicSystem, DifferenceSystem]:
    bad = validate_graph(g)
    if bad:
        raise GraphValidationError(bad)
    _, Ip = g.incidence()
    M = g.weights.T @ Ip
    B = g.weights.T @ g.gamma
    hsys = HyperbolicSystem(g.speeds, g.dampings, M, B, n_plus=0)
    return hsys, to_difference_system(hsys)


# --------------------------------------------------------------------------
# cycle structure


@dataclass(frozen=True)
class CycleDecomposition:
    """Cycles of the edge successor map.

    ``order`` lists edges block by block; inside a block each edge's head is
    the tail of the next one, wrapping at the end.
    """

    sizes: tuple[int, ...]
    order: tuple[int, ...]

    @property
    def L(self) -> int:
        return len(self.sizes)

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        out, a = [], 0
        for h in self.sizes:
            out.append(self.order[a:a + h])
            a += h
        return tuple(out)

    def permutation_matrix(self) -> np.ndarray:
        """``P`` with ``P[a, order[a]] = 1``; relabeled ``K`` is ``P K P^T``."""
        n = len(self.order)
        P = np.zeros((n, n))
        P[np.arange(n), list(self.order)] = 1.0
        return P


@dataclass(frozen=True)
class Obstruction:
    vertex: int
    incoming: tuple[int, ...]
    columns: tuple[int, int]
    angle: float

    def to_dict(self) -> dict:
        return {"type": "obstruction", "vertex": self.vertex, "incoming": list(self.incoming),
                "columns": list(self.columns), "angle": self.angle}


def column_angle(a, b) -> float:
    """Angle between the lines spanned by ``a`` and ``b``.

    Uses ``2 atan2(|a^ - b^|, |a^ + b^|)``, accurate for nearly parallel
    vectors where ``acos`` of the cosine loses half the digits.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    a, b = a / na, b / nb
    if a @ b < 0:
        b = -b
    return float(2.0 * math.atan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def cycle_decomposition(g: FlowGraph, K: np.ndarray | None = None) -> CycleDecomposition | Obstruction:
    for v in range(g.vertex_count):
        inc = g.incoming(v)
        if len(inc) >= 2:
            if K is None:
                K = build_network_system(g)[1].K
            a, b = inc[0], inc[1]
            return Obstruction(v, tuple(inc), (a, b), column_angle(K[:, a], K[:, b]))
    # one incoming edge per vertex; with Assumption (A) also one outgoing
    succ = {}
    for j, (_, head) in enumerate(g.edges):
        out = g.outgoing(head)
        succ[j] = out[0]
    seen: set[int] = set()
    sizes, order = [], []
    for start in range(g.n):
        if start in seen:
            continue
        j, block = start, []
        while j not in seen:
            seen.add(j)
            block.append(j)
            j = succ[j]
        sizes.append(len(block))
        order.extend(block)
    return CycleDecomposition(tuple(sizes), tuple(order))


def cyclic_shift(h: int) -> np.ndarray:
    """``C[(j + 1) % h, j] = 1``."""
    C = np.zeros((h, h))
    C[(np.arange(h) + 1) % h, np.arange(h)] = 1.0
    return C


# --------------------------------------------------------------------------
# spectral lattice


@dataclass(frozen=True)
class SpectralPoint:
    cycle: int
    k: int
    p: complex


@dataclass(frozen=True)
class CycleData:
    """Delays and damping integrals of one cycle, in cycle order."""

    edges: tuple[int, ...]
    tau: np.ndarray
    zeta: np.ndarray

    @property
    def h(self) -> int:
        return len(self.edges)

    @property
    def S(self) -> float:
        return float(self.tau.sum())

    @property
    def real_part(self) -> float:
        return -float(self.zeta.sum()) / self.S

    def T_minus_CZ(self, p: complex) -> np.ndarray:
        return np.diag(np.exp(p * self.tau)) - cyclic_shift(self.h) * np.exp(-self.zeta)[None, :]


def cycle_data(sys: DifferenceSystem, dec: CycleDecomposition) -> list[CycleData]:
    zeta = sys.damping_integrals if sys.damping_integrals is not None else np.zeros(sys.n)
    return [CycleData(tuple(b), sys.delays[list(b)], np.asarray(zeta)[list(b)]) for b in dec.blocks]


def spectral_set(cyc: CycleData, l: int, k_range: Sequence[int]) -> list[SpectralPoint]:
    a, S = cyc.real_part, cyc.S
    return [SpectralPoint(l, int(k), complex(a, 2 * math.pi * k / S)) for k in k_range]


def spectral_distance(cyc: CycleData, p: complex) -> float:
    """Distance from ``p`` to the lattice of ``cyc``."""
    step = 2 * math.pi / cyc.S
    k = round(p.imag / step)
    return abs(p - complex(cyc.real_part, k * step))


def kernel_vector(cyc: CycleData, p: complex, tol: float = SPECTRAL_TOL) -> np.ndarray:
    """Left kernel vector ``y`` of ``T(p) - C Z`` under ``y^T M``.

    ``y_j = prod_{t < j} exp(p tau_t + zeta_t)``, so ``y_0 = 1``.
    """
    p = complex(p)
    if spectral_distance(cyc, p) > tol * max(1.0, abs(p)):
        raise NotSpectral(f"p = {p} is not on the lattice of this cycle")
    return _kernel_unchecked(cyc, p)


def _kernel_unchecked(cyc: CycleData, p: complex) -> np.ndarray:
    steps = p * cyc.tau[:-1] + cyc.zeta[:-1]
    return np.exp(np.concatenate([[0.0], np.cumsum(steps)]))


@dataclass(frozen=True)
class LatticeDiagnostics:
    """Worst values over a set of lattice points of one cycle."""

    det_scaled: float
    rank_deficit: int
    annihilation: float
    midpoint_det: float


def spectral_diagnostics(cyc: CycleData, k_values: Sequence[int]) -> LatticeDiagnostics:
    """Check that ``T(p) - C Z`` is singular with corank one exactly on the
    lattice, with ``kernel_vector`` spanning its left kernel.

    Determinants are divided by ``|prod exp(p tau)| + prod exp(-zeta)``,
    the size of the two terms of the cycle determinant.
    """
    h = cyc.h
    det_worst, deficit, ann_worst, mid_best = 0.0, 0, 0.0, math.inf
    for pt in spectral_set(cyc, 0, k_values):
        M = cyc.T_minus_CZ(pt.p)
        scale = float(np.prod(np.abs(np.exp(pt.p * cyc.tau))) + np.prod(np.exp(-cyc.zeta)))
        det_worst = max(det_worst, abs(np.linalg.det(M)) / scale)
        sv = np.linalg.svd(M, compute_uv=False)
        # scale by the entries, since M can vanish entirely when h = 1
        size = float(np.max(np.abs(np.exp(pt.p * cyc.tau))) + np.max(np.exp(-cyc.zeta)))
        rank = int(np.sum(sv > 1e3 * h * np.finfo(float).eps * size))
        deficit = max(deficit, abs(rank - (h - 1)))
        y = kernel_vector(cyc, pt.p)
        ann_worst = max(ann_worst, float(np.linalg.norm(y @ M) / (np.linalg.norm(y) * size)))
        mid = complex(pt.p.real, pt.p.imag + math.pi / cyc.S)
        Mm = cyc.T_minus_CZ(mid)
        mscale = float(np.prod(np.abs(np.exp(mid * cyc.tau))) + np.prod(np.exp(-cyc.zeta)))
        mid_best = min(mid_best, abs(np.linalg.det(Mm)) / mscale)
    return LatticeDiagnostics(det_worst, deficit, ann_worst, mid_best)


def _embed(n: int, cyc: CycleData, y: np.ndarray) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    out[list(cyc.edges)] = y
    return out


# --------------------------------------------------------------------------
# tests


@dataclass
class NetworkOptions:
    pass_tol: float = 1e-6
    fail_tol: float = 1e-10
    spectral_tol: float = SPECTRAL_TOL
    max_den: int = 1000
    max_period: int = 20000
    k_samples: int = 4096
    torus_samples: int = 2048
    workers: int = 4


def _margin(vectors: list[np.ndarray], B: np.ndarray) -> float:
    """``sigma_min(Q^H B) / ||B||`` with ``Q`` an orthonormal basis of the span."""
    nB = np.linalg.norm(B, 2) if B.size else 0.0
    if nB == 0.0:
        return 0.0
    Y = np.stack([v / np.linalg.norm(v) for v in vectors], axis=1)
    Q, _ = np.linalg.qr(Y)
    sv = np.linalg.svd(Q.conj().T @ B, compute_uv=False)
    if sv.size < Y.shape[1]:
        return 0.0
    return float(sv[Y.shape[1] - 1] / nB)


def _rational(x: float, max_den: int, tol: float) -> Optional[Fraction]:
    f = Fraction(x).limit_denominator(max_den)
    return f if abs(float(f) - x) <= tol * max(1.0, abs(x)) else None


def _lattice_period(cyc: CycleData, others: list[CycleData], opts: NetworkOptions) -> Optional[int]:
    """Period in ``k`` of every phase and membership pattern, if finite."""
    den = 1
    for c in [cyc] + others:
        for t in c.tau:
            f = _rational(t / cyc.S, opts.max_den, opts.spectral_tol)
            if f is None:
                return None
            den = math.lcm(den, f.denominator)
    return den


def _base_report(kind: str, sys: DifferenceSystem, t0: float) -> ControllabilityReport:
    return ControllabilityReport(kind=kind, verdict=INCONCLUSIVE, rank_KB=rank_KB(sys),
                                 min_det_found=math.nan, argmin_p=None, alpha_estimate=None,
                                 search_box={}, regime="network", seconds=time.perf_counter() - t0)


def _obstruction_report(rep: ControllabilityReport, dec, dec_info: dict) -> ControllabilityReport:
    rep.verdict = NOT_CONTROLLABLE
    rep.witness = dec.to_dict()
    rep.certificates["cycles"] = dec_info
    return rep


def network_approx_test(g: FlowGraph, opts: NetworkOptions | None = None) -> ControllabilityReport:
    """Approximate controllability of a network flow.

    Lattice points of cycles sharing a real part are tested together, so
    the kernel space ``V(p)`` may have dimension above one.
    """
    t0 = time.perf_counter()
    opts = opts or NetworkOptions()
    _, sys = build_network_system(g)
    rep = _base_report("network approximate", sys, t0)
    dec = cycle_decomposition(g, sys.K)
    if isinstance(dec, Obstruction):
        return _obstruction_report(rep, dec, {"obstruction": True})
    cycles = cycle_data(sys, dec)
    rep.certificates["cycles"] = {"sizes": list(dec.sizes), "order": list(dec.order)}
    B = sys.B
    worst, worst_p, exact = math.inf, None, True
    margins = []
    for l, cyc in enumerate(cycles):
        a = cyc.real_part
        group = [c for m, c in enumerate(cycles)
                 if m != l and abs(c.real_part - a) <= opts.spectral_tol * max(1.0, abs(a))]
        period = _lattice_period(cyc, group, opts)
        if period is not None and period <= opts.max_period:
            ks = range(period)
        else:
            exact = False
            ks = range(opts.k_samples)
        best, best_p = math.inf, None
        for k in ks:
            p = complex(a, 2 * math.pi * k / cyc.S)
            vecs = [_embed(sys.n, cyc, _kernel_unchecked(cyc, p))]
            for c in group:
                if spectral_distance(c, p) <= opts.spectral_tol * max(1.0, abs(p)):
                    vecs.append(_embed(sys.n, c, _kernel_unchecked(c, p)))
            mg = _margin(vecs, B)
            if mg < best:
                best, best_p = mg, p
        margins.append({"cycle": l, "margin": best, "p": best_p, "exact": period is not None,
                        "group": len(group) + 1})
        if best < worst:
            worst, worst_p = best, best_p
    rep.certificates["per_cycle"] = margins
    rep.min_det_found = worst
    rep.argmin_p = worst_p
    if rep.rank_KB < sys.n:
        rep.verdict = NOT_CONTROLLABLE
        rep.witness = {"type": "rank_KB", "rank": rep.rank_KB, "n": sys.n}
    elif worst < opts.fail_tol:
        rep.verdict = NOT_CONTROLLABLE
        rep.witness = {"type": "frequency", "p": worst_p, "margin": worst}
    elif worst > opts.pass_tol:
        rep.verdict = CONTROLLABLE
        if not exact:
            rep.notes.append("lattice sampled over finitely many k; almost-periodic margin")
    rep.seconds = time.perf_counter() - t0
    return rep


def _cycle_exact_margin(cyc: CycleData, B: np.ndarray, n: int, opts: NetworkOptions) -> dict:
    """Infimum over the closure of ``{y(p) : p on the lattice}`` of
    ``|y^T B| / (|y| |B|)``."""
    nB = np.linalg.norm(B, 2)
    rows = B[list(cyc.edges)]
    moduli = np.exp(cyc.real_part * np.concatenate([[0.0], np.cumsum(cyc.tau[:-1])])
                    + np.concatenate([[0.0], np.cumsum(cyc.zeta[:-1])]))

    def value(phase_steps: np.ndarray) -> np.ndarray:
        # phase_steps: (N, h - 1) phases of the factors exp(i Im p tau_t)
        ph = np.concatenate([np.zeros((phase_steps.shape[0], 1)), np.cumsum(phase_steps, axis=1)], axis=1)
        y = moduli * np.exp(1j * ph)
        return np.linalg.norm(y @ rows, axis=1) / (np.linalg.norm(y, axis=1) * nB)

    if nB == 0.0:
        return {"margin": 0.0, "method": "trivial", "phases": []}
    if cyc.h == 1:
        return {"margin": float(value(np.zeros((1, 0)))[0]), "method": "exact", "phases": []}
    ratios = cyc.tau[:-1] / cyc.S
    period = _lattice_period(cyc, [], opts)
    if period is not None and period <= opts.max_period:
        ks = np.arange(period)
        vals = value(2 * math.pi * np.outer(ks, ratios))
        i = int(np.argmin(vals))
        return {"margin": float(vals[i]), "method": "enumeration", "period": int(period),
                "phases": (2 * math.pi * ks[i] * ratios % (2 * math.pi)).tolist()}
    dim = cyc.h - 1
    ks = np.arange(opts.torus_samples * dim)
    steps = 2 * math.pi * np.outer(ks, ratios)
    vals = value(steps)
    i = int(np.argmin(vals))
    best, best_x = float(vals[i]), steps[i] % (2 * math.pi)
    from .controllability import integer_relation

    if integer_relation(np.concatenate([[1.0], ratios])) is None:
        # the lattice phases are dense in the full torus: refine freely
        order = np.argsort(vals)[:8]
        for j in order:
            res = minimize(lambda x: float(value(x[None, :])[0]), steps[j] % (2 * math.pi),
                           method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
            if res.fun < best:
                best, best_x = float(res.fun), np.mod(res.x, 2 * math.pi)
        method = "torus"
    else:
        method = "sampled"
    return {"margin": best, "method": method, "phases": np.asarray(best_x).tolist()}


def network_exact_test(g: FlowGraph, opts: NetworkOptions | None = None) -> ControllabilityReport:
    """Exact (L1) controllability of a network flow, cycle by cycle.

    Requires pairwise distinct ratios ``sum(zeta) / sum(tau)`` across
    cycles; otherwise the verdict is Inconclusive unless already negative.
    """
    t0 = time.perf_counter()
    opts = opts or NetworkOptions()
    _, sys = build_network_system(g)
    rep = _base_report("network exact (L1)", sys, t0)
    dec = cycle_decomposition(g, sys.K)
    if isinstance(dec, Obstruction):
        return _obstruction_report(rep, dec, {"obstruction": True})
    cycles = cycle_data(sys, dec)
    rep.certificates["cycles"] = {"sizes": list(dec.sizes), "order": list(dec.order)}
    reals = [c.real_part for c in cycles]
    distinct = all(abs(reals[a] - reals[b]) > opts.spectral_tol * max(1.0, abs(reals[a]))
                   for a in range(len(reals)) for b in range(a))

    def run(c):
        return _cycle_exact_margin(c, sys.B, sys.n, opts)

    if len(cycles) > 1 and opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as ex:
            per = list(ex.map(run, cycles))
    else:
        per = [run(c) for c in cycles]
    for l, d in enumerate(per):
        d["cycle"] = l
    rep.certificates["per_cycle"] = per
    worst = min(per, key=lambda d: d["margin"])
    rep.alpha_estimate = worst["margin"]
    rep.min_det_found = worst["margin"]
    rep.notes.append("L1 statement; for q in (1, inf) the criterion is conjectural")
    if rep.rank_KB < sys.n:
        rep.verdict = NOT_CONTROLLABLE
        rep.witness = {"type": "rank_KB", "rank": rep.rank_KB, "n": sys.n}
    elif worst["margin"] < opts.fail_tol:
        rep.verdict = NOT_CONTROLLABLE
        rep.witness = {"type": "limit_matrix", "cycle": worst["cycle"], "phases": worst["phases"]}
    elif not distinct:
        rep.notes.append("cycles share a ratio sum(zeta)/sum(tau); per-cycle test does not apply")
    elif worst["margin"] > opts.pass_tol:
        rep.verdict = CONTROLLABLE
    rep.seconds = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# spec files and random instances


def graph_from_dict(d: dict) -> FlowGraph:
    """Parse ``vertices``, ``edges``, optional sparse ``weights`` and ``gamma``.

    Missing weights default to a uniform split over outgoing edges.
    """
    try:
        k = int(d["vertices"])
        edges, speeds, damps = [], [], []
        for j, e in enumerate(d["edges"]):
            edges.append((int(e["tail"]), int(e["head"])))
            speeds.append(_profile(e.get("speed", -1.0), f"edges[{j}].speed"))
            damps.append(_profile(e.get("damping", 0.0), f"edges[{j}].damping"))
        n = len(edges)
        W = np.zeros((k, n))
        if "weights" in d:
            for v, j, w in d["weights"]:
                W[int(v), int(j)] = float(w)
        else:
            for j, (tail, _) in enumerate(edges):
                if 0 <= tail < k:
                    W[tail, j] = 1.0
            sums = W.sum(axis=1, keepdims=True)
            W = np.divide(W, sums, out=np.zeros_like(W), where=sums > 0)
        gamma = _rowmajor(d.get("gamma", np.zeros((k, 0))), k, None, "gamma")
        return FlowGraph(k, tuple(edges), W, gamma, tuple(speeds), tuple(damps))
    except SpecFormatError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise SpecFormatError(f"invalid graph spec: {exc!r}") from exc


def load_graph(path) -> FlowGraph:
    return graph_from_dict(_load_mapping(path))


def graph_to_dict(g: FlowGraph) -> dict:
    return {
        "vertices": g.vertex_count,
        "edges": [{"tail": a, "head": b, "speed": s.to_dict(), "damping": z.to_dict()}
                  for (a, b), s, z in zip(g.edges, g.speeds, g.dampings)],
        "weights": [[int(v), int(j), float(g.weights[v, j])] for v, j in zip(*np.nonzero(g.weights))],
        "gamma": g.gamma.tolist(),
    }


def _random_speed(rng: np.random.Generator, tau: float | None, pieces: int) -> PiecewiseConstant:
    if tau is not None:
        return PiecewiseConstant.constant(0.0, 1.0, -1.0 / tau)
    inv = rng.uniform(0.5, 2.0, size=pieces)
    cuts = np.sort(rng.uniform(0.0, 1.0, size=pieces - 1))
    return PiecewiseConstant(np.concatenate([[0.0], cuts, [1.0]]), -1.0 / inv)


def _random_damping(rng: np.random.Generator, scale: float, pieces: int) -> PiecewiseConstant:
    if scale == 0.0:
        return PiecewiseConstant.zeros(0.0, 1.0)
    cuts = np.sort(rng.uniform(0.0, 1.0, size=pieces - 1))
    return PiecewiseConstant(np.concatenate([[0.0], cuts, [1.0]]), rng.uniform(-scale, scale, size=pieces))


def random_cycle_graph(rng: np.random.Generator, sizes: Sequence[int], m: int = 1,
                       delays: Sequence[float] | None = None, damping: float = 0.5,
                       pieces: int = 3, shuffle: bool = True, gamma=None) -> FlowGraph:
    """Disjoint directed cycles of the given sizes, vertices relabeled at random."""
    k = int(sum(sizes))
    perm = rng.permutation(k) if shuffle else np.arange(k)
    edges, a = [], 0
    for h in sizes:
        for t in range(h):
            edges.append((int(perm[a + t]), int(perm[a + (t + 1) % h])))
        a += h
    if shuffle:
        edges = [edges[i] for i in rng.permutation(k)]
    W = np.zeros((k, k))
    for j, (tail, _) in enumerate(edges):
        W[tail, j] = 1.0
    taus = list(delays) if delays is not None else [None] * k
    speeds = tuple(_random_speed(rng, taus[j], pieces) for j in range(k))
    damps = tuple(_random_damping(rng, damping, pieces) for _ in range(k))
    G = rng.normal(size=(k, m)) if gamma is None else np.asarray(gamma, dtype=float)
    return FlowGraph(k, tuple(edges), W, G, speeds, damps)


def random_merge_graph(rng: np.random.Generator, k: int = 4, extra: int = 2, m: int = 1,
                       damping: float = 0.5, pieces: int = 3) -> FlowGraph:
    """Valid graph with at least one vertex receiving two edges."""
    perm = rng.permutation(k)
    edges = [(int(perm[t]), int(perm[(t + 1) % k])) for t in range(k)]
    for _ in range(max(1, extra)):
        edges.append((int(rng.integers(k)), int(rng.integers(k))))
    n = len(edges)
    W = np.zeros((k, n))
    for j, (tail, _) in enumerate(edges):
        W[tail, j] = rng.uniform(0.2, 1.0)
    W /= W.sum(axis=1, keepdims=True)
    speeds = tuple(_random_speed(rng, None, pieces) for _ in range(n))
    damps = tuple(_random_damping(rng, damping, pieces) for _ in range(n))
    return FlowGraph(k, tuple(edges), W, rng.normal(size=(k, m)), speeds, damps)
