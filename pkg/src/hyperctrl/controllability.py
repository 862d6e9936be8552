"""Frequency-domain controllability tests for ``y = K y(t - tau) + B u``.

Approximate controllability holds iff ``rank [K, B] = n`` and
``rank [H(p), B] = n`` for all complex ``p``, with
``H(p) = diag(exp(p tau)) - K``.  Exact (L1) controllability holds iff
``det(H H^* + B B^*)`` is bounded away from zero over the whole plane.

Both are conditions over all of C, so the search is a semi-decision
returning one of three verdicts.  Three regimes are handled differently:

* commensurable delays: ``H`` is periodic in ``Im p``; one period of the
  strip is searched, and the result is cross-checked by an exact Kalman
  rank test on the single-delay augmentation;
* rationally independent delays: the phases ``Im(p) tau_j`` fill the torus,
  so minimizing over independent phases gives the closure infimum;
* anything else: strip sampling only, with conservative verdicts.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import FrequencyOutOfRange, NotCommensurable
from .system import DifferenceSystem, as_difference_system

CONTROLLABLE = "Controllable"
NOT_CONTROLLABLE = "NotControllable"
INCONCLUSIVE = "Inconclusive"

EXP_GUARD = 700.0


def _rtol(sv_max: float, n: int, m: int) -> float:
    return max(n, n + m) * np.finfo(float).eps * sv_max


@dataclass(frozen=True)
class HautusValue:
    p: complex
    det_criterion: float
    min_sv: float
    rank: int
    normalized: float


def _scale(sys: DifferenceSystem) -> float:
    return float(np.linalg.norm(sys.K, 2) ** 2 + (np.linalg.norm(sys.B, 2) ** 2 if sys.m else 0.0))


def normalizer(sys: DifferenceSystem, sigma) -> np.ndarray:
    """``prod_j (exp(2 sigma tau_j) + ||K||^2 + ||B||^2)``."""
    sigma = np.asarray(sigma, dtype=float)
    c = _scale(sys)
    return np.prod(np.exp(2.0 * sigma[..., None] * sys.delays) + c, axis=-1)


def hautus_value(sys, p: complex) -> HautusValue:
    sys = as_difference_system(sys)
    p = complex(p)
    if abs(p.real) * sys.tau_max > EXP_GUARD:
        raise FrequencyOutOfRange(f"|Re p| tau_max = {abs(p.real) * sys.tau_max:g} > {EXP_GUARD}")
    HB = np.hstack([sys.H(p), sys.B.astype(complex)])
    sv = np.linalg.svd(HB, compute_uv=False)
    tol = _rtol(sv[0] if sv.size else 0.0, sys.n, sys.m)
    det = float(np.prod(sv ** 2))
    return HautusValue(p, det, float(sv[-1]), int(np.sum(sv > tol)),
                       det / float(normalizer(sys, p.real)))


def _criterion_batch(sys: DifferenceSystem, diag: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Normalized ``det([H, B][H, B]^*)`` for a batch of diagonals ``(N, n)``."""
    N = diag.shape[0]
    n, m = sys.n, sys.m
    HB = np.empty((N, n, n + m), dtype=complex)
    HB[:, :, :n] = -sys.K
    idx = np.arange(n)
    HB[:, idx, idx] += diag
    HB[:, :, n:] = sys.B
    sv = np.linalg.svd(HB, compute_uv=False)
    return np.prod(sv ** 2, axis=-1) / normalizer(sys, sigma)


def criterion_grid(sys: DifferenceSystem, sigmas: np.ndarray, omegas: np.ndarray,
                   chunk: int = 20000) -> np.ndarray:
    """Normalized criterion on the tensor grid ``sigmas x omegas``."""
    S, W = np.meshgrid(sigmas, omegas, indexing="ij")
    p = (S + 1j * W).reshape(-1)
    out = np.empty(p.size)
    for a in range(0, p.size, chunk):
        blk = p[a:a + chunk]
        out[a:a + chunk] = _criterion_batch(sys, np.exp(blk[:, None] * sys.delays), blk.real)
    return out.reshape(S.shape)


def rank_KB(sys) -> int:
    sys = as_difference_system(sys)
    KB = np.hstack([sys.K, sys.B])
    sv = np.linalg.svd(KB, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > _rtol(sv[0], sys.n, sys.m)))


# --------------------------------------------------------------------------
# commensurable delays


@dataclass(frozen=True)
class Augmentation:
    """Single-delay form ``x(k+1) = Kt x(k) + Bt u(k)`` with step ``base``."""

    K: np.ndarray
    B: np.ndarray
    base: float
    multiplicities: tuple[int, ...]

    @property
    def dim(self) -> int:
        return int(sum(self.multiplicities))


def common_base(delays, tol: float = 1e-9, max_den: int = 1000) -> tuple[float, tuple[int, ...]]:
    """Largest ``h`` with every ``tau_i / h`` an integer, within ``tol``."""
    tau = np.asarray(delays, dtype=float)
    ref = tau[0]
    fracs = []
    for t in tau:
        f = Fraction(t / ref).limit_denominator(max_den)
        if abs(float(f) - t / ref) > tol * max(1.0, t / ref):
            raise NotCommensurable(f"tau ratio {t / ref!r} is not rational within {tol:g}")
        fracs.append(f)
    den = math.lcm(*(f.denominator for f in fracs))
    ints = [int(f * den) for f in fracs]
    g = math.gcd(*ints)
    ints = [k // g for k in ints]
    return ref * g / den, tuple(ints)


def commensurable_reduce(sys, tol: float = 1e-9, max_den: int = 1000,
                         max_dim: int = 4096) -> Augmentation:
    sys = as_difference_system(sys)
    base, mult = common_base(sys.delays, tol, max_den)
    d = sum(mult)
    if d > max_dim:
        raise NotCommensurable(f"augmented dimension {d} exceeds {max_dim}")
    offs = np.concatenate([[0], np.cumsum(mult)[:-1]]).astype(int)
    Kt = np.zeros((d, d))
    Bt = np.zeros((d, sys.m))
    for i in range(sys.n):
        for j in range(sys.n):
            Kt[offs[i], offs[j] + mult[j] - 1] = sys.K[i, j]
        for r in range(1, mult[i]):
            Kt[offs[i] + r, offs[i] + r - 1] = 1.0
        Bt[offs[i]] = sys.B[i]
    return Augmentation(Kt, Bt, base, mult)


def kalman_rank(A, B, rtol: float = 1e-10) -> int:
    """Dimension of the reachable subspace of ``(A, B)``.

    Grows an orthonormal Krylov basis instead of forming
    ``[B, AB, ..., A^{d-1} B]`` explicitly.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    d = A.shape[0]
    if B.size == 0:
        return 0
    scale = max(np.linalg.norm(A, 2), np.linalg.norm(B, 2), 1.0)

    def orth(M):
        if M.shape[1] == 0:
            return M
        U, s, _ = np.linalg.svd(M, full_matrices=False)
        return U[:, s > rtol * scale * max(1.0, s[0] / scale)]

    V = orth(B)
    frontier = V
    while V.shape[1] < d and frontier.shape[1]:
        new = A @ frontier
        new = new - V @ (V.T @ new)
        new = new - V @ (V.T @ new)
        frontier = orth(new) if new.size else new
        if frontier.shape[1] == 0:
            break
        V = np.hstack([V, frontier])
    return int(V.shape[1])


def kalman_verdict(sys, tol: float = 1e-9) -> tuple[str, Augmentation, int]:
    aug = commensurable_reduce(sys, tol)
    r = kalman_rank(aug.K, aug.B)
    return (CONTROLLABLE if r == aug.dim else NOT_CONTROLLABLE), aug, r


def commensurable_roots(sys, tol: float = 1e-9) -> list[complex]:
    """Zeros of ``det H(p)`` with ``0 <= Im p < 2 pi / base``.

    With ``tau_i = N_i h`` the zeros are ``p = log(lam) / h`` for the nonzero
    eigenvalues ``lam`` of the augmented matrix.
    """
    sys = as_difference_system(sys)
    aug = commensurable_reduce(sys, tol)
    lam = np.linalg.eigvals(aug.K) if aug.dim else np.zeros(0)
    out = []
    for z in lam:
        if z == 0:
            continue
        p = complex(np.log(complex(z))) / aug.base
        if abs(p.real) * sys.tau_max > EXP_GUARD:
            continue
        out.append(complex(p.real, p.imag % (2 * math.pi / aug.base)))
    return out


def integer_relation(delays, max_coeff: int = 1000, tol: float = 1e-10):
    """Integer vector ``c`` with ``c . tau ~ 0``, or ``None``."""
    import mpmath

    tau = [float(t) for t in delays]
    if len(tau) < 2:
        return None
    with mpmath.workdps(30):
        rel = mpmath.pslq(tau, tol=tol, maxcoeff=max_coeff, maxsteps=10000)
    return rel


# --------------------------------------------------------------------------
# strip search


@dataclass
class SearchOptions:
    sigma_min: Optional[float] = None
    sigma_max: Optional[float] = None
    im_max: Optional[float] = None
    grid: int = 64
    re_points: int = 40
    refine: int = 10
    pass_tol: float = 1e-6
    fail_tol: float = 1e-10
    commensurable_tol: float = 1e-9
    torus_points: int = 24
    max_points: int = 4_000_000


@dataclass
class ControllabilityReport:
    kind: str
    verdict: str
    rank_KB: int
    min_det_found: float
    argmin_p: Optional[complex]
    alpha_estimate: Optional[float]
    search_box: dict
    regime: str
    witness: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        p = self.argmin_p
        d["argmin_p"] = None if p is None else [p.real, p.imag]
        return _jsonable(d)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


@dataclass
class StripResult:
    sigma_min: float
    sigma_max: float
    im_max: float
    value: float
    p: complex
    left_limit: float
    regime: str
    period: Optional[float]
    torus_value: Optional[float] = None
    torus_point: Optional[tuple] = None

    def box(self) -> dict:
        return {"sigma_min": self.sigma_min, "sigma_max": self.sigma_max,
                "im_min": 0.0, "im_max": self.im_max, "period": self.period}


def strip_bounds(sys: DifferenceSystem, opts: SearchOptions) -> tuple[float, float]:
    nK = float(np.linalg.norm(sys.K, 2))
    smax = opts.sigma_max if opts.sigma_max is not None else math.log(1.0 + sys.n * nK) / sys.tau_min
    smin = opts.sigma_min if opts.sigma_min is not None else math.log(1e-8 * (1.0 + nK)) / sys.tau_min
    guard = EXP_GUARD / sys.tau_max
    return max(smin, -guard), min(max(smax, smin + 1e-9), guard)


def _classify(sys: DifferenceSystem, opts: SearchOptions) -> tuple[str, Optional[float]]:
    try:
        base, _ = common_base(sys.delays, opts.commensurable_tol)
        return "commensurable", base
    except NotCommensurable:
        pass
    if integer_relation(sys.delays) is None:
        return "independent", None
    return "mixed", None


REFINE_FLOOR = 1e-18


def _refine(f, x0, lo, hi, iters: int = 4000):
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)

    # the floor lets the simplex stop once a value is far below any tolerance
    def g(x):
        return math.log10(f(np.clip(x, lo, hi)) + REFINE_FLOOR)

    span = hi - lo
    res = minimize(g, x0, method="Nelder-Mead",
                   options={"xatol": 1e-14 * max(1.0, float(np.max(np.abs(x0)))), "fatol": 1e-12,
                            "maxiter": iters, "maxfev": iters * 2,
                            "initial_simplex": _simplex(np.asarray(x0, float), span / 200.0, lo, hi)})
    x = np.clip(res.x, lo, hi)
    return x, f(x)


def _simplex(x0, step, lo, hi):
    pts = [x0]
    for k in range(x0.size):
        e = x0.copy()
        e[k] = e[k] + step[k] if e[k] + step[k] <= hi[k] else e[k] - step[k]
        pts.append(e)
    return np.array(pts)


def _local_minima(vals: np.ndarray, count: int) -> list[tuple[int, ...]]:
    """Indices of the ``count`` smallest grid points that are local minima."""
    from scipy.ndimage import minimum_filter

    mins = vals == minimum_filter(vals, size=3, mode="nearest")
    idx = np.argwhere(mins)
    order = np.argsort(vals[mins])
    picked = [tuple(idx[k]) for k in order[:count]]
    if not picked:
        picked = [np.unravel_index(np.argmin(vals), vals.shape)]
    return picked


def search_strip(sys, opts: SearchOptions | None = None) -> StripResult:
    """Minimize the normalized criterion over the strip, plus the
    ``Re p -> -inf`` limit and, for independent delays, the phase torus."""
    sys = as_difference_system(sys)
    opts = opts or SearchOptions()
    smin, smax = strip_bounds(sys, opts)
    regime, base = _classify(sys, opts)
    period = 2 * math.pi / base if base is not None else None
    if opts.im_max is not None:
        im_max = opts.im_max
    else:
        im_max = 4 * math.pi / sys.tau_min
        if period is not None:
            im_max = max(im_max, period)
    # criterion is symmetric under conjugation, so Im p >= 0 suffices
    n_im = max(64, int(math.ceil(opts.grid * im_max * sys.T_star / (2 * math.pi))))
    n_re = max(8, opts.re_points)
    if n_im * n_re > opts.max_points:
        n_im = max(64, opts.max_points // n_re)
    sig = np.linspace(smin, smax, n_re)
    om = np.linspace(0.0, im_max, n_im)
    vals = criterion_grid(sys, sig, om)

    def f(x):
        return float(_criterion_batch(sys, np.exp((x[0] + 1j * x[1]) * sys.delays)[None, :],
                                      np.array([x[0]]))[0])

    found = []
    for a, b in _local_minima(vals, opts.refine):
        x, v = _refine(f, np.array([sig[a], om[b]]), [smin, 0.0], [smax, im_max])
        found.append((v, complex(x[0], x[1])))
    best_v, best_p = min(found, key=lambda c: c[0])
    zeros = [c for c in found if c[0] < opts.fail_tol]
    if zeros:
        # among numerically singular points report the one nearest the origin
        best_v, best_p = min(zeros, key=lambda c: abs(c[1]))
    c = _scale(sys)
    KB = np.hstack([sys.K, sys.B])
    left = float(np.prod(np.linalg.svd(KB, compute_uv=False) ** 2) / c ** sys.n) if c > 0 else 0.0
    res = StripResult(smin, smax, im_max, best_v, best_p, left, regime, period)
    if regime == "independent":
        res.torus_value, res.torus_point = _search_torus(sys, smin, smax, opts)
    return res


def _search_torus(sys: DifferenceSystem, smin: float, smax: float, opts: SearchOptions):
    """Infimum over ``diag(exp(sigma tau_j + i theta_j)) - K`` with free phases."""
    n = sys.n
    k = opts.torus_points
    th = np.linspace(0.0, 2 * math.pi, k, endpoint=False)
    sig = np.linspace(smin, smax, max(8, opts.re_points // 2))
    grids = np.meshgrid(sig, *([th] * n), indexing="ij")
    S = grids[0].reshape(-1)
    TH = np.stack([g.reshape(-1) for g in grids[1:]], axis=-1)
    vals = np.empty(S.size)
    chunk = 20000
    for a in range(0, S.size, chunk):
        s = S[a:a + chunk]
        diag = np.exp(s[:, None] * sys.delays) * np.exp(1j * TH[a:a + chunk])
        vals[a:a + chunk] = _criterion_batch(sys, diag, s)
    shape = tuple(g.shape for g in grids)[0]
    vals = vals.reshape(shape)

    def f(x):
        diag = np.exp(x[0] * sys.delays + 1j * x[1:])[None, :]
        return float(_criterion_batch(sys, diag, np.array([x[0]]))[0])

    lo = [smin] + [-4 * math.pi] * n
    hi = [smax] + [4 * math.pi] * n
    best_v, best_x = math.inf, None
    for idx in _local_minima(vals, opts.refine):
        x0 = np.array([sig[idx[0]]] + [th[i] for i in idx[1:]])
        x, v = _refine(f, x0, lo, hi)
        if v < best_v:
            best_v, best_x = v, x
    theta = tuple(float(t % (2 * math.pi)) for t in best_x[1:])
    return best_v, (float(best_x[0]), theta)


# --------------------------------------------------------------------------
# reports


def _base_report(kind: str, sys: DifferenceSystem, strip: StripResult, r: int, t0: float) -> ControllabilityReport:
    return ControllabilityReport(
        kind=kind, verdict=INCONCLUSIVE, rank_KB=r, min_det_found=strip.value,
        argmin_p=strip.p, alpha_estimate=None, search_box=strip.box(), regime=strip.regime,
        certificates={"left_limit": strip.left_limit, "torus_infimum": strip.torus_value},
        seconds=time.perf_counter() - t0)


def approx_controllability_report(sys, opts: SearchOptions | None = None,
                                  strip: StripResult | None = None) -> ControllabilityReport:
    """Approximate controllability in time ``T* = sum(tau)``."""
    t0 = time.perf_counter()
    sys = as_difference_system(sys)
    opts = opts or SearchOptions()
    r = rank_KB(sys)
    strip = strip or search_strip(sys, opts)
    rep = _base_report("approximate", sys, strip, r, t0)
    if r < sys.n:
        rep.verdict = NOT_CONTROLLABLE
        rep.witness = {"type": "rank_KB", "rank": r, "n": sys.n}
    elif strip.value < opts.fail_tol:
        rep.verdict = NOT_CONTROLLABLE
        rep.witness = {"type": "frequency", "p": strip.p, "normalized_det": strip.value}
    elif strip.regime == "commensurable":
        # off the zeros of det H(p) the rank is full; the zeros are known exactly
        roots = commensurable_roots(sys, opts.commensurable_tol)
        vals = [(hautus_value(sys, p).normalized, p) for p in roots]
        rep.certificates["roots"] = len(vals)
        if vals:
            v, p = min(vals, key=lambda c: c[0])
            rep.certificates["min_at_roots"] = v
            if v < opts.fail_tol:
                rep.verdict = NOT_CONTROLLABLE
                rep.witness = {"type": "frequency", "p": p, "normalized_det": v}
                rep.min_det_found, rep.argmin_p = v, p
            else:
                rep.verdict = CONTROLLABLE
        else:
            rep.verdict = CONTROLLABLE
    elif strip.value > opts.pass_tol:
        rep.verdict = CONTROLLABLE
    if strip.torus_value is not None and strip.torus_value > opts.pass_tol:
        # the closure infimum bounds every p of the strip from below
        rep.notes.append("torus infimum certifies the whole strip, not only the sampled window")
    elif strip.regime != "commensurable":
        rep.notes.append("strip search only samples Im p <= im_max; verdict is a semi-decision")
    rep.seconds = time.perf_counter() - t0
    return rep


def exact_controllability_report(sys, opts: SearchOptions | None = None,
                                 strip: StripResult | None = None) -> ControllabilityReport:
    """Exact controllability in ``L1`` and time ``T*``.

    The label is an L1 statement; for ``q > 1`` the same condition is only
    conjectured to characterize exact controllability.
    """
    t0 = time.perf_counter()
    sys = as_difference_system(sys)
    opts = opts or SearchOptions()
    strip = strip or search_strip(sys, opts)
    approx = approx_controllability_report(sys, opts, strip)
    rep = _base_report("exact (L1)", sys, strip, approx.rank_KB, t0)
    candidates = [strip.value, strip.left_limit]
    if strip.torus_value is not None:
        candidates.append(strip.torus_value)
    alpha = min(candidates)
    rep.alpha_estimate = alpha
    rep.notes.append("L1 statement; for q in (1, inf) the criterion is conjectural")
    if approx.verdict == NOT_CONTROLLABLE:
        rep.verdict = NOT_CONTROLLABLE
        rep.witness = dict(approx.witness, implied_by="approximate")
    elif alpha < opts.fail_tol:
        rep.verdict = NOT_CONTROLLABLE
        if strip.torus_value is not None and alpha == strip.torus_value:
            sigma, theta = strip.torus_point
            rep.witness = {"type": "limit_matrix", "sigma": sigma, "phases": list(theta)}
        else:
            rep.witness = {"type": "frequency", "p": strip.p, "normalized_det": strip.value}
    elif alpha > opts.pass_tol and strip.regime in ("commensurable", "independent"):
        rep.verdict = CONTROLLABLE
    elif alpha > opts.pass_tol:
        rep.verdict = INCONCLUSIVE
        rep.notes.append("delays satisfy a partial integer relation; closure of H(C) only sampled")
    rep.seconds = time.perf_counter() - t0
    return rep


def analyze(sys, opts: SearchOptions | None = None) -> dict:
    """Both reports plus, when available, the Kalman cross-check."""
    sys = as_difference_system(sys)
    opts = opts or SearchOptions()
    strip = search_strip(sys, opts)
    out = {
        "approximate": approx_controllability_report(sys, opts, strip),
        "exact": exact_controllability_report(sys, opts, strip),
    }
    try:
        verdict, aug, r = kalman_verdict(sys, opts.commensurable_tol)
        out["kalman"] = {"verdict": verdict, "base": aug.base, "dim": aug.dim, "rank": r}
    except NotCommensurable:
        out["kalman"] = None
    return out
