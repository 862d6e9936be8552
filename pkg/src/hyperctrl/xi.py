"""Coefficient matrices of the explicit solution formula.

``Xi[l]`` for a multi-index ``l`` is defined by ``Xi[0] = I``, ``Xi[l] = 0``
when some entry is negative, and

    Xi[l] = sum_k  K e_k e_k^T Xi[l - e_k].

Equivalently ``(K diag(t))^j = sum_{|l| = j} Xi[l] t^l``.  The multilinear
polynomial ``det(I - K diag(t)) = sum_{k in {0,1}^n} alpha_k t^k`` yields a
finite recurrence for the rows of ``Xi``, used to shorten control horizons.
"""

from __future__ import annotations

import itertools
import threading
from typing import Iterator

import numpy as np

from .errors import IneligibleIndex, TooLarge

MultiIndex = tuple[int, ...]


def compositions(total: int, n: int) -> Iterator[MultiIndex]:
    """All ``l`` in N^n with ``|l| = total``."""
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, n - 1):
            yield (first,) + rest


class XiTable:
    """Memoized ``Xi`` family for a fixed ``K``.

    The memo is filled lazily and guarded by a lock, so a table may be
    shared between threads.  ``sign_fault=True`` negates the first term of
    the recursion; it exists only as a negative control for the verification
    suite.
    """

    def __init__(self, K, sign_fault: bool = False):
        K = np.array(K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("K must be square")
        K.setflags(write=False)
        self.K = K
        self.n = K.shape[0]
        self.sign_fault = sign_fault
        self._memo: dict[MultiIndex, np.ndarray] = {(0,) * self.n: np.eye(self.n)}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._memo)

    def __getitem__(self, ell) -> np.ndarray:
        return self.xi(ell)

    def xi(self, ell) -> np.ndarray:
        ell = tuple(int(v) for v in ell)
        if len(ell) != self.n:
            raise ValueError(f"multi-index must have length {self.n}")
        if min(ell) < 0:
            return np.zeros((self.n, self.n))
        with self._lock:
            hit = self._memo.get(ell)
            if hit is not None:
                return hit
            # fill the box below ell by increasing |l|; avoids deep recursion
            for sub in sorted(itertools.product(*(range(v + 1) for v in ell)), key=sum):
                if sub not in self._memo:
                    self._memo[sub] = self._step(sub)
            return self._memo[ell]

    def _step(self, ell: MultiIndex) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for k in range(self.n):
            if ell[k] == 0:
                continue
            prev = self._memo[ell[:k] + (ell[k] - 1,) + ell[k + 1:]]
            term = np.outer(self.K[:, k], prev[k, :])
            if self.sign_fault and k == 0:
                term = -term
            out += term
        out.setflags(write=False)
        return out

    def level(self, total: int) -> dict[MultiIndex, np.ndarray]:
        return {ell: self.xi(ell) for ell in compositions(total, self.n)}

    def bound(self, ell) -> float:
        """``(n ||K||)^{|l|}`` with the spectral norm."""
        return float((self.n * np.linalg.norm(self.K, 2)) ** sum(ell))


def char_coefficients(K, max_n: int = 16) -> dict[MultiIndex, float]:
    """Coefficients of ``det(I - K diag(t)) = sum_k alpha_k t^k``.

    Evaluates the determinant at the 2^n vertices of the unit cube and
    inverts the subset-sum (zeta) transform.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if n > max_n:
        raise TooLarge(f"n = {n} exceeds the bound {max_n} (2^n coefficients)")
    size = 1 << n
    vals = np.empty(size)
    eye = np.eye(n)
    for mask in range(size):
        t = np.array([(mask >> i) & 1 for i in range(n)], dtype=float)
        vals[mask] = np.linalg.det(eye - K * t) if n else 1.0
    # Moebius inversion over the subset lattice
    for i in range(n):
        bit = 1 << i
        for mask in range(size):
            if mask & bit:
                vals[mask] -= vals[mask ^ bit]
    return {tuple((mask >> i) & 1 for i in range(n)): float(vals[mask]) for mask in range(size)}


def is_eligible(ell, j: int) -> bool:
    ell = tuple(ell)
    return min(ell) >= 0 and (max(ell) >= 2 or ell[j] == 1)


def verify_xi_recurrence(table: XiTable, ell, j: int,
                         alpha: dict[MultiIndex, float] | None = None) -> float:
    """Norm of ``e_j^T Xi[l] + sum_{k != 0} alpha_k e_j^T Xi[l - k]``."""
    ell = tuple(int(v) for v in ell)
    if len(ell) != table.n or not 0 <= j < table.n:
        raise IneligibleIndex("index shape does not match the table")
    if not is_eligible(ell, j):
        raise IneligibleIndex(f"l = {ell}, j = {j}: need max(l) >= 2 or l_j = 1")
    if alpha is None:
        alpha = char_coefficients(table.K)
    row = table.xi(ell)[j].copy()
    for k, a in alpha.items():
        if any(k):
            row += a * table.xi(tuple(x - y for x, y in zip(ell, k)))[j]
    return float(np.linalg.norm(row))


def power_sum_check(table: XiTable, t, j: int) -> float:
    """``||(K diag(t))^j - sum_{|l| = j} Xi[l] t^l||``."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    t = np.asarray(t, dtype=float)
    lhs = np.linalg.matrix_power(table.K * t, j)
    rhs = np.zeros_like(lhs)
    for ell in compositions(j, table.n):
        rhs += table.xi(ell) * float(np.prod(t ** np.array(ell)))
    return float(np.linalg.norm(lhs - rhs, 2))


def enumerate_bounded(delays, bound: float, slack: float = 1e-12) -> list[MultiIndex]:
    """All ``l`` in N^n with ``tau . l <= bound`` in nondecreasing ``|l|``."""
    tau = np.asarray(delays, dtype=float)
    n = tau.size
    out: list[MultiIndex] = []
    if bound < -slack:
        return out
    tol = slack * max(1.0, abs(bound))

    def rec(prefix: tuple[int, ...], remaining: float):
        i = len(prefix)
        if i == n:
            out.append(prefix)
            return
        k = 0
        while k * tau[i] <= remaining + tol:
            rec(prefix + (k,), remaining - k * tau[i])
            k += 1

    rec((), bound)
    out.sort(key=lambda e: (sum(e), e))
    return out
