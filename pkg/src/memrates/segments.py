"""Longest strange segments R_m and the dual hitting times T_r.

R_m is the longest window among the first m steps whose normalised
increment (S_l - S_{l-n}) / a_n lies in the target set; R_m = 0 when no
window qualifies. T_r is the first l admitting a qualifying window of
length at least r.

For a half-line (y, inf) and a_n proportional to n the window condition is
S~_l > S~_k with S~_k = S_k - y k, so the earliest admissible start for each
l is found by binary search in the running prefix minimum of S~. General
normalisations fall back to the quadratic scan.

The two routes round differently: the scan divides a window sum by its
length, the fast route compares S_l - y l with S_k - y k. They agree
except on windows whose mean equals the threshold up to rounding, which
only happens when the threshold is not a binary fraction and the data
have exact ties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParameter, NotFoundWithinBudget, UnsupportedSet
from .model import RegimeSpec, TargetSet
from .simulate import Path

__all__ = [
    "Witness",
    "GrowthTable",
    "longest_strange_segment_exact",
    "longest_strange_segment_fast",
    "longest_segment_profile",
    "first_hitting_T",
    "growth_statistic",
    "EXACT_CAP",
]

EXACT_CAP = 50_000


@dataclass(frozen=True)
class Witness:
    l: int
    n: int


def _sums(path) -> np.ndarray:
    if isinstance(path, Path):
        return path.sums
    x = np.asarray(path, dtype=float)
    zero = np.zeros((1,) + x.shape[1:])
    return np.concatenate([zero, np.cumsum(x, axis=0)])


def _a_fun(reg: RegimeSpec | None) -> Callable:
    if reg is None:
        return lambda n: np.asarray(n, dtype=float)
    return reg.a


def _is_open(A: TargetSet, closed: bool | None) -> bool:
    return not (A.closed if closed is None else closed)


def longest_strange_segment_exact(path, A: TargetSet, reg: RegimeSpec | None = None, *, closed: bool | None = None, cap: int = EXACT_CAP):
    """R_m by scanning window lengths from m downwards.

    ``path`` is a :class:`Path` or a sequence of increments. Returns
    ``(R_m, Witness)`` with the smallest qualifying end point, or
    ``(0, None)``.
    """
    S = _sums(path)
    m = S.shape[0] - 1
    if m > cap:
        raise InvalidParameter(f"exact scan is capped at m = {cap}; got {m}")
    a = _a_fun(reg)
    strict = _is_open(A, closed)
    thr = A.threshold
    proj = A.project(S) if S.ndim > 1 else A.direction[0] * S
    for n in range(m, 0, -1):
        inc = (proj[n:] - proj[:-n]) / float(a(n))
        hit = inc > thr if strict else inc >= thr
        if hit.any():
            l = int(np.argmax(hit)) + n
            return n, Witness(l, n)
    return 0, None


def _linear_threshold(A: TargetSet, reg: RegimeSpec | None) -> float:
    """y with the window condition equivalent to mean increment > y."""
    if A.dim != 1:
        raise UnsupportedSet("the fast algorithm needs a one-dimensional half-line")
    v = A.direction[0]
    if v <= 0:
        raise UnsupportedSet("the fast algorithm needs a set of the form (y, inf)")
    scale = 1.0
    if reg is not None:
        if reg.uses_product_sequence or reg.omega != 1.0:
            raise UnsupportedSet("the fast algorithm needs a_n proportional to n")
        scale = reg.a_scale
    return A.threshold * scale / v


def _start_points(S: np.ndarray, y: float, strict: bool):
    """Earliest k with S~_k below (or at) S~_l, for every l = 0..m."""
    St = S - y * np.arange(S.size)
    M = np.minimum.accumulate(St)
    side = "right" if strict else "left"
    k = np.searchsorted(-M, -St, side=side)
    return St, M, k


def longest_segment_profile(path, A: TargetSet, reg: RegimeSpec | None = None, *, closed: bool | None = None):
    """R_l for every prefix length l = 0..m, plus the maximising window ends."""
    S = _sums(path)
    if S.ndim != 1:
        raise UnsupportedSet("the fast algorithm needs one-dimensional paths")
    y = _linear_threshold(A, reg)
    _, _, k = _start_points(S, y, _is_open(A, closed))
    lengths = np.maximum(np.arange(S.size) - k, 0)
    return np.maximum.accumulate(lengths), lengths


def longest_strange_segment_fast(path, A: TargetSet, reg: RegimeSpec | None = None, *, closed: bool | None = None):
    """R_m in O(m log m) for a half-line and linear normalisation."""
    R, lengths = longest_segment_profile(path, A, reg, closed=closed)
    r = int(R[-1])
    if r == 0:
        return 0, None
    l = int(np.argmax(lengths == r))
    return r, Witness(l, r)


def first_hitting_T(source, A: TargetSet, reg: RegimeSpec | None = None, r: int = 1, *, cap: int | None = None, closed: bool | None = None) -> int:
    """T_r: the first l with a qualifying window of length at least r.

    ``source`` is either a fixed path (the budget is its length) or a
    callable ``n -> Path`` returning the first n steps of one stream; it is
    extended by doubling until the budget ``cap`` is reached.
    """
    if r < 1:
        raise InvalidParameter("r must be at least 1")
    strict = _is_open(A, closed)
    if callable(source) and not isinstance(source, Path):
        if cap is None:
            raise InvalidParameter("a stream needs a budget cap")
        n = max(2 * r, 64)
        while True:
            n = min(n, cap)
            t = _hitting_on(_sums(source(n)), A, reg, r, strict)
            if t is not None:
                return t
            if n >= cap:
                raise NotFoundWithinBudget(f"no window of length >= {r} within {cap} steps", cap)
            n *= 2
    S = _sums(source)
    budget = S.shape[0] - 1 if cap is None else min(cap, S.shape[0] - 1)
    t = _hitting_on(S[: budget + 1], A, reg, r, strict)
    if t is None:
        raise NotFoundWithinBudget(f"no window of length >= {r} within {budget} steps", budget)
    return t


def _hitting_on(S: np.ndarray, A: TargetSet, reg, r: int, strict: bool) -> int | None:
    m = S.shape[0] - 1
    if r > m:
        return None
    try:
        y = _linear_threshold(A, reg) if S.ndim == 1 else None
    except UnsupportedSet:
        y = None
    if y is not None:
        # some k <= l - r has S~_k below S~_l iff the prefix minimum at l - r is
        St = S - y * np.arange(S.size)
        M = np.minimum.accumulate(St)
        cond = M[: m + 1 - r] < St[r:] if strict else M[: m + 1 - r] <= St[r:]
        if not cond.any():
            return None
        return int(np.argmax(cond)) + r
    a = _a_fun(reg)
    proj = A.project(S) if S.ndim > 1 else A.direction[0] * S
    thr = A.threshold
    an = np.asarray(a(np.arange(1, m + 1)), dtype=float)
    for l in range(r, m + 1):
        n = np.arange(r, l + 1)
        inc = (proj[l] - proj[l - n]) / an[n - 1]
        if (inc > thr).any() if strict else (inc >= thr).any():
            return l
    return None


@dataclass(frozen=True)
class GrowthTable:
    """Per-m summary of b_{R_m} / log m across paths, with per-path rows."""

    m: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_paths: int
    rows: list = field(default_factory=list)

    def as_records(self):
        return [
            {"m": int(m), "mean": float(a), "std": float(s), "n_paths": self.n_paths}
            for m, a, s in zip(self.m, self.mean, self.std)
        ]


def _b_fun(reg: RegimeSpec | None) -> Callable:
    if reg is None:
        return lambda n: np.asarray(n, dtype=float)
    return reg.b


def growth_statistic(paths, A: TargetSet, reg: RegimeSpec | None = None, m_grid=None, *, closed: bool | None = None) -> GrowthTable:
    """b_{R_m} / log m on a grid of m for each path, then mean and spread."""
    paths = list(paths)
    if len(paths) < 2:
        raise InvalidParameter("growth statistics need at least two paths")
    m_max = min(_sums(p).shape[0] - 1 for p in paths)
    if m_grid is None:
        m_grid = np.unique(np.geomspace(10, m_max, 13).astype(int))
    m_grid = np.asarray([int(m) for m in m_grid if 2 <= m <= m_max])
    b = _b_fun(reg)
    stats = np.zeros((len(paths), m_grid.size))
    rows = []
    for j, p in enumerate(paths):
        S = _sums(p)
        try:
            R, _ = longest_segment_profile(p, A, reg, closed=closed)
            Rm = R[m_grid]
        except UnsupportedSet:
            x = np.diff(S, axis=0)
            Rm = np.array([longest_strange_segment_exact(x[:m], A, reg, closed=closed)[0] for m in m_grid])
        bR = np.where(Rm > 0, np.asarray(b(np.maximum(Rm, 1)), dtype=float), 0.0)
        stats[j] = bR / np.log(m_grid)
        pid = p.path_index if isinstance(p, Path) else j
        for m, r, br, st in zip(m_grid, Rm, bR, stats[j]):
            rows.append({"m": int(m), "path_id": int(pid), "R_m": int(r), "b_R": float(br), "statistic": float(st)})
    return GrowthTable(m_grid, stats.mean(axis=0), stats.std(axis=0, ddof=1), len(paths), rows)
