"""Brownian last-passage percolation on a line ensemble.

A path from ``(x, m)`` to ``(y, n)`` with ``x <= y`` and ``m >= n`` walks
right along line ``m``, drops to line ``m-1`` at some grid point, and so
on until it reaches ``(y, n)``.  Its weight is the sum over visited
lines of ``line_j(exit_j) - line_j(enter_j)``.  Values are computed by a
prefix-max sweep (see :mod:`kpzlab._kernels`), one pass per line.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import LabError
from .grid import LineEnsemble

MAX_BRUTE_FORCE_PATHS = 10**6


@dataclass(frozen=True)
class LppEndpoint:
    space_index: int
    line: int


@dataclass(frozen=True)
class GeodesicPath:
    """Jump indices listed from the start line downwards.

    ``jump_indices[i]`` is where the path leaves line ``start.line - i``.
    """

    start: LppEndpoint
    end: LppEndpoint
    jump_indices: tuple[int, ...]

    def value_on(self, ensemble: LineEnsemble) -> float:
        return path_value(ensemble, self.start, self.end, self.jump_indices)


@dataclass(frozen=True)
class LppValue:
    value: float
    path: GeodesicPath | None = None


def _check(ensemble: LineEnsemble, start: LppEndpoint, end: LppEndpoint) -> None:
    n = ensemble.grid.count
    for e in (start, end):
        if not 1 <= e.line <= ensemble.k:
            raise LabError("LINE_OUT_OF_RANGE", f"line {e.line} not in 1..{ensemble.k}")
        if not 0 <= e.space_index < n:
            raise LabError("INDEX_OUT_OF_RANGE", f"index {e.space_index} not in 0..{n - 1}")
    if start.space_index > end.space_index or start.line < end.line:
        raise LabError("BAD_ORDER", f"{start} -> {end}")


def _block(ensemble: LineEnsemble, start_line: int, end_line: int) -> np.ndarray:
    # row 0 = end line, last row = start line
    return ensemble.lines[end_line - 1:start_line]


def path_value(ensemble: LineEnsemble, start: LppEndpoint, end: LppEndpoint,
               jumps) -> float:
    """Weight of the path with the given jump indices."""
    jumps = tuple(int(j) for j in jumps)
    if len(jumps) != start.line - end.line:
        raise LabError("BAD_PATH", "need one jump per line change")
    enter = start.space_index
    total = 0.0
    for i, exit_ in enumerate(jumps + (end.space_index,)):
        if exit_ < enter:
            raise LabError("BAD_PATH", "jump indices must be nondecreasing")
        row = ensemble.lines[start.line - i - 1]
        total += row[exit_] - row[enter]
        enter = exit_
    return float(total)


def last_passage(ensemble: LineEnsemble, start: LppEndpoint, end: LppEndpoint,
                 with_path: bool = False) -> LppValue:
    """Last-passage value between two endpoints, optionally with its geodesic."""
    _check(ensemble, start, end)
    if with_path:
        path = geodesic(ensemble, start, end)
        v, _ = _pointer_sweep(ensemble, start, end)
        return LppValue(float(v), path)
    s, e = start.space_index, end.space_index
    block = _block(ensemble, start.line, end.line)[:, s:e + 1]
    w = np.full(e - s + 1, -np.inf)
    w[0] = 0.0
    return LppValue(float(K.sweep(block, w)[-1]))


def last_passage_profile(ensemble: LineEnsemble, start: LppEndpoint, end_line: int) -> np.ndarray:
    """Values ``last_passage(start, (j, end_line))`` for every grid index ``j``.

    Entries with ``j < start.space_index`` have no admissible path and are ``-inf``.
    """
    _check(ensemble, start, LppEndpoint(ensemble.grid.count - 1, end_line))
    return last_passage_profiles(ensemble, [start.space_index], start.line, end_line)[0]


def last_passage_profiles(ensemble: LineEnsemble, starts, start_line: int,
                          end_line: int) -> np.ndarray:
    """Matrix of profiles, one row per start index on ``start_line``."""
    starts = np.asarray(starts, dtype=np.int64)
    for s in starts:
        _check(ensemble, LppEndpoint(int(s), start_line),
               LppEndpoint(ensemble.grid.count - 1, end_line))
    return K.sweep_many(_block(ensemble, start_line, end_line), starts)


def last_passage_to(ensemble: LineEnsemble, end: LppEndpoint, start_line: int) -> np.ndarray:
    """Values ``last_passage((q, start_line), end)`` for every grid index ``q``.

    Computed with one sweep on the space- and line-reversed, negated
    ensemble, which maps paths into ``end`` onto paths out of a point.
    """
    _check(ensemble, LppEndpoint(0, start_line), end)
    e = end.space_index
    sub = _block(ensemble, start_line, end.line)[:, :e + 1]
    rev = -sub[::-1, ::-1]
    w = np.full(e + 1, -np.inf)
    w[0] = 0.0
    out = np.full(ensemble.grid.count, -np.inf)
    out[:e + 1] = K.sweep(rev, w)[::-1]
    return out


def sweep_weights(ensemble: LineEnsemble, weights: np.ndarray, start_line: int,
                  end_line: int, track_origin: bool = False):
    """Sweep arbitrary start weights on ``start_line`` down to ``end_line``.

    Returns ``V(p) = max_q (weights[q] + last_passage((q, start_line), (p, end_line)))``
    and, if requested, the rightmost maximizing ``q`` per ``p`` (-1 if none).
    """
    _check(ensemble, LppEndpoint(0, start_line), LppEndpoint(ensemble.grid.count - 1, end_line))
    block = _block(ensemble, start_line, end_line)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (ensemble.grid.count,):
        raise LabError("LENGTH_MISMATCH", "one weight per grid point")
    if not track_origin:
        return K.sweep(block, w)
    origin = np.where(np.isfinite(w), np.arange(w.size), -1)
    return K.sweep_argmax(block, w, origin)


def _pointer_sweep(ensemble, start, end):
    s, e = start.space_index, end.space_index
    block = _block(ensemble, start.line, end.line)[:, s:e + 1]
    w = np.full(e - s + 1, -np.inf)
    w[0] = 0.0
    v, ptr = K.sweep_pointers(block, w)
    return v[-1], ptr


def geodesic(ensemble: LineEnsemble, start: LppEndpoint, end: LppEndpoint) -> GeodesicPath:
    """Rightmost maximizing path: each backtracking step takes the largest entry point."""
    _check(ensemble, start, end)
    _, ptr = _pointer_sweep(ensemble, start, end)
    s = start.space_index
    p = end.space_index - s
    jumps = []
    for r in range(ptr.shape[0] - 1):
        p = int(ptr[r, p])
        jumps.append(p + s)
    return GeodesicPath(start, end, tuple(reversed(jumps)))


def brute_force_last_passage(ensemble: LineEnsemble, start: LppEndpoint,
                             end: LppEndpoint) -> float:
    """Exhaustive maximum over all nondecreasing jump tuples (testing oracle)."""
    _check(ensemble, start, end)
    d = start.line - end.line
    s, e = start.space_index, end.space_index
    width = e - s + 1
    if math.comb(width + d - 1, d) > MAX_BRUTE_FORCE_PATHS:
        raise LabError("INSTANCE_TOO_LARGE", f"{width} points, {d} jumps")
    if d == 0:
        row = ensemble.line(start.line)
        return float(row[e] - row[s])
    combos = np.array(list(itertools.combinations_with_replacement(range(s, e + 1), d)),
                      dtype=np.int64)
    m = combos.shape[0]
    enter = np.concatenate([np.full((m, 1), s), combos], axis=1)
    exit_ = np.concatenate([combos, np.full((m, 1), e)], axis=1)
    total = np.zeros(m)
    for i in range(d + 1):
        row = ensemble.lines[start.line - i - 1]
        total += row[exit_[:, i]] - row[enter[:, i]]
    return float(total.max())


def composition_identity_gap(ensemble: LineEnsemble, start: LppEndpoint, end: LppEndpoint,
                             mid_line: int) -> float:
    """``|LP(start, end) - max_z [LP(start, (z, mid)) + LP((z, mid), end)]|``."""
    _check(ensemble, start, end)
    if not end.line <= mid_line <= start.line:
        raise LabError("BAD_ORDER", f"mid line {mid_line} outside [{end.line}, {start.line}]")
    whole = last_passage(ensemble, start, end).value
    first = last_passage_profile(ensemble, start, mid_line)
    second = last_passage_to(ensemble, end, mid_line)
    s, e = start.space_index, end.space_index
    best = np.max(first[s:e + 1] + second[s:e + 1])
    return float(abs(whole - best))
