"""Max-plus sweep kernels with a numba backend and a pure-numpy fallback.

All kernels act on a ``block`` of line values of shape ``(L, N)`` whose
row 0 is the *end* line and row ``L-1`` the *start* line.  A sweep runs
from the last row to row 0 applying

    V_r(p) = row_r(p) + max_{q <= p} (V_{r+1}(q) - row_r(q)),

with ``V_L`` given by the start weights ``w`` (``-inf`` where no path
may start).

Backend selection: ``KPZLAB_BACKEND=numpy`` forces the fallback,
``KPZLAB_BACKEND=numba`` requires numba; unset picks numba when it
imports.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

NEG_INF = -np.inf


# ---------------------------------------------------------------- numpy path

def _np_sweep(block: np.ndarray, w: np.ndarray) -> np.ndarray:
    v = np.array(w, dtype=np.float64, copy=True)
    for r in range(block.shape[0] - 1, -1, -1):
        row = block[r]
        c = v - row
        np.maximum.accumulate(c, out=c)
        v = row + c
    return v


def _np_sweep_argmax(block, w, origin):
    """Sweep that also carries the lexicographically largest (value, origin)."""
    v = np.array(w, dtype=np.float64, copy=True)
    o = np.array(origin, dtype=np.int64, copy=True)
    n = v.shape[0]
    base = np.int64(n + 2)
    for r in range(block.shape[0] - 1, -1, -1):
        row = block[r]
        c = v - row
        m = np.maximum.accumulate(c)
        # plateau id of the running max; ties with the running max are "marked"
        pid = np.zeros(n, dtype=np.int64)
        np.cumsum(m[1:] > m[:-1], out=pid[1:])
        key = pid * base + np.where(c == m, o + 1, 0)
        np.maximum.accumulate(key, out=key)
        o = key - pid * base - 1
        v = row + m
    return v, o


def _np_sweep_pointers(block, w):
    """Sweep recording, per row and position, the rightmost entry point."""
    v = np.array(w, dtype=np.float64, copy=True)
    L, n = block.shape
    ptr = np.empty((L, n), dtype=np.int64)
    idx = np.arange(n, dtype=np.int64)
    for r in range(L - 1, -1, -1):
        row = block[r]
        c = v - row
        m = np.maximum.accumulate(c)
        q = np.where(c == m, idx, -1)
        np.maximum.accumulate(q, out=q)
        ptr[r] = q
        v = row + m
    return v, ptr


def _np_sweep_many(block, starts):
    n = block.shape[1]
    out = np.full((len(starts), n), NEG_INF)
    for i, s in enumerate(starts):
        w = np.full(n - s, NEG_INF)
        w[0] = 0.0
        out[i, s:] = _np_sweep(block[:, s:], w)
    return out


numpy_impl = SimpleNamespace(
    name="numpy",
    sweep=_np_sweep,
    sweep_argmax=_np_sweep_argmax,
    sweep_pointers=_np_sweep_pointers,
    sweep_many=_np_sweep_many,
)


# ---------------------------------------------------------------- numba path

_want = os.environ.get("KPZLAB_BACKEND", "").strip().lower()
if _want not in ("", "numba", "numpy"):
    raise RuntimeError(f"KPZLAB_BACKEND must be 'numba' or 'numpy', got {_want!r}")

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    if _want == "numba":
        raise
    njit = None

if njit is not None:

    @njit(cache=True, nogil=True)
    def _nb_sweep(block, w):
        L, n = block.shape
        v = w.copy()
        for r in range(L - 1, -1, -1):
            m = -np.inf
            for p in range(n):
                x = block[r, p]
                c = v[p] - x
                if c > m:
                    m = c
                v[p] = x + m
        return v

    @njit(cache=True, nogil=True)
    def _nb_sweep_argmax(block, w, origin):
        L, n = block.shape
        v = w.copy()
        o = origin.copy()
        for r in range(L - 1, -1, -1):
            m = -np.inf
            mo = np.int64(-1)
            for p in range(n):
                x = block[r, p]
                c = v[p] - x
                if c > m or (c == m and o[p] > mo):
                    m = c
                    mo = o[p]
                v[p] = x + m
                o[p] = mo
        return v, o

    @njit(cache=True, nogil=True)
    def _nb_sweep_pointers(block, w):
        L, n = block.shape
        v = w.copy()
        ptr = np.empty((L, n), dtype=np.int64)
        for r in range(L - 1, -1, -1):
            m = -np.inf
            q = np.int64(-1)
            for p in range(n):
                x = block[r, p]
                c = v[p] - x
                if c >= m:
                    m = c
                    q = p
                v[p] = x + m
                ptr[r, p] = q
        return v, ptr

    @njit(cache=True, nogil=True)
    def _nb_sweep_many(block, starts):
        L, n = block.shape
        out = np.full((starts.shape[0], n), -np.inf)
        v = np.empty(n)
        for i in range(starts.shape[0]):
            s = starts[i]
            for p in range(s, n):
                v[p] = -np.inf
            v[s] = 0.0
            for r in range(L - 1, -1, -1):
                m = -np.inf
                for p in range(s, n):
                    x = block[r, p]
                    c = v[p] - x
                    if c > m:
                        m = c
                    v[p] = x + m
            for p in range(s, n):
                out[i, p] = v[p]
        return out

    numba_impl = SimpleNamespace(
        name="numba",
        sweep=_nb_sweep,
        sweep_argmax=_nb_sweep_argmax,
        sweep_pointers=_nb_sweep_pointers,
        sweep_many=_nb_sweep_many,
    )
else:  # pragma: no cover
    numba_impl = None

_active = numpy_impl if (_want == "numpy" or numba_impl is None) else numba_impl
BACKEND: str = _active.name


def sweep(block: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Final-row values of a max-plus sweep started from weights ``w``."""
    return _active.sweep(_c(block), _c(w))


def sweep_argmax(block, w, origin):
    """Like :func:`sweep` but also returns the start index of the rightmost optimum."""
    return _active.sweep_argmax(_c(block), _c(w), np.ascontiguousarray(origin, dtype=np.int64))


def sweep_pointers(block, w):
    """Values plus per-row entry pointers for geodesic backtracking."""
    return _active.sweep_pointers(_c(block), _c(w))


def sweep_many(block, starts):
    """Profiles from several single-point starts on the start row."""
    return _active.sweep_many(_c(block), np.ascontiguousarray(starts, dtype=np.int64))


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)
