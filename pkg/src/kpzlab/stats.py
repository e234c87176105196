"""Estimators and test statistics.

All estimators return small frozen records with a ``to_record`` method
producing the JSON shape ``{name, value, stderr, n}`` used in reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import LabError
from .grid import Grid, GridFunction, RngKey


@dataclass(frozen=True)
class Estimate:
    name: str
    value: float
    stderr: float | None
    n: int

    def to_record(self) -> dict:
        return {"name": self.name, "value": _clean(self.value),
                "stderr": _clean(self.stderr), "n": int(self.n)}


def _clean(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass(frozen=True, eq=False)
class SampleSet:
    values: np.ndarray
    label: str = ""
    seed_record: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64, copy=True).ravel()
        if v.size == 0:
            raise LabError("EMPTY_SAMPLE", self.label)
        if not np.isfinite(v).all():
            raise LabError("NON_FINITE_VALUE", f"sample {self.label!r} has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def _values(a) -> np.ndarray:
    if isinstance(a, SampleSet):
        return a.values
    v = np.asarray(a, dtype=np.float64).ravel()
    if v.size == 0:
        raise LabError("EMPTY_SAMPLE", "")
    return v


def ks_two_sample(a, b) -> float:
    """Sup distance between the two empirical CDFs."""
    x, y = np.sort(_values(a)), np.sort(_values(b))
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / x.size
    fy = np.searchsorted(y, pts, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def ks_gaussian(a, mean: float, variance: float) -> float:
    """Sup distance between the empirical CDF and N(mean, variance)."""
    if not variance > 0:
        raise LabError("BAD_VARIANCE", f"variance={variance!r}")
    x = np.sort(_values(a))
    n = x.size
    F = ndtr((x - mean) / math.sqrt(variance))
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _window_indices(grid: Grid, window) -> np.ndarray:
    lo, hi = window
    tol = 0.5 * grid.step
    if lo < grid.origin - tol or hi > grid.last + tol or lo > hi:
        raise LabError("WINDOW_OUT_OF_GRID", f"[{lo}, {hi}] vs [{grid.origin}, {grid.last}]")
    pts = grid.points
    eps = 1e-9 * grid.step
    return np.nonzero((pts >= lo - eps) & (pts <= hi + eps))[0]


def _window(window, a) -> tuple[float, float]:
    if window is None:
        if a is None:
            raise LabError("WINDOW_OUT_OF_GRID", "give a window or a half-width a")
        return (-float(a), float(a))
    return (float(window[0]), float(window[1]))


def holder_seminorm(f: GridFunction, beta: float, window=None, *, a: float | None = None) -> float:
    """``max |f(x) - f(y)| / |x - y|^beta`` over grid pairs in the window."""
    if not 0.0 <= beta <= 1.0:
        raise LabError("BAD_EXPONENT", f"beta={beta!r}")
    idx = _window_indices(f.grid, _window(window, a))
    v = f.values[idx]
    if not np.isfinite(v).all():
        raise LabError("NON_FINITE_VALUE", "Hölder seminorm needs finite values")
    x = f.grid.points[idx]
    best = 0.0
    for i in range(len(idx) - 1):
        d = np.abs(v[i + 1:] - v[i]) / np.abs(x[i + 1:] - x[i]) ** beta
        best = max(best, float(d.max()))
    return best


def holder_seminorm_2d(values: np.ndarray, grid1: Grid, grid2: Grid, beta: float,
                       window=None, *, a: float | None = None) -> float:
    """Two-dimensional version with the sup-norm distance between grid points."""
    if not 0.0 <= beta <= 1.0:
        raise LabError("BAD_EXPONENT", f"beta={beta!r}")
    w = _window(window, a)
    i1, i2 = _window_indices(grid1, w), _window_indices(grid2, w)
    sub = np.asarray(values)[np.ix_(i1, i2)]
    if not np.isfinite(sub).all():
        raise LabError("NON_FINITE_VALUE", "Hölder seminorm needs finite values")
    p1, p2 = np.meshgrid(grid1.points[i1], grid2.points[i2], indexing="ij")
    p1, p2, v = p1.ravel(), p2.ravel(), sub.ravel()
    best = 0.0
    for i in range(v.size - 1):
        dist = np.maximum(np.abs(p1[i + 1:] - p1[i]), np.abs(p2[i + 1:] - p2[i]))
        best = max(best, float((np.abs(v[i + 1:] - v[i]) / dist ** beta).max()))
    return best


def modulus_of_continuity(f: GridFunction, delta: float, window=None, *,
                          a: float | None = None) -> float:
    """``max |f(x) - f(y)|`` over grid pairs in the window with ``|x - y| <= delta``."""
    if not delta > 0:
        raise LabError("BAD_DELTA", f"delta={delta!r}")
    idx = _window_indices(f.grid, _window(window, a))
    v = f.values[idx]
    lag = int(math.floor(delta / f.grid.step + 1e-9))
    best = 0.0
    for k in range(1, min(lag, len(idx) - 1) + 1):
        best = max(best, float(np.max(np.abs(v[k:] - v[:-k]))))
    return best


@dataclass(frozen=True)
class VarianceProfile:
    offsets: np.ndarray
    variance: np.ndarray
    stderr: np.ndarray
    n: int

    def records(self, name: str) -> list[dict]:
        return [Estimate(f"{name}[x={x:g}]", v, s, self.n).to_record()
                for x, v, s in zip(self.offsets, self.variance, self.stderr)]


def jackknife_variance(x: np.ndarray) -> tuple[float, float]:
    """Unbiased variance and its jackknife standard error."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    c = x - x.mean()
    s1, s2 = c.sum(), (c * c).sum()
    var = s2 / (n - 1)
    loo = (s2 - c * c - (s1 - c) ** 2 / (n - 1)) / (n - 2)
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return float(var), float(se)


def increment_variance_profile(samples, offsets: Sequence[float]) -> VarianceProfile:
    """Per-offset variance of increment samples (rows: replications, columns: offsets)."""
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim == 1:
        s = s[:, None]
    if s.shape[1] != len(offsets):
        raise LabError("LENGTH_MISMATCH", "one column per offset")
    if s.shape[0] < 30:
        raise LabError("TOO_FEW_REPLICATIONS", f"{s.shape[0]} < 30")
    out = [jackknife_variance(s[:, j]) for j in range(s.shape[1])]
    return VarianceProfile(np.asarray(offsets, dtype=np.float64),
                           np.array([o[0] for o in out]), np.array([o[1] for o in out]),
                           s.shape[0])


@dataclass(frozen=True, eq=False)
class MCurve:
    """Estimated ``m(a) = E max_z (f(z) + a z)`` on a symmetric a-grid."""

    a_values: np.ndarray
    m_hat: np.ndarray
    stderr: np.ndarray
    ez_hat: float
    ez_stderr: float
    replications: int
    per_rep: np.ndarray = field(repr=False)
    z_rep: np.ndarray = field(repr=False)

    def _pair(self, a: float):
        i = int(np.argmin(np.abs(self.a_values - a)))
        j = int(np.argmin(np.abs(self.a_values + a)))
        return i, j

    def central_slope(self, a: float) -> tuple[float, float]:
        """``(m(a) - m(-a)) / 2a`` with a common-random-numbers standard error."""
        i, j = self._pair(a)
        d = (self.per_rep[:, i] - self.per_rep[:, j]) / (2 * a)
        se = d.std(ddof=1) / math.sqrt(d.size) if d.size > 1 else 0.0
        return float(d.mean()), float(se)

    def one_sided_slopes(self, a: float) -> tuple[float, float]:
        """Left and right difference quotients at 0 using ``-a`` and ``+a``."""
        i, j = self._pair(a)
        k = int(np.argmin(np.abs(self.a_values)))
        m = self.m_hat
        return float((m[k] - m[j]) / a), float((m[i] - m[k]) / a)

    @property
    def smallest_a(self) -> float:
        pos = self.a_values[self.a_values > 0]
        return float(pos.min())

    def convexity_margins(self) -> np.ndarray:
        """Second divided differences of ``m_hat`` in units of their standard error."""
        a = self.a_values
        out = []
        for i in range(1, a.size - 1):
            lam = (a[i + 1] - a[i]) / (a[i + 1] - a[i - 1])
            d = lam * self.per_rep[:, i - 1] + (1 - lam) * self.per_rep[:, i + 1] - self.per_rep[:, i]
            se = d.std(ddof=1) / math.sqrt(d.size)
            out.append(d.mean() / se if se > 0 else (0.0 if d.mean() >= -1e-12 else -np.inf))
        return np.array(out)

    def convex(self, k: float = 3.0) -> bool:
        return bool((self.convexity_margins() >= -k).all())

    def records(self) -> list[dict]:
        r = [Estimate(f"m_hat[a={a:g}]", m, s, self.replications).to_record()
             for a, m, s in zip(self.a_values, self.m_hat, self.stderr)]
        r.append(Estimate("ez_hat", self.ez_hat, self.ez_stderr, self.replications).to_record())
        for a in self.a_values[self.a_values > 0]:
            v, s = self.central_slope(float(a))
            r.append(Estimate(f"central_slope[a={a:g}]", v, s, self.replications).to_record())
        return r


def _check_a_grid(a_values) -> np.ndarray:
    a = np.sort(np.asarray(a_values, dtype=np.float64))
    if a.size < 3 or not np.any(a == 0.0) or not np.allclose(a, -a[::-1], atol=1e-12):
        raise LabError("BAD_A_GRID", "a-grid must contain 0 and be symmetric about it")
    return a


def m_curve_from_samples(z: np.ndarray, fs: Iterable[np.ndarray], a_values) -> MCurve:
    """``m`` curve from explicit sample paths ``f`` on the common points ``z``."""
    a = _check_a_grid(a_values)
    z = np.asarray(z, dtype=np.float64)
    rows, zs = [], []
    for f in fs:
        rows.append(_max_affine(z, np.asarray(f, dtype=np.float64), a))
        zs.append(_rightmost_argmax(z, f))
    return _finish(a, np.array(rows), np.array(zs))


def _max_affine(z, f, a):
    return np.max(f[None, :] + a[:, None] * z[None, :], axis=1)


def _rightmost_argmax(z, f):
    f = np.asarray(f)
    return float(z[f.size - 1 - int(np.argmax(f[::-1]))])


def _finish(a, per_rep, zs) -> MCurve:
    r = per_rep.shape[0]
    se = per_rep.std(axis=0, ddof=1) / math.sqrt(r) if r > 1 else np.zeros(a.size)
    ez_se = float(zs.std(ddof=1) / math.sqrt(r)) if r > 1 else 0.0
    return MCurve(a, per_rep.mean(axis=0), se, float(zs.mean()), ez_se, r, per_rep, zs)


def m_curve(sampler: Callable[[RngKey], tuple[np.ndarray, np.ndarray]], a_values,
            replications: int, key: RngKey, mapper: Callable = map) -> MCurve:
    """Monte Carlo ``m`` curve.

    Parameters
    ----------
    sampler : callable
        ``sampler(key) -> (z_points, f_values)``; replication ``i`` gets
        ``key`` with ``stream_id = i``.
    mapper : callable
        ``map``-like function used to run replications (results are kept
        in replication order).
    """
    a = _check_a_grid(a_values)
    if replications < 100:
        raise LabError("TOO_FEW_REPLICATIONS", f"{replications} < 100")

    def one(i):
        z, f = sampler(RngKey(key.master_seed, i, key.substream_id, key.path))
        f = np.asarray(f, dtype=np.float64)
        return _max_affine(np.asarray(z), f, a), _rightmost_argmax(np.asarray(z), f)

    res = list(mapper(one, range(replications)))
    return _finish(a, np.array([r[0] for r in res]), np.array([r[1] for r in res]))


def mean_estimate(name: str, x) -> Estimate:
    x = np.asarray(x, dtype=np.float64)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else None
    return Estimate(name, float(x.mean()), se, int(x.size))


def proportion_estimate(name: str, flags) -> Estimate:
    f = np.asarray(flags, dtype=np.float64)
    p = float(f.mean())
    return Estimate(name, p, math.sqrt(p * (1 - p) / f.size), int(f.size))


def correlation(x, y) -> float:
    return float(np.corrcoef(np.asarray(x, float), np.asarray(y, float))[0, 1])
